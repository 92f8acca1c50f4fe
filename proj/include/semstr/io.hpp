#pragma once

// JSON views of the library types. External indices (variables, clauses) are
// 1-based here, matching DIMACS and group files; group ids are emitted as-is.

#include <fstream>
#include <json.hpp>

#include "semstr/train.hpp"

namespace semstr::io {

using json = nlohmann::json;

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  return detail::slurp(in);
}

inline void write_file(const std::string& path, std::string_view contents) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << contents;
}

/// A JSON array of probabilities; entry k belongs to variable k+1.
inline ProbVector parse_prob_vector(const json& j, std::size_t num_vars) {
  if (!j.is_array()) throw std::invalid_argument("probability vector must be a JSON array");
  ProbVector p = j.get<ProbVector>();
  if (p.size() != num_vars)
    throw std::invalid_argument("probability vector has " + std::to_string(p.size()) + " entries, expected " +
                                std::to_string(num_vars));
  for (double x : p)
    if (!(x >= 0.0 && x <= 1.0)) throw std::invalid_argument("probability outside [0, 1]");
  return p;
}

/// One JSON array per non-blank line.
inline std::vector<ProbVector> parse_prob_batch(std::string_view text, std::size_t num_vars) {
  std::vector<ProbVector> batch;
  for (auto line : semstr::detail::split_lines(text)) {
    if (semstr::detail::split_ws(line).empty()) continue;
    batch.push_back(parse_prob_vector(json::parse(line), num_vars));
  }
  return batch;
}

inline json to_json(const MiEstimate& e) {
  return json{{"i", e.first}, {"j", e.second}, {"mi", e.value}, {"batch_size", e.batch_size}};
}

inline json to_json(const SkippedPair& s) {
  return json{{"i", s.first}, {"j", s.second}, {"reason", s.reason}};
}

inline json to_json(const RoundLog& log) {
  json scored = json::array(), skipped = json::array(), merged = json::array(), abandoned = json::array();
  for (const auto& e : log.ranked.scored) scored.push_back(to_json(e));
  for (const auto& s : log.ranked.skipped) skipped.push_back(to_json(s));
  for (const auto& m : log.merged)
    merged.push_back(json{{"id", m.id}, {"members", m.members}, {"size_before", m.size_before},
                          {"size_after", m.size_after}});
  for (const auto& a : log.abandoned) abandoned.push_back(json{{"members", a.members}, {"reason", a.reason}});
  return json{{"round", log.round},           {"scored_pairs", scored.size()},
              {"top_pairs", [&] {
                 json top = json::array();
                 for (std::size_t k = 0; k < std::min<std::size_t>(scored.size(), 16); ++k) top.push_back(scored[k]);
                 return top;
               }()},
              {"components", log.plan.components}, {"merged", merged},
              {"abandoned", abandoned},        {"skipped", skipped},
              {"groups_before", log.groups_before}, {"groups_after", log.groups_after}};
}

inline json to_json(const Metrics& m) {
  return json{{"exact", m.exact}, {"consistent", m.consistent}, {"label_acc", m.label_acc}};
}

inline json to_json(const EpochRecord& r) {
  json merges = json::array();
  for (const auto& round : r.rounds) merges.push_back(to_json(round));
  return json{{"epoch", r.epoch},
              {"ce", r.ce},
              {"sl", r.sl},
              {"exact", r.metrics.exact},
              {"consistent", r.metrics.consistent},
              {"label_acc", r.metrics.label_acc},
              {"groups", r.num_groups},
              {"circuit_nodes", r.circuit_nodes},
              {"merges", merges}};
}

/// JSON lines, one object per epoch.
inline std::string history_jsonl(const History& h) {
  std::string out;
  for (const auto& r : h.epochs) {
    out += to_json(r).dump();
    out += '\n';
  }
  return out;
}

inline json to_json(const Model& m) {
  return json{{"inputs", m.inputs}, {"hidden", m.hidden}, {"outputs", m.outputs}, {"params", m.params}};
}

inline Model model_from_json(const json& j) {
  Model m{j.at("inputs").get<std::size_t>(), j.at("hidden").get<std::size_t>(),
          j.at("outputs").get<std::size_t>(), j.at("params").get<std::vector<double>>()};
  if (m.params.size() != m.num_params()) throw std::invalid_argument("model: parameter count mismatch");
  return m;
}

inline json to_json(const Instance& inst) {
  return json{{"features", inst.features}, {"target", inst.target}, {"mask", inst.givens}};
}

inline Instance instance_from_json(const json& j) {
  return Instance{j.at("features").get<std::vector<double>>(), j.at("target").get<std::vector<std::uint8_t>>(),
                  j.at("mask").get<std::vector<std::uint8_t>>()};
}

inline std::string dataset_jsonl(const std::vector<Instance>& data) {
  std::string out;
  for (const auto& inst : data) {
    out += to_json(inst).dump();
    out += '\n';
  }
  return out;
}

inline std::vector<Instance> parse_dataset(std::string_view text) {
  std::vector<Instance> data;
  for (auto line : semstr::detail::split_lines(text))
    if (!semstr::detail::split_ws(line).empty()) data.push_back(instance_from_json(json::parse(line)));
  return data;
}

}  // namespace semstr::io
