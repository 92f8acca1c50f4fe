// semstr: command-line front end. Every subcommand parses its inputs, calls
// the library and prints one JSON document.

#include <CLI11.hpp>
#include <cstdlib>
#include <filesystem>
#include <iostream>

#include "semstr/semstr.hpp"

namespace fs = std::filesystem;
using semstr::io::json;

namespace {

// Relative output paths land under $SEMSTR_OUT_DIR when it is set.
fs::path output_path(const std::string& path) {
  fs::path p(path);
  if (const char* dir = std::getenv("SEMSTR_OUT_DIR"); dir && *dir && p.is_relative()) p = fs::path(dir) / p;
  return p;
}

void emit(const json& doc, const std::string& out) {
  if (out.empty()) {
    std::cout << doc.dump(2) << '\n';
    return;
  }
  const auto path = output_path(out);
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  semstr::io::write_file(path.string(), doc.dump(2) + "\n");
}

struct Inputs {
  semstr::Cnf cnf;
  std::vector<semstr::ConstraintGroup> groups;
  semstr::NodeStore store;
};

Inputs load(const std::string& cnf_path, const std::string& groups_path, const std::string& order_name,
            std::optional<std::uint64_t> seed) {
  auto cnf = semstr::parse_dimacs(semstr::io::read_file(cnf_path));
  auto groups = semstr::parse_groups(groups_path.empty() ? "" : semstr::io::read_file(groups_path), cnf);
  auto strategy = semstr::parse_order_strategy(order_name);
  if (!strategy) throw std::invalid_argument("unknown order '" + order_name + "'");
  if (*strategy == semstr::OrderStrategy::kSeededRandom && !seed)
    throw std::invalid_argument("--order random requires --seed");
  semstr::NodeStore store(semstr::build_order(cnf, *strategy, seed.value_or(0)));
  return Inputs{std::move(cnf), std::move(groups), std::move(store)};
}

json group_json(const semstr::ConstraintGroup& g, const semstr::NodeStore& store) {
  std::vector<std::size_t> clauses, vars;
  for (auto c : g.clause_ids) clauses.push_back(c + 1);
  for (auto v : g.vars) vars.push_back(v + 1);
  return json{{"id", g.id}, {"clauses", clauses}, {"vars", vars}, {"size", semstr::circuit_size(store, *g.root)}};
}

void fail(const std::string& kind, const std::string& message, int code) {
  std::cerr << json{{"error", kind}, {"message", message}}.dump() << std::endl;
  std::exit(code);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Semantic strengthening over compiled CNF constraints"};
  app.require_subcommand(1);

  std::string cnf_path, groups_path, order = "degree_desc", out, p_path, batch_path, config_path, task;
  std::optional<std::uint64_t> seed;
  std::size_t top = 0, kappa = 1, node_cap = 200000;

  auto add_common = [&](CLI::App* sub, bool need_groups) {
    sub->add_option("--cnf", cnf_path, "DIMACS CNF file")->required()->check(CLI::ExistingFile);
    auto* g = sub->add_option("--groups", groups_path, "group file (one line of 1-based clause indices per group)")
                  ->check(CLI::ExistingFile);
    if (need_groups) g->required();
    sub->add_option("--order", order, "variable order: natural, degree_desc or random");
    sub->add_option("--seed", seed, "seed for --order random");
    sub->add_option("--out", out, "write JSON here instead of stdout");
  };

  auto* compile = app.add_subcommand("compile", "compile each group and report circuit statistics");
  add_common(compile, false);

  auto* prob = app.add_subcommand("prob", "per-group probabilities and their product");
  add_common(prob, false);
  prob->add_option("--p", p_path, "JSON array of probabilities")->required()->check(CLI::ExistingFile);

  auto* mi = app.add_subcommand("mi", "rank variable-sharing group pairs by batch mutual information");
  add_common(mi, true);
  mi->add_option("--p-batch", batch_path, "one JSON probability array per line")->required()->check(CLI::ExistingFile);
  mi->add_option("--top", top, "keep only the K highest pairs (0 keeps all)");

  std::string groups_out;
  auto* strengthen = app.add_subcommand("strengthen", "one round of MI-guided group merging");
  add_common(strengthen, true);
  strengthen->add_option("--p-batch", batch_path, "one JSON probability array per line")
      ->required()
      ->check(CLI::ExistingFile);
  strengthen->add_option("--kappa", kappa, "top pairs to merge")->required()->check(CLI::PositiveNumber);
  strengthen->add_option("--node-cap", node_cap, "node budget per merged circuit")
      ->required()
      ->check(CLI::PositiveNumber);
  strengthen->add_option("--groups-out", groups_out, "write the new group file here");

  auto* oracle = app.add_subcommand("oracle", "model count and exact probability by enumeration");
  oracle->add_option("--cnf", cnf_path, "DIMACS CNF file")->required()->check(CLI::ExistingFile);
  oracle->add_option("--p", p_path, "JSON array of probabilities")->check(CLI::ExistingFile);
  oracle->add_option("--out", out, "write JSON here instead of stdout");

  std::string out_dir;
  auto* train = app.add_subcommand("train", "train on a generated task and save history, metrics and model");
  train->add_option("--task", task, "sudoku4 or matching")->required()->check(CLI::IsMember({"sudoku4", "matching"}));
  train->add_option("--config", config_path, "run configuration JSON")->required()->check(CLI::ExistingFile);
  train->add_option("--seed", seed, "overrides the config seed");
  train->add_option("--out-dir", out_dir, "directory for history.jsonl, model.json and metrics.json");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    fail("usage", e.what(), 2);
  }

  try {
    if (*compile) {
      auto in = load(cnf_path, groups_path, order, seed);
      semstr::compile_groups(in.store, in.cnf, in.groups);
      json groups = json::array();
      bool valid = true;
      std::size_t total = 0;
      for (const auto& g : in.groups) {
        groups.push_back(group_json(g, in.store));
        total += semstr::circuit_size(in.store, *g.root);
        valid = valid && semstr::validate(in.store, *g.root).ok();
      }
      std::vector<std::size_t> seq;
      for (auto v : in.store.order().sequence()) seq.push_back(v + 1);
      emit(json{{"num_vars", in.cnf.num_vars},
                {"num_clauses", in.cnf.clauses.size()},
                {"order", seq},
                {"groups", groups},
                {"total_size", total},
                {"store_nodes", in.store.size()},
                {"valid", valid}},
           out);
    } else if (*prob) {
      auto in = load(cnf_path, groups_path, order, seed);
      semstr::compile_groups(in.store, in.cnf, in.groups);
      const auto p = semstr::io::parse_prob_vector(json::parse(semstr::io::read_file(p_path)), in.cnf.num_vars);
      json probs = json::array();
      double product = 1.0;
      for (const auto& g : in.groups) {
        const double v = semstr::wmc(in.store, *g.root, p);
        probs.push_back(v);
        product *= v;
      }
      emit(json{{"groups", probs},
                {"product", product},
                {"semantic_loss", semstr::semantic_loss(in.groups, in.store, p).loss}},
           out);
    } else if (*mi) {
      auto in = load(cnf_path, groups_path, order, seed);
      semstr::compile_groups(in.store, in.cnf, in.groups);
      const auto batch = semstr::io::parse_prob_batch(semstr::io::read_file(batch_path), in.cnf.num_vars);
      auto ranked = semstr::rank_pairs(in.groups, in.store, batch, node_cap);
      if (top > 0 && ranked.scored.size() > top) ranked.scored.resize(top);
      json pairs = json::array(), skipped = json::array();
      for (const auto& e : ranked.scored) pairs.push_back(semstr::io::to_json(e));
      for (const auto& s : ranked.skipped) skipped.push_back(semstr::io::to_json(s));
      emit(json{{"pairs", pairs}, {"skipped", skipped}}, out);
    } else if (*strengthen) {
      auto in = load(cnf_path, groups_path, order, seed);
      semstr::compile_groups(in.store, in.cnf, in.groups);
      const auto batch = semstr::io::parse_prob_batch(semstr::io::read_file(batch_path), in.cnf.num_vars);
      semstr::StrengthenConfig cfg;
      cfg.kappa = kappa;
      cfg.node_cap = node_cap;
      auto log = semstr::strengthen_round(in.groups, in.cnf, in.store, batch, cfg);
      const auto text = semstr::emit_groups(in.groups);
      if (!groups_out.empty()) {
        const auto path = output_path(groups_out);
        if (path.has_parent_path()) fs::create_directories(path.parent_path());
        semstr::io::write_file(path.string(), text);
      }
      emit(json{{"groups_file", text}, {"log", semstr::io::to_json(log)}}, out);
    } else if (*oracle) {
      auto cnf = semstr::parse_dimacs(semstr::io::read_file(cnf_path));
      const auto models = semstr::oracle::enumerate_models(cnf);
      json doc{{"num_vars", cnf.num_vars}, {"model_count", models.worlds.size()}};
      if (!p_path.empty()) {
        const auto p = semstr::io::parse_prob_vector(json::parse(semstr::io::read_file(p_path)), cnf.num_vars);
        doc["probability"] = semstr::oracle::exact_probability(models, p);
      }
      emit(doc, out);
    } else if (*train) {
      auto cfg_json = json::parse(semstr::io::read_file(config_path));
      if (cfg_json.contains("task") && cfg_json["task"] != task)
        throw std::invalid_argument("config task '" + cfg_json["task"].get<std::string>() + "' contradicts --task");
      cfg_json["task"] = task;
      if (seed) cfg_json["seed"] = *seed;
      const auto cfg = semstr::io::experiment_from_json(cfg_json);
      const auto result = semstr::run_experiment(cfg);

      fs::path dir = output_path(out_dir.empty() ? "." : out_dir);
      fs::create_directories(dir);
      const json metrics{{"config", semstr::io::to_json(cfg)},
                         {"test", semstr::io::to_json(result.test)},
                         {"groups", result.groups.size()},
                         {"epochs", result.history.epochs.size()}};
      semstr::io::write_file((dir / "history.jsonl").string(), semstr::io::history_jsonl(result.history));
      semstr::io::write_file((dir / "model.json").string(), semstr::io::to_json(result.model).dump() + "\n");
      semstr::io::write_file((dir / "metrics.json").string(), metrics.dump(2) + "\n");
      std::cout << metrics.dump(2) << '\n';
    }
  } catch (const semstr::ParseError& e) {
    fail("parse", e.what(), 1);
  } catch (const json::exception& e) {
    fail("json", e.what(), 1);
  } catch (const semstr::oracle::TooManyVariables& e) {
    fail("too_many_variables", e.what(), 1);
  } catch (const std::exception& e) {
    fail("runtime", e.what(), 1);
  }
  return 0;
}
