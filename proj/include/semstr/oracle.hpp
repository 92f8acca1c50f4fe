#pragma once

// Exhaustive ground truth over all 2^n worlds. Independent of the circuit
// code paths except where a circuit is explicitly the thing being enumerated.

#include <cmath>

#include "semstr/circuit.hpp"
#include "semstr/formula.hpp"
#include "semstr/mi.hpp"

namespace semstr::oracle {

inline constexpr std::size_t kMaxVars = 24;

/// Models as worlds in ascending (lexicographic) order.
struct ModelSet {
  std::size_t num_vars = 0;
  std::vector<World> worlds;

  bool operator==(const ModelSet&) const = default;
};

class TooManyVariables : public std::invalid_argument {
 public:
  explicit TooManyVariables(std::size_t n)
      : std::invalid_argument("oracle enumeration limited to " + std::to_string(kMaxVars) +
                              " variables, got " + std::to_string(n)) {}
};

inline void check_size(std::size_t n) {
  if (n > kMaxVars) throw TooManyVariables(n);
}

inline ModelSet enumerate_models(const Cnf& cnf) {
  check_size(cnf.num_vars);
  ModelSet out{cnf.num_vars, {}};
  const World end = World{1} << cnf.num_vars;
  for (World w = 0; w < end; ++w)
    if (cnf.satisfied_by(w)) out.worlds.push_back(w);
  return out;
}

/// Evaluates the circuit on each world by walking its decisions.
inline ModelSet enumerate_models(const NodeStore& store, Handle root, std::size_t num_vars) {
  check_size(num_vars);
  ModelSet out{num_vars, {}};
  const World end = World{1} << num_vars;
  for (World w = 0; w < end; ++w) {
    Handle h = root;
    while (!store.is_terminal(h)) {
      const auto& n = store.node(h);
      h = ((w >> n.var) & 1U) ? n.hi : n.lo;
    }
    if (h == kTrue) out.worlds.push_back(w);
  }
  return out;
}

inline double world_probability(World w, std::span<const double> p, std::size_t num_vars) {
  double mass = 1.0;
  for (std::size_t i = 0; i < num_vars; ++i) mass *= ((w >> i) & 1U) ? p[i] : 1.0 - p[i];
  return mass;
}

inline double exact_probability(const ModelSet& models, std::span<const double> p) {
  double total = 0.0;
  for (World w : models.worlds) total += world_probability(w, p, models.num_vars);
  return total;
}

inline ModelSet intersect(const ModelSet& a, const ModelSet& b) {
  ModelSet out{std::max(a.num_vars, b.num_vars), {}};
  std::set_intersection(a.worlds.begin(), a.worlds.end(), b.worlds.begin(), b.worlds.end(),
                        std::back_inserter(out.worlds));
  return out;
}

/// Joint table of the two satisfaction indicators, built by summing the mass
/// of every world into its (X, Y) cell.
inline JointTable exact_joint(const ModelSet& m1, const ModelSet& m2, std::span<const double> p) {
  const std::size_t n = std::max(m1.num_vars, m2.num_vars);
  check_size(n);
  JointTable t;
  auto i = m1.worlds.begin();
  auto j = m2.worlds.begin();
  const World end = World{1} << n;
  for (World w = 0; w < end; ++w) {
    while (i != m1.worlds.end() && *i < w) ++i;
    while (j != m2.worlds.end() && *j < w) ++j;
    const int x = (i != m1.worlds.end() && *i == w) ? 1 : 0;
    const int y = (j != m2.worlds.end() && *j == w) ? 1 : 0;
    t.q[x][y] += world_probability(w, p, n);
  }
  return t;
}

inline double exact_mi(const ModelSet& m1, const ModelSet& m2, std::span<const double> p) {
  const auto t = exact_joint(m1, m2, p);
  const auto px = t.marginal_x();
  const auto py = t.marginal_y();
  double mi = 0.0;
  for (int x = 0; x < 2; ++x)
    for (int y = 0; y < 2; ++y)
      if (t.q[x][y] > 0.0) mi += t.q[x][y] * std::log(t.q[x][y] / (px[x] * py[y]));
  return std::max(mi, 0.0);
}

/// Restriction of a formula to a subset of its clauses, same variable count.
inline Cnf sub_cnf(const Cnf& cnf, const std::vector<std::size_t>& clause_ids) {
  Cnf out{cnf.num_vars, {}};
  for (auto id : clause_ids) out.clauses.push_back(cnf.clauses.at(id));
  return out;
}

}  // namespace semstr::oracle
