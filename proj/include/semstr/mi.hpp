#pragma once

#include <array>
#include <cmath>

#include "semstr/compile.hpp"

namespace semstr {

/// Joint distribution of two satisfaction indicators: q[x][y] = P(X=x, Y=y)
/// with X = [first constraint holds], Y = [second constraint holds].
struct JointTable {
  std::array<std::array<double, 2>, 2> q{};

  std::array<double, 2> marginal_x() const { return {q[0][0] + q[0][1], q[1][0] + q[1][1]}; }
  std::array<double, 2> marginal_y() const { return {q[0][0] + q[1][0], q[0][1] + q[1][1]}; }
};

inline constexpr double kJointTolerance = 1e-9;

/// Total-probability completion of the 2x2 table from P(b1), P(b2) and
/// P(b1 AND b2). Rounding negatives are clamped to zero and the table is
/// renormalized; anything beyond kJointTolerance is an InvariantError.
inline JointTable joint_from_probs(double p1, double p2, double p12) {
  auto in_unit = [](double x) { return x >= -kJointTolerance && x <= 1.0 + kJointTolerance; };
  if (!in_unit(p1) || !in_unit(p2) || !in_unit(p12))
    throw InvariantError("joint_from_probs: probability outside [0, 1]");
  if (p12 > std::min(p1, p2) + kJointTolerance || p12 < p1 + p2 - 1.0 - kJointTolerance)
    throw InvariantError("joint_from_probs: P(b1 AND b2) inconsistent with its marginals");

  JointTable t;
  t.q[1][1] = p12;
  t.q[1][0] = p1 - p12;
  t.q[0][1] = p2 - p12;
  t.q[0][0] = 1.0 - p1 - p2 + p12;
  double total = 0.0;
  for (auto& row : t.q)
    for (auto& cell : row) {
      cell = std::max(cell, 0.0);
      total += cell;
    }
  for (auto& row : t.q)
    for (auto& cell : row) cell /= total;
  return t;
}

/// I(X;Y) in nats. Zero cells contribute nothing, and a degenerate marginal
/// makes the indicators independent by definition.
inline double mutual_information(const JointTable& t) {
  const auto px = t.marginal_x();
  const auto py = t.marginal_y();
  if (px[0] <= 0.0 || px[1] <= 0.0 || py[0] <= 0.0 || py[1] <= 0.0) return 0.0;
  double mi = 0.0;
  for (int x = 0; x < 2; ++x)
    for (int y = 0; y < 2; ++y) {
      const double c = t.q[x][y];
      if (c > 0.0) mi += c * std::log(c / (px[x] * py[y]));
    }
  return std::max(mi, 0.0);
}

inline double binary_entropy(double p) {
  if (p <= 0.0 || p >= 1.0) return 0.0;
  return -p * std::log(p) - (1.0 - p) * std::log1p(-p);
}

/// MI between the satisfaction of two circuits under one factorized
/// distribution, given an already-conjoined circuit for their conjunction.
inline double pair_mi(const FlatCircuit& c1, const FlatCircuit& c2, const FlatCircuit& both,
                      std::span<const double> p) {
  return mutual_information(joint_from_probs(c1.probability(p), c2.probability(p), both.probability(p)));
}

/// Conditional MI of two constraint circuits for one input, where the input
/// enters only through the predicted probabilities `p`.
inline double pair_mi(NodeStore& store, Handle c1, Handle c2, std::span<const double> p,
                      std::optional<std::size_t> node_cap = std::nullopt) {
  Handle both = conjoin(store, c1, c2, node_cap);
  return mutual_information(
      joint_from_probs(wmc(store, c1, p), wmc(store, c2, p), wmc(store, both, p)));
}

struct MiEstimate {
  GroupId first = 0;
  GroupId second = 0;
  double value = 0.0;  // nats
  std::size_t batch_size = 0;
};

/// Monte Carlo estimate of the conditional MI: mean of pair_mi over a batch
/// of per-input probability vectors. The conjunction is compiled once.
inline double batch_mi(NodeStore& store, Handle c1, Handle c2, const std::vector<ProbVector>& batch,
                       std::optional<std::size_t> node_cap = std::nullopt) {
  if (batch.empty()) throw std::invalid_argument("batch_mi: empty batch");
  Handle both = conjoin(store, c1, c2, node_cap);
  FlatCircuit f1(store, c1), f2(store, c2), f12(store, both);
  double sum = 0.0;
  for (const auto& p : batch) {
    if (p.size() < store.num_vars()) throw std::invalid_argument("probability vector too short");
    sum += pair_mi(f1, f2, f12, p);
  }
  return sum / static_cast<double>(batch.size());
}

inline MiEstimate batch_mi(NodeStore& store, const ConstraintGroup& g1, const ConstraintGroup& g2,
                           const std::vector<ProbVector>& batch,
                           std::optional<std::size_t> node_cap = std::nullopt) {
  if (!g1.root || !g2.root) throw std::invalid_argument("batch_mi: group not compiled");
  return MiEstimate{g1.id, g2.id, batch_mi(store, *g1.root, *g2.root, batch, node_cap), batch.size()};
}

}  // namespace semstr
