#pragma once

#include <cmath>

#include "semstr/compile.hpp"

namespace semstr {

inline constexpr double kDefaultLossEps = 1e-12;

struct LossResult {
  double loss = 0.0;
  std::vector<double> grad;  // d loss / d p_i
};

/// Accumulates sum_g -log(max(P(g), eps)) over flattened group circuits,
/// adding weight-scaled gradients into `grad`. eps = 0 disables the clamp,
/// letting a violated deterministic prediction produce an infinite loss.
inline double accumulate_semantic_loss(std::span<const FlatCircuit> circuits, std::span<const double> p,
                                       double eps, double weight, std::span<double> grad) {
  double loss = 0.0;
  for (const auto& c : circuits) {
    const double prob = c.probability(p);
    const double clamped = std::max(prob, eps);
    loss -= std::log(clamped);
    // -(dP/dp) / max(P, eps): inside the clamp the loss is flat, but the
    // gradient keeps pointing toward satisfying the group.
    if (weight != 0.0 && clamped > 0.0) c.backward(p, -weight / clamped, grad);
  }
  return loss;
}

inline std::vector<FlatCircuit> flatten_groups(const NodeStore& store,
                                               const std::vector<ConstraintGroup>& groups) {
  std::vector<FlatCircuit> out;
  out.reserve(groups.size());
  for (const auto& g : groups) {
    if (!g.root) throw std::invalid_argument("group " + std::to_string(g.id) + " not compiled");
    out.emplace_back(store, *g.root);
  }
  return out;
}

/// Factorized semantic loss: each group is an independent factor of the
/// constraint probability.
inline LossResult semantic_loss(const std::vector<ConstraintGroup>& groups, const NodeStore& store,
                                std::span<const double> p, double eps = kDefaultLossEps) {
  if (p.size() < store.num_vars()) throw std::invalid_argument("probability vector too short");
  LossResult out;
  out.grad.assign(p.size(), 0.0);
  auto flats = flatten_groups(store, groups);
  out.loss = accumulate_semantic_loss(flats, p, eps, 1.0, out.grad);
  return out;
}

/// Product t-norm baseline: every clause is its own factor, always.
inline LossResult product_tnorm_loss(const Cnf& cnf, NodeStore& store, std::span<const double> p,
                                     double eps = kDefaultLossEps) {
  auto groups = singleton_groups(cnf);
  compile_groups(store, cnf, groups);
  return semantic_loss(groups, store, p, eps);
}

}  // namespace semstr
