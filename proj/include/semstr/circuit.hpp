#pragma once

#include <algorithm>
#include <memory>
#include <ostream>
#include <set>
#include <span>
#include <sstream>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "semstr/order.hpp"
#include "semstr/types.hpp"

namespace semstr {

/// A DECISION node (var, hi, lo) is the deterministic OR of two ANDs,
/// (var AND hi) OR (NOT var AND lo). Terminals carry kNoVar.
struct CircuitNode {
  Var var = kNoVar;
  Handle hi;
  Handle lo;

  bool is_terminal() const { return var == kNoVar; }
};

class StructuralError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Append-only, hash-consed table of reduced ordered decision nodes. Children
/// always precede their parents, so ascending handle order is topological.
///
/// Single writer. Once construction is done the store can be read
/// concurrently; evaluation keeps its memo tables per call.
class NodeStore {
 public:
  explicit NodeStore(std::shared_ptr<const VariableOrder> order) : order_(std::move(order)) {
    if (!order_) throw std::invalid_argument("NodeStore needs a variable order");
    nodes_.push_back(CircuitNode{});  // kFalse
    nodes_.push_back(CircuitNode{});  // kTrue
  }

  explicit NodeStore(VariableOrder order)
      : NodeStore(std::make_shared<const VariableOrder>(std::move(order))) {}

  const VariableOrder& order() const { return *order_; }
  std::shared_ptr<const VariableOrder> shared_order() const { return order_; }

  std::size_t size() const { return nodes_.size(); }
  std::size_t num_vars() const { return order_->size(); }

  const CircuitNode& node(Handle h) const { return nodes_.at(h.index); }
  bool is_terminal(Handle h) const { return h.index < 2; }

  /// Order position of the node's variable; terminals sit below every variable.
  std::size_t top_rank(Handle h) const {
    return is_terminal(h) ? order_->size() : order_->rank(nodes_[h.index].var);
  }

  /// Canonical constructor: returns `lo` when both branches agree, otherwise
  /// the unique node with this structure.
  Handle decision(Var var, Handle hi, Handle lo) {
    if (var >= order_->size()) throw StructuralError("decision on unknown variable");
    if (hi.index >= nodes_.size() || lo.index >= nodes_.size())
      throw StructuralError("decision references unknown handle");
    if (hi == lo) return lo;
    auto r = order_->rank(var);
    if (r >= top_rank(hi) || r >= top_rank(lo))
      throw StructuralError("decision on variable " + std::to_string(var + 1) +
                            " violates the variable order");
    Key key{var, hi.index, lo.index};
    if (auto it = unique_.find(key); it != unique_.end()) return it->second;
    Handle h{static_cast<std::uint32_t>(nodes_.size())};
    nodes_.push_back(CircuitNode{var, hi, lo});
    unique_.emplace(key, h);
    return h;
  }

  Handle literal(Var var, bool positive) {
    return positive ? decision(var, kTrue, kFalse) : decision(var, kFalse, kTrue);
  }

  /// Appends a node without reduction, ordering or uniqueness checks. Exists
  /// so tests can build malformed circuits for validate().
  Handle insert_unchecked(Var var, Handle hi, Handle lo) {
    if (hi.index >= nodes_.size() || lo.index >= nodes_.size())
      throw StructuralError("insert_unchecked references unknown handle");
    Handle h{static_cast<std::uint32_t>(nodes_.size())};
    nodes_.push_back(CircuitNode{var, hi, lo});
    return h;
  }

 private:
  struct Key {
    Var var;
    std::uint32_t hi;
    std::uint32_t lo;
    bool operator==(const Key&) const = default;
  };
  struct KeyHash {
    std::size_t operator()(const Key& k) const noexcept {
      std::uint64_t x = (std::uint64_t{k.hi} << 32) ^ k.lo;
      x ^= std::uint64_t{k.var} * 0x9E3779B97F4A7C15ULL;
      x ^= x >> 29;
      x *= 0xBF58476D1CE4E5B9ULL;
      return static_cast<std::size_t>(x ^ (x >> 32));
    }
  };

  std::shared_ptr<const VariableOrder> order_;
  std::vector<CircuitNode> nodes_;
  std::unordered_map<Key, Handle, KeyHash> unique_;
};

/// Handles reachable from `root`, ascending (children before parents).
inline std::vector<Handle> reachable(const NodeStore& store, Handle root) {
  std::vector<Handle> out;
  std::unordered_set<std::uint32_t> seen;
  std::vector<Handle> stack{root};
  while (!stack.empty()) {
    Handle h = stack.back();
    stack.pop_back();
    if (!seen.insert(h.index).second) continue;
    out.push_back(h);
    if (!store.is_terminal(h)) {
      stack.push_back(store.node(h).hi);
      stack.push_back(store.node(h).lo);
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

inline std::size_t circuit_size(const NodeStore& store, Handle root) {
  return reachable(store, root).size();
}

/// Variables tested by some decision node under `root`, ascending.
inline std::vector<Var> scope(const NodeStore& store, Handle root) {
  std::set<Var> vars;
  for (auto h : reachable(store, root))
    if (!store.is_terminal(h)) vars.insert(store.node(h).var);
  return {vars.begin(), vars.end()};
}

/// A circuit copied out of its store into a dense, topologically sorted
/// array. Index 0 is FALSE, index 1 is TRUE, the last entry is the root.
/// Cheap to evaluate repeatedly; the training loop keeps one per group.
/// Holds evaluation scratch, so one instance must not be shared across threads.
class FlatCircuit {
 public:
  struct Entry {
    Var var;
    std::uint32_t hi;
    std::uint32_t lo;
  };

  FlatCircuit() = default;

  FlatCircuit(const NodeStore& store, Handle root) {
    auto nodes = reachable(store, root);
    std::unordered_map<std::uint32_t, std::uint32_t> local;
    local.reserve(nodes.size() + 2);
    entries_.push_back(Entry{kNoVar, 0, 0});
    entries_.push_back(Entry{kNoVar, 1, 1});
    local[kFalse.index] = 0;
    local[kTrue.index] = 1;
    for (auto h : nodes) {
      if (store.is_terminal(h)) continue;
      const auto& n = store.node(h);
      local[h.index] = static_cast<std::uint32_t>(entries_.size());
      entries_.push_back(Entry{n.var, local.at(n.hi.index), local.at(n.lo.index)});
    }
    root_ = local.at(root.index);
  }

  std::span<const Entry> entries() const { return entries_; }
  std::uint32_t root() const { return root_; }

  double probability(std::span<const double> p) const {
    if (root_ < 2) return root_;
    values_.resize(entries_.size());
    values_[0] = 0.0;
    values_[1] = 1.0;
    for (std::size_t i = 2; i <= root_; ++i) {
      const auto& e = entries_[i];
      values_[i] = p[e.var] * values_[e.hi] + (1.0 - p[e.var]) * values_[e.lo];
    }
    return values_[root_];
  }

  /// Probability plus its partial derivatives, accumulated into `grad` scaled
  /// by `scale` (grad[i] += scale * dP/dp_i).
  double accumulate_gradient(std::span<const double> p, double scale,
                             std::span<double> grad) const {
    double prob = probability(p);
    backward(p, scale, grad);
    return prob;
  }

  /// Reverse pass only; reuses the values of the last probability(p) call,
  /// which must have been made with the same `p`.
  void backward(std::span<const double> p, double scale, std::span<double> grad) const {
    if (root_ < 2) return;
    adjoints_.assign(entries_.size(), 0.0);
    adjoints_[root_] = 1.0;
    for (std::size_t i = root_; i >= 2; --i) {
      double a = adjoints_[i];
      if (a == 0.0) continue;
      const auto& e = entries_[i];
      grad[e.var] += scale * a * (values_[e.hi] - values_[e.lo]);
      adjoints_[e.hi] += a * p[e.var];
      adjoints_[e.lo] += a * (1.0 - p[e.var]);
    }
  }

 private:
  std::vector<Entry> entries_;
  std::uint32_t root_ = 0;
  mutable std::vector<double> values_;
  mutable std::vector<double> adjoints_;
};

/// Weighted model count of `root` under the fully factorized distribution
/// with P(Y_i = 1) = p[i]. Variables skipped on a path contribute a factor
/// p + (1 - p) = 1, so no explicit smoothing is needed.
inline double wmc(const NodeStore& store, Handle root, std::span<const double> p) {
  if (p.size() < store.num_vars()) throw std::invalid_argument("probability vector too short");
  return FlatCircuit(store, root).probability(p);
}

struct WmcGradient {
  double probability = 0.0;
  std::vector<double> gradient;  // dP/dp_i, zero outside the circuit's scope
};

/// One forward pass and one reverse (adjoint) pass; exact because the count
/// is multilinear in p.
inline WmcGradient wmc_grad(const NodeStore& store, Handle root, std::span<const double> p) {
  if (p.size() < store.num_vars()) throw std::invalid_argument("probability vector too short");
  WmcGradient out;
  out.gradient.assign(p.size(), 0.0);
  out.probability = FlatCircuit(store, root).accumulate_gradient(p, 1.0, out.gradient);
  return out;
}

/// Structural properties of a circuit. Skipped variables are implicit
/// (v OR NOT v) factors, so smoothness is reported for the expanded circuit.
struct ValidationReport {
  bool decomposable = true;
  bool deterministic = true;
  bool smooth_after_expansion = true;
  bool ordered = true;
  bool reduced = true;

  bool ok() const {
    return decomposable && deterministic && smooth_after_expansion && ordered && reduced;
  }
};

inline ValidationReport validate(const NodeStore& store, Handle root) {
  ValidationReport report;
  auto nodes = reachable(store, root);
  std::unordered_map<std::uint32_t, std::set<Var>> scopes;
  std::set<std::tuple<Var, std::uint32_t, std::uint32_t>> structures;
  for (auto h : nodes) {
    if (store.is_terminal(h)) {
      scopes[h.index];
      continue;
    }
    const auto& n = store.node(h);
    const auto& hs = scopes.at(n.hi.index);
    const auto& ls = scopes.at(n.lo.index);
    // AND gates (v, hi) and (NOT v, lo) must not mention v again below.
    if (hs.count(n.var) || ls.count(n.var)) report.decomposable = false;
    // The two OR inputs fix v to opposite values; they can only overlap if the
    // node tests no real variable.
    if (n.var >= store.num_vars()) report.deterministic = false;
    if (n.var >= store.num_vars() || store.order().rank(n.var) >= store.top_rank(n.hi) ||
        store.order().rank(n.var) >= store.top_rank(n.lo))
      report.ordered = false;
    if (n.hi == n.lo || !structures.emplace(n.var, n.hi.index, n.lo.index).second)
      report.reduced = false;
    auto& s = scopes[h.index];
    s = hs;
    s.insert(ls.begin(), ls.end());
    s.insert(n.var);
  }
  // Padding an OR input with (u OR NOT u) for each variable it lacks keeps the
  // AND gates decomposable exactly when they were decomposable before.
  report.smooth_after_expansion = report.decomposable;
  return report;
}

/// Debug listing, one `id DECISION var hi lo` line per reachable node (var
/// 1-based). Not a stable format.
inline std::string dump_circuit(const NodeStore& store, Handle root) {
  std::ostringstream out;
  for (auto h : reachable(store, root)) {
    if (h == kFalse) out << h.index << " FALSE\n";
    else if (h == kTrue) out << h.index << " TRUE\n";
    else {
      const auto& n = store.node(h);
      out << h.index << " DECISION " << n.var + 1 << ' ' << n.hi.index << ' ' << n.lo.index << '\n';
    }
  }
  return out.str();
}

}  // namespace semstr
