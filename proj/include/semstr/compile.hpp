#pragma once

#include <optional>
#include <unordered_map>

#include "semstr/circuit.hpp"
#include "semstr/formula.hpp"

namespace semstr {

/// Thrown when a conjunction would allocate more nodes than the caller allows.
class BudgetExceeded : public std::runtime_error {
 public:
  explicit BudgetExceeded(std::size_t cap)
      : std::runtime_error("node budget of " + std::to_string(cap) + " exceeded"), cap_(cap) {}
  std::size_t cap() const { return cap_; }

 private:
  std::size_t cap_;
};

/// Chain of decisions in order rank; at each variable the satisfying
/// polarity jumps to TRUE, the other falls through to the next literal.
inline Handle compile_clause(NodeStore& store, const Clause& clause) {
  std::vector<Literal> lits = clause.literals;
  const auto& order = store.order();
  std::sort(lits.begin(), lits.end(),
            [&](const Literal& a, const Literal& b) { return order.rank(a.var) > order.rank(b.var); });
  Handle node = kFalse;
  for (const auto& lit : lits)
    node = lit.positive ? store.decision(lit.var, kTrue, node) : store.decision(lit.var, node, kTrue);
  return node;
}

/// Conjunction by the classic apply recursion. Both operands live in the same
/// store and therefore respect the same order, which is what makes this
/// polynomial: the result has at most size(a) * size(b) nodes.
///
/// With `node_cap`, throws BudgetExceeded when the result would have more than
/// that many nodes. Every node the recursion creates ends up in the result, so
/// counting creations aborts early. Nodes created before the throw stay in
/// the store.
inline Handle conjoin(NodeStore& store, Handle a, Handle b,
                      std::optional<std::size_t> node_cap = std::nullopt) {
  const std::size_t start = store.size();
  std::unordered_map<std::uint64_t, Handle> memo;

  auto apply = [&](auto&& self, Handle x, Handle y) -> Handle {
    if (x == kFalse || y == kFalse) return kFalse;
    if (x == kTrue) return y;
    if (y == kTrue || x == y) return x;
    if (y < x) std::swap(x, y);
    const std::uint64_t key = (std::uint64_t{x.index} << 32) | y.index;
    if (auto it = memo.find(key); it != memo.end()) return it->second;

    const auto rx = store.top_rank(x);
    const auto ry = store.top_rank(y);
    const Var v = store.order().at(std::min(rx, ry));
    const CircuitNode nx = store.node(x);
    const CircuitNode ny = store.node(y);
    Handle xh = rx <= ry ? nx.hi : x, xl = rx <= ry ? nx.lo : x;
    Handle yh = ry <= rx ? ny.hi : y, yl = ry <= rx ? ny.lo : y;

    Handle hi = self(self, xh, yh);
    Handle lo = self(self, xl, yl);
    Handle r = store.decision(v, hi, lo);
    if (node_cap && store.size() - start > *node_cap) throw BudgetExceeded(*node_cap);
    memo.emplace(key, r);
    return r;
  };
  const Handle result = apply(apply, a, b);
  if (node_cap && circuit_size(store, result) > *node_cap) throw BudgetExceeded(*node_cap);
  return result;
}

/// Copies the circuit rooted at `root` in `src` into `dst`. Both stores must
/// share the same variable order. `memo` maps src handles to dst handles and
/// can be reused across calls to share already imported nodes.
inline Handle import_circuit(NodeStore& dst, const NodeStore& src, Handle root,
                             std::unordered_map<std::uint32_t, Handle>& memo) {
  if (src.is_terminal(root)) return root;
  if (!(dst.order() == src.order())) throw std::invalid_argument("import_circuit: variable orders differ");
  auto copy = [&](auto&& self, Handle h) -> Handle {
    if (src.is_terminal(h)) return h;
    if (auto it = memo.find(h.index); it != memo.end()) return it->second;
    const CircuitNode n = src.node(h);
    Handle r = dst.decision(n.var, self(self, n.hi), self(self, n.lo));
    memo.emplace(h.index, r);
    return r;
  };
  return copy(copy, root);
}

/// Conjunction of the group's clauses, folded in ascending clause order. The
/// result is canonical, so the fold order only affects intermediate sizes.
/// With `node_cap`, also rejects a final circuit larger than the cap.
inline Handle compile_group(NodeStore& store, const Cnf& cnf, const ConstraintGroup& group,
                            std::optional<std::size_t> node_cap = std::nullopt) {
  Handle acc = kTrue;
  for (auto id : group.clause_ids)
    acc = conjoin(store, acc, compile_clause(store, cnf.clauses.at(id)), node_cap);
  if (node_cap && circuit_size(store, acc) > *node_cap) throw BudgetExceeded(*node_cap);
  return acc;
}

/// Compiles every group that has no circuit yet.
inline void compile_groups(NodeStore& store, const Cnf& cnf, std::vector<ConstraintGroup>& groups,
                           std::optional<std::size_t> node_cap = std::nullopt) {
  for (auto& g : groups)
    if (!g.root) g.root = compile_group(store, cnf, g, node_cap);
}

/// Conjunction of the whole formula.
inline Handle compile_cnf(NodeStore& store, const Cnf& cnf,
                          std::optional<std::size_t> node_cap = std::nullopt) {
  Handle acc = kTrue;
  for (const auto& clause : cnf.clauses)
    acc = conjoin(store, acc, compile_clause(store, clause), node_cap);
  return acc;
}

}  // namespace semstr
