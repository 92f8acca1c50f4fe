#pragma once

#include <map>
#include <numeric>

#include "semstr/mi.hpp"

namespace semstr {

struct StrengthenConfig {
  std::size_t eta = 1;            // epochs between rounds
  std::size_t kappa = 1;          // top pairs considered per round
  std::size_t node_cap = 200000;  // per merged circuit (and per MI conjunction)
  std::size_t max_rounds = 1;
  std::size_t mi_batch = 64;      // inputs per MI estimate

  void validate() const {
    if (eta < 1 || kappa < 1 || node_cap < 1 || max_rounds < 1 || mi_batch < 1)
      throw std::invalid_argument("strengthen config: every parameter must be >= 1");
  }
};

struct SkippedPair {
  GroupId first = 0;
  GroupId second = 0;
  std::string reason;
};

struct RankedPairs {
  std::vector<MiEstimate> scored;  // descending MI, ties by (first, second)
  std::vector<SkippedPair> skipped;
};

struct MergePlan {
  std::vector<std::vector<GroupId>> components;  // ascending ids, each size >= 2
  std::vector<SkippedPair> skipped;
};

/// Scores every unordered pair of variable-sharing groups with `score(a, b)`
/// and sorts the result. Pairs whose scoring throws BudgetExceeded are
/// reported as skipped.
template <typename Scorer>
RankedPairs rank_pairs_with(const std::vector<ConstraintGroup>& groups, Scorer&& score) {
  RankedPairs out;
  std::vector<const ConstraintGroup*> sorted;
  for (const auto& g : groups) sorted.push_back(&g);
  std::sort(sorted.begin(), sorted.end(), [](auto* a, auto* b) { return a->id < b->id; });
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    for (std::size_t j = i + 1; j < sorted.size(); ++j) {
      const auto& a = *sorted[i];
      const auto& b = *sorted[j];
      if (!shares_vars(a, b)) continue;
      try {
        out.scored.push_back(score(a, b));
      } catch (const BudgetExceeded& e) {
        out.skipped.push_back(SkippedPair{a.id, b.id, e.what()});
      }
    }
  }
  std::stable_sort(out.scored.begin(), out.scored.end(), [](const MiEstimate& x, const MiEstimate& y) {
    if (x.value != y.value) return x.value > y.value;
    if (x.first != y.first) return x.first < y.first;
    return x.second < y.second;
  });
  return out;
}

/// Batch conditional MI for every variable-sharing pair. Each group circuit
/// is flattened once. Pairwise conjunctions are built in a scratch store that
/// is dropped afterwards, so scoring leaves `store` untouched.
inline RankedPairs rank_pairs(const std::vector<ConstraintGroup>& groups, const NodeStore& store,
                              const std::vector<ProbVector>& batch,
                              std::optional<std::size_t> node_cap = std::nullopt) {
  if (batch.empty()) throw std::invalid_argument("rank_pairs: empty batch");
  std::map<GroupId, FlatCircuit> flats;
  for (const auto& g : groups) {
    if (!g.root) throw std::invalid_argument("rank_pairs: group " + std::to_string(g.id) + " not compiled");
    flats.emplace(g.id, FlatCircuit(store, *g.root));
  }
  NodeStore scratch(store.shared_order());
  std::unordered_map<std::uint32_t, Handle> imported;
  std::map<GroupId, Handle> local;
  auto root_in_scratch = [&](const ConstraintGroup& g) {
    auto it = local.find(g.id);
    if (it != local.end()) return it->second;
    return local[g.id] = import_circuit(scratch, store, *g.root, imported);
  };
  return rank_pairs_with(groups, [&](const ConstraintGroup& a, const ConstraintGroup& b) {
    const Handle ha = root_in_scratch(a);
    const Handle hb = root_in_scratch(b);
    const FlatCircuit both(scratch, conjoin(scratch, ha, hb, node_cap));
    const auto& fa = flats.at(a.id);
    const auto& fb = flats.at(b.id);
    double sum = 0.0;
    for (const auto& p : batch) sum += pair_mi(fa, fb, both, p);
    return MiEstimate{a.id, b.id, sum / static_cast<double>(batch.size()), batch.size()};
  });
}

namespace detail {

class DisjointSets {
 public:
  explicit DisjointSets(std::size_t n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), 0); }

  std::size_t find(std::size_t x) {
    while (parent_[x] != x) x = parent_[x] = parent_[parent_[x]];
    return x;
  }

  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a != b) parent_[std::max(a, b)] = std::min(a, b);
  }

 private:
  std::vector<std::size_t> parent_;
};

}  // namespace detail

/// Takes the top `kappa` pairs and returns the connected components of the
/// graph they span: merging (1,2) and (2,3) merges {1,2,3}.
inline MergePlan plan_merges(const std::vector<MiEstimate>& ranked, std::size_t kappa) {
  MergePlan plan;
  const std::size_t take = std::min(kappa, ranked.size());
  std::map<GroupId, std::size_t> index;
  for (std::size_t k = 0; k < take; ++k) {
    index.emplace(ranked[k].first, 0);
    index.emplace(ranked[k].second, 0);
  }
  std::vector<GroupId> ids;
  for (auto& [id, slot] : index) {
    slot = ids.size();
    ids.push_back(id);
  }
  detail::DisjointSets sets(ids.size());
  for (std::size_t k = 0; k < take; ++k) sets.unite(index[ranked[k].first], index[ranked[k].second]);

  std::map<std::size_t, std::vector<GroupId>> by_root;
  for (std::size_t i = 0; i < ids.size(); ++i) by_root[sets.find(i)].push_back(ids[i]);
  for (auto& [root, members] : by_root)
    if (members.size() >= 2) plan.components.push_back(std::move(members));
  return plan;
}

struct MergedGroup {
  GroupId id = 0;
  std::vector<GroupId> members;
  std::size_t size_before = 0;  // sum of member circuit sizes
  std::size_t size_after = 0;
};

struct AbandonedMerge {
  std::vector<GroupId> members;
  std::string reason;
};

struct MergeOutcome {
  std::vector<ConstraintGroup> groups;
  std::vector<MergedGroup> merged;
  std::vector<AbandonedMerge> abandoned;
};

/// Replaces each planned component by one group holding the union of its
/// clauses. Untouched groups keep their ids and relative order; merged groups
/// are appended with fresh ids. A component whose circuit exceeds `node_cap`
/// is abandoned and its groups are kept as they were.
inline MergeOutcome apply_merges(const std::vector<ConstraintGroup>& groups, const Cnf& cnf,
                                 NodeStore& store, const MergePlan& plan,
                                 std::optional<std::size_t> node_cap = std::nullopt) {
  MergeOutcome out;
  std::map<GroupId, const ConstraintGroup*> by_id;
  GroupId next_id = 0;
  for (const auto& g : groups) {
    by_id[g.id] = &g;
    next_id = std::max<GroupId>(next_id, g.id + 1);
  }

  std::vector<GroupId> consumed;
  std::vector<ConstraintGroup> fresh;
  for (const auto& component : plan.components) {
    std::vector<std::size_t> clauses;
    std::size_t size_before = 0;
    for (GroupId id : component) {
      auto it = by_id.find(id);
      if (it == by_id.end()) throw std::invalid_argument("merge plan names unknown group " + std::to_string(id));
      const auto& g = *it->second;
      clauses.insert(clauses.end(), g.clause_ids.begin(), g.clause_ids.end());
      if (g.root) size_before += circuit_size(store, *g.root);
    }
    ConstraintGroup merged = make_group(next_id, cnf, std::move(clauses));
    try {
      merged.root = compile_group(store, cnf, merged, node_cap);
    } catch (const BudgetExceeded& e) {
      out.abandoned.push_back(AbandonedMerge{component, e.what()});
      continue;
    }
    ++next_id;
    out.merged.push_back(MergedGroup{merged.id, component, size_before, circuit_size(store, *merged.root)});
    consumed.insert(consumed.end(), component.begin(), component.end());
    fresh.push_back(std::move(merged));
  }

  std::sort(consumed.begin(), consumed.end());
  for (const auto& g : groups)
    if (!std::binary_search(consumed.begin(), consumed.end(), g.id)) out.groups.push_back(g);
  for (auto& g : fresh) out.groups.push_back(std::move(g));
  return out;
}

struct RoundLog {
  std::size_t round = 0;
  RankedPairs ranked;
  MergePlan plan;
  std::vector<MergedGroup> merged;
  std::vector<AbandonedMerge> abandoned;
  std::size_t groups_before = 0;
  std::size_t groups_after = 0;
};

/// One full strengthening step: score, plan, merge.
inline RoundLog strengthen_round(std::vector<ConstraintGroup>& groups, const Cnf& cnf, NodeStore& store,
                                 const std::vector<ProbVector>& batch, const StrengthenConfig& cfg,
                                 std::size_t round = 0) {
  RoundLog log;
  log.round = round;
  log.groups_before = groups.size();
  log.ranked = rank_pairs(groups, store, batch, cfg.node_cap);
  log.plan = plan_merges(log.ranked.scored, cfg.kappa);
  log.plan.skipped = log.ranked.skipped;
  auto outcome = apply_merges(groups, cnf, store, log.plan, cfg.node_cap);
  log.merged = std::move(outcome.merged);
  log.abandoned = std::move(outcome.abandoned);
  groups = std::move(outcome.groups);
  check_partition(groups, cnf);
  log.groups_after = groups.size();
  return log;
}

}  // namespace semstr
