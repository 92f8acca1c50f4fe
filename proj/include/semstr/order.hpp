#pragma once

#include <algorithm>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <string_view>
#include <vector>

#include "semstr/formula.hpp"

namespace semstr {

/// Total variable order shared by every circuit in a NodeStore. A total order
/// is a right-linear vtree, which is enough to make any two circuits built
/// against it compatible for conjunction.
class VariableOrder {
 public:
  explicit VariableOrder(std::vector<Var> sequence) : sequence_(std::move(sequence)) {
    rank_.assign(sequence_.size(), kUnranked);
    for (std::size_t pos = 0; pos < sequence_.size(); ++pos) {
      Var v = sequence_[pos];
      if (v >= sequence_.size() || rank_[v] != kUnranked)
        throw std::invalid_argument("variable order is not a permutation");
      rank_[v] = pos;
    }
  }

  static VariableOrder natural(std::size_t num_vars) {
    std::vector<Var> seq(num_vars);
    std::iota(seq.begin(), seq.end(), Var{0});
    return VariableOrder(std::move(seq));
  }

  std::size_t size() const { return sequence_.size(); }
  std::size_t rank(Var v) const { return rank_.at(v); }
  Var at(std::size_t position) const { return sequence_.at(position); }
  std::span<const Var> sequence() const { return sequence_; }

  bool operator==(const VariableOrder& other) const { return sequence_ == other.sequence_; }

 private:
  static constexpr std::size_t kUnranked = static_cast<std::size_t>(-1);
  std::vector<Var> sequence_;
  std::vector<std::size_t> rank_;
};

enum class OrderStrategy { kNatural, kDegreeDesc, kSeededRandom };

inline std::optional<OrderStrategy> parse_order_strategy(std::string_view name) {
  if (name == "natural") return OrderStrategy::kNatural;
  if (name == "degree_desc" || name == "degree") return OrderStrategy::kDegreeDesc;
  if (name == "random" || name == "seeded_random") return OrderStrategy::kSeededRandom;
  return std::nullopt;
}

inline VariableOrder build_order(const Cnf& cnf, OrderStrategy strategy, std::uint64_t seed = 0) {
  if (cnf.num_vars == 0) throw std::invalid_argument("cannot order a formula without variables");
  std::vector<Var> seq(cnf.num_vars);
  std::iota(seq.begin(), seq.end(), Var{0});
  switch (strategy) {
    case OrderStrategy::kNatural:
      break;
    case OrderStrategy::kDegreeDesc: {
      std::vector<std::size_t> degree(cnf.num_vars, 0);
      for (const auto& clause : cnf.clauses)
        for (const auto& lit : clause.literals) ++degree[lit.var];
      std::stable_sort(seq.begin(), seq.end(),
                       [&](Var a, Var b) { return degree[a] > degree[b]; });
      break;
    }
    case OrderStrategy::kSeededRandom: {
      std::mt19937_64 rng(seed);
      std::shuffle(seq.begin(), seq.end(), rng);
      break;
    }
  }
  return VariableOrder(std::move(seq));
}

}  // namespace semstr
