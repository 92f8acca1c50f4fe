#pragma once

#include <array>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include "semstr/formula.hpp"
#include "semstr/oracle.hpp"

namespace semstr {

struct NamedGroup {
  std::string name;
  std::vector<std::size_t> clause_ids;  // 0-based
};

/// A task's constraint: the CNF plus a coarse, human-readable grouping of its
/// clauses (one group per Sudoku unit, one per matching vertex).
struct TaskEncoding {
  Cnf cnf;
  std::vector<NamedGroup> groups;

  std::vector<ConstraintGroup> constraint_groups() const {
    std::vector<ConstraintGroup> out;
    for (const auto& g : groups) out.push_back(make_group(static_cast<GroupId>(out.size()), cnf, g.clause_ids));
    return out;
  }

  /// Group file text with the group names as trailing comments.
  std::string group_file() const {
    std::ostringstream out;
    for (const auto& g : groups) {
      for (std::size_t i = 0; i < g.clause_ids.size(); ++i) out << (i ? " " : "") << g.clause_ids[i] + 1;
      out << "  # " << g.name << '\n';
    }
    return out.str();
  }
};

/// One labelled example. `givens` marks outputs fixed by the input.
struct Instance {
  std::vector<double> features;
  std::vector<std::uint8_t> target;
  std::vector<std::uint8_t> givens;

  bool operator==(const Instance&) const = default;
};

namespace detail {

/// Appends at-least-one plus pairwise at-most-one clauses over `vars` and
/// returns their indices.
inline std::vector<std::size_t> add_exactly_one(Cnf& cnf, const std::vector<Var>& vars) {
  std::vector<std::size_t> ids;
  Clause alo;
  for (Var v : vars) alo.literals.push_back(Literal{v, true});
  ids.push_back(cnf.clauses.size());
  cnf.clauses.push_back(std::move(alo));
  for (std::size_t i = 0; i < vars.size(); ++i)
    for (std::size_t j = i + 1; j < vars.size(); ++j) {
      ids.push_back(cnf.clauses.size());
      cnf.clauses.push_back(Clause{{Literal{vars[i], false}, Literal{vars[j], false}}});
    }
  return ids;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// 4x4 Sudoku with 2x2 blocks.

namespace sudoku4 {

inline constexpr int kSize = 4;
inline constexpr int kCells = 16;
inline constexpr std::size_t kVars = 64;

/// Y_{r,c,v} (all 0-based) is variable 16r + 4c + v; in 1-based DIMACS terms
/// Y_{r,c,v} -> 16(r-1) + 4(c-1) + v.
constexpr Var var(int r, int c, int v) { return static_cast<Var>(16 * r + 4 * c + v); }

constexpr int block_of(int r, int c) { return (r / 2) * 2 + c / 2; }

/// Cell values 1..4, 0 for blank; row-major.
using Board = std::array<std::uint8_t, kCells>;

}  // namespace sudoku4

/// Clauses are emitted cell groups first, then row, column and block groups.
inline TaskEncoding sudoku4_cnf() {
  using namespace sudoku4;
  TaskEncoding enc;
  enc.cnf.num_vars = kVars;
  auto add = [&](std::string name, const std::vector<Var>& vars) {
    enc.groups.push_back(NamedGroup{std::move(name), detail::add_exactly_one(enc.cnf, vars)});
  };
  auto label = [](const char* kind, int a, int b) {
    return std::string(kind) + "(" + std::to_string(a + 1) + "," + std::to_string(b + 1) + ")";
  };
  for (int r = 0; r < kSize; ++r)
    for (int c = 0; c < kSize; ++c) {
      std::vector<Var> vars;
      for (int v = 0; v < kSize; ++v) vars.push_back(var(r, c, v));
      add(label("cell", r, c), vars);
    }
  for (int r = 0; r < kSize; ++r)
    for (int v = 0; v < kSize; ++v) {
      std::vector<Var> vars;
      for (int c = 0; c < kSize; ++c) vars.push_back(var(r, c, v));
      add(label("row", r, v), vars);
    }
  for (int c = 0; c < kSize; ++c)
    for (int v = 0; v < kSize; ++v) {
      std::vector<Var> vars;
      for (int r = 0; r < kSize; ++r) vars.push_back(var(r, c, v));
      add(label("col", c, v), vars);
    }
  for (int b = 0; b < kSize; ++b)
    for (int v = 0; v < kSize; ++v) {
      std::vector<Var> vars;
      for (int r = 0; r < kSize; ++r)
        for (int c = 0; c < kSize; ++c)
          if (block_of(r, c) == b) vars.push_back(var(r, c, v));
      add(label("block", b, v), vars);
    }
  return enc;
}

namespace sudoku4 {

inline bool can_place(const Board& board, int cell, int value) {
  const int r = cell / kSize, c = cell % kSize;
  for (int i = 0; i < kCells; ++i) {
    if (i == cell || board[i] != value) continue;
    const int ri = i / kSize, ci = i % kSize;
    if (ri == r || ci == c || block_of(ri, ci) == block_of(r, c)) return false;
  }
  return true;
}

/// Backtracking count of completions, stopping once `limit` are found.
inline std::size_t count_solutions(Board board, std::size_t limit = 2) {
  std::size_t found = 0;
  auto search = [&](auto&& self, int cell) -> void {
    while (cell < kCells && board[cell] != 0) ++cell;
    if (cell == kCells) {
      ++found;
      return;
    }
    for (int v = 1; v <= kSize && found < limit; ++v) {
      if (!can_place(board, cell, v)) continue;
      board[cell] = static_cast<std::uint8_t>(v);
      self(self, cell + 1);
      board[cell] = 0;
    }
  };
  for (int i = 0; i < kCells; ++i)
    if (board[i] != 0 && !can_place(board, i, board[i])) return 0;
  search(search, 0);
  return found;
}

/// A uniformly shuffled search for a complete valid board.
template <typename Rng>
Board random_solution(Rng& rng) {
  Board board{};
  auto fill = [&](auto&& self, int cell) -> bool {
    if (cell == kCells) return true;
    std::array<int, kSize> values{1, 2, 3, 4};
    std::shuffle(values.begin(), values.end(), rng);
    for (int v : values) {
      if (!can_place(board, cell, v)) continue;
      board[cell] = static_cast<std::uint8_t>(v);
      if (self(self, cell + 1)) return true;
      board[cell] = 0;
    }
    return false;
  };
  fill(fill, 0);
  return board;
}

/// 64-entry 0/1 assignment of a (complete or partial) board.
inline std::vector<std::uint8_t> encode(const Board& board) {
  std::vector<std::uint8_t> y(kVars, 0);
  for (int i = 0; i < kCells; ++i)
    if (board[i] != 0) y[var(i / kSize, i % kSize, board[i] - 1)] = 1;
  return y;
}

inline Instance make_instance(const Board& puzzle, const Board& solution) {
  Instance inst;
  inst.target = encode(solution);
  inst.features = std::vector<double>(kVars + kCells, 0.0);
  inst.givens.assign(kVars, 0);
  for (int i = 0; i < kCells; ++i) {
    const int r = i / kSize, c = i % kSize;
    if (puzzle[i] != 0) {
      inst.features[var(r, c, puzzle[i] - 1)] = 1.0;
      for (int v = 0; v < kSize; ++v) inst.givens[var(r, c, v)] = 1;
    } else {
      inst.features[kVars + i] = 1.0;
    }
  }
  return inst;
}

}  // namespace sudoku4

class GenerationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Puzzles with exactly `holes` blanks and a unique completion. Features are
/// the one-hot givens (64) followed by a blank-cell mask (16).
inline std::vector<Instance> sudoku4_dataset(std::size_t n, std::size_t holes, std::uint64_t seed,
                                             std::size_t max_attempts = 1000) {
  using namespace sudoku4;
  if (holes >= static_cast<std::size_t>(kCells)) throw std::invalid_argument("holes must be < 16");
  std::mt19937_64 rng(seed);
  std::vector<Instance> out;
  out.reserve(n);
  while (out.size() < n) {
    bool made = false;
    for (std::size_t attempt = 0; attempt < max_attempts && !made; ++attempt) {
      const Board solution = random_solution(rng);
      Board puzzle = solution;
      std::array<int, kCells> cells;
      std::iota(cells.begin(), cells.end(), 0);
      std::shuffle(cells.begin(), cells.end(), rng);
      std::size_t blanks = 0;
      for (int cell : cells) {
        if (blanks == holes) break;
        const auto saved = puzzle[cell];
        puzzle[cell] = 0;
        if (count_solutions(puzzle, 2) == 1) ++blanks;
        else puzzle[cell] = saved;
      }
      if (blanks != holes) continue;
      out.push_back(make_instance(puzzle, solution));
      made = true;
    }
    if (!made) throw GenerationError("sudoku4_dataset: no unique puzzle after " +
                                     std::to_string(max_attempts) + " attempts");
  }
  return out;
}

// ---------------------------------------------------------------------------
// Perfect matchings on a rows x cols grid graph.

struct GridEdge {
  std::size_t u = 0;  // vertex index r * cols + c, u < v
  std::size_t v = 0;
};

/// Horizontal edges row-major, then vertical edges row-major. Variable i is
/// edge i.
inline std::vector<GridEdge> grid_edges(std::size_t rows, std::size_t cols) {
  std::vector<GridEdge> edges;
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c + 1 < cols; ++c) edges.push_back({r * cols + c, r * cols + c + 1});
  for (std::size_t r = 0; r + 1 < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) edges.push_back({r * cols + c, (r + 1) * cols + c});
  return edges;
}

/// Exactly one selected edge at every vertex.
inline TaskEncoding matching_cnf(std::size_t rows, std::size_t cols) {
  if (rows == 0 || cols == 0 || (rows * cols) % 2 != 0)
    throw std::invalid_argument("matching_cnf: grid needs an even, nonzero vertex count");
  const auto edges = grid_edges(rows, cols);
  TaskEncoding enc;
  enc.cnf.num_vars = edges.size();
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) {
      const std::size_t vertex = r * cols + c;
      std::vector<Var> incident;
      for (std::size_t e = 0; e < edges.size(); ++e)
        if (edges[e].u == vertex || edges[e].v == vertex) incident.push_back(static_cast<Var>(e));
      enc.groups.push_back(NamedGroup{
          "vertex(" + std::to_string(r + 1) + "," + std::to_string(c + 1) + ")",
          detail::add_exactly_one(enc.cnf, incident)});
    }
  return enc;
}

/// All perfect matchings as edge vectors, in ascending world order.
inline std::vector<std::vector<std::uint8_t>> perfect_matchings(std::size_t rows, std::size_t cols) {
  const auto enc = matching_cnf(rows, cols);
  std::vector<std::vector<std::uint8_t>> out;
  for (World w : oracle::enumerate_models(enc.cnf).worlds) {
    std::vector<std::uint8_t> y(enc.cnf.num_vars);
    for (std::size_t i = 0; i < y.size(); ++i) y[i] = (w >> i) & 1U;
    out.push_back(std::move(y));
  }
  return out;
}

/// Edge weight: the two endpoint digits read as a two-digit number, lower
/// vertex index first.
inline double matching_cost(const std::vector<std::uint8_t>& matching, const std::vector<GridEdge>& edges,
                            const std::vector<int>& digits) {
  double cost = 0.0;
  for (std::size_t e = 0; e < edges.size(); ++e)
    if (matching[e]) cost += 10.0 * digits[edges[e].u] + digits[edges[e].v];
  return cost;
}

/// Minimum-cost perfect matching; ties go to the lexicographically least edge
/// vector.
inline std::vector<std::uint8_t> min_cost_matching(const std::vector<std::vector<std::uint8_t>>& matchings,
                                                   const std::vector<GridEdge>& edges,
                                                   const std::vector<int>& digits) {
  const std::vector<std::uint8_t>* best = nullptr;
  double best_cost = 0.0;
  for (const auto& m : matchings) {
    const double cost = matching_cost(m, edges, digits);
    if (!best || cost < best_cost || (cost == best_cost && m < *best)) {
      best = &m;
      best_cost = cost;
    }
  }
  if (!best) throw std::invalid_argument("min_cost_matching: no perfect matching");
  return *best;
}

/// Vertex digits 0-9 as raw features; label is the min-cost perfect matching.
inline std::vector<Instance> matching_dataset(std::size_t rows, std::size_t cols, std::size_t n,
                                              std::uint64_t seed) {
  const auto edges = grid_edges(rows, cols);
  const auto matchings = perfect_matchings(rows, cols);
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> digit(0, 9);
  std::vector<Instance> out;
  out.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    std::vector<int> digits(rows * cols);
    for (auto& d : digits) d = digit(rng);
    Instance inst;
    inst.features.assign(digits.begin(), digits.end());
    inst.target = min_cost_matching(matchings, edges, digits);
    inst.givens.assign(edges.size(), 0);
    out.push_back(std::move(inst));
  }
  return out;
}

// ---------------------------------------------------------------------------

/// Seeded random CNF. Each clause picks a width uniformly in [1, max_width],
/// distinct variables and random polarities; repeated clauses are redrawn.
inline Cnf random_cnf(std::size_t vars, std::size_t clauses, std::size_t max_width, std::uint64_t seed) {
  if (max_width == 0 || max_width > vars) throw std::invalid_argument("random_cnf: need 1 <= width <= vars");
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> width_dist(1, max_width);
  std::bernoulli_distribution sign(0.5);
  std::vector<Var> pool(vars);
  std::iota(pool.begin(), pool.end(), Var{0});
  Cnf cnf{vars, {}};
  std::set<std::vector<int>> seen;
  std::size_t attempts = 0;
  while (cnf.clauses.size() < clauses) {
    if (++attempts > 100 * clauses + 1000) throw GenerationError("random_cnf: too few distinct clauses");
    std::shuffle(pool.begin(), pool.end(), rng);
    const std::size_t w = width_dist(rng);
    Clause clause;
    for (std::size_t i = 0; i < w; ++i) clause.literals.push_back(Literal{pool[i], sign(rng)});
    std::vector<int> key;
    for (const auto& l : clause.literals) key.push_back(l.dimacs());
    std::sort(key.begin(), key.end());
    if (!seen.insert(key).second) continue;
    cnf.clauses.push_back(std::move(clause));
  }
  return cnf;
}

}  // namespace semstr
