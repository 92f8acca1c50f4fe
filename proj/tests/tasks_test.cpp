#include <gtest/gtest.h>

#include "test_util.hpp"

namespace semstr {
namespace {

using sudoku4::Board;

TEST(Sudoku4Cnf, Shape) {
  auto enc = sudoku4_cnf();
  EXPECT_EQ(enc.cnf.num_vars, 64u);
  // 64 units, each 1 at-least-one + 6 at-most-one clauses.
  EXPECT_EQ(enc.groups.size(), 64u);
  EXPECT_EQ(enc.cnf.clauses.size(), 448u);
  EXPECT_EQ(enc.groups.front().name, "cell(1,1)");
  EXPECT_EQ(enc.groups.back().name, "block(4,4)");
  EXPECT_NO_THROW(check_partition(enc.constraint_groups(), enc.cnf));
  EXPECT_EQ(sudoku4::var(0, 0, 0), 0u);
  EXPECT_EQ(sudoku4::var(3, 3, 3), 63u);
  EXPECT_EQ(sudoku4::var(1, 2, 3), 27u);
}

TEST(Sudoku4Cnf, CompiledModelCountIs288) {
  auto enc = sudoku4_cnf();
  NodeStore store(build_order(enc.cnf, OrderStrategy::kNatural));
  Handle root = compile_cnf(store, enc.cnf);
  // Under p = 1/2 every world weighs 2^-64.
  EXPECT_NEAR(wmc(store, root, ProbVector(64, 0.5)) * std::pow(2.0, 64), 288.0, 1e-6);
}

TEST(Sudoku4Cnf, BacktrackingCountIs288) {
  EXPECT_EQ(sudoku4::count_solutions(Board{}, 1000), 288u);
}

TEST(Sudoku4Cnf, RepeatedValueBreaksExactlyItsUnits) {
  auto enc = sudoku4_cnf();
  Board b{1, 2, 3, 4, 3, 4, 1, 2, 2, 1, 4, 3, 4, 3, 2, 1};
  auto y = sudoku4::encode(b);
  EXPECT_TRUE(enc.cnf.satisfied_by(y));
  b[1] = 1;  // row 1 now holds two 1s and no 2
  y = sudoku4::encode(b);
  std::vector<std::string> broken;
  for (const auto& g : enc.groups) {
    Cnf sub{64, {}};
    for (auto id : g.clause_ids) sub.clauses.push_back(enc.cnf.clauses[id]);
    if (!sub.satisfied_by(y)) broken.push_back(g.name);
  }
  EXPECT_EQ(broken, (std::vector<std::string>{"row(1,1)", "row(1,2)", "col(2,1)", "col(2,2)", "block(1,1)",
                                              "block(1,2)"}));
}

TEST(Sudoku4Dataset, UniqueCompletionsAndTargetsAreModels) {
  auto enc = sudoku4_cnf();
  auto data = sudoku4_dataset(100, 6, 11);
  ASSERT_EQ(data.size(), 100u);
  for (const auto& inst : data) {
    EXPECT_TRUE(enc.cnf.satisfied_by(inst.target));
    Board puzzle{};
    std::size_t blanks = 0;
    for (int i = 0; i < 16; ++i) {
      if (inst.features[64 + i] == 1.0) {
        ++blanks;
        continue;
      }
      for (int v = 0; v < 4; ++v)
        if (inst.features[sudoku4::var(i / 4, i % 4, v)] == 1.0) puzzle[i] = static_cast<std::uint8_t>(v + 1);
      EXPECT_NE(puzzle[i], 0);
    }
    EXPECT_EQ(blanks, 6u);
    EXPECT_EQ(sudoku4::count_solutions(puzzle, 5), 1u);
    for (std::size_t i = 0; i < 64; ++i)
      if (inst.givens[i]) EXPECT_EQ(inst.target[i], inst.features[i]);
  }
}

TEST(Sudoku4Dataset, SeedDeterminism) {
  EXPECT_EQ(sudoku4_dataset(20, 6, 3), sudoku4_dataset(20, 6, 3));
  EXPECT_NE(sudoku4_dataset(20, 6, 3), sudoku4_dataset(20, 6, 4));
}

TEST(Sudoku4Dataset, NoHolesIsFullyGiven) {
  for (const auto& inst : sudoku4_dataset(5, 0, 1))
    EXPECT_TRUE(std::all_of(inst.givens.begin(), inst.givens.end(), [](auto g) { return g == 1; }));
  EXPECT_THROW(sudoku4_dataset(1, 16, 1), std::invalid_argument);
}

TEST(Matching, PerfectMatchingCounts) {
  EXPECT_EQ(perfect_matchings(2, 2).size(), 2u);
  EXPECT_EQ(perfect_matchings(2, 3).size(), 3u);
  EXPECT_EQ(perfect_matchings(2, 4).size(), 5u);
  EXPECT_EQ(matching_cnf(2, 3).cnf.num_vars, 7u);
  EXPECT_THROW(matching_cnf(3, 3), std::invalid_argument);
}

TEST(Matching, EveryModelCoversHalfTheVertices) {
  for (const auto& m : perfect_matchings(2, 4)) EXPECT_EQ(std::count(m.begin(), m.end(), 1), 4);
}

TEST(Matching, EdgeLayout) {
  auto edges = grid_edges(2, 3);
  ASSERT_EQ(edges.size(), 7u);
  EXPECT_EQ(edges[0].u, 0u);
  EXPECT_EQ(edges[0].v, 1u);
  EXPECT_EQ(edges[4].u, 0u);  // first vertical edge
  EXPECT_EQ(edges[4].v, 3u);
}

TEST(Matching, TieBreakPicksLexicographicallyLeast) {
  const auto edges = grid_edges(2, 2);
  const auto ms = perfect_matchings(2, 2);
  auto best = min_cost_matching(ms, edges, {5, 5, 5, 5});
  EXPECT_EQ(best, *std::min_element(ms.begin(), ms.end()));
}

TEST(MatchingDataset, LabelsAreMinimalModels) {
  const auto enc = matching_cnf(2, 4);
  const auto edges = grid_edges(2, 4);
  const auto ms = perfect_matchings(2, 4);
  for (const auto& inst : matching_dataset(2, 4, 200, 9)) {
    EXPECT_TRUE(enc.cnf.satisfied_by(inst.target));
    std::vector<int> digits(inst.features.begin(), inst.features.end());
    const double label_cost = matching_cost(inst.target, edges, digits);
    for (const auto& m : ms) EXPECT_LE(label_cost, matching_cost(m, edges, digits));
  }
  EXPECT_EQ(matching_dataset(2, 4, 10, 1), matching_dataset(2, 4, 10, 1));
}

TEST(RandomCnf, Properties) {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    auto cnf = random_cnf(6, 10, 3, seed);
    EXPECT_EQ(cnf, random_cnf(6, 10, 3, seed));
    std::set<std::vector<int>> seen;
    for (const auto& c : cnf.clauses) {
      EXPECT_EQ(check_clause(c.literals), ClauseDefect::kNone);
      EXPECT_LE(c.literals.size(), 3u);
      std::vector<int> key;
      for (const auto& l : c.literals) key.push_back(l.dimacs());
      std::sort(key.begin(), key.end());
      EXPECT_TRUE(seen.insert(key).second);
    }
    // Satisfiable iff the oracle finds a model iff the compiled circuit is not FALSE.
    NodeStore store(VariableOrder::natural(6));
    EXPECT_EQ(compile_cnf(store, cnf) != kFalse, !oracle::enumerate_models(cnf).worlds.empty());
  }
  EXPECT_THROW(random_cnf(3, 1, 4, 0), std::invalid_argument);
}

}  // namespace
}  // namespace semstr
