// Acceptance checks. Prints one PASS/FAIL line per criterion and exits with
// the number of failures.

#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>

#include "semstr/semstr.hpp"

using namespace semstr;
using io::json;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

ProbVector random_probs(std::size_t n, std::mt19937_64& rng, double lo = 0.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  ProbVector p(n);
  for (auto& x : p) x = u(rng);
  return p;
}

// A random formula with 4..15 variables, 1..20 clauses and width up to 4.
Cnf random_small_cnf(std::mt19937_64& rng, std::size_t max_vars = 15, std::size_t max_clauses = 20) {
  std::uniform_int_distribution<std::size_t> nv(4, max_vars), nc(1, max_clauses);
  std::uniform_int_distribution<std::uint64_t> seed;
  const std::size_t vars = nv(rng);
  return random_cnf(vars, nc(rng), std::min<std::size_t>(4, vars), seed(rng));
}

double rel_err(double a, double b, double floor) {
  return std::abs(a - b) / std::max({floor, std::abs(a), std::abs(b)});
}

std::string fmt(double x) {
  std::ostringstream s;
  s.precision(3);
  s << x;
  return s.str();
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void report(int id, const char* name, const std::function<Outcome()>& check) {
  const auto t0 = Clock::now();
  Outcome o;
  try {
    o = check();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  if (!o.pass) ++failures;
  std::cout << (o.pass ? "PASS" : "FAIL") << "  criterion " << id << ": " << name << ". " << o.detail << " ["
            << fmt(seconds_since(t0)) << " s]" << std::endl;
}

Outcome wmc_oracle() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(101);
  double worst = 0.0;
  for (int k = 0; k < 500; ++k) {
    auto cnf = random_small_cnf(rng);
    NodeStore store(build_order(cnf, OrderStrategy::kSeededRandom, k));
    const Handle root = compile_cnf(store, cnf);
    const auto models = oracle::enumerate_models(cnf);
    const FlatCircuit flat(store, root);
    for (int j = 0; j < 20; ++j) {
      auto p = random_probs(cnf.num_vars, rng);
      worst = std::max(worst, std::abs(flat.probability(p) - oracle::exact_probability(models, p)));
    }
  }
  const double t = seconds_since(t0);
  return {worst <= 1e-9 && t < 60.0, "max |wmc - exact| = " + fmt(worst) + " over 500 x 20, " + fmt(t) + " s"};
}

Outcome example_pair() {
  const Cnf cnf{3, {make_clause({Literal{2, true}, Literal{0, false}}), make_clause({Literal{2, true}, Literal{1, false}})}};
  const ProbVector p{0.3, 0.5, 0.2};
  NodeStore store(VariableOrder::natural(3));
  const Handle b1 = compile_clause(store, cnf.clauses[0]);
  const Handle b2 = compile_clause(store, cnf.clauses[1]);
  const double p1 = wmc(store, b1, p), p2 = wmc(store, b2, p);
  const double p12 = wmc(store, conjoin(store, b1, b2), p);
  const double mi = pair_mi(store, b1, b2, p);
  const auto m1 = oracle::enumerate_models(oracle::sub_cnf(cnf, {0}));
  const auto m2 = oracle::enumerate_models(oracle::sub_cnf(cnf, {1}));
  const double o12 = oracle::exact_probability(oracle::intersect(m1, m2), p);
  const double omi = oracle::exact_mi(m1, m2, p);
  const bool ok = std::abs(p1 - 0.76) <= 1e-12 && std::abs(p2 - 0.60) <= 1e-12 && std::abs(p12 - o12) <= 1e-6 &&
                  std::abs(p12 - 0.48) <= 1e-6 && std::abs(mi - omi) <= 1e-6 && std::abs(mi - 0.00649) <= 1e-5;
  std::ostringstream d;
  d.precision(15);
  d << "P1 = " << p1 << ", P2 = " << p2 << ", P12 = " << p12 << " (oracle " << o12 << "), MI = " << mi
    << " nats (oracle " << omi << ")";
  return {ok, d.str()};
}

Outcome conjoin_semantics() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(303);
  int bad_models = 0, bad_prob = 0;
  for (int k = 0; k < 200; ++k) {
    std::uniform_int_distribution<std::size_t> nv(4, 15), nc(1, 10);
    std::uniform_int_distribution<std::uint64_t> seed;
    const std::size_t vars = nv(rng);
    const std::size_t width = std::min<std::size_t>(4, vars);
    auto f = random_cnf(vars, nc(rng), width, seed(rng));
    auto g = random_cnf(vars, nc(rng), width, seed(rng));
    NodeStore store(build_order(f, OrderStrategy::kSeededRandom, k));
    const Handle a = compile_cnf(store, f), b = compile_cnf(store, g);
    const Handle ab = conjoin(store, a, b);
    const auto expected = oracle::intersect(oracle::enumerate_models(f), oracle::enumerate_models(g));
    if (!(oracle::enumerate_models(store, ab, vars) == expected)) ++bad_models;
    for (int j = 0; j < 5; ++j) {
      auto p = random_probs(vars, rng);
      if (wmc(store, ab, p) > std::min(wmc(store, a, p), wmc(store, b, p)) + 1e-12) ++bad_prob;
    }
  }
  const double t = seconds_since(t0);
  return {bad_models == 0 && bad_prob == 0 && t < 60.0,
          std::to_string(bad_models) + " model-set mismatches, " + std::to_string(bad_prob) +
              " probability violations over 200 pairs, " + fmt(t) + " s"};
}

Outcome mi_properties() {
  std::mt19937_64 rng(404);
  double asym = 0.0, oracle_err = 0.0;
  int negative = 0, disjoint_nonzero = 0, above_entropy = 0;
  for (int k = 0; k < 200; ++k) {
    std::uniform_int_distribution<std::size_t> nv(3, 12), nc(1, 4);
    std::uniform_int_distribution<std::uint64_t> seed;
    const std::size_t vars = nv(rng);
    const std::size_t width = std::min<std::size_t>(3, vars);
    auto f = random_cnf(vars, nc(rng), width, seed(rng));
    auto g = random_cnf(vars, nc(rng), width, seed(rng));
    NodeStore store(build_order(f, OrderStrategy::kNatural));
    const Handle a = compile_cnf(store, f), b = compile_cnf(store, g);
    const auto p = random_probs(vars, rng);
    const double ab = pair_mi(store, a, b, p), ba = pair_mi(store, b, a, p);
    asym = std::max(asym, std::abs(ab - ba));
    if (ab < 0.0) ++negative;
    const double bound = std::min(binary_entropy(wmc(store, a, p)), binary_entropy(wmc(store, b, p)));
    if (ab > bound + 1e-12) ++above_entropy;
    oracle_err = std::max(oracle_err, std::abs(ab - oracle::exact_mi(oracle::enumerate_models(f),
                                                                     oracle::enumerate_models(g), p)));

    // A variable-disjoint partner: g shifted onto fresh variables.
    NodeStore wide(VariableOrder::natural(vars * 2));
    Handle fa = compile_cnf(wide, f);
    Cnf moved{vars * 2, {}};
    for (const auto& c : g.clauses) {
      Clause m = c;
      for (auto& l : m.literals) l.var += static_cast<Var>(vars);
      moved.clauses.push_back(m);
    }
    Handle gb = compile_cnf(wide, moved);
    if (std::abs(pair_mi(wide, fa, gb, random_probs(vars * 2, rng))) > 1e-12) ++disjoint_nonzero;
  }
  const bool ok = asym <= 1e-12 && negative == 0 && disjoint_nonzero == 0 && above_entropy == 0 && oracle_err <= 1e-9;
  return {ok, "asymmetry " + fmt(asym) + ", negatives " + std::to_string(negative) + ", disjoint nonzero " +
                  std::to_string(disjoint_nonzero) + ", above entropy bound " + std::to_string(above_entropy) +
                  ", max oracle error " + fmt(oracle_err) + " over 200 pairs"};
}

Outcome gradients() {
  std::mt19937_64 rng(505);
  // WMC is multilinear in p, so a central difference is exact up to rounding
  // for any step; a wide step keeps the rounding far below the tolerance.
  double worst_wmc = 0.0;
  for (int k = 0; k < 100; ++k) {
    auto cnf = random_small_cnf(rng, 12, 12);
    NodeStore store(build_order(cnf, OrderStrategy::kDegreeDesc));
    const Handle root = compile_cnf(store, cnf);
    auto p = random_probs(cnf.num_vars, rng, 0.05, 0.95);
    const auto g = wmc_grad(store, root, p);
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double h = 1e-3, x = p[i];
      p[i] = x + h;
      const double up = wmc(store, root, p);
      p[i] = x - h;
      const double down = wmc(store, root, p);
      p[i] = x;
      worst_wmc = std::max(worst_wmc, rel_err(g.gradient[i], (up - down) / (2 * h), 1e-8));
    }
  }

  double worst_train = 0.0;
  for (int k = 0; k < 100; ++k) {
    Cnf cnf;
    std::vector<World> worlds;
    do {
      cnf = random_small_cnf(rng, 8, 8);
      worlds = oracle::enumerate_models(cnf).worlds;
    } while (worlds.empty());
    const std::size_t n = cnf.num_vars, inputs = 4;
    std::uniform_int_distribution<std::size_t> pick(0, worlds.size() - 1);
    std::normal_distribution<double> gauss;
    std::bernoulli_distribution given(0.2);
    std::vector<Instance> data;
    for (int e = 0; e < 3; ++e) {
      Instance inst;
      for (std::size_t i = 0; i < inputs; ++i) inst.features.push_back(gauss(rng));
      const World w = worlds[pick(rng)];
      for (std::size_t v = 0; v < n; ++v) {
        inst.target.push_back((w >> v) & 1u);
        inst.givens.push_back(given(rng));
      }
      data.push_back(std::move(inst));
    }
    NodeStore store(build_order(cnf, OrderStrategy::kNatural));
    auto groups = singleton_groups(cnf);
    compile_groups(store, cnf, groups);
    if (k % 2 == 1) {
      StrengthenConfig cfg;
      cfg.kappa = 3;
      strengthen_round(groups, cnf, store, {random_probs(n, rng)}, cfg);
    }
    const auto circuits = flatten_groups(store, groups);
    Model model = Model::create(inputs, k % 3 == 0 ? 0 : 3, n, k);
    const double lambda = 0.5 + (k % 4) * 0.25;
    std::vector<std::size_t> idx{0, 1, 2};
    std::vector<double> grad(model.num_params());
    batch_gradient(model, data, idx, circuits, lambda, kDefaultLossEps, grad);
    std::vector<double> scratch(model.num_params());
    auto objective = [&](const Model& m) {
      auto t = batch_gradient(m, data, idx, circuits, lambda, kDefaultLossEps, scratch);
      return t.ce + lambda * t.sl;
    };
    for (std::size_t i = 0; i < model.num_params(); ++i) {
      Model m = model;
      const double h = 1e-5;
      m.params[i] = model.params[i] + h;
      const double up = objective(m);
      m.params[i] = model.params[i] - h;
      const double down = objective(m);
      worst_train = std::max(worst_train, rel_err(grad[i], (up - down) / (2 * h), 1e-6));
    }
  }
  return {worst_wmc <= 1e-5 && worst_train <= 1e-4,
          "max relative error: wmc_grad " + fmt(worst_wmc) + ", training gradient " + fmt(worst_train) +
              " over 100 cases each"};
}

Outcome zero_loss() {
  std::mt19937_64 rng(606);
  int mismatches = 0;
  std::size_t checked = 0;
  for (int k = 0; k < 100; ++k) {
    auto cnf = random_small_cnf(rng, 10, 20);
    NodeStore store(build_order(cnf, OrderStrategy::kDegreeDesc));
    auto groups = singleton_groups(cnf);
    compile_groups(store, cnf, groups);
    const auto circuits = flatten_groups(store, groups);
    std::vector<double> unused;
    for (World w = 0; w < (World{1} << cnf.num_vars); ++w) {
      ProbVector p(cnf.num_vars);
      for (std::size_t v = 0; v < p.size(); ++v) p[v] = (w >> v) & 1u ? 1.0 : 0.0;
      const double loss = accumulate_semantic_loss(circuits, p, 0.0, 0.0, unused);
      if ((loss == 0.0) != cnf.satisfied_by(w)) ++mismatches;
      ++checked;
    }
  }
  return {mismatches == 0,
          std::to_string(mismatches) + " mismatches over " + std::to_string(checked) + " deterministic predictions"};
}

Outcome exactness_monotone() {
  std::mt19937_64 rng(707);
  std::size_t merges = 0, checks = 0, increases = 0;
  double worst = 0.0;
  for (int k = 0; k < 100; ++k) {
    Cnf cnf;
    oracle::ModelSet models;
    do {
      cnf = random_small_cnf(rng);
      models = oracle::enumerate_models(cnf);
    } while (models.worlds.empty());
    NodeStore store(build_order(cnf, OrderStrategy::kDegreeDesc));
    auto groups = singleton_groups(cnf);
    compile_groups(store, cnf, groups);
    std::vector<ProbVector> ps;
    for (int j = 0; j < 20; ++j) ps.push_back(random_probs(cnf.num_vars, rng, 0.05, 0.95));
    std::vector<double> log_exact;
    for (const auto& p : ps) log_exact.push_back(std::log(oracle::exact_probability(models, p)));
    auto gaps = [&] {
      std::vector<double> out;
      const auto circuits = flatten_groups(store, groups);
      std::vector<double> unused;
      for (std::size_t j = 0; j < ps.size(); ++j)
        out.push_back(std::abs(-accumulate_semantic_loss(circuits, ps[j], 0.0, 0.0, unused) - log_exact[j]));
      return out;
    };
    StrengthenConfig cfg;  // kappa = 1: one merge per round
    auto before = gaps();
    for (std::size_t round = 0; groups.size() > 1; ++round) {
      auto log = strengthen_round(groups, cnf, store, ps, cfg, round);
      if (log.merged.empty()) break;
      ++merges;
      auto after = gaps();
      for (std::size_t j = 0; j < ps.size(); ++j, ++checks) {
        const double growth = after[j] - before[j];
        if (growth > 1e-9) {
          ++increases;
          worst = std::max(worst, growth);
        }
      }
      before = std::move(after);
    }
  }
  return {increases == 0, std::to_string(increases) + " of " + std::to_string(checks) + " checks (" +
                              std::to_string(merges) + " merges) increased the gap; largest increase " +
                              fmt(worst) + " nats"};
}

Outcome schedule_example() {
  // b1..b5 with b1-b2-b3 chained by shared variables and b4-b5 sharing one.
  const Cnf cnf{6,
                {make_clause({Literal{0, true}, Literal{1, true}}), make_clause({Literal{1, false}, Literal{2, true}}),
                 make_clause({Literal{2, true}, Literal{3, true}}), make_clause({Literal{4, true}, Literal{5, false}}),
                 make_clause({Literal{4, true}, Literal{5, true}})}};
  const auto groups = singleton_groups(cnf);
  auto ranked = rank_pairs_with(groups, [](const ConstraintGroup& a, const ConstraintGroup& b) {
    const double hi = 0.9, mid = 0.5, lo = 0.1;
    const double v = (a.id == 0 && b.id == 1) ? hi : (a.id == 1 && b.id == 2) ? mid : lo;
    return MiEstimate{a.id, b.id, v, 1};
  });
  const auto plan = plan_merges(ranked.scored, 2);
  const bool ok = plan.components == std::vector<std::vector<GroupId>>{{0, 1, 2}};
  std::string got;
  for (const auto& c : plan.components) {
    got += "{";
    for (std::size_t i = 0; i < c.size(); ++i) got += (i ? "," : "") + std::string("b") + std::to_string(c[i] + 1);
    got += "}";
  }
  return {ok, "plan " + got};
}

// lambda is picked from the coarse grid {0.1, 0.5, 1.0} on these five seeds.
// Every other setting is shared by all three variants.
json sudoku_config() {
  return json{{"task", "sudoku4"},       {"train_size", 2000}, {"test_size", 500},  {"holes", 6},
              {"epochs", 10},            {"batch_size", 32},   {"learning_rate", 0.05},
              {"lambda", 1.0},           {"eta", 1},           {"kappa", 50},      {"max_rounds", 10},
              {"mi_batch", 16}};
}

json matching_config() {
  return json{{"task", "matching"}, {"rows", 2},     {"cols", 4},      {"train_size", 2000}, {"test_size", 500},
              {"epochs", 10},       {"batch_size", 32}, {"learning_rate", 0.05}, {"lambda", 0.1},
              {"eta", 1},           {"kappa", 50},  {"max_rounds", 10}, {"mi_batch", 16}};
}

enum class Variant { kNone, kTnorm, kStrengthened };

json variant_config(json base, Variant v, std::uint64_t seed) {
  base["seed"] = seed;
  if (v == Variant::kNone) {
    base["lambda"] = 0.0;
    base["strengthen"] = false;
  } else if (v == Variant::kTnorm) {
    base["strengthen"] = false;
  }
  return base;
}

std::string first_history;  // strengthened Sudoku, seed 0, for the determinism check
json first_config;

Outcome directional(const json& base, bool exact_metric, double min_gain, bool keep_history) {
  const char* names[] = {"none", "t-norm", "strengthened"};
  double mean[3] = {0, 0, 0};
  double slowest = 0.0;
  const int seeds = 5;
  std::ostringstream per_seed;
  for (int v = 0; v < 3; ++v) {
    per_seed << names[v] << " [";
    for (int s = 0; s < seeds; ++s) {
      const auto cfg_json = variant_config(base, static_cast<Variant>(v), s);
      const auto t0 = Clock::now();
      const auto result = run_experiment(io::experiment_from_json(cfg_json));
      slowest = std::max(slowest, seconds_since(t0));
      const double score = exact_metric ? result.test.exact : result.test.consistent;
      mean[v] += score / seeds;
      per_seed << (s ? " " : "") << fmt(score);
      if (keep_history && v == 2 && s == 0) {
        first_history = io::history_jsonl(result.history);
        first_config = cfg_json;
      }
    }
    per_seed << "] ";
  }
  const bool ok = mean[2] >= mean[1] && mean[1] >= mean[0] && (mean[2] - mean[1]) >= min_gain && slowest <= 600.0;
  std::ostringstream d;
  d.precision(4);
  d << (exact_metric ? "Exact" : "Consistent") << " means: none " << mean[0] << ", t-norm " << mean[1]
    << ", strengthened " << mean[2] << " (gain " << 100.0 * (mean[2] - mean[1]) << " points); slowest run "
    << fmt(slowest) << " s; " << per_seed.str();
  return {ok, d.str()};
}

Outcome desk_scale() {
  const auto sudoku = directional(sudoku_config(), true, 0.02, true);
  const auto matching = directional(matching_config(), false, 0.0, false);
  return {sudoku.pass && matching.pass, "Sudoku: " + sudoku.detail + "| Matching 2x4: " + matching.detail};
}

Outcome determinism() {
  json cfg = first_config;
  std::string reference = first_history;
  if (cfg.is_null()) {
    cfg = variant_config(sudoku_config(), Variant::kStrengthened, 0);
    reference = io::history_jsonl(run_experiment(io::experiment_from_json(cfg)).history);
  }
  const auto again = io::history_jsonl(run_experiment(io::experiment_from_json(cfg)).history);
  return {again == reference && !again.empty(),
          again == reference ? "history JSON identical (" + std::to_string(again.size()) + " bytes)"
                             : "history JSON differs"};
}

}  // namespace

int main(int argc, char** argv) {
  // `--quick` skips the training experiments (criteria 9 and 10).
  const bool quick = argc > 1 && std::string(argv[1]) == "--quick";
  report(1, "WMC matches enumeration oracle", wmc_oracle);
  report(2, "two-constraint example values", example_pair);
  report(3, "conjoin equals model-set intersection", conjoin_semantics);
  report(4, "mutual information properties", mi_properties);
  report(5, "analytic gradients match finite differences", gradients);
  report(6, "zero semantic loss iff the prediction is a model", zero_loss);
  report(7, "merges never increase the factorization gap", exactness_monotone);
  report(8, "transitive merge plan from stub MI", schedule_example);
  if (!quick) {
    report(9, "desk-scale ordering none <= t-norm <= strengthened", desk_scale);
    report(10, "identical config and seed give identical history", determinism);
  }
  std::cout << (failures == 0 ? "ALL PASS" : std::to_string(failures) + " FAILED") << std::endl;
  return failures;
}
