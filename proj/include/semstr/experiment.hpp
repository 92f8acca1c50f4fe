#pragma once

#include "semstr/io.hpp"

namespace semstr {

/// Initial grouping of a task's clauses: one group per clause, or the task's
/// named units (Sudoku cell/row/column/block, matching vertex).
enum class Granularity { kClause, kTask };

struct ExperimentConfig {
  TaskKind task = TaskKind::kSudoku4;
  std::size_t rows = 2;  // matching grid
  std::size_t cols = 4;
  std::size_t train_size = 2000;
  std::size_t test_size = 500;
  std::size_t holes = 6;  // Sudoku blanks
  Granularity granularity = Granularity::kClause;
  OrderStrategy order = OrderStrategy::kDegreeDesc;
  RunConfig run;  // run.seed drives data, init, shuffling and MI sampling
};

struct ExperimentResult {
  Model model;
  History history;
  Metrics test;
  std::vector<ConstraintGroup> groups;
  std::vector<Var> order;
  std::size_t num_vars = 0;
};

inline TaskEncoding task_encoding(const ExperimentConfig& cfg) {
  switch (cfg.task) {
    case TaskKind::kSudoku4: return sudoku4_cnf();
    case TaskKind::kMatching: return matching_cnf(cfg.rows, cfg.cols);
    case TaskKind::kGeneric: break;
  }
  throw std::invalid_argument("experiment: task must be sudoku4 or matching");
}

inline std::pair<std::vector<Instance>, std::vector<Instance>> task_datasets(const ExperimentConfig& cfg) {
  const std::uint64_t s = cfg.run.seed;
  const std::uint64_t train_seed = s * 0x9E3779B97F4A7C15ULL + 1;
  const std::uint64_t test_seed = s * 0x9E3779B97F4A7C15ULL + 2;
  if (cfg.task == TaskKind::kSudoku4)
    return {sudoku4_dataset(cfg.train_size, cfg.holes, train_seed),
            sudoku4_dataset(cfg.test_size, cfg.holes, test_seed)};
  return {matching_dataset(cfg.rows, cfg.cols, cfg.train_size, train_seed),
          matching_dataset(cfg.rows, cfg.cols, cfg.test_size, test_seed)};
}

inline ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  const auto enc = task_encoding(cfg);
  auto [train_set, test_set] = task_datasets(cfg);
  auto order = std::make_shared<const VariableOrder>(build_order(enc.cnf, cfg.order, cfg.run.seed));
  NodeStore store(order);
  auto groups = cfg.granularity == Granularity::kClause ? singleton_groups(enc.cnf) : enc.constraint_groups();

  ExperimentResult result;
  result.num_vars = enc.cnf.num_vars;
  result.model = Model::create(train_set.front().features.size(), cfg.run.hidden, enc.cnf.num_vars,
                               cfg.run.seed * 0x2545F4914F6CDD1DULL + 3);
  result.history = train(result.model, train_set, enc.cnf, cfg.task, groups, store, cfg.run, &test_set);
  result.test = evaluate(result.model, test_set, enc.cnf, cfg.task);
  result.groups = std::move(groups);
  result.order.assign(order->sequence().begin(), order->sequence().end());
  return result;
}

namespace io {

inline TaskKind parse_task(const std::string& name) {
  if (name == "sudoku4") return TaskKind::kSudoku4;
  if (name == "matching") return TaskKind::kMatching;
  throw std::invalid_argument("unknown task '" + name + "' (expected sudoku4 or matching)");
}

inline std::string task_name(TaskKind kind) {
  switch (kind) {
    case TaskKind::kSudoku4: return "sudoku4";
    case TaskKind::kMatching: return "matching";
    case TaskKind::kGeneric: break;
  }
  return "generic";
}

/// Reads a run configuration. `seed` is mandatory; every other key has a
/// default. Unknown keys are rejected so typos do not silently fall back.
inline ExperimentConfig experiment_from_json(const json& j) {
  static const std::vector<std::string> known = {
      "task", "rows", "cols", "train_size", "test_size", "holes", "granularity", "order", "seed",
      "epochs", "batch_size", "learning_rate", "lambda", "optimizer", "momentum", "hidden", "eps",
      "strengthen", "eta", "kappa", "node_cap", "max_rounds", "mi_batch"};
  for (auto it = j.begin(); it != j.end(); ++it)
    if (std::find(known.begin(), known.end(), it.key()) == known.end())
      throw std::invalid_argument("unknown config key '" + it.key() + "'");
  if (!j.contains("seed")) throw std::invalid_argument("config requires an explicit 'seed'");

  ExperimentConfig c;
  if (j.contains("task")) c.task = parse_task(j["task"].get<std::string>());
  auto get = [&](const char* key, auto& field) {
    if (j.contains(key)) field = j[key].get<std::remove_reference_t<decltype(field)>>();
  };
  get("rows", c.rows);
  get("cols", c.cols);
  get("train_size", c.train_size);
  get("test_size", c.test_size);
  get("holes", c.holes);
  if (j.contains("granularity")) {
    const auto g = j["granularity"].get<std::string>();
    if (g == "clause") c.granularity = Granularity::kClause;
    else if (g == "task" || g == "unit") c.granularity = Granularity::kTask;
    else throw std::invalid_argument("granularity must be 'clause' or 'task'");
  }
  if (j.contains("order")) {
    auto s = parse_order_strategy(j["order"].get<std::string>());
    if (!s) throw std::invalid_argument("order must be natural, degree_desc or random");
    c.order = *s;
  }
  auto& r = c.run;
  get("seed", r.seed);
  get("epochs", r.epochs);
  get("batch_size", r.batch_size);
  get("learning_rate", r.learning_rate);
  get("lambda", r.lambda);
  get("momentum", r.momentum);
  get("hidden", r.hidden);
  get("eps", r.eps);
  get("strengthen", r.strengthen);
  if (j.contains("optimizer")) {
    const auto o = j["optimizer"].get<std::string>();
    if (o == "sgd") r.optimizer = Optimizer::kSgd;
    else if (o == "momentum" || o == "sgd_momentum") r.optimizer = Optimizer::kMomentum;
    else throw std::invalid_argument("optimizer must be 'sgd' or 'momentum'");
  }
  get("eta", r.schedule.eta);
  get("kappa", r.schedule.kappa);
  get("node_cap", r.schedule.node_cap);
  get("max_rounds", r.schedule.max_rounds);
  get("mi_batch", r.schedule.mi_batch);
  r.validate();
  return c;
}

inline json to_json(const ExperimentConfig& c) {
  const auto& r = c.run;
  return json{{"task", task_name(c.task)},
              {"rows", c.rows},
              {"cols", c.cols},
              {"train_size", c.train_size},
              {"test_size", c.test_size},
              {"holes", c.holes},
              {"granularity", c.granularity == Granularity::kClause ? "clause" : "task"},
              {"order", c.order == OrderStrategy::kNatural      ? "natural"
                        : c.order == OrderStrategy::kDegreeDesc ? "degree_desc"
                                                                : "random"},
              {"seed", r.seed},
              {"epochs", r.epochs},
              {"batch_size", r.batch_size},
              {"learning_rate", r.learning_rate},
              {"lambda", r.lambda},
              {"optimizer", r.optimizer == Optimizer::kSgd ? "sgd" : "momentum"},
              {"momentum", r.momentum},
              {"hidden", r.hidden},
              {"eps", r.eps},
              {"strengthen", r.strengthen},
              {"eta", r.schedule.eta},
              {"kappa", r.schedule.kappa},
              {"node_cap", r.schedule.node_cap},
              {"max_rounds", r.schedule.max_rounds},
              {"mi_batch", r.schedule.mi_batch}};
}

}  // namespace io
}  // namespace semstr
