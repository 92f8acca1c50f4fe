#pragma once

#include <cmath>
#include <numeric>
#include <random>

#include "semstr/loss.hpp"
#include "semstr/strengthen.hpp"
#include "semstr/tasks.hpp"

namespace semstr {

enum class TaskKind { kGeneric, kSudoku4, kMatching };
enum class Optimizer { kSgd, kMomentum };

/// Affine map (optionally through one tanh hidden layer) from features to one
/// logit per output variable. Parameters live in one flat vector laid out as
/// [w1 (hidden x inputs), b1 (hidden), w2 (outputs x width), b2 (outputs)],
/// where width is `hidden` or, for a linear model, `inputs`.
struct Model {
  std::size_t inputs = 0;
  std::size_t hidden = 0;
  std::size_t outputs = 0;
  std::vector<double> params;

  static Model create(std::size_t inputs, std::size_t hidden, std::size_t outputs, std::uint64_t seed) {
    Model m{inputs, hidden, outputs, {}};
    m.params.assign(m.num_params(), 0.0);
    std::mt19937_64 rng(seed);
    auto init = [&](std::size_t offset, std::size_t count, std::size_t fan_in) {
      std::normal_distribution<double> dist(0.0, 1.0 / std::sqrt(static_cast<double>(fan_in)));
      for (std::size_t i = 0; i < count; ++i) m.params[offset + i] = dist(rng);
    };
    if (hidden > 0) init(0, hidden * inputs, inputs);
    init(m.w2_offset(), outputs * m.width(), m.width());
    return m;
  }

  std::size_t width() const { return hidden > 0 ? hidden : inputs; }
  std::size_t b1_offset() const { return hidden * inputs; }
  std::size_t w2_offset() const { return b1_offset() + hidden; }
  std::size_t b2_offset() const { return w2_offset() + outputs * width(); }
  std::size_t num_params() const { return b2_offset() + outputs; }

  struct Activations {
    std::vector<double> hidden;  // tanh outputs; empty for a linear model
    std::vector<double> logits;
    std::vector<double> probs;
  };

  Activations forward(std::span<const double> x) const {
    if (x.size() != inputs) throw std::invalid_argument("model: feature size mismatch");
    Activations a;
    std::span<const double> layer_in = x;
    if (hidden > 0) {
      a.hidden.resize(hidden);
      for (std::size_t h = 0; h < hidden; ++h) {
        double s = params[b1_offset() + h];
        const double* row = &params[h * inputs];
        for (std::size_t i = 0; i < inputs; ++i) s += row[i] * x[i];
        a.hidden[h] = std::tanh(s);
      }
      layer_in = a.hidden;
    }
    a.logits.resize(outputs);
    a.probs.resize(outputs);
    const std::size_t w = width();
    for (std::size_t o = 0; o < outputs; ++o) {
      double s = params[b2_offset() + o];
      const double* row = &params[w2_offset() + o * w];
      for (std::size_t i = 0; i < w; ++i) s += row[i] * layer_in[i];
      a.logits[o] = s;
      a.probs[o] = 1.0 / (1.0 + std::exp(-s));
    }
    return a;
  }

  /// Accumulates d loss / d params into `grad` given d loss / d logits.
  void backward(std::span<const double> x, const Activations& a, std::span<const double> dlogits,
                std::span<double> grad) const {
    const std::size_t w = width();
    std::span<const double> layer_in = hidden > 0 ? std::span<const double>(a.hidden) : x;
    std::vector<double> dhidden(hidden, 0.0);
    for (std::size_t o = 0; o < outputs; ++o) {
      const double d = dlogits[o];
      if (d == 0.0) continue;
      grad[b2_offset() + o] += d;
      double* grow = &grad[w2_offset() + o * w];
      const double* prow = &params[w2_offset() + o * w];
      for (std::size_t i = 0; i < w; ++i) {
        grow[i] += d * layer_in[i];
        if (hidden > 0) dhidden[i] += d * prow[i];
      }
    }
    for (std::size_t h = 0; h < hidden; ++h) {
      const double d = dhidden[h] * (1.0 - a.hidden[h] * a.hidden[h]);
      if (d == 0.0) continue;
      grad[b1_offset() + h] += d;
      double* grow = &grad[h * inputs];
      for (std::size_t i = 0; i < inputs; ++i) grow[i] += d * x[i];
    }
  }
};

/// Model probabilities with the input-given outputs replaced by their known
/// 0/1 values.
inline ProbVector clamp_givens(const ProbVector& probs, const Instance& inst) {
  ProbVector q = probs;
  for (std::size_t i = 0; i < q.size(); ++i)
    if (inst.givens[i]) q[i] = inst.target[i] ? 1.0 : 0.0;
  return q;
}

struct LossTerms {
  double ce = 0.0;
  double sl = 0.0;
};

/// Per-example objective ce + lambda * sl and its gradient, added into
/// `grad` scaled by `scale`. Cross-entropy covers the outputs not fixed by
/// the input; the semantic loss sees all outputs with givens clamped, so the
/// clamped entries carry no gradient.
inline LossTerms example_gradient(const Model& model, const Instance& inst,
                                  std::span<const FlatCircuit> circuits, double lambda, double eps,
                                  double scale, std::span<double> grad) {
  const auto act = model.forward(inst.features);
  LossTerms terms;
  std::vector<double> dlogits(model.outputs, 0.0);
  for (std::size_t i = 0; i < model.outputs; ++i) {
    if (inst.givens[i]) continue;
    const double z = act.logits[i];
    const double y = inst.target[i];
    terms.ce += std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z))) - y * z;
    dlogits[i] = act.probs[i] - y;
  }
  if (lambda != 0.0 && !circuits.empty()) {
    const ProbVector q = clamp_givens(act.probs, inst);
    std::vector<double> dq(model.outputs, 0.0);
    terms.sl = accumulate_semantic_loss(circuits, q, eps, 1.0, dq);
    for (std::size_t i = 0; i < model.outputs; ++i)
      if (!inst.givens[i]) dlogits[i] += lambda * dq[i] * act.probs[i] * (1.0 - act.probs[i]);
  } else if (!circuits.empty()) {
    const ProbVector q = clamp_givens(act.probs, inst);
    std::vector<double> unused;
    terms.sl = accumulate_semantic_loss(circuits, q, eps, 0.0, unused);
  }
  for (auto& d : dlogits) d *= scale;
  model.backward(inst.features, act, dlogits, grad);
  return terms;
}

/// Mean objective over `batch` and its gradient (overwrites `grad`).
inline LossTerms batch_gradient(const Model& model, const std::vector<Instance>& data,
                                std::span<const std::size_t> batch, std::span<const FlatCircuit> circuits,
                                double lambda, double eps, std::span<double> grad) {
  std::fill(grad.begin(), grad.end(), 0.0);
  LossTerms total;
  const double scale = 1.0 / static_cast<double>(batch.size());
  for (auto idx : batch) {
    auto t = example_gradient(model, data[idx], circuits, lambda, eps, scale, grad);
    total.ce += t.ce * scale;
    total.sl += t.sl * scale;
  }
  return total;
}

struct Metrics {
  double exact = 0.0;
  double consistent = 0.0;
  double label_acc = 0.0;
};

/// Sudoku: per-cell argmax over the four value variables, givens forced.
/// Otherwise each output is thresholded at 0.5.
inline std::vector<std::uint8_t> decode(TaskKind kind, const ProbVector& probs, const Instance& inst) {
  std::vector<std::uint8_t> y(probs.size(), 0);
  if (kind == TaskKind::kSudoku4) {
    using namespace sudoku4;
    for (int r = 0; r < kSize; ++r)
      for (int c = 0; c < kSize; ++c) {
        int best = 0;
        if (inst.givens[var(r, c, 0)]) {
          for (int v = 0; v < kSize; ++v)
            if (inst.target[var(r, c, v)]) best = v;
        } else {
          for (int v = 1; v < kSize; ++v)
            if (probs[var(r, c, v)] > probs[var(r, c, best)]) best = v;
        }
        y[var(r, c, best)] = 1;
      }
    return y;
  }
  for (std::size_t i = 0; i < probs.size(); ++i)
    y[i] = inst.givens[i] ? inst.target[i] : (probs[i] >= 0.5 ? 1 : 0);
  return y;
}

/// Exact: prediction equals the label. Consistent: prediction is a model of
/// the formula.
inline Metrics score_predictions(const std::vector<std::vector<std::uint8_t>>& predictions,
                                 const std::vector<Instance>& data, const Cnf& cnf) {
  Metrics m;
  if (data.empty()) return m;
  std::size_t bits = 0, correct_bits = 0;
  for (std::size_t k = 0; k < data.size(); ++k) {
    const auto& pred = predictions[k];
    if (pred == data[k].target) m.exact += 1.0;
    if (cnf.satisfied_by(pred)) m.consistent += 1.0;
    for (std::size_t i = 0; i < pred.size(); ++i) correct_bits += pred[i] == data[k].target[i];
    bits += pred.size();
  }
  m.exact /= static_cast<double>(data.size());
  m.consistent /= static_cast<double>(data.size());
  m.label_acc = static_cast<double>(correct_bits) / static_cast<double>(bits);
  return m;
}

inline Metrics evaluate(const Model& model, const std::vector<Instance>& data, const Cnf& cnf, TaskKind kind) {
  std::vector<std::vector<std::uint8_t>> predictions;
  predictions.reserve(data.size());
  for (const auto& inst : data) predictions.push_back(decode(kind, model.forward(inst.features).probs, inst));
  return score_predictions(predictions, data, cnf);
}

struct RunConfig {
  std::size_t epochs = 20;
  std::size_t batch_size = 32;
  double learning_rate = 0.1;
  double lambda = 0.5;
  std::uint64_t seed = 0;
  Optimizer optimizer = Optimizer::kMomentum;
  double momentum = 0.9;
  std::size_t hidden = 0;
  double eps = kDefaultLossEps;
  bool strengthen = true;
  StrengthenConfig schedule;

  void validate() const {
    if (epochs == 0 || batch_size == 0 || !(learning_rate > 0.0))
      throw std::invalid_argument("run config: epochs, batch_size and learning_rate must be positive");
    if (!(lambda >= 0.0)) throw std::invalid_argument("run config: lambda must be >= 0");
    if (!(eps >= 0.0)) throw std::invalid_argument("run config: eps must be >= 0");
    schedule.validate();
  }
};

struct EpochRecord {
  std::size_t epoch = 0;
  double ce = 0.0;
  double sl = 0.0;
  Metrics metrics;
  std::size_t num_groups = 0;
  std::size_t circuit_nodes = 0;  // sum of group circuit sizes
  std::vector<RoundLog> rounds;   // strengthening run after this epoch
};

struct History {
  std::vector<EpochRecord> epochs;
};

class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline std::size_t total_circuit_nodes(const NodeStore& store, const std::vector<ConstraintGroup>& groups) {
  std::size_t n = 0;
  for (const auto& g : groups)
    if (g.root) n += circuit_size(store, *g.root);
  return n;
}

/// Minibatch training of ce + lambda * semantic loss. After every eta-th epoch
/// (while rounds remain) the group set is strengthened using MI estimated on
/// a seeded sample of training inputs. `groups` is updated in place.
/// Per-epoch metrics come from `eval_set` when given, else the training set.
inline History train(Model& model, const std::vector<Instance>& data, const Cnf& cnf, TaskKind kind,
                     std::vector<ConstraintGroup>& groups, NodeStore& store, const RunConfig& cfg,
                     const std::vector<Instance>* eval_set = nullptr) {
  cfg.validate();
  if (data.empty()) throw std::invalid_argument("train: empty dataset");
  compile_groups(store, cnf, groups);
  check_partition(groups, cnf);

  std::mt19937_64 shuffle_rng(cfg.seed);
  std::mt19937_64 mi_rng(cfg.seed ^ 0x5DEECE66DULL);
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<double> grad(model.num_params(), 0.0);
  std::vector<double> velocity(model.num_params(), 0.0);
  auto circuits = flatten_groups(store, groups);
  std::size_t rounds_done = 0;
  History history;

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    LossTerms epoch_terms;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      std::span<const std::size_t> batch(order.data() + start, end - start);
      auto terms = batch_gradient(model, data, batch, circuits, cfg.lambda, cfg.eps, grad);
      if (!std::isfinite(terms.ce) || !std::isfinite(cfg.lambda * terms.sl))
        throw TrainingError("non-finite loss at epoch " + std::to_string(epoch) + " (ce=" +
                            std::to_string(terms.ce) + ", sl=" + std::to_string(terms.sl) + ")");
      epoch_terms.ce += terms.ce;
      epoch_terms.sl += terms.sl;
      ++batches;
      if (cfg.optimizer == Optimizer::kMomentum) {
        for (std::size_t i = 0; i < grad.size(); ++i) {
          velocity[i] = cfg.momentum * velocity[i] + grad[i];
          model.params[i] -= cfg.learning_rate * velocity[i];
        }
      } else {
        for (std::size_t i = 0; i < grad.size(); ++i) model.params[i] -= cfg.learning_rate * grad[i];
      }
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.ce = epoch_terms.ce / static_cast<double>(batches);
    rec.sl = epoch_terms.sl / static_cast<double>(batches);

    if (cfg.strengthen && epoch % cfg.schedule.eta == 0 && rounds_done < cfg.schedule.max_rounds &&
        groups.size() > 1) {
      std::vector<ProbVector> batch;
      std::uniform_int_distribution<std::size_t> pick(0, data.size() - 1);
      for (std::size_t k = 0; k < cfg.schedule.mi_batch; ++k) {
        const auto& inst = data[pick(mi_rng)];
        batch.push_back(clamp_givens(model.forward(inst.features).probs, inst));
      }
      rec.rounds.push_back(strengthen_round(groups, cnf, store, batch, cfg.schedule, rounds_done));
      ++rounds_done;
      circuits = flatten_groups(store, groups);
    }

    rec.metrics = evaluate(model, eval_set ? *eval_set : data, cnf, kind);
    rec.num_groups = groups.size();
    rec.circuit_nodes = total_circuit_nodes(store, groups);
    history.epochs.push_back(std::move(rec));
  }
  return history;
}

}  // namespace semstr
