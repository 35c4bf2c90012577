#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "macm/dataset.hpp"
#include "macm/model.hpp"
#include "macm/util.hpp"

namespace macm {

enum class LossKind { rmse, bce };
enum class MetricKind { rmse, auc };

struct TrainConfig {
  LossKind loss = LossKind::rmse;
  double learning_rate = 0.005;
  double decay_factor = 1.0;  // 1.0 disables decay
  int decay_every = 100;
  int batch_size = 1024;
  int epochs = 5000;
  std::uint64_t seed = 0;
  std::optional<double> grad_clip;  // global-norm clip, off by default

  void validate() const {
    if (!(learning_rate > 0.0)) throw std::invalid_argument("learning_rate must be > 0");
    if (epochs < 1) throw std::invalid_argument("epochs must be >= 1");
    if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
    if (!(decay_factor > 0.0 && decay_factor <= 1.0))
      throw std::invalid_argument("decay_factor must be in (0, 1]");
    if (decay_every < 1) throw std::invalid_argument("decay_every must be >= 1");
    if (grad_clip && !(*grad_clip > 0.0)) throw std::invalid_argument("grad_clip must be > 0");
  }
};

// l = sqrt(mean (p - y)^2); gradient d l / d p_i = (p_i - y_i) / (n l), with
// the zero-loss case defined as zero gradient (removable singularity).
inline std::pair<double, std::vector<double>> rmse_loss(std::span<const double> preds,
                                                        std::span<const double> targets) {
  if (preds.empty() || preds.size() != targets.size())
    throw std::invalid_argument("rmse_loss: empty or mismatched vectors");
  const double n = static_cast<double>(preds.size());
  double ss = 0.0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const double e = preds[i] - targets[i];
    ss += e * e;
  }
  const double loss = std::sqrt(ss / n);
  std::vector<double> grad(preds.size(), 0.0);
  if (loss > 0.0)
    for (std::size_t i = 0; i < preds.size(); ++i) grad[i] = (preds[i] - targets[i]) / (n * loss);
  return {loss, std::move(grad)};
}

inline double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// Mean binary cross-entropy over logits, in the log-sum-exp stabilized form
// max(z,0) - z y + log(1 + exp(-|z|)); gradient per logit (sigma(z) - y)/n.
inline std::pair<double, std::vector<double>> bce_loss(std::span<const double> logits,
                                                       std::span<const double> targets) {
  if (logits.empty() || logits.size() != targets.size())
    throw std::invalid_argument("bce_loss: empty or mismatched vectors");
  const double n = static_cast<double>(logits.size());
  double total = 0.0;
  std::vector<double> grad(logits.size(), 0.0);
  for (std::size_t i = 0; i < logits.size(); ++i) {
    const double y = targets[i];
    if (y != 0.0 && y != 1.0)
      throw std::invalid_argument("bce_loss: targets must be 0 or 1");
    const double z = logits[i];
    total += std::max(z, 0.0) - z * y + std::log1p(std::exp(-std::abs(z)));
    grad[i] = (sigmoid(z) - y) / n;
  }
  return {total / n, std::move(grad)};
}

struct AdamState {
  std::vector<double> m, v;
  long t = 0;
  double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;

  explicit AdamState(std::size_t n) : m(n, 0.0), v(n, 0.0) {}
};

inline void adam_step(AdamState& state, std::span<double> params, std::span<const double> grads,
                      double lr) {
  if (params.size() != state.m.size() || grads.size() != state.m.size())
    throw std::invalid_argument("adam_step: length mismatch");
  ++state.t;
  const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.t));
  const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.t));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grads[i];
    if (!std::isfinite(g)) throw NumericOverflow("adam_step: non-finite gradient");
    state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * g;
    state.v[i] = state.beta2 * state.v[i] + (1.0 - state.beta2) * g * g;
    const double mhat = state.m[i] / bc1;
    const double vhat = state.v[i] / bc2;
    params[i] -= lr * mhat / (std::sqrt(vhat) + state.eps);
  }
}

struct EpochRecord {
  int epoch;
  double loss;  // mean of mini-batch losses
  double lr;
};

inline double effective_lr(const TrainConfig& cfg, int epoch) {
  return cfg.learning_rate * std::pow(cfg.decay_factor, epoch / cfg.decay_every);
}

// Mini-batch Adam training. Shuffles each epoch, keeps the last incomplete
// batch, and aborts with epoch/batch diagnostics if the loss or any gradient
// goes non-finite. Deterministic for a fixed seed.
inline std::vector<EpochRecord> train(Model& model, const Dataset& data, const TrainConfig& cfg) {
  cfg.validate();
  if (!data.normalized) throw std::invalid_argument("train: dataset must be normalized");
  if (data.n_samples == 0) throw std::invalid_argument("train: empty dataset");
  if (feature_count(model) != data.n_features)
    throw SchemaError("train: model expects " + std::to_string(feature_count(model)) +
                      " features, dataset has " + std::to_string(data.n_features));
  if ((cfg.loss == LossKind::bce) != (task_of(model) == Task::binary))
    throw std::invalid_argument("train: loss does not match model task");

  std::vector<double> params = get_params(model);
  AdamState adam(params.size());
  Rng rng(cfg.seed);

  std::vector<std::size_t> order(data.n_samples);
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  std::vector<EpochRecord> history;
  history.reserve(static_cast<std::size_t>(cfg.epochs));
  std::vector<double> preds, targets, grad(params.size());

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const double lr = effective_lr(cfg, epoch);
    rng.shuffle(order);
    double epoch_loss = 0.0;
    std::size_t n_batches = 0;

    for (std::size_t start = 0; start < data.n_samples; start += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t end = std::min(data.n_samples, start + static_cast<std::size_t>(cfg.batch_size));
      const std::size_t bs = end - start;
      preds.resize(bs);
      targets.resize(bs);
      try {
        for (std::size_t b = 0; b < bs; ++b) {
          preds[b] = forward(model, data.row(order[start + b]));
          targets[b] = data.target[order[start + b]];
        }
        const auto [loss, dpred] = cfg.loss == LossKind::rmse ? rmse_loss(preds, targets)
                                                              : bce_loss(preds, targets);
        if (!std::isfinite(loss)) throw NumericOverflow("NaN loss");
        std::fill(grad.begin(), grad.end(), 0.0);
        for (std::size_t b = 0; b < bs; ++b)
          accumulate_param_grad(model, data.row(order[start + b]), dpred[b], grad);
        if (cfg.grad_clip) {
          double norm = 0.0;
          for (double g : grad) norm += g * g;
          norm = std::sqrt(norm);
          if (norm > *cfg.grad_clip) {
            const double f = *cfg.grad_clip / norm;
            for (double& g : grad) g *= f;
          }
        }
        adam_step(adam, params, grad, lr);
        set_params(model, params);
        epoch_loss += loss;
        ++n_batches;
      } catch (const NumericOverflow& e) {
        throw NumericOverflow("training aborted at epoch " + std::to_string(epoch) + ", batch " +
                              std::to_string(n_batches) + ": " + e.what());
      }
    }
    history.push_back({epoch, epoch_loss / static_cast<double>(n_batches), lr});
  }
  return history;
}

// Rank-statistic AUC (Mann-Whitney) with average ranks for ties; matches
// brute-force pair counting exactly.
inline double auc_score(std::span<const double> scores, std::span<const double> labels) {
  if (scores.size() != labels.size()) throw std::invalid_argument("auc_score: length mismatch");
  std::size_t n_pos = 0, n_neg = 0;
  for (double y : labels) (y > 0.5 ? n_pos : n_neg)++;
  if (n_pos == 0 || n_neg == 0)
    throw std::invalid_argument("auc_score: AUC undefined when a class is absent");

  std::vector<std::size_t> idx(scores.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::sort(idx.begin(), idx.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  double rank_sum_pos = 0.0;
  std::size_t i = 0;
  while (i < idx.size()) {
    std::size_t j = i;
    while (j < idx.size() && scores[idx[j]] == scores[idx[i]]) ++j;
    const double avg_rank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
    for (std::size_t t = i; t < j; ++t)
      if (labels[idx[t]] > 0.5) rank_sum_pos += avg_rank;
    i = j;
  }
  const double np = static_cast<double>(n_pos), nn = static_cast<double>(n_neg);
  return (rank_sum_pos - np * (np + 1.0) / 2.0) / (np * nn);
}

inline double evaluate(const Model& model, const Dataset& data, MetricKind metric) {
  if (data.n_samples == 0) throw std::invalid_argument("evaluate: empty dataset");
  std::vector<double> preds(data.n_samples);
  for (std::size_t i = 0; i < data.n_samples; ++i) preds[i] = forward(model, data.row(i));
  if (metric == MetricKind::rmse) {
    double ss = 0.0;
    for (std::size_t i = 0; i < preds.size(); ++i) {
      const double e = preds[i] - data.target[i];
      ss += e * e;
    }
    return std::sqrt(ss / static_cast<double>(preds.size()));
  }
  return auc_score(preds, data.target);
}

struct Metrics {
  std::optional<double> rmse;
  std::optional<double> auc;
  std::vector<double> per_fold;
  double mean = 0.0;
  double std_dev = 0.0;
};

struct CvResult {
  Metrics metrics;
  std::vector<Model> fold_models;
  std::vector<std::vector<EpochRecord>> histories;
};

inline int fold_parallelism(int fold_count) {
  int cap = static_cast<int>(std::thread::hardware_concurrency());
  if (const char* env = std::getenv("MACM_THREADS")) {
    const int v = std::atoi(env);
    if (v > 0) cap = v;
  }
  return std::max(1, std::min(cap, fold_count));
}

// Trains an independently seeded model per fold on the out-of-fold samples
// and evaluates on the held-out fold. Folds run concurrently up to
// MACM_THREADS; results are deterministic regardless of thread count.
inline CvResult cross_validate(const std::function<Model(std::uint64_t)>& make_model,
                               const Dataset& data, const FoldSplit& folds, const TrainConfig& cfg,
                               MetricKind metric) {
  if (folds.assignments.size() != data.n_samples)
    throw std::invalid_argument("cross_validate: fold split does not match dataset");
  CvResult result;
  result.fold_models.resize(static_cast<std::size_t>(folds.fold_count));
  result.histories.resize(static_cast<std::size_t>(folds.fold_count));
  result.metrics.per_fold.assign(static_cast<std::size_t>(folds.fold_count), 0.0);
  std::vector<std::string> errors(static_cast<std::size_t>(folds.fold_count));

  const auto run_fold = [&](int f) {
    try {
      const auto train_idx = folds.complement_indices(f);
      const auto test_idx = folds.fold_indices(f);
      const Dataset train_data = data.subset(train_idx);
      const Dataset test_data = data.subset(test_idx);
      Model model = make_model(mix_seed(cfg.seed, static_cast<std::uint64_t>(f) + 1));
      TrainConfig fold_cfg = cfg;
      fold_cfg.seed = mix_seed(cfg.seed, 0x1000 + static_cast<std::uint64_t>(f));
      result.histories[static_cast<std::size_t>(f)] = train(model, train_data, fold_cfg);
      result.metrics.per_fold[static_cast<std::size_t>(f)] = evaluate(model, test_data, metric);
      result.fold_models[static_cast<std::size_t>(f)] = std::move(model);
    } catch (const std::exception& e) {
      errors[static_cast<std::size_t>(f)] = e.what();
    }
  };

  const int workers = fold_parallelism(folds.fold_count);
  if (workers <= 1) {
    for (int f = 0; f < folds.fold_count; ++f) run_fold(f);
  } else {
    std::vector<std::thread> pool;
    std::atomic<int> next{0};
    for (int w = 0; w < workers; ++w)
      pool.emplace_back([&] {
        for (int f = next.fetch_add(1); f < folds.fold_count; f = next.fetch_add(1)) run_fold(f);
      });
    for (auto& th : pool) th.join();
  }
  for (const auto& err : errors)
    if (!err.empty()) throw std::runtime_error("cross_validate fold failed: " + err);

  result.metrics.mean = mean_of(result.metrics.per_fold);
  result.metrics.std_dev = stddev_of(result.metrics.per_fold);
  if (metric == MetricKind::rmse)
    result.metrics.rmse = result.metrics.mean;
  else
    result.metrics.auc = result.metrics.mean;
  return result;
}

}  // namespace macm
