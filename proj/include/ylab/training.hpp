#pragma once

#include <cmath>
#include <cstddef>
#include <fstream>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "ylab/lstm.hpp"
#include "ylab/matrix.hpp"
#include "ylab/mlp.hpp"
#include "ylab/rng.hpp"

namespace ylab {

inline double mse(const Vector& pred, const Vector& actual) {
  if (pred.empty() || actual.empty()) {
    throw std::invalid_argument("mse: empty input");
  }
  if (pred.size() != actual.size()) {
    throw std::invalid_argument("mse: length mismatch " + std::to_string(pred.size()) +
                                " vs " + std::to_string(actual.size()));
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double d = pred[i] - actual[i];
    acc += d * d;
  }
  return acc / static_cast<double>(pred.size());
}

struct AdamState {
  Vector m;
  Vector v;
  long t = 0;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  static AdamState zeros(std::size_t n) {
    AdamState s;
    s.m = Vector(n, 0.0);
    s.v = Vector(n, 0.0);
    return s;
  }
};

// params <- params - lr * m_hat / (sqrt(v_hat) + eps) with bias-corrected
// moments.
inline void adam_step(AdamState& state, Vector& params, const Vector& grads) {
  if (params.size() != grads.size() || params.size() != state.m.size() ||
      params.size() != state.v.size()) {
    throw std::invalid_argument("adam_step: shape mismatch (params " +
                                std::to_string(params.size()) + ", grads " +
                                std::to_string(grads.size()) + ", state " +
                                std::to_string(state.m.size()) + ")");
  }
  state.t += 1;
  const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.t));
  const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.t));
  for (std::size_t i = 0; i < params.size(); ++i) {
    state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * grads[i];
    state.v[i] = state.beta2 * state.v[i] + (1.0 - state.beta2) * grads[i] * grads[i];
    const double m_hat = state.m[i] / bc1;
    const double v_hat = state.v[i] / bc2;
    params[i] -= state.lr * m_hat / (std::sqrt(v_hat) + state.eps);
  }
}

// Rescales grad in place when its global norm exceeds max_norm; returns the
// pre-clip norm. max_norm <= 0 disables clipping.
inline double clip_by_global_norm(Vector& grad, double max_norm) {
  const double n = norm2(grad);
  if (max_norm > 0.0 && n > max_norm) {
    const double scale = max_norm / n;
    for (double& g : grad) g *= scale;
  }
  return n;
}

struct TrainConfig {
  std::size_t epochs = 200;
  std::size_t batch_size = 4096;  // clamped to the sample count, so full batch at desk scale
  bool warm_start = true;
  double clip_norm = 0.0;  // 0 disables
  std::uint64_t seed = 1;
  double lr = 1e-3;

  void validate() const {
    if (epochs < 1) throw std::invalid_argument("TrainConfig: epochs must be >= 1");
    if (batch_size < 1) throw std::invalid_argument("TrainConfig: batch_size must be >= 1");
    if (lr < 0.0 || !std::isfinite(lr)) {
      throw std::invalid_argument("TrainConfig: lr must be finite and >= 0");
    }
    if (clip_norm < 0.0) throw std::invalid_argument("TrainConfig: clip_norm must be >= 0");
  }
};

struct FitResult {
  Vector loss_curve;  // mean training loss per epoch
};

namespace detail {

// Shared epoch loop. objective(index_batch) must return the mean loss over
// that batch and write the flattened gradient.
template <typename Objective>
FitResult fit_loop(Vector& params, std::size_t n_samples, const TrainConfig& cfg,
                   Objective&& objective) {
  cfg.validate();
  if (n_samples == 0) throw std::invalid_argument("fit: no training samples");
  const std::size_t bs = std::min(cfg.batch_size, n_samples);

  AdamState adam = AdamState::zeros(params.size());
  adam.lr = cfg.lr;
  Rng shuffle_rng(cfg.seed);
  std::vector<std::size_t> order(n_samples);
  std::iota(order.begin(), order.end(), 0);

  FitResult res;
  res.loss_curve.reserve(cfg.epochs);
  Vector grad(params.size());
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    if (bs < n_samples) {  // full-batch runs need no shuffling
      for (std::size_t i = n_samples; i > 1; --i) {
        const std::size_t j = static_cast<std::size_t>(shuffle_rng.uniform() * i);
        std::swap(order[i - 1], order[std::min(j, i - 1)]);
      }
    }
    double epoch_loss = 0.0;
    std::size_t seen = 0;
    for (std::size_t start = 0; start < n_samples; start += bs) {
      const std::size_t stop = std::min(start + bs, n_samples);
      const double loss = objective(order, start, stop, grad);
      if (!std::isfinite(loss)) {
        throw std::runtime_error("fit: loss diverged (non-finite) at epoch " +
                                 std::to_string(epoch));
      }
      clip_by_global_norm(grad, cfg.clip_norm);
      adam_step(adam, params, grad);
      epoch_loss += loss * static_cast<double>(stop - start);
      seen += stop - start;
    }
    res.loss_curve.push_back(epoch_loss / static_cast<double>(seen));
  }
  return res;
}

}  // namespace detail

// Trains the LSTM on sequence samples. Without warm_start the parameters are
// re-drawn from cfg.seed before the loop.
inline FitResult fit(LstmParameters& model, const std::vector<std::vector<Vector>>& sequences,
                     const std::vector<Vector>& labels, bool seq_out, const TrainConfig& cfg,
                     LossMode mode = LossMode::kAllSteps) {
  if (sequences.size() != labels.size()) {
    throw std::invalid_argument("fit: " + std::to_string(sequences.size()) +
                                " sequences but " + std::to_string(labels.size()) + " labels");
  }
  if (!cfg.warm_start) {
    Rng init_rng(cfg.seed);
    model = init_params(model.units, model.inputs, init_rng);
  }
  Vector flat = model.flatten();
  std::vector<std::vector<Vector>> batch;
  std::vector<Vector> batch_labels;
  auto objective = [&](const std::vector<std::size_t>& order, std::size_t start,
                       std::size_t stop, Vector& grad) {
    batch.clear();
    batch_labels.clear();
    for (std::size_t i = start; i < stop; ++i) {
      batch.push_back(sequences[order[i]]);
      batch_labels.push_back(labels[order[i]]);
    }
    model.unflatten(flat);
    const LstmGradients g = backward(model, batch, batch_labels, seq_out, mode);
    grad = g.grad.flatten();
    return g.loss;
  };
  FitResult res = detail::fit_loop(flat, sequences.size(), cfg, objective);
  model.unflatten(flat);
  return res;
}

inline FitResult fit(MlpParameters& model, const std::vector<Vector>& samples,
                     const Vector& labels, const TrainConfig& cfg) {
  if (samples.size() != labels.size()) {
    throw std::invalid_argument("fit: " + std::to_string(samples.size()) + " samples but " +
                                std::to_string(labels.size()) + " labels");
  }
  if (!cfg.warm_start) {
    Rng init_rng(cfg.seed);
    model = init_mlp(model.hidden, model.inputs, init_rng);
  }
  Vector flat = model.flatten();
  std::vector<Vector> batch;
  Vector batch_labels;
  auto objective = [&](const std::vector<std::size_t>& order, std::size_t start,
                       std::size_t stop, Vector& grad) {
    batch.clear();
    batch_labels.clear();
    for (std::size_t i = start; i < stop; ++i) {
      batch.push_back(samples[order[i]]);
      batch_labels.push_back(labels[order[i]]);
    }
    model.unflatten(flat);
    const MlpGradients g = mlp_backward(model, batch, batch_labels);
    grad = g.grad.flatten();
    return g.loss;
  };
  FitResult res = detail::fit_loop(flat, samples.size(), cfg, objective);
  model.unflatten(flat);
  return res;
}

inline void save_loss_curve(const std::string& path, const Vector& curve) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_loss_curve: cannot open " + path);
  out << "epoch,loss\n";
  for (std::size_t i = 0; i < curve.size(); ++i) {
    out << i << ',' << curve[i] << '\n';
  }
}

struct GridPoint {
  double lr = 0.0;
  std::size_t epochs = 0;
  double score = 0.0;
};

// Minimal hyperparameter sweep: evaluate(lr, epochs) returns a validation
// score, lower is better; ties keep the earlier grid point.
template <typename Evaluate>
GridPoint grid_search(const std::vector<double>& lrs, const std::vector<std::size_t>& epoch_grid,
                      Evaluate&& evaluate) {
  if (lrs.empty() || epoch_grid.empty()) {
    throw std::invalid_argument("grid_search: empty grid");
  }
  GridPoint best;
  bool first = true;
  for (const double lr : lrs) {
    for (const std::size_t ep : epoch_grid) {
      const double score = evaluate(lr, ep);
      if (first || score < best.score) {
        best = {lr, ep, score};
        first = false;
      }
    }
  }
  return best;
}

}  // namespace ylab
