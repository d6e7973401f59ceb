#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "ylab/lasso.hpp"
#include "ylab/lstm.hpp"
#include "ylab/mlp.hpp"
#include "ylab/rng.hpp"
#include "ylab/signals.hpp"
#include "ylab/timeseries.hpp"
#include "ylab/training.hpp"

namespace ylab {

enum class ModelKind {
  kLstm,                 // univariate sequence model on the target history
  kMlpTargetLags,        // feedforward net on seq_in lags of the target
  kMlpRelevantFeatures,  // feedforward net on lasso-selected (feature, lag) inputs
  kPersistence,          // last observed value, the built-in naive baseline
};

struct ModelSpec {
  std::string name;
  ModelKind kind = ModelKind::kLstm;
  std::size_t units = 4;   // hidden units (lstm cell size or mlp hidden width)
  std::size_t seq_in = 6;  // lstm steps, or target-lag depth for kMlpTargetLags
  bool seq_out = false;    // lstm trained with per-step labels

  void validate() const {
    if (name.empty()) throw std::invalid_argument("ModelSpec: empty name");
    if (kind != ModelKind::kPersistence && (units < 1 || seq_in < 1)) {
      throw std::invalid_argument("ModelSpec '" + name + "': units and seq_in must be >= 1");
    }
  }
};

// The five-model comparison roster plus the naive baseline.
inline std::vector<ModelSpec> standard_roster(std::size_t lstm_units, std::size_t mlp_hidden) {
  return {
      {"LSTM06", ModelKind::kLstm, lstm_units, 6, false},
      {"LSTM21", ModelKind::kLstm, lstm_units, 21, false},
      {"LSTM61", ModelKind::kLstm, lstm_units, 61, false},
      {"NN TgtOnly", ModelKind::kMlpTargetLags, mlp_hidden, 6, false},
      {"NN RelFeat", ModelKind::kMlpRelevantFeatures, mlp_hidden, 6, false},
      {"Persistence", ModelKind::kPersistence, 0, 1, false},
  };
}

struct WalkForwardConfig {
  std::size_t window = 300;
  double train_fraction = 0.7;   // static split; forecasting starts at the boundary
  std::size_t max_test_steps = 0;  // 0 = run the whole test region
  std::size_t retrain_every = 1;   // 1 = retrain at every step
  bool cold_start = false;         // re-init parameters at every retrain
  std::size_t epochs_initial = 200;
  std::size_t epochs_update = 50;
  TrainConfig train;               // lr, batch size, clip; epochs come from the two counts above
  std::uint64_t seed = 42;
  std::size_t relfeat_k = 5;       // lag depth for the static feature screen
  double relfeat_gamma = 1.0;
};

struct ForecastCell {
  std::string model;
  std::size_t horizon = 0;
  std::vector<std::size_t> origins;  // table row each forecast was made from
  Vector norm_sq_errors;
  Vector predictions_norm, actuals_norm;
  Vector predictions_raw, actuals_raw;
  double median_mse = 0.0, mean_mse = 0.0, std_mse = 0.0;
  std::string note;
};

struct ForecastReport {
  std::size_t n_rows = 0, split_index = 0, window = 0;
  std::size_t retrain_every = 1;
  bool cold_start = false;
  std::size_t epochs_initial = 0, epochs_update = 0;
  std::uint64_t seed = 0;
  std::vector<std::size_t> horizons;
  std::vector<std::string> model_names;
  std::string config_hash;
  std::vector<ForecastCell> cells;
};

inline double median(Vector values) {
  if (values.empty()) throw std::invalid_argument("median: empty input");
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

inline double mean(const Vector& values) {
  if (values.empty()) throw std::invalid_argument("mean: empty input");
  double acc = 0.0;
  for (const double v : values) acc += v;
  return acc / static_cast<double>(values.size());
}

inline double stddev(const Vector& values) {
  const double m = mean(values);
  double acc = 0.0;
  for (const double v : values) acc += (v - m) * (v - m);
  return std::sqrt(acc / static_cast<double>(values.size()));
}

namespace detail {

// Column/lag pairs a model reads at forecast time.
struct InputLayout {
  std::vector<std::pair<std::size_t, std::size_t>> col_lags;  // (column, lag)
  std::size_t history = 1;  // rows of context needed including the current one
};

inline InputLayout target_lag_layout(std::size_t target_col, std::size_t depth) {
  InputLayout lay;
  for (std::size_t lag = 0; lag < depth; ++lag) lay.col_lags.emplace_back(target_col, lag);
  lay.history = depth;
  return lay;
}

struct WindowStats {
  Vector mean, std;  // indexed by table column
};

// Population mean/std per needed column over rows [from, to).
inline WindowStats window_stats(const TimeSeriesTable& table, const std::vector<std::size_t>& cols,
                                std::size_t from, std::size_t to) {
  WindowStats st;
  st.mean = Vector(table.n_cols(), 0.0);
  st.std = Vector(table.n_cols(), 0.0);
  const double n = static_cast<double>(to - from);
  for (const std::size_t c : cols) {
    const Vector& v = table.columns[c];
    double m = 0.0;
    for (std::size_t r = from; r < to; ++r) m += v[r];
    m /= n;
    double var = 0.0;
    for (std::size_t r = from; r < to; ++r) var += (v[r] - m) * (v[r] - m);
    const double sd = std::sqrt(var / n);
    if (sd == 0.0) {
      throw std::runtime_error("walk_forward: column '" + table.column_names[c] +
                               "' is constant in window [" + std::to_string(from) + "," +
                               std::to_string(to) + ")");
    }
    st.mean[c] = m;
    st.std[c] = sd;
  }
  return st;
}

}  // namespace detail

// Moving-window protocol: at each forecast origin t the models see rows
// [t-window+1, t] only; normalization is refit inside that window, the model
// is retrained (warm-started) there, and the t+1+h forecast is scored in both
// normalized and raw units. A separate model chain runs per horizon.
inline ForecastReport walk_forward(const std::vector<ModelSpec>& roster,
                                   const TimeSeriesTable& table,
                                   const std::vector<std::size_t>& horizons,
                                   const WalkForwardConfig& cfg) {
  if (roster.empty()) throw std::invalid_argument("walk_forward: empty roster");
  if (horizons.empty()) throw std::invalid_argument("walk_forward: no horizons");
  for (const ModelSpec& m : roster) m.validate();
  cfg.train.validate();

  const std::size_t n = table.n_rows();
  const std::size_t split = static_cast<std::size_t>(
      std::floor(static_cast<double>(n) * cfg.train_fraction));
  if (cfg.window < 2 || cfg.window > split) {
    throw std::invalid_argument("walk_forward: window " + std::to_string(cfg.window) +
                                " must be in [2, training region " + std::to_string(split) + "]");
  }
  const std::size_t target_col = table.target_index();

  ForecastReport report;
  report.n_rows = n;
  report.split_index = split;
  report.window = cfg.window;
  report.retrain_every = cfg.retrain_every == 0 ? 1 : cfg.retrain_every;
  report.cold_start = cfg.cold_start;
  report.epochs_initial = cfg.epochs_initial;
  report.epochs_update = cfg.epochs_update;
  report.seed = cfg.seed;
  report.horizons = horizons;
  for (const ModelSpec& m : roster) report.model_names.push_back(m.name);

  for (const ModelSpec& model : roster) {
    for (const std::size_t h : horizons) {
      ForecastCell cell;
      cell.model = model.name;
      cell.horizon = h;

      // Static feature screen for the relevant-feature net, fit once on the
      // training region; falls back to target lags when nothing survives.
      detail::InputLayout layout;
      if (model.kind == ModelKind::kMlpRelevantFeatures) {
        const TimeSeriesTable region = slice_rows(table, 0, split);
        const RelevantFeatures rel = select_relevant_features(
            region.target(), region, h, cfg.relfeat_k, cfg.relfeat_gamma);
        std::set<std::pair<std::size_t, std::size_t>> seen;
        for (const ActiveWeight& a : rel.active) {
          const std::size_t col = table.col_index(a.feature);
          if (seen.insert({col, a.lag}).second) {
            layout.col_lags.emplace_back(col, a.lag);
          }
        }
        if (layout.col_lags.empty()) {
          layout = detail::target_lag_layout(target_col, model.seq_in);
          cell.note = "feature screen empty at gamma=" + std::to_string(cfg.relfeat_gamma) +
                      "; fell back to target lags";
        } else {
          std::size_t max_lag = 0;
          for (const auto& [c, l] : layout.col_lags) max_lag = std::max(max_lag, l);
          layout.history = max_lag + 1;
        }
      } else if (model.kind == ModelKind::kMlpTargetLags) {
        layout = detail::target_lag_layout(target_col, model.seq_in);
      } else {
        layout.history = model.seq_in;
        layout.col_lags = {{target_col, 0}};
      }

      std::vector<std::size_t> needed_cols = {target_col};
      for (const auto& [c, l] : layout.col_lags) {
        if (std::find(needed_cols.begin(), needed_cols.end(), c) == needed_cols.end()) {
          needed_cols.push_back(c);
        }
      }

      if (layout.history + 1 + h >= cfg.window) {
        throw std::invalid_argument("walk_forward: window " + std::to_string(cfg.window) +
                                    " too small for model '" + model.name + "' at horizon " +
                                    std::to_string(h));
      }

      Rng chain_rng(cfg.seed ^ fnv1a64(model.name + "#" + std::to_string(h)));
      LstmParameters lstm_params;
      MlpParameters mlp_params;
      bool fitted = false;
      detail::WindowStats stats;

      const std::size_t W = cfg.window;
      const std::size_t first_origin = split - 1;
      std::size_t steps_total = (n - 1 >= h + first_origin + 1)
                                    ? (n - 1 - h - first_origin)
                                    : 0;
      if (cfg.max_test_steps > 0) steps_total = std::min(steps_total, cfg.max_test_steps);
      if (steps_total == 0) {
        throw std::invalid_argument("walk_forward: no forecastable steps at horizon " +
                                    std::to_string(h));
      }

      for (std::size_t i = 0; i < steps_total; ++i) {
        const std::size_t t = first_origin + i;
        const std::size_t w0 = t + 1 - W;
        const bool retrain = (i % report.retrain_every == 0) || !fitted;

        if (retrain) {
          stats = detail::window_stats(table, needed_cols, w0, t + 1);
          auto norm = [&](std::size_t col, std::size_t row) {
            return (table.columns[col][row] - stats.mean[col]) / stats.std[col];
          };

          if (model.kind == ModelKind::kLstm) {
            std::vector<std::vector<Vector>> seqs;
            std::vector<Vector> labels;
            for (std::size_t a = model.seq_in - 1; a + 1 + h < W; ++a) {
              std::vector<Vector> seq;
              seq.reserve(model.seq_in);
              for (std::size_t s = a + 1 - model.seq_in; s <= a; ++s) {
                seq.push_back({norm(target_col, w0 + s)});
              }
              seqs.push_back(std::move(seq));
              if (model.seq_out) {
                Vector lab(model.seq_in);
                for (std::size_t s = 0; s < model.seq_in; ++s) {
                  const std::size_t lab_row = w0 + a + 1 - model.seq_in + s + 1 + h;
                  lab[s] = norm(target_col, lab_row);
                }
                labels.push_back(std::move(lab));
              } else {
                labels.push_back({norm(target_col, w0 + a + 1 + h)});
              }
            }
            TrainConfig tc = cfg.train;
            tc.epochs = fitted && !cfg.cold_start ? cfg.epochs_update : cfg.epochs_initial;
            tc.warm_start = true;
            tc.seed = chain_rng.seed() + i;
            if (!fitted || cfg.cold_start) {
              lstm_params = init_params(model.units, 1, chain_rng);
            }
            fit(lstm_params, seqs, labels, model.seq_out, tc);
          } else if (model.kind != ModelKind::kPersistence) {
            std::vector<Vector> xs;
            Vector ys;
            for (std::size_t a = layout.history - 1; a + 1 + h < W; ++a) {
              Vector x;
              x.reserve(layout.col_lags.size());
              for (const auto& [c, l] : layout.col_lags) x.push_back(norm(c, w0 + a - l));
              xs.push_back(std::move(x));
              ys.push_back(norm(target_col, w0 + a + 1 + h));
            }
            TrainConfig tc = cfg.train;
            tc.epochs = fitted && !cfg.cold_start ? cfg.epochs_update : cfg.epochs_initial;
            tc.warm_start = true;
            tc.seed = chain_rng.seed() + i;
            if (!fitted || cfg.cold_start) {
              mlp_params = init_mlp(model.units, layout.col_lags.size(), chain_rng);
            }
            fit(mlp_params, xs, ys, tc);
          }
          fitted = true;
        }

        auto norm = [&](std::size_t col, std::size_t row) {
          return (table.columns[col][row] - stats.mean[col]) / stats.std[col];
        };
        double pred_norm = 0.0;
        if (model.kind == ModelKind::kLstm) {
          std::vector<Vector> seq;
          seq.reserve(model.seq_in);
          for (std::size_t s = t + 1 - model.seq_in; s <= t; ++s) {
            seq.push_back({norm(target_col, s)});
          }
          pred_norm = forward(lstm_params, seq, false).predictions.back();
        } else if (model.kind == ModelKind::kPersistence) {
          pred_norm = norm(target_col, t);
        } else {
          Vector x;
          x.reserve(layout.col_lags.size());
          for (const auto& [c, l] : layout.col_lags) x.push_back(norm(c, t - l));
          pred_norm = mlp_forward(mlp_params, x);
        }

        const double actual_norm = norm(target_col, t + 1 + h);
        const double err = pred_norm - actual_norm;
        cell.origins.push_back(t);
        cell.norm_sq_errors.push_back(err * err);
        cell.predictions_norm.push_back(pred_norm);
        cell.actuals_norm.push_back(actual_norm);
        cell.predictions_raw.push_back(pred_norm * stats.std[target_col] +
                                       stats.mean[target_col]);
        cell.actuals_raw.push_back(table.columns[target_col][t + 1 + h]);
      }

      cell.median_mse = median(cell.norm_sq_errors);
      cell.mean_mse = mean(cell.norm_sq_errors);
      cell.std_mse = stddev(cell.norm_sq_errors);
      report.cells.push_back(std::move(cell));
    }
  }
  return report;
}

struct RelativeMseRow {
  std::string model;
  std::size_t horizon = 0;
  double median_ratio = 0.0;  // model median / baseline median
  double std_ratio = 0.0;
};

inline std::vector<RelativeMseRow> compare_models(const ForecastReport& report,
                                                  const std::string& baseline) {
  auto find_cell = [&](const std::string& name, std::size_t h) -> const ForecastCell* {
    for (const ForecastCell& c : report.cells) {
      if (c.model == name && c.horizon == h) return &c;
    }
    return nullptr;
  };
  std::vector<RelativeMseRow> rows;
  for (const ForecastCell& c : report.cells) {
    const ForecastCell* base = find_cell(baseline, c.horizon);
    if (base == nullptr) {
      throw std::invalid_argument("compare_models: baseline '" + baseline +
                                  "' missing at horizon " + std::to_string(c.horizon));
    }
    RelativeMseRow row;
    row.model = c.model;
    row.horizon = c.horizon;
    row.median_ratio = c.median_mse / base->median_mse;
    row.std_ratio = base->std_mse == 0.0 ? 0.0 : c.std_mse / base->std_mse;
    rows.push_back(row);
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Signal explanation study

struct ExplanationEntry {
  std::string state;  // "hidden" or "cell"
  std::size_t unit = 0;
  LassoSolution solution;
  double fit_mse = 0.0;  // on standardized signal
  Vector actual, fitted;
  std::string note;  // set when the signal could not be fit (e.g. constant)
};

struct SetCounts {
  // pairwise[u][v] = |features(u) ∩ features(v)|; the diagonal is the set size
  std::vector<std::vector<std::size_t>> pairwise;
  std::size_t all_units = 0;
};

struct ExplanationReport {
  std::size_t units = 0;
  std::size_t k = 0;
  double gamma = 0.0;
  std::vector<ExplanationEntry> entries;
  std::vector<std::vector<std::string>> hidden_features;  // per unit, sorted unique names
  std::vector<std::vector<std::string>> cell_features;
  std::vector<std::size_t> hidden_cell_common;  // per unit
  SetCounts hidden_counts, cell_counts;
  bool any_active = false;
  std::vector<std::string> dropped_columns;
  std::string note;  // "no explanation at this gamma" when nothing is active
  std::string config_hash;
};

namespace detail {

inline std::vector<std::string> feature_names(const LassoSolution& sol) {
  std::set<std::string> names;
  for (const ActiveWeight& a : sol.active_set) names.insert(a.feature);
  return {names.begin(), names.end()};
}

inline std::size_t intersection_size(const std::vector<std::string>& a,
                                     const std::vector<std::string>& b) {
  std::vector<std::string> out;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out.size();
}

inline SetCounts set_counts(const std::vector<std::vector<std::string>>& sets) {
  SetCounts c;
  const std::size_t n = sets.size();
  c.pairwise.assign(n, std::vector<std::size_t>(n, 0));
  for (std::size_t u = 0; u < n; ++u) {
    for (std::size_t v = 0; v < n; ++v) {
      c.pairwise[u][v] = intersection_size(sets[u], sets[v]);
    }
  }
  if (n > 0) {
    std::vector<std::string> acc = sets[0];
    for (std::size_t u = 1; u < n; ++u) {
      std::vector<std::string> next;
      std::set_intersection(acc.begin(), acc.end(), sets[u].begin(), sets[u].end(),
                            std::back_inserter(next));
      acc = std::move(next);
    }
    c.all_units = acc.size();
  }
  return c;
}

// Shared core: fits one lasso per state x unit against the pre-aligned
// design, then assembles the feature-set intersections.
inline ExplanationReport explain_from_signals(const Matrix& hidden, const Matrix& cell,
                                              const LagDesignMatrix& design, double gamma) {
  if (hidden.rows() != design.X.rows() || cell.rows() != design.X.rows()) {
    throw std::invalid_argument("explain_from_signals: signal/design row mismatch");
  }
  const std::size_t units = hidden.cols();
  ExplanationReport rep;
  rep.units = units;
  rep.k = design.k;
  rep.gamma = gamma;
  rep.hidden_features.resize(units);
  rep.cell_features.resize(units);
  rep.hidden_cell_common.assign(units, 0);

  StandardizedDesign base;
  {
    // standardize the design once; the per-unit targets are standardized below
    Vector probe(design.X.rows());
    for (std::size_t r = 0; r < probe.size(); ++r) probe[r] = static_cast<double>(r);
    base = standardize(design, probe);
  }
  rep.dropped_columns = base.dropped_columns;

  auto fit_one = [&](const std::string& state, std::size_t unit, const Matrix& signals) {
    ExplanationEntry e;
    e.state = state;
    e.unit = unit;
    Vector s(signals.rows());
    for (std::size_t r = 0; r < s.size(); ++r) s[r] = signals(r, unit);
    const double n = static_cast<double>(s.size());
    double m = 0.0;
    for (const double v : s) m += v;
    m /= n;
    double var = 0.0;
    for (const double v : s) var += (v - m) * (v - m);
    const double sd = std::sqrt(var / n);
    if (sd == 0.0) {
      e.note = "constant signal, no fit";
      return e;
    }
    for (double& v : s) v = (v - m) / sd;
    e.solution = lasso_fit(base.X, s, gamma, base.column_names);
    e.actual = s;
    e.fitted.resize(s.size());
    double fit_err = 0.0;
    for (std::size_t r = 0; r < s.size(); ++r) {
      double pred = 0.0;
      const double* row = base.X.row_ptr(r);
      for (const ActiveWeight& a : e.solution.active_set) pred += row[a.index] * a.weight;
      e.fitted[r] = pred;
      fit_err += (pred - s[r]) * (pred - s[r]);
    }
    e.fit_mse = fit_err / n;
    return e;
  };

  for (std::size_t u = 0; u < units; ++u) {
    ExplanationEntry eh = fit_one("hidden", u, hidden);
    rep.hidden_features[u] = detail::feature_names(eh.solution);
    rep.entries.push_back(std::move(eh));
  }
  for (std::size_t u = 0; u < units; ++u) {
    ExplanationEntry ec = fit_one("cell", u, cell);
    rep.cell_features[u] = detail::feature_names(ec.solution);
    rep.entries.push_back(std::move(ec));
  }
  for (std::size_t u = 0; u < units; ++u) {
    rep.hidden_cell_common[u] =
        detail::intersection_size(rep.hidden_features[u], rep.cell_features[u]);
    if (!rep.hidden_features[u].empty() || !rep.cell_features[u].empty()) {
      rep.any_active = true;
    }
  }
  rep.hidden_counts = detail::set_counts(rep.hidden_features);
  rep.cell_counts = detail::set_counts(rep.cell_features);
  if (!rep.any_active) rep.note = "no explanation at this gamma";
  return rep;
}

}  // namespace detail

// State signals and lag-expanded regressors brought onto a common time axis:
// row j of everything describes time t0+j.
struct AlignedSignals {
  Matrix hidden, cell;     // rows x units
  LagDesignMatrix design;  // same rows
  std::size_t t0 = 0;      // first covered source row
};

inline AlignedSignals align_signals(const LstmParameters& params,
                                    const TimeSeriesTable& model_inputs,
                                    const TimeSeriesTable& exogenous, std::size_t seq_in,
                                    std::size_t k,
                                    StateCarry carry = StateCarry::kZeroPerSequence) {
  if (exogenous.n_rows() != model_inputs.n_rows()) {
    throw std::invalid_argument("align_signals: exogenous table has " +
                                std::to_string(exogenous.n_rows()) + " rows, model inputs " +
                                std::to_string(model_inputs.n_rows()));
  }
  for (const std::string& name : exogenous.column_names) {
    for (const std::string& own : model_inputs.column_names) {
      if (name == own) {
        throw std::invalid_argument("align_signals: exogenous set must exclude the model's own "
                                    "input feature '" + name + "'");
      }
    }
  }
  const SignalTrace trace = extract_trace(params, model_inputs, seq_in, carry);
  const LagDesignMatrix design = build_lag_matrix(exogenous, k);

  // trace row j describes time j+seq_in-1; design row r describes time r+k
  const std::size_t n = model_inputs.n_rows();
  AlignedSignals out;
  out.t0 = std::max(seq_in - 1, k);
  const std::size_t m = n - out.t0;
  out.hidden = Matrix(m, params.units);
  out.cell = Matrix(m, params.units);
  Matrix X(m, design.X.cols());
  for (std::size_t j = 0; j < m; ++j) {
    const std::size_t t = out.t0 + j;
    const std::size_t trace_row = t - (seq_in - 1);
    const std::size_t design_row = t - k;
    for (std::size_t u = 0; u < params.units; ++u) {
      out.hidden(j, u) = trace.hidden_state(trace_row, u);
      out.cell(j, u) = trace.cell_state(trace_row, u);
    }
    for (std::size_t c = 0; c < design.X.cols(); ++c) X(j, c) = design.X(design_row, c);
  }
  out.design = LagDesignMatrix{std::move(X), design.column_names, design.k};
  return out;
}

// Explains the hidden and cell state of each unit with lag-expanded exogenous
// regressors: extract traces, lag-expand, standardize, lasso per state x unit
// at the chosen gamma, then count the common features across states/units.
// The exogenous table must not contain any of the model's own input columns.
inline ExplanationReport lstm_laglasso(const LstmParameters& params,
                                       const TimeSeriesTable& model_inputs,
                                       const TimeSeriesTable& exogenous, std::size_t seq_in,
                                       std::size_t k, double gamma,
                                       StateCarry carry = StateCarry::kZeroPerSequence) {
  const AlignedSignals a = align_signals(params, model_inputs, exogenous, seq_in, k, carry);
  return detail::explain_from_signals(a.hidden, a.cell, a.design, gamma);
}

// ---------------------------------------------------------------------------
// Signal-study plumbing

struct SignalModelConfig {
  std::size_t units = 3;
  std::size_t seq_in = 6;
  bool seq_out = true;  // per-step supervision, matching the sequence-to-sequence setup
  std::size_t horizon = 5;
  std::size_t epochs = 200;
  double lr = 1e-3;
  double clip_norm = 0.0;
  double train_fraction = 0.7;
  std::uint64_t seed = 7;

  void validate() const {
    if (units < 1 || seq_in < 1) {
      throw std::invalid_argument("SignalModelConfig: units and seq_in must be >= 1");
    }
    if (epochs < 1) throw std::invalid_argument("SignalModelConfig: epochs must be >= 1");
    if (train_fraction <= 0.0 || train_fraction >= 1.0) {
      throw std::invalid_argument("SignalModelConfig: train_fraction must be in (0,1)");
    }
  }
};

struct TrainedSignalModel {
  LstmParameters params;
  double target_mean = 0.0, target_std = 1.0;  // fit on the training region
  std::size_t split = 0;
  Vector loss_curve;
  TimeSeriesTable normalized_inputs;  // full-length univariate normalized target
};

// Trains the univariate sequence model whose internals the signal studies
// inspect: target history in, target future out, fit once on the static
// training region.
inline TrainedSignalModel train_signal_model(const TimeSeriesTable& table,
                                             const SignalModelConfig& cfg) {
  cfg.validate();
  const std::size_t n = table.n_rows();
  const std::size_t split =
      static_cast<std::size_t>(std::floor(static_cast<double>(n) * cfg.train_fraction));
  if (split < cfg.seq_in + cfg.horizon + 2) {
    throw std::invalid_argument("train_signal_model: training region too short (" +
                                std::to_string(split) + " rows)");
  }
  const Vector& target = table.target();
  double m = 0.0;
  for (std::size_t r = 0; r < split; ++r) m += target[r];
  m /= static_cast<double>(split);
  double var = 0.0;
  for (std::size_t r = 0; r < split; ++r) var += (target[r] - m) * (target[r] - m);
  const double sd = std::sqrt(var / static_cast<double>(split));
  if (sd == 0.0) {
    throw std::invalid_argument("train_signal_model: target constant on training region");
  }

  TrainedSignalModel out;
  out.split = split;
  out.target_mean = m;
  out.target_std = sd;
  out.normalized_inputs.timestamps = table.timestamps;
  out.normalized_inputs.column_names = {table.target_name};
  out.normalized_inputs.target_name = table.target_name;
  Vector norm(n);
  for (std::size_t r = 0; r < n; ++r) norm[r] = (target[r] - m) / sd;
  out.normalized_inputs.columns = {std::move(norm)};

  const TimeSeriesTable region = slice_rows(out.normalized_inputs, 0, split);
  WindowSpec spec;
  spec.horizon = cfg.horizon;
  spec.seq_in = cfg.seq_in;
  spec.seq_out = cfg.seq_out ? cfg.seq_in : 0;
  const std::vector<SequenceSample> samples = make_sequences(region, spec);
  if (samples.empty()) {
    throw std::invalid_argument("train_signal_model: no training sequences");
  }
  std::vector<std::vector<Vector>> seqs;
  std::vector<Vector> labels;
  seqs.reserve(samples.size());
  for (const SequenceSample& s : samples) {
    seqs.push_back(s.inputs);
    labels.push_back(s.labels);
  }

  Rng rng(cfg.seed);
  out.params = init_params(cfg.units, 1, rng);
  TrainConfig tc;
  tc.epochs = cfg.epochs;
  tc.lr = cfg.lr;
  tc.clip_norm = cfg.clip_norm;
  tc.warm_start = true;
  tc.seed = cfg.seed;
  out.loss_curve = fit(out.params, seqs, labels, cfg.seq_out, tc).loss_curve;
  return out;
}

struct StitchedTraceConfig {
  SignalModelConfig model;  // epochs acts as the first-window count
  std::size_t window = 300;
  std::size_t epochs_update = 50;
  std::size_t retrain_every = 1;
};

// Signal trace under the moving-window protocol: at each origin the model is
// retrained (warm-started) on its trailing window, then the tap values of the
// sequence ending at the origin are recorded. One record per origin, taken
// from that origin's own model, so consecutive rows stitch across retrains.
inline SignalTrace stitched_trace(const TimeSeriesTable& table, const StitchedTraceConfig& cfg) {
  cfg.model.validate();
  const std::size_t n = table.n_rows();
  const std::size_t split =
      static_cast<std::size_t>(std::floor(static_cast<double>(n) * cfg.model.train_fraction));
  const std::size_t W = cfg.window;
  if (W < cfg.model.seq_in + cfg.model.horizon + 2 || W > split) {
    throw std::invalid_argument("stitched_trace: window must fit the model and the training "
                                "region");
  }
  const Vector& target = table.target();
  const std::size_t first_origin = split - 1;
  const std::size_t n_records = n - first_origin;
  const std::size_t cadence = cfg.retrain_every == 0 ? 1 : cfg.retrain_every;

  SignalTrace trace;
  trace.forget = Matrix(n_records, cfg.model.units);
  trace.input_times_node = Matrix(n_records, cfg.model.units);
  trace.output_gate = Matrix(n_records, cfg.model.units);
  trace.cell_state = Matrix(n_records, cfg.model.units);
  trace.hidden_state = Matrix(n_records, cfg.model.units);

  Rng rng(cfg.model.seed);
  LstmParameters params;
  bool fitted = false;
  double w_mean = 0.0, w_std = 1.0;

  for (std::size_t i = 0; i < n_records; ++i) {
    const std::size_t t = first_origin + i;
    const std::size_t w0 = t + 1 - W;
    if (i % cadence == 0 || !fitted) {
      double m = 0.0;
      for (std::size_t r = w0; r <= t; ++r) m += target[r];
      m /= static_cast<double>(W);
      double var = 0.0;
      for (std::size_t r = w0; r <= t; ++r) var += (target[r] - m) * (target[r] - m);
      const double sd = std::sqrt(var / static_cast<double>(W));
      if (sd == 0.0) {
        throw std::runtime_error("stitched_trace: target constant in window ending at row " +
                                 std::to_string(t));
      }
      w_mean = m;
      w_std = sd;

      std::vector<std::vector<Vector>> seqs;
      std::vector<Vector> labels;
      for (std::size_t a = cfg.model.seq_in - 1; a + 1 + cfg.model.horizon < W; ++a) {
        std::vector<Vector> seq;
        seq.reserve(cfg.model.seq_in);
        for (std::size_t s = a + 1 - cfg.model.seq_in; s <= a; ++s) {
          seq.push_back({(target[w0 + s] - w_mean) / w_std});
        }
        seqs.push_back(std::move(seq));
        if (cfg.model.seq_out) {
          Vector lab(cfg.model.seq_in);
          for (std::size_t s = 0; s < cfg.model.seq_in; ++s) {
            const std::size_t row = w0 + a + 1 - cfg.model.seq_in + s + 1 + cfg.model.horizon;
            lab[s] = (target[row] - w_mean) / w_std;
          }
          labels.push_back(std::move(lab));
        } else {
          labels.push_back({(target[w0 + a + 1 + cfg.model.horizon] - w_mean) / w_std});
        }
      }
      TrainConfig tc;
      tc.lr = cfg.model.lr;
      tc.clip_norm = cfg.model.clip_norm;
      tc.warm_start = true;
      tc.seed = cfg.model.seed + i;
      tc.epochs = fitted ? cfg.epochs_update : cfg.model.epochs;
      if (!fitted) params = init_params(cfg.model.units, 1, rng);
      fit(params, seqs, labels, cfg.model.seq_out, tc);
      fitted = true;
    }

    LstmState state = LstmState::zeros(cfg.model.units);
    LstmStepSignals last;
    for (std::size_t s = t + 1 - cfg.model.seq_in; s <= t; ++s) {
      auto [next, sig] = step(params, {(target[s] - w_mean) / w_std}, state);
      state = std::move(next);
      last = std::move(sig);
    }
    trace.anchors.push_back(t);
    trace.timestamps.push_back(table.timestamps[t]);
    for (std::size_t u = 0; u < cfg.model.units; ++u) {
      trace.forget(i, u) = last.forget[u];
      trace.input_times_node(i, u) = last.input_times_node[u];
      trace.output_gate(i, u) = last.output_gate[u];
      trace.cell_state(i, u) = last.cell_state[u];
      trace.hidden_state(i, u) = last.hidden_state[u];
    }
  }
  return trace;
}

struct SignificanceReport {
  double real_mse = 0.0;
  Vector random_mses;
  double percentile = 0.0;  // of the real MSE within the random distribution
  std::size_t n_runs = 0;
  std::uint64_t seed = 0;
  double gamma = 0.0;
  std::size_t k = 0;
  std::string config_hash;
};

// Mean explanation error across the fitted state x unit entries.
inline double explanation_mse(const ExplanationReport& rep) {
  double acc = 0.0;
  std::size_t count = 0;
  for (const ExplanationEntry& e : rep.entries) {
    if (e.note.empty()) {
      acc += e.fit_mse;
      ++count;
    }
  }
  if (count == 0) {
    throw std::runtime_error("explanation_mse: no fitted entries");
  }
  return acc / static_cast<double>(count);
}

// Benchmarks the real explanation against explanations of the same signals by
// i.i.d. standard-normal feature panels of identical shape.
inline SignificanceReport significance_test(const LstmParameters& params,
                                            const TimeSeriesTable& model_inputs,
                                            const TimeSeriesTable& exogenous,
                                            std::size_t seq_in, std::size_t k, double gamma,
                                            std::size_t n_runs, Rng& rng,
                                            StateCarry carry = StateCarry::kZeroPerSequence) {
  if (n_runs < 30) {
    throw std::invalid_argument("significance_test: need at least 30 runs, got " +
                                std::to_string(n_runs));
  }
  SignificanceReport rep;
  rep.n_runs = n_runs;
  rep.seed = rng.seed();
  rep.gamma = gamma;
  rep.k = k;

  const ExplanationReport real = lstm_laglasso(params, model_inputs, exogenous, seq_in, k,
                                               gamma, carry);
  rep.real_mse = explanation_mse(real);

  // the trace does not change across runs; only the regressors do
  const SignalTrace trace = extract_trace(params, model_inputs, seq_in, carry);
  const std::size_t n = model_inputs.n_rows();
  const std::size_t t0 = std::max(seq_in - 1, k);
  const std::size_t m = n - t0;
  Matrix hidden(m, params.units), cell(m, params.units);
  for (std::size_t j = 0; j < m; ++j) {
    const std::size_t trace_row = t0 + j - (seq_in - 1);
    for (std::size_t u = 0; u < params.units; ++u) {
      hidden(j, u) = trace.hidden_state(trace_row, u);
      cell(j, u) = trace.cell_state(trace_row, u);
    }
  }

  TimeSeriesTable random = exogenous;
  for (std::size_t c = 0; c < random.n_cols(); ++c) {
    random.column_names[c] = "rand" + std::to_string(c);
  }
  rep.random_mses.reserve(n_runs);
  for (std::size_t run = 0; run < n_runs; ++run) {
    for (Vector& col : random.columns) {
      for (double& v : col) v = rng.gaussian();
    }
    const LagDesignMatrix design = build_lag_matrix(random, k);
    Matrix X(m, design.X.cols());
    for (std::size_t j = 0; j < m; ++j) {
      const std::size_t design_row = t0 + j - k;
      for (std::size_t c = 0; c < design.X.cols(); ++c) X(j, c) = design.X(design_row, c);
    }
    const LagDesignMatrix aligned{std::move(X), design.column_names, design.k};
    const ExplanationReport r = detail::explain_from_signals(hidden, cell, aligned, gamma);
    rep.random_mses.push_back(explanation_mse(r));
  }

  std::size_t below = 0, equal = 0;
  for (const double v : rep.random_mses) {
    if (v < rep.real_mse) ++below;
    if (v == rep.real_mse) ++equal;
  }
  rep.percentile = 100.0 * (static_cast<double>(below) + 0.5 * static_cast<double>(equal)) /
                   static_cast<double>(n_runs);
  return rep;
}

}  // namespace ylab
