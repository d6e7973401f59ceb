#pragma once

#include <cmath>
#include <cstddef>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "ylab/matrix.hpp"
#include "ylab/timeseries.hpp"

namespace ylab {

// Lag-expanded regression design: one column per (feature, lag) pair, ordered
// feature-major with lags 0..k. Row r of X describes time r+k of the source
// table, so every cell looks backward only.
struct LagDesignMatrix {
  Matrix X;
  std::vector<std::string> column_names;  // "<feature>@lag<j>"
  std::size_t k = 0;
};

inline std::string lag_label(const std::string& feature, std::size_t lag) {
  return feature + "@lag" + std::to_string(lag);
}

// Splits "<feature>@lag<j>" back into its parts; lag stays 0 and the whole
// label becomes the feature when the suffix is absent.
inline std::pair<std::string, std::size_t> split_lag_label(const std::string& label) {
  const std::size_t pos = label.rfind("@lag");
  if (pos == std::string::npos) return {label, 0};
  const std::string tail = label.substr(pos + 4);
  if (tail.empty() || tail.find_first_not_of("0123456789") != std::string::npos) {
    return {label, 0};
  }
  return {label.substr(0, pos), static_cast<std::size_t>(std::stoul(tail))};
}

inline LagDesignMatrix build_lag_matrix(const TimeSeriesTable& table, std::size_t k,
                                        bool allow_large_k = false) {
  if (k < 1) throw std::invalid_argument("build_lag_matrix: k must be >= 1");
  if (k > 6 && !allow_large_k) {
    throw std::invalid_argument("build_lag_matrix: k=" + std::to_string(k) +
                                " exceeds the default bound 6 (pass allow_large_k)");
  }
  if (table.n_cols() == 0) throw std::invalid_argument("build_lag_matrix: empty feature table");
  if (k >= table.n_rows()) {
    throw std::invalid_argument("build_lag_matrix: k=" + std::to_string(k) +
                                " leaves no rows out of " + std::to_string(table.n_rows()));
  }
  const std::size_t rows = table.n_rows() - k;
  LagDesignMatrix out;
  out.k = k;
  out.X = Matrix(rows, table.n_cols() * (k + 1));
  out.column_names.reserve(out.X.cols());
  std::size_t col = 0;
  for (std::size_t f = 0; f < table.n_cols(); ++f) {
    const Vector& src = table.columns[f];
    for (std::size_t lag = 0; lag <= k; ++lag, ++col) {
      out.column_names.push_back(lag_label(table.column_names[f], lag));
      for (std::size_t r = 0; r < rows; ++r) {
        out.X(r, col) = src[r + k - lag];
      }
    }
  }
  return out;
}

// Zero-mean unit-variance copies of the design and target. Constant columns
// cannot be standardized; they are removed and listed in dropped_columns.
struct StandardizedDesign {
  Matrix X;
  Vector s;
  std::vector<std::string> column_names;
  Vector col_mean, col_std;
  double s_mean = 0.0, s_std = 1.0;
  std::vector<std::string> dropped_columns;
};

inline StandardizedDesign standardize(const LagDesignMatrix& design, const Vector& s) {
  const Matrix& X = design.X;
  if (X.rows() != s.size()) {
    throw std::invalid_argument("standardize: " + std::to_string(X.rows()) +
                                " design rows vs " + std::to_string(s.size()) + " targets");
  }
  if (X.rows() < 2) throw std::invalid_argument("standardize: need at least 2 rows");
  const double n = static_cast<double>(X.rows());

  StandardizedDesign out;
  std::vector<std::size_t> keep;
  Vector means(X.cols()), stds(X.cols());
  for (std::size_t j = 0; j < X.cols(); ++j) {
    double mean = 0.0;
    for (std::size_t r = 0; r < X.rows(); ++r) mean += X(r, j);
    mean /= n;
    double var = 0.0;
    for (std::size_t r = 0; r < X.rows(); ++r) {
      const double d = X(r, j) - mean;
      var += d * d;
    }
    const double sd = std::sqrt(var / n);
    means[j] = mean;
    stds[j] = sd;
    if (sd == 0.0) {
      out.dropped_columns.push_back(design.column_names[j]);
    } else {
      keep.push_back(j);
    }
  }

  out.X = Matrix(X.rows(), keep.size());
  out.column_names.reserve(keep.size());
  out.col_mean.reserve(keep.size());
  out.col_std.reserve(keep.size());
  for (std::size_t jj = 0; jj < keep.size(); ++jj) {
    const std::size_t j = keep[jj];
    out.column_names.push_back(design.column_names[j]);
    out.col_mean.push_back(means[j]);
    out.col_std.push_back(stds[j]);
    for (std::size_t r = 0; r < X.rows(); ++r) {
      out.X(r, jj) = (X(r, j) - means[j]) / stds[j];
    }
  }

  double s_mean = 0.0;
  for (const double v : s) s_mean += v;
  s_mean /= n;
  double s_var = 0.0;
  for (const double v : s) {
    const double d = v - s_mean;
    s_var += d * d;
  }
  const double s_std = std::sqrt(s_var / n);
  if (s_std == 0.0) {
    throw std::invalid_argument("standardize: target has zero variance");
  }
  out.s_mean = s_mean;
  out.s_std = s_std;
  out.s.resize(s.size());
  for (std::size_t r = 0; r < s.size(); ++r) out.s[r] = (s[r] - s_mean) / s_std;
  return out;
}

struct ActiveWeight {
  std::size_t index = 0;  // column index in the fitted design
  std::string column;     // "<feature>@lag<j>" label when available
  std::string feature;
  std::size_t lag = 0;
  double weight = 0.0;
};

struct LassoSolution {
  Vector w;
  double gamma = 0.0;
  double objective = 0.0;
  std::size_t sweeps = 0;
  std::vector<ActiveWeight> active_set;
};

inline double lasso_objective(const Matrix& X, const Vector& s, const Vector& w, double gamma) {
  double obj = 0.0;
  for (std::size_t r = 0; r < X.rows(); ++r) {
    double pred = 0.0;
    const double* row = X.row_ptr(r);
    for (std::size_t j = 0; j < X.cols(); ++j) pred += row[j] * w[j];
    const double d = pred - s[r];
    obj += d * d;
  }
  for (const double v : w) obj += gamma * std::abs(v);
  return obj;
}

inline double gamma_max(const Matrix& X, const Vector& s) {
  double best = 0.0;
  for (std::size_t j = 0; j < X.cols(); ++j) {
    double corr = 0.0;
    for (std::size_t r = 0; r < X.rows(); ++r) corr += X(r, j) * s[r];
    best = std::max(best, std::abs(corr));
  }
  return 2.0 * best;
}

namespace detail {

inline double soft_threshold(double x, double t) {
  if (x > t) return x - t;
  if (x < -t) return x + t;
  return 0.0;
}

}  // namespace detail

// Minimizes ||Xw - s||^2 + gamma*||w||_1 by cyclic coordinate descent with
// soft-thresholding. Converged when the largest coordinate change in a sweep
// drops below 1e-8; a 1e5-sweep cap turns stalls into an error that carries
// the last objective value.
inline LassoSolution lasso_fit(const Matrix& X, const Vector& s, double gamma,
                               const std::vector<std::string>& column_names = {},
                               const Vector* warm_start = nullptr) {
  if (gamma < 0.0) throw std::invalid_argument("lasso_fit: gamma must be >= 0");
  if (X.rows() != s.size()) {
    throw std::invalid_argument("lasso_fit: " + std::to_string(X.rows()) + " rows vs " +
                                std::to_string(s.size()) + " targets");
  }
  if (!column_names.empty() && column_names.size() != X.cols()) {
    throw std::invalid_argument("lasso_fit: column name count mismatch");
  }
  const std::size_t p = X.cols();

  Vector colsq(p, 0.0);
  for (std::size_t j = 0; j < p; ++j) {
    for (std::size_t r = 0; r < X.rows(); ++r) colsq[j] += X(r, j) * X(r, j);
  }

  LassoSolution sol;
  sol.gamma = gamma;
  sol.w = warm_start ? *warm_start : Vector(p, 0.0);
  if (sol.w.size() != p) throw std::invalid_argument("lasso_fit: warm start length mismatch");

  // residual r = s - Xw
  Vector resid = s;
  for (std::size_t j = 0; j < p; ++j) {
    if (sol.w[j] == 0.0) continue;
    for (std::size_t r = 0; r < X.rows(); ++r) resid[r] -= X(r, j) * sol.w[j];
  }

  const double tol = 1e-8;
  const std::size_t max_sweeps = 100000;
  const double half_gamma = gamma / 2.0;
  for (std::size_t sweep = 0; sweep < max_sweeps; ++sweep) {
    double max_delta = 0.0;
    for (std::size_t j = 0; j < p; ++j) {
      if (colsq[j] == 0.0) continue;
      double rho = colsq[j] * sol.w[j];
      for (std::size_t r = 0; r < X.rows(); ++r) rho += X(r, j) * resid[r];
      const double w_new = detail::soft_threshold(rho, half_gamma) / colsq[j];
      const double delta = w_new - sol.w[j];
      if (delta != 0.0) {
        for (std::size_t r = 0; r < X.rows(); ++r) resid[r] -= X(r, j) * delta;
        sol.w[j] = w_new;
        max_delta = std::max(max_delta, std::abs(delta));
      }
    }
    if (max_delta < tol) {
      sol.sweeps = sweep + 1;
      double fit = 0.0;
      for (const double v : resid) fit += v * v;
      sol.objective = fit;
      for (const double v : sol.w) sol.objective += gamma * std::abs(v);
      for (std::size_t j = 0; j < p; ++j) {
        if (sol.w[j] == 0.0) continue;
        ActiveWeight a;
        a.index = j;
        a.column = column_names.empty() ? "col" + std::to_string(j) : column_names[j];
        auto [feature, lag] = split_lag_label(a.column);
        a.feature = feature;
        a.lag = lag;
        a.weight = sol.w[j];
        sol.active_set.push_back(a);
      }
      return sol;
    }
  }
  throw std::runtime_error("lasso_fit: no convergence after " + std::to_string(max_sweeps) +
                           " sweeps, last objective " +
                           std::to_string(lasso_objective(X, s, sol.w, gamma)));
}

// Subgradient optimality certificate: |2 x_j^T (Xw - s)| <= gamma + tol for
// every column, with equality and opposite sign on active coordinates.
struct KktReport {
  bool ok = true;
  double max_inactive_excess = 0.0;  // max over inactive of |corr| - gamma
  double max_active_gap = 0.0;       // max over active of | corr + gamma*sign(w) |
};

inline KktReport check_kkt(const Matrix& X, const Vector& s, const LassoSolution& sol,
                           double tol = 1e-6) {
  KktReport rep;
  Vector fitted_resid(s.size());
  for (std::size_t r = 0; r < X.rows(); ++r) {
    double pred = 0.0;
    const double* row = X.row_ptr(r);
    for (std::size_t j = 0; j < X.cols(); ++j) pred += row[j] * sol.w[j];
    fitted_resid[r] = pred - s[r];
  }
  for (std::size_t j = 0; j < X.cols(); ++j) {
    double corr = 0.0;
    for (std::size_t r = 0; r < X.rows(); ++r) corr += 2.0 * X(r, j) * fitted_resid[r];
    if (sol.w[j] == 0.0) {
      rep.max_inactive_excess = std::max(rep.max_inactive_excess, std::abs(corr) - sol.gamma);
    } else {
      const double sign = sol.w[j] > 0.0 ? 1.0 : -1.0;
      rep.max_active_gap = std::max(rep.max_active_gap, std::abs(corr + sol.gamma * sign));
    }
  }
  rep.ok = rep.max_inactive_excess <= tol && rep.max_active_gap <= tol;
  return rep;
}

struct LassoPath {
  Vector gammas;
  std::vector<std::size_t> n_active;
  Vector objectives;
  Vector fit_mse;
  std::vector<LassoSolution> solutions;
};

inline Vector default_gamma_grid(double g_max, std::size_t points = 50, double floor_ratio = 1e-3) {
  if (points < 2 || g_max <= 0.0 || floor_ratio <= 0.0 || floor_ratio >= 1.0) {
    throw std::invalid_argument("default_gamma_grid: need points >= 2, g_max > 0, ratio in (0,1)");
  }
  Vector grid(points);
  const double step = std::pow(floor_ratio, 1.0 / static_cast<double>(points - 1));
  double g = g_max;
  for (std::size_t i = 0; i < points; ++i, g *= step) grid[i] = g;
  return grid;
}

// Warm-started fits along a descending gamma grid.
inline LassoPath lasso_path(const Matrix& X, const Vector& s, const Vector& grid,
                            const std::vector<std::string>& column_names = {}) {
  if (grid.empty()) throw std::invalid_argument("lasso_path: empty grid");
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (grid[i] <= 0.0) throw std::invalid_argument("lasso_path: gammas must be positive");
    if (i > 0 && grid[i] >= grid[i - 1]) {
      throw std::invalid_argument("lasso_path: grid must be strictly descending");
    }
  }
  LassoPath path;
  path.gammas = grid;
  Vector w(X.cols(), 0.0);
  for (const double gamma : grid) {
    LassoSolution sol = lasso_fit(X, s, gamma, column_names, &w);
    w = sol.w;
    path.n_active.push_back(sol.active_set.size());
    path.objectives.push_back(sol.objective);
    double fit = 0.0;
    for (std::size_t r = 0; r < X.rows(); ++r) {
      double pred = 0.0;
      const double* row = X.row_ptr(r);
      for (std::size_t j = 0; j < X.cols(); ++j) pred += row[j] * w[j];
      const double d = pred - s[r];
      fit += d * d;
    }
    path.fit_mse.push_back(fit / static_cast<double>(X.rows()));
    path.solutions.push_back(std::move(sol));
  }
  return path;
}

inline void save_path_csv(const std::string& file, const LassoPath& path) {
  std::ofstream out(file);
  if (!out) throw std::runtime_error("save_path_csv: cannot open " + file);
  out << "gamma,n_active,objective,mse\n";
  for (std::size_t i = 0; i < path.gammas.size(); ++i) {
    out << path.gammas[i] << ',' << path.n_active[i] << ',' << path.objectives[i] << ','
        << path.fit_mse[i] << '\n';
  }
}

struct RelevantFeatures {
  std::vector<ActiveWeight> active;
  double gamma = 0.0;
  std::vector<std::string> dropped_columns;
};

// Static feature screening for the lag-feature networks: regress the target
// at t+1+horizon on the lag-expanded feature rows at time t and keep the
// active set at the supplied gamma.
inline RelevantFeatures select_relevant_features(const Vector& target,
                                                 const TimeSeriesTable& features,
                                                 std::size_t horizon, std::size_t k,
                                                 double gamma) {
  if (target.size() != features.n_rows()) {
    throw std::invalid_argument("select_relevant_features: target length " +
                                std::to_string(target.size()) + " vs " +
                                std::to_string(features.n_rows()) + " feature rows");
  }
  LagDesignMatrix design = build_lag_matrix(features, k);
  // design row r describes time r+k; it may predict target[r+k+1+horizon]
  const std::size_t offset = 1 + horizon;
  if (design.X.rows() <= offset + 1) {
    throw std::invalid_argument("select_relevant_features: not enough rows for horizon " +
                                std::to_string(horizon));
  }
  const std::size_t usable = design.X.rows() - offset;
  Matrix X(usable, design.X.cols());
  Vector s(usable);
  for (std::size_t r = 0; r < usable; ++r) {
    for (std::size_t j = 0; j < design.X.cols(); ++j) X(r, j) = design.X(r, j);
    s[r] = target[r + k + offset];
  }
  LagDesignMatrix trimmed{std::move(X), design.column_names, design.k};
  StandardizedDesign std_design = standardize(trimmed, s);
  LassoSolution sol = lasso_fit(std_design.X, std_design.s, gamma, std_design.column_names);
  RelevantFeatures out;
  out.gamma = gamma;
  out.active = sol.active_set;
  out.dropped_columns = std_design.dropped_columns;
  return out;
}

}  // namespace ylab
