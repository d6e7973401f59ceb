#include <cmath>
#include <filesystem>
#include <fstream>

#include <gtest/gtest.h>

#include "ylab/lasso.hpp"
#include "ylab/synth.hpp"

namespace ylab {
namespace {

TimeSeriesTable two_feature_table() {
  TimeSeriesTable t;
  t.timestamps = {"2020-01-01", "2020-01-02", "2020-01-03", "2020-01-04"};
  t.column_names = {"a", "b"};
  t.columns = {{1.0, 2.0, 3.0, 4.0}, {10.0, 20.0, 30.0, 40.0}};
  t.target_name = "a";
  return t;
}

TEST(LagLabels, RoundTrip) {
  EXPECT_EQ(lag_label("rate", 3), "rate@lag3");
  const auto [f, l] = split_lag_label("rate@lag3");
  EXPECT_EQ(f, "rate");
  EXPECT_EQ(l, 3u);
  EXPECT_EQ(split_lag_label("plain").first, "plain");
  EXPECT_EQ(split_lag_label("plain").second, 0u);
}

TEST(LagMatrix, CountsAndOrdering) {
  const LagDesignMatrix d = build_lag_matrix(two_feature_table(), 1);
  EXPECT_EQ(d.X.rows(), 3u);
  EXPECT_EQ(d.X.cols(), 4u);
  ASSERT_EQ(d.column_names.size(), 4u);
  EXPECT_EQ(d.column_names[0], "a@lag0");
  EXPECT_EQ(d.column_names[1], "a@lag1");
  EXPECT_EQ(d.column_names[2], "b@lag0");
  EXPECT_EQ(d.column_names[3], "b@lag1");
  // row r of the design corresponds to time r+k
  EXPECT_DOUBLE_EQ(d.X(0, 0), 2.0);  // a at t=1
  EXPECT_DOUBLE_EQ(d.X(0, 1), 1.0);  // a at t=0
  EXPECT_DOUBLE_EQ(d.X(2, 3), 30.0);  // b at t=2
}

TEST(LagMatrix, WideTableColumnCount) {
  TimeSeriesTable t;
  const std::size_t n_feats = 159;
  for (std::size_t r = 0; r < 10; ++r) t.timestamps.push_back("2020-01-0" + std::to_string(r));
  Rng rng(1);
  for (std::size_t c = 0; c < n_feats; ++c) {
    t.column_names.push_back("f" + std::to_string(c));
    Vector col(10);
    for (double& v : col) v = rng.gaussian();
    t.columns.push_back(std::move(col));
  }
  t.target_name = "f0";
  const LagDesignMatrix d = build_lag_matrix(t, 5);
  EXPECT_EQ(d.X.cols(), 954u);
  EXPECT_EQ(d.X.rows(), 5u);
}

TEST(LagMatrix, BoundsAndErrors) {
  const TimeSeriesTable t = two_feature_table();
  EXPECT_THROW(build_lag_matrix(t, 0), std::invalid_argument);
  EXPECT_THROW(build_lag_matrix(t, 7), std::invalid_argument);
  EXPECT_THROW(build_lag_matrix(t, 4), std::invalid_argument);  // k >= length

  TimeSeriesTable longer;
  longer.column_names = {"x"};
  longer.target_name = "x";
  Vector col;
  for (int r = 0; r < 12; ++r) {
    longer.timestamps.push_back("t" + std::to_string(r));
    col.push_back(static_cast<double>(r));
  }
  longer.columns.push_back(std::move(col));
  EXPECT_THROW(build_lag_matrix(longer, 7), std::invalid_argument);
  EXPECT_NO_THROW(build_lag_matrix(longer, 7, true));  // explicit opt-in above 6
}

TEST(Standardize, ZeroMeanUnitStd) {
  LagDesignMatrix d;
  d.X = Matrix::from_rows({{1.0}, {2.0}, {3.0}});
  d.column_names = {"x@lag0"};
  const StandardizedDesign sd = standardize(d, {4.0, 5.0, 9.0});
  double mean = 0.0, sq = 0.0;
  for (std::size_t r = 0; r < 3; ++r) mean += sd.X(r, 0);
  mean /= 3.0;
  for (std::size_t r = 0; r < 3; ++r) sq += sd.X(r, 0) * sd.X(r, 0);
  EXPECT_NEAR(mean, 0.0, 1e-15);
  EXPECT_NEAR(sq / 3.0, 1.0, 1e-12);
  double smean = (sd.s[0] + sd.s[1] + sd.s[2]) / 3.0;
  EXPECT_NEAR(smean, 0.0, 1e-15);

  // idempotence
  LagDesignMatrix again;
  again.X = sd.X;
  again.column_names = sd.column_names;
  const StandardizedDesign sd2 = standardize(again, sd.s);
  for (std::size_t r = 0; r < 3; ++r) EXPECT_NEAR(sd2.X(r, 0), sd.X(r, 0), 1e-12);
}

TEST(Standardize, ConstantColumnDroppedAndReported) {
  LagDesignMatrix d;
  d.X = Matrix::from_rows({{1.0, 5.0}, {2.0, 5.0}, {3.0, 5.0}});
  d.column_names = {"live@lag0", "flat@lag0"};
  const StandardizedDesign sd = standardize(d, {1.0, 2.0, 4.0});
  EXPECT_EQ(sd.X.cols(), 1u);
  ASSERT_EQ(sd.dropped_columns.size(), 1u);
  EXPECT_EQ(sd.dropped_columns[0], "flat@lag0");
  ASSERT_EQ(sd.column_names.size(), 1u);
  EXPECT_EQ(sd.column_names[0], "live@lag0");

  EXPECT_THROW(standardize(d, {2.0, 2.0, 2.0}), std::invalid_argument);
}

TEST(LassoFit, GammaZeroSolvesSquareSystem) {
  // X = [[2,1],[1,3]], s = [3,5]: exact solution w = (0.8, 1.4)
  Matrix X = Matrix::from_rows({{2.0, 1.0}, {1.0, 3.0}});
  const LassoSolution sol = lasso_fit(X, {3.0, 5.0}, 0.0);
  ASSERT_EQ(sol.w.size(), 2u);
  EXPECT_NEAR(sol.w[0], 0.8, 1e-8);
  EXPECT_NEAR(sol.w[1], 1.4, 1e-8);
  EXPECT_NEAR(sol.objective, 0.0, 1e-12);
  EXPECT_EQ(sol.active_set.size(), 2u);
}

TEST(LassoFit, GammaZeroMatchesOrthogonalLeastSquares) {
  Matrix X = Matrix::from_rows({{1.0, 1.0}, {1.0, -1.0}, {1.0, 1.0}, {1.0, -1.0}});
  const Vector s = {2.0, 0.0, 4.0, -2.0};
  // orthogonal columns: w_j = x_j's/(x_j'x_j)
  double num0 = 0.0, num1 = 0.0;
  for (std::size_t r = 0; r < 4; ++r) {
    num0 += X(r, 0) * s[r];
    num1 += X(r, 1) * s[r];
  }
  const LassoSolution sol = lasso_fit(X, s, 0.0);
  EXPECT_NEAR(sol.w[0], num0 / 4.0, 1e-8);
  EXPECT_NEAR(sol.w[1], num1 / 4.0, 1e-8);
}

struct ToyFixture {
  StandardizedDesign sd;
};

ToyFixture sparse_toy() {
  Matrix X(50, 3);
  Rng rng(2024);
  for (std::size_t r = 0; r < 50; ++r) {
    for (std::size_t c = 0; c < 3; ++c) X(r, c) = rng.gaussian();
  }
  Vector s(50);
  for (std::size_t r = 0; r < 50; ++r) {
    s[r] = 1.5 * X(r, 0) - 2.0 * X(r, 2) + 0.1 * rng.gaussian();
  }
  LagDesignMatrix d;
  d.X = std::move(X);
  d.column_names = {"f0@lag0", "f1@lag0", "f2@lag0"};
  d.k = 0;
  ToyFixture fx;
  fx.sd = standardize(d, s);
  return fx;
}

TEST(LassoFit, SparseToyMatchesExhaustiveMinimizer) {
  const ToyFixture fx = sparse_toy();
  const LassoSolution sol = lasso_fit(fx.sd.X, fx.sd.s, 2.0, fx.sd.column_names);
  // frozen objective of an offline exhaustive minimization (grid scan plus
  // coordinate ternary search) on this exact fixture
  EXPECT_NEAR(sol.objective, 3.0255483629641637, 1e-6);
  ASSERT_EQ(sol.active_set.size(), 2u);
  EXPECT_EQ(sol.active_set[0].column, "f0@lag0");
  EXPECT_EQ(sol.active_set[1].column, "f2@lag0");
  EXPECT_GT(sol.w[0], 0.0);
  EXPECT_EQ(sol.w[1], 0.0);
  EXPECT_LT(sol.w[2], 0.0);
}

TEST(LassoFit, GammaMaxZeroesEverything) {
  const ToyFixture fx = sparse_toy();
  const double g_max = gamma_max(fx.sd.X, fx.sd.s);
  EXPECT_GT(g_max, 0.0);
  const LassoSolution at_max = lasso_fit(fx.sd.X, fx.sd.s, g_max);
  for (const double w : at_max.w) EXPECT_EQ(w, 0.0);
  EXPECT_TRUE(at_max.active_set.empty());

  const LassoSolution above = lasso_fit(fx.sd.X, fx.sd.s, 2.0 * g_max);
  for (const double w : above.w) EXPECT_EQ(w, 0.0);

  const LassoSolution below = lasso_fit(fx.sd.X, fx.sd.s, 0.99 * g_max);
  EXPECT_FALSE(below.active_set.empty());
}

TEST(LassoFit, KktCertificateHolds) {
  const ToyFixture fx = sparse_toy();
  for (const double g : {0.0, 0.5, 2.0, 10.0, 40.0}) {
    const LassoSolution sol = lasso_fit(fx.sd.X, fx.sd.s, g);
    const KktReport rep = check_kkt(fx.sd.X, fx.sd.s, sol);
    EXPECT_TRUE(rep.ok) << "gamma=" << g << " inactive excess=" << rep.max_inactive_excess
                        << " active gap=" << rep.max_active_gap;
  }
  // a corrupted solution must fail the certificate
  LassoSolution bad = lasso_fit(fx.sd.X, fx.sd.s, 2.0);
  bad.w[0] += 0.05;
  EXPECT_FALSE(check_kkt(fx.sd.X, fx.sd.s, bad).ok);
}

TEST(LassoFit, WarmStartNeverWorsensObjective) {
  const ToyFixture fx = sparse_toy();
  const LassoSolution coarse = lasso_fit(fx.sd.X, fx.sd.s, 20.0);
  const double start_obj = lasso_objective(fx.sd.X, fx.sd.s, coarse.w, 2.0);
  const LassoSolution warm = lasso_fit(fx.sd.X, fx.sd.s, 2.0, fx.sd.column_names, &coarse.w);
  EXPECT_LE(warm.objective, start_obj + 1e-12);
  // cold start from zero, same bound
  const Vector zeros(3, 0.0);
  EXPECT_LE(warm.objective, lasso_objective(fx.sd.X, fx.sd.s, zeros, 2.0));
}

TEST(LassoPath, ShapesAndSentinels) {
  const ToyFixture fx = sparse_toy();
  const double g_max = gamma_max(fx.sd.X, fx.sd.s);

  const LassoPath single = lasso_path(fx.sd.X, fx.sd.s, {2.0 * g_max}, fx.sd.column_names);
  ASSERT_EQ(single.gammas.size(), 1u);
  EXPECT_EQ(single.n_active[0], 0u);

  const Vector grid = default_gamma_grid(g_max);
  ASSERT_EQ(grid.size(), 50u);
  EXPECT_DOUBLE_EQ(grid.front(), g_max);
  EXPECT_NEAR(grid.back(), g_max * 1e-3, g_max * 1e-9);
  for (std::size_t i = 1; i < grid.size(); ++i) EXPECT_LT(grid[i], grid[i - 1]);

  const LassoPath path = lasso_path(fx.sd.X, fx.sd.s, grid, fx.sd.column_names);
  EXPECT_EQ(path.n_active.size(), grid.size());
  EXPECT_EQ(path.objectives.size(), grid.size());
  EXPECT_EQ(path.fit_mse.size(), grid.size());
  EXPECT_EQ(path.solutions.size(), grid.size());
  EXPECT_EQ(path.n_active.front(), 0u);

  // at the small end the true support is active
  const LassoSolution& tail = path.solutions.back();
  bool has0 = false, has2 = false;
  for (const ActiveWeight& a : tail.active_set) {
    has0 |= a.column == "f0@lag0";
    has2 |= a.column == "f2@lag0";
  }
  EXPECT_TRUE(has0);
  EXPECT_TRUE(has2);

  EXPECT_THROW(lasso_path(fx.sd.X, fx.sd.s, {1.0, 2.0}, fx.sd.column_names),
               std::invalid_argument);  // ascending grid
}

TEST(LassoPath, CsvExport) {
  const ToyFixture fx = sparse_toy();
  const LassoPath path =
      lasso_path(fx.sd.X, fx.sd.s, {40.0, 4.0, 0.4}, fx.sd.column_names);
  const std::filesystem::path file =
      std::filesystem::path(testing::TempDir()) / "path.csv";
  save_path_csv(file.string(), path);
  std::ifstream in(file);
  std::string line;
  ASSERT_TRUE(std::getline(in, line));
  EXPECT_EQ(line, "gamma,n_active,objective,mse");
  int rows = 0;
  while (std::getline(in, line)) ++rows;
  EXPECT_EQ(rows, 3);
}

TEST(LassoFit, TwoLagsOfOneFeatureBothSurvive) {
  // target depends on the same feature at lags 0 and 2 with independent effects
  const std::size_t n = 400;
  Rng rng(55);
  Vector f(n);
  for (double& v : f) v = rng.gaussian();
  Vector s;
  TimeSeriesTable t;
  for (std::size_t r = 0; r < n; ++r) t.timestamps.push_back("r" + std::to_string(r));
  t.column_names = {"f"};
  t.columns = {f};
  t.target_name = "f";
  const std::size_t k = 2;
  const LagDesignMatrix d = build_lag_matrix(t, k);
  for (std::size_t r = k; r < n; ++r) {
    s.push_back(1.0 * f[r] + 1.0 * f[r - 2] + 0.05 * rng.gaussian());
  }
  const StandardizedDesign sd = standardize(d, s);
  const double g = gamma_max(sd.X, sd.s) * 0.01;
  const LassoSolution sol = lasso_fit(sd.X, sd.s, g, sd.column_names);
  bool lag0 = false, lag2 = false;
  for (const ActiveWeight& a : sol.active_set) {
    if (a.feature == "f" && a.lag == 0) lag0 = true;
    if (a.feature == "f" && a.lag == 2) lag2 = true;
  }
  EXPECT_TRUE(lag0);
  EXPECT_TRUE(lag2);
}

TEST(RelevantFeatures, PlantedDriverRecovered) {
  SynthConfig cfg;
  cfg.length = 600;
  cfg.decoys = 8;
  cfg.driver_lag = 5;
  cfg.driver_coef = 0.8;
  cfg.noise_std = 0.05;
  cfg.seed = 77;
  const TimeSeriesTable table = synth_generate(cfg);

  std::vector<std::string> names;
  for (const std::string& c : table.column_names) {
    if (c != table.target_name) names.push_back(c);
  }
  const TimeSeriesTable feats = select_columns(table, names);
  const Vector target = table.target();
  const RelevantFeatures rel =
      select_relevant_features(target, feats, 0, 6, 1.0);
  bool found = false;
  for (const ActiveWeight& a : rel.active) {
    if (a.feature == "driver" && a.lag == 5) found = true;
  }
  EXPECT_TRUE(found);

  TimeSeriesTable empty;
  EXPECT_THROW(select_relevant_features(target, empty, 0, 6, 1.0), std::invalid_argument);
}

TEST(RelevantFeatures, StrongerPenaltyKeepsFewer) {
  const std::size_t n = 300;
  Rng rng(91);
  TimeSeriesTable t;
  for (std::size_t r = 0; r < n; ++r) t.timestamps.push_back("r" + std::to_string(r));
  for (int c = 0; c < 6; ++c) {
    t.column_names.push_back("noise" + std::to_string(c));
    Vector col(n);
    for (double& v : col) v = rng.gaussian();
    t.columns.push_back(std::move(col));
  }
  t.target_name = "noise0";
  Vector target(n);
  for (double& v : target) v = rng.gaussian();

  const LagDesignMatrix d = build_lag_matrix(t, 3);
  Vector aligned(target.begin() + 3, target.end());
  const StandardizedDesign sd = standardize(d, aligned);
  const double g_max = gamma_max(sd.X, sd.s);
  const RelevantFeatures strong = select_relevant_features(target, t, 0, 3, g_max / 2.0);
  const RelevantFeatures weak = select_relevant_features(target, t, 0, 3, g_max / 10.0);
  EXPECT_LE(strong.active.size(), weak.active.size());
}

}  // namespace
}  // namespace ylab
