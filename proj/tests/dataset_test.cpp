#include <cstdio>
#include <fstream>

#include <gtest/gtest.h>

#include "ylab/synth.hpp"
#include "ylab/timeseries.hpp"

namespace ylab {
namespace {

class TempCsv {
 public:
  explicit TempCsv(const std::string& content) {
    path_ = std::string(::testing::TempDir()) + "ylab_dataset_" +
            std::to_string(counter_++) + ".csv";
    std::ofstream out(path_);
    out << content;
  }
  ~TempCsv() { std::remove(path_.c_str()); }
  const std::string& path() const { return path_; }

 private:
  static int counter_;
  std::string path_;
};
int TempCsv::counter_ = 0;

TEST(LoadCsv, ParsesHeaderAndValues) {
  TempCsv f("date,y10,infl\n2001-01-01,4.5,2.0\n2001-01-02,4.6,2.1\n");
  const TimeSeriesTable t = load_csv(f.path());
  ASSERT_EQ(t.n_rows(), 2u);
  ASSERT_EQ(t.n_cols(), 2u);
  EXPECT_EQ(t.column_names[0], "y10");
  EXPECT_EQ(t.target_name, "y10");
  EXPECT_DOUBLE_EQ(t.col("infl")[1], 2.1);
  EXPECT_EQ(t.timestamps[0], "2001-01-01");
}

TEST(LoadCsv, SortsRowsByTimestamp) {
  TempCsv f("date,y\n2001-01-03,3\n2001-01-01,1\n2001-01-02,2\n");
  const TimeSeriesTable t = load_csv(f.path());
  EXPECT_EQ(t.timestamps, (std::vector<std::string>{"2001-01-01", "2001-01-02", "2001-01-03"}));
  EXPECT_EQ(t.col("y"), (Vector{1.0, 2.0, 3.0}));
}

TEST(LoadCsv, DuplicateTimestampNamesDate) {
  TempCsv f("date,y\n2001-01-01,1\n2001-01-01,2\n");
  try {
    load_csv(f.path());
    FAIL() << "expected duplicate-timestamp error";
  } catch (const std::exception& e) {
    EXPECT_NE(std::string(e.what()).find("2001-01-01"), std::string::npos) << e.what();
  }
}

TEST(LoadCsv, ForwardFillsMissingAndDropsLeadingGaps) {
  TempCsv f("date,a,b\n"
            "2001-01-01,1.0,NA\n"
            "2001-01-02,2.0,5.0\n"
            "2001-01-03,,6.0\n"
            "2001-01-04,4.0,\n");
  const TimeSeriesTable t = load_csv(f.path());
  // first row dropped: b unobserved until the second row
  ASSERT_EQ(t.n_rows(), 3u);
  EXPECT_EQ(t.col("a"), (Vector{2.0, 2.0, 4.0}));
  EXPECT_EQ(t.col("b"), (Vector{5.0, 6.0, 6.0}));
}

TEST(LoadCsv, SchemaMismatchIsNamed) {
  TempCsv f("date,a\n2001-01-01,1\n");
  try {
    load_csv(f.path(), {"a", "b"});
    FAIL() << "expected schema error";
  } catch (const std::exception& e) {
    EXPECT_NE(std::string(e.what()).find("b"), std::string::npos) << e.what();
  }
  EXPECT_NO_THROW(load_csv(f.path(), {"a"}));
}

TEST(LoadCsv, UnknownColumnRejectedUnderSchema) {
  TempCsv f("date,a,extra\n2001-01-01,1,2\n");
  try {
    load_csv(f.path(), {"a"});
    FAIL() << "expected unknown-column error";
  } catch (const std::exception& e) {
    EXPECT_NE(std::string(e.what()).find("extra"), std::string::npos) << e.what();
  }
}

TEST(SaveCsv, RoundTripsBitIdentically) {
  Rng rng(5);
  SynthConfig cfg;
  cfg.length = 40;
  cfg.decoys = 2;
  const TimeSeriesTable t = synth_generate(cfg, rng);
  const std::string path = std::string(::testing::TempDir()) + "ylab_roundtrip.csv";
  save_csv(t, path);
  const TimeSeriesTable back = load_csv(path);
  std::remove(path.c_str());
  ASSERT_EQ(back.n_rows(), t.n_rows());
  ASSERT_EQ(back.column_names, t.column_names);
  for (std::size_t c = 0; c < t.n_cols(); ++c) {
    for (std::size_t r = 0; r < t.n_rows(); ++r) {
      EXPECT_EQ(back.columns[c][r], t.columns[c][r]) << "col " << c << " row " << r;
    }
  }
}

TEST(LaggedFeatures, AppendsShiftedColumnsAndDropsWarmup) {
  TimeSeriesTable t;
  t.column_names = {"a", "b"};
  t.target_name = "a";
  t.columns = {{1.0, 2.0, 3.0, 4.0}, {10.0, 20.0, 30.0, 40.0}};
  t.timestamps = {"d1", "d2", "d3", "d4"};
  const TimeSeriesTable lagged = generate_lagged_features(t, 1);
  ASSERT_EQ(lagged.n_cols(), 4u);
  ASSERT_EQ(lagged.n_rows(), 3u);
  EXPECT_EQ(lagged.col("a"), (Vector{2.0, 3.0, 4.0}));
  EXPECT_EQ(lagged.col("a_lag1"), (Vector{1.0, 2.0, 3.0}));
  EXPECT_EQ(lagged.col("b_lag1"), (Vector{10.0, 20.0, 30.0}));
  EXPECT_THROW(generate_lagged_features(t, 0), std::invalid_argument);
  EXPECT_THROW(generate_lagged_features(t, 4), std::invalid_argument);
}

TimeSeriesTable ramp_table(std::size_t n) {
  TimeSeriesTable t;
  t.column_names = {"y"};
  t.target_name = "y";
  t.columns = {Vector(n)};
  for (std::size_t i = 0; i < n; ++i) {
    t.columns[0][i] = static_cast<double>(i + 1);
    t.timestamps.push_back("r" + std::to_string(i + 1));
  }
  return t;
}

TEST(Sequences, DirectLabelGeometry) {
  const TimeSeriesTable t = ramp_table(20);
  WindowSpec spec;
  spec.seq_in = 6;
  spec.horizon = 5;
  const auto samples = make_sequences(t, spec);
  // anchors 5..13: label at anchor+6 must exist (max row 19)
  ASSERT_EQ(samples.size(), 9u);
  EXPECT_EQ(samples[0].anchor, 5u);
  EXPECT_DOUBLE_EQ(samples[0].inputs[0][0], 1.0);
  EXPECT_DOUBLE_EQ(samples[0].inputs[5][0], 6.0);
  EXPECT_DOUBLE_EQ(samples[0].labels[0], 12.0);
  EXPECT_DOUBLE_EQ(samples.back().labels[0], 20.0);
}

TEST(Sequences, PerStepLabelsTrailByHorizonPlusOne) {
  const TimeSeriesTable t = ramp_table(20);
  WindowSpec spec;
  spec.seq_in = 6;
  spec.seq_out = 6;
  spec.horizon = 5;
  const auto samples = make_sequences(t, spec);
  ASSERT_FALSE(samples.empty());
  const SequenceSample& s = samples[0];
  ASSERT_EQ(s.labels.size(), 6u);
  for (std::size_t k = 0; k < 6; ++k) {
    EXPECT_DOUBLE_EQ(s.labels[k], s.inputs[k][0] + 6.0);
  }
}

TEST(Sequences, TooShortTableYieldsNothing) {
  const TimeSeriesTable t = ramp_table(6);
  WindowSpec spec;
  spec.seq_in = 6;
  spec.horizon = 5;
  EXPECT_TRUE(make_sequences(t, spec).empty());
}

TEST(Sequences, SpecValidation) {
  WindowSpec bad;
  bad.seq_in = 0;
  EXPECT_THROW(bad.validate(), std::invalid_argument);
  WindowSpec mismatch;
  mismatch.seq_in = 4;
  mismatch.seq_out = 3;
  EXPECT_THROW(mismatch.validate(), std::invalid_argument);
}

TEST(Normalization, FrozenOracleAndRoundTrip) {
  TimeSeriesTable t;
  t.column_names = {"y"};
  t.target_name = "y";
  t.columns = {{2.0, 4.0, 6.0}};
  t.timestamps = {"a", "b", "c"};
  const NormalizationStats st = fit_normalization(t);
  EXPECT_DOUBLE_EQ(st.mean[0], 4.0);
  EXPECT_NEAR(st.std[0], 1.632993161855452, 1e-15);
  const TimeSeriesTable n = apply_normalization(t, st);
  EXPECT_NEAR(n.columns[0][0], -1.224744871391589, 1e-15);
  EXPECT_NEAR(n.columns[0][1], 0.0, 1e-15);
  EXPECT_NEAR(n.columns[0][2], 1.224744871391589, 1e-15);
  const Vector raw = invert_normalization(n.columns[0], st, "y");
  for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(raw[i], t.columns[0][i], 1e-12);
}

TEST(Normalization, ZeroVarianceNamesColumn) {
  TimeSeriesTable t;
  t.column_names = {"flat"};
  t.target_name = "flat";
  t.columns = {{1.0, 1.0, 1.0}};
  t.timestamps = {"a", "b", "c"};
  try {
    fit_normalization(t);
    FAIL() << "expected zero-variance error";
  } catch (const std::exception& e) {
    EXPECT_NE(std::string(e.what()).find("flat"), std::string::npos) << e.what();
  }
}

TEST(Normalization, StatsIgnoreRowsOutsideFitSlice) {
  TimeSeriesTable t = ramp_table(10);
  const TimeSeriesTable head = slice_rows(t, 0, 5);
  const NormalizationStats st = fit_normalization(head);
  t.columns[0][9] = 1e9;  // perturb a row the fit never saw
  const NormalizationStats st2 = fit_normalization(slice_rows(t, 0, 5));
  EXPECT_EQ(st.mean[0], st2.mean[0]);
  EXPECT_EQ(st.std[0], st2.std[0]);
}

TEST(StaticSplit, SeventyThirtyRowCounts) {
  const TimeSeriesTable t = ramp_table(10);
  const auto [train, test] = static_split(t, 0.7);
  EXPECT_EQ(train.n_rows(), 7u);
  EXPECT_EQ(test.n_rows(), 3u);
  EXPECT_DOUBLE_EQ(train.columns[0].back(), 7.0);
  EXPECT_DOUBLE_EQ(test.columns[0].front(), 8.0);
  EXPECT_THROW(static_split(t, 0.0), std::invalid_argument);
  EXPECT_THROW(static_split(t, 1.0), std::invalid_argument);
}

TEST(SelectColumns, SubsetsAndErrors) {
  TimeSeriesTable t;
  t.column_names = {"a", "b", "c"};
  t.target_name = "a";
  t.columns = {{1.0}, {2.0}, {3.0}};
  t.timestamps = {"d"};
  const TimeSeriesTable sub = select_columns(t, {"c", "a"});
  EXPECT_EQ(sub.column_names, (std::vector<std::string>{"c", "a"}));
  EXPECT_THROW(select_columns(t, {"nope"}), std::invalid_argument);
}

TEST(Synth, DeterministicForSeedAndShaped) {
  SynthConfig cfg;
  cfg.length = 100;
  cfg.decoys = 3;
  Rng r1(cfg.seed), r2(cfg.seed);
  const TimeSeriesTable a = synth_generate(cfg, r1);
  const TimeSeriesTable b = synth_generate(cfg, r2);
  ASSERT_EQ(a.n_rows(), 100u);
  ASSERT_EQ(a.n_cols(), 5u);  // target, driver, 3 decoys
  EXPECT_EQ(a.column_names[0], "target");
  EXPECT_EQ(a.target_name, "target");
  for (std::size_t c = 0; c < a.n_cols(); ++c) {
    EXPECT_EQ(a.columns[c], b.columns[c]);
  }
  EXPECT_EQ(a.timestamps, b.timestamps);
}

TEST(Synth, DriverLagShowsUpAsCrossCorrelation) {
  SynthConfig cfg;
  cfg.length = 4000;
  cfg.decoys = 1;
  cfg.driver_lag = 5;
  cfg.driver_coef = 1.0;
  cfg.mean_reversion = 0.0;
  cfg.noise_std = 0.05;
  Rng rng(cfg.seed);
  const TimeSeriesTable t = synth_generate(cfg, rng);
  const Vector& y = t.col("target");
  const Vector& d = t.col("driver");
  auto corr_at = [&](std::size_t lag) {
    double acc = 0.0;
    for (std::size_t i = lag; i < t.n_rows(); ++i) acc += y[i] * d[i - lag];
    return acc / static_cast<double>(t.n_rows() - lag);
  };
  const double at_true = std::abs(corr_at(5));
  EXPECT_GT(at_true, 2.0 * std::abs(corr_at(2)));
  EXPECT_GT(at_true, 2.0 * std::abs(corr_at(0)));
}

TEST(Synth, RegimeShiftMovesSegmentMeans) {
  SynthConfig cfg;
  cfg.length = 600;
  cfg.decoys = 0;
  cfg.regimes = 2;
  cfg.regime_shift = 5.0;
  cfg.driver_coef = 0.0;
  cfg.noise_std = 0.1;
  Rng rng(9);
  const TimeSeriesTable t = synth_generate(cfg, rng);
  const Vector& y = t.col("target");
  double first = 0.0, second = 0.0;
  for (std::size_t i = 0; i < 300; ++i) first += y[i];
  for (std::size_t i = 300; i < 600; ++i) second += y[i];
  EXPECT_GT(std::abs(second - first) / 300.0, 2.0);
}

}  // namespace
}  // namespace ylab
