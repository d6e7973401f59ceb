#include <cmath>

#include <gtest/gtest.h>

#include "ylab/gradcheck.hpp"
#include "ylab/lstm.hpp"
#include "ylab/serialize.hpp"

namespace ylab {
namespace {

// Deliberately separate transcription of the cell update, written with plain
// loops and its own sigmoid, used as an oracle for step().
struct NaiveCell {
  static double sig(double x) { return 1.0 / (1.0 + std::exp(-x)); }

  static void update(const LstmParameters& p, const Vector& x, const Vector& c_prev,
                     const Vector& h_prev, Vector& c_out, Vector& h_out) {
    const std::size_t U = p.units;
    c_out.assign(U, 0.0);
    h_out.assign(U, 0.0);
    for (std::size_t u = 0; u < U; ++u) {
      double af = p.b_f[u], ai = p.b_i[u], ag = p.b_g[u], ao = p.b_o[u];
      for (std::size_t j = 0; j < p.inputs; ++j) {
        af += p.W_fx(u, j) * x[j];
        ai += p.W_ix(u, j) * x[j];
        ag += p.W_gx(u, j) * x[j];
        ao += p.W_ox(u, j) * x[j];
      }
      for (std::size_t j = 0; j < U; ++j) {
        af += p.W_fh(u, j) * h_prev[j];
        ai += p.W_ih(u, j) * h_prev[j];
        ag += p.W_gh(u, j) * h_prev[j];
        ao += p.W_oh(u, j) * h_prev[j];
      }
      const double f = sig(af);
      const double i = sig(ai);
      const double g = std::tanh(ag);
      const double o = sig(ao);
      c_out[u] = f * c_prev[u] + i * g;
      h_out[u] = o * std::tanh(c_out[u]);
    }
  }
};

TEST(LstmInit, ShapesBiasesAndBounds) {
  Rng rng(11);
  const LstmParameters p = init_params(3, 1, rng);
  EXPECT_EQ(p.W_fx.rows(), 3u);
  EXPECT_EQ(p.W_fx.cols(), 1u);
  EXPECT_EQ(p.W_fh.rows(), 3u);
  EXPECT_EQ(p.W_fh.cols(), 3u);
  EXPECT_EQ(p.b_f, (Vector{1.0, 1.0, 1.0}));
  EXPECT_EQ(p.b_i, (Vector{0.0, 0.0, 0.0}));

  Rng big_rng(12);
  const LstmParameters big = init_params(100, 1, big_rng);
  for (const double w : big.W_fx.data()) EXPECT_LE(std::abs(w), 1.0);
  for (const double w : big.W_fh.data()) EXPECT_LE(std::abs(w), 0.1);

  Rng r1(5), r2(5);
  EXPECT_EQ(init_params(2, 2, r1).flatten(), init_params(2, 2, r2).flatten());
  EXPECT_THROW(init_params(0, 1, rng), std::invalid_argument);
}

TEST(LstmStep, ZeroParametersGiveNeutralGates) {
  const LstmParameters p = LstmParameters::zeros(2, 1);
  auto [state, sig] = step(p, {0.7}, LstmState::zeros(2));
  for (std::size_t u = 0; u < 2; ++u) {
    EXPECT_DOUBLE_EQ(sig.forget[u], 0.5);
    EXPECT_DOUBLE_EQ(sig.output_gate[u], 0.5);
    EXPECT_DOUBLE_EQ(sig.input_times_node[u], 0.0);
    EXPECT_DOUBLE_EQ(state.c[u], 0.0);
    EXPECT_DOUBLE_EQ(state.h[u], 0.0);
  }
}

TEST(LstmStep, SaturatedGatesCarryMemory) {
  LstmParameters p = LstmParameters::zeros(1, 1);
  p.b_f = {100.0};   // forget ~ 1
  p.b_i = {-100.0};  // input gate ~ 0
  LstmState prev;
  prev.c = {0.7};
  prev.h = {0.0};
  auto [state, sig] = step(p, {0.3}, prev);
  EXPECT_NEAR(state.c[0], 0.7, 1e-8);

  // held over many steps the cell value must not drift
  LstmState st = prev;
  for (int t = 0; t < 200; ++t) {
    st = step(p, {0.3}, st).first;
  }
  EXPECT_NEAR(st.c[0], 0.7, 1e-6);
}

TEST(LstmStep, MatchesIndependentTranscription) {
  Rng rng(2025);
  for (int trial = 0; trial < 10; ++trial) {
    const std::size_t units = 1 + trial % 3;
    const std::size_t inputs = 1 + trial % 2;
    LstmParameters p = init_params(units, inputs, rng);
    // perturb all tensors so biases are not at their init values
    Vector flat = p.flatten();
    for (double& v : flat) v += 0.3 * rng.gaussian();
    p.unflatten(flat);

    Vector x(inputs), c_prev(units), h_prev(units);
    for (double& v : x) v = rng.gaussian();
    for (double& v : c_prev) v = rng.gaussian();
    for (double& v : h_prev) v = 0.5 * rng.gaussian();

    LstmState prev;
    prev.c = c_prev;
    prev.h = h_prev;
    auto [state, sig] = step(p, x, prev);

    Vector c_ref, h_ref;
    NaiveCell::update(p, x, c_prev, h_prev, c_ref, h_ref);
    for (std::size_t u = 0; u < units; ++u) {
      EXPECT_NEAR(state.c[u], c_ref[u], 1e-12);
      EXPECT_NEAR(state.h[u], h_ref[u], 1e-12);
    }
  }
}

TEST(LstmStep, DimensionMismatchRejected) {
  const LstmParameters p = LstmParameters::zeros(2, 3);
  EXPECT_THROW(step(p, {1.0}, LstmState::zeros(2)), std::invalid_argument);
  EXPECT_THROW(step(p, {1.0, 2.0, 3.0}, LstmState::zeros(1)), std::invalid_argument);
}

TEST(LstmForward, ZeroWeightsPredictBias) {
  LstmParameters p = LstmParameters::zeros(2, 1);
  p.b_out = 0.25;
  const LstmForward out = forward(p, {{0.1}, {0.2}, {0.3}}, true);
  ASSERT_EQ(out.predictions.size(), 3u);
  for (const double v : out.predictions) EXPECT_DOUBLE_EQ(v, 0.25);
  ASSERT_EQ(out.trace.size(), 3u);
}

TEST(LstmForward, SeqOutShapeAndFinalOnlyAgree) {
  Rng rng(8);
  const LstmParameters p = init_params(2, 1, rng);
  std::vector<Vector> seq;
  for (int t = 0; t < 6; ++t) seq.push_back({rng.gaussian()});
  const LstmForward full = forward(p, seq, true);
  const LstmForward last = forward(p, seq, false);
  ASSERT_EQ(full.predictions.size(), 6u);
  ASSERT_EQ(last.predictions.size(), 1u);
  EXPECT_DOUBLE_EQ(full.predictions.back(), last.predictions[0]);
  EXPECT_THROW(forward(p, {}, false), std::invalid_argument);
}

TEST(LstmForward, SingleStepReducesToStepPlusProjection) {
  Rng rng(9);
  const LstmParameters p = init_params(3, 2, rng);
  const Vector x = {0.4, -0.2};
  auto [state, sig] = step(p, x, LstmState::zeros(3));
  const LstmForward out = forward(p, {x}, false);
  EXPECT_DOUBLE_EQ(out.predictions[0], dot(p.w_out, state.h) + p.b_out);
  for (std::size_t u = 0; u < 3; ++u) {
    EXPECT_DOUBLE_EQ(out.trace[0].hidden_state[u], state.h[u]);
  }
}

TEST(LstmForward, DeterministicTrace) {
  Rng rng(10);
  const LstmParameters p = init_params(2, 1, rng);
  std::vector<Vector> seq;
  for (int t = 0; t < 20; ++t) seq.push_back({rng.gaussian()});
  const LstmForward a = forward(p, seq, true);
  const LstmForward b = forward(p, seq, true);
  EXPECT_EQ(a.predictions, b.predictions);
  for (std::size_t t = 0; t < seq.size(); ++t) {
    EXPECT_EQ(a.trace[t].cell_state, b.trace[t].cell_state);
  }
}

TEST(LstmGateRanges, HoldOnLongRandomReplay) {
  Rng rng(13);
  const LstmParameters p = init_params(3, 2, rng);
  LstmState st = LstmState::zeros(3);
  for (int t = 0; t < 1000; ++t) {
    const Vector x = {rng.gaussian(), rng.gaussian()};
    auto [next, sig] = step(p, x, st);
    st = next;
    for (std::size_t u = 0; u < 3; ++u) {
      EXPECT_GT(sig.forget[u], 0.0);
      EXPECT_LT(sig.forget[u], 1.0);
      EXPECT_GT(sig.output_gate[u], 0.0);
      EXPECT_LT(sig.output_gate[u], 1.0);
      EXPECT_GT(sig.hidden_state[u], -1.0);
      EXPECT_LT(sig.hidden_state[u], 1.0);
      EXPECT_NEAR(sig.hidden_state[u], sig.output_gate[u] * std::tanh(sig.cell_state[u]),
                  1e-12);
    }
  }
}

TEST(LstmFlatten, RoundTripAndCount) {
  Rng rng(14);
  LstmParameters p = init_params(3, 2, rng);
  const Vector flat = p.flatten();
  EXPECT_EQ(flat.size(), p.param_count());
  EXPECT_EQ(flat.size(), 4u * (3 * 2 + 3 * 3 + 3) + 3 + 1);
  LstmParameters q = LstmParameters::zeros(3, 2);
  q.unflatten(flat);
  EXPECT_EQ(q.flatten(), flat);
  EXPECT_THROW(q.unflatten(Vector(5)), std::invalid_argument);
}

Vector lstm_loss_gradient(const LstmParameters& base,
                          const std::vector<std::vector<Vector>>& batch,
                          const std::vector<Vector>& labels, bool seq_out, LossMode mode) {
  return backward(base, batch, labels, seq_out, mode).grad.flatten();
}

TEST(LstmBackward, MatchesFiniteDifferences) {
  Rng rng(77);
  for (int trial = 0; trial < 12; ++trial) {
    const std::size_t units = 1 + trial % 3;
    const std::size_t inputs = 1 + trial % 2;
    const std::size_t seq_len = 2 + trial % 5;
    const bool seq_out = trial % 2 == 0;
    const LossMode mode = (trial % 3 == 0) ? LossMode::kFinalStep : LossMode::kAllSteps;
    const LstmParameters p = init_params(units, inputs, rng);

    std::vector<std::vector<Vector>> batch;
    std::vector<Vector> labels;
    for (int s = 0; s < 2; ++s) {
      std::vector<Vector> seq;
      for (std::size_t t = 0; t < seq_len; ++t) {
        Vector x(inputs);
        for (double& v : x) v = rng.gaussian();
        seq.push_back(std::move(x));
      }
      batch.push_back(std::move(seq));
      Vector lab(seq_out ? seq_len : 1);
      for (double& v : lab) v = rng.gaussian();
      labels.push_back(std::move(lab));
    }

    const Vector analytic = lstm_loss_gradient(p, batch, labels, seq_out, mode);
    const Vector at = p.flatten();
    auto loss_at = [&](const Vector& theta) {
      LstmParameters q = LstmParameters::zeros(units, inputs);
      q.unflatten(theta);
      return backward(q, batch, labels, seq_out, mode).loss;
    };
    const Vector numeric = finite_diff_gradient(loss_at, at, 1e-5);
    EXPECT_LT(max_relative_error(analytic, numeric), 1e-4)
        << "units=" << units << " seq=" << seq_len << " seq_out=" << seq_out;
  }
}

TEST(LstmBackward, DuplicatedSampleLeavesMeanGradientUnchanged) {
  Rng rng(21);
  const LstmParameters p = init_params(2, 1, rng);
  std::vector<Vector> seq = {{0.1}, {-0.4}, {0.3}};
  const Vector label = {0.8};
  const Vector g1 = backward(p, {seq}, {label}, false).grad.flatten();
  const Vector g2 = backward(p, {seq, seq}, {label, label}, false).grad.flatten();
  ASSERT_EQ(g1.size(), g2.size());
  for (std::size_t i = 0; i < g1.size(); ++i) EXPECT_NEAR(g1[i], g2[i], 1e-15);
}

TEST(LstmBackward, ContractErrors) {
  const LstmParameters p = LstmParameters::zeros(1, 1);
  EXPECT_THROW(backward(p, {}, {}, false), std::invalid_argument);
  EXPECT_THROW(backward(p, {{{0.1}}}, {}, false), std::invalid_argument);
  EXPECT_THROW(backward(p, {{{0.1}, {0.2}}}, {{1.0, 2.0}}, false), std::invalid_argument);
}

TEST(LstmSerialize, JsonRoundTripBitIdentical) {
  Rng rng(31);
  const LstmParameters p = init_params(3, 2, rng);
  const LstmParameters q = lstm_from_json(lstm_to_json(p));
  EXPECT_EQ(p.flatten(), q.flatten());
  EXPECT_EQ(q.units, 3u);
  EXPECT_EQ(q.inputs, 2u);
}

}  // namespace
}  // namespace ylab
