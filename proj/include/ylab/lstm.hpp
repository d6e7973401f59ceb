#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "ylab/activations.hpp"
#include "ylab/matrix.hpp"
#include "ylab/rng.hpp"

namespace ylab {

// Single-layer LSTM cell with a linear regression head. The four gate
// networks are kept as separate tensors so each one can be inspected and
// serialized by name.
struct LstmParameters {
  std::size_t units = 0;
  std::size_t inputs = 0;

  Matrix W_fx, W_fh;  // forget gate
  Vector b_f;
  Matrix W_ix, W_ih;  // input gate
  Vector b_i;
  Matrix W_gx, W_gh;  // input node (candidate values)
  Vector b_g;
  Matrix W_ox, W_oh;  // output gate
  Vector b_o;
  Vector w_out;  // linear head: prediction = w_out . h + b_out
  double b_out = 0.0;

  static LstmParameters zeros(std::size_t units, std::size_t inputs) {
    LstmParameters p;
    p.units = units;
    p.inputs = inputs;
    p.W_fx = Matrix(units, inputs);
    p.W_fh = Matrix(units, units);
    p.b_f = Vector(units, 0.0);
    p.W_ix = Matrix(units, inputs);
    p.W_ih = Matrix(units, units);
    p.b_i = Vector(units, 0.0);
    p.W_gx = Matrix(units, inputs);
    p.W_gh = Matrix(units, units);
    p.b_g = Vector(units, 0.0);
    p.W_ox = Matrix(units, inputs);
    p.W_oh = Matrix(units, units);
    p.b_o = Vector(units, 0.0);
    p.w_out = Vector(units, 0.0);
    p.b_out = 0.0;
    return p;
  }

  std::size_t param_count() const {
    return 4 * (units * inputs + units * units + units) + units + 1;
  }

  Vector flatten() const {
    Vector out;
    out.reserve(param_count());
    auto push_m = [&](const Matrix& m) {
      out.insert(out.end(), m.data().begin(), m.data().end());
    };
    auto push_v = [&](const Vector& v) { out.insert(out.end(), v.begin(), v.end()); };
    push_m(W_fx); push_m(W_fh); push_v(b_f);
    push_m(W_ix); push_m(W_ih); push_v(b_i);
    push_m(W_gx); push_m(W_gh); push_v(b_g);
    push_m(W_ox); push_m(W_oh); push_v(b_o);
    push_v(w_out);
    out.push_back(b_out);
    return out;
  }

  void unflatten(const Vector& flat) {
    if (flat.size() != param_count()) {
      throw std::invalid_argument("LstmParameters::unflatten: expected " +
                                  std::to_string(param_count()) + " values, got " +
                                  std::to_string(flat.size()));
    }
    std::size_t pos = 0;
    auto take_m = [&](Matrix& m) {
      std::copy(flat.begin() + pos, flat.begin() + pos + m.size(), m.data().begin());
      pos += m.size();
    };
    auto take_v = [&](Vector& v) {
      std::copy(flat.begin() + pos, flat.begin() + pos + v.size(), v.begin());
      pos += v.size();
    };
    take_m(W_fx); take_m(W_fh); take_v(b_f);
    take_m(W_ix); take_m(W_ih); take_v(b_i);
    take_m(W_gx); take_m(W_gh); take_v(b_g);
    take_m(W_ox); take_m(W_oh); take_v(b_o);
    take_v(w_out);
    b_out = flat[pos];
  }
};

struct LstmState {
  Vector c;
  Vector h;

  static LstmState zeros(std::size_t units) { return {Vector(units, 0.0), Vector(units, 0.0)}; }
};

// The five instrumented locations inside the cell, one value per unit.
struct LstmStepSignals {
  Vector forget;            // in (0,1)
  Vector input_times_node;  // i (.) g, the amount actually added to the cell state
  Vector output_gate;       // in (0,1)
  Vector cell_state;        // unbounded
  Vector hidden_state;      // in (-1,1)
};

// Weights uniform in +-1/sqrt(fan_in); forget-gate bias starts at 1 so the
// cell keeps its memory during early training, all other biases at zero.
inline LstmParameters init_params(std::size_t units, std::size_t inputs, Rng& rng) {
  if (units < 1 || inputs < 1) {
    throw std::invalid_argument("init_params: units and inputs must be >= 1");
  }
  LstmParameters p = LstmParameters::zeros(units, inputs);
  const double bx = 1.0 / std::sqrt(static_cast<double>(inputs));
  const double bh = 1.0 / std::sqrt(static_cast<double>(units));
  auto fill = [&](Matrix& m, double bound) {
    for (double& v : m.data()) v = rng.uniform(-bound, bound);
  };
  fill(p.W_fx, bx); fill(p.W_fh, bh);
  fill(p.W_ix, bx); fill(p.W_ih, bh);
  fill(p.W_gx, bx); fill(p.W_gh, bh);
  fill(p.W_ox, bx); fill(p.W_oh, bh);
  for (double& v : p.w_out) v = rng.uniform(-bh, bh);
  for (double& v : p.b_f) v = 1.0;
  return p;
}

namespace detail {

inline Vector gate_preact(const Matrix& wx, const Vector& x, const Matrix& wh,
                          const Vector& h_prev, const Vector& b) {
  Vector a = matvec(wx, x);
  const Vector rec = matvec(wh, h_prev);
  for (std::size_t i = 0; i < a.size(); ++i) a[i] += rec[i] + b[i];
  return a;
}

}  // namespace detail

// One cell update:
//   f = sigmoid(W_fx x + W_fh h_prev + b_f)
//   i = sigmoid(W_ix x + W_ih h_prev + b_i)
//   g = tanh   (W_gx x + W_gh h_prev + b_g)
//   o = sigmoid(W_ox x + W_oh h_prev + b_o)
//   c = f (.) c_prev + i (.) g
//   h = o (.) tanh(c)
inline std::pair<LstmState, LstmStepSignals> step(const LstmParameters& p, const Vector& x,
                                                  const LstmState& prev) {
  if (x.size() != p.inputs) {
    throw std::invalid_argument("lstm step: input length " + std::to_string(x.size()) +
                                " does not match model inputs " + std::to_string(p.inputs));
  }
  if (prev.c.size() != p.units || prev.h.size() != p.units) {
    throw std::invalid_argument("lstm step: state length does not match model units " +
                                std::to_string(p.units));
  }
  const Vector f = sigmoid(detail::gate_preact(p.W_fx, x, p.W_fh, prev.h, p.b_f));
  const Vector i = sigmoid(detail::gate_preact(p.W_ix, x, p.W_ih, prev.h, p.b_i));
  const Vector g = tanh_act(detail::gate_preact(p.W_gx, x, p.W_gh, prev.h, p.b_g));
  const Vector o = sigmoid(detail::gate_preact(p.W_ox, x, p.W_oh, prev.h, p.b_o));

  LstmState next;
  next.c.resize(p.units);
  next.h.resize(p.units);
  LstmStepSignals sig;
  sig.forget = f;
  sig.output_gate = o;
  sig.input_times_node = hadamard(i, g);
  for (std::size_t u = 0; u < p.units; ++u) {
    next.c[u] = f[u] * prev.c[u] + sig.input_times_node[u];
    next.h[u] = o[u] * std::tanh(next.c[u]);
  }
  sig.cell_state = next.c;
  sig.hidden_state = next.h;
  return {next, sig};
}

struct LstmForward {
  Vector predictions;                   // per step if seq_out, else just the last
  std::vector<LstmStepSignals> trace;   // always one record per input step
};

// Runs the sequence from a zero state and applies the linear head.
inline LstmForward forward(const LstmParameters& p, const std::vector<Vector>& sequence,
                           bool seq_out) {
  if (sequence.empty()) {
    throw std::invalid_argument("lstm forward: empty sequence");
  }
  LstmForward out;
  out.trace.reserve(sequence.size());
  LstmState state = LstmState::zeros(p.units);
  double last_pred = 0.0;
  for (const Vector& x : sequence) {
    auto [next, sig] = step(p, x, state);
    state = std::move(next);
    last_pred = dot(p.w_out, state.h) + p.b_out;
    if (seq_out) out.predictions.push_back(last_pred);
    out.trace.push_back(std::move(sig));
  }
  if (!seq_out) out.predictions.push_back(last_pred);
  return out;
}

enum class LossMode {
  kAllSteps,   // mean squared error over every output step
  kFinalStep,  // only the last step is supervised
};

struct LstmGradients {
  double loss = 0.0;
  LstmParameters grad;
};

// Exact backpropagation through time for the mean squared error over the
// batch. Labels follow the sequence-sample layout: one value per sample when
// seq_out is off, one value per input step otherwise.
inline LstmGradients backward(const LstmParameters& p,
                              const std::vector<std::vector<Vector>>& batch,
                              const std::vector<Vector>& labels, bool seq_out,
                              LossMode mode = LossMode::kAllSteps) {
  if (batch.empty()) {
    throw std::invalid_argument("lstm backward: empty batch");
  }
  if (labels.size() != batch.size()) {
    throw std::invalid_argument("lstm backward: " + std::to_string(batch.size()) +
                                " samples but " + std::to_string(labels.size()) + " labels");
  }

  // Count supervised prediction terms so the loss is a mean.
  std::size_t terms = 0;
  for (std::size_t s = 0; s < batch.size(); ++s) {
    const std::size_t len = batch[s].size();
    if (len == 0) throw std::invalid_argument("lstm backward: empty sequence in batch");
    const std::size_t expect = seq_out ? len : 1;
    if (labels[s].size() != expect) {
      throw std::invalid_argument("lstm backward: sample " + std::to_string(s) + " has " +
                                  std::to_string(labels[s].size()) + " labels, expected " +
                                  std::to_string(expect));
    }
    terms += (seq_out && mode == LossMode::kAllSteps) ? len : 1;
  }
  const double inv_terms = 1.0 / static_cast<double>(terms);

  LstmGradients out;
  out.grad = LstmParameters::zeros(p.units, p.inputs);

  struct StepCache {
    Vector f, i, g, o, c, tanh_c, h;
    double pred = 0.0;
  };

  for (std::size_t s = 0; s < batch.size(); ++s) {
    const auto& seq = batch[s];
    const std::size_t T = seq.size();
    std::vector<StepCache> cache(T);
    LstmState state = LstmState::zeros(p.units);
    for (std::size_t t = 0; t < T; ++t) {
      const Vector f = sigmoid(detail::gate_preact(p.W_fx, seq[t], p.W_fh, state.h, p.b_f));
      const Vector i = sigmoid(detail::gate_preact(p.W_ix, seq[t], p.W_ih, state.h, p.b_i));
      const Vector g = tanh_act(detail::gate_preact(p.W_gx, seq[t], p.W_gh, state.h, p.b_g));
      const Vector o = sigmoid(detail::gate_preact(p.W_ox, seq[t], p.W_oh, state.h, p.b_o));
      StepCache& sc = cache[t];
      sc.f = f; sc.i = i; sc.g = g; sc.o = o;
      sc.c.resize(p.units);
      sc.tanh_c.resize(p.units);
      sc.h.resize(p.units);
      for (std::size_t u = 0; u < p.units; ++u) {
        sc.c[u] = f[u] * state.c[u] + i[u] * g[u];
        sc.tanh_c[u] = std::tanh(sc.c[u]);
        sc.h[u] = o[u] * sc.tanh_c[u];
      }
      sc.pred = dot(p.w_out, sc.h) + p.b_out;
      state.c = sc.c;
      state.h = sc.h;
    }

    auto supervised = [&](std::size_t t) {
      if (!seq_out || mode == LossMode::kFinalStep) return t == T - 1;
      return true;
    };
    auto label_at = [&](std::size_t t) {
      return seq_out ? labels[s][t] : labels[s][0];
    };

    Vector dh_next(p.units, 0.0);
    Vector dc_next(p.units, 0.0);
    for (std::size_t ti = T; ti-- > 0;) {
      const StepCache& sc = cache[ti];
      Vector dh = dh_next;
      if (supervised(ti)) {
        const double resid = sc.pred - label_at(ti);
        out.loss += resid * resid * inv_terms;
        const double dpred = 2.0 * resid * inv_terms;
        for (std::size_t u = 0; u < p.units; ++u) {
          out.grad.w_out[u] += dpred * sc.h[u];
          dh[u] += dpred * p.w_out[u];
        }
        out.grad.b_out += dpred;
      }

      const Vector zero(ti == 0 ? p.units : 0, 0.0);
      const Vector& c_prev = (ti == 0) ? zero : cache[ti - 1].c;
      const Vector& h_prev = (ti == 0) ? zero : cache[ti - 1].h;

      Vector da_f(p.units), da_i(p.units), da_g(p.units), da_o(p.units), dc(p.units);
      for (std::size_t u = 0; u < p.units; ++u) {
        const double d_o = dh[u] * sc.tanh_c[u];
        da_o[u] = d_o * dsigmoid_from_y(sc.o[u]);
        dc[u] = dh[u] * sc.o[u] * dtanh_from_y(sc.tanh_c[u]) + dc_next[u];
        da_f[u] = dc[u] * c_prev[u] * dsigmoid_from_y(sc.f[u]);
        da_i[u] = dc[u] * sc.g[u] * dsigmoid_from_y(sc.i[u]);
        da_g[u] = dc[u] * sc.i[u] * dtanh_from_y(sc.g[u]);
      }

      add_outer(out.grad.W_fx, da_f, seq[ti]);
      add_outer(out.grad.W_fh, da_f, h_prev);
      add_inplace(out.grad.b_f, da_f);
      add_outer(out.grad.W_ix, da_i, seq[ti]);
      add_outer(out.grad.W_ih, da_i, h_prev);
      add_inplace(out.grad.b_i, da_i);
      add_outer(out.grad.W_gx, da_g, seq[ti]);
      add_outer(out.grad.W_gh, da_g, h_prev);
      add_inplace(out.grad.b_g, da_g);
      add_outer(out.grad.W_ox, da_o, seq[ti]);
      add_outer(out.grad.W_oh, da_o, h_prev);
      add_inplace(out.grad.b_o, da_o);

      dh_next = tmatvec(p.W_fh, da_f);
      add_inplace(dh_next, tmatvec(p.W_ih, da_i));
      add_inplace(dh_next, tmatvec(p.W_gh, da_g));
      add_inplace(dh_next, tmatvec(p.W_oh, da_o));
      for (std::size_t u = 0; u < p.units; ++u) dc_next[u] = dc[u] * sc.f[u];
    }
  }
  return out;
}

}  // namespace ylab
