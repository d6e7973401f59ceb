#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "ylab/activations.hpp"
#include "ylab/matrix.hpp"
#include "ylab/rng.hpp"

namespace ylab {

// One hidden layer, scalar linear output: pred = w2 . act(W1 x + b1) + b2.
// identity_hidden swaps the tanh for the identity map; with it the network is
// an affine model whose gradients have closed forms, handy for exact checks.
struct MlpParameters {
  std::size_t hidden = 0;
  std::size_t inputs = 0;
  Matrix W1;
  Vector b1;
  Vector w2;
  double b2 = 0.0;
  bool identity_hidden = false;

  static MlpParameters zeros(std::size_t hidden, std::size_t inputs) {
    MlpParameters p;
    p.hidden = hidden;
    p.inputs = inputs;
    p.W1 = Matrix(hidden, inputs);
    p.b1 = Vector(hidden, 0.0);
    p.w2 = Vector(hidden, 0.0);
    p.b2 = 0.0;
    return p;
  }

  std::size_t param_count() const { return hidden * inputs + hidden + hidden + 1; }

  Vector flatten() const {
    Vector out;
    out.reserve(param_count());
    out.insert(out.end(), W1.data().begin(), W1.data().end());
    out.insert(out.end(), b1.begin(), b1.end());
    out.insert(out.end(), w2.begin(), w2.end());
    out.push_back(b2);
    return out;
  }

  void unflatten(const Vector& flat) {
    if (flat.size() != param_count()) {
      throw std::invalid_argument("MlpParameters::unflatten: expected " +
                                  std::to_string(param_count()) + " values, got " +
                                  std::to_string(flat.size()));
    }
    std::size_t pos = 0;
    std::copy(flat.begin(), flat.begin() + W1.size(), W1.data().begin());
    pos += W1.size();
    std::copy(flat.begin() + pos, flat.begin() + pos + hidden, b1.begin());
    pos += hidden;
    std::copy(flat.begin() + pos, flat.begin() + pos + hidden, w2.begin());
    pos += hidden;
    b2 = flat[pos];
  }
};

inline MlpParameters init_mlp(std::size_t hidden, std::size_t inputs, Rng& rng) {
  if (hidden < 1 || inputs < 1) {
    throw std::invalid_argument("init_mlp: hidden and inputs must be >= 1");
  }
  MlpParameters p = MlpParameters::zeros(hidden, inputs);
  const double bx = 1.0 / std::sqrt(static_cast<double>(inputs));
  const double bh = 1.0 / std::sqrt(static_cast<double>(hidden));
  for (double& v : p.W1.data()) v = rng.uniform(-bx, bx);
  for (double& v : p.w2) v = rng.uniform(-bh, bh);
  return p;
}

inline double mlp_forward(const MlpParameters& p, const Vector& x) {
  if (x.size() != p.inputs) {
    throw std::invalid_argument("mlp_forward: input length " + std::to_string(x.size()) +
                                " does not match model inputs " + std::to_string(p.inputs));
  }
  Vector a = matvec(p.W1, x);
  double pred = p.b2;
  for (std::size_t j = 0; j < p.hidden; ++j) {
    const double z = p.identity_hidden ? a[j] + p.b1[j] : std::tanh(a[j] + p.b1[j]);
    pred += p.w2[j] * z;
  }
  return pred;
}

struct MlpGradients {
  double loss = 0.0;
  MlpParameters grad;
};

// Mean squared error over the batch; exact gradients.
inline MlpGradients mlp_backward(const MlpParameters& p, const std::vector<Vector>& batch,
                                 const Vector& labels) {
  if (batch.empty()) {
    throw std::invalid_argument("mlp_backward: empty batch");
  }
  if (labels.size() != batch.size()) {
    throw std::invalid_argument("mlp_backward: " + std::to_string(batch.size()) +
                                " samples but " + std::to_string(labels.size()) + " labels");
  }
  MlpGradients out;
  out.grad = MlpParameters::zeros(p.hidden, p.inputs);
  const double inv_n = 1.0 / static_cast<double>(batch.size());
  Vector z(p.hidden), dz(p.hidden);
  for (std::size_t s = 0; s < batch.size(); ++s) {
    const Vector& x = batch[s];
    if (x.size() != p.inputs) {
      throw std::invalid_argument("mlp_backward: sample " + std::to_string(s) +
                                  " has length " + std::to_string(x.size()) +
                                  ", expected " + std::to_string(p.inputs));
    }
    Vector a = matvec(p.W1, x);
    double pred = p.b2;
    for (std::size_t j = 0; j < p.hidden; ++j) {
      const double u = a[j] + p.b1[j];
      if (p.identity_hidden) {
        z[j] = u;
        dz[j] = 1.0;
      } else {
        z[j] = std::tanh(u);
        dz[j] = dtanh_from_y(z[j]);
      }
      pred += p.w2[j] * z[j];
    }
    const double resid = pred - labels[s];
    out.loss += resid * resid * inv_n;
    const double dpred = 2.0 * resid * inv_n;
    out.grad.b2 += dpred;
    for (std::size_t j = 0; j < p.hidden; ++j) {
      out.grad.w2[j] += dpred * z[j];
      const double da = dpred * p.w2[j] * dz[j];
      out.grad.b1[j] += da;
      for (std::size_t k = 0; k < p.inputs; ++k) {
        out.grad.W1(j, k) += da * x[k];
      }
    }
  }
  return out;
}

}  // namespace ylab
