#pragma once

#include <cmath>

#include "ylab/matrix.hpp"

namespace ylab {

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

inline Vector sigmoid(const Vector& v) {
  Vector out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = sigmoid(v[i]);
  return out;
}

inline Vector tanh_act(const Vector& v) {
  Vector out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = std::tanh(v[i]);
  return out;
}

// Derivatives expressed through the activation outputs, which is what the
// backward passes have in hand.
inline double dsigmoid_from_y(double y) { return y * (1.0 - y); }
inline double dtanh_from_y(double y) { return 1.0 - y * y; }

}  // namespace ylab
