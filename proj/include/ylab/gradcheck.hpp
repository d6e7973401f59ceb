#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

#include "ylab/matrix.hpp"

namespace ylab {

// Central-difference gradient of a scalar function of a parameter vector.
// This is the reference every analytic backward pass in the library is
// checked against, so it must stay independent of those implementations.
template <typename F>
Vector finite_diff_gradient(F&& f, const Vector& at, double eps) {
  if (!(eps > 0.0)) {
    throw std::invalid_argument("finite_diff_gradient: eps must be > 0");
  }
  Vector grad(at.size());
  Vector x = at;
  for (std::size_t i = 0; i < at.size(); ++i) {
    const double orig = x[i];
    x[i] = orig + eps;
    const double fp = f(x);
    x[i] = orig - eps;
    const double fm = f(x);
    x[i] = orig;
    if (!std::isfinite(fp) || !std::isfinite(fm)) {
      throw std::runtime_error("finite_diff_gradient: non-finite evaluation at coordinate " +
                               std::to_string(i));
    }
    grad[i] = (fp - fm) / (2.0 * eps);
  }
  return grad;
}

// Max relative error between an analytic gradient and the central-difference
// one, with an absolute floor so near-zero coordinates do not blow up the
// ratio. Central differences at eps=1e-5 carry ~1e-11 of roundoff noise per
// unit of loss, so coordinates below the floor carry no relative information.
inline double max_relative_error(const Vector& analytic, const Vector& numeric,
                                 double floor = 1e-6) {
  if (analytic.size() != numeric.size()) {
    throw std::invalid_argument("max_relative_error: length mismatch");
  }
  double worst = 0.0;
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    const double denom = std::max({std::fabs(analytic[i]), std::fabs(numeric[i]), floor});
    const double rel = std::fabs(analytic[i] - numeric[i]) / denom;
    if (rel > worst) worst = rel;
  }
  return worst;
}

}  // namespace ylab
