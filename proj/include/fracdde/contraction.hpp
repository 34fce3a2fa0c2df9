/**
 * @file contraction.hpp
 * @brief Contraction constant of the solution operator in the bounded-continuous sup norm.
 */
#pragma once

#include <cmath>

#include "fracdde/model.hpp"
#include "fracdde/specfun.hpp"

namespace fracdde {

/// l·[(t0+h)^{α−1} e^{−β(t0+h)} / (β Γ(α)) + (t0+h)^α / Γ(α+1)].
///
/// When this is below 1 the solution operator is a sup-norm contraction with
/// this ratio, so the fixed point is unique and Picard iteration converges.
[[nodiscard]] inline double contraction_bound(double l, double alpha, double beta, double t0, double h) {
  if (!(l >= 0.0) || !std::isfinite(l)) {
    throw ValidationError("l", "Lipschitz constant must be nonnegative");
  }
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw ValidationError("alpha", "fractional order must lie in (0, 1)");
  }
  if (!(beta > 0.0)) {
    throw ValidationError("beta", "beta must be positive");
  }
  if (!(h > 0.0)) {
    throw ValidationError("h", "delay h must be positive");
  }
  if (!(t0 >= 0.0)) {
    throw ValidationError("t0", "t0 must be nonnegative");
  }
  const double span = t0 + h;
  const double tail = std::pow(span, alpha - 1.0) * std::exp(-beta * span) / (beta * gamma(alpha));
  const double head = std::pow(span, alpha) / gamma(alpha + 1.0);
  return l * (tail + head);
}

}  // namespace fracdde
