/**
 * @file specfun.hpp
 * @brief Gamma and lower incomplete gamma functions.
 */
#pragma once

#include <atomic>
#include <cmath>
#include <stdexcept>
#include <string>

#include <boost/math/special_functions/gamma.hpp>

namespace fracdde {

namespace testing {

/// Multiplicative fault applied to every gamma() result. Exists only so the
/// self-test can demonstrate that its anchors catch a corrupted gamma.
inline std::atomic<double> gamma_fault_scale{1.0};

}  // namespace testing

/// Gamma function for x > 0. Throws std::domain_error otherwise.
[[nodiscard]] inline double gamma(double x) {
  if (!(x > 0.0) || !std::isfinite(x)) {
    throw std::domain_error("gamma: argument must be positive and finite, got " + std::to_string(x));
  }
  return std::tgamma(x) * testing::gamma_fault_scale.load(std::memory_order_relaxed);
}

/// Lower incomplete gamma γ(a, x) = ∫₀ˣ s^{a−1} e^{−s} ds (non-normalized).
[[nodiscard]] inline double lower_incomplete_gamma(double a, double x) {
  if (!(a > 0.0) || !std::isfinite(a)) {
    throw std::domain_error("lower_incomplete_gamma: a must be positive, got " + std::to_string(a));
  }
  if (!(x >= 0.0)) {
    throw std::domain_error("lower_incomplete_gamma: x must be nonnegative, got " + std::to_string(x));
  }
  if (x == 0.0) {
    return 0.0;
  }
  if (std::isinf(x)) {
    return std::tgamma(a);
  }
  return boost::math::tgamma_lower(a, x);
}

/// Beta function B(a, b) for a, b > 0.
[[nodiscard]] inline double beta_function(double a, double b) {
  return std::tgamma(a) * std::tgamma(b) / std::tgamma(a + b);
}

}  // namespace fracdde
