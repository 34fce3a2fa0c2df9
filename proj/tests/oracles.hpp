// Independent reference computations for the unit and acceptance tests.
// Nothing here goes through the product-integration weights.
#pragma once

#include <cmath>
#include <functional>

#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace oracle {

inline double integrate(const std::function<double(double)>& f, double a, double b) {
  double err = 0.0;
  return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, a, b, 12, 1e-13, &err);
}

/// γ(a, x) by adaptive quadrature. For a < 1 the s^{a−1} singularity is removed with s = u^{1/a}:
/// ∫₀ˣ s^{a−1} e^{−s} ds = (1/a) ∫₀^{x^a} exp(−u^{1/a}) du.
inline double lower_incomplete_gamma(double a, double x) {
  if (x == 0.0) {
    return 0.0;
  }
  if (a >= 1.0) {
    return integrate([a](double s) { return std::pow(s, a - 1.0) * std::exp(-s); }, 0.0, x);
  }
  return integrate([a](double u) { return std::exp(-std::pow(u, 1.0 / a)) / a; }, 0.0, std::pow(x, a));
}

/// (1/Γ(α)) ∫_{t0}^{t} (t−s)^{α−1} e^{−β(t−s)} g(s) ds via lag u = t − s and u = v^{1/α}:
/// (1/(α Γ(α))) ∫₀^{(t−t0)^α} e^{−β v^{1/α}} g(t − v^{1/α}) dv.
inline double weighted_convolution(double alpha, double beta, double t0, double t,
                                   const std::function<double(double)>& g) {
  const double upper = std::pow(t - t0, alpha);
  const double integral = integrate(
      [&](double v) {
        const double lag = std::pow(v, 1.0 / alpha);
        return std::exp(-beta * lag) * g(t - lag);
      },
      0.0, upper);
  return integral / (alpha * std::tgamma(alpha));
}

/// Same kernel without the exponential and without 1/Γ(α): ∫_{0}^{t}(t−s)^{α−1} g(s) ds.
inline double singular_integral(double alpha, double t, const std::function<double(double)>& g) {
  return integrate([&](double v) { return g(t - std::pow(v, 1.0 / alpha)) / alpha; }, 0.0, std::pow(t, alpha));
}

}  // namespace oracle
