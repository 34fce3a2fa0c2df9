/**
 * @file quad.hpp
 * @brief Product-integration quadrature for ∫_{t0}^{t}(t−s)^{α−1} e^{−β(t−s)} g(s) ds.
 *
 * The singular factor (t−s)^{α−1} is integrated exactly against a piecewise
 * constant (rectangle) or piecewise linear (trapezoid) interpolant of the
 * smooth part on a uniform grid. The exponential e^{−β(t−s)} is folded into
 * the smooth part, so the weights depend only on (α, dt, n).
 */
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "fracdde/model.hpp"
#include "fracdde/specfun.hpp"

namespace fracdde {

/// Weight rows w_{n,j} with ∫_{t_0}^{t_n}(t_n−s)^{α−1} g(s) ds ≈ Σ_j w_{n,j} g(t_j).
///
/// Interior trapezoid weights depend only on n−j and are second differences of
/// k^{α+1}. The first differences are cached for k ≤ max_n and computed with
/// expm1/log1p so the row sums telescope to (n·dt)^α/α without cancellation.
/// Immutable after construction; safe to share between threads.
class ProductWeights {
 public:
  ProductWeights(double alpha, double dt, std::size_t max_n) : alpha_(alpha), dt_(dt), max_n_(max_n) {
    if (!(alpha > 0.0 && alpha < 1.0)) {
      throw ValidationError("alpha", "product weights need 0 < alpha < 1");
    }
    if (!(dt > 0.0)) {
      throw ValidationError("dt", "product weights need dt > 0");
    }
    const double p = alpha + 1.0;
    const double dt_alpha = std::pow(dt, alpha);
    trap_scale_ = dt_alpha / (alpha * p);
    rect_scale_ = dt_alpha / alpha;

    first_diff_.resize(max_n + 1);
    rect_diff_.resize(max_n + 1);
    pow_alpha_.resize(max_n + 1);
    first_diff_[0] = 1.0;
    rect_diff_[0] = 0.0;
    pow_alpha_[0] = 0.0;
    for (std::size_t k = 1; k <= max_n; ++k) {
      const double kd = static_cast<double>(k);
      // (k+1)^p − k^p
      first_diff_[k] = std::pow(kd, p) * std::expm1(p * std::log1p(1.0 / kd));
      // k^α − (k−1)^α
      rect_diff_[k] = k == 1 ? 1.0 : -std::pow(kd, alpha) * std::expm1(alpha * std::log1p(-1.0 / kd));
      pow_alpha_[k] = std::pow(kd, alpha);
    }
  }

  [[nodiscard]] double alpha() const noexcept { return alpha_; }
  [[nodiscard]] double dt() const noexcept { return dt_; }
  [[nodiscard]] std::size_t max_n() const noexcept { return max_n_; }

  /// Product-trapezoid weight w_{n,j}, 0 ≤ j ≤ n, 1 ≤ n ≤ max_n.
  [[nodiscard]] double trapezoid(std::size_t n, std::size_t j) const {
    if (j == n) {
      return trap_scale_;
    }
    if (j == 0) {
      return trap_scale_ * ((alpha_ + 1.0) * pow_alpha_[n] - first_diff_[n - 1]);
    }
    const std::size_t m = n - j;
    return trap_scale_ * (first_diff_[m] - first_diff_[m - 1]);
  }

  /// Product-rectangle (left endpoint) weight, 0 ≤ j < n; zero for j = n.
  [[nodiscard]] double rectangle(std::size_t n, std::size_t j) const {
    return j >= n ? 0.0 : rect_scale_ * rect_diff_[n - j];
  }

  [[nodiscard]] std::vector<double> trapezoid_row(std::size_t n) const {
    check_row(n);
    std::vector<double> w(n + 1);
    for (std::size_t j = 0; j <= n; ++j) {
      w[j] = trapezoid(n, j);
    }
    return w;
  }

  [[nodiscard]] std::vector<double> rectangle_row(std::size_t n) const {
    check_row(n);
    std::vector<double> w(n + 1);
    for (std::size_t j = 0; j < n; ++j) {
      w[j] = rectangle(n, j);
    }
    return w;
  }

 private:
  void check_row(std::size_t n) const {
    if (n < 1 || n > max_n_) {
      throw std::out_of_range("weight row " + std::to_string(n) + " outside [1, " + std::to_string(max_n_) + "]");
    }
  }

  double alpha_;
  double dt_;
  std::size_t max_n_;
  double trap_scale_ = 0.0;
  double rect_scale_ = 0.0;
  std::vector<double> first_diff_;
  std::vector<double> rect_diff_;
  std::vector<double> pow_alpha_;
};

[[nodiscard]] inline std::vector<double> product_trapezoid_weights(double alpha, double dt, std::size_t n) {
  return ProductWeights(alpha, dt, n).trapezoid_row(n);
}

[[nodiscard]] inline std::vector<double> product_rectangle_weights(double alpha, double dt, std::size_t n) {
  return ProductWeights(alpha, dt, n).rectangle_row(n);
}

/// (1/Γ(α)) Σ_j w_{n,j} e^{−β(t_n−t_j)} g_j with cached weights; g holds at least n+1 samples.
[[nodiscard]] inline double weighted_convolution(const ProductWeights& weights, double beta, std::size_t n,
                                                 std::span<const double> g) {
  if (g.size() < n + 1) {
    throw std::invalid_argument("weighted_convolution: need n+1 samples of g");
  }
  if (n == 0) {
    return 0.0;
  }
  double acc = 0.0;
  for (std::size_t j = 0; j <= n; ++j) {
    const double lag = static_cast<double>(n - j) * weights.dt();
    acc += weights.trapezoid(n, j) * std::exp(-beta * lag) * g[j];
  }
  return acc / gamma(weights.alpha());
}

/// (1/Γ(α)) ∫_{t0}^{t_n}(t_n−s)^{α−1} e^{−β(t_n−s)} g(s) ds by product trapezoid;
/// g sampled at t0, t0+dt, ..., t0+n·dt.
[[nodiscard]] inline double weighted_convolution(double alpha, double beta, double t0, double dt, std::size_t n,
                                                 std::span<const double> g) {
  (void)t0;  // the rule is translation invariant; t0 only anchors the grid of g
  if (n == 0) {
    return 0.0;
  }
  return weighted_convolution(ProductWeights(alpha, dt, n), beta, n, g);
}

struct KernelDecayReport {
  std::vector<std::pair<double, double>> values;  // (t, weighted convolution at t)
  bool tail_monotone = false;                     // nonincreasing over the last half of the grid
  double tail_loglog_slope = 0.0;                 // least-squares d log(value) / d log(t) over the tail
  bool decaying = false;                          // tail_monotone and slope ≤ −min_slope
};

/// Numeric check of lim_{t→∞} ∫(t−s)^{α−1}e^{−β(t−s)} k(s) ds = 0.
///
/// `k` holds samples at t0 + j·dt covering every requested time; each entry
/// of `t_grid` must be a grid point. Values include the 1/Γ(α) factor.
[[nodiscard]] inline KernelDecayReport kernel_decay_check(double alpha, double beta, double t0, double dt,
                                                          std::span<const double> k,
                                                          std::span<const double> t_grid, double min_slope = 0.1) {
  KernelDecayReport report;
  if (t_grid.empty()) {
    return report;
  }
  std::size_t max_n = 1;
  std::vector<std::size_t> steps;
  steps.reserve(t_grid.size());
  for (double t : t_grid) {
    const std::size_t n = exact_steps(t - t0, dt, "t_grid");
    if (n + 1 > k.size()) {
      throw std::invalid_argument("kernel_decay_check: k does not cover t=" + std::to_string(t));
    }
    steps.push_back(n);
    max_n = std::max(max_n, n);
  }
  const ProductWeights weights(alpha, dt, max_n);
  for (std::size_t i = 0; i < t_grid.size(); ++i) {
    report.values.emplace_back(t_grid[i], weighted_convolution(weights, beta, steps[i], k));
  }

  const std::size_t tail_begin = report.values.size() / 2;
  report.tail_monotone = true;
  for (std::size_t i = tail_begin + 1; i < report.values.size(); ++i) {
    if (report.values[i].second > report.values[i - 1].second) {
      report.tail_monotone = false;
    }
  }
  // Slope of log(value) against log(t − t0) on the positive tail samples.
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  std::size_t cnt = 0;
  bool all_zero = true;
  for (std::size_t i = tail_begin; i < report.values.size(); ++i) {
    const auto [t, v] = report.values[i];
    if (v != 0.0) {
      all_zero = false;
    }
    if (v > 0.0 && t > t0) {
      const double x = std::log(t - t0);
      const double y = std::log(v);
      sx += x;
      sy += y;
      sxx += x * x;
      sxy += x * y;
      ++cnt;
    }
  }
  if (cnt >= 2) {
    const double denom = static_cast<double>(cnt) * sxx - sx * sx;
    report.tail_loglog_slope = denom != 0.0 ? (static_cast<double>(cnt) * sxy - sx * sy) / denom : 0.0;
  }
  report.decaying = all_zero || (report.tail_monotone && report.tail_loglog_slope <= -min_slope);
  return report;
}

}  // namespace fracdde
