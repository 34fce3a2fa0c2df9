/**
 * @file model.hpp
 * @brief Problem definition, gridded trajectories and delayed-state views for
 *        D^α[y(t)e^{βt}] = f(t, y_t)e^{βt}, y = φ on [t0−h, t0].
 */
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace fracdde {

/// A rejected input. `field()` names the offending parameter.
class ValidationError : public std::invalid_argument {
 public:
  ValidationError(std::string field, const std::string& message)
      : std::invalid_argument(field + ": " + message), field_(std::move(field)) {}

  [[nodiscard]] const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

/// The right-hand side produced a NaN or infinity during a solve.
class NonFiniteError : public std::runtime_error {
 public:
  NonFiniteError(double t, double value)
      : std::runtime_error("non-finite rhs value " + std::to_string(value) + " at t=" + std::to_string(t)),
        t_(t),
        value_(value) {}

  [[nodiscard]] double time() const noexcept { return t_; }
  [[nodiscard]] double value() const noexcept { return value_; }

 private:
  double t_;
  double value_;
};

namespace detail {

inline constexpr double kGridSnap = 1e-9;

// Rounds x to the nearest integer when it is within kGridSnap of it.
[[nodiscard]] inline double snap(double x) {
  const double r = std::round(x);
  return std::abs(x - r) <= kGridSnap * std::max(1.0, std::abs(r)) ? r : x;
}

}  // namespace detail

/// Number of dt-steps in `span`; throws ValidationError unless span is a
/// nonnegative integer multiple of dt.
[[nodiscard]] inline std::size_t exact_steps(double span, double dt, const std::string& field) {
  if (!(dt > 0.0) || !std::isfinite(dt)) {
    throw ValidationError("dt", "step size must be positive and finite");
  }
  const double ratio = detail::snap(span / dt);
  if (!(ratio >= 0.0) || ratio != std::round(ratio)) {
    throw ValidationError(field, "must be a nonnegative integer multiple of dt (ratio " + std::to_string(span / dt) +
                                     ")");
  }
  return static_cast<std::size_t>(ratio);
}

/// Initial data φ on [t0−h, t0]: a closed-form callable or linearly
/// interpolated samples.
class HistoryFunction {
 public:
  HistoryFunction() = default;

  explicit HistoryFunction(std::function<double(double)> fn, std::string name = {})
      : fn_(std::move(fn)), name_(std::move(name)) {}

  [[nodiscard]] static HistoryFunction from_samples(double t_first, double dt, std::vector<double> samples,
                                                    std::string name = {}) {
    if (samples.empty()) {
      throw ValidationError("phi", "sampled history needs at least one sample");
    }
    if (!(dt > 0.0)) {
      throw ValidationError("phi", "sample spacing must be positive");
    }
    auto fn = [t_first, dt, s = std::move(samples)](double t) {
      const double pos = detail::snap((t - t_first) / dt);
      const double last = static_cast<double>(s.size() - 1);
      if (pos < 0.0 || pos > last) {
        throw std::out_of_range("sampled history evaluated outside its range at t=" + std::to_string(t));
      }
      const auto i = static_cast<std::size_t>(std::floor(pos));
      if (i + 1 >= s.size()) {
        return s.back();
      }
      const double frac = pos - static_cast<double>(i);
      return frac == 0.0 ? s[i] : (1.0 - frac) * s[i] + frac * s[i + 1];
    };
    return HistoryFunction(std::move(fn), std::move(name));
  }

  [[nodiscard]] double operator()(double t) const { return fn_(t); }
  [[nodiscard]] const std::string& name() const noexcept { return name_; }
  [[nodiscard]] explicit operator bool() const noexcept { return static_cast<bool>(fn_); }

 private:
  std::function<double(double)> fn_;
  std::string name_;
};

/// Read-only view of y_t(θ) = y(t+θ), θ ∈ [−h, 0], over uniformly gridded
/// samples. Does not own the samples; the underlying storage must outlive it.
class SegmentView {
 public:
  /// `samples[j]` is y at `first_time + j*dt`; samples must reach the anchor.
  SegmentView(std::span<const double> samples, double first_time, double dt, double anchor, double h)
      : samples_(samples), dt_(dt), anchor_(anchor), h_(h) {
    anchor_pos_ = detail::snap((anchor - first_time) / dt);
    delay_steps_ = detail::snap(h / dt);
    if (anchor_pos_ - delay_steps_ < 0.0 || std::ceil(anchor_pos_) > static_cast<double>(samples.size() - 1)) {
      throw std::out_of_range("segment at t=" + std::to_string(anchor) + " not covered by samples");
    }
  }

  [[nodiscard]] double anchor() const noexcept { return anchor_; }
  [[nodiscard]] double delay() const noexcept { return h_; }

  /// y(anchor + θ) by linear interpolation; exact at grid points.
  [[nodiscard]] double value_at(double theta) const {
    if (theta > 0.0 || theta < -h_ * (1.0 + detail::kGridSnap)) {
      throw std::out_of_range("segment offset theta=" + std::to_string(theta) + " outside [-h, 0]");
    }
    double pos = detail::snap(anchor_pos_ + theta / dt_);
    pos = std::clamp(pos, anchor_pos_ - delay_steps_, anchor_pos_);
    const auto i = static_cast<std::size_t>(std::floor(pos));
    const double frac = pos - static_cast<double>(i);
    if (frac == 0.0) {
      return samples_[i];
    }
    return (1.0 - frac) * samples_[i] + frac * samples_[i + 1];
  }

  /// Discrete ‖y_t‖: max |y| over the grid points in [anchor−h, anchor].
  [[nodiscard]] double sup_norm() const {
    const auto lo = static_cast<std::size_t>(std::ceil(anchor_pos_ - delay_steps_));
    const auto hi = static_cast<std::size_t>(std::floor(anchor_pos_));
    double m = 0.0;
    for (std::size_t i = lo; i <= hi; ++i) {
      m = std::max(m, std::abs(samples_[i]));
    }
    return m;
  }

 private:
  std::span<const double> samples_;
  double dt_;
  double anchor_;
  double h_;
  double anchor_pos_ = 0.0;
  double delay_steps_ = 0.0;
};

/// Uniformly gridded samples of y on [t0−h, T]; index j ↔ t0 − h + j·dt.
class Trajectory {
 public:
  Trajectory(double t0, double h, double dt, std::vector<double> values)
      : t0_(t0), h_(h), dt_(dt), history_steps_(exact_steps(h, dt, "h")), values_(std::move(values)) {
    if (values_.size() < history_steps_ + 1) {
      throw ValidationError("values", "trajectory must cover at least [t0-h, t0]");
    }
  }

  /// Trajectory consisting only of φ sampled on [t0−h, t0].
  [[nodiscard]] static Trajectory from_history(const HistoryFunction& phi, double t0, double h, double dt) {
    const std::size_t m = exact_steps(h, dt, "h");
    std::vector<double> v(m + 1);
    for (std::size_t j = 0; j <= m; ++j) {
      v[j] = phi(t0 + (static_cast<double>(j) - static_cast<double>(m)) * dt);
      if (!std::isfinite(v[j])) {
        throw ValidationError("phi", "initial function is not finite on [t0-h, t0]");
      }
    }
    return Trajectory(t0, h, dt, std::move(v));
  }

  [[nodiscard]] double t0() const noexcept { return t0_; }
  [[nodiscard]] double h() const noexcept { return h_; }
  [[nodiscard]] double dt() const noexcept { return dt_; }
  [[nodiscard]] std::size_t history_steps() const noexcept { return history_steps_; }
  [[nodiscard]] std::size_t size() const noexcept { return values_.size(); }
  /// Number of steps after t0, i.e. T = t0 + steps()·dt.
  [[nodiscard]] std::size_t steps() const noexcept { return values_.size() - 1 - history_steps_; }
  [[nodiscard]] std::span<const double> values() const noexcept { return values_; }
  [[nodiscard]] double operator[](std::size_t j) const { return values_[j]; }

  [[nodiscard]] double time_at(std::size_t j) const noexcept {
    return t0_ + (static_cast<double>(j) - static_cast<double>(history_steps_)) * dt_;
  }
  [[nodiscard]] double last_time() const noexcept { return time_at(values_.size() - 1); }
  /// y at t0 + n·dt.
  [[nodiscard]] double at_step(std::size_t n) const { return values_.at(history_steps_ + n); }

 private:
  double t0_;
  double h_;
  double dt_;
  std::size_t history_steps_;
  std::vector<double> values_;
};

/// y_t as a view into `traj`; t must lie in [t0, last grid time].
[[nodiscard]] inline SegmentView segment_at(const Trajectory& traj, double t) {
  const double tol = detail::kGridSnap * traj.dt();
  if (t < traj.t0() - tol || t > traj.last_time() + tol) {
    throw std::out_of_range("segment_at: t=" + std::to_string(t) + " outside [t0, T]");
  }
  return SegmentView(traj.values(), traj.time_at(0), traj.dt(), t, traj.h());
}

/// Growth bound |f(t, u_t)| ≤ k1(t) + k2(t)‖u_t‖.
struct GrowthBound {
  std::function<double(double)> k1;
  std::function<double(double)> k2;
};

/// The functional f(t, y_t). `eval` must be deterministic and stateless.
struct RhsField {
  std::string name;
  std::function<double(double, const SegmentView&)> eval;
  /// Known constant l with |f(t,u_t) − f(t,v_t)| ≤ l‖u_t − v_t‖, if any.
  std::optional<double> lipschitz;
  std::optional<GrowthBound> growth;

  [[nodiscard]] double operator()(double t, const SegmentView& segment) const { return eval(t, segment); }
};

struct FdeProblem {
  double alpha = 0.5;
  double beta = 1.0;
  double t0 = 0.0;
  double h = 1.0;
  RhsField rhs;
  HistoryFunction phi;
};

inline void validate(const FdeProblem& p) {
  if (!(p.alpha > 0.0 && p.alpha < 1.0)) {
    throw ValidationError("alpha", "fractional order must lie in (0, 1), got " + std::to_string(p.alpha));
  }
  if (!(p.beta > 0.0) || !std::isfinite(p.beta)) {
    throw ValidationError("beta", "beta must be positive, got " + std::to_string(p.beta));
  }
  if (!(p.h > 0.0) || !std::isfinite(p.h)) {
    throw ValidationError("h", "delay h must be positive, got " + std::to_string(p.h));
  }
  if (!(p.t0 >= 0.0) || !std::isfinite(p.t0)) {
    throw ValidationError("t0", "t0 must be nonnegative, got " + std::to_string(p.t0));
  }
  if (!p.rhs.eval) {
    throw ValidationError("rhs", "right-hand side is empty");
  }
  if (!p.phi) {
    throw ValidationError("phi", "initial function is empty");
  }
  constexpr int kChecks = 16;
  for (int i = 0; i <= kChecks; ++i) {
    const double t = p.t0 - p.h + p.h * i / kChecks;
    if (!std::isfinite(p.phi(t))) {
      throw ValidationError("phi", "initial function is not finite at t=" + std::to_string(t));
    }
  }
}

[[nodiscard]] inline FdeProblem make_problem(double alpha, double beta, double t0, double h, RhsField rhs,
                                             HistoryFunction phi) {
  FdeProblem p{alpha, beta, t0, h, std::move(rhs), std::move(phi)};
  validate(p);
  return p;
}

// Built-in right-hand sides.

/// f(t, y_t) = e^t / (8(e^t + e^{−t})) · sin⁴(y(t−1)) + 1. Lipschitz with l = ½.
[[nodiscard]] inline RhsField example_4_1_rhs() {
  RhsField f;
  f.name = "example_4_1";
  f.eval = [](double t, const SegmentView& seg) {
    const double s = std::sin(seg.value_at(-1.0));
    // e^t/(e^t+e^{-t}) = 1/(1+e^{-2t}), stable for large t.
    const double weight = 1.0 / (8.0 * (1.0 + std::exp(-2.0 * t)));
    return weight * s * s * s * s + 1.0;
  };
  f.lipschitz = 0.5;
  f.growth = GrowthBound{[](double) { return 1.125; }, [](double) { return 0.0; }};
  return f;
}

/// f(t, y_t) = 10 (t+1)^{−3/4} · u / (1 + |u|), u = y(t−1).
[[nodiscard]] inline RhsField example_4_2_rhs() {
  RhsField f;
  f.name = "example_4_2";
  f.eval = [](double t, const SegmentView& seg) {
    const double u = seg.value_at(-1.0);
    return 10.0 * std::pow(t + 1.0, -0.75) * u / (1.0 + std::abs(u));
  };
  f.growth = GrowthBound{[](double) { return 0.0; }, [](double t) { return 10.0 * std::pow(t + 1.0, -0.75); }};
  return f;
}

/// f ≡ c.
[[nodiscard]] inline RhsField constant_rhs(double c) {
  RhsField f;
  f.name = c == 0.0 ? "zero" : "const:" + std::to_string(c);
  f.eval = [c](double, const SegmentView&) { return c; };
  f.lipschitz = 0.0;
  f.growth = GrowthBound{[c](double) { return std::abs(c); }, [](double) { return 0.0; }};
  return f;
}

/// f(t, y_t) = a · y(t).
[[nodiscard]] inline RhsField linear_rhs(double a) {
  RhsField f;
  f.name = "linear:" + std::to_string(a);
  f.eval = [a](double, const SegmentView& seg) { return a * seg.value_at(0.0); };
  f.lipschitz = std::abs(a);
  f.growth = GrowthBound{[](double) { return 0.0; }, [a](double) { return std::abs(a); }};
  return f;
}

/// f(t, y_t) = a · y(t−h), the point delay at the full horizon.
[[nodiscard]] inline RhsField delay_linear_rhs(double a) {
  RhsField f;
  f.name = "delay_linear:" + std::to_string(a);
  f.eval = [a](double, const SegmentView& seg) { return a * seg.value_at(-seg.delay()); };
  f.lipschitz = std::abs(a);
  f.growth = GrowthBound{[](double) { return 0.0; }, [a](double) { return std::abs(a); }};
  return f;
}

}  // namespace fracdde
