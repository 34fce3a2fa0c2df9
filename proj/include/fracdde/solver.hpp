/**
 * @file solver.hpp
 * @brief Solvers for y(t) = y(t0)e^{−β(t−t0)} + (1/Γ(α))∫_{t0}^{t}(t−s)^{α−1}e^{−β(t−s)} f(s, y_s) ds.
 *
 * Two independent routes on the same uniform grid:
 *  - a fractional predictor-corrector (product rectangle predictor, product
 *    trapezoid corrector) that marches in time;
 *  - global Picard iteration of the solution operator over the whole window,
 *    used as a cross-check and to measure contraction ratios.
 */
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "fracdde/contraction.hpp"
#include "fracdde/model.hpp"
#include "fracdde/quad.hpp"
#include "fracdde/specfun.hpp"

namespace fracdde {

enum class Method { predictor_corrector, picard };

[[nodiscard]] inline std::string_view to_string(Method m) {
  return m == Method::picard ? "picard" : "predictor_corrector";
}

[[nodiscard]] inline Method parse_method(std::string_view name) {
  if (name == "predictor_corrector" || name == "pece") {
    return Method::predictor_corrector;
  }
  if (name == "picard") {
    return Method::picard;
  }
  throw ValidationError("method", "unknown method '" + std::string(name) + "'");
}

struct SolverConfig {
  Method method = Method::predictor_corrector;
  double dt = 1.0 / 64.0;
  double T = 10.0;
  double picard_tol = 1e-10;
  int picard_max_iter = 200;
  int corrector_sweeps = 1;
};

struct SolveDiagnostics {
  Method method = Method::predictor_corrector;
  /// Picard iterations performed, or corrector sweeps per step for PECE.
  std::size_t iterations = 0;
  bool converged = true;
  /// Sup norm of the last successive Picard difference ‖y^{k+1} − y^k‖.
  double final_picard_difference = 0.0;
  std::vector<double> successive_differences;
  /// ‖y^{k+1} − y^k‖ / ‖y^k − y^{k−1}‖ for each k where the denominator is nonzero.
  std::vector<double> contraction_ratios;
  /// Theoretical contraction constant, when the rhs declares a Lipschitz constant.
  std::optional<double> contraction_bound;
  std::vector<std::string> warnings;
};

struct SolveResult {
  Trajectory trajectory;
  SolveDiagnostics diagnostics;
};

/// Validates the pair and returns the number of steps N with T = t0 + N·dt.
inline std::size_t validate(const FdeProblem& problem, const SolverConfig& config) {
  validate(problem);
  if (!(config.dt > 0.0) || !std::isfinite(config.dt)) {
    throw ValidationError("dt", "step size must be positive");
  }
  if (!(config.T > problem.t0) || !std::isfinite(config.T)) {
    throw ValidationError("T", "final time must exceed t0");
  }
  (void)exact_steps(problem.h, config.dt, "h");
  const std::size_t n = exact_steps(config.T - problem.t0, config.dt, "T");
  if (!(config.picard_tol > 0.0)) {
    throw ValidationError("picard_tol", "tolerance must be positive");
  }
  if (config.picard_max_iter < 1) {
    throw ValidationError("picard_max_iter", "must be at least 1");
  }
  if (config.corrector_sweeps < 1) {
    throw ValidationError("corrector_sweeps", "must be at least 1");
  }
  return n;
}

namespace detail {

// Shared grid data for one solve: e^{−β k dt}, weights, and 1/Γ(α).
struct Discretization {
  Discretization(const FdeProblem& problem, double dt, std::size_t steps)
      : weights(problem.alpha, dt, std::max<std::size_t>(steps, 1)),
        decay(steps + 1),
        inv_gamma(1.0 / gamma(problem.alpha)),
        history_steps(exact_steps(problem.h, dt, "h")),
        dt(dt),
        t0(problem.t0) {
    for (std::size_t k = 0; k <= steps; ++k) {
      decay[k] = std::exp(-problem.beta * static_cast<double>(k) * dt);
    }
  }

  [[nodiscard]] double time(std::size_t n) const { return t0 + static_cast<double>(n) * dt; }

  // (1/Γ(α)) Σ_{j≤n} w_{n,j} e^{−β(t_n−t_j)} f_j by product trapezoid.
  [[nodiscard]] double convolve(std::size_t n, std::span<const double> f) const {
    if (n == 0) {
      return 0.0;
    }
    double acc = 0.0;
    for (std::size_t j = 0; j <= n; ++j) {
      acc += weights.trapezoid(n, j) * decay[n - j] * f[j];
    }
    return inv_gamma * acc;
  }

  ProductWeights weights;
  std::vector<double> decay;
  double inv_gamma;
  std::size_t history_steps;
  double dt;
  double t0;
};

inline double checked_eval(const RhsField& rhs, double t, const SegmentView& seg) {
  const double v = rhs(t, seg);
  if (!std::isfinite(v)) {
    throw NonFiniteError(t, v);
  }
  return v;
}

// f(t_n, y_{t_n}) for n = 0..N over a full set of samples.
inline std::vector<double> evaluate_rhs(const FdeProblem& problem, const Discretization& disc,
                                        std::span<const double> values, std::size_t steps) {
  std::vector<double> f(steps + 1);
  const double first = problem.t0 - static_cast<double>(disc.history_steps) * disc.dt;
  for (std::size_t n = 0; n <= steps; ++n) {
    const double t = disc.time(n);
    f[n] = checked_eval(problem.rhs, t, SegmentView(values, first, disc.dt, t, problem.h));
  }
  return f;
}

inline std::optional<double> bound_for(const FdeProblem& problem) {
  if (!problem.rhs.lipschitz) {
    return std::nullopt;
  }
  return contraction_bound(*problem.rhs.lipschitz, problem.alpha, problem.beta, problem.t0, problem.h);
}

}  // namespace detail

/// Fractional PECE march. Predictor: product rectangle over f_0..f_{n−1}.
/// Corrector: product trapezoid with f(t_n, ·) evaluated on the current
/// endpoint estimate, repeated `corrector_sweeps` times.
[[nodiscard]] inline SolveResult solve_predictor_corrector(const FdeProblem& problem, const SolverConfig& config) {
  const std::size_t steps = validate(problem, config);
  const detail::Discretization disc(problem, config.dt, steps);
  const std::size_t m = disc.history_steps;

  Trajectory history = Trajectory::from_history(problem.phi, problem.t0, problem.h, config.dt);
  std::vector<double> y(history.values().begin(), history.values().end());
  y.resize(m + steps + 1);
  const std::span<const double> samples(y);
  const double first = history.time_at(0);
  const double y0 = y[m];

  std::vector<double> f(steps + 1);
  f[0] = detail::checked_eval(problem.rhs, problem.t0, SegmentView(samples.first(m + 1), first, config.dt,
                                                                     problem.t0, problem.h));
  for (std::size_t n = 1; n <= steps; ++n) {
    const double t = disc.time(n);
    const double free_decay = y0 * disc.decay[n];
    double predictor_sum = 0.0;
    double corrector_sum = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      const double fj = disc.decay[n - j] * f[j];
      predictor_sum += disc.weights.rectangle(n, j) * fj;
      corrector_sum += disc.weights.trapezoid(n, j) * fj;
    }
    y[m + n] = free_decay + disc.inv_gamma * predictor_sum;

    const SegmentView segment(samples.first(m + n + 1), first, config.dt, t, problem.h);
    const double endpoint_weight = disc.inv_gamma * disc.weights.trapezoid(n, n);
    for (int sweep = 0; sweep < config.corrector_sweeps; ++sweep) {
      const double fn = detail::checked_eval(problem.rhs, t, segment);
      y[m + n] = free_decay + disc.inv_gamma * corrector_sum + endpoint_weight * fn;
    }
    f[n] = detail::checked_eval(problem.rhs, t, segment);
  }

  SolveResult result{Trajectory(problem.t0, problem.h, config.dt, std::move(y)), {}};
  result.diagnostics.method = Method::predictor_corrector;
  result.diagnostics.iterations = static_cast<std::size_t>(config.corrector_sweeps);
  result.diagnostics.contraction_bound = detail::bound_for(problem);
  return result;
}

/// Picard iteration y^{k+1} = P(y^k) on [t0−h, T], starting from
/// y^0 = φ on the history and φ(t0)e^{−β(t−t0)} afterwards. Stops when the
/// sup norm of the successive difference is ≤ picard_tol; otherwise returns the
/// last iterate flagged non-converged.
[[nodiscard]] inline SolveResult solve_picard(const FdeProblem& problem, const SolverConfig& config) {
  const std::size_t steps = validate(problem, config);
  const detail::Discretization disc(problem, config.dt, steps);
  const std::size_t m = disc.history_steps;

  Trajectory history = Trajectory::from_history(problem.phi, problem.t0, problem.h, config.dt);
  std::vector<double> current(history.values().begin(), history.values().end());
  current.resize(m + steps + 1);
  const double y0 = current[m];
  for (std::size_t n = 1; n <= steps; ++n) {
    current[m + n] = y0 * disc.decay[n];
  }

  SolveDiagnostics diag;
  diag.method = Method::picard;
  diag.converged = false;
  diag.contraction_bound = detail::bound_for(problem);
  if (!diag.contraction_bound) {
    diag.warnings.emplace_back("rhs declares no Lipschitz constant; contraction condition not checked");
  } else if (*diag.contraction_bound >= 1.0) {
    diag.warnings.emplace_back("contraction condition fails (bound " + std::to_string(*diag.contraction_bound) +
                               " >= 1); convergence not guaranteed");
  }

  std::vector<double> next(current.size());
  for (int k = 0; k < config.picard_max_iter; ++k) {
    const std::vector<double> f = detail::evaluate_rhs(problem, disc, current, steps);
    std::copy(current.begin(), current.begin() + static_cast<std::ptrdiff_t>(m + 1), next.begin());
    double diff = 0.0;
    for (std::size_t n = 1; n <= steps; ++n) {
      next[m + n] = y0 * disc.decay[n] + disc.convolve(n, f);
      diff = std::max(diff, std::abs(next[m + n] - current[m + n]));
    }
    current.swap(next);
    diag.iterations = static_cast<std::size_t>(k + 1);
    if (!diag.successive_differences.empty() && diag.successive_differences.back() > 0.0) {
      diag.contraction_ratios.push_back(diff / diag.successive_differences.back());
    }
    diag.successive_differences.push_back(diff);
    diag.final_picard_difference = diff;
    if (!std::isfinite(diff)) {
      diag.warnings.emplace_back("Picard iterates diverged to non-finite values");
      break;
    }
    if (diff <= config.picard_tol) {
      diag.converged = true;
      break;
    }
  }
  if (!diag.converged) {
    diag.warnings.emplace_back("Picard iteration did not reach tolerance within " +
                               std::to_string(config.picard_max_iter) + " iterations");
  }
  return SolveResult{Trajectory(problem.t0, problem.h, config.dt, std::move(current)), std::move(diag)};
}

[[nodiscard]] inline SolveResult solve(const FdeProblem& problem, const SolverConfig& config) {
  return config.method == Method::picard ? solve_picard(problem, config)
                                         : solve_predictor_corrector(problem, config);
}

/// max_n |y(t_n) − [y(t0)e^{−β(t_n−t0)} + (1/Γ(α)) Σ_j w_{n,j} e^{−β(t_n−t_j)} f(t_j, y_{t_j})]|
/// over grid points t_n ≥ t0, using product-trapezoid weights.
[[nodiscard]] inline double residual(const FdeProblem& problem, const Trajectory& traj) {
  validate(problem);
  if (traj.t0() != problem.t0 || std::abs(traj.h() - problem.h) > detail::kGridSnap * problem.h) {
    throw ValidationError("trajectory", "grid does not match the problem's t0 and h");
  }
  const std::size_t steps = traj.steps();
  const detail::Discretization disc(problem, traj.dt(), steps);
  const std::vector<double> f = detail::evaluate_rhs(problem, disc, traj.values(), steps);
  const double y0 = traj.at_step(0);
  double worst = 0.0;
  for (std::size_t n = 1; n <= steps; ++n) {
    const double expected = y0 * disc.decay[n] + disc.convolve(n, f);
    worst = std::max(worst, std::abs(traj.at_step(n) - expected));
  }
  return worst;
}

}  // namespace fracdde
