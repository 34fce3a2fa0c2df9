/**
 * @file analysis.hpp
 * @brief Stability diagnostics: Gronwall envelope and its fitted constant,
 *        empirical Lipschitz probes, and the ensemble stabilization harness.
 */
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <future>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "fracdde/contraction.hpp"
#include "fracdde/model.hpp"
#include "fracdde/solver.hpp"
#include "fracdde/specfun.hpp"

namespace fracdde {

struct EnvelopeParams {
  double x0_minus_y0 = 0.0;
  double l = 0.0;
  double K = 0.0;
  double alpha = 0.5;
  double beta = 1.0;
  double h = 1.0;
  double t0 = 0.0;
};

/// |x0−y0| e^{−β(t−h−t0)} (1 + K l e^{βh} (t−t0)^α / Γ(α+1)), valid for t ≥ t0+h.
[[nodiscard]] inline double gronwall_envelope(const EnvelopeParams& p, double t) {
  if (t < p.t0 + p.h - detail::kGridSnap * p.h) {
    throw ValidationError("t", "envelope is only stated for t >= t0 + h");
  }
  if (p.l < 0.0 || p.K < 0.0 || !(p.alpha > 0.0 && p.alpha < 1.0) || !(p.beta > 0.0) || !(p.h > 0.0)) {
    throw ValidationError("params", "envelope parameters out of range");
  }
  const double growth = 1.0 + p.K * p.l * std::exp(p.beta * p.h) * std::pow(std::max(t - p.t0, 0.0), p.alpha) /
                                  gamma(p.alpha + 1.0);
  return std::abs(p.x0_minus_y0) * std::exp(-p.beta * (t - p.h - p.t0)) * growth;
}

struct GronwallFit {
  /// Smallest K ≥ 0 making the envelope dominate; +inf when none exists.
  double K = 0.0;
  [[nodiscard]] bool finite() const noexcept { return std::isfinite(K); }
};

/// Minimal K such that gronwall_envelope dominates |a(t) − b(t)| at every
/// grid t ≥ t0 + h. Both trajectories must share the problem's grid; the
/// Lipschitz constant comes from the rhs unless `l` is given.
[[nodiscard]] inline GronwallFit fit_gronwall_K(const FdeProblem& problem, const Trajectory& a, const Trajectory& b,
                                                std::optional<double> l = std::nullopt) {
  if (a.size() != b.size() || a.dt() != b.dt() || a.t0() != b.t0() || a.t0() != problem.t0) {
    throw ValidationError("trajectory", "trajectories must share the problem's grid");
  }
  const double lip = l ? *l : problem.rhs.lipschitz.value_or(-1.0);
  if (!(lip >= 0.0)) {
    throw ValidationError("l", "a Lipschitz constant is required to fit the Gronwall envelope");
  }
  const double d0 = std::abs(a.at_step(0) - b.at_step(0));
  const double growth_scale = lip * std::exp(problem.beta * problem.h) / gamma(problem.alpha + 1.0);
  const std::size_t first = exact_steps(problem.h, a.dt(), "h");

  GronwallFit fit;
  for (std::size_t n = first; n <= a.steps(); ++n) {
    const double t = problem.t0 + static_cast<double>(n) * a.dt();
    const double diff = std::abs(a.at_step(n) - b.at_step(n));
    if (diff == 0.0) {
      continue;
    }
    if (d0 == 0.0) {
      return GronwallFit{std::numeric_limits<double>::infinity()};
    }
    const double ratio = diff / (d0 * std::exp(-problem.beta * (t - problem.h - problem.t0)));
    if (ratio <= 1.0) {
      continue;
    }
    const double power = growth_scale * std::pow(t - problem.t0, problem.alpha);
    if (power == 0.0) {
      return GronwallFit{std::numeric_limits<double>::infinity()};
    }
    fit.K = std::max(fit.K, (ratio - 1.0) / power);
  }
  return fit;
}

struct ProbeSpec {
  double t_min = 0.0;
  double t_max = 10.0;
  double h = 1.0;
  double dt = 1.0 / 16.0;
  /// Base segments are drawn uniformly from [−amplitude, amplitude].
  double amplitude = 2.0;
  /// Perturbation magnitude ‖u − v‖ is drawn from (0, perturbation].
  double perturbation = 1.0;
  std::size_t samples = 10000;
  std::uint64_t seed = 0;
};

/// Empirical Lipschitz constant: max over random pairs (u_t, v_t) of
/// |f(t,u_t) − f(t,v_t)| / ‖u_t − v_t‖. A lower bound on the true constant.
///
/// Even-numbered probes shift the whole segment by a constant; odd-numbered
/// probes perturb every grid value independently.
[[nodiscard]] inline double estimate_lipschitz(const RhsField& rhs, const ProbeSpec& spec) {
  const std::size_t m = exact_steps(spec.h, spec.dt, "h");
  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> time_dist(spec.t_min, spec.t_max);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::uniform_real_distribution<double> size_dist(0.0, 1.0);

  std::vector<double> u(m + 1);
  std::vector<double> v(m + 1);
  std::vector<double> d(m + 1);
  double best = 0.0;
  for (std::size_t i = 0; i < spec.samples; ++i) {
    const double t = time_dist(rng);
    for (auto& x : u) {
      x = spec.amplitude * unit(rng);
    }
    const double size = spec.perturbation * (1.0 - size_dist(rng));  // (0, perturbation]
    if (i % 2 == 0) {
      const double shift = unit(rng) < 0.0 ? -size : size;
      for (std::size_t j = 0; j <= m; ++j) {
        v[j] = u[j] + shift;
      }
    } else {
      for (std::size_t j = 0; j <= m; ++j) {
        v[j] = u[j] + size * unit(rng);
      }
    }
    for (std::size_t j = 0; j <= m; ++j) {
      d[j] = v[j] - u[j];
    }
    const double first = t - spec.h;
    const SegmentView su(u, first, spec.dt, t, spec.h);
    const SegmentView sv(v, first, spec.dt, t, spec.h);
    const double norm = SegmentView(d, first, spec.dt, t, spec.h).sup_norm();
    if (norm == 0.0) {
      continue;
    }
    best = std::max(best, std::abs(rhs(t, su) - rhs(t, sv)) / norm);
  }
  return best;
}

/// Least-squares fit of log D(t) ≈ log C − ρ (t−t0) + log(1 + c (t−t0)^α).
struct DecayFit {
  double C = 0.0;
  double rho = 0.0;
  double c = 0.0;
  double rms = 0.0;  // root-mean-square residual in log space
  std::size_t points = 0;
};

namespace detail {

struct LineFit {
  double intercept = 0.0;
  double slope = 0.0;
  double sse = std::numeric_limits<double>::infinity();
};

inline LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  const double denom = n * sxx - sx * sx;
  LineFit f;
  if (denom == 0.0) {
    return f;
  }
  f.slope = (n * sxy - sx * sy) / denom;
  f.intercept = (sy - f.slope * sx) / n;
  f.sse = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - f.intercept - f.slope * x[i];
    f.sse += r * r;
  }
  return f;
}

}  // namespace detail

/// Fits the envelope shape C e^{−ρτ}(1 + c τ^α), τ = t − t0, to positive
/// samples. For fixed c the problem is linear in (log C, ρ); c ≥ 0 is found by
/// a log-spaced scan followed by golden-section refinement.
[[nodiscard]] inline std::optional<DecayFit> fit_decay(const std::vector<double>& times,
                                                       const std::vector<double>& distances, double t0,
                                                       double alpha) {
  std::vector<double> tau;
  std::vector<double> logd;
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (distances[i] > 0.0 && std::isfinite(distances[i])) {
      tau.push_back(times[i] - t0);
      logd.push_back(std::log(distances[i]));
    }
  }
  if (tau.size() < 3) {
    return std::nullopt;
  }
  auto evaluate = [&](double c) {
    std::vector<double> adjusted(logd.size());
    for (std::size_t i = 0; i < logd.size(); ++i) {
      adjusted[i] = logd[i] - std::log1p(c * std::pow(tau[i], alpha));
    }
    return detail::fit_line(tau, adjusted);
  };

  double best_c = 0.0;
  detail::LineFit best = evaluate(0.0);
  constexpr int kScan = 181;
  double best_log_c = -3.0;
  for (int i = 0; i < kScan; ++i) {
    const double log_c = -3.0 + 9.0 * i / (kScan - 1);
    const detail::LineFit f = evaluate(std::pow(10.0, log_c));
    if (f.sse < best.sse) {
      best = f;
      best_c = std::pow(10.0, log_c);
      best_log_c = log_c;
    }
  }
  if (best_c > 0.0) {
    const double golden = (std::sqrt(5.0) - 1.0) / 2.0;
    double lo = best_log_c - 0.05;
    double hi = best_log_c + 0.05;
    for (int it = 0; it < 60; ++it) {
      const double a = hi - golden * (hi - lo);
      const double b = lo + golden * (hi - lo);
      if (evaluate(std::pow(10.0, a)).sse < evaluate(std::pow(10.0, b)).sse) {
        hi = b;
      } else {
        lo = a;
      }
    }
    const double c = std::pow(10.0, 0.5 * (lo + hi));
    const detail::LineFit refined = evaluate(c);
    if (refined.sse < best.sse) {
      best = refined;
      best_c = c;
    }
  }
  DecayFit fit;
  fit.C = std::exp(best.intercept);
  fit.rho = -best.slope;
  fit.c = best_c;
  fit.points = tau.size();
  fit.rms = std::sqrt(best.sse / static_cast<double>(tau.size()));
  return fit;
}

struct StabilityReport {
  std::size_t ensemble_size = 0;
  std::vector<std::string> member_names;
  std::vector<SolveResult> members;
  /// Grid times t0, t0+dt, ..., T.
  std::vector<double> times;
  /// (i, j) member index pairs, i < j, in the column order of pair_distances.
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  /// pair_distances[p][n] = |x_i(t_n) − x_j(t_n)|.
  std::vector<std::vector<double>> pair_distances;
  /// Max over pairs at each grid time.
  std::vector<double> pairwise_sup;
  /// (ε, T(ε)); T is +inf when the distance is still above ε at the final time.
  std::vector<std::pair<double, double>> T_of_eps;
  std::optional<DecayFit> decay_fit;
};

/// Earliest grid time from which `curve` stays ≤ eps; +inf if the last sample exceeds eps.
[[nodiscard]] inline double stabilization_time(const std::vector<double>& times, const std::vector<double>& curve,
                                               double eps) {
  std::size_t first_ok = curve.size();
  while (first_ok > 0 && curve[first_ok - 1] <= eps) {
    --first_ok;
  }
  if (first_ok == curve.size()) {
    return std::numeric_limits<double>::infinity();
  }
  return times[first_ok];
}

/// Pairwise pointwise distances, T(ε) and a tail decay fit for already solved
/// ensemble members sharing one grid.
[[nodiscard]] inline StabilityReport analyze_ensemble(const FdeProblem& problem, std::vector<std::string> names,
                                                      std::vector<SolveResult> members,
                                                      const std::vector<double>& eps_list) {
  if (members.size() < 2) {
    throw ValidationError("phis", "stability analysis needs at least two ensemble members");
  }
  const std::size_t steps = members.front().trajectory.steps();
  const double dt = members.front().trajectory.dt();
  for (const auto& m : members) {
    if (m.trajectory.steps() != steps || m.trajectory.dt() != dt) {
      throw ValidationError("members", "ensemble members must share one grid");
    }
  }
  StabilityReport report;
  report.ensemble_size = members.size();
  report.member_names = std::move(names);
  report.members = std::move(members);

  report.times.resize(steps + 1);
  for (std::size_t n = 0; n <= steps; ++n) {
    report.times[n] = problem.t0 + static_cast<double>(n) * dt;
  }
  report.pairwise_sup.assign(steps + 1, 0.0);
  for (std::size_t i = 0; i < report.members.size(); ++i) {
    for (std::size_t j = i + 1; j < report.members.size(); ++j) {
      const Trajectory& a = report.members[i].trajectory;
      const Trajectory& b = report.members[j].trajectory;
      std::vector<double> dist(steps + 1);
      for (std::size_t n = 0; n <= steps; ++n) {
        dist[n] = std::abs(a.at_step(n) - b.at_step(n));
        report.pairwise_sup[n] = std::max(report.pairwise_sup[n], dist[n]);
      }
      report.pairs.emplace_back(i, j);
      report.pair_distances.push_back(std::move(dist));
    }
  }

  for (double eps : eps_list) {
    if (!(eps > 0.0)) {
      throw ValidationError("eps_list", "tolerances must be positive");
    }
    report.T_of_eps.emplace_back(eps, stabilization_time(report.times, report.pairwise_sup, eps));
  }

  const auto tail = static_cast<std::ptrdiff_t>(report.times.size() / 2);
  const std::vector<double> tail_times(report.times.begin() + tail, report.times.end());
  const std::vector<double> tail_sup(report.pairwise_sup.begin() + tail, report.pairwise_sup.end());
  report.decay_fit = fit_decay(tail_times, tail_sup, problem.t0, problem.alpha);
  return report;
}

/// Solves each member with `solve_one` on a worker thread and returns the
/// results in input order.
template <typename SolveFn>
[[nodiscard]] std::vector<SolveResult> solve_ensemble(const FdeProblem& problem,
                                                      const std::vector<HistoryFunction>& phis,
                                                      const SolverConfig& config, SolveFn solve_one) {
  std::vector<std::future<SolveResult>> jobs;
  jobs.reserve(phis.size());
  for (const auto& phi : phis) {
    FdeProblem member = problem;
    member.phi = phi;
    jobs.push_back(std::async(std::launch::async, [member = std::move(member), config, solve_one] {
      return solve_one(member, config);
    }));
  }
  std::vector<SolveResult> results;
  results.reserve(jobs.size());
  for (auto& job : jobs) {
    results.push_back(job.get());
  }
  return results;
}

/// Solves the ensemble {φ_i} with the predictor-corrector (members run
/// concurrently) and measures pointwise pairwise distances, T(ε) and a decay
/// fit over the last half of the horizon.
///
/// A finite ensemble only under-approximates "every bounded set of initial
/// data"; T(ε) is certified for the sampled members only.
[[nodiscard]] inline StabilityReport stability_harness(const FdeProblem& problem,
                                                       const std::vector<HistoryFunction>& phis,
                                                       SolverConfig config, const std::vector<double>& eps_list) {
  if (phis.size() < 2) {
    throw ValidationError("phis", "stability harness needs at least two initial functions");
  }
  config.method = Method::predictor_corrector;
  (void)validate(problem, config);
  std::vector<std::string> names;
  for (std::size_t i = 0; i < phis.size(); ++i) {
    names.push_back(phis[i].name().empty() ? "phi" + std::to_string(i) : phis[i].name());
  }
  auto members = solve_ensemble(problem, phis, config, [](const FdeProblem& p, const SolverConfig& c) {
    return solve_predictor_corrector(p, c);
  });
  return analyze_ensemble(problem, std::move(names), std::move(members), eps_list);
}

}  // namespace fracdde
