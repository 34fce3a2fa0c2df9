#include <cmath>
#include <limits>
#include <vector>

#include <gtest/gtest.h>

#include "fracdde/analysis.hpp"

namespace {

using namespace fracdde;

HistoryFunction fn(double (*f)(double), const char* name) { return HistoryFunction(f, name); }

FdeProblem example41(HistoryFunction phi) { return make_problem(0.5, 1.0, 0.0, 1.0, example_4_1_rhs(), phi); }

SolverConfig pece(double dt, double T) {
  SolverConfig c;
  c.dt = dt;
  c.T = T;
  return c;
}

TEST(GronwallEnvelope, StartsAtInitialGapWhenKIsZero) {
  EnvelopeParams p{0.3, 0.5, 0.0, 0.5, 1.0, 1.0, 0.0};
  EXPECT_DOUBLE_EQ(gronwall_envelope(p, 1.0), 0.3);
  EXPECT_DOUBLE_EQ(gronwall_envelope(p, 3.0), 0.3 * std::exp(-2.0));
}

TEST(GronwallEnvelope, DegenerateCases) {
  EnvelopeParams p{0.0, 0.5, 3.0, 0.5, 1.0, 1.0, 0.0};
  for (double t : {1.0, 2.0, 50.0}) EXPECT_EQ(gronwall_envelope(p, t), 0.0);
  p = EnvelopeParams{1.0, 0.0, 3.0, 0.5, 1.0, 1.0, 0.0};
  for (double t : {1.0, 2.0, 50.0}) EXPECT_DOUBLE_EQ(gronwall_envelope(p, t), std::exp(-(t - 1.0)));
}

TEST(GronwallEnvelope, ClosedForm) {
  EnvelopeParams p{-2.0, 0.5, 0.26, 0.5, 1.0, 1.0, 0.0};
  const double t = 4.0;
  const double want = 2.0 * std::exp(-3.0) * (1.0 + 0.26 * 0.5 * std::exp(1.0) * 2.0 / std::tgamma(1.5));
  EXPECT_NEAR(gronwall_envelope(p, t), want, 1e-15);
}

TEST(GronwallEnvelope, DecaysToZero) {
  EnvelopeParams p{3.0, 0.5, 0.26, 0.5, 1.0, 1.0, 0.0};
  EXPECT_LT(gronwall_envelope(p, 100.0), 1e-10);
  double prev = gronwall_envelope(p, 2.0);
  for (double t = 2.5; t <= 100.0; t += 0.5) {
    const double v = gronwall_envelope(p, t);
    EXPECT_LT(v, prev);
    prev = v;
  }
}

TEST(GronwallEnvelope, OnlyDefinedAfterOneDelay) {
  EnvelopeParams p{1.0, 0.5, 1.0, 0.5, 1.0, 1.0, 0.0};
  EXPECT_THROW((void)gronwall_envelope(p, 0.5), ValidationError);
  p.K = -1.0;
  EXPECT_THROW((void)gronwall_envelope(p, 2.0), ValidationError);
}

TEST(FitGronwallK, SinCosPairOnExample41) {
  const FdeProblem p = example41(fn([](double t) { return std::sin(t); }, "sin"));
  FdeProblem q = p;
  q.phi = fn([](double t) { return std::cos(t); }, "cos");
  const auto a = solve(p, pece(1.0 / 64, 10.0)).trajectory;
  const auto b = solve(q, pece(1.0 / 64, 10.0)).trajectory;
  const GronwallFit fit = fit_gronwall_K(p, a, b);
  ASSERT_TRUE(fit.finite());
  EXPECT_NEAR(fit.K, 0.2604, 0.2 * 0.2604);

  EnvelopeParams env{a.at_step(0) - b.at_step(0), 0.5, fit.K, 0.5, 1.0, 1.0, 0.0};
  for (std::size_t n = 64; n <= a.steps(); ++n) {
    const double t = n / 64.0;
    EXPECT_LE(std::abs(a.at_step(n) - b.at_step(n)), gronwall_envelope(env, t) * (1.0 + 1e-12)) << "t=" << t;
  }
  // Anything smaller fails to dominate somewhere.
  if (fit.K > 0.0) {
    env.K = 0.99 * fit.K;
    bool violated = false;
    for (std::size_t n = 64; n <= a.steps(); ++n) {
      violated |= std::abs(a.at_step(n) - b.at_step(n)) > gronwall_envelope(env, n / 64.0);
    }
    EXPECT_TRUE(violated);
  }
}

TEST(FitGronwallK, ZeroForcingNeedsNoGrowthTerm) {
  const FdeProblem p = make_problem(0.5, 1.0, 0.0, 1.0, constant_rhs(0.0), fn([](double) { return 1.0; }, "one"));
  FdeProblem q = p;
  q.phi = fn([](double) { return -2.0; }, "minus_two");
  const auto a = solve(p, pece(1.0 / 32, 6.0)).trajectory;
  const auto b = solve(q, pece(1.0 / 32, 6.0)).trajectory;
  EXPECT_EQ(fit_gronwall_K(p, a, b, 0.5).K, 0.0);
}

TEST(FitGronwallK, IdenticalStartDifferentHistory) {
  // Both histories pass through 0 at t0 but differ earlier, so no envelope of this shape exists.
  const FdeProblem p = example41(fn([](double t) { return std::sin(t); }, "sin"));
  FdeProblem q = p;
  q.phi = fn([](double t) { return std::sin(3.0 * t); }, "sin3");
  const auto a = solve(p, pece(1.0 / 32, 4.0)).trajectory;
  const auto b = solve(q, pece(1.0 / 32, 4.0)).trajectory;
  EXPECT_FALSE(fit_gronwall_K(p, a, b).finite());
  EXPECT_EQ(fit_gronwall_K(p, a, a).K, 0.0);
}

TEST(FitGronwallK, NeedsLipschitzConstantAndSharedGrid) {
  const FdeProblem p = make_problem(0.5, 1.0, 0.0, 1.0, example_4_2_rhs(), fn([](double) { return 1.0; }, "one"));
  const auto a = solve(p, pece(1.0 / 16, 3.0)).trajectory;
  EXPECT_THROW((void)fit_gronwall_K(p, a, a), ValidationError);
  EXPECT_NO_THROW((void)fit_gronwall_K(p, a, a, 1.0));
  const auto b = solve(p, pece(1.0 / 32, 3.0)).trajectory;
  EXPECT_THROW((void)fit_gronwall_K(p, a, b, 1.0), ValidationError);
}

TEST(EstimateLipschitz, Example41StaysBelowDeclaredConstant) {
  ProbeSpec spec;
  spec.seed = 7;
  const double l = estimate_lipschitz(example_4_1_rhs(), spec);
  EXPECT_LE(l, 0.5);
  EXPECT_GT(l, 0.1);
  EXPECT_EQ(l, estimate_lipschitz(example_4_1_rhs(), spec));
}

TEST(EstimateLipschitz, LinearFieldsAreTight) {
  ProbeSpec spec;
  spec.samples = 200;
  EXPECT_NEAR(estimate_lipschitz(linear_rhs(-3.0), spec), 3.0, 1e-12);
  EXPECT_NEAR(estimate_lipschitz(delay_linear_rhs(2.0), spec), 2.0, 1e-12);
  EXPECT_EQ(estimate_lipschitz(constant_rhs(4.0), spec), 0.0);
}

TEST(FitDecay, RecoversSyntheticEnvelope) {
  const double C = 2.0, rho = 0.8, c = 0.5, alpha = 0.5;
  std::vector<double> t, d;
  for (double s = 5.0; s <= 10.0; s += 1.0 / 64) {
    t.push_back(s);
    d.push_back(C * std::exp(-rho * s) * (1.0 + c * std::sqrt(s)));
  }
  const auto fit = fit_decay(t, d, 0.0, alpha);
  ASSERT_TRUE(fit.has_value());
  EXPECT_NEAR(fit->rho, rho, 1e-3);
  EXPECT_NEAR(fit->c, c, 5e-3);
  EXPECT_NEAR(fit->C, C, 1e-2);
  EXPECT_LT(fit->rms, 1e-4);
  EXPECT_EQ(fit->points, t.size());
}

TEST(FitDecay, PureExponential) {
  std::vector<double> t, d;
  for (double s = 1.0; s <= 6.0; s += 0.25) {
    t.push_back(s);
    d.push_back(0.7 * std::exp(-1.3 * s));
  }
  const auto fit = fit_decay(t, d, 0.0, 0.5);
  ASSERT_TRUE(fit.has_value());
  EXPECT_NEAR(fit->rho, 1.3, 1e-3);
  EXPECT_LT(fit->rms, 1e-3);
}

TEST(FitDecay, NeedsThreePositiveSamples) {
  EXPECT_FALSE(fit_decay({1.0, 2.0, 3.0}, {1.0, 0.0, 0.5}, 0.0, 0.5).has_value());
}

TEST(StabilizationTime, Cases) {
  const std::vector<double> t{0, 1, 2, 3, 4};
  EXPECT_EQ(stabilization_time(t, {5, 3, 0.5, 0.2, 0.1}, 1.0), 2.0);
  EXPECT_EQ(stabilization_time(t, {5, 0.5, 2, 0.2, 0.1}, 1.0), 3.0);
  EXPECT_EQ(stabilization_time(t, {0.1, 0.1, 0.1, 0.1, 0.1}, 1.0), 0.0);
  EXPECT_TRUE(std::isinf(stabilization_time(t, {5, 3, 0.5, 0.2, 1.1}, 1.0)));
}

TEST(StabilityHarness, Example41Ensemble) {
  const FdeProblem p = example41(fn([](double t) { return std::sin(t); }, "sin"));
  std::vector<HistoryFunction> phis{fn([](double t) { return std::sin(t); }, "sin"),
                                    fn([](double t) { return std::cos(t); }, "cos"),
                                    fn([](double t) { return -std::cos(t); }, "neg_cos"),
                                    fn([](double) { return 1.5; }, "const")};
  SolverConfig c = pece(1.0 / 64, 10.0);
  c.method = Method::picard;  // ignored: the harness always marches with the predictor-corrector
  const StabilityReport r = stability_harness(p, phis, c, {0.1, 0.05, 0.01});
  EXPECT_EQ(r.ensemble_size, 4u);
  EXPECT_EQ(r.pairs.size(), 6u);
  EXPECT_EQ(r.member_names[1], "cos");
  for (const auto& m : r.members) {
    EXPECT_EQ(m.diagnostics.method, Method::predictor_corrector);
  }
  ASSERT_EQ(r.times.size(), 641u);
  for (std::size_t n = 0; n < r.times.size(); ++n) {
    double worst = 0.0;
    for (const auto& d : r.pair_distances) worst = std::max(worst, d[n]);
    EXPECT_EQ(r.pairwise_sup[n], worst);
  }
  EXPECT_LT(r.pairwise_sup.back(), 1e-3);
  ASSERT_EQ(r.T_of_eps.size(), 3u);
  double prev = 0.0;
  for (auto [eps, T] : r.T_of_eps) {
    EXPECT_TRUE(std::isfinite(T)) << eps;
    EXPECT_GE(T, prev);
    prev = T;
  }
  ASSERT_TRUE(r.decay_fit.has_value());
  EXPECT_GT(r.decay_fit->rho, 0.0);
}

TEST(StabilityHarness, IdenticalMembers) {
  const FdeProblem p = example41(fn([](double t) { return std::sin(t); }, "sin"));
  const StabilityReport r = stability_harness(p, {p.phi, p.phi, p.phi}, pece(1.0 / 16, 4.0), {0.1, 1e-6});
  for (double d : r.pairwise_sup) EXPECT_EQ(d, 0.0);
  for (auto [eps, T] : r.T_of_eps) EXPECT_EQ(T, 0.0);
  EXPECT_FALSE(r.decay_fit.has_value());
}

TEST(StabilityHarness, RejectsSingleMember) {
  const FdeProblem p = example41(fn([](double t) { return std::sin(t); }, "sin"));
  EXPECT_THROW((void)stability_harness(p, {p.phi}, pece(1.0 / 16, 4.0), {0.1}), ValidationError);
  EXPECT_THROW((void)stability_harness(p, {p.phi, p.phi}, pece(1.0 / 16, 4.0), {0.0}), ValidationError);
}

}  // namespace
