#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "fracdde/quad.hpp"
#include "fracdde/specfun.hpp"
#include "oracles.hpp"

namespace {

using namespace fracdde;

double sum(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0); }

// Σ_j w_{n,j} g(t_j) for g sampled on the grid t_j = j·dt.
template <typename G>
double apply(const std::vector<double>& w, double dt, G g) {
  double acc = 0.0;
  for (std::size_t j = 0; j < w.size(); ++j) {
    acc += w[j] * g(static_cast<double>(j) * dt);
  }
  return acc;
}

class WeightsByAlpha : public ::testing::TestWithParam<double> {};

TEST_P(WeightsByAlpha, ConstantExactness) {
  const double alpha = GetParam();
  const double dt = 0.01;
  const ProductWeights w(alpha, dt, 1000);
  for (std::size_t n : {1u, 2u, 3u, 10u, 99u, 500u, 1000u}) {
    const double want = std::pow(n * dt, alpha) / alpha;
    EXPECT_NEAR(sum(w.trapezoid_row(n)), want, 1e-12 * want) << "n=" << n;
    EXPECT_NEAR(sum(w.rectangle_row(n)), want, 1e-12 * want) << "n=" << n;
  }
}

TEST_P(WeightsByAlpha, LinearExactness) {
  const double alpha = GetParam();
  const double dt = 0.01;
  const ProductWeights w(alpha, dt, 1000);
  for (std::size_t n : {1u, 2u, 7u, 64u, 333u, 1000u}) {
    const double t = n * dt;
    // ∫₀ᵗ (t−s)^{α−1} s ds = t^{α+1}/(α(α+1))
    const double want = std::pow(t, alpha + 1.0) / (alpha * (alpha + 1.0));
    EXPECT_NEAR(apply(w.trapezoid_row(n), dt, [](double s) { return s; }), want, 1e-10 * want) << "n=" << n;
    const double shifted = 3.0 * std::pow(t, alpha) / alpha - 2.0 * want;
    EXPECT_NEAR(apply(w.trapezoid_row(n), dt, [](double s) { return 3.0 - 2.0 * s; }), shifted,
                1e-10 * std::abs(shifted))
        << "n=" << n;
  }
}

TEST_P(WeightsByAlpha, WeightsArePositive) {
  const ProductWeights w(GetParam(), 1.0 / 64.0, 400);
  for (std::size_t n = 1; n <= 400; n += 13) {
    for (std::size_t j = 0; j <= n; ++j) {
      EXPECT_GT(w.trapezoid(n, j), 0.0);
      if (j < n) {
        EXPECT_GT(w.rectangle(n, j), 0.0);
      }
    }
    EXPECT_EQ(w.rectangle(n, n), 0.0);
  }
}

TEST_P(WeightsByAlpha, SecondOrderForSmoothIntegrand) {
  const double alpha = GetParam();
  const double t = 2.0;
  auto g = [](double s) { return std::cos(s) + s * s; };
  const double want = oracle::singular_integral(alpha, t, g);
  std::vector<double> errs;
  for (double dt : {1.0 / 16, 1.0 / 32, 1.0 / 64, 1.0 / 128}) {
    const auto n = static_cast<std::size_t>(std::lround(t / dt));
    errs.push_back(std::abs(apply(product_trapezoid_weights(alpha, dt, n), dt, g) - want));
  }
  for (std::size_t i = 1; i < errs.size(); ++i) {
    EXPECT_GE(std::log2(errs[i - 1] / errs[i]), 1.8) << "refinement " << i;
  }
}

INSTANTIATE_TEST_SUITE_P(Orders, WeightsByAlpha, ::testing::Values(0.25, 0.5, 0.75));

TEST(ProductWeights, ReduceToTrapezoidAsAlphaTendsToOne) {
  const double dt = 0.1;
  const auto w = product_trapezoid_weights(1.0 - 1e-8, dt, 20);
  EXPECT_NEAR(w.front() / (dt / 2), 1.0, 1e-6);
  EXPECT_NEAR(w.back() / (dt / 2), 1.0, 1e-6);
  for (std::size_t j = 1; j < 20; ++j) {
    EXPECT_NEAR(w[j] / dt, 1.0, 1e-6);
  }
}

TEST(ProductWeights, RandomAffineExactness) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> coef(-10.0, 10.0);
  const double dt = 0.02;
  for (double alpha : {0.25, 0.5, 0.75}) {
    const ProductWeights w(alpha, dt, 500);
    for (int i = 0; i < 20; ++i) {
      const double a = coef(rng), b = coef(rng);
      const std::size_t n = 25 * (i + 1);
      const double t = n * dt;
      const double want = a * std::pow(t, alpha) / alpha + b * std::pow(t, alpha + 1.0) / (alpha * (alpha + 1.0));
      const double got = apply(w.trapezoid_row(n), dt, [=](double s) { return a + b * s; });
      EXPECT_NEAR(got, want, 1e-10 * (std::abs(a) * std::pow(t, alpha) / alpha +
                                      std::abs(b) * std::pow(t, alpha + 1.0) / (alpha * (alpha + 1.0))));
    }
  }
}

TEST(ProductWeights, CoarseExponentialAgainstIncompleteGamma) {
  // ∫₀¹ (1−s)^{−½} e^{−(1−s)} ds = γ(½, 1)
  const double want = oracle::lower_incomplete_gamma(0.5, 1.0);
  std::vector<double> errs;
  for (std::size_t n : {4u, 8u, 16u, 32u}) {
    const double dt = 1.0 / n;
    errs.push_back(std::abs(apply(product_trapezoid_weights(0.5, dt, n), dt,
                                  [](double s) { return std::exp(-(1.0 - s)); }) -
                            want));
  }
  EXPECT_LE(errs.front() / want, 5e-3);  // 6.65e-3 absolute at dt = 1/4
  for (std::size_t i = 1; i < errs.size(); ++i) {
    EXPECT_GE(errs[i - 1] / errs[i], 3.5) << "halving " << i;
  }
}

TEST(ProductWeights, RejectsBadParameters) {
  EXPECT_THROW(ProductWeights(1.0, 0.1, 10), ValidationError);
  EXPECT_THROW(ProductWeights(0.5, 0.0, 10), ValidationError);
  const ProductWeights w(0.5, 0.1, 10);
  EXPECT_THROW((void)w.trapezoid_row(0), std::out_of_range);
  EXPECT_THROW((void)w.trapezoid_row(11), std::out_of_range);
}

TEST(WeightedConvolution, ExponentialKernelGivesIncompleteGamma) {
  // g ≡ 1, β = 1 on [0, 1]: (1/Γ(½)) ∫₀¹ u^{−½} e^{−u} du = γ(½, 1)/Γ(½)
  const double dt = 1.0 / 1024.0;
  const std::vector<double> g(1025, 1.0);
  const double got = weighted_convolution(0.5, 1.0, 0.0, dt, 1024, g);
  const double want = oracle::lower_incomplete_gamma(0.5, 1.0) / std::tgamma(0.5);
  EXPECT_NEAR(got, want, 1e-5);
}

TEST(WeightedConvolution, ConstantAgainstIncompleteGamma) {
  const double dt = 1.0 / 1024.0, c = 3.0;
  const std::vector<double> g(2049, c);
  const double want = c * oracle::lower_incomplete_gamma(0.5, 2.0) / std::tgamma(0.5);
  EXPECT_NEAR(weighted_convolution(0.5, 1.0, 0.0, dt, 2048, g), want, 1e-5);
}

TEST(WeightedConvolution, ConstantApproachesLimit) {
  const double dt = 1.0 / 64.0;
  const std::vector<double> g(40 * 64 + 1, 1.0);
  EXPECT_NEAR(weighted_convolution(0.5, 1.0, 0.0, dt, 40 * 64, g), 1.0, 1e-4);
  const std::vector<double> zero(65, 0.0);
  EXPECT_EQ(weighted_convolution(0.5, 1.0, 0.0, dt, 64, zero), 0.0);
}

TEST(WeightedConvolution, MatchesQuadratureForDecayingKernel) {
  auto k = [](double s) { return 10.0 * std::pow(s + 1.0, -0.75); };
  const double dt = 1.0 / 64.0;
  const std::size_t n = 40 * 64;
  std::vector<double> g(n + 1);
  for (std::size_t j = 0; j <= n; ++j) g[j] = k(j * dt);
  for (std::size_t m : {std::size_t{64}, std::size_t{640}, n}) {
    const double want = oracle::weighted_convolution(0.5, 1.0, 0.0, m * dt, k);
    EXPECT_NEAR(weighted_convolution(0.5, 1.0, 0.0, dt, m, g), want, 1e-4) << "t=" << m * dt;
  }
}

TEST(WeightedConvolution, RejectsShortSamples) {
  const std::vector<double> g(5, 1.0);
  EXPECT_THROW((void)weighted_convolution(0.5, 1.0, 0.0, 0.1, 5, g), std::invalid_argument);
  EXPECT_EQ(weighted_convolution(0.5, 1.0, 0.0, 0.1, 0, g), 0.0);
}

std::vector<double> sampled(double dt, double T, double (*k)(double)) {
  const auto n = static_cast<std::size_t>(std::lround(T / dt));
  std::vector<double> v(n + 1);
  for (std::size_t j = 0; j <= n; ++j) v[j] = k(j * dt);
  return v;
}

std::vector<double> integer_grid(int from, int to) {
  std::vector<double> t;
  for (int i = from; i <= to; ++i) t.push_back(i);
  return t;
}

TEST(KernelDecayCheck, ZeroKernel) {
  const auto k = sampled(0.25, 20.0, [](double) { return 0.0; });
  const auto r = kernel_decay_check(0.5, 1.0, 0.0, 0.25, k, integer_grid(1, 20));
  EXPECT_TRUE(r.decaying);
  for (auto [t, v] : r.values) EXPECT_EQ(v, 0.0);
}

TEST(KernelDecayCheck, ConstantKernelDoesNotDecay) {
  const auto k = sampled(0.25, 40.0, [](double) { return 1.0; });
  const auto r = kernel_decay_check(0.5, 1.0, 0.0, 0.25, k, integer_grid(1, 40));
  EXPECT_FALSE(r.decaying);
  // Limit β^{−α} = 1.
  EXPECT_NEAR(r.values.back().second, 1.0, 1e-2);
}

TEST(KernelDecayCheck, PowerKernelDecays) {
  const double dt = 1.0 / 32.0;
  const auto k = sampled(dt, 40.0, [](double s) { return 10.0 * std::pow(s + 1.0, -0.75); });
  const auto grid = integer_grid(1, 40);
  const auto r = kernel_decay_check(0.5, 1.0, 0.0, dt, k, grid);
  EXPECT_TRUE(r.tail_monotone);
  EXPECT_TRUE(r.decaying);
  const double bound = 10.0 * fracdde::gamma(0.25) / fracdde::gamma(0.75);
  EXPECT_NEAR(bound, 29.5868, 1e-3);
  for (auto [t, v] : r.values) {
    EXPECT_LE(v, bound * std::pow(t, -0.25)) << "t=" << t;
  }
}

TEST(KernelDecayCheck, RequiresCoverage) {
  const auto k = sampled(0.25, 5.0, [](double) { return 1.0; });
  EXPECT_THROW((void)kernel_decay_check(0.5, 1.0, 0.0, 0.25, k, integer_grid(1, 6)), std::invalid_argument);
  const std::vector<double> off_grid{1.1};
  EXPECT_THROW((void)kernel_decay_check(0.5, 1.0, 0.0, 0.25, k, off_grid), ValidationError);
}

}  // namespace
