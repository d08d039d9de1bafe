#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <vector>

#include "oracles.hpp"
#include "reference_values.hpp"
#include "tailmix/closed_form.hpp"
#include "tailmix/mixture_stats.hpp"

namespace tx = tailmix;
namespace ref = tailmix::testing;

namespace {

double rel(double got, double want) { return std::fabs(got - want) / std::fabs(want); }

tx::MixtureDistribution constant_mixture(double a, std::size_t n, double mu = 0, double sigma = 1) {
  return tx::build_mixture({mu, sigma}, tx::ErrorSchedule::constant(a, n));
}

}  // namespace

TEST(Exceedance, DepthZeroIsGaussianTail) {
  const auto m = constant_mixture(0.1, 0);
  EXPECT_LT(rel(tx::exceedance(m, 4.0), 3.1671241833119921e-5), 1e-13);
  EXPECT_DOUBLE_EQ(tx::exceedance(m, 0.0), 0.5);
  EXPECT_LT(rel(tx::exceedance(m, 10.0), ref::p_gauss_k10), 1e-13);
}

TEST(Exceedance, MatchesBruteForceForRandomSchedules) {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> rate(0.0, 0.5), kdist(0.5, 8.0), mudist(-1, 1),
      sdist(0.5, 2.0);
  for (int trial = 0; trial < 12; ++trial) {
    std::vector<double> rates(1 + trial % 6);
    for (auto& r : rates) r = rate(rng);
    const double mu = mudist(rng), sigma = sdist(rng), k = kdist(rng);
    const auto m = tx::build_mixture({mu, sigma}, tx::ErrorSchedule::explicit_rates(rates));
    const double want = static_cast<double>(
        ref::brute_force_exceedance(mu, sigma, ref::brute_force_scales(rates, false), k));
    EXPECT_LT(rel(tx::exceedance(m, k), want), 1e-11) << trial;
  }
}

TEST(Exceedance, ConstantRateClosedFormAgreesWithEnumeration) {
  for (double a : {0.01, 0.1, 0.4})
    for (std::size_t n : {0u, 1u, 3u, 8u, 14u})
      for (double k : {0.5, 3.0, 5.0, 10.0}) {
        const double enumerated = tx::exceedance(constant_mixture(a, n), k);
        const double binomial = tx::exceedance_constant_a({}, a, n, k);
        EXPECT_LT(rel(binomial, enumerated), 1e-12) << a << " " << n << " " << k;
      }
}

TEST(Exceedance, MonotoneInThreshold) {
  const auto m = tx::build_mixture({0.3, 1.2}, tx::ErrorSchedule::bleed(0.3, 0.8, 8));
  double prev = 1.0;
  for (double k = -6; k <= 30; k += 0.25) {
    const double p = tx::exceedance(m, k);
    EXPECT_LE(p, prev) << k;
    EXPECT_GE(p, 0.0);
    prev = p;
  }
}

TEST(Exceedance, LogSpaceFallbackStaysPositive) {
  const auto m = constant_mixture(0.1, 5);
  const double p = tx::exceedance(m, 40.0);
  EXPECT_GT(p, 0.0);
  const double lp = tx::log_exceedance(m, 80.0);
  EXPECT_TRUE(std::isfinite(lp));
  EXPECT_LT(lp, std::log(std::numeric_limits<double>::min()));
}

TEST(Exceedance, LogAndDirectAgree) {
  const auto m = tx::build_mixture({}, tx::ErrorSchedule::bleed(0.2, 0.9, 10));
  for (double k = -2; k < 25; k += 0.5)
    EXPECT_NEAR(tx::log_exceedance(m, k), std::log(tx::exceedance(m, k)), 1e-11 * (1 + std::fabs(k * k)));
}

TEST(Exceedance, NonFiniteThreshold) {
  const auto m = constant_mixture(0.1, 2);
  EXPECT_THROW(tx::exceedance(m, std::numeric_limits<double>::quiet_NaN()), tx::domain_error);
  EXPECT_THROW(tx::exceedance_constant_a({}, 0.1, 2, std::numeric_limits<double>::infinity()),
               tx::domain_error);
}

TEST(ConvexityRatio, ReferenceTable) {
  for (const auto& row : ref::convexity_ratios)
    for (std::size_t i = 0; i < 3; ++i)
      EXPECT_LT(rel(tx::convexity_ratio({}, row.a, row.n, ref::ratio_thresholds[i]), row.ratio[i]),
                1e-9)
          << "a=" << row.a << " N=" << row.n << " K=" << ref::ratio_thresholds[i];
}

TEST(ConvexityRatio, ZeroRateOrDepthIsOne) {
  for (double k : {1.0, 5.0, 20.0}) {
    EXPECT_NEAR(tx::convexity_ratio({}, 0.0, 10, k), 1.0, 1e-12);
    EXPECT_EQ(tx::convexity_ratio({}, 0.3, 0, k), 1.0);
  }
}

TEST(ConvexityRatio, GrowsWithDepthAndThreshold) {
  for (double a : {0.01, 0.1}) {
    for (double k : {3.0, 5.0, 10.0}) {
      double prev = 1.0;
      for (std::size_t n = 1; n <= 40; ++n) {
        const double r = tx::convexity_ratio({}, a, n, k);
        EXPECT_GT(r, prev) << a << " " << k << " " << n;
        prev = r;
      }
    }
    for (std::size_t n : {5u, 25u}) {
      EXPECT_LT(tx::convexity_ratio({}, a, n, 3.0), tx::convexity_ratio({}, a, n, 5.0));
      EXPECT_LT(tx::convexity_ratio({}, a, n, 5.0), tx::convexity_ratio({}, a, n, 10.0));
    }
  }
}

TEST(ConvexityRatio, TwoStateConfiguration) {
  EXPECT_LT(rel(tx::convexity_ratio({0.0, 1.5}, 0.2, 1, 6.0), ref::two_state_ratio_k6), 1e-10);
  const auto m = tx::build_mixture({0.0, 1.5}, tx::ErrorSchedule::constant(0.2, 1));
  const double direct = tx::exceedance(m, 6.0) / (0.5 * std::erfc(6.0 / (1.5 * std::numbers::sqrt2)));
  EXPECT_LT(rel(direct, ref::two_state_ratio_k6), 1e-10);
}

TEST(ConvexityRatio, UnderflowingProbabilitiesUseLogs) {
  const double r = tx::convexity_ratio({}, 0.1, 5, 40.0);
  EXPECT_LT(rel(r, ref::ratio_a01_n5_k40), 1e-9);
}

TEST(ConstantRate, LargeDepthLogProbabilities) {
  EXPECT_LT(rel(tx::log_exceedance_constant_a({}, 0.01, 10000, 10.0), ref::ln_p_a001_n10000_k10), 1e-10);
  EXPECT_LT(rel(tx::log_exceedance_constant_a({}, 0.1, 10000, 10.0), ref::ln_p_a01_n10000_k10), 1e-10);
  EXPECT_LT(rel(tx::log_exceedance_constant_a({}, 0.1, 100, 10.0), ref::ln_p_a01_n100_k10), 1e-10);
  EXPECT_LT(rel(std::log(tx::exceedance_constant_a({}, 0.1, 100, 10.0)), ref::ln_p_a01_n100_k10), 1e-10);
}

TEST(ConstantRate, CompactMixtureMatchesClosedForm) {
  const auto m = tx::build_compact_mixture({}, tx::ErrorSchedule::constant(0.1, 200));
  EXPECT_EQ(m.components().size(), 201u);
  EXPECT_LT(rel(tx::exceedance(m, 10.0), tx::exceedance_constant_a({}, 0.1, 200, 10.0)), 1e-11);
}

TEST(Density, IntegratesToOne) {
  const auto m = tx::build_mixture({0.5, 1.3}, tx::ErrorSchedule::bleed(0.3, 0.7, 6));
  const long double total = ref::integrate(
      [&](long double x) { return static_cast<long double>(tx::density(m, static_cast<double>(x))); },
      -30.0L, 31.0L, 2000);
  EXPECT_NEAR(static_cast<double>(total), 1.0, 1e-12);
}

TEST(Density, SymmetricAboutMean) {
  const auto m = tx::build_mixture({0.7, 1.0}, tx::ErrorSchedule::constant(0.2, 4));
  for (double d = 0; d < 8; d += 0.37) EXPECT_NEAR(tx::density(m, 0.7 + d), tx::density(m, 0.7 - d), 1e-16);
}

TEST(Density, ExceedanceIsIntegralOfDensity) {
  const auto m = constant_mixture(0.3, 5);
  for (double k : {0.0, 1.0, 4.0}) {
    const long double tail = ref::integrate(
        [&](long double x) { return static_cast<long double>(tx::density(m, static_cast<double>(x))); },
        static_cast<long double>(k), 60.0L, 3000);
    EXPECT_LT(rel(tx::exceedance(m, k), static_cast<double>(tail)), 1e-11) << k;
  }
}

TEST(MixtureMoments, MatchClosedFormAllOrders) {
  for (double a : {0.05, 0.3, 0.8})
    for (std::size_t n : {0u, 1u, 4u, 10u})
      for (int k = 0; k <= 8; ++k) {
        const double mu = 0.4, sigma = 1.7;
        const double enumerated = tx::mixture_raw_moment(constant_mixture(a, n, mu, sigma), k);
        const double closed = tx::moment_constant_a(k == 0 ? 1 : k, mu, sigma, a, n);
        if (k == 0)
          EXPECT_EQ(enumerated, 1.0);
        else
          EXPECT_LT(rel(enumerated, closed), 1e-12) << a << " " << n << " " << k;
      }
}

TEST(MixtureMoments, KurtosisAndAbsMoment) {
  const auto m = constant_mixture(0.1, 10, 0, 2);
  EXPECT_LT(rel(tx::mixture_kurtosis(m), tx::kurtosis_constant_a(0.1, 10)), 1e-12);
  EXPECT_GE(tx::mixture_kurtosis(m), 3.0);
  EXPECT_EQ(tx::mixture_kurtosis(constant_mixture(0.1, 0)), 3.0);

  // E|X| is unaffected by a mean-one scale perturbation
  EXPECT_LT(rel(tx::mixture_abs_first_moment(m), 2 * std::sqrt(2 / std::numbers::pi)), 1e-13);
  EXPECT_THROW(tx::mixture_abs_first_moment(constant_mixture(0.1, 2, 1.0)), tx::domain_error);
  EXPECT_THROW(tx::mixture_raw_moment(m, 9), tx::unsupported_order);
}

TEST(LogLog, GridAndValues) {
  const auto m = constant_mixture(0.1, 5);
  const auto s = tx::loglog_series(m, 1.0, 50.0, 40);
  ASSERT_EQ(s.size(), 40u);
  EXPECT_EQ(s.front().x, 1.0);
  EXPECT_EQ(s.back().x, 50.0);
  for (std::size_t i = 1; i < s.size(); ++i) {
    EXPECT_GT(s[i].x, s[i - 1].x);
    EXPECT_LT(s[i].ln_p, s[i - 1].ln_p);
    EXPECT_NEAR(s[i].ln_x, std::log(s[i].x), 1e-14);
  }
  EXPECT_TRUE(std::isfinite(s.back().ln_p));
}

TEST(LogLog, DomainErrors) {
  const auto m = constant_mixture(0.1, 2, 2.0);
  EXPECT_THROW(tx::loglog_series(m, 1.0, 5.0, 10), tx::domain_error);
  EXPECT_THROW(tx::loglog_series(constant_mixture(0.1, 2), 0.0, 5.0, 10), tx::domain_error);
  EXPECT_THROW(tx::loglog_series(constant_mixture(0.1, 2), 1.0, 5.0, 1), tx::domain_error);
}

TEST(LogLog, GaussianSlopeMatchesHazard) {
  // d ln P / d ln x = -x f(x) / P(x)
  const auto m = constant_mixture(0.1, 0);
  for (double x : {4.0, 5.0, 6.0}) {
    const double exact = -x * tx::density(m, x) / tx::exceedance(m, x);
    EXPECT_NEAR(tx::local_tail_slope(m, x, 0.001), exact, 1e-4 * std::fabs(exact));
  }
}

TEST(LogLog, TailFlattensWithDepth) {
  double prev = -std::numeric_limits<double>::infinity();
  for (std::size_t n : {0u, 5u, 10u, 25u, 50u}) {
    const auto m = tx::build_compact_mixture({}, tx::ErrorSchedule::constant(0.1, n));
    const double slope = tx::local_tail_slope(m, 6.0);
    EXPECT_GT(slope, prev) << n;
    prev = slope;
  }
}

TEST(LogLog, LocalSlopesLength) {
  const auto s = tx::loglog_series(constant_mixture(0.1, 5), 1.0, 20.0, 12);
  const auto slopes = tx::local_slopes(s);
  ASSERT_EQ(slopes.size(), s.size());
  for (double v : slopes) EXPECT_LT(v, 0.0);
  EXPECT_THROW(tx::tail_slope_estimate(s, 0, 2), tx::domain_error);
}
