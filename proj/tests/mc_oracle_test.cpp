#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "tailmix/closed_form.hpp"
#include "tailmix/io.hpp"
#include "tailmix/mc_oracle.hpp"
#include "tailmix/mixture_stats.hpp"

namespace tx = tailmix;

namespace {

tx::SampleSpec spec(std::uint64_t n, std::uint64_t seed, unsigned threads = 1) {
  tx::SampleSpec s;
  s.n_samples = n;
  s.seed = seed;
  s.moment_orders = {1, 2, 3, 4};
  s.thresholds = {1.0, 2.0, 3.0};
  s.threads = threads;
  return s;
}

}  // namespace

TEST(Xoshiro, StreamsDiffer) {
  auto a = tx::Xoshiro256::for_stream(1, 0);
  auto b = tx::Xoshiro256::for_stream(1, 1);
  auto c = tx::Xoshiro256::for_stream(2, 0);
  const auto x = a();
  EXPECT_NE(x, b());
  EXPECT_NE(x, c());
  auto a2 = tx::Xoshiro256::for_stream(1, 0);
  EXPECT_EQ(x, a2());
}

TEST(Xoshiro, UniformInUnitInterval) {
  tx::Xoshiro256 rng(5);
  double sum = 0;
  for (int i = 0; i < 100000; ++i) {
    const double u = rng.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    sum += u;
  }
  EXPECT_NEAR(sum / 100000, 0.5, 0.005);
}

TEST(Sampling, SameSeedSameResult) {
  const auto m = tx::build_mixture({}, tx::ErrorSchedule::constant(0.1, 5));
  EXPECT_EQ(tx::sample(m, spec(200000, 42)), tx::sample(m, spec(200000, 42)));
  EXPECT_NE(tx::sample(m, spec(200000, 42)).power_sums, tx::sample(m, spec(200000, 43)).power_sums);
}

TEST(Sampling, ThreadCountDoesNotChangeResult) {
  const auto m = tx::build_mixture({}, tx::ErrorSchedule::constant(0.1, 5));
  const auto one = tx::sample(m, spec(300000, 9, 1));
  EXPECT_EQ(one, tx::sample(m, spec(300000, 9, 3)));
  EXPECT_EQ(one, tx::sample(m, spec(300000, 9, 8)));
  const auto sched = tx::ErrorSchedule::bleed(0.3, 0.8, 30);
  EXPECT_EQ(tx::sample_schedule({}, sched, spec(200000, 4, 1)),
            tx::sample_schedule({}, sched, spec(200000, 4, 4)));
}

TEST(Sampling, MomentsWithinStandardErrors) {
  const double mu = 0.3, sigma = 1.2;
  const auto schedule = tx::ErrorSchedule::constant(0.2, 6);
  const auto m = tx::build_mixture({mu, sigma}, schedule);
  const auto r = tx::estimate(tx::sample(m, spec(1'000'000, 42, 4)));
  for (const auto& me : r.moments)
    EXPECT_TRUE(tx::within_standard_errors(me.estimate, tx::moment_constant_a(me.order, mu, sigma, 0.2, 6)))
        << "order " << me.order << " got " << me.estimate.value << " se " << me.estimate.standard_error;
  for (const auto& ex : r.exceedances) {
    EXPECT_TRUE(ex.estimate.reliable);
    EXPECT_TRUE(tx::within_standard_errors(ex.estimate, tx::exceedance(m, ex.threshold)))
        << ex.threshold;
  }
}

TEST(Sampling, DirectScheduleSamplerAgreesWithMixtureSampler) {
  const auto schedule = tx::ErrorSchedule::bleed(0.3, 0.8, 8);
  const auto m = tx::build_mixture({}, schedule);
  const auto r = tx::estimate(tx::sample_schedule({}, schedule, spec(1'000'000, 7, 4)));
  for (const auto& me : r.moments)
    EXPECT_TRUE(tx::within_standard_errors(me.estimate, tx::mixture_raw_moment(m, me.order)))
        << me.order;
  const double kurt = tx::mixture_raw_moment(m, 4) / std::pow(tx::mixture_raw_moment(m, 2), 2);
  EXPECT_TRUE(tx::within_standard_errors(r.kurtosis, kurt));
}

TEST(Sampling, AdditiveSchedule) {
  const auto r = tx::estimate(
      tx::sample_schedule({}, tx::ErrorSchedule::geometric(0.3, 10), spec(1'000'000, 3, 4)));
  EXPECT_TRUE(tx::within_standard_errors(r.moments[1].estimate,
                                         tx::moments_additive(2, 0, 1, 0.3, 10)));
  EXPECT_TRUE(tx::within_standard_errors(r.moments[3].estimate,
                                         tx::moments_additive(4, 0, 1, 0.3, 10)));
  EXPECT_THROW(tx::sample_schedule({}, tx::ErrorSchedule::geometric(0.6, 3), spec(1000, 1)),
               tx::domain_error);
}

TEST(Sampling, BranchFrequenciesAreUniform) {
  auto s = spec(800'000, 11, 2);
  s.track_branches = true;
  const auto schedule = tx::ErrorSchedule::constant(0.1, 3);
  for (const auto& summary : {tx::sample(tx::build_mixture({}, schedule), s),
                              tx::sample_schedule({}, schedule, s)}) {
    ASSERT_EQ(summary.branch_counts.size(), 8u);
    double chi2 = 0;
    for (auto c : summary.branch_counts) chi2 += std::pow(static_cast<double>(c) - 1e5, 2) / 1e5;
    EXPECT_LT(chi2, 24.3);  // 7 degrees of freedom, p = 0.001
  }
}

TEST(Sampling, ScheduleBranchIndexFollowsRowConvention) {
  // With a = 0.9 at depth 1, branch 0 (+a) has scale 1.9, branch 1 has 0.1.
  auto s = spec(200'000, 5);
  s.track_branches = true;
  s.thresholds = {3.0};
  const auto summary = tx::sample_schedule({}, tx::ErrorSchedule::constant(0.9, 1), s);
  const double p_exceed = static_cast<double>(summary.exceed_counts[0]) / 200000;
  const double expected = 0.5 * 0.5 * std::erfc(3.0 / (std::sqrt(2.0) * 1.9));
  EXPECT_NEAR(p_exceed, expected, 5 * std::sqrt(expected / 200000));
}

TEST(Sampling, UnreliableFarTail) {
  auto s = spec(100'000, 1);
  s.thresholds = {8.0};
  const auto r = tx::estimate(tx::sample(tx::build_mixture({}, tx::ErrorSchedule::constant(0.1, 2)), s));
  EXPECT_FALSE(r.exceedances[0].estimate.reliable);
  EXPECT_FALSE(tx::resolvable_probability(1e-6, 1'000'000));
  EXPECT_TRUE(tx::resolvable_probability(1e-5, 1'000'000));
}

TEST(Sampling, SpecValidation) {
  const auto m = tx::build_mixture({}, tx::ErrorSchedule::constant(0.1, 2));
  EXPECT_THROW(tx::sample(m, spec(0, 1)), tx::domain_error);
  auto bad = spec(10, 1);
  bad.moment_orders = {9};
  EXPECT_THROW(tx::sample(m, bad), tx::unsupported_order);
  EXPECT_THROW(tx::estimate(tx::sample(m, spec(29, 1))), tx::insufficient_samples);
  auto deep = spec(10, 1);
  deep.track_branches = true;
  EXPECT_THROW(tx::sample_schedule({}, tx::ErrorSchedule::constant(0.1, 25), deep), tx::size_error);
}

TEST(Sampling, ReportRoundTripsThroughJson) {
  const auto m = tx::build_mixture({}, tx::ErrorSchedule::constant(0.1, 3));
  const auto r = tx::estimate(tx::sample(m, spec(50'000, 8)));
  const auto j = tx::to_json(r);
  EXPECT_EQ(j.at("schema_version"), 1);
  const auto back = tx::report_from_json(nlohmann::json::parse(j.dump()));
  EXPECT_EQ(back.n, r.n);
  EXPECT_EQ(back.seed, r.seed);
  ASSERT_EQ(back.moments.size(), r.moments.size());
  for (std::size_t i = 0; i < r.moments.size(); ++i) {
    EXPECT_EQ(back.moments[i].order, r.moments[i].order);
    EXPECT_EQ(back.moments[i].estimate.value, r.moments[i].estimate.value);
    EXPECT_EQ(back.moments[i].estimate.standard_error, r.moments[i].estimate.standard_error);
  }
  EXPECT_EQ(back.kurtosis.value, r.kurtosis.value);
}
