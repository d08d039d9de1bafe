#pragma once

// Monte Carlo oracle for the branching mixtures.
//
// Random numbers: xoshiro256** seeded through splitmix64. Samples are cut
// into fixed chunks of `chunk_size` draws; chunk c uses its own generator
// seeded from (seed, c). Chunk statistics are reduced in chunk order, so a
// summary depends only on (seed, n_samples, source), never on how chunks
// are spread over threads. Gaussian variates come from the Box-Muller
// transform using both outputs of each pair.

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <span>
#include <thread>
#include <vector>

#include "tailmix/branching.hpp"
#include "tailmix/errors.hpp"
#include "tailmix/summation.hpp"

namespace tailmix {

inline constexpr std::uint64_t splitmix64(std::uint64_t& state) noexcept {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

class Xoshiro256 {
 public:
  using result_type = std::uint64_t;

  explicit Xoshiro256(std::uint64_t seed) noexcept {
    std::uint64_t sm = seed;
    for (auto& w : s_) w = splitmix64(sm);
  }

  // Independent stream `stream` of `seed`.
  static Xoshiro256 for_stream(std::uint64_t seed, std::uint64_t stream) noexcept {
    std::uint64_t sm = seed ^ 0x6a09e667f3bcc909ULL;
    const std::uint64_t mixed = splitmix64(sm) ^ (stream * 0xd1342543de82ef95ULL + 1);
    return Xoshiro256(mixed);
  }

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return ~result_type{0}; }

  result_type operator()() noexcept {
    const std::uint64_t result = std::rotl(s_[1] * 5, 7) * 9;
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = std::rotl(s_[3], 45);
    return result;
  }

  // Uniform on [0, 1) with 53 random bits.
  double uniform() noexcept { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

 private:
  std::array<std::uint64_t, 4> s_{};
};

class GaussianSource {
 public:
  explicit GaussianSource(Xoshiro256& rng) : rng_(rng) {}

  double operator()() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = 1.0 - rng_.uniform();  // (0, 1]
    const double u2 = rng_.uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
  }

 private:
  Xoshiro256& rng_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

inline constexpr int max_power_sum = 2 * max_moment_order;
inline constexpr std::uint64_t chunk_size = 1 << 16;

struct SampleSpec {
  std::uint64_t n_samples = 0;
  std::uint64_t seed = 0;
  std::vector<int> moment_orders;  // each in 1..8
  std::vector<double> thresholds;  // P(X > k) targets
  bool track_branches = false;     // per-branch counts, needs depth <= 24
  unsigned threads = 1;
};

// Sufficient statistics of a sample stream.
struct SampleSummary {
  std::uint64_t n = 0;
  std::uint64_t seed = 0;
  std::array<double, max_power_sum + 1> power_sums{};  // sum of x^k, k = 0..16
  std::vector<int> moment_orders;
  std::vector<double> thresholds;
  std::vector<std::uint64_t> exceed_counts;
  std::vector<std::uint64_t> branch_counts;

  void merge(const SampleSummary& other) {
    n += other.n;
    for (std::size_t k = 0; k < power_sums.size(); ++k) power_sums[k] += other.power_sums[k];
    if (exceed_counts.size() < other.exceed_counts.size())
      exceed_counts.resize(other.exceed_counts.size());
    for (std::size_t i = 0; i < other.exceed_counts.size(); ++i)
      exceed_counts[i] += other.exceed_counts[i];
    if (branch_counts.size() < other.branch_counts.size())
      branch_counts.resize(other.branch_counts.size());
    for (std::size_t i = 0; i < other.branch_counts.size(); ++i)
      branch_counts[i] += other.branch_counts[i];
  }

  friend bool operator==(const SampleSummary&, const SampleSummary&) = default;
};

namespace detail {

inline void validate_spec(const SampleSpec& spec) {
  if (spec.n_samples < 1) throw domain_error("n_samples must be >= 1");
  for (int k : spec.moment_orders)
    if (k < 1 || k > max_moment_order) throw unsupported_order("moment order outside 1..8");
  for (double t : spec.thresholds) require_finite(t, "threshold");
}

// Draw functor: (rng, gauss) -> {x, branch index}.
template <typename Draw>
SampleSummary run_chunks(const SampleSpec& spec, std::size_t branch_slots, Draw draw) {
  const std::uint64_t n_chunks = (spec.n_samples + chunk_size - 1) / chunk_size;
  std::vector<SampleSummary> chunk_stats(n_chunks);

  auto work = [&](std::uint64_t first, std::uint64_t stride) {
    for (std::uint64_t c = first; c < n_chunks; c += stride) {
      SampleSummary s;
      s.exceed_counts.assign(spec.thresholds.size(), 0);
      if (spec.track_branches) s.branch_counts.assign(branch_slots, 0);
      const std::uint64_t count = std::min(chunk_size, spec.n_samples - c * chunk_size);
      Xoshiro256 rng = Xoshiro256::for_stream(spec.seed, c);
      GaussianSource gauss(rng);
      for (std::uint64_t i = 0; i < count; ++i) {
        const auto [x, branch] = draw(rng, gauss);
        double p = 1.0;
        for (int k = 0; k <= max_power_sum; ++k) {
          s.power_sums[static_cast<std::size_t>(k)] += p;
          p *= x;
        }
        for (std::size_t t = 0; t < spec.thresholds.size(); ++t)
          if (x > spec.thresholds[t]) ++s.exceed_counts[t];
        if (spec.track_branches) ++s.branch_counts[branch];
      }
      s.n = count;
      chunk_stats[c] = std::move(s);
    }
  };

  const unsigned threads =
      static_cast<unsigned>(std::clamp<std::uint64_t>(spec.threads, 1, std::max<std::uint64_t>(n_chunks, 1)));
  if (threads == 1) {
    work(0, 1);
  } else {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(work, t, threads);
  }

  SampleSummary total;
  total.seed = spec.seed;
  total.moment_orders = spec.moment_orders;
  total.thresholds = spec.thresholds;
  total.exceed_counts.assign(spec.thresholds.size(), 0);
  if (spec.track_branches) total.branch_counts.assign(branch_slots, 0);
  std::array<CompensatedSum, max_power_sum + 1> sums;
  for (const auto& s : chunk_stats) {
    for (std::size_t k = 0; k < sums.size(); ++k) sums[k].add(s.power_sums[k]);
    SampleSummary counts_only = s;
    counts_only.power_sums = {};
    total.merge(counts_only);
  }
  for (std::size_t k = 0; k < sums.size(); ++k) total.power_sums[k] = sums[k].value();
  return total;
}

}  // namespace detail

// Sample a mixture: pick a component by weight (uniformly, i.e. N fair sign
// flips, when the weights are equal), then draw N(mu, sigma_i^2).
inline SampleSummary sample(const MixtureDistribution& m, const SampleSpec& spec) {
  detail::validate_spec(spec);
  const auto comps = m.components();
  const std::size_t count = comps.size();
  const bool equal = std::all_of(comps.begin(), comps.end(),
                                 [&](const auto& c) { return c.weight == comps.front().weight; });
  const bool power_of_two = std::has_single_bit(count);

  std::vector<double> cumulative(count);
  double acc = 0;
  for (std::size_t i = 0; i < count; ++i) cumulative[i] = acc += comps[i].weight;

  const double mu = m.mu();
  return detail::run_chunks(spec, count, [&](Xoshiro256& rng, GaussianSource& gauss) {
    std::size_t idx;
    if (equal && power_of_two) {
      idx = static_cast<std::size_t>(rng() & (count - 1));
    } else {
      const double u = rng.uniform() * acc;
      idx = static_cast<std::size_t>(std::upper_bound(cumulative.begin(), cumulative.end(), u) -
                                     cumulative.begin());
      idx = std::min(idx, count - 1);
    }
    return std::pair<double, std::size_t>{mu + comps[idx].sigma * gauss(), idx};
  });
}

// Sample the branching process directly: one fair sign per layer, any depth.
// The branch index follows the sign-matrix row convention (bit N-1-j set for
// a minus sign in layer j) and is only recorded for depth <= 24.
inline SampleSummary sample_schedule(const GaussianBase& base, const ErrorSchedule& schedule,
                                     const SampleSpec& spec) {
  detail::validate_spec(spec);
  base.validate();
  const std::size_t n = schedule.depth();
  if (spec.track_branches) check_enumerable(n);
  const std::vector<double> rates(schedule.rates().begin(), schedule.rates().end());
  const bool additive = schedule.mode() == CombinationMode::additive;
  if (additive) {
    double offsets = 0;
    for (double r : rates) offsets += r;
    if (!(offsets < 1)) throw domain_error("additive schedule admits nonpositive scales");
  }
  const std::size_t slots = spec.track_branches ? std::size_t{1} << n : 0;

  return detail::run_chunks(spec, slots, [&](Xoshiro256& rng, GaussianSource& gauss) {
    double scale = 1.0;
    std::size_t idx = 0;
    std::uint64_t bits = 0;
    for (std::size_t j = 0; j < n; ++j) {
      if (j % 64 == 0) bits = rng();
      const bool minus = (bits >> (j % 64)) & 1U;
      if (n <= max_enumeration_depth && minus) idx |= std::size_t{1} << (n - 1 - j);
      if (additive)
        scale += minus ? -rates[j] : rates[j];
      else
        scale *= minus ? 1 - rates[j] : 1 + rates[j];
    }
    return std::pair<double, std::size_t>{base.mu + base.sigma * scale * gauss(), idx};
  });
}

struct Estimate {
  double value = 0.0;
  double standard_error = 0.0;
  bool reliable = true;
};

struct MomentEstimate {
  int order;
  Estimate estimate;
};

struct ExceedanceEstimate {
  double threshold;
  Estimate estimate;
};

struct MomentsReport {
  std::uint64_t n = 0;
  std::uint64_t seed = 0;
  std::vector<MomentEstimate> moments;
  std::vector<ExceedanceEstimate> exceedances;
  Estimate kurtosis;  // E[X^4] / E[X^2]^2 about zero, delta-method SE
};

// True when a probability is large enough for n draws to resolve it.
inline bool resolvable_probability(double p, std::uint64_t n) noexcept {
  return p * static_cast<double>(n) >= 10.0;
}

inline MomentsReport estimate(const SampleSummary& s) {
  if (s.n < 30) throw insufficient_samples("estimates need at least 30 samples");
  const double n = static_cast<double>(s.n);
  auto raw = [&](int k) { return s.power_sums[static_cast<std::size_t>(k)] / n; };

  MomentsReport r;
  r.n = s.n;
  r.seed = s.seed;
  for (int k : s.moment_orders) {
    const double m = raw(k);
    const double var = std::max(0.0, raw(2 * k) - m * m);
    r.moments.push_back({k, {m, std::sqrt(var / n), true}});
  }
  for (std::size_t t = 0; t < s.thresholds.size(); ++t) {
    const std::uint64_t c = t < s.exceed_counts.size() ? s.exceed_counts[t] : 0;
    const double p = static_cast<double>(c) / n;
    r.exceedances.push_back(
        {s.thresholds[t], {p, std::sqrt(p * (1 - p) / n), resolvable_probability(p, s.n)}});
  }

  // g(m2, m4) = m4 / m2^2, gradient (-2 m4 / m2^3, 1 / m2^2)
  const double m2 = raw(2), m4 = raw(4), m6 = raw(6), m8 = raw(8);
  if (m2 > 0) {
    const double g2 = -2 * m4 / (m2 * m2 * m2);
    const double g4 = 1 / (m2 * m2);
    const double var = g2 * g2 * (m4 - m2 * m2) + 2 * g2 * g4 * (m6 - m2 * m4) +
                       g4 * g4 * (m8 - m4 * m4);
    r.kurtosis = {m4 / (m2 * m2), std::sqrt(std::max(0.0, var) / n), true};
  } else {
    r.kurtosis = {0.0, 0.0, false};
  }
  return r;
}

// |estimate - target| <= k_se standard errors.
inline bool within_standard_errors(const Estimate& e, double target, double k_se = 4.0) {
  return std::fabs(e.value - target) <= k_se * e.standard_error;
}

}  // namespace tailmix
