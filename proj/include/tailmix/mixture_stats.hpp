#pragma once

// Evaluation of Gaussian scale mixtures: density, exceedance probabilities
// (direct and log-space), the binomial closed form for a constant error
// rate, convexity ratios against the unperturbed Gaussian, raw moments and
// log-log tail series.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <span>
#include <vector>

#include "tailmix/branching.hpp"
#include "tailmix/errors.hpp"
#include "tailmix/specfn.hpp"
#include "tailmix/summation.hpp"

namespace tailmix {

// Below this, probabilities are carried as logarithms.
inline constexpr double log_space_threshold = 1e-300;

struct ExceedanceQuery {
  double k = 0.0;
  std::size_t depth = 0;
  bool compare_to_baseline = true;
};

inline double density(const MixtureDistribution& m, double x) {
  detail::CompensatedSum sum;
  for (const auto& c : m.components()) sum.add(c.weight * gaussian_pdf(m.mu(), c.sigma, x));
  return sum.value();
}

// ln P(X > k); stays finite where the probability underflows.
inline double log_exceedance(const MixtureDistribution& m, double k) {
  detail::require_finite(k, "threshold");
  detail::LogSumExp acc;
  for (const auto& c : m.components()) acc.add(c.log_weight + gaussian_log_sf(m.mu(), c.sigma, k));
  return acc.value();
}

// P(X > k) = sum_i w_i erfc((k - mu) / (sqrt2 sigma_i)) / 2
inline double exceedance(const MixtureDistribution& m, double k) {
  detail::require_finite(k, "threshold");
  detail::CompensatedSum sum;
  for (const auto& c : m.components())
    sum.add(c.weight * 0.5 * std::erfc((k - m.mu()) / (std::numbers::sqrt2 * c.sigma)));
  const double p = sum.value();
  if (p >= log_space_threshold) return p;
  return std::exp(log_exceedance(m, k));
}

namespace detail {

// ln of the Binomial(N, 1/2) weight C(N, j) 2^-N.
inline double log_half_binomial_weight(std::size_t n, std::size_t j) {
  const double nd = static_cast<double>(n);
  const double jd = static_cast<double>(j);
  return std::lgamma(nd + 1) - std::lgamma(jd + 1) - std::lgamma(nd - jd + 1) -
         nd * std::numbers::ln2;
}

inline void check_constant_rate_args(const GaussianBase& base, double a, double k) {
  base.validate();
  if (!std::isfinite(a) || a < 0 || a >= 1) throw domain_error("error rate must lie in [0, 1)");
  require_finite(k, "threshold");
}

// ln of the j-th branch scale (1+a)^j (1-a)^(N-j).
inline double log_binomial_scale(double a, std::size_t n, std::size_t j) {
  return static_cast<double>(j) * std::log1p(a) + static_cast<double>(n - j) * std::log1p(-a);
}

}  // namespace detail

// ln P(X > K | N) for a constant rate, via the N+1 term binomial sum.
inline double log_exceedance_constant_a(const GaussianBase& base, double a, std::size_t n,
                                        double k) {
  detail::check_constant_rate_args(base, a, k);
  const double offset = (k - base.mu) / (std::numbers::sqrt2 * base.sigma);
  detail::LogSumExp acc;
  for (std::size_t j = 0; j <= n; ++j) {
    const double z = offset * std::exp(-detail::log_binomial_scale(a, n, j));
    double log_tail;
    if (std::isinf(z))
      log_tail = z > 0 ? -std::numeric_limits<double>::infinity() : std::numbers::ln2;
    else
      log_tail = log_erfc(z);
    acc.add(detail::log_half_binomial_weight(n, j) - std::numbers::ln2 + log_tail);
  }
  return acc.value();
}

// P(X > K | N) = sum_j 2^(-N-1) C(N, j) erfc(K / (sqrt2 sigma (1+a)^j (1-a)^(N-j)))
inline double exceedance_constant_a(const GaussianBase& base, double a, std::size_t n, double k) {
  detail::check_constant_rate_args(base, a, k);
  if (n <= 60) {
    const double offset = (k - base.mu) / (std::numbers::sqrt2 * base.sigma);
    detail::CompensatedSum sum;
    double choose = 1.0;  // C(n, j), exact in double for n <= 60
    for (std::size_t j = 0; j <= n; ++j) {
      const double scale = std::pow(1 + a, static_cast<double>(j)) *
                           std::pow(1 - a, static_cast<double>(n - j));
      sum.add(choose * std::erfc(offset / scale));
      choose = choose * static_cast<double>(n - j) / static_cast<double>(j + 1);
    }
    const double p = std::ldexp(sum.value(), -static_cast<int>(n) - 1);
    if (p >= log_space_threshold) return p;
  }
  return std::exp(log_exceedance_constant_a(base, a, n, k));
}

// P(>K | N) / P(>K | N = 0), switching to log space when either side
// underflows.
inline double convexity_ratio(const GaussianBase& base, double a, std::size_t n, double k) {
  const double pn = exceedance_constant_a(base, a, n, k);
  const double p0 = exceedance_constant_a(base, a, 0, k);
  if (pn >= log_space_threshold && p0 >= log_space_threshold) return pn / p0;
  return std::exp(log_exceedance_constant_a(base, a, n, k) -
                  log_exceedance_constant_a(base, a, 0, k));
}

inline double mixture_raw_moment(const MixtureDistribution& m, int order) {
  if (order < 0 || order > max_moment_order)
    throw unsupported_order("moment order " + std::to_string(order) + " outside 0..8");
  detail::CompensatedSum sum;
  for (const auto& c : m.components())
    sum.add(c.weight * gaussian_raw_moment(order, m.mu(), c.sigma));
  return sum.value();
}

// E[(X - mu)^4] / Var[X]^2.
inline double mixture_kurtosis(const MixtureDistribution& m) {
  detail::CompensatedSum m2, m4;
  for (const auto& c : m.components()) {
    m2.add(c.weight * c.sigma * c.sigma);
    m4.add(c.weight * 3 * std::pow(c.sigma, 4));
  }
  return m4.value() / (m2.value() * m2.value());
}

// E|X| for a centered mixture.
inline double mixture_abs_first_moment(const MixtureDistribution& m) {
  if (m.mu() != 0.0)
    throw domain_error("absolute first moment is only provided for mu = 0");
  detail::CompensatedSum sum;
  for (const auto& c : m.components()) sum.add(c.weight * gaussian_abs_first_moment(c.sigma));
  return sum.value();
}

struct LogLogPoint {
  double x;
  double ln_x;
  double p_exceed;
  double ln_p;
};

// Geometrically spaced survival curve. ln_p is always computed in log
// space; p_exceed may underflow to 0.
inline std::vector<LogLogPoint> loglog_series(const MixtureDistribution& m, double x_min,
                                              double x_max, std::size_t points) {
  detail::require_finite(x_min, "x_min");
  detail::require_finite(x_max, "x_max");
  if (!(x_min > m.mu()) || !(x_min > 0))
    throw domain_error("log-log range must start above both mu and 0");
  if (!(x_max > x_min)) throw domain_error("log-log range is empty");
  if (points < 2) throw domain_error("log-log series needs at least 2 points");

  const double ln_lo = std::log(x_min);
  const double ln_step = (std::log(x_max) - ln_lo) / static_cast<double>(points - 1);
  std::vector<LogLogPoint> out;
  out.reserve(points);
  for (std::size_t i = 0; i < points; ++i) {
    const double ln_x = i + 1 == points ? std::log(x_max) : ln_lo + ln_step * static_cast<double>(i);
    const double x = i + 1 == points ? x_max : std::exp(ln_x);
    const double ln_p = log_exceedance(m, x);
    out.push_back({x, ln_x, std::exp(ln_p), ln_p});
  }
  return out;
}

// Least-squares slope of ln P against ln x over points [first, last).
inline double tail_slope_estimate(std::span<const LogLogPoint> series, std::size_t first,
                                  std::size_t last) {
  if (last > series.size() || first >= last || last - first < 3)
    throw domain_error("slope window needs at least 3 points inside the series");
  const double count = static_cast<double>(last - first);
  double mx = 0, my = 0;
  for (std::size_t i = first; i < last; ++i) {
    mx += series[i].ln_x;
    my += series[i].ln_p;
  }
  mx /= count;
  my /= count;
  double sxx = 0, sxy = 0;
  for (std::size_t i = first; i < last; ++i) {
    const double dx = series[i].ln_x - mx;
    sxx += dx * dx;
    sxy += dx * (series[i].ln_p - my);
  }
  if (!(sxx > 0) || !std::isfinite(sxy)) throw domain_error("degenerate slope window");
  return sxy / sxx;
}

// Per-point slope from a centered least-squares window of 2*half_width+1
// points, clipped at the series ends.
inline std::vector<double> local_slopes(std::span<const LogLogPoint> series,
                                        std::size_t half_width = 2) {
  if (series.size() < 3) throw domain_error("local slopes need at least 3 points");
  half_width = std::max<std::size_t>(half_width, 1);
  std::vector<double> out(series.size());
  for (std::size_t i = 0; i < series.size(); ++i) {
    std::size_t first = i > half_width ? i - half_width : 0;
    std::size_t last = std::min(series.size(), i + half_width + 1);
    if (last - first < 3) {
      if (first == 0)
        last = 3;
      else
        first = last - 3;
    }
    out[i] = tail_slope_estimate(series, first, last);
  }
  return out;
}

// d ln P / d ln x near x, from a 5-point least-squares fit over
// x * [1 - rel_halfwidth, 1 + rel_halfwidth].
inline double local_tail_slope(const MixtureDistribution& m, double x,
                               double rel_halfwidth = 0.02) {
  const auto s = loglog_series(m, x * (1 - rel_halfwidth), x * (1 + rel_halfwidth), 5);
  return tail_slope_estimate(s, 0, s.size());
}

}  // namespace tailmix
