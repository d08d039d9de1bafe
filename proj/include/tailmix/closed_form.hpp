#pragma once

// Closed-form moments for the three error regimes:
//   constant rate        E[s^k] = ((1+a)^k + (1-a)^k)/2 per layer, raised to N
//   bleed a(n) = lambda^(n-1) a1, finite products and their q-Pochhammer limits
//   additive             s = 1 + sum_j t_j a^j with independent signs t_j
//
// For X | s ~ N(mu, (sigma s)^2) every raw moment is
//   E[X^k] = sum_{even j <= k} C(k, j) mu^(k-j) (j-1)!! sigma^j E[s^j].
//
// Bleed limits are evaluated by iterating the infinite products directly.

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <span>
#include <string>

#include "tailmix/branching.hpp"
#include "tailmix/errors.hpp"
#include "tailmix/specfn.hpp"

namespace tailmix {

namespace detail {

inline void check_rate(double a, const char* what = "error rate") {
  if (!std::isfinite(a) || a < 0 || a >= 1)
    throw domain_error(std::string(what) + " must lie in [0, 1)");
}

inline void check_sigma(double sigma) {
  if (!std::isfinite(sigma) || sigma <= 0) throw domain_error("sigma must be finite and > 0");
}

inline void check_closed_form_order(int order) {
  if (order < 1 || order > max_moment_order)
    throw unsupported_order("moment order " + std::to_string(order) + " outside 1..8");
}

// E[(1 + t a)^k] for a fair sign t and even k in {2, 4, 6, 8}.
inline double layer_even_moment(double a, int k) {
  const double a2 = a * a;
  switch (k) {
    case 0: return 1.0;
    case 2: return a2 + 1;
    case 4: return (a2 + 6) * a2 + 1;
    case 6: return (a2 + 1) * ((a2 + 14) * a2 + 1);
    case 8: return (((a2 + 28) * a2 + 70) * a2 + 28) * a2 + 1;
    default: break;
  }
  throw unsupported_order("layer moment order must be even and <= 8");
}

// Assemble E[X^k] from scale moments E[s^j], j = 0, 2, ..., k.
inline double assemble_raw_moment(int order, double mu, double sigma,
                                  const std::array<double, 5>& scale_even_moments) {
  double sum = 0;
  for (int j = 0; j <= order; j += 2) {
    sum += binomial(order, j) * ipow(mu, order - j) * ipow(sigma, j) *
           standard_normal_moment(j) * scale_even_moments[static_cast<std::size_t>(j / 2)];
  }
  return sum;
}

}  // namespace detail

// Raw moment of order 1..8 of the constant-rate mixture (general mu).
// mu = 0 rows:  2: (a^2+1)^N s^2          4: 3 (a^4+6a^2+1)^N s^4
//               6: 15 (a^6+15a^4+15a^2+1)^N s^6
//               8: 105 (a^8+28a^6+70a^4+28a^2+1)^N s^8
inline double moment_constant_a(int order, double mu, double sigma, double a, std::size_t n) {
  detail::check_closed_form_order(order);
  detail::check_rate(a);
  detail::check_sigma(sigma);
  detail::require_finite(mu, "mu");
  std::array<double, 5> es{};
  for (int j = 0; j <= 8; j += 2)
    es[static_cast<std::size_t>(j / 2)] =
        std::pow(detail::layer_even_moment(a, j), static_cast<double>(n));
  return detail::assemble_raw_moment(order, mu, sigma, es);
}

// Raw moment for an arbitrary multiplicative schedule:
// E[s^k] = prod_j ((1 + a(j))^k + (1 - a(j))^k) / 2.
inline double moment_product_form(int order, const GaussianBase& base,
                                  const ErrorSchedule& schedule) {
  detail::check_closed_form_order(order);
  base.validate();
  if (schedule.mode() != CombinationMode::multiplicative)
    throw domain_error("product-form moments need a multiplicative schedule");
  std::array<double, 5> es{1, 1, 1, 1, 1};
  for (double a : schedule.rates())
    for (int j = 2; j <= 8; j += 2)
      es[static_cast<std::size_t>(j / 2)] *= detail::layer_even_moment(a, j);
  return detail::assemble_raw_moment(order, base.mu, base.sigma, es);
}

// (1 + a^2)^N, evaluated as exp(N log1p(a^2)) so that huge N stays finite
// until the true value overflows.
inline double variance_growth_factor(double a, std::uint64_t n) {
  detail::check_rate(a);
  return std::exp(static_cast<double>(n) * std::log1p(a * a));
}

// Kurtosis of the centered constant-rate mixture: 3 ((a^4+6a^2+1)/(a^2+1)^2)^N.
inline double kurtosis_constant_a(double a, std::size_t n) {
  detail::check_rate(a);
  const double ratio = detail::layer_even_moment(a, 4) / std::pow(detail::layer_even_moment(a, 2), 2);
  return 3 * std::pow(ratio, static_cast<double>(n));
}

struct BleedParams {
  double a1 = 0.0;
  double lambda = 1.0;
  Depth depth = 0;
  double sigma = 1.0;

  void validate() const {
    detail::check_rate(a1, "a1");
    detail::check_sigma(sigma);
    if (!std::isfinite(lambda) || lambda < 0 || lambda > 1)
      throw domain_error("lambda must lie in [0, 1]");
    if (depth.is_infinite() && lambda >= 1)
      throw divergence_error("bleed limit needs lambda < 1");
  }
};

// Second moment (mu = 0) of the bleed schedule:
//   sigma^2 prod_{i=0}^{N-1} (1 + a1^2 lambda^(2i)) = sigma^2 (-a1^2; lambda^2)_N
inline double m2_bleed(const BleedParams& p) {
  p.validate();
  const double s2 = p.sigma * p.sigma;
  const double a2 = p.a1 * p.a1;
  if (p.depth.is_infinite()) return s2 * q_pochhammer(-a2, p.lambda * p.lambda, infinite_depth);
  if (p.lambda == 1.0) return s2 * std::pow(1 + a2, static_cast<double>(p.depth.value()));
  double product = 1;
  double l2i = 1;  // lambda^(2i)
  for (std::size_t i = 0; i < p.depth.value(); ++i) {
    product *= 1 + a2 * l2i;
    l2i *= p.lambda * p.lambda;
  }
  return s2 * product;
}

// Fourth moment (mu = 0) of the bleed schedule:
//   3 sigma^4 prod_{i=0}^{N-1} (1 + 6 a1^2 lambda^(2i) + a1^4 lambda^(4i))
// The limit uses the factorization
//   3 sigma^4 ((2 sqrt2 - 3) a1^2; lambda^2)_inf (-(3 + 2 sqrt2) a1^2; lambda^2)_inf
inline double m4_bleed(const BleedParams& p) {
  p.validate();
  const double s4 = std::pow(p.sigma, 4);
  const double a2 = p.a1 * p.a1;
  const double q = p.lambda * p.lambda;
  if (p.depth.is_infinite()) {
    constexpr double r = 2 * std::numbers::sqrt2;
    return 3 * s4 * q_pochhammer((r - 3) * a2, q, infinite_depth) *
           q_pochhammer(-(3 + r) * a2, q, infinite_depth);
  }
  if (p.lambda == 1.0)
    return 3 * s4 * std::pow(detail::layer_even_moment(p.a1, 4), static_cast<double>(p.depth.value()));
  double product = 1;
  double l2i = 1;
  for (std::size_t i = 0; i < p.depth.value(); ++i) {
    product *= 1 + 6 * a2 * l2i + a2 * a2 * l2i * l2i;
    l2i *= q;
  }
  return 3 * s4 * product;
}

// Exact moments of the additive mixture, scale s = 1 + S with
// S = sum_{j=1}^N t_j a^j and fair independent signs t_j. With
// v2 = sum a^(2j) and v4 = sum a^(4j):
//   E[S^2] = v2,  E[S^3] = 0,  E[S^4] = 3 v2^2 - 2 v4
//   M1 = mu
//   M2 = mu^2 + sigma^2 (1 + v2)
//   M4 = mu^4 + 6 mu^2 sigma^2 (1 + v2) + 3 sigma^4 (1 + 6 v2 + 3 v2^2 - 2 v4)
// For N -> inf, v2 = a^2/(1-a^2) and v4 = a^4/(1-a^4).
inline double moments_additive(int order, double mu, double sigma, double a, Depth n) {
  if (order != 1 && order != 2 && order != 4)
    throw unsupported_order("additive closed forms cover orders 1, 2 and 4");
  detail::check_rate(a);
  detail::check_sigma(sigma);
  detail::require_finite(mu, "mu");

  double offset_sum, v2, v4;  // offset_sum = sum a^j, the largest downward offset
  if (n.is_infinite()) {
    offset_sum = a / (1 - a);
    v2 = a * a / (1 - a * a);
    v4 = std::pow(a, 4) / (1 - std::pow(a, 4));
  } else {
    offset_sum = v2 = v4 = 0;
    double aj = 1;
    for (std::size_t j = 0; j < n.value(); ++j) {
      aj *= a;
      offset_sum += aj;
      v2 += aj * aj;
      v4 += aj * aj * aj * aj;
    }
  }
  if (!(offset_sum < 1))
    throw domain_error("additive offsets sum to " + std::to_string(offset_sum) +
                       "; the all-minus branch would have a nonpositive scale");

  const double s2 = sigma * sigma;
  switch (order) {
    case 1: return mu;
    case 2: return mu * mu + s2 * (1 + v2);
    default:
      return std::pow(mu, 4) + 6 * mu * mu * s2 * (1 + v2) +
             3 * s2 * s2 * (1 + 6 * v2 + 3 * v2 * v2 - 2 * v4);
  }
}

}  // namespace tailmix
