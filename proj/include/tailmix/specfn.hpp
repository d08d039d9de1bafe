#pragma once

// Special functions shared by the mixture code: erfc (plus a log-space
// variant that keeps working after erfc underflows), Gaussian raw and
// absolute moments, and the q-Pochhammer symbol.

#include <array>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <limits>
#include <numbers>
#include <string>

#include "tailmix/errors.hpp"

namespace tailmix {

// Recursion depth: a nonnegative count, or the symbolic infinite depth used
// for N -> infinity limits.
class Depth {
 public:
  constexpr Depth(std::size_t n) noexcept : n_(n), infinite_(false) {}  // NOLINT(implicit)

  static constexpr Depth infinity() noexcept {
    Depth d{0};
    d.infinite_ = true;
    return d;
  }

  constexpr bool is_infinite() const noexcept { return infinite_; }

  constexpr std::size_t value() const {
    if (infinite_) throw domain_error("infinite depth has no finite value");
    return n_;
  }

  friend constexpr bool operator==(Depth, Depth) = default;

 private:
  std::size_t n_;
  bool infinite_;
};

inline constexpr Depth infinite_depth = Depth::infinity();

inline constexpr int max_moment_order = 8;

namespace detail {

template <std::floating_point Real>
void require_finite(Real v, const char* what) {
  if (!std::isfinite(v)) throw domain_error(std::string(what) + " must be finite");
}

// (k-1)!! for even k, 0 for odd k; E[Z^k] for a standard normal Z.
constexpr double standard_normal_moment(int k) noexcept {
  if (k % 2 != 0) return 0.0;
  double r = 1.0;
  for (int i = k - 1; i > 1; i -= 2) r *= i;
  return r;
}

constexpr double binomial(int n, int k) noexcept {
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

template <std::floating_point Real>
constexpr Real ipow(Real x, int k) noexcept {
  Real r{1};
  for (int i = 0; i < k; ++i) r *= x;
  return r;
}

// Continued fraction
//   erfc(z) = exp(-z^2)/sqrt(pi) * 1/(z + (1/2)/(z + 1/(z + (3/2)/(z + ...))))
// evaluated with modified Lentz. Returns the 1/(z + ...) factor. Intended for
// z >= 4 where it converges in a few dozen terms.
template <std::floating_point Real>
Real erfc_continued_fraction(Real z) {
  constexpr Real tiny = std::numeric_limits<Real>::min() * 16;
  constexpr Real eps = std::numeric_limits<Real>::epsilon();
  Real f = z;
  Real c = z;
  Real d = 0;
  for (int n = 1; n < 500; ++n) {
    const Real an = static_cast<Real>(n) / 2;
    d = z + an * d;
    if (std::fabs(d) < tiny) d = tiny;
    d = 1 / d;
    c = z + an / c;
    if (std::fabs(c) < tiny) c = tiny;
    const Real delta = c * d;
    f *= delta;
    if (std::fabs(delta - 1) < eps) break;
  }
  return 1 / f;
}

}  // namespace detail

// Complementary error function. Backed by the C library erfc, which is
// accurate to a few ulp on the whole real line.
template <std::floating_point Real>
Real erfc(Real z) {
  detail::require_finite(z, "erfc argument");
  return std::erfc(z);
}

template <std::floating_point Real>
Real erf(Real z) {
  detail::require_finite(z, "erf argument");
  return std::erf(z);
}

// ln erfc(z), finite for every finite z (erfc itself underflows near z = 26.5).
template <std::floating_point Real>
Real log_erfc(Real z) {
  detail::require_finite(z, "erfc argument");
  if (z < Real{10}) return std::log(std::erfc(z));
  return -z * z - std::log(std::numbers::pi_v<Real>) / 2 +
         std::log(detail::erfc_continued_fraction(z));
}

// Standard normal density.
template <std::floating_point Real>
Real gaussian_pdf(Real mu, Real sigma, Real x) noexcept {
  const Real t = (x - mu) / sigma;
  return std::exp(-t * t / 2) / (sigma * std::sqrt(2 * std::numbers::pi_v<Real>));
}

// ln P(X > k) for X ~ N(mu, sigma^2).
template <std::floating_point Real>
Real gaussian_log_sf(Real mu, Real sigma, Real k) {
  return log_erfc((k - mu) / (sigma * std::numbers::sqrt2_v<Real>)) -
         std::numbers::ln2_v<Real>;
}

// Exact E[X^order] for X ~ N(mu, sigma^2), order 0..8.
template <std::floating_point Real>
Real gaussian_raw_moment(int order, Real mu, Real sigma) {
  if (order < 0 || order > max_moment_order)
    throw unsupported_order("moment order " + std::to_string(order) + " outside 0..8");
  detail::require_finite(mu, "mu");
  detail::require_finite(sigma, "sigma");
  if (sigma < 0) throw domain_error("sigma must be nonnegative");

  // sum over even j of C(k, j) mu^(k-j) sigma^j (j-1)!!
  Real sum{0};
  for (int j = 0; j <= order; j += 2) {
    sum += static_cast<Real>(detail::binomial(order, j)) * detail::ipow(mu, order - j) *
           detail::ipow(sigma, j) * static_cast<Real>(detail::standard_normal_moment(j));
  }
  return sum;
}

// E|X| for X ~ N(0, sigma^2).
template <std::floating_point Real>
Real gaussian_abs_first_moment(Real sigma) {
  detail::require_finite(sigma, "sigma");
  if (sigma < 0) throw domain_error("sigma must be nonnegative");
  return std::sqrt(2 / std::numbers::pi_v<Real>) * sigma;
}

// (a; q)_n = prod_{i=0}^{n-1} (1 - a q^i). For infinite n the product runs
// until a factor differs from 1 by less than 1e-15.
template <std::floating_point Real>
Real q_pochhammer(Real a, Real q, Depth n) {
  detail::require_finite(a, "a");
  detail::require_finite(q, "q");
  Real product{1};
  Real qi{1};
  if (!n.is_infinite()) {
    for (std::size_t i = 0; i < n.value(); ++i) {
      product *= 1 - a * qi;
      qi *= q;
    }
    return product;
  }
  if (std::fabs(q) >= 1) throw divergence_error("infinite q-Pochhammer product needs |q| < 1");
  for (;;) {
    const Real increment = a * qi;
    product *= 1 - increment;
    if (std::fabs(increment) < Real{1e-15}) break;
    qi *= q;
  }
  return product;
}

}  // namespace tailmix
