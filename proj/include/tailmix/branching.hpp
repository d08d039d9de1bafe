#pragma once

// Branching structure of the nested error-rate process: error schedules,
// the sign-tuple matrix, per-branch scale multipliers and the resulting
// equal-weight Gaussian scale mixture.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "tailmix/errors.hpp"
#include "tailmix/specfn.hpp"

namespace tailmix {

// Largest depth for which all 2^N branches are materialized.
inline constexpr std::size_t max_enumeration_depth = 24;

enum class CombinationMode { multiplicative, additive };

struct GaussianBase {
  double mu = 0.0;
  double sigma = 1.0;

  void validate() const {
    if (!std::isfinite(mu)) throw domain_error("mu must be finite");
    if (!std::isfinite(sigma) || sigma <= 0) throw domain_error("sigma must be finite and > 0");
  }
};

// Error rates a(1)..a(N) plus how the per-layer perturbations combine.
class ErrorSchedule {
 public:
  enum class Kind { constant, bleed, geometric, explicit_list };

  ErrorSchedule() = default;

  // a(j) = a for every layer.
  static ErrorSchedule constant(double a, std::size_t n) {
    ErrorSchedule s(Kind::constant, CombinationMode::multiplicative, std::vector<double>(n, a));
    s.a_ = a;
    s.validate();
    return s;
  }

  // a(j) = lambda^(j-1) a1.
  static ErrorSchedule bleed(double a1, double lambda, std::size_t n) {
    if (!std::isfinite(lambda) || lambda < 0) throw domain_error("lambda must be finite and >= 0");
    std::vector<double> rates(n);
    double r = a1;
    for (auto& x : rates) {
      x = r;
      r *= lambda;
    }
    ErrorSchedule s(Kind::bleed, CombinationMode::multiplicative, std::move(rates));
    s.a_ = a1;
    s.lambda_ = lambda;
    s.validate();
    return s;
  }

  // Rates {a, a^2, ..., a^N}, combined additively unless told otherwise.
  static ErrorSchedule geometric(double a, std::size_t n,
                                 CombinationMode mode = CombinationMode::additive) {
    std::vector<double> rates(n);
    double r = a;
    for (auto& x : rates) {
      x = r;
      r *= a;
    }
    ErrorSchedule s(Kind::geometric, mode, std::move(rates));
    s.a_ = a;
    s.validate();
    return s;
  }

  static ErrorSchedule explicit_rates(std::vector<double> rates,
                                      CombinationMode mode = CombinationMode::multiplicative) {
    ErrorSchedule s(Kind::explicit_list, mode, std::move(rates));
    s.a_ = s.rates_.empty() ? 0.0 : s.rates_.front();
    s.validate();
    return s;
  }

  std::span<const double> rates() const noexcept { return rates_; }
  std::size_t depth() const noexcept { return rates_.size(); }
  CombinationMode mode() const noexcept { return mode_; }
  Kind kind() const noexcept { return kind_; }

  // Generating rate: a for constant/geometric, a1 for bleed, first rate for
  // explicit lists.
  double a() const noexcept { return a_; }
  double lambda() const noexcept { return lambda_; }

  // True when every layer has the same rate and layers multiply, i.e. the
  // branches collapse onto a binomial tree.
  bool is_constant_rate() const noexcept {
    if (mode_ != CombinationMode::multiplicative) return false;
    for (double r : rates_)
      if (r != rates_.front()) return false;
    return true;
  }

  // Same generator at a different depth. Explicit lists can only be truncated.
  ErrorSchedule with_depth(std::size_t n) const {
    switch (kind_) {
      case Kind::constant: return constant(a_, n);
      case Kind::bleed: return bleed(a_, lambda_, n);
      case Kind::geometric: return geometric(a_, n, mode_);
      case Kind::explicit_list:
        if (n > rates_.size())
          throw domain_error("explicit schedule cannot be extended beyond its " +
                             std::to_string(rates_.size()) + " rates");
        return explicit_rates({rates_.begin(), rates_.begin() + static_cast<std::ptrdiff_t>(n)},
                              mode_);
    }
    return *this;
  }

  friend bool operator==(const ErrorSchedule&, const ErrorSchedule&) = default;

 private:
  ErrorSchedule(Kind kind, CombinationMode mode, std::vector<double> rates)
      : kind_(kind), mode_(mode), rates_(std::move(rates)) {}

  void validate() const {
    for (std::size_t j = 0; j < rates_.size(); ++j) {
      const double r = rates_[j];
      if (!std::isfinite(r) || r < 0 || r >= 1)
        throw domain_error("error rate a(" + std::to_string(j + 1) + ") = " + std::to_string(r) +
                           " outside [0, 1)");
    }
    if (mode_ == CombinationMode::additive) {
      // rates must be the successive powers of the first one
      double expected = a_;
      for (std::size_t j = 0; j < rates_.size(); ++j) {
        if (std::fabs(rates_[j] - expected) > 1e-12 * std::max(expected, 1e-300))
          throw domain_error("additive schedule needs rates {a, a^2, ..., a^N}");
        expected *= a_;
      }
    }
  }

  Kind kind_ = Kind::constant;
  CombinationMode mode_ = CombinationMode::multiplicative;
  std::vector<double> rates_;
  double a_ = 0.0;
  double lambda_ = 1.0;
};

// All 2^N tuples of +-1. Row i, column j holds -1 iff bit (N-1-j) of i is
// set, so rows run lexicographically with +1 before -1:
//   ( 1, 1, 1), ( 1, 1,-1), ( 1,-1, 1), ..., (-1,-1,-1)
// Entries are computed on demand rather than stored.
class SignMatrix {
 public:
  explicit SignMatrix(std::size_t n) : n_(n) {}

  std::size_t rows() const noexcept { return std::size_t{1} << n_; }
  std::size_t cols() const noexcept { return n_; }

  int operator()(std::size_t i, std::size_t j) const noexcept {
    return ((i >> (n_ - 1 - j)) & 1U) ? -1 : 1;
  }

  std::vector<int> row(std::size_t i) const {
    std::vector<int> r(n_);
    for (std::size_t j = 0; j < n_; ++j) r[j] = (*this)(i, j);
    return r;
  }

 private:
  std::size_t n_;
};

inline void check_enumerable(std::size_t n) {
  if (n > max_enumeration_depth)
    throw size_error("depth " + std::to_string(n) +
                     " exceeds the 2^24 enumeration ceiling; use the binomial "
                     "(constant-rate) representation instead");
}

inline SignMatrix build_sign_matrix(std::size_t n) {
  check_enumerable(n);
  return SignMatrix(n);
}

// Per-branch scale multipliers with the common weight 2^-N. scales()[i]
// belongs to row i of the sign matrix.
class ScaleSet {
 public:
  ScaleSet(std::vector<double> scales, std::size_t depth)
      : scales_(std::move(scales)), depth_(depth) {}

  std::span<const double> scales() const noexcept { return scales_; }
  std::size_t depth() const noexcept { return depth_; }
  std::size_t size() const noexcept { return scales_.size(); }
  double weight() const noexcept { return std::ldexp(1.0, -static_cast<int>(depth_)); }

 private:
  std::vector<double> scales_;
  std::size_t depth_;
};

// MULTIPLICATIVE: scale_i = prod_j (1 + T[i,j] a(j))
// ADDITIVE:       scale_i = 1 + sum_j T[i,j] a(j)
// Built by doubling: each layer splits branch k into 2k (+a) and 2k+1 (-a),
// which reproduces the sign-matrix row order.
inline ScaleSet build_scale_set(const ErrorSchedule& schedule) {
  const std::size_t n = schedule.depth();
  check_enumerable(n);
  const bool additive = schedule.mode() == CombinationMode::additive;

  std::vector<double> values(std::size_t{1} << n);
  values[0] = additive ? 0.0 : 1.0;
  std::size_t width = 1;
  for (double a : schedule.rates()) {
    for (std::size_t k = width; k-- > 0;) {
      const double v = values[k];
      if (additive) {
        values[2 * k] = v + a;
        values[2 * k + 1] = v - a;
      } else {
        values[2 * k] = v * (1 + a);
        values[2 * k + 1] = v * (1 - a);
      }
    }
    width *= 2;
  }
  if (additive) {
    for (std::size_t i = 0; i < values.size(); ++i) {
      values[i] += 1.0;
      if (!(values[i] > 0)) throw nonpositive_scale_error(i, values[i]);
    }
  }
  return ScaleSet(std::move(values), n);
}

struct MixtureComponent {
  double weight;
  double log_weight;
  double sigma;
};

// Gaussian scale mixture sharing location mu. Components built from a
// ScaleSet carry the equal weight 2^-N; the binomial collapse of a constant
// rate carries C(N, j) 2^-N instead.
class MixtureDistribution {
 public:
  MixtureDistribution(GaussianBase base, std::vector<MixtureComponent> components,
                      std::size_t depth)
      : base_(base), components_(std::move(components)), depth_(depth) {}

  double mu() const noexcept { return base_.mu; }
  double sigma() const noexcept { return base_.sigma; }
  const GaussianBase& base() const noexcept { return base_; }
  std::size_t depth() const noexcept { return depth_; }
  std::span<const MixtureComponent> components() const noexcept { return components_; }

  double max_sigma() const noexcept {
    double m = 0;
    for (const auto& c : components_) m = std::max(m, c.sigma);
    return m;
  }

 private:
  GaussianBase base_;
  std::vector<MixtureComponent> components_;
  std::size_t depth_;
};

inline MixtureDistribution build_mixture(const GaussianBase& base, const ErrorSchedule& schedule) {
  base.validate();
  const ScaleSet set = build_scale_set(schedule);
  const double w = set.weight();
  const double log_w = -static_cast<double>(set.depth()) * std::numbers::ln2;
  std::vector<MixtureComponent> components;
  components.reserve(set.size());
  for (double s : set.scales()) components.push_back({w, log_w, base.sigma * s});
  return MixtureDistribution(base, std::move(components), set.depth());
}

// N+1 components sigma (1+a)^j (1-a)^(N-j) with weights C(N, j) 2^-N.
inline MixtureDistribution build_binomial_mixture(const GaussianBase& base, double a,
                                                  std::size_t n) {
  base.validate();
  if (!std::isfinite(a) || a < 0 || a >= 1) throw domain_error("error rate must lie in [0, 1)");
  const double nd = static_cast<double>(n);
  const double log_up = std::log1p(a);
  const double log_down = std::log1p(-a);
  std::vector<MixtureComponent> components;
  components.reserve(n + 1);
  for (std::size_t j = 0; j <= n; ++j) {
    const double jd = static_cast<double>(j);
    const double log_w = std::lgamma(nd + 1) - std::lgamma(jd + 1) - std::lgamma(nd - jd + 1) -
                         nd * std::numbers::ln2;
    const double sigma = base.sigma * std::exp(jd * log_up + (nd - jd) * log_down);
    if (!(sigma > 0) || !std::isfinite(sigma))
      throw domain_error("component scale out of floating-point range at depth " +
                         std::to_string(n));
    components.push_back({std::exp(log_w), log_w, sigma});
  }
  return MixtureDistribution(base, std::move(components), n);
}

// Full enumeration, except constant-rate schedules which use the N+1 term
// binomial form and so are not bound by the enumeration ceiling.
inline MixtureDistribution build_compact_mixture(const GaussianBase& base,
                                                 const ErrorSchedule& schedule) {
  if (schedule.is_constant_rate() && schedule.depth() > 0)
    return build_binomial_mixture(base, schedule.rates().front(), schedule.depth());
  return build_mixture(base, schedule);
}

struct ScalePair {
  double low;
  double high;
};

// Two-state mixture in sigma that keeps sigma^2 in expectation:
// low = sigma (1 - v), high = sigma sqrt(1 + 2v - v^2).
inline ScalePair variance_preserving_pair(double sigma, double v) {
  if (!std::isfinite(sigma) || sigma <= 0) throw domain_error("sigma must be finite and > 0");
  if (!std::isfinite(v) || v < 0 || v >= 1) throw domain_error("v must lie in [0, 1)");
  return {sigma * (1 - v), sigma * std::sqrt(-v * v + 2 * v + 1)};
}

}  // namespace tailmix
