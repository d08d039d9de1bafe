#pragma once

#include <cmath>
#include <limits>

namespace tailmix::detail {

// Neumaier compensated sum.
class CompensatedSum {
 public:
  void add(double v) noexcept {
    const double t = sum_ + v;
    if (std::fabs(sum_) >= std::fabs(v))
      c_ += (sum_ - t) + v;
    else
      c_ += (v - t) + sum_;
    sum_ = t;
  }
  double value() const noexcept { return sum_ + c_; }

 private:
  double sum_ = 0.0;
  double c_ = 0.0;
};

// Streaming ln(sum exp(x_i)).
class LogSumExp {
 public:
  void add(double log_term) noexcept {
    if (log_term == -std::numeric_limits<double>::infinity()) return;
    if (log_term <= max_) {
      acc_ += std::exp(log_term - max_);
    } else {
      acc_ = acc_ * std::exp(max_ - log_term) + 1.0;
      max_ = log_term;
    }
  }
  double value() const noexcept {
    if (acc_ == 0.0) return -std::numeric_limits<double>::infinity();
    return max_ + std::log(acc_);
  }

 private:
  double max_ = -std::numeric_limits<double>::infinity();
  double acc_ = 0.0;
};

}  // namespace tailmix::detail
