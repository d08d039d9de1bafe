#pragma once

#include <stdexcept>
#include <string>

namespace tailmix {

// Argument outside the mathematical domain of an operation.
class domain_error : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Moment order outside the supported range.
class unsupported_order : public domain_error {
 public:
  using domain_error::domain_error;
};

// Branch enumeration above the 2^24 ceiling.
class size_error : public domain_error {
 public:
  using domain_error::domain_error;
};

// Infinite product requested with |q| >= 1.
class divergence_error : public domain_error {
 public:
  using domain_error::domain_error;
};

// Additive scale set produced a branch with scale <= 0.
class nonpositive_scale_error : public domain_error {
 public:
  nonpositive_scale_error(std::size_t branch, double scale)
      : domain_error("branch " + std::to_string(branch) + " has nonpositive scale " +
                     std::to_string(scale)),
        branch_(branch) {}

  std::size_t branch() const noexcept { return branch_; }

 private:
  std::size_t branch_;
};

// Too few samples to form an estimate.
class insufficient_samples : public domain_error {
 public:
  using domain_error::domain_error;
};

// Malformed schedule string or CLI value.
class parse_error : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace tailmix
