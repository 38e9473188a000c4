#pragma once

#include <stdexcept>
#include <string>

namespace erkm {

/// Vector lengths disagree with the grid or with each other.
class dimension_error : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Argument outside the mathematical domain (h <= 0, zero tableau coefficient).
class domain_error : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// A scheme needs a pointwise derivative the problem does not provide.
class capability_error : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Caller misuse: bad configuration, non-divisible coarsening, empty input.
class usage_error : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Non-finite state encountered while integrating.
class divergence_error : public std::runtime_error {
 public:
  divergence_error(const std::string& scheme, std::size_t step, std::size_t mode)
      : std::runtime_error("scheme '" + scheme + "' diverged at step " +
                           std::to_string(step) + ", mode " + std::to_string(mode)),
        scheme_(scheme),
        step_(step),
        mode_(mode) {}

  const std::string& scheme() const noexcept { return scheme_; }
  std::size_t step() const noexcept { return step_; }
  std::size_t mode() const noexcept { return mode_; }

 private:
  std::string scheme_;
  std::size_t step_;
  std::size_t mode_;
};

}  // namespace erkm
