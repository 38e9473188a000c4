#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "erkm/errors.hpp"

namespace erkm {

struct spectral_tag {};
struct physical_tag {};

/// Fixed-length real vector tagged with its representation. Spectral and
/// physical fields share storage layout but never mix implicitly.
template <class Tag>
class Field {
 public:
  Field() = default;
  explicit Field(std::size_t n, double value = 0.0) : data_(n, value) {}
  explicit Field(std::vector<double> data) : data_(std::move(data)) {}

  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  std::span<double> span() noexcept { return data_; }
  std::span<const double> span() const noexcept { return data_; }
  const std::vector<double>& vector() const noexcept { return data_; }

  auto begin() noexcept { return data_.begin(); }
  auto end() noexcept { return data_.end(); }
  auto begin() const noexcept { return data_.begin(); }
  auto end() const noexcept { return data_.end(); }

  bool all_finite() const noexcept {
    return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
  }

  Field& operator+=(const Field& rhs) {
    check_same(rhs);
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += rhs.data_[i];
    return *this;
  }
  Field& operator-=(const Field& rhs) {
    check_same(rhs);
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= rhs.data_[i];
    return *this;
  }
  Field& operator*=(double s) noexcept {
    for (double& v : data_) v *= s;
    return *this;
  }

  /// this += a * x
  Field& add_scaled(double a, const Field& x) {
    check_same(x);
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += a * x.data_[i];
    return *this;
  }

  bool operator==(const Field&) const = default;

 private:
  void check_same(const Field& rhs) const {
    if (rhs.size() != size()) throw dimension_error("field length mismatch");
  }

  std::vector<double> data_;
};

using SpectralField = Field<spectral_tag>;
using PhysicalField = Field<physical_tag>;

template <class Tag>
Field<Tag> operator+(Field<Tag> a, const Field<Tag>& b) {
  return a += b;
}
template <class Tag>
Field<Tag> operator-(Field<Tag> a, const Field<Tag>& b) {
  return a -= b;
}
template <class Tag>
Field<Tag> operator*(double s, Field<Tag> a) {
  return a *= s;
}
template <class Tag>
Field<Tag> operator*(Field<Tag> a, double s) {
  return a *= s;
}

/// Pointwise product; only meaningful on collocation values.
inline PhysicalField operator*(PhysicalField a, const PhysicalField& b) {
  if (a.size() != b.size()) throw dimension_error("field length mismatch");
  for (std::size_t i = 0; i < a.size(); ++i) a[i] *= b[i];
  return a;
}

/// Index of the first non-finite entry, or size() when every entry is finite.
template <class Tag>
std::size_t first_non_finite(const Field<Tag>& f) noexcept {
  for (std::size_t i = 0; i < f.size(); ++i)
    if (!std::isfinite(f[i])) return i;
  return f.size();
}

}  // namespace erkm
