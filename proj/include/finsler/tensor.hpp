#pragma once

/**
 * @file tensor.hpp
 * @brief Dense component arrays with declared index variance, plus the
 *        error measures used to compare them.
 */

#include <finsler/error.hpp>

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

namespace finsler {

/// Dense tensor at a single point. `variance` has one character per index,
/// 'u' for contravariant and 'l' for covariant; every index runs over dim().
class Tensor {
 public:
  Tensor() = default;

  Tensor(int dim, std::string variance)
      : dim_(dim), variance_(std::move(variance)), data_(extent(dim, variance_.size()), 0.0) {
    for (char c : variance_)
      if (c != 'u' && c != 'l') throw Error("tensor variance must consist of 'u' and 'l'");
  }

  int dim() const noexcept { return dim_; }
  int rank() const noexcept { return static_cast<int>(variance_.size()); }
  const std::string& variance() const noexcept { return variance_; }

  std::span<double> data() & noexcept { return data_; }
  std::span<const double> data() const& noexcept { return data_; }
  std::span<const double> data() const&& = delete;
  std::size_t size() const noexcept { return data_.size(); }

  template <class... I>
  double& operator()(I... idx) {
    return data_[offset({static_cast<int>(idx)...})];
  }
  template <class... I>
  double operator()(I... idx) const {
    return data_[offset({static_cast<int>(idx)...})];
  }

  double& at(std::span<const int> idx) { return data_[offset(idx)]; }
  double at(std::span<const int> idx) const { return data_[offset(idx)]; }

  /// Multi-index of the flat position `flat`.
  std::vector<int> unflatten(std::size_t flat) const {
    std::vector<int> idx(variance_.size());
    for (std::size_t k = idx.size(); k-- > 0;) {
      idx[k] = static_cast<int>(flat % static_cast<std::size_t>(dim_));
      flat /= static_cast<std::size_t>(dim_);
    }
    return idx;
  }

  bool all_finite() const {
    return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
  }

 private:
  static std::size_t extent(int dim, std::size_t rank) {
    std::size_t n = 1;
    for (std::size_t k = 0; k < rank; ++k) n *= static_cast<std::size_t>(dim);
    return n;
  }

  std::size_t offset(std::initializer_list<int> idx) const {
    return offset(std::span<const int>(idx.begin(), idx.size()));
  }

  std::size_t offset(std::span<const int> idx) const {
    std::size_t off = 0;
    for (int i : idx) off = off * static_cast<std::size_t>(dim_) + static_cast<std::size_t>(i);
    return off;
  }

  int dim_ = 0;
  std::string variance_;
  std::vector<double> data_;
};

/// |a - b| / max(1, |a|, |b|): near-zero targets are compared absolutely.
inline double relative_error(double a, double b) {
  return std::abs(a - b) / std::max({1.0, std::abs(a), std::abs(b)});
}

/// Running maximum of absolute and relative discrepancies.
struct Discrepancy {
  double max_abs = 0.0;
  double max_rel = 0.0;
  std::size_t count = 0;

  void add(double a, double b) {
    const double d = std::abs(a - b);
    // NaN must never pass a tolerance check.
    max_abs = std::isnan(d) || std::isnan(max_abs) ? NAN : std::max(max_abs, d);
    const double r = relative_error(a, b);
    max_rel = std::isnan(r) || std::isnan(max_rel) ? NAN : std::max(max_rel, r);
    ++count;
  }

  void add(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw Error("discrepancy between arrays of different size");
    for (std::size_t k = 0; k < a.size(); ++k) add(a[k], b[k]);
  }

  void add(const Tensor& a, const Tensor& b) { add(a.data(), b.data()); }

  /// Compare against zero.
  void add_zero(std::span<const double> a) {
    for (double v : a) add(v, 0.0);
  }

  void merge(const Discrepancy& o) {
    max_abs = std::isnan(o.max_abs) || std::isnan(max_abs) ? NAN : std::max(max_abs, o.max_abs);
    max_rel = std::isnan(o.max_rel) || std::isnan(max_rel) ? NAN : std::max(max_rel, o.max_rel);
    count += o.count;
  }

  bool within(double tol) const { return max_rel <= tol; }
};

inline double max_abs(const Tensor& t) {
  double m = 0.0;
  for (double v : t.data()) m = std::max(m, std::abs(v));
  return m;
}

inline double max_abs_difference(const Tensor& a, const Tensor& b) {
  Discrepancy d;
  d.add(a, b);
  return d.max_abs;
}

}  // namespace finsler
