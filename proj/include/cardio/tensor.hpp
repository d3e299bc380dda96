#pragma once

#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <stdexcept>
#include <vector>

namespace cardio {

/// Dense row-major tensor of doubles with a dynamic shape.
class TensorNd {
 public:
  TensorNd() = default;

  explicit TensorNd(std::vector<std::size_t> shape) : shape_(std::move(shape)) {
    std::size_t n = 1;
    for (std::size_t d : shape_) n *= d;
    data_.assign(n, 0.0);
  }

  static TensorNd zeros(std::vector<std::size_t> shape) { return TensorNd(std::move(shape)); }

  const std::vector<std::size_t>& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t size() const { return data_.size(); }
  std::size_t extent(std::size_t dim) const { return shape_.at(dim); }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  std::vector<double>& storage() { return data_; }
  const std::vector<double>& storage() const { return data_; }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  std::size_t offset(std::initializer_list<std::size_t> idx) const {
    if (idx.size() != shape_.size()) throw std::invalid_argument("tensor index rank mismatch");
    std::size_t off = 0;
    std::size_t dim = 0;
    for (std::size_t i : idx) {
      if (i >= shape_[dim]) throw std::out_of_range("tensor index out of range");
      off = off * shape_[dim] + i;
      ++dim;
    }
    return off;
  }

  template <typename... Ix>
  double& at(Ix... ix) {
    return data_[offset({static_cast<std::size_t>(ix)...})];
  }
  template <typename... Ix>
  double at(Ix... ix) const {
    return data_[offset({static_cast<std::size_t>(ix)...})];
  }

  bool same_shape(const TensorNd& o) const { return shape_ == o.shape_; }

  bool all_finite() const {
    for (double v : data_)
      if (!std::isfinite(v)) return false;
    return true;
  }

 private:
  std::vector<std::size_t> shape_;
  std::vector<double> data_;
};

}  // namespace cardio
