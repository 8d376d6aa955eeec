#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "gdial/errors.hpp"

namespace gdial {

// Dense row-major array of 64-bit floats. Rank 1 ({n}) and rank 2 ({r,c})
// cover everything this project needs; higher ranks are permitted but unused.
class Array {
 public:
  Array() = default;
  explicit Array(std::vector<std::size_t> shape);
  Array(std::vector<std::size_t> shape, std::vector<double> data);

  static Array zeros(std::vector<std::size_t> shape) { return Array(std::move(shape)); }
  static Array full(std::vector<std::size_t> shape, double v);
  static Array scalar(double v) { return Array({1}, {v}); }
  static Array vec(std::vector<double> v);
  static Array matrix(std::size_t rows, std::size_t cols, std::vector<double> v);

  const std::vector<std::size_t>& shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  // Rank-2 accessors.
  std::size_t rows() const;
  std::size_t cols() const;
  double& at(std::size_t i, std::size_t j);
  double at(std::size_t i, std::size_t j) const;

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  double* data() noexcept { return data_.data(); }
  const double* data() const noexcept { return data_.data(); }

  bool same_shape(const Array& other) const { return shape_ == other.shape_; }
  bool all_finite() const;
  void fill(double v);

  std::string shape_str() const;

 private:
  std::vector<std::size_t> shape_;
  std::vector<double> data_;
};

std::string shape_str(const std::vector<std::size_t>& shape);

}  // namespace gdial
