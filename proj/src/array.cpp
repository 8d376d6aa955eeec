#include "gdial/array.hpp"

#include <sstream>

namespace gdial {

namespace {
std::size_t shape_product(const std::vector<std::size_t>& shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) {
    if (d == 0) throw DimensionError("array dimensions must be positive, got " + shape_str(shape));
    n *= d;
  }
  return n;
}
}  // namespace

Array::Array(std::vector<std::size_t> shape)
    : shape_(std::move(shape)), data_(shape_product(shape_), 0.0) {}

Array::Array(std::vector<std::size_t> shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  if (shape_product(shape_) != data_.size()) {
    throw DimensionError("data length " + std::to_string(data_.size()) +
                         " does not match shape " + shape_str(shape_));
  }
}

Array Array::full(std::vector<std::size_t> shape, double v) {
  Array a(std::move(shape));
  a.fill(v);
  return a;
}

Array Array::vec(std::vector<double> v) {
  std::size_t n = v.size();
  return Array({n}, std::move(v));
}

Array Array::matrix(std::size_t rows, std::size_t cols, std::vector<double> v) {
  return Array({rows, cols}, std::move(v));
}

std::size_t Array::rows() const {
  if (rank() != 2) throw DimensionError("rows() requires a rank-2 array, got " + shape_str());
  return shape_[0];
}

std::size_t Array::cols() const {
  if (rank() != 2) throw DimensionError("cols() requires a rank-2 array, got " + shape_str());
  return shape_[1];
}

double& Array::at(std::size_t i, std::size_t j) {
  return data_[i * cols() + j];
}

double Array::at(std::size_t i, std::size_t j) const {
  return data_[i * cols() + j];
}

bool Array::all_finite() const {
  for (double v : data_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

void Array::fill(double v) {
  std::fill(data_.begin(), data_.end(), v);
}

std::string Array::shape_str() const { return gdial::shape_str(shape_); }

std::string shape_str(const std::vector<std::size_t>& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << 'x';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

}  // namespace gdial
