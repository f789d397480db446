#include "afford/tensor.hpp"

#include <algorithm>
#include <cmath>

namespace afford {

Tensor::Tensor(std::vector<std::size_t> shape) : shape_(std::move(shape)) {
  std::size_t n = 1;
  for (std::size_t d : shape_) n *= d;
  data_.assign(n, 0.0);
}

Tensor Tensor::full(std::vector<std::size_t> shape, double v) {
  Tensor t(std::move(shape));
  std::fill(t.data_.begin(), t.data_.end(), v);
  return t;
}

Tensor Tensor::row_vector(std::initializer_list<double> values) {
  Tensor t(1, values.size());
  std::copy(values.begin(), values.end(), t.data_.begin());
  return t;
}

Tensor Tensor::matrix(std::size_t rows, std::size_t cols, std::initializer_list<double> values) {
  check(values.size() == rows * cols, "[Tensor::matrix] value count does not match shape");
  Tensor t(rows, cols);
  std::copy(values.begin(), values.end(), t.data_.begin());
  return t;
}

std::size_t Tensor::size(std::size_t axis) const {
  check(axis < shape_.size(), "[Tensor::size] axis out of range");
  return shape_[axis];
}

std::size_t Tensor::rows() const {
  check(shape_.size() == 2, "[Tensor::rows] tensor is not 2-D");
  return shape_[0];
}

std::size_t Tensor::cols() const {
  check(shape_.size() == 2, "[Tensor::cols] tensor is not 2-D");
  return shape_[1];
}

double Tensor::at3(std::size_t i, std::size_t j, std::size_t k) const {
  return data_[(i * shape_[1] + j) * shape_[2] + k];
}

double& Tensor::at3(std::size_t i, std::size_t j, std::size_t k) {
  return data_[(i * shape_[1] + j) * shape_[2] + k];
}

bool Tensor::all_finite() const {
  for (double v : data_)
    if (!std::isfinite(v)) return false;
  return true;
}

double Tensor::sum() const {
  double s = 0.0;
  for (double v : data_) s += v;
  return s;
}

double Tensor::min() const {
  check(!data_.empty(), "[Tensor::min] empty tensor");
  return *std::min_element(data_.begin(), data_.end());
}

double Tensor::max() const {
  check(!data_.empty(), "[Tensor::max] empty tensor");
  return *std::max_element(data_.begin(), data_.end());
}

}  // namespace afford
