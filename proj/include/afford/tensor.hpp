#pragma once

#include <cstddef>
#include <initializer_list>
#include <vector>

#include "afford/check.hpp"

namespace afford {

// Dense row-major double tensor. Everything numeric in this project flows
// through it: parameter matrices, feature grids, masks, images.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<std::size_t> shape);
  Tensor(std::size_t rows, std::size_t cols) : Tensor(std::vector<std::size_t>{rows, cols}) {}

  static Tensor zeros(std::vector<std::size_t> shape) { return Tensor(std::move(shape)); }
  static Tensor full(std::vector<std::size_t> shape, double v);
  static Tensor row_vector(std::initializer_list<double> values);
  static Tensor matrix(std::size_t rows, std::size_t cols, std::initializer_list<double> values);

  const std::vector<std::size_t>& shape() const { return shape_; }
  std::size_t ndim() const { return shape_.size(); }
  std::size_t numel() const { return data_.size(); }
  std::size_t size(std::size_t axis) const;

  // 2-D conveniences; valid for ndim() == 2 only.
  std::size_t rows() const;
  std::size_t cols() const;

  double operator[](std::size_t i) const { return data_[i]; }
  double& operator[](std::size_t i) { return data_[i]; }
  double at(std::size_t r, std::size_t c) const { return data_[r * cols() + c]; }
  double& at(std::size_t r, std::size_t c) { return data_[r * cols() + c]; }
  // 3-D access (e.g. H x W x 3 images).
  double at3(std::size_t i, std::size_t j, std::size_t k) const;
  double& at3(std::size_t i, std::size_t j, std::size_t k);

  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

  bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }
  bool all_finite() const;
  double sum() const;
  double min() const;
  double max() const;

  bool operator==(const Tensor& o) const { return shape_ == o.shape_ && data_ == o.data_; }

 private:
  std::vector<std::size_t> shape_;
  std::vector<double> data_;
};

}  // namespace afford
