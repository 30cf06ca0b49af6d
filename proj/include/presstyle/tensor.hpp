#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace ptn {

// Thrown for any dimension/shape violation; the message names the
// offending dimension.
class ShapeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Dense row-major tensor of rank 0..4, double storage.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<int> shape);
  Tensor(std::vector<int> shape, std::vector<double> data);

  int rank() const { return static_cast<int>(shape_.size()); }
  int dim(int i) const { return shape_[static_cast<std::size_t>(i)]; }
  const std::vector<int>& shape() const { return shape_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  std::vector<double>& vec() { return data_; }
  const std::vector<double>& vec() const { return data_; }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  double& at(int a) { return data_[idx(a)]; }
  double at(int a) const { return data_[idx(a)]; }
  double& at(int a, int b) { return data_[idx(a, b)]; }
  double at(int a, int b) const { return data_[idx(a, b)]; }
  double& at(int a, int b, int c) { return data_[idx(a, b, c)]; }
  double at(int a, int b, int c) const { return data_[idx(a, b, c)]; }
  double& at(int a, int b, int c, int d) { return data_[idx(a, b, c, d)]; }
  double at(int a, int b, int c, int d) const { return data_[idx(a, b, c, d)]; }

  void fill(double v);
  bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }
  bool all_finite() const;

  // Same data, new shape (element counts must agree).
  Tensor reshaped(std::vector<int> new_shape) const;

  static std::string shape_str(const std::vector<int>& shape);
  std::string shape_str() const { return shape_str(shape_); }

 private:
  std::size_t idx(int a) const { return static_cast<std::size_t>(a); }
  std::size_t idx(int a, int b) const {
    return static_cast<std::size_t>(a) * stride_[0] + static_cast<std::size_t>(b);
  }
  std::size_t idx(int a, int b, int c) const {
    return static_cast<std::size_t>(a) * stride_[0] +
           static_cast<std::size_t>(b) * stride_[1] + static_cast<std::size_t>(c);
  }
  std::size_t idx(int a, int b, int c, int d) const {
    return static_cast<std::size_t>(a) * stride_[0] +
           static_cast<std::size_t>(b) * stride_[1] +
           static_cast<std::size_t>(c) * stride_[2] + static_cast<std::size_t>(d);
  }
  void init_strides();

  std::vector<int> shape_;
  std::vector<std::size_t> stride_;  // strides for all but the last axis
  std::vector<double> data_;
};

}  // namespace ptn
