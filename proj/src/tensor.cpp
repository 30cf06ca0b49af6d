#include "presstyle/tensor.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

namespace ptn {

namespace {
std::size_t checked_count(const std::vector<int>& shape) {
  if (shape.size() > 4) {
    throw ShapeError("tensor rank " + std::to_string(shape.size()) + " exceeds 4");
  }
  std::size_t n = 1;
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (shape[i] <= 0) {
      throw ShapeError("tensor dimension " + std::to_string(i) + " is " +
                       std::to_string(shape[i]) + ", must be positive");
    }
    n *= static_cast<std::size_t>(shape[i]);
  }
  return n;
}
}  // namespace

Tensor::Tensor(std::vector<int> shape) : shape_(std::move(shape)) {
  data_.assign(checked_count(shape_), 0.0);
  init_strides();
}

Tensor::Tensor(std::vector<int> shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  const std::size_t n = checked_count(shape_);
  if (n != data_.size()) {
    throw ShapeError("data length " + std::to_string(data_.size()) +
                     " does not match shape " + shape_str(shape_));
  }
  init_strides();
}

void Tensor::init_strides() {
  stride_.assign(shape_.empty() ? 0 : shape_.size() - 1, 1);
  for (std::size_t i = stride_.size(); i-- > 0;) {
    std::size_t s = 1;
    for (std::size_t j = i + 1; j < shape_.size(); ++j) {
      s *= static_cast<std::size_t>(shape_[j]);
    }
    stride_[i] = s;
  }
}

void Tensor::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

bool Tensor::all_finite() const {
  for (double v : data_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

Tensor Tensor::reshaped(std::vector<int> new_shape) const {
  const std::size_t n = checked_count(new_shape);
  if (n != data_.size()) {
    throw ShapeError("cannot reshape " + shape_str(shape_) + " to " +
                     shape_str(new_shape));
  }
  return Tensor(std::move(new_shape), data_);
}

std::string Tensor::shape_str(const std::vector<int>& shape) {
  std::ostringstream os;
  os << '(';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ',';
    os << shape[i];
  }
  os << ')';
  return os.str();
}

}  // namespace ptn
