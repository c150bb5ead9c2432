#include "geoprior/nn/tensor.hpp"

#include <algorithm>
#include <sstream>

namespace geoprior::nn {

std::string Shape::str() const {
  std::ostringstream ss;
  ss << "(" << n << ", " << c << ", " << z << ", " << y << ", " << x << ")";
  return ss.str();
}

Tensor::Tensor(Shape s, std::vector<double> data) : shape_(s), data_(std::move(data)) {
  if (data_.size() != shape_.numel()) {
    throw ShapeError("tensor payload of " + std::to_string(data_.size()) + " values does not fit shape " +
                     shape_.str());
  }
}

Tensor Tensor::reshaped(Shape s) const {
  if (s.numel() != numel()) throw ShapeError("cannot reshape " + shape_.str() + " to " + s.str());
  return Tensor(s, data_);
}

void Tensor::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

}  // namespace geoprior::nn
