#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace geoprior::nn {

class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// NaN/Inf where finite numbers are required (diverged training, bad inputs).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// (batch, channels, nz, ny, nx). Fully-connected activations use (batch, features, 1, 1, 1).
struct Shape {
  int n = 1, c = 1, z = 1, y = 1, x = 1;

  std::size_t numel() const {
    return static_cast<std::size_t>(n) * c * z * y * x;
  }
  std::size_t spatial() const { return static_cast<std::size_t>(z) * y * x; }
  std::size_t per_sample() const { return static_cast<std::size_t>(c) * spatial(); }
  bool operator==(const Shape&) const = default;
  std::string str() const;
};

class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape s, double fill = 0.0) : shape_(s), data_(s.numel(), fill) {}
  Tensor(Shape s, std::vector<double> data);

  const Shape& shape() const { return shape_; }
  std::size_t numel() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }
  std::span<double> values() { return data_; }
  std::span<const double> values() const { return data_; }

  double& at(int n, int c, int z, int y, int x) { return data_[offset(n, c, z, y, x)]; }
  double at(int n, int c, int z, int y, int x) const { return data_[offset(n, c, z, y, x)]; }

  /// Same data, new shape with equal element count.
  Tensor reshaped(Shape s) const;
  void fill(double v);
  bool operator==(const Tensor&) const = default;

 private:
  std::size_t offset(int n, int c, int z, int y, int x) const {
    return (((static_cast<std::size_t>(n) * shape_.c + c) * shape_.z + z) * shape_.y + y) * shape_.x + x;
  }

  Shape shape_{0, 0, 0, 0, 0};
  std::vector<double> data_;
};

}  // namespace geoprior::nn
