#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace geoprior {

class BoundsError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

/// Millimeters per voxel along x, y, z.
struct Spacing {
  double sx = 1.0;
  double sy = 1.0;
  double sz = 1.0;

  Spacing() = default;
  Spacing(double x, double y, double z);

  double operator[](int axis) const { return axis == 0 ? sx : (axis == 1 ? sy : sz); }
  bool operator==(const Spacing&) const = default;
};

struct Index3 {
  int x = 0;
  int y = 0;
  int z = 0;
  bool operator==(const Index3&) const = default;
};

struct Dims {
  int nx = 0;
  int ny = 0;
  int nz = 0;

  Dims() = default;
  Dims(int x, int y, int z);

  std::size_t voxels() const {
    return static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny) *
           static_cast<std::size_t>(nz);
  }
  bool contains(Index3 p) const {
    return p.x >= 0 && p.y >= 0 && p.z >= 0 && p.x < nx && p.y < ny && p.z < nz;
  }
  bool operator==(const Dims&) const = default;
};

// idx = ((c*nz + z)*ny + y)*nx + x. Every module goes through these two.
inline std::size_t linear_index(const Dims& d, int x, int y, int z, int c = 0) {
  return ((static_cast<std::size_t>(c) * d.nz + z) * d.ny + y) * d.nx + x;
}
Index3 grid_index(const Dims& d, std::size_t idx);

std::array<double, 3> voxel_to_world(Index3 index, const Dims& dims, const Spacing& spacing);

enum class ClassId : std::uint8_t { Background = 0, LV = 1, RV = 2, MYO = 3 };
inline constexpr int kNumClasses = 4;
inline constexpr std::array<ClassId, 3> kForegroundClasses = {ClassId::LV, ClassId::RV,
                                                              ClassId::MYO};
const char* class_name(ClassId c);

struct MaskTag {};
struct LabelTag {};

/// Dense scalar grid, x-fastest. The Tag separates masks from label maps at the type level.
template <typename T, typename Tag = void>
class Grid {
 public:
  using value_type = T;

  Grid() = default;
  Grid(Dims dims, Spacing spacing, T fill = T{})
      : dims_(dims), spacing_(spacing), data_(dims.voxels(), fill) {}
  Grid(Dims dims, Spacing spacing, std::vector<T> data)
      : dims_(dims), spacing_(spacing), data_(std::move(data)) {
    if (data_.size() != dims_.voxels()) {
      throw std::invalid_argument("grid payload length " + std::to_string(data_.size()) +
                                  " does not match dims (" + std::to_string(dims_.voxels()) +
                                  ")");
    }
  }

  const Dims& dims() const { return dims_; }
  const Spacing& spacing() const { return spacing_; }
  std::size_t size() const { return data_.size(); }

  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }
  T& at(int x, int y, int z) { return data_[linear_index(dims_, x, y, z)]; }
  const T& at(int x, int y, int z) const { return data_[linear_index(dims_, x, y, z)]; }
  T& at(Index3 p) { return at(p.x, p.y, p.z); }
  const T& at(Index3 p) const { return at(p.x, p.y, p.z); }

  std::span<T> values() { return data_; }
  std::span<const T> values() const { return data_; }
  std::vector<T>& storage() { return data_; }
  const std::vector<T>& storage() const { return data_; }

  bool same_geometry(const auto& other) const {
    return dims_ == other.dims() && spacing_ == other.spacing();
  }

  bool operator==(const Grid&) const = default;

 private:
  Dims dims_;
  Spacing spacing_;
  std::vector<T> data_;
};

using Volume = Grid<float>;
/// Binary mask, values in {0,1}.
using Mask = Grid<std::uint8_t, MaskTag>;
/// Per-voxel class IDs in {0..3}.
using LabelMap = Grid<std::uint8_t, LabelTag>;
/// Double-precision scratch field (arrival times, distance maps).
using Field = Grid<double>;

void validate(const Volume& v);
void validate(const LabelMap& labels);
void validate(const Mask& mask);

Mask class_mask(const LabelMap& labels, ClassId c);
std::size_t count(const Mask& m);
bool empty(const Mask& m);
bool subset_of(const Mask& a, const Mask& b);
Mask mask_union(const Mask& a, const Mask& b);
Mask mask_intersection(const Mask& a, const Mask& b);
Mask mask_difference(const Mask& a, const Mask& b);

/// Ordered channels sharing one geometry (probability maps, geodesic maps).
struct MultiChannelMap {
  std::vector<Volume> channels;
  std::vector<std::string> channel_roles;

  const Dims& dims() const { return channels.front().dims(); }
  const Spacing& spacing() const { return channels.front().spacing(); }
  std::size_t num_channels() const { return channels.size(); }

  bool operator==(const MultiChannelMap&) const = default;
};

void validate(const MultiChannelMap& m);
/// Checks that channels sum to one per voxel.
void validate_probabilities(const MultiChannelMap& m, double tol = 1e-5);

}  // namespace geoprior
