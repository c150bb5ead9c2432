#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "geoprior/grid.hpp"

namespace geoprior {

/// Randomized short-axis cardiac phantom: LV disk, MYO annulus around it, RV crescent
/// hugging the MYO on one side. Radii taper towards both ends in z.
struct PhantomSpec {
  Dims dims{32, 32, 8};
  Spacing spacing{1.5, 1.5, 5.0};
  std::array<double, 2> lv_radius{5.0, 9.0};        // voxels, at the widest slice
  std::array<double, 2> myo_thickness{2.0, 4.0};    // voxels
  std::array<double, 2> rv_extent_deg{100.0, 160.0};  // angular extent of the crescent
  std::array<double, 2> rv_width{3.0, 6.0};         // crescent thickness at its middle
  std::array<double, 2> z_taper{0.1, 0.3};          // radius shrink at the outermost slices
  int margin = 2;
  // Intensity means: background, LV, RV, MYO (indexed by ClassId).
  std::array<double, 4> intensity{0.2, 0.8, 0.7, 0.4};
  double noise_sigma = 0.05;
  double bias_amplitude = 0.1;
  std::uint64_t seed = 7;

  void validate() const;
};

struct Phantom {
  Volume image;
  LabelMap labels;
};

/// Deterministic in (spec.seed, index).
Phantom generate_phantom(const PhantomSpec& spec, std::uint64_t index);

enum class Split { Train, Val, Test };
std::string to_string(Split s);
Split parse_split(const std::string& s);

struct DatasetEntry {
  std::uint64_t index = 0;
  std::string image_path;  // relative to the dataset root
  std::string label_path;
  Split split = Split::Train;
};

struct DatasetManifest {
  int version = 1;
  PhantomSpec spec;
  std::vector<DatasetEntry> entries;

  std::vector<DatasetEntry> in_split(Split s) const;
};

/// Writes images/, labels/ and manifest.json under `root`. Indices 0..train-1 are
/// training, the next `val` validation, the rest test.
DatasetManifest make_dataset(const PhantomSpec& spec, std::array<int, 3> split,
                             const std::filesystem::path& root);

void write_manifest(const DatasetManifest& m, const std::filesystem::path& path);
DatasetManifest read_manifest(const std::filesystem::path& path);

}  // namespace geoprior
