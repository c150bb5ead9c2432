#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "geoprior/grid.hpp"

namespace geoprior {

class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class DType : std::uint8_t { F32 = 0, U8 = 1 };

// GPV1 layout: "GPV1" | u32 nx ny nz nchannels | f32 sx sy sz | u8 dtype | payload,
// little-endian, x-fastest then y, z, channel.
struct GpvHeader {
  Dims dims;
  std::uint32_t channels = 1;
  Spacing spacing;
  DType dtype = DType::F32;
};

struct GpvFile {
  GpvHeader header;
  std::variant<std::vector<float>, std::vector<std::uint8_t>> payload;
};

void write_gpv(const std::filesystem::path& path, const GpvFile& file);
GpvFile read_gpv(const std::filesystem::path& path);

void save_volume(const Volume& v, const std::filesystem::path& path);
void save_volume(const LabelMap& labels, const std::filesystem::path& path);
void save_volume(const Mask& mask, const std::filesystem::path& path);
/// Also writes `<path>.json` holding the channel roles.
void save_volume(const MultiChannelMap& m, const std::filesystem::path& path);

Volume load_volume(const std::filesystem::path& path);
LabelMap load_label_map(const std::filesystem::path& path);
Mask load_mask(const std::filesystem::path& path);
MultiChannelMap load_multichannel(const std::filesystem::path& path);

}  // namespace geoprior
