#include "geoprior/volume_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include <nlohmann/json.hpp>

namespace geoprior {

namespace {

constexpr char kMagic[4] = {'G', 'P', 'V', '1'};
constexpr std::size_t kHeaderBytes = 4 + 4 * 4 + 3 * 4 + 1;

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_f32(std::vector<std::uint8_t>& out, float v) { put_u32(out, std::bit_cast<std::uint32_t>(v)); }

std::uint32_t get_u32(const std::uint8_t* p) {
  return std::uint32_t(p[0]) | (std::uint32_t(p[1]) << 8) | (std::uint32_t(p[2]) << 16) |
         (std::uint32_t(p[3]) << 24);
}

float get_f32(const std::uint8_t* p) { return std::bit_cast<float>(get_u32(p)); }

std::vector<std::uint8_t> read_all(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::filesystem::path roles_path(const std::filesystem::path& path) {
  auto p = path;
  p += ".json";
  return p;
}

template <typename G>
GpvFile single_channel(const G& grid, DType dtype) {
  GpvFile f;
  f.header.dims = grid.dims();
  f.header.spacing = grid.spacing();
  f.header.channels = 1;
  f.header.dtype = dtype;
  if constexpr (std::is_same_v<typename G::value_type, float>) {
    f.payload = grid.storage();
  } else {
    f.payload = grid.storage();
  }
  return f;
}

const std::vector<float>& floats(const GpvFile& f, const std::filesystem::path& path) {
  if (f.header.dtype != DType::F32) throw FormatError(path.string() + ": expected f32 payload");
  return std::get<std::vector<float>>(f.payload);
}

const std::vector<std::uint8_t>& bytes(const GpvFile& f, const std::filesystem::path& path) {
  if (f.header.dtype != DType::U8) throw FormatError(path.string() + ": expected u8 payload");
  return std::get<std::vector<std::uint8_t>>(f.payload);
}

}  // namespace

void write_gpv(const std::filesystem::path& path, const GpvFile& file) {
  const auto& h = file.header;
  const std::size_t n = h.dims.voxels() * h.channels;
  std::vector<std::uint8_t> out;
  out.reserve(kHeaderBytes + n * 4);
  out.insert(out.end(), std::begin(kMagic), std::end(kMagic));
  put_u32(out, static_cast<std::uint32_t>(h.dims.nx));
  put_u32(out, static_cast<std::uint32_t>(h.dims.ny));
  put_u32(out, static_cast<std::uint32_t>(h.dims.nz));
  put_u32(out, h.channels);
  put_f32(out, static_cast<float>(h.spacing.sx));
  put_f32(out, static_cast<float>(h.spacing.sy));
  put_f32(out, static_cast<float>(h.spacing.sz));
  out.push_back(static_cast<std::uint8_t>(h.dtype));
  if (h.dtype == DType::F32) {
    const auto& v = std::get<std::vector<float>>(file.payload);
    if (v.size() != n) throw FormatError("payload length does not match header");
    for (float x : v) put_f32(out, x);
  } else {
    const auto& v = std::get<std::vector<std::uint8_t>>(file.payload);
    if (v.size() != n) throw FormatError("payload length does not match header");
    out.insert(out.end(), v.begin(), v.end());
  }
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw FormatError("cannot write " + path.string());
  os.write(reinterpret_cast<const char*>(out.data()), static_cast<std::streamsize>(out.size()));
  if (!os) throw FormatError("short write to " + path.string());
}

GpvFile read_gpv(const std::filesystem::path& path) {
  const auto buf = read_all(path);
  if (buf.size() < kHeaderBytes) throw FormatError(path.string() + ": truncated header");
  if (std::memcmp(buf.data(), kMagic, 4) != 0) throw FormatError(path.string() + ": bad magic");
  const std::uint8_t* p = buf.data() + 4;
  GpvFile f;
  auto& h = f.header;
  const auto nx = get_u32(p), ny = get_u32(p + 4), nz = get_u32(p + 8);
  h.channels = get_u32(p + 12);
  if (nx == 0 || ny == 0 || nz == 0 || h.channels == 0) {
    throw FormatError(path.string() + ": zero-sized dims");
  }
  h.dims = Dims(static_cast<int>(nx), static_cast<int>(ny), static_cast<int>(nz));
  try {
    h.spacing = Spacing(get_f32(p + 16), get_f32(p + 20), get_f32(p + 24));
  } catch (const std::invalid_argument& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
  const std::uint8_t code = p[28];
  if (code > 1) throw FormatError(path.string() + ": unsupported dtype code " + std::to_string(code));
  h.dtype = static_cast<DType>(code);
  const std::size_t n = h.dims.voxels() * h.channels;
  const std::size_t elem = h.dtype == DType::F32 ? 4 : 1;
  const std::uint8_t* payload = buf.data() + kHeaderBytes;
  if (buf.size() - kHeaderBytes != n * elem) {
    throw FormatError(path.string() + ": dims mismatch with payload length");
  }
  if (h.dtype == DType::F32) {
    std::vector<float> v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = get_f32(payload + 4 * i);
    f.payload = std::move(v);
  } else {
    f.payload = std::vector<std::uint8_t>(payload, payload + n);
  }
  return f;
}

void save_volume(const Volume& v, const std::filesystem::path& path) {
  write_gpv(path, single_channel(v, DType::F32));
}

void save_volume(const LabelMap& labels, const std::filesystem::path& path) {
  write_gpv(path, single_channel(labels, DType::U8));
}

void save_volume(const Mask& mask, const std::filesystem::path& path) {
  write_gpv(path, single_channel(mask, DType::U8));
}

void save_volume(const MultiChannelMap& m, const std::filesystem::path& path) {
  validate(m);
  GpvFile f;
  f.header.dims = m.dims();
  f.header.spacing = m.spacing();
  f.header.channels = static_cast<std::uint32_t>(m.num_channels());
  f.header.dtype = DType::F32;
  std::vector<float> payload;
  payload.reserve(m.dims().voxels() * m.num_channels());
  for (const auto& c : m.channels) payload.insert(payload.end(), c.values().begin(), c.values().end());
  f.payload = std::move(payload);
  write_gpv(path, f);
  nlohmann::json sidecar = {{"channel_roles", m.channel_roles}};
  std::ofstream os(roles_path(path), std::ios::trunc);
  os << sidecar.dump(2) << '\n';
}

Volume load_volume(const std::filesystem::path& path) {
  auto f = read_gpv(path);
  if (f.header.channels != 1) throw FormatError(path.string() + ": expected one channel");
  return Volume(f.header.dims, f.header.spacing, floats(f, path));
}

LabelMap load_label_map(const std::filesystem::path& path) {
  auto f = read_gpv(path);
  if (f.header.channels != 1) throw FormatError(path.string() + ": expected one channel");
  LabelMap labels(f.header.dims, f.header.spacing, bytes(f, path));
  try {
    validate(labels);
  } catch (const std::invalid_argument& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
  return labels;
}

Mask load_mask(const std::filesystem::path& path) {
  auto f = read_gpv(path);
  if (f.header.channels != 1) throw FormatError(path.string() + ": expected one channel");
  Mask m(f.header.dims, f.header.spacing, bytes(f, path));
  try {
    validate(m);
  } catch (const std::invalid_argument& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
  return m;
}

MultiChannelMap load_multichannel(const std::filesystem::path& path) {
  auto f = read_gpv(path);
  const auto& data = floats(f, path);
  const std::size_t n = f.header.dims.voxels();
  MultiChannelMap m;
  for (std::uint32_t c = 0; c < f.header.channels; ++c) {
    m.channels.emplace_back(f.header.dims, f.header.spacing,
                            std::vector<float>(data.begin() + c * n, data.begin() + (c + 1) * n));
  }
  const auto sidecar = roles_path(path);
  if (std::filesystem::exists(sidecar)) {
    std::ifstream in(sidecar);
    try {
      m.channel_roles = nlohmann::json::parse(in).at("channel_roles").get<std::vector<std::string>>();
    } catch (const nlohmann::json::exception& e) {
      throw FormatError(sidecar.string() + ": " + e.what());
    }
    if (m.channel_roles.size() != m.num_channels()) {
      throw FormatError(sidecar.string() + ": role count does not match channel count");
    }
  } else {
    for (std::uint32_t c = 0; c < f.header.channels; ++c) {
      m.channel_roles.push_back("ch" + std::to_string(c));
    }
  }
  return m;
}

}  // namespace geoprior
