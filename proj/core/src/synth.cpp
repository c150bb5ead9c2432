#include "geoprior/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "geoprior/rng.hpp"
#include "geoprior/volume_io.hpp"

namespace geoprior {

namespace {

void check_range(const std::array<double, 2>& r, const char* name, double min_allowed) {
  if (!(r[0] <= r[1]) || r[0] < min_allowed) {
    throw std::invalid_argument(std::string("invalid phantom range for ") + name);
  }
}

struct Geometry {
  double cx = 0, cy = 0;
  double lv = 0, myo = 0, rv_width = 0;
  double rv_angle = 0, rv_half_extent = 0;
  double taper = 0;
};

double wrap_angle(double a) {
  while (a > std::numbers::pi) a -= 2 * std::numbers::pi;
  while (a < -std::numbers::pi) a += 2 * std::numbers::pi;
  return a;
}

double rv_profile(const Geometry& g, double phi, double scale) {
  const double u = wrap_angle(phi - g.rv_angle) / g.rv_half_extent;
  return g.rv_width * scale * std::sqrt(std::max(0.0, 1.0 - u * u));
}

double slice_scale(const Geometry& g, const Dims& d, int z) {
  const double zc = 0.5 * (d.nz - 1);
  const double u = zc > 0 ? (z - zc) / zc : 0.0;
  return 1.0 - g.taper * u * u;
}

}  // namespace

void PhantomSpec::validate() const {
  check_range(lv_radius, "lv_radius", 2.0);
  check_range(myo_thickness, "myo_thickness", 1.0);
  check_range(rv_extent_deg, "rv_extent_deg", 1.0);
  check_range(rv_width, "rv_width", 1.0);
  check_range(z_taper, "z_taper", 0.0);
  if (rv_extent_deg[1] >= 360.0) throw std::invalid_argument("rv_extent_deg must stay below 360");
  if (z_taper[1] >= 1.0) throw std::invalid_argument("z_taper must stay below 1");
  if (margin < 0) throw std::invalid_argument("margin must be >= 0");
  // The smallest configuration must fit inside the slice.
  const double smallest = 2.0 * (lv_radius[0] + myo_thickness[0]) + rv_width[0] + 2.0 * margin;
  if (smallest > std::min(dims.nx, dims.ny) - 1) {
    throw std::invalid_argument("phantom ranges cannot fit inside the image dims");
  }
}

Phantom generate_phantom(const PhantomSpec& spec, std::uint64_t index) {
  spec.validate();
  Rng rng(derive_seed(spec.seed, "phantom", index));
  const auto& d = spec.dims;

  Geometry g;
  bool placed = false;
  for (int attempt = 0; attempt < 200 && !placed; ++attempt) {
    g.lv = rng.uniform(spec.lv_radius[0], spec.lv_radius[1]);
    g.myo = rng.uniform(spec.myo_thickness[0], spec.myo_thickness[1]);
    g.rv_width = rng.uniform(spec.rv_width[0], spec.rv_width[1]);
    g.rv_angle = rng.uniform(-std::numbers::pi, std::numbers::pi);
    g.rv_half_extent = 0.5 * rng.uniform(spec.rv_extent_deg[0], spec.rv_extent_deg[1]) * std::numbers::pi / 180.0;
    g.taper = rng.uniform(spec.z_taper[0], spec.z_taper[1]);

    double xmin = 0, xmax = 0, ymin = 0, ymax = 0;
    for (int k = 0; k < 720; ++k) {
      const double phi = k * std::numbers::pi / 360.0;
      const double rho = g.lv + g.myo + rv_profile(g, phi, 1.0);
      xmin = std::min(xmin, rho * std::cos(phi));
      xmax = std::max(xmax, rho * std::cos(phi));
      ymin = std::min(ymin, rho * std::sin(phi));
      ymax = std::max(ymax, rho * std::sin(phi));
    }
    const double lo_x = spec.margin - xmin, hi_x = d.nx - 1 - spec.margin - xmax;
    const double lo_y = spec.margin - ymin, hi_y = d.ny - 1 - spec.margin - ymax;
    if (lo_x > hi_x || lo_y > hi_y) continue;
    g.cx = rng.uniform(lo_x, hi_x);
    g.cy = rng.uniform(lo_y, hi_y);
    placed = true;
  }
  if (!placed) throw std::invalid_argument("could not place a phantom inside the image dims");

  Phantom ph{Volume(d, spec.spacing, 0.0f), LabelMap(d, spec.spacing, 0)};
  for (int z = 0; z < d.nz; ++z) {
    const double s = slice_scale(g, d, z);
    const double r_lv = g.lv * s;
    for (int y = 0; y < d.ny; ++y)
      for (int x = 0; x < d.nx; ++x) {
        const double dx = x - g.cx, dy = y - g.cy;
        const double r = std::hypot(dx, dy);
        const double phi = std::atan2(dy, dx);
        ClassId c = ClassId::Background;
        if (r <= r_lv) c = ClassId::LV;
        else if (r <= r_lv + g.myo) c = ClassId::MYO;
        else if (r <= r_lv + g.myo + rv_profile(g, phi, s)) c = ClassId::RV;
        ph.labels.at(x, y, z) = static_cast<std::uint8_t>(c);
      }
  }

  // Smooth multiplicative bias: a plane wave with wavelength four times the slice size.
  const double bias_dir = rng.uniform(0.0, 2.0 * std::numbers::pi);
  const double bias_phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
  const double wavelength = 4.0 * std::max(d.nx, d.ny);
  for (int z = 0; z < d.nz; ++z)
    for (int y = 0; y < d.ny; ++y)
      for (int x = 0; x < d.nx; ++x) {
        const double proj = x * std::cos(bias_dir) + y * std::sin(bias_dir);
        const double bias = 1.0 + spec.bias_amplitude * std::sin(2.0 * std::numbers::pi * proj / wavelength + bias_phase);
        const double mean = spec.intensity[ph.labels.at(x, y, z)];
        const double v = (mean + spec.noise_sigma * rng.normal()) * bias;
        ph.image.at(x, y, z) = static_cast<float>(std::clamp(v, 0.0, 1.0));
      }
  return ph;
}

std::string to_string(Split s) {
  switch (s) {
    case Split::Train: return "train";
    case Split::Val: return "val";
    case Split::Test: return "test";
  }
  return "?";
}

Split parse_split(const std::string& s) {
  if (s == "train") return Split::Train;
  if (s == "val") return Split::Val;
  if (s == "test") return Split::Test;
  throw std::invalid_argument("unknown split '" + s + "'");
}

std::vector<DatasetEntry> DatasetManifest::in_split(Split s) const {
  std::vector<DatasetEntry> out;
  for (const auto& e : entries) {
    if (e.split == s) out.push_back(e);
  }
  return out;
}

namespace {

nlohmann::json spec_to_json(const PhantomSpec& s) {
  return {{"dims", {s.dims.nx, s.dims.ny, s.dims.nz}},
          {"spacing", {s.spacing.sx, s.spacing.sy, s.spacing.sz}},
          {"lv_radius", s.lv_radius},
          {"myo_thickness", s.myo_thickness},
          {"rv_extent_deg", s.rv_extent_deg},
          {"rv_width", s.rv_width},
          {"z_taper", s.z_taper},
          {"margin", s.margin},
          {"intensity", s.intensity},
          {"noise_sigma", s.noise_sigma},
          {"bias_amplitude", s.bias_amplitude},
          {"seed", s.seed}};
}

PhantomSpec spec_from_json(const nlohmann::json& j) {
  PhantomSpec s;
  const auto dims = j.at("dims").get<std::array<int, 3>>();
  s.dims = Dims(dims[0], dims[1], dims[2]);
  const auto sp = j.at("spacing").get<std::array<double, 3>>();
  s.spacing = Spacing(sp[0], sp[1], sp[2]);
  s.lv_radius = j.at("lv_radius").get<std::array<double, 2>>();
  s.myo_thickness = j.at("myo_thickness").get<std::array<double, 2>>();
  s.rv_extent_deg = j.at("rv_extent_deg").get<std::array<double, 2>>();
  s.rv_width = j.at("rv_width").get<std::array<double, 2>>();
  s.z_taper = j.at("z_taper").get<std::array<double, 2>>();
  s.margin = j.at("margin").get<int>();
  s.intensity = j.at("intensity").get<std::array<double, 4>>();
  s.noise_sigma = j.at("noise_sigma").get<double>();
  s.bias_amplitude = j.at("bias_amplitude").get<double>();
  s.seed = j.at("seed").get<std::uint64_t>();
  return s;
}

}  // namespace

DatasetManifest make_dataset(const PhantomSpec& spec, std::array<int, 3> split,
                             const std::filesystem::path& root) {
  spec.validate();
  if (split[0] < 0 || split[1] < 0 || split[2] < 0) throw std::invalid_argument("negative split size");
  const int n = split[0] + split[1] + split[2];
  DatasetManifest m;
  m.spec = spec;
  for (int i = 0; i < n; ++i) {
    char name[64];
    std::snprintf(name, sizeof name, "phantom_%04d.gpv", i);
    DatasetEntry e;
    e.index = static_cast<std::uint64_t>(i);
    e.image_path = std::string("images/") + name;
    e.label_path = std::string("labels/") + name;
    e.split = i < split[0] ? Split::Train : (i < split[0] + split[1] ? Split::Val : Split::Test);
    const auto ph = generate_phantom(spec, e.index);
    save_volume(ph.image, root / e.image_path);
    save_volume(ph.labels, root / e.label_path);
    m.entries.push_back(std::move(e));
  }
  write_manifest(m, root / "manifest.json");
  return m;
}

void write_manifest(const DatasetManifest& m, const std::filesystem::path& path) {
  nlohmann::json entries = nlohmann::json::array();
  for (const auto& e : m.entries) {
    entries.push_back({{"index", e.index},
                       {"image_path", e.image_path},
                       {"label_path", e.label_path},
                       {"split", to_string(e.split)}});
  }
  nlohmann::json j = {{"version", m.version}, {"spec", spec_to_json(m.spec)}, {"entries", entries}};
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  os << j.dump(2) << '\n';
}

DatasetManifest read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read dataset manifest " + path.string());
  const auto j = nlohmann::json::parse(in);
  DatasetManifest m;
  m.version = j.at("version").get<int>();
  m.spec = spec_from_json(j.at("spec"));
  for (const auto& e : j.at("entries")) {
    DatasetEntry entry;
    entry.index = e.at("index").get<std::uint64_t>();
    entry.image_path = e.at("image_path").get<std::string>();
    entry.label_path = e.at("label_path").get<std::string>();
    entry.split = parse_split(e.at("split").get<std::string>());
    m.entries.push_back(std::move(entry));
  }
  return m;
}

}  // namespace geoprior
