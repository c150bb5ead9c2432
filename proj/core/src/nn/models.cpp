#include "geoprior/nn/models.hpp"

#include <bit>
#include <fstream>
#include <iterator>
#include <map>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "geoprior/rng.hpp"
#include "geoprior/volume_io.hpp"

namespace geoprior::nn {

namespace {

void validate_common(int nz, int ny, int nx, int in_channels, int classes, int blocks, const DenseBlockConfig& block,
                     double alpha) {
  if (nz < 1 || ny < 1 || nx < 1) throw std::invalid_argument("input dims must be positive");
  if (in_channels < 1 || classes < 2) throw std::invalid_argument("need at least one input channel and two classes");
  if (blocks < 1) throw std::invalid_argument("need at least one dense block per path");
  if (blocks > 30 || (1 << blocks) > std::min(ny, nx)) {
    throw std::invalid_argument(std::to_string(blocks) + " poolings exceed log2(min(nx, ny))");
  }
  const int f = 1 << blocks;
  if (ny % f != 0 || nx % f != 0) {
    throw std::invalid_argument("nx=" + std::to_string(nx) + ", ny=" + std::to_string(ny) + " not divisible by 2^" +
                                std::to_string(blocks));
  }
  if (alpha < 0.0) throw std::invalid_argument("leaky ReLU slope must be non-negative");
  block.validate();
}

}  // namespace

void SegmentorConfig::validate() const { validate_common(nz, ny, nx, in_channels, classes, blocks, block, alpha); }

std::vector<StageShape> SegmentorConfig::stage_shapes() const {
  validate();
  const int lk = block.layers * block.growth;
  std::vector<StageShape> out;
  out.push_back({"first_conv", in_channels, block.first_filters, nz, ny, nx});
  int c = block.first_filters, y = ny, x = nx;
  std::vector<int> skip;
  for (int b = 0; b < blocks; ++b) {
    out.push_back({"down" + std::to_string(b), c, dense_block_channels(c, block.layers, block.growth), nz, y, x});
    c = out.back().channels_out;
    skip.push_back(c);
    y /= 2;
    x /= 2;
  }
  int carry = c;
  for (int b = 0; b < blocks; ++b) {
    y *= 2;
    x *= 2;
    const int cin = carry + skip[blocks - 1 - b];
    out.push_back({"up" + std::to_string(b), cin, dense_block_channels(cin, block.layers, block.growth), nz, y, x});
    carry = lk;
  }
  out.push_back({"last_conv", out.back().channels_out, classes, nz, ny, nx});
  return out;
}

void GaeConfig::validate() const {
  validate_common(nz, ny, nx, in_channels, classes, blocks, block, alpha);
  if (features < 1) throw std::invalid_argument("bottleneck length must be positive");
}

std::vector<StageShape> GaeConfig::stage_shapes() const {
  validate();
  const int lk = block.layers * block.growth;
  std::vector<StageShape> out;
  out.push_back({"first_conv", in_channels, block.first_filters, nz, ny, nx});
  int c = block.first_filters, y = ny, x = nx;
  for (int b = 0; b < blocks; ++b) {
    out.push_back({"down" + std::to_string(b), c, dense_block_channels(c, block.layers, block.growth), nz, y, x});
    c = out.back().channels_out;
    y /= 2;
    x /= 2;
  }
  out.push_back({"to_features", c * nz * y * x, features, 1, 1, 1});
  out.push_back({"from_features", features, c * nz * y * x, 1, 1, 1});
  int carry = c;
  for (int b = 0; b < blocks; ++b) {
    y *= 2;
    x *= 2;
    out.push_back({"up" + std::to_string(b), carry, dense_block_channels(carry, block.layers, block.growth), nz, y, x});
    carry = lk;
  }
  out.push_back({"last_conv", out.back().channels_out, classes, nz, ny, nx});
  return out;
}

Segmentor::Segmentor(const SegmentorConfig& cfg) : cfg_(cfg) {
  const auto shapes = cfg_.stage_shapes();
  Rng rng(cfg_.init_seed);
  first_ = std::make_unique<Conv3dLayer>(store_, "seg.first", cfg_.in_channels, cfg_.block.first_filters, cfg_.alpha, rng);
  for (int b = 0; b < cfg_.blocks; ++b) {
    const auto& s = shapes[1 + b];
    down_.emplace_back(store_, "seg.down" + std::to_string(b), s.channels_in, cfg_.block, cfg_.alpha, rng);
    if (down_.back().channels_out() != s.channels_out) throw std::logic_error("segmentor encoder channel mismatch");
  }
  for (int b = 0; b < cfg_.blocks; ++b) {
    const auto& s = shapes[1 + cfg_.blocks + b];
    up_.emplace_back(store_, "seg.up" + std::to_string(b), s.channels_in, cfg_.block, cfg_.alpha, rng);
    if (up_.back().channels_out() != s.channels_out) throw std::logic_error("segmentor decoder channel mismatch");
  }
  last_ = std::make_unique<Conv3dLayer>(store_, "seg.last", shapes.back().channels_in, cfg_.classes, cfg_.alpha, rng);
}

Var Segmentor::forward(const Var& image, bool train) {
  const Shape s = image.shape();
  if (s.c != cfg_.in_channels || s.z != cfg_.nz || s.y != cfg_.ny || s.x != cfg_.nx) {
    throw ShapeError("segmentor input " + s.str() + " does not match its configuration");
  }
  Var h = (*first_)(image);
  std::vector<Var> skips;
  for (const auto& block : down_) {
    Var all = block(h, train).all;
    skips.push_back(all);
    h = maxpool_xy(all);
  }
  Var carry = h;
  Var full;
  for (std::size_t b = 0; b < up_.size(); ++b) {
    const std::vector<Var> parts{upsample_bilinear_xy(carry), skips[skips.size() - 1 - b]};
    auto out = up_[b](concat_channels(parts), train);
    carry = out.produced;
    full = out.all;
  }
  return (*last_)(full);
}

Var Segmentor::probabilities(const Var& image, bool train) { return softmax_channels(forward(image, train)); }

Gae::Gae(const GaeConfig& cfg) : cfg_(cfg) {
  const auto shapes = cfg_.stage_shapes();
  Rng rng(cfg_.init_seed);
  first_ = std::make_unique<Conv3dLayer>(store_, "gae.first", cfg_.in_channels, cfg_.block.first_filters, cfg_.alpha, rng);
  for (int b = 0; b < cfg_.blocks; ++b) {
    down_.emplace_back(store_, "gae.down" + std::to_string(b), shapes[1 + b].channels_in, cfg_.block, cfg_.alpha, rng);
  }
  bottleneck_channels_ = down_.back().channels_out();
  bottleneck_y_ = cfg_.ny >> cfg_.blocks;
  bottleneck_x_ = cfg_.nx >> cfg_.blocks;
  const int flat = bottleneck_channels_ * cfg_.nz * bottleneck_y_ * bottleneck_x_;
  // The bottleneck is linear, so the He gain for a unit slope applies.
  to_features_ = std::make_unique<LinearLayer>(store_, "gae.to_features", flat, cfg_.features, 1.0, rng);
  from_features_ = std::make_unique<LinearLayer>(store_, "gae.from_features", cfg_.features, flat, 1.0, rng);
  for (int b = 0; b < cfg_.blocks; ++b) {
    const auto& s = shapes[3 + cfg_.blocks + b];
    up_.emplace_back(store_, "gae.up" + std::to_string(b), s.channels_in, cfg_.block, cfg_.alpha, rng);
    if (up_.back().channels_out() != s.channels_out) throw std::logic_error("autoencoder decoder channel mismatch");
  }
  last_ = std::make_unique<Conv3dLayer>(store_, "gae.last", shapes.back().channels_in, cfg_.classes, cfg_.alpha, rng);
}

Var Gae::encode(const Var& maps, bool train) {
  const Shape s = maps.shape();
  if (s.c != cfg_.in_channels || s.z != cfg_.nz || s.y != cfg_.ny || s.x != cfg_.nx) {
    throw ShapeError("autoencoder input " + s.str() + " does not match its configuration");
  }
  Var h = (*first_)(maps);
  for (const auto& block : down_) h = maxpool_xy(block(h, train).all);
  const Shape flat{s.n, static_cast<int>(h.shape().per_sample()), 1, 1, 1};
  return (*to_features_)(reshape(h, flat));
}

Var Gae::decode(const Var& features, bool train) {
  const int n = features.shape().n;
  Var h = leaky_relu((*from_features_)(features), cfg_.alpha);
  h = reshape(h, {n, bottleneck_channels_, cfg_.nz, bottleneck_y_, bottleneck_x_});
  Var full;
  for (const auto& block : up_) {
    auto out = block(upsample_bilinear_xy(h), train);
    h = out.produced;
    full = out.all;
  }
  return (*last_)(full);
}

void Gae::freeze() {
  for (Parameter* p : store_.parameters()) {
    p->var.set_requires_grad(false);
    p->var.zero_grad();
  }
  frozen_ = true;
}

std::uint64_t checksum(ParameterStore& store) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& [name, t] : store.named_tensors()) {
    h = fnv1a(name, h);
    const std::string_view bytes(reinterpret_cast<const char*>(t->data()), t->numel() * sizeof(double));
    h = fnv1a(bytes, h);
  }
  return h;
}

namespace {

constexpr char kParamMagic[4] = {'G', 'P', 'P', '1'};

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>(v >> (8 * i)));
}

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>(v >> (8 * i)));
}

class Reader {
 public:
  Reader(std::string data, std::string where) : data_(std::move(data)), where_(std::move(where)) {}

  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= std::uint32_t(static_cast<unsigned char>(data_[pos_ + i])) << (8 * i);
    pos_ += 4;
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= std::uint64_t(static_cast<unsigned char>(data_[pos_ + i])) << (8 * i);
    pos_ += 8;
    return v;
  }
  std::string bytes(std::size_t n) {
    need(n);
    std::string s = data_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  bool done() const { return pos_ == data_.size(); }

 private:
  void need(std::size_t n) const {
    if (pos_ + n > data_.size()) throw FormatError(where_ + ": truncated parameter file");
  }
  std::string data_;
  std::string where_;
  std::size_t pos_ = 0;
};

nlohmann::json block_json(const DenseBlockConfig& b) {
  return {{"layers", b.layers}, {"growth", b.growth}, {"first_filters", b.first_filters}};
}

DenseBlockConfig block_from(const nlohmann::json& j) {
  DenseBlockConfig b;
  b.layers = j.at("layers");
  b.growth = j.at("growth");
  b.first_filters = j.at("first_filters");
  return b;
}

nlohmann::json config_json(const SegmentorConfig& c) {
  return {{"kind", "segmentor"}, {"nz", c.nz}, {"ny", c.ny}, {"nx", c.nx}, {"in_channels", c.in_channels},
          {"classes", c.classes}, {"blocks", c.blocks}, {"block", block_json(c.block)}, {"alpha", c.alpha},
          {"init_seed", c.init_seed}};
}

nlohmann::json config_json(const GaeConfig& c) {
  return {{"kind", "gae"}, {"nz", c.nz}, {"ny", c.ny}, {"nx", c.nx}, {"in_channels", c.in_channels},
          {"classes", c.classes}, {"blocks", c.blocks}, {"block", block_json(c.block)}, {"features", c.features},
          {"alpha", c.alpha}, {"init_seed", c.init_seed}};
}

template <typename Config>
void common_from(const nlohmann::json& j, Config& c) {
  c.nz = j.at("nz");
  c.ny = j.at("ny");
  c.nx = j.at("nx");
  c.in_channels = j.at("in_channels");
  c.classes = j.at("classes");
  c.blocks = j.at("blocks");
  c.block = block_from(j.at("block"));
  c.alpha = j.at("alpha");
  c.init_seed = j.at("init_seed");
}

template <typename Model>
void save_impl(const std::filesystem::path& dir, Model& model, const CheckpointInfo& info) {
  std::filesystem::create_directories(dir);
  nlohmann::json j = {{"architecture", config_json(model.config())},
                      {"step", info.step},
                      {"rng_state", info.rng_state},
                      {"parameter_count", model.store().parameter_count()},
                      {"parameters", "params.bin"}};
  std::ofstream out(dir / "model.json");
  if (!out) throw FormatError("cannot write " + (dir / "model.json").string());
  out << j.dump(2) << "\n";
  write_tensors(dir / "params.bin", model.store().named_tensors());
}

nlohmann::json read_model_json(const std::filesystem::path& dir, const std::string& kind, CheckpointInfo* info) {
  std::ifstream in(dir / "model.json");
  if (!in) throw FormatError("no checkpoint at " + dir.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError((dir / "model.json").string() + ": " + e.what());
  }
  const auto& arch = j.at("architecture");
  if (arch.at("kind") != kind) {
    throw FormatError(dir.string() + " holds a " + arch.at("kind").get<std::string>() + ", expected " + kind);
  }
  if (info) {
    info->step = j.at("step");
    info->rng_state = j.at("rng_state");
  }
  return arch;
}

}  // namespace

void write_tensors(const std::filesystem::path& path, const std::vector<std::pair<std::string, Tensor*>>& tensors) {
  std::string out(kParamMagic, 4);
  put_u32(out, static_cast<std::uint32_t>(tensors.size()));
  for (const auto& [name, t] : tensors) {
    put_u32(out, static_cast<std::uint32_t>(name.size()));
    out += name;
    const Shape s = t->shape();
    for (int d : {s.n, s.c, s.z, s.y, s.x}) put_u32(out, static_cast<std::uint32_t>(d));
    for (double v : t->values()) put_u64(out, std::bit_cast<std::uint64_t>(v));
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw FormatError("cannot write " + path.string());
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
}

void read_tensors(const std::filesystem::path& path, const std::vector<std::pair<std::string, Tensor*>>& tensors) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw FormatError("cannot open " + path.string());
  Reader r({std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()}, path.string());
  if (r.bytes(4) != std::string(kParamMagic, 4)) throw FormatError(path.string() + ": bad magic");
  const std::uint32_t count = r.u32();
  std::map<std::string, Tensor> loaded;
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::string name = r.bytes(r.u32());
    Shape s;
    s.n = static_cast<int>(r.u32());
    s.c = static_cast<int>(r.u32());
    s.z = static_cast<int>(r.u32());
    s.y = static_cast<int>(r.u32());
    s.x = static_cast<int>(r.u32());
    Tensor t(s);
    for (std::size_t k = 0; k < t.numel(); ++k) t[k] = std::bit_cast<double>(r.u64());
    loaded.emplace(name, std::move(t));
  }
  if (!r.done()) throw FormatError(path.string() + ": trailing bytes");
  for (const auto& [name, t] : tensors) {
    auto it = loaded.find(name);
    if (it == loaded.end()) throw FormatError(path.string() + ": missing tensor " + name);
    if (!(it->second.shape() == t->shape())) {
      throw FormatError(path.string() + ": tensor " + name + " has shape " + it->second.shape().str() + ", expected " +
                        t->shape().str());
    }
    *t = std::move(it->second);
  }
}

void save_checkpoint(const std::filesystem::path& dir, Segmentor& model, const CheckpointInfo& info) {
  save_impl(dir, model, info);
}

void save_checkpoint(const std::filesystem::path& dir, Gae& model, const CheckpointInfo& info) {
  save_impl(dir, model, info);
}

std::unique_ptr<Segmentor> load_segmentor(const std::filesystem::path& dir, CheckpointInfo* info) {
  const auto arch = read_model_json(dir, "segmentor", info);
  SegmentorConfig cfg;
  common_from(arch, cfg);
  auto model = std::make_unique<Segmentor>(cfg);
  read_tensors(dir / "params.bin", model->store().named_tensors());
  return model;
}

std::unique_ptr<Gae> load_gae(const std::filesystem::path& dir, CheckpointInfo* info) {
  const auto arch = read_model_json(dir, "gae", info);
  GaeConfig cfg;
  common_from(arch, cfg);
  cfg.features = arch.at("features");
  auto model = std::make_unique<Gae>(cfg);
  read_tensors(dir / "params.bin", model->store().named_tensors());
  return model;
}

}  // namespace geoprior::nn
