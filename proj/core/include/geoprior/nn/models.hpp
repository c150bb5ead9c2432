#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "geoprior/nn/layers.hpp"

namespace geoprior::nn {

/// One stage of a symbolic shape walk.
struct StageShape {
  std::string name;
  int channels_in = 0;
  int channels_out = 0;
  int nz = 0, ny = 0, nx = 0;  // spatial size at which the stage runs
};

/// Skip-connected dense encoder-decoder producing per-voxel class logits.
struct SegmentorConfig {
  int nz = 8, ny = 32, nx = 32;
  int in_channels = 1;
  int classes = 4;
  int blocks = 2;  // dense blocks per path
  DenseBlockConfig block;
  double alpha = 0.1;
  std::uint64_t init_seed = 1;

  /// Throws std::invalid_argument on indivisible spatial dims or invalid sizes.
  void validate() const;
  /// Channel and spatial bookkeeping of every stage, without allocating weights.
  std::vector<StageShape> stage_shapes() const;
};

/// Dense encoder, FC bottleneck of length `features`, dense decoder; no skips.
struct GaeConfig {
  int nz = 8, ny = 32, nx = 32;
  int in_channels = 3;
  int classes = 4;
  int blocks = 2;
  DenseBlockConfig block;
  int features = 64;  // L_feat
  double alpha = 0.1;
  std::uint64_t init_seed = 2;

  void validate() const;
  std::vector<StageShape> stage_shapes() const;
};

class Segmentor {
 public:
  explicit Segmentor(const SegmentorConfig& cfg);

  /// Logits (N, classes, nz, ny, nx).
  Var forward(const Var& image, bool train);
  /// Softmax of forward().
  Var probabilities(const Var& image, bool train);

  const SegmentorConfig& config() const { return cfg_; }
  ParameterStore& store() { return store_; }
  std::vector<Parameter*> parameters() const { return store_.parameters(); }

 private:
  SegmentorConfig cfg_;
  ParameterStore store_;
  std::unique_ptr<Conv3dLayer> first_;
  std::vector<DenseBlock> down_;
  std::vector<DenseBlock> up_;
  std::unique_ptr<Conv3dLayer> last_;
};

class Gae {
 public:
  explicit Gae(const GaeConfig& cfg);

  /// (N, features, 1, 1, 1).
  Var encode(const Var& maps, bool train);
  /// Logits (N, classes, nz, ny, nx).
  Var decode(const Var& features, bool train);
  Var forward(const Var& maps, bool train) { return decode(encode(maps, train), train); }

  /// Stops gradient accumulation into every parameter. Inputs still receive gradients.
  void freeze();
  bool frozen() const { return frozen_; }

  const GaeConfig& config() const { return cfg_; }
  ParameterStore& store() { return store_; }
  std::vector<Parameter*> parameters() const { return store_.parameters(); }

 private:
  GaeConfig cfg_;
  ParameterStore store_;
  bool frozen_ = false;
  int bottleneck_channels_ = 0;
  int bottleneck_y_ = 0, bottleneck_x_ = 0;
  std::unique_ptr<Conv3dLayer> first_;
  std::vector<DenseBlock> down_;
  std::unique_ptr<LinearLayer> to_features_;
  std::unique_ptr<LinearLayer> from_features_;
  std::vector<DenseBlock> up_;
  std::unique_ptr<Conv3dLayer> last_;
};

/// FNV-1a over the raw bytes of every named tensor, in order.
std::uint64_t checksum(ParameterStore& store);

struct CheckpointInfo {
  long step = 0;
  std::string rng_state;  // textual engine state; empty when not tracked
};

/// model.json (architecture + step + rng state) and params.bin in `dir`.
void save_checkpoint(const std::filesystem::path& dir, Segmentor& model, const CheckpointInfo& info = {});
void save_checkpoint(const std::filesystem::path& dir, Gae& model, const CheckpointInfo& info = {});
std::unique_ptr<Segmentor> load_segmentor(const std::filesystem::path& dir, CheckpointInfo* info = nullptr);
std::unique_ptr<Gae> load_gae(const std::filesystem::path& dir, CheckpointInfo* info = nullptr);

/// Raw parameter payload: "GPP1", u32 count, then per tensor: u32 name length, name,
/// 5 x u32 shape, f64 little-endian values.
void write_tensors(const std::filesystem::path& path, const std::vector<std::pair<std::string, Tensor*>>& tensors);
/// Fills tensors by name; every name must be present with a matching shape.
void read_tensors(const std::filesystem::path& path, const std::vector<std::pair<std::string, Tensor*>>& tensors);

}  // namespace geoprior::nn
