#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "geoprior/grid.hpp"
#include "geoprior/label_noise.hpp"
#include "geoprior/nn/models.hpp"

namespace geoprior {

enum class PriorMode { None, Binary, Geodesic };
std::string to_string(PriorMode m);
PriorMode parse_prior_mode(const std::string& s);

struct TrainConfig {
  int epochs = 50;
  int batch_size = 4;
  double lr = 1e-3;
  double lambda_gae = 1.0;
  int patience = 10;
  std::uint64_t seed = 7;
  PriorMode mode = PriorMode::Geodesic;
  NoiseLevel noise = NoiseLevel::Clean;
  /// Stop once this many optimizer steps ran (0: no limit).
  long max_steps = 0;
  /// Stop as soon as the monitored validation dice exceeds this value.
  std::optional<double> stop_at_dice;

  void validate() const;
};

/// Conversion between grids and (1, C, nz, ny, nx) tensors.
nn::Tensor to_tensor(const Volume& v);
nn::Tensor to_tensor(const MultiChannelMap& m);
std::vector<std::uint8_t> to_targets(const LabelMap& labels);
/// Per-voxel argmax over channels of sample `n`.
LabelMap argmax_labels(const nn::Tensor& scores, int n, const Spacing& spacing);

/// Autoencoder example: prior channels in, labels to reconstruct out.
struct GaeSample {
  nn::Tensor maps;  // (1, 3, nz, ny, nx)
  LabelMap target;
};

/// Segmentor example. `target` is what the loss sees (possibly noisy); `reference`
/// is what validation scores against (clean); `prior` feeds the frozen encoder.
struct SegSample {
  nn::Tensor image;  // (1, 1, nz, ny, nx)
  LabelMap target;
  LabelMap reference;
  nn::Tensor prior;  // (1, 3, nz, ny, nx); empty when no prior is used
};

struct EpochRecord {
  int epoch = 0;
  long step = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;            // reconstruction CE for the autoencoder, total loss otherwise
  std::array<double, 3> val_dice{};  // LV, RV, MYO
  double val_mean_dice = 0.0;
};

struct StepRecord {
  long step = 0;
  int epoch = 0;
  double l_seg = 0.0;
  double l_gae = 0.0;
  double l_tot = 0.0;
  std::optional<std::array<double, 3>> val_dice;  // set on the last step of an epoch
};

struct TrainHistory {
  std::vector<StepRecord> steps;
  std::vector<EpochRecord> epochs;
  int best_epoch = 0;
  long steps_run = 0;
  bool early_stopped = false;
};

struct GaeTrainResult {
  std::unique_ptr<nn::Gae> model;  // best-validation weights, frozen
  TrainHistory history;
};

/// Trains on `train`, early-stops on validation reconstruction loss. Throws
/// nn::NumericalError on a non-finite loss.
GaeTrainResult train_gae(const std::vector<GaeSample>& train, const std::vector<GaeSample>& val,
                         const nn::GaeConfig& arch, const TrainConfig& cfg);

struct LossParts {
  double l_seg = 0.0;
  double l_gae = 0.0;
  double l_tot = 0.0;
};

/// softmax_ce(logits, target) + lambda * mse(feat_p, feat_g).
nn::Var total_loss(const nn::Var& logits, const std::vector<std::uint8_t>& target, const nn::Var& feat_p,
                   const nn::Var& feat_g, double lambda, LossParts* parts = nullptr);

/// Foreground probabilities (channels 1..3 of the softmax) for the prior encoder.
nn::Var foreground_probabilities(const nn::Var& logits);

struct SegTrainResult {
  std::unique_ptr<nn::Segmentor> model;  // best-validation weights
  TrainHistory history;
};

/// Adam on the coupled loss over shuffled minibatches. `prior` must be a frozen
/// autoencoder unless cfg.mode is None; it is never modified.
SegTrainResult train_segmentor(const std::vector<SegSample>& train, const std::vector<SegSample>& val,
                               const nn::SegmentorConfig& arch, const TrainConfig& cfg, nn::Gae* prior);

/// Argmax predictions for each image, evaluated in inference mode.
std::vector<LabelMap> predict(nn::Segmentor& model, const std::vector<nn::Tensor>& images, const Spacing& spacing);

/// Mean per-class dice of the autoencoder reconstruction against its targets.
std::array<double, 3> reconstruction_dice(nn::Gae& model, const std::vector<GaeSample>& samples);

/// Writes step, L_seg, L_gae, L_tot, val_DI_LV, val_DI_RV, val_DI_MYO rows.
std::string history_csv(const TrainHistory& h);

}  // namespace geoprior
