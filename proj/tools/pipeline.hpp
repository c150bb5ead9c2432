#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "geoprior/label_noise.hpp"
#include "geoprior/nn/models.hpp"
#include "geoprior/training.hpp"

namespace geoprior::pipeline {

namespace fs = std::filesystem;

/// Invalid flags or configuration values. Exit code 2.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// An upstream stage is missing or its outputs changed since it ran. Exit code 3.
class StageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Worker count from GEOPRIOR_THREADS (default: hardware concurrency, at least 1).
int worker_threads();

/// Runs fn(i) for i in [0, n) on up to `threads` workers. Rethrows the first failure.
void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn);

/// FNV-1a of a file's bytes as 16 hex digits.
std::string hash_file(const fs::path& path);
/// Hash of the files a stage wrote, listed in its stage.json.
std::string hash_outputs(const fs::path& stage_dir);

struct SynthOptions {
  int n = 150;
  std::array<int, 3> split{80, 20, 50};
  std::uint64_t seed = 7;
  fs::path out;
};
void run_synth(const SynthOptions& o);

struct CorruptOptions {
  fs::path data;
  NoiseLevel level = NoiseLevel::L1;
  std::uint64_t seed = 7;
  fs::path out;
};
void run_corrupt(const CorruptOptions& o);

enum class MapKind { Geodesic, Binary };
std::string to_string(MapKind k);
MapKind parse_map_kind(const std::string& s);

struct GeodesicOptions {
  fs::path labels;  // corrupt stage output
  MapKind kind = MapKind::Geodesic;
  fs::path out;
};
void run_geodesic(const GeodesicOptions& o);

struct TrainGaeOptions {
  fs::path maps;  // geodesic stage output
  fs::path out;
  TrainConfig cfg;
  nn::GaeConfig arch;
};
void run_train_gae(const TrainGaeOptions& o);

struct TrainSegOptions {
  fs::path labels;  // corrupt stage output; the dataset is found through it
  std::optional<fs::path> gae;  // train-gae run, required unless the prior is none
  fs::path out;
  TrainConfig cfg;
  nn::SegmentorConfig arch;
};
void run_train_seg(const TrainSegOptions& o);

struct EvalOptions {
  fs::path run;  // train-seg run
};
/// Scores the test split against clean labels: eval.csv and scores.json in the run.
void run_eval(const EvalOptions& o);

struct ReportOptions {
  std::vector<fs::path> runs;
  fs::path out;  // directory for report.csv and curves/
};
/// Pools per-image test scores by (method, noise level), adds upper-boundary rows for
/// every noisy label set seen, writes report.csv and one SVG learning curve per run.
void run_report(const ReportOptions& o);

/// Learning curve (training L_tot per step, validation mean DI per epoch) as SVG.
std::string learning_curve_svg(const std::string& title, const std::string& log_csv);

}  // namespace geoprior::pipeline
