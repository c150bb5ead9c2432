#include <cstdio>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#ifdef __GLIBC__
#include <malloc.h>
#endif

#include "geoprior/nn/tensor.hpp"
#include "pipeline.hpp"

namespace gp = geoprior;
namespace pl = geoprior::pipeline;

namespace {

constexpr int kExitBadConfig = 2;
constexpr int kExitMissingStage = 3;
constexpr int kExitNumerical = 4;

std::array<int, 3> parse_split(const std::string& s) {
  std::array<int, 3> out{};
  std::stringstream ss(s);
  std::string part;
  int k = 0;
  while (std::getline(ss, part, ',')) {
    if (k == 3) throw pl::ConfigError("--split takes three comma-separated counts");
    try {
      out[k++] = std::stoi(part);
    } catch (const std::logic_error&) {
      throw pl::ConfigError("--split: '" + part + "' is not an integer");
    }
  }
  if (k != 3) throw pl::ConfigError("--split takes three comma-separated counts");
  return out;
}

struct TrainFlags {
  gp::TrainConfig cfg;
  gp::nn::DenseBlockConfig block;
  int blocks = 2;
  double alpha = 0.1;
  double stop_at = -1.0;

  void add(CLI::App* app) {
    app->add_option("--seed", cfg.seed, "Run seed (initialization and minibatch order)");
    app->add_option("--epochs", cfg.epochs, "Maximum epochs")->capture_default_str();
    app->add_option("--batch-size", cfg.batch_size, "Minibatch size")->capture_default_str();
    app->add_option("--lr", cfg.lr, "Adam learning rate")->capture_default_str();
    app->add_option("--patience", cfg.patience, "Early-stopping patience in epochs")->capture_default_str();
    app->add_option("--max-steps", cfg.max_steps, "Stop after this many steps (0: no limit)");
    app->add_option("--stop-at-dice", stop_at, "Stop once validation mean dice exceeds this value");
    app->add_option("--blocks", blocks, "Dense blocks per path")->capture_default_str();
    app->add_option("--layers", block.layers, "Layers per dense block")->capture_default_str();
    app->add_option("--growth", block.growth, "Growth rate k")->capture_default_str();
    app->add_option("--first-filters", block.first_filters, "Filters of the first convolution")->capture_default_str();
    app->add_option("--alpha", alpha, "Leaky ReLU slope")->capture_default_str();
  }

  gp::TrainConfig config() const {
    gp::TrainConfig c = cfg;
    if (stop_at >= 0.0) c.stop_at_dice = stop_at;
    return c;
  }

  template <typename Arch>
  Arch arch() const {
    Arch a;
    a.blocks = blocks;
    a.block = block;
    a.alpha = alpha;
    return a;
  }
};

}  // namespace

int main(int argc, char** argv) {
#ifdef __GLIBC__
  // Training allocates many short-lived multi-megabyte tensors; keep them on the heap
  // instead of mapping and faulting fresh pages each step.
  mallopt(M_MMAP_THRESHOLD, 1 << 30);
  mallopt(M_TRIM_THRESHOLD, 1 << 30);
#endif

  CLI::App app{"Weakly supervised cardiac segmentation with a geodesic shape prior"};
  app.require_subcommand(1);

  pl::SynthOptions synth;
  std::string split = "80,20,50";
  auto* c_synth = app.add_subcommand("synth", "Generate a phantom dataset");
  c_synth->add_option("--n", synth.n, "Number of phantoms")->capture_default_str();
  c_synth->add_option("--split", split, "train,val,test counts")->capture_default_str();
  c_synth->add_option("--seed", synth.seed, "Dataset seed")->capture_default_str();
  c_synth->add_option("--out", synth.out, "Output directory")->required();

  pl::CorruptOptions corrupt;
  std::string level = "L1";
  auto* c_corrupt = app.add_subcommand("corrupt", "Synthesize inexpert labels");
  c_corrupt->add_option("--data", corrupt.data, "synth output")->required();
  c_corrupt->add_option("--level", level, "clean, L1 or L2")->capture_default_str();
  c_corrupt->add_option("--seed", corrupt.seed, "Noise seed")->capture_default_str();
  c_corrupt->add_option("--out", corrupt.out, "Output directory")->required();

  pl::GeodesicOptions geo;
  std::string kind = "geodesic";
  auto* c_geo = app.add_subcommand("geodesic", "Compute prior maps from labels");
  c_geo->add_option("--labels", geo.labels, "corrupt output")->required();
  c_geo->add_option("--kind", kind, "geodesic or binary")->capture_default_str();
  c_geo->add_option("--out", geo.out, "Output directory")->required();

  pl::TrainGaeOptions gae;
  TrainFlags gae_flags;
  int features = 64;
  auto* c_gae = app.add_subcommand("train-gae", "Train the prior autoencoder");
  c_gae->add_option("--maps", gae.maps, "geodesic output")->required();
  c_gae->add_option("--out", gae.out, "Run directory")->required();
  c_gae->add_option("--features", features, "Bottleneck length")->capture_default_str();
  gae_flags.add(c_gae);

  pl::TrainSegOptions seg;
  TrainFlags seg_flags;
  std::string prior = "geodesic";
  std::string gae_dir;
  auto* c_seg = app.add_subcommand("train-seg", "Train the segmentor");
  c_seg->add_option("--labels", seg.labels, "corrupt output used as training labels")->required();
  c_seg->add_option("--prior", prior, "none, binary or geodesic")->capture_default_str();
  c_seg->add_option("--gae", gae_dir, "train-gae run (required unless --prior none)");
  c_seg->add_option("--lambda", seg_flags.cfg.lambda_gae, "Weight of the prior term")->capture_default_str();
  c_seg->add_option("--out", seg.out, "Run directory")->required();
  seg_flags.add(c_seg);

  pl::EvalOptions eval;
  auto* c_eval = app.add_subcommand("eval", "Score a segmentor run on the test split");
  c_eval->add_option("--run", eval.run, "train-seg run")->required();

  pl::ReportOptions report;
  std::vector<std::string> runs;
  auto* c_report = app.add_subcommand("report", "Merge evaluated runs into one table");
  c_report->add_option("runs", runs, "Run directories")->required();
  c_report->add_option("--out", report.out, "Output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitBadConfig;
  }

  try {
    if (c_synth->parsed()) {
      synth.split = parse_split(split);
      pl::run_synth(synth);
    } else if (c_corrupt->parsed()) {
      corrupt.level = gp::parse_noise_level(level);
      pl::run_corrupt(corrupt);
    } else if (c_geo->parsed()) {
      geo.kind = pl::parse_map_kind(kind);
      pl::run_geodesic(geo);
    } else if (c_gae->parsed()) {
      gae.cfg = gae_flags.config();
      gae.arch = gae_flags.arch<gp::nn::GaeConfig>();
      gae.arch.features = features;
      pl::run_train_gae(gae);
    } else if (c_seg->parsed()) {
      seg.cfg = seg_flags.config();
      seg.cfg.mode = gp::parse_prior_mode(prior);
      seg.arch = seg_flags.arch<gp::nn::SegmentorConfig>();
      if (!gae_dir.empty()) seg.gae = gae_dir;
      pl::run_train_seg(seg);
    } else if (c_eval->parsed()) {
      pl::run_eval(eval);
    } else if (c_report->parsed()) {
      for (const auto& r : runs) report.runs.emplace_back(r);
      pl::run_report(report);
    }
  } catch (const pl::StageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitMissingStage;
  } catch (const gp::nn::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::invalid_argument& e) {
    std::cerr << "bad configuration: " << e.what() << "\n";
    return kExitBadConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
