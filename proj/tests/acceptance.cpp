// Acceptance suite: one PASS/FAIL line per criterion, with the measured numbers.
// Exit status is 0 only when every selected criterion passes.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "geoprior/eikonal.hpp"
#include "geoprior/geodesic.hpp"
#include "geoprior/label_noise.hpp"
#include "geoprior/metrics.hpp"
#include "geoprior/nn/layers.hpp"
#include "geoprior/nn/models.hpp"
#include "geoprior/synth.hpp"
#include "geoprior/training.hpp"
#include "pipeline.hpp"
#include "support.hpp"

using namespace geoprior;
using nn::Shape;
using nn::Tensor;
using nn::Var;
namespace gt = geoprior::testing;
namespace pl = geoprior::pipeline;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  // Records a sub-check; the criterion passes only if all of them do.
  void check(bool ok, const std::string& what) {
    pass = pass && ok;
    if (detail.tellp() > 0) detail << "; ";
    detail << what << (ok ? "" : " [FAIL]");
  }
};

std::string fmt(double v, int digits = 4) {
  std::ostringstream s;
  s << std::setprecision(digits) << v;
  return s.str();
}

class Stopwatch {
 public:
  double wall() const { return std::chrono::duration<double>(std::chrono::steady_clock::now() - wall_).count(); }
  double cpu() const { return static_cast<double>(std::clock() - cpu_) / CLOCKS_PER_SEC; }

 private:
  std::chrono::steady_clock::time_point wall_ = std::chrono::steady_clock::now();
  std::clock_t cpu_ = std::clock();
};

std::string budget(const Stopwatch& w, double limit_s) {
  return "cpu " + fmt(w.cpu(), 3) + " s (limit " + fmt(limit_s, 4) + " s)";
}

Mask full(Dims d) { return Mask(d, Spacing(), 1); }

// ---------------------------------------------------------------------------
// 1. Eikonal

void eikonal(Outcome& out) {
  {
    const Stopwatch w;
    const Dims d(16, 8, 4);
    SeedSet seeds;
    for (int z = 0; z < d.nz; ++z)
      for (int y = 0; y < d.ny; ++y) seeds.push_back({0, y, z});
    const TimeMap t = fast_march(full(d), seeds, std::monostate{}, Spacing());
    double worst = 0.0;
    for (int z = 0; z < d.nz; ++z)
      for (int y = 0; y < d.ny; ++y)
        for (int x = 0; x < d.nx; ++x) worst = std::max(worst, std::abs(t.at(x, y, z) - x));
    out.check(worst <= 1e-9 && w.cpu() < 1.0, "planar max err " + fmt(worst) + " (<= 1e-9), " + budget(w, 1));
  }
  {
    const Stopwatch w;
    const Dims d(33, 33, 33);
    const TimeMap t = fast_march(full(d), {{16, 16, 16}}, std::monostate{}, Spacing());
    double sum = 0.0, worst = 0.0;
    std::size_t n = 0;
    for (int z = 0; z < 33; ++z)
      for (int y = 0; y < 33; ++y)
        for (int x = 0; x < 33; ++x) {
          const double r = std::sqrt(double((x - 16) * (x - 16) + (y - 16) * (y - 16) + (z - 16) * (z - 16)));
          if (r > 12.0) continue;
          const double e = std::abs(t.at(x, y, z) - r);
          sum += e;
          worst = std::max(worst, e);
          ++n;
        }
    const double mean = sum / n;
    out.check(mean <= 0.15 && worst <= 1.0 && w.cpu() < 10.0,
              "point seed 33^3 r<=12: mean err " + fmt(mean) + "h (<= 0.15h), max " + fmt(worst) + "h (<= 1h), " +
                  budget(w, 10));
  }
  {
    const Stopwatch w;
    // A wall at mid-height leaves a 3-voxel gap at the far end; the tip sits on the
    // opposite side of the wall from the seed.
    const Dims d(32, 21, 3);
    Mask dom = full(d);
    for (int z = 0; z < d.nz; ++z)
      for (int x = 0; x < d.nx - 3; ++x) dom.at(x, 10, z) = 0;
    const SeedSet seeds{{0, 0, 1}};
    const Index3 tip{0, d.ny - 1, 1};
    const double fm = fast_march(dom, seeds, std::monostate{}, Spacing()).at(tip);
    const double dj = dijkstra_oracle(dom, seeds, Spacing()).at(tip);
    const double straight = std::hypot(tip.x, tip.y);
    const double rel = std::abs(fm - dj) / dj;
    out.check(rel <= 0.05 && fm <= dj + 0.5 && fm >= straight && w.cpu() < 10.0,
              "C-corridor tip FM " + fmt(fm, 6) + " vs oracle " + fmt(dj, 6) + " (rel " + fmt(rel) +
                  " <= 0.05, <= oracle+0.5h, >= straight " + fmt(straight, 4) + "), " + budget(w, 10));
  }
}

// ---------------------------------------------------------------------------
// 2. Gradients

Tensor randt(Shape s, std::uint64_t seed, double scale = 1.0) {
  Rng rng(seed);
  return gt::random_tensor(s, rng, scale);
}

std::vector<std::uint8_t> random_targets(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<std::uint8_t> t(n);
  for (auto& v : t) v = static_cast<std::uint8_t>(rng.uniform_int(0, 3));
  return t;
}

void gradients(Outcome& out) {
  const Stopwatch w;
  constexpr double kTol = 1e-4;
  const Shape shapes[] = {{1, 1, 1, 2, 2}, {2, 3, 2, 4, 6}, {1, 2, 3, 6, 4}, {3, 2, 1, 2, 2}, {1, 4, 2, 2, 8}};

  struct OpStats {
    double worst = 0.0;
    int shapes = 0;
  };
  std::map<std::string, OpStats> ops;
  auto record = [&](const std::string& op, const gt::GradCheck& g) {
    auto& s = ops[op];
    s.worst = std::max(s.worst, g.max_rel_error);
    ++s.shapes;
  };
  auto proj = [](auto op, Tensor r) {
    return [op, r](const std::vector<Var>& v) { return gt::project(op(v), r); };
  };

  std::uint64_t seed = 100;
  for (const Shape& s : shapes) {
    const int cout = 1 + static_cast<int>(seed % 3);
    const Shape half{s.n, s.c, s.z, s.y / 2, s.x / 2};
    const Shape twice{s.n, s.c, s.z, 2 * s.y, 2 * s.x};
    const Shape flat{s.n, static_cast<int>(s.per_sample()), 1, 1, 1};
    const Shape wide{s.n, s.c + 2, s.z, s.y, s.x};
    const Shape cs{s.c, 1, 1, 1, 1};
    const Tensor r = randt(s, seed + 1000);

    record("conv3d", gt::check_gradients(
                         proj([](const std::vector<Var>& v) { return nn::conv3d(v[0], v[1], v[2]); },
                              randt({s.n, cout, s.z, s.y, s.x}, seed + 1001)),
                         {randt(s, seed), randt({cout, s.c, 3, 3, 3}, seed + 1, 0.5), randt({cout, 1, 1, 1, 1}, seed + 2)}));
    record("maxpool_xy", gt::check_gradients(
                             proj([](const std::vector<Var>& v) { return nn::maxpool_xy(v[0]); }, randt(half, seed + 1002)),
                             {randt(s, seed)}));
    record("upsample_bilinear_xy",
           gt::check_gradients(
               proj([](const std::vector<Var>& v) { return nn::upsample_bilinear_xy(v[0]); }, randt(twice, seed + 1003)),
               {randt(s, seed)}));
    for (bool train : {true, false}) {
      // One value per channel has no batch variance to differentiate.
      if (train && s.numel() / s.c == 1) continue;
      const nn::BatchNormState st{randt(cs, seed + 3), Tensor(cs, 1.5)};
      record(train ? "batchnorm(train)" : "batchnorm(eval)",
             gt::check_gradients(proj(
                                     [st, train](const std::vector<Var>& v) {
                                       nn::BatchNormState local = st;
                                       return nn::batchnorm(v[0], v[1], v[2], local, train);
                                     },
                                     r),
                                 {randt(s, seed, 2.0), randt(cs, seed + 1), randt(cs, seed + 2)}));
    }
    record("leaky_relu", gt::check_gradients(
                             proj([](const std::vector<Var>& v) { return nn::leaky_relu(v[0], 0.1); }, r), {randt(s, seed)}));
    record("add", gt::check_gradients(proj([](const std::vector<Var>& v) { return nn::add(v[0], v[1]); }, r),
                                      {randt(s, seed), randt(s, seed + 1)}));
    record("scale", gt::check_gradients(proj([](const std::vector<Var>& v) { return nn::scale(v[0], -1.7); }, r),
                                        {randt(s, seed)}));
    record("reshape", gt::check_gradients(
                          proj([flat](const std::vector<Var>& v) { return nn::reshape(v[0], flat); }, r.reshaped(flat)),
                          {randt(s, seed)}));
    record("concat_channels",
           gt::check_gradients(proj([](const std::vector<Var>& v) { return nn::concat_channels(v); },
                                    randt({s.n, 2 * s.c + 2, s.z, s.y, s.x}, seed + 1004)),
                               {randt(s, seed), randt(wide, seed + 1)}));
    record("slice_channels",
           gt::check_gradients(proj([](const std::vector<Var>& v) { return nn::slice_channels(v[0], 1, 3); },
                                    randt({s.n, 2, s.z, s.y, s.x}, seed + 1005)),
                               {randt(wide, seed)}));
    record("softmax_channels", gt::check_gradients(
                                   proj([](const std::vector<Var>& v) { return nn::softmax_channels(v[0]); }, r),
                                   {randt(s, seed)}));
    const int fin = static_cast<int>(s.per_sample()), fout = 1 + static_cast<int>(seed % 4);
    record("fully_connected",
           gt::check_gradients(proj([](const std::vector<Var>& v) { return nn::fully_connected(v[0], v[1], v[2]); },
                                    randt({s.n, fout, 1, 1, 1}, seed + 1006)),
                               {randt(s, seed), randt({fout, fin, 1, 1, 1}, seed + 1), randt({fout, 1, 1, 1, 1}, seed + 2)}));
    const auto target = random_targets(static_cast<std::size_t>(s.n) * s.spatial(), seed);
    record("softmax_ce", gt::check_gradients([&](const std::vector<Var>& v) { return nn::softmax_ce(v[0], target); },
                                             {randt({s.n, 4, s.z, s.y, s.x}, seed, 2.0)}));
    record("mse", gt::check_gradients([](const std::vector<Var>& v) { return nn::mse(v[0], v[1]); },
                                      {randt(s, seed), randt(s, seed + 1)}));
    ++seed;
  }

  // L_tot = CE + lambda * MSE(Enc(P), Enc(G)) through a frozen encoder, w.r.t. the logits.
  const std::array<std::array<int, 3>, 5> fields{{{1, 4, 4}, {2, 4, 8}, {1, 8, 4}, {3, 4, 4}, {2, 8, 8}}};
  for (const auto& f : fields) {
    nn::GaeConfig g;
    g.nz = f[0];
    g.ny = f[1];
    g.nx = f[2];
    g.blocks = 1;
    g.block = {1, 2, 3};
    g.features = 5;
    g.init_seed = seed;
    nn::Gae gae(g);
    gae.freeze();
    const int n = 1 + static_cast<int>(seed % 2);
    const auto target = random_targets(static_cast<std::size_t>(n) * f[0] * f[1] * f[2], seed);
    const Tensor feat_g = randt({n, 5, 1, 1, 1}, seed + 1);
    record("L_tot via frozen encoder",
           gt::check_gradients(
               [&](const std::vector<Var>& v) {
                 const Var feat_p = gae.encode(foreground_probabilities(v[0]), false);
                 return total_loss(v[0], target, feat_p, nn::leaf(feat_g), 1.0);
               },
               {randt({n, 4, f[0], f[1], f[2]}, seed + 2, 2.0)}));
    ++seed;
  }

  double worst = 0.0;
  std::string worst_op;
  int min_shapes = 1 << 30;
  for (const auto& [name, s] : ops) {
    if (s.worst >= worst) worst = s.worst, worst_op = name;
    min_shapes = std::min(min_shapes, s.shapes);
  }
  out.check(worst < kTol, std::to_string(ops.size()) + " ops, worst rel err " + fmt(worst, 3) + " (" + worst_op +
                              ", < 1e-4)");
  out.check(min_shapes >= 5, "min shapes per op " + std::to_string(min_shapes) + " (>= 5)");
  out.check(w.cpu() < 120.0, budget(w, 120));
}

// ---------------------------------------------------------------------------
// 3. Dense-block channel arithmetic

void architecture(Outcome& out) {
  const Stopwatch w;
  int ok = 0, total = 0;
  std::string paper;
  for (auto [cin, layers, k] : {std::array{16, 4, 16}, std::array{8, 2, 4}, std::array{8, 4, 4}, std::array{3, 1, 1},
                                std::array{5, 3, 2}, std::array{24, 2, 4}}) {
    nn::ParameterStore store;
    Rng rng(1);
    nn::DenseBlock block(store, "b", cin, nn::DenseBlockConfig{layers, k, 8}, 0.1, rng);
    const auto y = block(nn::leaf(randt({1, cin, 1, 2, 2}, 7)), true);
    const int measured = y.all.shape().c;
    ++total;
    if (measured == cin + layers * k && block.channels_out() == measured) ++ok;
    if (cin == 16 && layers == 4 && k == 16) paper = std::to_string(measured);
  }
  out.check(ok == total, std::to_string(ok) + "/" + std::to_string(total) + " blocks equal c_in + L*k");
  out.check(paper == "80", "16 in, L=4, k=16 -> " + paper + " (80)");

  nn::SegmentorConfig s;
  s.nz = 10;
  s.ny = 208;
  s.nx = 208;
  s.blocks = 4;
  s.block = {4, 16, 16};
  const auto shapes = s.stage_shapes();
  out.check(shapes.back().channels_out == 4 && shapes.back().ny == 208,
            "4-block k=16 L=4 segmentor graph shape-checks (" + std::to_string(shapes.size()) + " stages)");
  out.check(w.cpu() < 1.0, budget(w, 1));
}

// ---------------------------------------------------------------------------
// 4. Noise calibration

void noise_calibration(Outcome& out) {
  const Stopwatch w;
  const PhantomSpec spec;
  double l1 = 0.0, l2 = 0.0;
  constexpr int kN = 100;
  for (int i = 0; i < kN; ++i) {
    const Phantom p = generate_phantom(spec, i);
    auto mean_dice = [&](NoiseLevel level) {
      const ClassScores s = upper_boundary(synthesize_noisy(p.labels, NoiseSpec::defaults(level), i), p.labels);
      return (s.dice[0] + s.dice[1] + s.dice[2]) / 3.0;
    };
    l1 += mean_dice(NoiseLevel::L1);
    l2 += mean_dice(NoiseLevel::L2);
  }
  l1 /= kN;
  l2 /= kN;
  out.check(l1 >= 0.82 && l1 <= 0.88, "L1 mean DI " + fmt(l1) + " in [0.82, 0.88]");
  out.check(l2 >= 0.78 && l2 <= 0.85, "L2 mean DI " + fmt(l2) + " in [0.78, 0.85]");
  out.check(l2 < l1, "L2 < L1");
  out.check(w.cpu() < 60.0, budget(w, 60));
}

// ---------------------------------------------------------------------------
// 5. Metric identities

void metric_identities(Outcome& out) {
  const Stopwatch w;
  Rng rng(11);
  int self_ok = 0;
  for (int i = 0; i < 100; ++i) {
    const Dims d(rng.uniform_int(2, 16), rng.uniform_int(2, 16), rng.uniform_int(1, 6));
    const Spacing s(rng.uniform(0.5, 2.0), rng.uniform(0.5, 2.0), rng.uniform(0.5, 5.0));
    Mask a = gt::random_mask(d, s, rng.uniform(0.05, 0.6), rng);
    a[0] = 1;  // never empty
    const auto h = hausdorff(a, a);
    if (dice(a, a) == 1.0 && h && *h == 0.0) ++self_ok;
  }
  out.check(self_ok == 100, "dice(A,A)=1 and HD(A,A)=0 on " + std::to_string(self_ok) + "/100 masks");

  double worst_shift = 0.0;
  const Dims d(24, 20, 10);
  const std::array<Index3, 4> shifts{{{3, 0, 0}, {0, 4, 0}, {2, 3, 1}, {5, 1, 3}}};
  for (const Spacing s : {Spacing(1, 1, 1), Spacing(2, 1, 1)}) {
    const Mask a = gt::box(d, s, {3, 4, 1}, {9, 10, 4});
    for (const Index3& t : shifts) {
      const Mask b = gt::box(d, s, {3 + t.x, 4 + t.y, 1 + t.z}, {9 + t.x, 10 + t.y, 4 + t.z});
      const double expected = std::sqrt(std::pow(t.x * s[0], 2) + std::pow(t.y * s[1], 2) + std::pow(t.z * s[2], 2));
      worst_shift = std::max(worst_shift, std::abs(hausdorff(a, b).value() - expected));
    }
  }
  out.check(worst_shift <= 1e-9, "translated box HD max |HD - shift| " + fmt(worst_shift) + " mm");

  double worst_brute = 0.0;
  for (int i = 0; i < 20; ++i) {
    const Dims dd(rng.uniform_int(3, 10), rng.uniform_int(3, 10), rng.uniform_int(1, 4));
    const Spacing s(rng.uniform(0.5, 2.0), rng.uniform(0.5, 2.0), rng.uniform(0.5, 5.0));
    Mask a = gt::random_mask(dd, s, 0.2, rng), b = gt::random_mask(dd, s, 0.2, rng);
    a[0] = 1;
    b[b.size() - 1] = 1;
    worst_brute = std::max(worst_brute, std::abs(hausdorff(a, b).value() - gt::brute_hausdorff(a, b).value()));
  }
  out.check(worst_brute <= 1e-9, "fast vs brute HD on 20 masks: max diff " + fmt(worst_brute) + " mm");
  out.check(w.cpu() < 60.0, budget(w, 60));
}

// ---------------------------------------------------------------------------
// 6. Capacity oracles

void capacity(Outcome& out) {
  const Stopwatch w;
  const PhantomSpec spec;
  {
    const Phantom p = generate_phantom(spec, 0);
    const std::vector<SegSample> one{{to_tensor(p.image), p.labels, p.labels, {}}};
    TrainConfig cfg;
    cfg.mode = PriorMode::None;
    cfg.batch_size = 1;
    cfg.epochs = 2000;
    cfg.patience = 2000;
    cfg.max_steps = 2000;
    cfg.stop_at_dice = 0.95;
    const auto r = train_segmentor(one, one, nn::SegmentorConfig{}, cfg, nullptr);
    double best = 0.0;
    for (const auto& e : r.history.epochs) best = std::max(best, e.val_mean_dice);
    out.check(best > 0.95, "single-phantom DI " + fmt(best) + " (> 0.95) after " + std::to_string(r.history.steps_run) +
                               " steps (<= 2000)");
  }
  {
    std::vector<GaeSample> ten;
    for (int i = 0; i < 10; ++i) {
      const Phantom p = generate_phantom(spec, i);
      ten.push_back({to_tensor(compose_channels(p.labels).map), p.labels});
    }
    TrainConfig cfg;
    cfg.epochs = 5000;
    cfg.patience = 5000;
    cfg.max_steps = 5000;
    cfg.stop_at_dice = 0.90;
    const auto r = train_gae(ten, ten, nn::GaeConfig{}, cfg);
    double best = 0.0;
    for (const auto& e : r.history.epochs) best = std::max(best, e.val_mean_dice);
    out.check(best > 0.90, "10-phantom autoencoder reconstruction DI " + fmt(best) + " (> 0.90) after " +
                               std::to_string(r.history.steps_run) + " steps (<= 5000)");
  }
  out.check(w.cpu() < 900.0, budget(w, 900));
}

// ---------------------------------------------------------------------------
// 7. L2 ordering

struct RunSummary {
  double test_di = 0.0;
  double test_hd = 0.0;
  double val_di = 0.0;
};

RunSummary summarize(const fs::path& run) {
  std::ifstream in(run / "scores.json");
  const auto doc = nlohmann::json::parse(in);
  std::vector<ClassScores> scores;
  for (const auto& img : doc.at("images")) {
    ClassScores s;
    for (int k = 0; k < 3; ++k) {
      s.dice[k] = img.at("dice").at(k);
      if (!img.at("hd").at(k).is_null()) s.hd[k] = img.at("hd").at(k).get<double>();
    }
    scores.push_back(s);
  }
  const ClassRow ave = aggregate(scores).rows.back();
  std::ifstream st(run / "stage.json");
  const auto stage = nlohmann::json::parse(st);
  const auto& vd = stage.at("val_dice");
  return {ave.di_mean, ave.hd_mean, (vd.at(0).get<double>() + vd.at(1).get<double>() + vd.at(2).get<double>()) / 3.0};
}

void l2_ordering(Outcome& out, const fs::path& work) {
  const fs::path root = work / "l2";
  fs::remove_all(root);
  fs::create_directories(root);
  const Stopwatch w;
  pl::run_synth({.n = 150, .split = {80, 20, 50}, .seed = 7, .out = root / "data"});
  pl::run_corrupt({.data = root / "data", .level = NoiseLevel::L2, .seed = 7, .out = root / "L2"});
  pl::run_geodesic({.labels = root / "L2", .kind = pl::MapKind::Geodesic, .out = root / "maps_geodesic"});
  pl::run_geodesic({.labels = root / "L2", .kind = pl::MapKind::Binary, .out = root / "maps_binary"});
  for (const char* kind : {"geodesic", "binary"}) {
    TrainConfig cfg;
    cfg.seed = 1;
    pl::run_train_gae({.maps = root / (std::string("maps_") + kind), .out = root / (std::string("gae_") + kind),
                       .cfg = cfg, .arch = {}});
  }
  const double prep_cpu = w.cpu();

  const Stopwatch runs;
  const std::array<std::uint64_t, 3> seeds{1, 2, 3};
  std::map<std::string, std::vector<RunSummary>> by_mode;
  for (std::uint64_t seed : seeds) {
    for (const char* mode : {"none", "binary", "geodesic"}) {
      TrainConfig cfg;
      cfg.seed = seed;
      cfg.mode = parse_prior_mode(mode);
      const fs::path run = root / ("seg_" + std::string(mode) + "_" + std::to_string(seed));
      std::optional<fs::path> gae;
      if (cfg.mode != PriorMode::None) gae = root / ("gae_" + std::string(mode));
      pl::run_train_seg({.labels = root / "L2", .gae = gae, .out = run, .cfg = cfg, .arch = {}});
      pl::run_eval({.run = run});
      by_mode[mode].push_back(summarize(run));
      const auto& s = by_mode[mode].back();
      std::cout << "  [7] seed " << seed << " " << mode << ": test DI " << fmt(s.test_di) << ", test HD "
                << fmt(s.test_hd) << " mm, val DI " << fmt(s.val_di) << "\n"
                << std::flush;
    }
  }
  const double runs_cpu = runs.cpu();
  pl::run_report({.runs = [&] {
                    std::vector<fs::path> r;
                    for (const auto& e : fs::directory_iterator(root))
                      if (e.path().filename().string().rfind("seg_", 0) == 0) r.push_back(e.path());
                    std::sort(r.begin(), r.end());
                    return r;
                  }(),
                  .out = root / "report"});

  auto mean = [](const std::vector<RunSummary>& v, double RunSummary::*f) {
    double s = 0.0;
    for (const auto& r : v) s += r.*f;
    return s / v.size();
  };
  std::string per_seed;
  bool every_seed = true;
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    const double g = by_mode["geodesic"][i].test_di, b = by_mode["none"][i].test_di;
    every_seed = every_seed && g > b;
    per_seed += (i ? ", " : "") + fmt(g) + ">" + fmt(b);
  }
  out.check(every_seed, "geodesic > none test DI per seed: " + per_seed);
  const double geo = mean(by_mode["geodesic"], &RunSummary::test_di), bin = mean(by_mode["binary"], &RunSummary::test_di);
  out.check(geo >= bin, "mean test DI geodesic " + fmt(geo) + " >= binary " + fmt(bin) + " (none " +
                            fmt(mean(by_mode["none"], &RunSummary::test_di)) + ")");
  const double hg = mean(by_mode["geodesic"], &RunSummary::test_hd), hn = mean(by_mode["none"], &RunSummary::test_hd);
  out.check(hg < hn, "mean test HD geodesic " + fmt(hg) + " mm < none " + fmt(hn) + " mm");
  out.check(runs_cpu <= 5400.0, "9 runs cpu " + fmt(runs_cpu, 4) + " s (limit 5400 s; data, maps and priors " +
                                    fmt(prep_cpu, 4) + " s)");
}

// ---------------------------------------------------------------------------
// 8. Reproducibility

std::string run_small_pipeline(const fs::path& root) {
  fs::remove_all(root);
  fs::create_directories(root);
  pl::run_synth({.n = 12, .split = {6, 2, 4}, .seed = 5, .out = root / "data"});
  pl::run_corrupt({.data = root / "data", .level = NoiseLevel::L2, .seed = 5, .out = root / "L2"});
  pl::run_geodesic({.labels = root / "L2", .kind = pl::MapKind::Geodesic, .out = root / "maps"});
  TrainConfig cfg;
  cfg.epochs = 2;
  cfg.seed = 5;
  pl::run_train_gae({.maps = root / "maps", .out = root / "gae", .cfg = cfg, .arch = {}});
  std::vector<fs::path> runs;
  for (const char* mode : {"none", "geodesic"}) {
    cfg.mode = parse_prior_mode(mode);
    std::optional<fs::path> gae;
    if (cfg.mode != PriorMode::None) gae = root / "gae";
    runs.push_back(root / (std::string("seg_") + mode));
    pl::run_train_seg({.labels = root / "L2", .gae = gae, .out = runs.back(), .cfg = cfg, .arch = {}});
    pl::run_eval({.run = runs.back()});
  }
  pl::run_report({.runs = runs, .out = root / "report"});
  std::ifstream in(root / "report" / "report.csv", std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

void reproducibility(Outcome& out, const fs::path& work) {
  const Stopwatch first;
  const std::string a = run_small_pipeline(work / "repro_a");
  const double once = first.cpu();
  const Stopwatch second;
  const std::string b = run_small_pipeline(work / "repro_b");
  out.check(!a.empty() && a == b, "report.csv byte-identical across two runs (" + std::to_string(a.size()) + " bytes)");
  out.detail << "; cpu " << fmt(once, 3) << " s + " << fmt(second.cpu(), 3) << " s";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app("geoprior acceptance suite");
  fs::path work = fs::temp_directory_path() / "geoprior-acceptance";
  std::vector<int> only;
  app.add_option("--work", work, "Scratch directory for pipeline runs")->capture_default_str();
  app.add_option("--only", only, "Run only these criteria (1-8)")->delimiter(',');
  CLI11_PARSE(app, argc, argv);
  fs::create_directories(work);

  const std::vector<std::pair<std::string, std::function<void(Outcome&)>>> criteria{
      {"eikonal exactness and accuracy", eikonal},
      {"gradient correctness", gradients},
      {"dense-block channel arithmetic", architecture},
      {"label-noise calibration", noise_calibration},
      {"metric identities", metric_identities},
      {"capacity oracles", capacity},
      {"L2 ordering: geodesic prior vs baseline and binary prior", [&](Outcome& o) { l2_ordering(o, work); }},
      {"pipeline reproducibility", [&](Outcome& o) { reproducibility(o, work); }},
  };

  const std::set<int> selected(only.begin(), only.end());
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!selected.empty() && !selected.count(id)) continue;
    Outcome o;
    try {
      criteria[i].second(o);
    } catch (const std::exception& e) {
      o.check(false, std::string("error: ") + e.what());
    }
    if (!o.pass) ++failed;
    std::cout << (o.pass ? "PASS" : "FAIL") << " [" << id << "] " << criteria[i].first << ": " << o.detail.str()
              << std::endl;
  }
  return failed == 0 ? 0 : 1;
}
