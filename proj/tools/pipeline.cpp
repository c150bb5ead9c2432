#include "pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <iostream>
#include <iterator>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "geoprior/geodesic.hpp"
#include "geoprior/metrics.hpp"
#include "geoprior/rng.hpp"
#include "geoprior/synth.hpp"
#include "geoprior/volume_io.hpp"

namespace geoprior::pipeline {

using nlohmann::json;

int worker_threads() {
  int n = static_cast<int>(std::thread::hardware_concurrency());
  if (const char* env = std::getenv("GEOPRIOR_THREADS")) {
    try {
      const int cap = std::stoi(env);
      if (cap < 1) throw ConfigError("GEOPRIOR_THREADS must be >= 1");
      n = n > 0 ? std::min(n, cap) : cap;
    } catch (const std::logic_error&) {
      throw ConfigError(std::string("GEOPRIOR_THREADS is not a positive integer: ") + env);
    }
  }
  return std::max(n, 1);
}

void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn) {
  const auto workers = std::min<std::size_t>(std::max(threads, 1), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex m;
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(m);
          if (!failure) failure = std::current_exception();
          next = n;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

namespace {

std::string hex(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string read_text(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw StageError("cannot read " + p.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_text(const fs::path& p, const std::string& s) {
  fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + p.string());
  out << s;
}

json read_json(const fs::path& p) {
  try {
    return json::parse(read_text(p));
  } catch (const json::exception& e) {
    throw StageError(p.string() + ": " + e.what());
  }
}

constexpr const char* kStageFile = "stage.json";

struct Stage {
  fs::path dir;
  json doc;
};

/// Loads an upstream stage and checks that neither its outputs nor its own inputs
/// changed since it ran.
Stage require_stage(const fs::path& dir, const std::string& stage) {
  const fs::path file = dir / kStageFile;
  if (!fs::exists(file)) {
    throw StageError("missing " + stage + " stage: no " + file.string() + " (run `geoprior " + stage + "` first)");
  }
  Stage s{dir, read_json(file)};
  if (s.doc.value("stage", "") != stage) {
    throw StageError(dir.string() + " is a " + s.doc.value("stage", "?") + " stage, expected " + stage);
  }
  if (hash_outputs(dir) != s.doc.at("output_hash").get<std::string>()) {
    throw StageError("stale " + stage + " stage at " + dir.string() + ": its outputs changed since it ran");
  }
  for (const auto& in : s.doc.at("inputs")) {
    const fs::path up = in.at("dir").get<std::string>();
    if (!fs::exists(up / kStageFile) || hash_outputs(up) != in.at("hash").get<std::string>()) {
      throw StageError("stale pipeline: " + dir.string() + " was built from a different " + up.string() +
                       "; rerun `geoprior " + stage + "`");
    }
  }
  return s;
}

json input_ref(const fs::path& dir) {
  return {{"dir", fs::weakly_canonical(dir).generic_string()}, {"hash", hash_outputs(dir)}};
}

void write_stage(const fs::path& dir, const std::string& stage, const json& config, const json& inputs,
                 std::vector<std::string> outputs, const json& extra = json::object()) {
  std::sort(outputs.begin(), outputs.end());
  json doc = {{"stage", stage}, {"version", 1}, {"config", config}, {"inputs", inputs}, {"outputs", outputs}};
  for (auto it = extra.begin(); it != extra.end(); ++it) doc[it.key()] = it.value();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& o : outputs) {
    h = fnv1a(o, h);
    h = fnv1a(hash_file(dir / o), h);
  }
  doc["output_hash"] = hex(h);
  write_text(dir / kStageFile, doc.dump(2) + "\n");
}

/// The dataset behind a corrupt stage.
struct LabelSet {
  Stage labels;
  fs::path data_dir;
  DatasetManifest dataset;
  NoiseLevel level = NoiseLevel::Clean;
};

LabelSet open_labels(const fs::path& dir) {
  LabelSet ls{require_stage(dir, "corrupt"), {}, {}, NoiseLevel::Clean};
  ls.data_dir = ls.labels.doc.at("inputs").at(0).at("dir").get<std::string>();
  require_stage(ls.data_dir, "synth");
  ls.dataset = read_manifest(ls.data_dir / "manifest.json");
  ls.level = parse_noise_level(ls.labels.doc.at("config").at("level"));
  return ls;
}

std::string label_file(const DatasetEntry& e) { return "labels/" + fs::path(e.label_path).filename().string(); }
std::string map_file(const DatasetEntry& e) { return "maps/" + fs::path(e.label_path).filename().string(); }

json train_config_json(const TrainConfig& c) {
  json j = {{"epochs", c.epochs},         {"batch_size", c.batch_size}, {"lr", c.lr},
            {"lambda_gae", c.lambda_gae}, {"patience", c.patience},     {"seed", c.seed},
            {"mode", to_string(c.mode)},  {"noise", to_string(c.noise)}, {"max_steps", c.max_steps}};
  j["stop_at_dice"] = c.stop_at_dice ? json(*c.stop_at_dice) : json(nullptr);
  return j;
}

json block_json(const nn::DenseBlockConfig& b) {
  return {{"layers", b.layers}, {"growth", b.growth}, {"first_filters", b.first_filters}};
}

std::vector<DatasetEntry> entries_in(const DatasetManifest& m, std::initializer_list<Split> splits) {
  std::vector<DatasetEntry> out;
  for (const auto& e : m.entries) {
    if (std::find(splits.begin(), splits.end(), e.split) != splits.end()) out.push_back(e);
  }
  return out;
}

void check_dims(const DatasetManifest& m, int nz, int ny, int nx, const std::string& what) {
  const Dims& d = m.spec.dims;
  if (d.nz != nz || d.ny != ny || d.nx != nx) {
    throw ConfigError(what + " is configured for " + std::to_string(nx) + "x" + std::to_string(ny) + "x" +
                      std::to_string(nz) + " but the dataset is " + std::to_string(d.nx) + "x" + std::to_string(d.ny) +
                      "x" + std::to_string(d.nz));
  }
}

}  // namespace

std::string hash_file(const fs::path& path) { return hex(fnv1a(read_text(path))); }

std::string hash_outputs(const fs::path& stage_dir) {
  const json doc = read_json(stage_dir / kStageFile);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& o : doc.at("outputs")) {
    const std::string name = o.get<std::string>();
    if (!fs::exists(stage_dir / name)) throw StageError("missing output " + (stage_dir / name).string());
    h = fnv1a(name, h);
    h = fnv1a(hash_file(stage_dir / name), h);
  }
  return hex(h);
}

void run_synth(const SynthOptions& o) {
  if (o.n != o.split[0] + o.split[1] + o.split[2]) {
    throw ConfigError("--n " + std::to_string(o.n) + " does not equal the split total");
  }
  for (int s : o.split) {
    if (s < 0) throw ConfigError("split sizes must be non-negative");
  }
  PhantomSpec spec;
  spec.seed = o.seed;
  try {
    spec.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  const auto m = make_dataset(spec, o.split, o.out);
  std::vector<std::string> outputs{"manifest.json"};
  for (const auto& e : m.entries) {
    outputs.push_back(e.image_path);
    outputs.push_back(e.label_path);
  }
  write_stage(o.out, "synth", {{"n", o.n}, {"split", o.split}, {"seed", o.seed}}, json::array(), outputs);
}

void run_corrupt(const CorruptOptions& o) {
  const Stage data = require_stage(o.data, "synth");
  const auto m = read_manifest(o.data / "manifest.json");
  json config = {{"level", to_string(o.level)}, {"seed", o.seed}};
  std::optional<NoiseSpec> spec;
  if (o.level != NoiseLevel::Clean) {
    spec = NoiseSpec::defaults(o.level, derive_seed(o.seed, "corrupt"));
    config["erosion_radius"] = spec->erosion_radius;
    config["pepper_prob"] = spec->pepper_prob;
    config["rng_seed"] = spec->rng_seed;
  }
  fs::create_directories(o.out / "labels");
  std::vector<std::string> outputs(m.entries.size());
  parallel_for(m.entries.size(), worker_threads(), [&](std::size_t i) {
    const auto& e = m.entries[i];
    const LabelMap clean = load_label_map(o.data / e.label_path);
    const LabelMap out = spec ? synthesize_noisy(clean, *spec, e.index) : clean;
    outputs[i] = label_file(e);
    save_volume(out, o.out / outputs[i]);
  });
  write_stage(o.out, "corrupt", config, json::array({input_ref(o.data)}), outputs);
}

std::string to_string(MapKind k) { return k == MapKind::Geodesic ? "geodesic" : "binary"; }

MapKind parse_map_kind(const std::string& s) {
  if (s == "geodesic") return MapKind::Geodesic;
  if (s == "binary") return MapKind::Binary;
  throw ConfigError("unknown map kind '" + s + "' (expected geodesic or binary)");
}

void run_geodesic(const GeodesicOptions& o) {
  const LabelSet ls = open_labels(o.labels);
  const auto entries = entries_in(ls.dataset, {Split::Train, Split::Val});
  fs::create_directories(o.out / "maps");
  std::vector<std::string> outputs(entries.size());
  std::vector<std::vector<std::string>> warnings(entries.size());
  parallel_for(entries.size(), worker_threads(), [&](std::size_t i) {
    const LabelMap labels = load_label_map(o.labels / label_file(entries[i]));
    outputs[i] = map_file(entries[i]);
    if (o.kind == MapKind::Geodesic) {
      auto r = compose_channels(labels);
      save_volume(r.map, o.out / outputs[i]);
      for (auto& w : r.warnings) warnings[i].push_back(entries[i].label_path + ": " + w);
    } else {
      save_volume(binary_channels(labels), o.out / outputs[i]);
    }
  });
  // Channel-role sidecars are outputs too.
  const std::size_t n = outputs.size();
  for (std::size_t i = 0; i < n; ++i) outputs.push_back(outputs[i] + ".json");
  json w = json::array();
  for (const auto& per : warnings)
    for (const auto& s : per) w.push_back(s);
  write_stage(o.out, "geodesic", {{"kind", to_string(o.kind)}}, json::array({input_ref(o.labels)}), outputs,
              {{"warnings", w}});
}

void run_train_gae(const TrainGaeOptions& o) {
  const Stage maps = require_stage(o.maps, "geodesic");
  const fs::path labels_dir = maps.doc.at("inputs").at(0).at("dir").get<std::string>();
  const LabelSet ls = open_labels(labels_dir);
  check_dims(ls.dataset, o.arch.nz, o.arch.ny, o.arch.nx, "the autoencoder");
  TrainConfig cfg = o.cfg;
  cfg.mode = parse_map_kind(maps.doc.at("config").at("kind")) == MapKind::Geodesic ? PriorMode::Geodesic
                                                                                     : PriorMode::Binary;
  cfg.noise = ls.level;
  try {
    cfg.validate();
    o.arch.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }

  auto load = [&](Split split) {
    std::vector<GaeSample> out;
    for (const auto& e : ls.dataset.in_split(split)) {
      out.push_back({to_tensor(load_multichannel(o.maps / map_file(e))), load_label_map(labels_dir / label_file(e))});
    }
    return out;
  };
  const auto train = load(Split::Train);
  const auto val = load(Split::Val);
  auto result = train_gae(train, val, o.arch, cfg);

  nn::save_checkpoint(o.out / "checkpoint", *result.model, {result.history.steps_run, ""});
  write_text(o.out / "log.csv", history_csv(result.history));
  json config = {{"train", train_config_json(cfg)},
                 {"architecture",
                  {{"nz", o.arch.nz}, {"ny", o.arch.ny}, {"nx", o.arch.nx}, {"blocks", o.arch.blocks},
                   {"block", block_json(o.arch.block)}, {"features", o.arch.features}, {"alpha", o.arch.alpha}}}};
  const auto& best = result.history.epochs.at(result.history.best_epoch - 1);
  write_stage(o.out, "train-gae", config, json::array({input_ref(o.maps)}),
              {"checkpoint/model.json", "checkpoint/params.bin", "log.csv"},
              {{"best_epoch", result.history.best_epoch},
               {"steps", result.history.steps_run},
               {"early_stopped", result.history.early_stopped},
               {"val_reconstruction_dice", best.val_dice},
               {"gae_checksum", hex(nn::checksum(result.model->store()))}});
}

void run_train_seg(const TrainSegOptions& o) {
  const LabelSet ls = open_labels(o.labels);
  check_dims(ls.dataset, o.arch.nz, o.arch.ny, o.arch.nx, "the segmentor");
  TrainConfig cfg = o.cfg;
  cfg.noise = ls.level;
  try {
    cfg.validate();
    o.arch.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }

  std::unique_ptr<nn::Gae> gae;
  fs::path maps_dir;
  json inputs = json::array({input_ref(o.labels)});
  if (cfg.mode != PriorMode::None) {
    if (!o.gae) {
      throw StageError("missing train-gae stage: --prior " + to_string(cfg.mode) +
                       " needs an autoencoder checkpoint (run `geoprior train-gae` and pass --gae)");
    }
    const Stage g = require_stage(*o.gae, "train-gae");
    if (g.doc.at("config").at("train").at("mode") != to_string(cfg.mode)) {
      throw ConfigError("--prior " + to_string(cfg.mode) + " does not match the autoencoder at " + o.gae->string() +
                        ", which was trained on " + g.doc.at("config").at("train").at("mode").get<std::string>() +
                        " maps");
    }
    maps_dir = g.doc.at("inputs").at(0).at("dir").get<std::string>();
    const Stage maps = require_stage(maps_dir, "geodesic");
    if (maps.doc.at("inputs").at(0).at("hash") != hash_outputs(o.labels)) {
      throw StageError("the autoencoder at " + o.gae->string() + " was trained on maps of different labels than " +
                       o.labels.string());
    }
    gae = nn::load_gae(*o.gae / "checkpoint");
    gae->freeze();
    inputs.push_back(input_ref(*o.gae));
  }

  auto load = [&](Split split, bool with_prior) {
    std::vector<SegSample> out;
    for (const auto& e : ls.dataset.in_split(split)) {
      SegSample s;
      s.image = to_tensor(load_volume(ls.data_dir / e.image_path));
      s.target = load_label_map(o.labels / label_file(e));
      s.reference = load_label_map(ls.data_dir / e.label_path);
      if (with_prior) s.prior = to_tensor(load_multichannel(maps_dir / map_file(e)));
      out.push_back(std::move(s));
    }
    return out;
  };
  const auto train = load(Split::Train, gae != nullptr);
  const auto val = load(Split::Val, false);

  const std::string before = gae ? hex(nn::checksum(gae->store())) : "";
  auto result = train_segmentor(train, val, o.arch, cfg, gae.get());
  const std::string after = gae ? hex(nn::checksum(gae->store())) : "";
  if (before != after) throw std::logic_error("the frozen autoencoder changed during segmentor training");

  nn::save_checkpoint(o.out / "checkpoint", *result.model, {result.history.steps_run, ""});
  write_text(o.out / "log.csv", history_csv(result.history));
  json config = {{"train", train_config_json(cfg)},
                 {"architecture",
                  {{"nz", o.arch.nz}, {"ny", o.arch.ny}, {"nx", o.arch.nx}, {"blocks", o.arch.blocks},
                   {"block", block_json(o.arch.block)}, {"alpha", o.arch.alpha}}}};
  const auto& best = result.history.epochs.at(result.history.best_epoch - 1);
  write_stage(o.out, "train-seg", config, inputs, {"checkpoint/model.json", "checkpoint/params.bin", "log.csv"},
              {{"best_epoch", result.history.best_epoch},
               {"steps", result.history.steps_run},
               {"early_stopped", result.history.early_stopped},
               {"val_dice", best.val_dice},
               {"gae_checksum", after}});
}

void run_eval(const EvalOptions& o) {
  const Stage run = require_stage(o.run, "train-seg");
  const fs::path labels_dir = run.doc.at("inputs").at(0).at("dir").get<std::string>();
  const LabelSet ls = open_labels(labels_dir);
  const auto test = ls.dataset.in_split(Split::Test);
  if (test.empty()) throw ConfigError("the dataset has an empty test split");
  auto model = nn::load_segmentor(o.run / "checkpoint");

  std::vector<ClassScores> scores(test.size());
  {
    // Inference only; the model is shared read-only except for BN statistics, which eval mode leaves alone.
    std::vector<nn::Tensor> images;
    for (const auto& e : test) images.push_back(to_tensor(load_volume(ls.data_dir / e.image_path)));
    const auto preds = predict(*model, images, ls.dataset.spec.spacing);
    parallel_for(test.size(), worker_threads(), [&](std::size_t i) {
      scores[i] = score_labels(preds[i], load_label_map(ls.data_dir / test[i].label_path));
    });
  }

  const std::string method = run.doc.at("config").at("train").at("mode");
  const std::string noise = to_string(ls.level);
  json per_image = json::array();
  for (std::size_t i = 0; i < test.size(); ++i) {
    json hd = json::array();
    for (const auto& h : scores[i].hd) hd.push_back(h ? json(*h) : json(nullptr));
    per_image.push_back({{"index", test[i].index}, {"dice", scores[i].dice}, {"hd", hd}});
  }
  json doc = {{"method", method},
              {"noise_level", noise},
              {"seed", run.doc.at("config").at("train").at("seed")},
              {"labels", fs::weakly_canonical(labels_dir).generic_string()},
              {"run_hash", hash_outputs(o.run)},
              {"images", per_image}};
  write_text(o.run / "scores.json", doc.dump(1) + "\n");
  write_text(o.run / "eval.csv", report_csv_header() + report_csv_rows(aggregate(scores), method, noise));
}

namespace {

ClassScores scores_from_json(const json& j) {
  ClassScores s;
  for (int k = 0; k < 3; ++k) {
    s.dice[k] = j.at("dice").at(k);
    const auto& h = j.at("hd").at(k);
    if (!h.is_null()) s.hd[k] = h.get<double>();
  }
  return s;
}

int method_rank(const std::string& m) {
  if (m == "none") return 0;
  if (m == "binary") return 1;
  if (m == "geodesic") return 2;
  return 3;
}

int noise_rank(const std::string& n) { return static_cast<int>(parse_noise_level(n)); }

}  // namespace

void run_report(const ReportOptions& o) {
  std::vector<fs::path> runs = o.runs;
  std::sort(runs.begin(), runs.end());
  runs.erase(std::unique(runs.begin(), runs.end()), runs.end());

  // (method, noise) -> pooled per-image scores
  std::map<std::pair<std::string, std::string>, std::vector<ClassScores>> cells;
  std::map<std::string, std::set<std::string>> label_sets;  // noise -> labels dirs
  std::map<std::string, std::string> curves;
  int used = 0;
  for (const auto& r : runs) {
    if (!fs::is_directory(r) || !fs::exists(r / kStageFile)) continue;
    if (read_json(r / kStageFile).value("stage", "") != "train-seg") continue;
    require_stage(r, "train-seg");
    if (!fs::exists(r / "scores.json")) {
      throw StageError("missing eval stage: " + r.string() + " has no scores.json (run `geoprior eval` first)");
    }
    const json doc = read_json(r / "scores.json");
    if (doc.at("run_hash") != hash_outputs(r)) {
      throw StageError("stale eval stage at " + r.string() + ": the checkpoint changed after evaluation");
    }
    auto& cell = cells[{doc.at("method"), doc.at("noise_level")}];
    for (const auto& img : doc.at("images")) cell.push_back(scores_from_json(img));
    if (doc.at("noise_level") != "clean") label_sets[doc.at("noise_level")].insert(doc.at("labels").get<std::string>());
    const fs::path rp = fs::weakly_canonical(r);
    curves[rp.filename().string()] = learning_curve_svg(rp.filename().string(), read_text(r / "log.csv"));
    ++used;
  }
  if (used == 0) throw StageError("missing train-seg stage: none of the given directories is a training run");

  for (const auto& [noise, dirs] : label_sets) {
    auto& cell = cells[{"upper_boundary", noise}];
    for (const auto& d : dirs) {
      const LabelSet ls = open_labels(d);
      for (const auto& e : ls.dataset.in_split(Split::Test)) {
        cell.push_back(upper_boundary(load_label_map(fs::path(d) / label_file(e)),
                                      load_label_map(ls.data_dir / e.label_path)));
      }
    }
  }

  std::vector<std::pair<std::string, std::string>> keys;
  for (const auto& [k, v] : cells) keys.push_back(k);
  std::sort(keys.begin(), keys.end(), [](const auto& a, const auto& b) {
    return std::pair(noise_rank(a.second), method_rank(a.first)) < std::pair(noise_rank(b.second), method_rank(b.first));
  });
  std::string csv = report_csv_header();
  for (const auto& k : keys) csv += report_csv_rows(aggregate(cells[k]), k.first, k.second);
  write_text(o.out / "report.csv", csv);
  for (const auto& [name, svg] : curves) write_text(o.out / "curves" / (name + ".svg"), svg);
}

std::string learning_curve_svg(const std::string& title, const std::string& log_csv) {
  std::vector<std::pair<double, double>> loss, dice;
  std::istringstream in(log_csv);
  std::string line;
  std::getline(in, line);  // header
  while (std::getline(in, line)) {
    std::vector<std::string> f;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) f.push_back(cell);
    while (f.size() < 8) f.emplace_back();
    if (f[0].empty()) continue;
    const double step = std::stod(f[0]);
    loss.emplace_back(step, std::stod(f[4]));
    if (!f[5].empty()) dice.emplace_back(step, (std::stod(f[5]) + std::stod(f[6]) + std::stod(f[7])) / 3.0);
  }
  const double w = 640, h = 240, pad = 40;
  double max_step = 1, max_loss = 1e-12;
  for (const auto& [s, l] : loss) {
    max_step = std::max(max_step, s);
    max_loss = std::max(max_loss, l);
  }
  auto polyline = [&](const std::vector<std::pair<double, double>>& pts, double ymax, double y0, const char* color) {
    std::string s = "<polyline fill=\"none\" stroke=\"" + std::string(color) + "\" stroke-width=\"1.5\" points=\"";
    char buf[64];
    for (const auto& [x, y] : pts) {
      std::snprintf(buf, sizeof buf, "%.2f,%.2f ", pad + (w - 2 * pad) * x / max_step,
                    y0 + (h - 2 * pad) * (1.0 - std::clamp(y / ymax, 0.0, 1.0)));
      s += buf;
    }
    return s + "\"/>\n";
  };
  char head[256];
  std::snprintf(head, sizeof head,
                "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%.0f\" height=\"%.0f\" font-family=\"sans-serif\" "
                "font-size=\"12\">\n",
                w, 2 * h);
  std::string svg = head;
  svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg += "<text x=\"" + std::to_string(static_cast<int>(pad)) + "\" y=\"20\">" + title + "</text>\n";
  char label[128];
  std::snprintf(label, sizeof label, "<text x=\"%d\" y=\"%d\">training L_tot (max %.4f)</text>\n",
                static_cast<int>(pad), static_cast<int>(pad) - 4, max_loss);
  svg += label;
  svg += polyline(loss, max_loss, pad, "#1f77b4");
  std::snprintf(label, sizeof label, "<text x=\"%d\" y=\"%d\">validation mean DI (0 to 1)</text>\n",
                static_cast<int>(pad), static_cast<int>(h + pad) - 4);
  svg += label;
  svg += polyline(dice, 1.0, h + pad, "#d62728");
  svg += "</svg>\n";
  return svg;
}

}  // namespace geoprior::pipeline
