#include "geoprior/training.hpp"

#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "geoprior/metrics.hpp"
#include "geoprior/rng.hpp"

namespace geoprior {

using nn::Shape;
using nn::Tensor;
using nn::Var;

std::string to_string(PriorMode m) {
  switch (m) {
    case PriorMode::None: return "none";
    case PriorMode::Binary: return "binary";
    case PriorMode::Geodesic: return "geodesic";
  }
  throw std::invalid_argument("unknown prior mode");
}

PriorMode parse_prior_mode(const std::string& s) {
  if (s == "none") return PriorMode::None;
  if (s == "binary") return PriorMode::Binary;
  if (s == "geodesic") return PriorMode::Geodesic;
  throw std::invalid_argument("unknown prior mode '" + s + "' (expected none, binary or geodesic)");
}

void TrainConfig::validate() const {
  if (epochs < 1) throw std::invalid_argument("epochs must be >= 1");
  if (batch_size < 1) throw std::invalid_argument("batch size must be >= 1");
  if (!(lr > 0.0)) throw std::invalid_argument("learning rate must be positive");
  if (!(lambda_gae >= 0.0)) throw std::invalid_argument("lambda_gae must be >= 0");
  if (patience < 1) throw std::invalid_argument("patience must be >= 1");
  if (max_steps < 0) throw std::invalid_argument("max_steps must be >= 0");
}

Tensor to_tensor(const Volume& v) {
  const Dims& d = v.dims();
  Tensor t({1, 1, d.nz, d.ny, d.nx});
  for (std::size_t i = 0; i < v.size(); ++i) t[i] = v[i];
  return t;
}

Tensor to_tensor(const MultiChannelMap& m) {
  validate(m);
  const Dims& d = m.dims();
  Tensor t({1, static_cast<int>(m.num_channels()), d.nz, d.ny, d.nx});
  std::size_t k = 0;
  for (const auto& ch : m.channels)
    for (std::size_t i = 0; i < ch.size(); ++i) t[k++] = ch[i];
  return t;
}

std::vector<std::uint8_t> to_targets(const LabelMap& labels) { return labels.storage(); }

LabelMap argmax_labels(const Tensor& scores, int n, const Spacing& spacing) {
  const Shape s = scores.shape();
  if (n < 0 || n >= s.n) throw nn::ShapeError("argmax_labels: sample index out of range");
  LabelMap out(Dims(s.x, s.y, s.z), spacing, 0);
  const std::size_t nv = s.spatial();
  const double* base = scores.data() + static_cast<std::size_t>(n) * s.c * nv;
  for (std::size_t v = 0; v < nv; ++v) {
    int best = 0;
    for (int c = 1; c < s.c; ++c) {
      if (base[c * nv + v] > base[best * nv + v]) best = c;
    }
    out[v] = static_cast<std::uint8_t>(best);
  }
  return out;
}

namespace {

Tensor stack(const std::vector<const Tensor*>& parts) {
  Shape s = parts.front()->shape();
  int n = 0;
  for (const Tensor* t : parts) {
    const Shape ts = t->shape();
    if (ts.c != s.c || ts.z != s.z || ts.y != s.y || ts.x != s.x) {
      throw nn::ShapeError("cannot batch " + ts.str() + " with " + s.str());
    }
    n += ts.n;
  }
  s.n = n;
  Tensor out(s);
  std::size_t k = 0;
  for (const Tensor* t : parts) {
    std::copy(t->data(), t->data() + t->numel(), out.data() + k);
    k += t->numel();
  }
  return out;
}

std::vector<std::size_t> permutation(std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> p(n);
  std::iota(p.begin(), p.end(), 0);
  Rng rng(seed);
  for (std::size_t i = n; i > 1; --i) {
    const auto j = static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(i - 1)));
    std::swap(p[i - 1], p[j]);
  }
  return p;
}

std::vector<std::vector<std::size_t>> batches(std::size_t n, int batch_size, std::uint64_t seed) {
  const auto order = permutation(n, seed);
  std::vector<std::vector<std::size_t>> out;
  for (std::size_t i = 0; i < n; i += batch_size) {
    out.emplace_back(order.begin() + i, order.begin() + std::min(n, i + batch_size));
  }
  return out;
}

void require_finite(double v, const std::string& what, long step) {
  if (!std::isfinite(v)) {
    throw nn::NumericalError(what + " became non-finite at step " + std::to_string(step) +
                             "; lower the learning rate or check the inputs");
  }
}

std::vector<Tensor> snapshot(nn::ParameterStore& store) {
  std::vector<Tensor> out;
  for (const auto& [name, t] : store.named_tensors()) out.push_back(*t);
  return out;
}

void restore(nn::ParameterStore& store, const std::vector<Tensor>& saved) {
  auto tensors = store.named_tensors();
  for (std::size_t i = 0; i < tensors.size(); ++i) *tensors[i].second = saved[i];
}

std::array<double, 3> class_dice(const LabelMap& pred, const LabelMap& ref) {
  std::array<double, 3> out{};
  for (std::size_t k = 0; k < kForegroundClasses.size(); ++k) {
    out[k] = dice(class_mask(pred, kForegroundClasses[k]), class_mask(ref, kForegroundClasses[k]));
  }
  return out;
}

double mean3(const std::array<double, 3>& a) { return (a[0] + a[1] + a[2]) / 3.0; }

}  // namespace

GaeTrainResult train_gae(const std::vector<GaeSample>& train, const std::vector<GaeSample>& val,
                         const nn::GaeConfig& arch, const TrainConfig& cfg) {
  cfg.validate();
  if (train.empty()) throw std::invalid_argument("autoencoder training corpus is empty");
  if (val.empty()) throw std::invalid_argument("autoencoder validation set is empty");
  nn::GaeConfig a = arch;
  a.init_seed = derive_seed(cfg.seed, "gae-init");
  auto model = std::make_unique<nn::Gae>(a);
  const auto params = model->parameters();
  const nn::AdamConfig adam{cfg.lr};

  GaeTrainResult result;
  TrainHistory& h = result.history;
  double best_loss = std::numeric_limits<double>::infinity();
  std::vector<Tensor> best = snapshot(model->store());
  int stale = 0;
  long step = 0;
  bool stop = false;

  for (int epoch = 1; epoch <= cfg.epochs && !stop; ++epoch) {
    double epoch_loss = 0.0;
    std::size_t seen = 0;
    for (const auto& idx : batches(train.size(), cfg.batch_size, derive_seed(cfg.seed, "gae-shuffle", epoch))) {
      std::vector<const Tensor*> maps;
      std::vector<std::uint8_t> target;
      for (std::size_t i : idx) {
        maps.push_back(&train[i].maps);
        const auto& t = train[i].target.storage();
        target.insert(target.end(), t.begin(), t.end());
      }
      Var loss = nn::softmax_ce(model->forward(nn::leaf(stack(maps)), true), target);
      ++step;
      require_finite(loss.value()[0], "autoencoder reconstruction loss", step);
      nn::backward(loss);
      nn::adam_step(params, adam);
      nn::zero_grad(params);
      h.steps.push_back({step, epoch, loss.value()[0], 0.0, loss.value()[0], std::nullopt});
      epoch_loss += loss.value()[0] * idx.size();
      seen += idx.size();
      if (cfg.max_steps > 0 && step >= cfg.max_steps) {
        stop = true;
        break;
      }
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.step = step;
    rec.train_loss = epoch_loss / seen;
    {
      nn::NoGradGuard guard;
      double vl = 0.0;
      std::array<double, 3> vd{};
      for (const auto& s : val) {
        Var logits = model->forward(nn::leaf(s.maps), false);
        vl += nn::softmax_ce(logits, s.target.storage()).value()[0];
        const auto d = class_dice(argmax_labels(logits.value(), 0, s.target.spacing()), s.target);
        for (int k = 0; k < 3; ++k) vd[k] += d[k];
      }
      rec.val_loss = vl / val.size();
      for (int k = 0; k < 3; ++k) rec.val_dice[k] = vd[k] / val.size();
      rec.val_mean_dice = mean3(rec.val_dice);
    }
    require_finite(rec.val_loss, "autoencoder validation loss", step);
    h.steps.back().val_dice = rec.val_dice;
    h.epochs.push_back(rec);

    if (rec.val_loss < best_loss) {
      best_loss = rec.val_loss;
      best = snapshot(model->store());
      h.best_epoch = epoch;
      stale = 0;
    } else if (++stale >= cfg.patience) {
      h.early_stopped = true;
      stop = true;
    }
    if (cfg.stop_at_dice && rec.val_mean_dice > *cfg.stop_at_dice) {
      best = snapshot(model->store());
      h.best_epoch = epoch;
      stop = true;
    }
  }
  h.steps_run = step;
  restore(model->store(), best);
  model->freeze();
  result.model = std::move(model);
  return result;
}

Var total_loss(const Var& logits, const std::vector<std::uint8_t>& target, const Var& feat_p, const Var& feat_g,
               double lambda, LossParts* parts) {
  if (!(lambda >= 0.0)) throw std::invalid_argument("lambda_gae must be >= 0");
  Var l_seg = nn::softmax_ce(logits, target);
  Var l_gae = nn::mse(feat_p, feat_g);
  Var l_tot = nn::add(l_seg, nn::scale(l_gae, lambda));
  if (parts) *parts = {l_seg.value()[0], l_gae.value()[0], l_tot.value()[0]};
  return l_tot;
}

Var foreground_probabilities(const Var& logits) {
  return nn::slice_channels(nn::softmax_channels(logits), 1, logits.shape().c);
}

SegTrainResult train_segmentor(const std::vector<SegSample>& train, const std::vector<SegSample>& val,
                               const nn::SegmentorConfig& arch, const TrainConfig& cfg, nn::Gae* prior) {
  cfg.validate();
  if (train.empty()) throw std::invalid_argument("segmentor training corpus is empty");
  if (val.empty()) throw std::invalid_argument("segmentor validation set is empty");
  const bool use_prior = cfg.mode != PriorMode::None;
  if (use_prior) {
    if (!prior) throw std::invalid_argument("prior mode " + to_string(cfg.mode) + " needs a trained autoencoder");
    if (!prior->frozen()) throw std::logic_error("the prior autoencoder must be frozen before segmentor training");
    if (prior->config().in_channels != arch.classes - 1) {
      throw std::invalid_argument("autoencoder input channels must equal the number of foreground classes");
    }
  }

  nn::SegmentorConfig a = arch;
  a.init_seed = derive_seed(cfg.seed, "segmentor-init");
  auto model = std::make_unique<nn::Segmentor>(a);
  const auto params = model->parameters();
  const nn::AdamConfig adam{cfg.lr};

  std::vector<Tensor> feat_g;
  if (use_prior) {
    nn::NoGradGuard guard;
    for (const auto& s : train) {
      if (s.prior.empty()) throw std::invalid_argument("training sample lacks prior maps");
      feat_g.push_back(prior->encode(nn::leaf(s.prior), false).value());
    }
  }

  SegTrainResult result;
  TrainHistory& h = result.history;
  double best_dice = -1.0;
  std::vector<Tensor> best = snapshot(model->store());
  int stale = 0;
  long step = 0;
  bool stop = false;

  for (int epoch = 1; epoch <= cfg.epochs && !stop; ++epoch) {
    double epoch_loss = 0.0;
    std::size_t seen = 0;
    for (const auto& idx : batches(train.size(), cfg.batch_size, derive_seed(cfg.seed, "seg-shuffle", epoch))) {
      std::vector<const Tensor*> images, feats;
      std::vector<std::uint8_t> target;
      for (std::size_t i : idx) {
        images.push_back(&train[i].image);
        if (use_prior) feats.push_back(&feat_g[i]);
        const auto& t = train[i].target.storage();
        target.insert(target.end(), t.begin(), t.end());
      }
      Var logits = model->forward(nn::leaf(stack(images)), true);
      LossParts parts;
      Var loss;
      if (use_prior) {
        Var feat_p = prior->encode(foreground_probabilities(logits), false);
        loss = total_loss(logits, target, feat_p, nn::leaf(stack(feats)), cfg.lambda_gae, &parts);
      } else {
        loss = nn::softmax_ce(logits, target);
        parts = {loss.value()[0], 0.0, loss.value()[0]};
      }
      ++step;
      require_finite(parts.l_tot, "segmentation loss", step);
      nn::backward(loss);
      nn::adam_step(params, adam);
      nn::zero_grad(params);
      h.steps.push_back({step, epoch, parts.l_seg, parts.l_gae, parts.l_tot, std::nullopt});
      epoch_loss += parts.l_tot * idx.size();
      seen += idx.size();
      if (cfg.max_steps > 0 && step >= cfg.max_steps) {
        stop = true;
        break;
      }
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.step = step;
    rec.train_loss = epoch_loss / seen;
    {
      nn::NoGradGuard guard;
      double vl = 0.0;
      std::array<double, 3> vd{};
      for (const auto& s : val) {
        Var logits = model->forward(nn::leaf(s.image), false);
        vl += nn::softmax_ce(logits, s.reference.storage()).value()[0];
        const auto d = class_dice(argmax_labels(logits.value(), 0, s.reference.spacing()), s.reference);
        for (int k = 0; k < 3; ++k) vd[k] += d[k];
      }
      rec.val_loss = vl / val.size();
      for (int k = 0; k < 3; ++k) rec.val_dice[k] = vd[k] / val.size();
      rec.val_mean_dice = mean3(rec.val_dice);
    }
    h.steps.back().val_dice = rec.val_dice;
    h.epochs.push_back(rec);

    if (rec.val_mean_dice > best_dice) {
      best_dice = rec.val_mean_dice;
      best = snapshot(model->store());
      h.best_epoch = epoch;
      stale = 0;
    } else if (++stale >= cfg.patience) {
      h.early_stopped = true;
      stop = true;
    }
    if (cfg.stop_at_dice && rec.val_mean_dice > *cfg.stop_at_dice) stop = true;
  }
  h.steps_run = step;
  restore(model->store(), best);
  result.model = std::move(model);
  return result;
}

std::vector<LabelMap> predict(nn::Segmentor& model, const std::vector<Tensor>& images, const Spacing& spacing) {
  nn::NoGradGuard guard;
  std::vector<LabelMap> out;
  out.reserve(images.size());
  for (const auto& img : images) out.push_back(argmax_labels(model.forward(nn::leaf(img), false).value(), 0, spacing));
  return out;
}

std::array<double, 3> reconstruction_dice(nn::Gae& model, const std::vector<GaeSample>& samples) {
  if (samples.empty()) throw std::invalid_argument("no samples to reconstruct");
  nn::NoGradGuard guard;
  std::array<double, 3> sum{};
  for (const auto& s : samples) {
    const auto d = class_dice(argmax_labels(model.forward(nn::leaf(s.maps), false).value(), 0, s.target.spacing()),
                              s.target);
    for (int k = 0; k < 3; ++k) sum[k] += d[k];
  }
  for (auto& v : sum) v /= samples.size();
  return sum;
}

std::string history_csv(const TrainHistory& h) {
  std::ostringstream out;
  out.precision(17);
  out << "step,epoch,L_seg,L_gae,L_tot,val_DI_LV,val_DI_RV,val_DI_MYO\n";
  for (const auto& s : h.steps) {
    out << s.step << ',' << s.epoch << ',' << s.l_seg << ',' << s.l_gae << ',' << s.l_tot;
    if (s.val_dice) {
      for (double d : *s.val_dice) out << ',' << d;
    } else {
      out << ",,,";
    }
    out << '\n';
  }
  return out.str();
}

}  // namespace geoprior
