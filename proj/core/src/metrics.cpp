#include "geoprior/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>

namespace geoprior {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void require_same_geometry(const Mask& a, const Mask& b) {
  if (a.dims() != b.dims()) throw std::invalid_argument("metric inputs have different dims");
  if (a.spacing() != b.spacing()) throw std::invalid_argument("metric inputs have different spacing");
}

// 1D squared distance transform of samples f at positions i*w (lower envelope of parabolas).
void transform_line(std::vector<double>& f, double w, std::vector<double>& out,
                    std::vector<int>& v, std::vector<double>& z) {
  const int n = static_cast<int>(f.size());
  int k = 0;
  int first = -1;
  for (int q = 0; q < n; ++q) {
    if (std::isfinite(f[q])) {
      first = q;
      break;
    }
  }
  if (first < 0) {
    std::fill(out.begin(), out.end(), kInf);
    return;
  }
  v[0] = first;
  z[0] = -kInf;
  z[1] = kInf;
  for (int q = first + 1; q < n; ++q) {
    if (!std::isfinite(f[q])) continue;
    const double pq = q * w;
    double s;
    while (true) {
      const double pv = v[k] * w;
      s = ((f[q] + pq * pq) - (f[v[k]] + pv * pv)) / (2.0 * (pq - pv));
      if (k > 0 && s <= z[k]) {
        --k;
        continue;
      }
      break;
    }
    ++k;
    v[k] = q;
    z[k] = s;
    z[k + 1] = kInf;
  }
  k = 0;
  for (int q = 0; q < n; ++q) {
    const double pq = q * w;
    while (z[k + 1] < pq) ++k;
    const double d = (q - v[k]) * w;
    // A sample's own parabola bounds the envelope there; the clamp keeps rounding in the
    // breakpoints from turning an exact zero into 1e-16.
    out[q] = std::min(d * d + f[v[k]], f[q]);
  }
}

}  // namespace

double dice(const Mask& pred, const Mask& ref) {
  require_same_geometry(pred, ref);
  std::size_t inter = 0, a = 0, b = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    a += pred[i];
    b += ref[i];
    inter += pred[i] & ref[i];
  }
  if (a + b == 0) return 1.0;
  return 2.0 * static_cast<double>(inter) / static_cast<double>(a + b);
}

Field squared_distance_transform(const Mask& mask) {
  const auto& d = mask.dims();
  Field dt(d, mask.spacing(), kInf);
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (mask[i]) dt[i] = 0.0;
  }
  const std::array<int, 3> n = {d.nx, d.ny, d.nz};
  const std::array<std::size_t, 3> stride = {1, static_cast<std::size_t>(d.nx),
                                             static_cast<std::size_t>(d.nx) * d.ny};
  const int longest = std::max({d.nx, d.ny, d.nz});
  std::vector<double> f, out;
  std::vector<int> v(longest);
  std::vector<double> z(longest + 1);
  for (int axis = 0; axis < 3; ++axis) {
    const int len = n[axis];
    f.assign(len, 0.0);
    out.assign(len, 0.0);
    const double w = mask.spacing()[axis];
    // Iterate over every line along `axis`.
    for (std::size_t base = 0; base < dt.size(); ++base) {
      const Index3 p = grid_index(d, base);
      const int coord = axis == 0 ? p.x : (axis == 1 ? p.y : p.z);
      if (coord != 0) continue;
      for (int q = 0; q < len; ++q) f[q] = dt[base + q * stride[axis]];
      transform_line(f, w, out, v, z);
      for (int q = 0; q < len; ++q) dt[base + q * stride[axis]] = out[q];
    }
  }
  return dt;
}

std::optional<double> hausdorff(const Mask& pred, const Mask& ref) {
  require_same_geometry(pred, ref);
  if (empty(pred) || empty(ref)) return std::nullopt;
  const auto to_ref = squared_distance_transform(ref);
  const auto to_pred = squared_distance_transform(pred);
  double worst = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (pred[i]) worst = std::max(worst, to_ref[i]);
    if (ref[i]) worst = std::max(worst, to_pred[i]);
  }
  return std::sqrt(worst);
}

ClassScores score_labels(const LabelMap& pred, const LabelMap& ref) {
  if (!pred.same_geometry(ref)) throw std::invalid_argument("label maps have different geometry");
  ClassScores s;
  for (int k = 0; k < 3; ++k) {
    const auto a = class_mask(pred, kForegroundClasses[k]);
    const auto b = class_mask(ref, kForegroundClasses[k]);
    s.dice[k] = dice(a, b);
    s.hd[k] = hausdorff(a, b);
  }
  return s;
}

namespace {

ClassRow summarize(std::string name, const std::vector<double>& di,
                   const std::vector<std::optional<double>>& hd) {
  ClassRow row;
  row.name = std::move(name);
  row.n_images = di.size();
  double sum = 0.0;
  for (double x : di) sum += x;
  row.di_mean = di.empty() ? 0.0 : sum / di.size();
  double ss = 0.0;
  for (double x : di) ss += (x - row.di_mean) * (x - row.di_mean);
  row.di_std = di.size() > 1 ? std::sqrt(ss / (di.size() - 1)) : 0.0;

  std::vector<double> defined;
  for (const auto& h : hd) {
    if (h) defined.push_back(*h);
    else ++row.n_undefined_hd;
  }
  if (defined.empty()) {
    row.hd_mean = std::numeric_limits<double>::quiet_NaN();
    row.hd_std = std::numeric_limits<double>::quiet_NaN();
  } else {
    double hs = 0.0;
    for (double x : defined) hs += x;
    row.hd_mean = hs / defined.size();
    double hss = 0.0;
    for (double x : defined) hss += (x - row.hd_mean) * (x - row.hd_mean);
    row.hd_std = defined.size() > 1 ? std::sqrt(hss / (defined.size() - 1)) : 0.0;
  }
  return row;
}

std::string format_number(double x) {
  if (std::isnan(x)) return "NA";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", x);
  return buf;
}

}  // namespace

ClassReport aggregate(const std::vector<ClassScores>& per_image) {
  if (per_image.empty()) throw std::invalid_argument("no images to aggregate");
  ClassReport report;
  for (int k = 0; k < 3; ++k) {
    std::vector<double> di;
    std::vector<std::optional<double>> hd;
    for (const auto& s : per_image) {
      di.push_back(s.dice[k]);
      hd.push_back(s.hd[k]);
    }
    report.rows.push_back(summarize(class_name(kForegroundClasses[k]), di, hd));
  }
  std::vector<double> di;
  std::vector<std::optional<double>> hd;
  for (const auto& s : per_image) {
    di.push_back((s.dice[0] + s.dice[1] + s.dice[2]) / 3.0);
    double sum = 0.0;
    int n = 0;
    for (const auto& h : s.hd) {
      if (h) {
        sum += *h;
        ++n;
      }
    }
    hd.push_back(n ? std::optional<double>(sum / n) : std::nullopt);
  }
  report.rows.push_back(summarize("Ave.", di, hd));
  return report;
}

std::string report_csv_header() {
  return "method,noise_level,class,DI_mean,DI_std,HD_mean_mm,HD_std_mm,n_images,n_undefined_HD\n";
}

std::string report_csv_rows(const ClassReport& report, const std::string& method,
                            const std::string& noise_level) {
  std::string out;
  for (const auto& r : report.rows) {
    out += method + "," + noise_level + "," + r.name + "," + format_number(r.di_mean) + "," +
           format_number(r.di_std) + "," + format_number(r.hd_mean) + "," + format_number(r.hd_std) +
           "," + std::to_string(r.n_images) + "," + std::to_string(r.n_undefined_hd) + "\n";
  }
  return out;
}

}  // namespace geoprior
