#include <doctest.h>

#include <cmath>
#include <sstream>

#include "geoprior/metrics.hpp"
#include "geoprior/morphology.hpp"
#include "geoprior/synth.hpp"
#include "support.hpp"

using namespace geoprior;
namespace gt = geoprior::testing;

TEST_CASE("dice examples") {
  const Dims d(6, 6, 1);
  const Mask a = gt::box(d, Spacing(), {1, 1, 0}, {2, 2, 0});
  CHECK(dice(a, a) == 1.0);
  CHECK(dice(a, gt::box(d, Spacing(), {4, 4, 0}, {5, 5, 0})) == 0.0);
  CHECK(dice(a, gt::box(d, Spacing(), {2, 1, 0}, {3, 2, 0})) == doctest::Approx(0.5));
  CHECK(dice(Mask(d, Spacing()), Mask(d, Spacing())) == 1.0);
  CHECK_THROWS(dice(a, Mask(Dims(5, 5, 1), Spacing())));
}

TEST_CASE("hausdorff examples") {
  const Dims d(10, 5, 1);
  const Mask a = gt::box(d, Spacing(), {1, 1, 0}, {3, 3, 0});
  CHECK(*hausdorff(a, a) == 0.0);
  CHECK(*hausdorff(a, gt::box(d, Spacing(), {4, 1, 0}, {6, 3, 0})) == doctest::Approx(3.0));
  const Spacing s(2, 1, 1);
  CHECK(*hausdorff(gt::box(d, s, {1, 1, 0}, {3, 3, 0}), gt::box(d, s, {4, 1, 0}, {6, 3, 0})) == doctest::Approx(6.0));
  CHECK_FALSE(hausdorff(a, Mask(d, Spacing())).has_value());
  CHECK_FALSE(hausdorff(Mask(d, Spacing()), Mask(d, Spacing())).has_value());
}

TEST_CASE("metric identities and symmetry on random masks") {
  Rng rng(17);
  for (int t = 0; t < 40; ++t) {
    const Spacing s(rng.uniform(0.5, 2), rng.uniform(0.5, 2), rng.uniform(1, 5));
    const Mask a = gt::random_mask(Dims(9, 8, 3), s, rng.uniform(0.05, 0.6), rng);
    const Mask b = gt::random_mask(Dims(9, 8, 3), s, rng.uniform(0.05, 0.6), rng);
    if (empty(a) || empty(b)) continue;
    CHECK(dice(a, a) == 1.0);
    CHECK(*hausdorff(a, a) == 0.0);
    CHECK(dice(a, b) == dice(b, a));
    CHECK(*hausdorff(a, b) == *hausdorff(b, a));
    CHECK(*hausdorff(a, b) == doctest::Approx(*gt::brute_hausdorff(a, b)).epsilon(1e-12));
  }
}

TEST_CASE("distance transform against brute force") {
  Rng rng(2);
  const Spacing s(1.5, 1.0, 5.0);
  const Mask m = gt::random_mask(Dims(7, 6, 4), s, 0.1, rng);
  REQUIRE_FALSE(empty(m));
  const Field dt = squared_distance_transform(m);
  for (std::size_t i = 0; i < m.size(); ++i) {
    const Index3 p = grid_index(m.dims(), i);
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < m.size(); ++j) {
      if (!m[j]) continue;
      const Index3 q = grid_index(m.dims(), j);
      best = std::min(best, std::pow((p.x - q.x) * s.sx, 2) + std::pow((p.y - q.y) * s.sy, 2) +
                                std::pow((p.z - q.z) * s.sz, 2));
    }
    CHECK(dt[i] == doctest::Approx(best).epsilon(1e-12));
  }
  CHECK(std::isinf(squared_distance_transform(Mask(m.dims(), s))[0]));
}

TEST_CASE("hausdorff grows with repeated dilation of a convex shape") {
  const Dims d(24, 24, 3);
  const Mask a = gt::disk(d, 11.5, 11.5, 4.0);
  const Mask d1 = dilate(a, StructuringElement::disk(1));
  const Mask d2 = dilate(d1, StructuringElement::disk(1));
  CHECK(*hausdorff(a, d1) <= *hausdorff(a, d2));
}

TEST_CASE("score_labels and aggregation") {
  const Phantom p = generate_phantom(PhantomSpec{}, 0);
  SUBCASE("perfect predictor") {
    const ClassReport r = aggregate({score_labels(p.labels, p.labels), score_labels(p.labels, p.labels)});
    REQUIRE(r.rows.size() == 4);
    CHECK(r.rows[3].name == "Ave.");
    for (const auto& row : r.rows) {
      CHECK(row.di_mean == 1.0);
      CHECK(row.hd_mean == 0.0);
      CHECK(row.n_images == 2);
      CHECK(row.n_undefined_hd == 0);
    }
  }
  SUBCASE("all-background predictor") {
    const LabelMap bg(p.labels.dims(), p.labels.spacing());
    const ClassReport r = aggregate({score_labels(bg, p.labels)});
    for (int c = 0; c < 3; ++c) {
      CHECK(r.rows[c].di_mean == 0.0);
      CHECK(std::isnan(r.rows[c].hd_mean));
      CHECK(r.rows[c].n_undefined_hd == 1);
    }
  }
  SUBCASE("csv layout") {
    const ClassReport r = aggregate({score_labels(p.labels, p.labels)});
    CHECK(report_csv_header() ==
          "method,noise_level,class,DI_mean,DI_std,HD_mean_mm,HD_std_mm,n_images,n_undefined_HD\n");
    std::istringstream rows(report_csv_rows(r, "geodesic", "L2"));
    std::string line;
    int n = 0;
    while (std::getline(rows, line)) {
      CHECK(line.rfind("geodesic,L2,", 0) == 0);
      ++n;
    }
    CHECK(n == 4);
  }
  CHECK_THROWS(aggregate({}));
}
