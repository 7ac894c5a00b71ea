#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "egohand/rng.hpp"
#include "egohand/scale.hpp"

using namespace egohand;

namespace {

DepthFrame flat_frame(int w, int h, double metric_depth, double alpha) {
  DepthFrame f;
  f.metric = DepthImage(w, h, metric_depth);
  f.rel = DepthImage(w, h, metric_depth / alpha);
  f.hand_mask = Mask(w, h, 0);
  f.valid = Mask(w, h, 1);
  return f;
}

DepthFrame from_samples(const std::vector<double>& rel,
                        const std::vector<double>& metric) {
  const int n = int(rel.size());
  DepthFrame f;
  f.rel = DepthImage(n, 1);
  f.metric = DepthImage(n, 1);
  f.hand_mask = Mask(n, 1, 0);
  f.valid = Mask(n, 1, 1);
  for (int i = 0; i < n; ++i) {
    f.rel.at(i, 0) = rel[i];
    f.metric.at(i, 0) = metric[i];
  }
  return f;
}

}  // namespace

TEST_CASE("adaptive_sample basics") {
  DepthFrame f = flat_frame(8, 4, 2.0, 1.0);
  const DepthBounds bounds{0.3, 4.0};

  SUBCASE("all-ones mask gives the empty set") {
    f.hand_mask = Mask(8, 4, 1);
    CHECK(adaptive_sample(f, bounds).empty());
  }
  SUBCASE("uniform in-band depth keeps every valid pixel") {
    CHECK(adaptive_sample(f, bounds).size() == 32);
  }
  SUBCASE("invalid pixels are dropped") {
    f.valid.at(3, 1) = 0;
    CHECK(adaptive_sample(f, bounds).size() == 31);
  }
}

TEST_CASE("adaptive_sample equals the brute-force predicate") {
  SplitRng rng(51);
  DepthFrame f;
  const int w = 17, h = 9;
  f.rel = DepthImage(w, h);
  f.metric = DepthImage(w, h);
  f.hand_mask = Mask(w, h);
  f.valid = Mask(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      f.metric.at(x, y) = rng.uniform(0.05, 8.0);
      f.rel.at(x, y) = f.metric.at(x, y) / 1.7;
      f.hand_mask.at(x, y) = rng.bernoulli(0.2);
      f.valid.at(x, y) = rng.bernoulli(0.9);
    }
  }
  const DepthBounds bounds{0.5, 3.0};
  const auto got = adaptive_sample(f, bounds);

  std::vector<std::int64_t> expected;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (f.valid.at(x, y) && !f.hand_mask.at(x, y) &&
          f.metric.at(x, y) > 0.5 && f.metric.at(x, y) < 3.0) {
        expected.push_back(std::int64_t(y) * w + x);
      }
    }
  }
  CHECK(got == expected);
}

TEST_CASE("noiseless constant ratio is exact in one iteration") {
  std::vector<DepthFrame> frames;
  SplitRng rng(52);
  for (int k = 0; k < 3; ++k) {
    std::vector<double> rel, metric;
    for (int i = 0; i < 200; ++i) {
      const double d = rng.uniform(0.4, 1.5);
      rel.push_back(d);
      metric.push_back(2.5 * d);
    }
    frames.push_back(from_samples(rel, metric));
  }
  const ScaleResult r = estimate_scale(frames, DepthBounds{0.3, 4.0});
  CHECK(r.alpha == doctest::Approx(2.5).epsilon(1e-12));
  CHECK(r.iterations == 1);
  CHECK(r.inlier_fraction == 1.0);
}

TEST_CASE("single pixel returns the exact ratio in one iteration") {
  const std::vector<DepthFrame> frames{from_samples({0.8}, {1.84})};
  const ScaleResult r = estimate_scale(frames, DepthBounds{0.3, 4.0});
  CHECK(r.alpha == doctest::Approx(1.84 / 0.8).epsilon(1e-15));
  CHECK(r.iterations == 1);
}

TEST_CASE("robust to 30% gross relative-depth outliers") {
  SplitRng rng(53);
  for (double alpha_true : {0.7, 1.9, 4.2}) {
    std::vector<double> rel, metric;
    for (int i = 0; i < 4000; ++i) {
      const double depth = rng.uniform(0.5, 3.8);
      double d = depth / alpha_true;
      if (rng.bernoulli(0.3)) d *= 10.0;  // SLAM gross failures
      rel.push_back(d);
      metric.push_back(depth + rng.normal(0.0, 0.01));
    }
    const ScaleResult r = estimate_scale({from_samples(rel, metric)},
                                         DepthBounds{0.3, 4.0});
    CHECK(std::abs(r.alpha - alpha_true) / alpha_true < 0.01);
  }
}

TEST_CASE("c -> infinity limit matches the closed-form least squares") {
  SplitRng rng(54);
  std::vector<double> rel, metric;
  for (int i = 0; i < 500; ++i) {
    const double d = rng.uniform(0.3, 2.0);
    rel.push_back(d);
    metric.push_back(1.6 * d + rng.normal(0.0, 0.05));
  }
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < rel.size(); ++i) {
    num += rel[i] * metric[i];
    den += rel[i] * rel[i];
  }
  ScaleOptions opts;
  opts.gm_width = 1e6;
  const ScaleResult r = estimate_scale_samples(rel, metric, opts);
  CHECK(std::abs(r.alpha - num / den) < 1e-6);

  const double ls =
      estimate_scale_least_squares({from_samples(rel, metric)},
                                   DepthBounds{0.0, 1e30});
  CHECK(ls == doctest::Approx(num / den).epsilon(1e-12));
}

TEST_CASE("scale equivariance: k*D with k*c multiplies alpha by k") {
  SplitRng rng(55);
  std::vector<double> rel, metric;
  for (int i = 0; i < 800; ++i) {
    const double d = rng.uniform(0.5, 3.0);
    rel.push_back(d);
    double D = 1.3 * d + rng.normal(0.0, 0.02);
    if (rng.bernoulli(0.1)) D *= 4.0;
    metric.push_back(D);
  }
  ScaleOptions opts;
  opts.gm_width = 0.05;
  const ScaleResult base = estimate_scale_samples(rel, metric, opts);

  const double k = 3.0;
  std::vector<double> metric_k = metric;
  for (double& v : metric_k) v *= k;
  ScaleOptions opts_k = opts;
  opts_k.gm_width = opts.gm_width * k;
  const ScaleResult scaled = estimate_scale_samples(rel, metric_k, opts_k);
  CHECK(scaled.alpha == doctest::Approx(k * base.alpha).epsilon(1e-7));
}

TEST_CASE("permutation invariance over pixels and frames") {
  SplitRng rng(56);
  std::vector<double> rel, metric;
  for (int i = 0; i < 300; ++i) {
    const double d = rng.uniform(0.5, 3.0);
    rel.push_back(d);
    metric.push_back(2.2 * d + rng.normal(0.0, 0.03));
  }
  const ScaleResult a = estimate_scale_samples(rel, metric);

  std::vector<std::size_t> order(rel.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  for (std::size_t i = order.size(); i > 1; --i) {
    std::swap(order[i - 1], order[rng.next_u64() % i]);
  }
  std::vector<double> rel_p, metric_p;
  for (std::size_t i : order) {
    rel_p.push_back(rel[i]);
    metric_p.push_back(metric[i]);
  }
  const ScaleResult b = estimate_scale_samples(rel_p, metric_p);
  CHECK(a.alpha == doctest::Approx(b.alpha).epsilon(1e-9));
}

TEST_CASE("IRLS objective is nonincreasing at fixed width") {
  SplitRng rng(57);
  std::vector<double> rel, metric;
  for (int i = 0; i < 2000; ++i) {
    const double d = rng.uniform(0.4, 3.5);
    rel.push_back(d);
    double D = 0.9 * d + rng.normal(0.0, 0.05);
    if (rng.bernoulli(0.25)) D += rng.uniform(1.0, 5.0);
    metric.push_back(D);
  }
  const ScaleResult r = estimate_scale_samples(rel, metric);
  REQUIRE(r.objective_history.size() >= 2);
  for (std::size_t i = 1; i < r.objective_history.size(); ++i) {
    if (r.width_history[i] == r.width_history[i - 1]) {
      CHECK(r.objective_history[i] <=
            r.objective_history[i - 1] + 1e-9 * r.objective_history[i - 1]);
    }
  }
}

TEST_CASE("errors: empty sample set, non-finite input") {
  DepthFrame f = flat_frame(4, 4, 2.0, 1.0);
  f.hand_mask = Mask(4, 4, 1);
  CHECK_THROWS_AS(estimate_scale({f}, DepthBounds{0.3, 4.0}), EmptySampleSet);
  CHECK_THROWS_AS(
      estimate_scale_samples({1.0, std::nan("")}, {2.0, 2.0}),
      NonFiniteObjective);
  CHECK_THROWS_AS(calibrate_depth_bounds({}), EmptyCalibSet);
}

namespace {

// Calibration scene: clean pixels spread over [0.6, 3.5] plus corrupted
// pixels whose observed metric depth sits below `lid`.
std::pair<std::vector<DepthFrame>, double> calib_entry(
    SplitRng& rng, double alpha_true, bool with_near_outliers, double lid) {
  std::vector<double> rel, metric;
  for (int i = 0; i < 900; ++i) {
    const double depth = rng.uniform(0.6, 3.5);
    rel.push_back(depth / alpha_true);
    metric.push_back(depth + rng.normal(0.0, 0.004));
  }
  if (with_near_outliers) {
    for (int i = 0; i < 500; ++i) {
      const double observed = rng.uniform(0.12, lid - 0.01);
      rel.push_back(observed * 3.0 / alpha_true);  // ratio off by 3x
      metric.push_back(observed);
    }
  }
  return {{from_samples(rel, metric)}, alpha_true};
}

}  // namespace

TEST_CASE("calibration rejects the near-outlier band") {
  SplitRng rng(58);
  std::vector<std::pair<std::vector<DepthFrame>, double>> calib;
  calib.push_back(calib_entry(rng, 1.4, true, 0.2));
  calib.push_back(calib_entry(rng, 2.3, true, 0.2));
  const DepthBounds b = calibrate_depth_bounds(calib);
  CHECK(b.d_min >= 0.2);
  CHECK(b.d_min < b.d_max);
}

TEST_CASE("outlier-free calibration picks the widest interval") {
  SplitRng rng(59);
  std::vector<std::pair<std::vector<DepthFrame>, double>> calib;
  // Noiseless: every bounds choice with nonempty samples is exact, so the
  // tie-break decides.
  std::vector<double> rel, metric;
  for (int i = 0; i < 400; ++i) {
    const double depth = rng.uniform(1.1, 1.9);
    rel.push_back(depth / 1.8);
    metric.push_back(depth);
  }
  calib.push_back({{from_samples(rel, metric)}, 1.8});
  const DepthBounds b = calibrate_depth_bounds(calib);
  CHECK(b.d_min == doctest::Approx(0.1));
  CHECK(b.d_max == doctest::Approx(8.0));
}
