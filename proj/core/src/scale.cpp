#include "egohand/scale.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace egohand {

namespace {

double median_inplace(std::vector<double>& v) {
  const std::size_t n = v.size();
  auto mid = v.begin() + n / 2;
  std::nth_element(v.begin(), mid, v.end());
  if (n % 2 == 1) return *mid;
  const double hi = *mid;
  const double lo = *std::max_element(v.begin(), mid);
  return 0.5 * (lo + hi);
}

double gm_objective(const std::vector<double>& rel,
                    const std::vector<double>& metric, double alpha, double c) {
  const double c2 = c * c;
  double obj = 0.0;
  for (std::size_t i = 0; i < rel.size(); ++i) {
    const double r = metric[i] - alpha * rel[i];
    obj += r * r / (r * r + c2);
  }
  return obj;
}

double mad_width(const std::vector<double>& rel,
                 const std::vector<double>& metric, double alpha) {
  std::vector<double> abs_res(rel.size());
  for (std::size_t i = 0; i < rel.size(); ++i) {
    abs_res[i] = std::abs(metric[i] - alpha * rel[i]);
  }
  const double mad = median_inplace(abs_res);
  return std::max(1.4826 * mad, 1e-9);
}

}  // namespace

std::vector<std::int64_t> adaptive_sample(const DepthFrame& frame,
                                          const DepthBounds& bounds) {
  std::vector<std::int64_t> out;
  const int w = frame.metric.width();
  const int h = frame.metric.height();
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (!frame.valid.at(x, y)) continue;
      if (frame.hand_mask.at(x, y)) continue;
      const double D = frame.metric.at(x, y);
      if (D > bounds.d_min && D < bounds.d_max) {
        out.push_back(std::int64_t(y) * w + x);
      }
    }
  }
  return out;
}

ScaleResult estimate_scale_samples(const std::vector<double>& rel,
                                   const std::vector<double>& metric,
                                   const ScaleOptions& opts) {
  if (rel.empty()) {
    throw EmptySampleSet("estimate_scale: no points selected");
  }

  // Median-ratio initialization; the objective is nonconvex in alpha.
  std::vector<double> ratios(rel.size());
  for (std::size_t i = 0; i < rel.size(); ++i) ratios[i] = metric[i] / rel[i];
  double alpha = median_inplace(ratios);
  if (!std::isfinite(alpha)) {
    throw NonFiniteObjective("estimate_scale: non-finite initialization");
  }

  const bool auto_width = !(opts.gm_width > 0.0);
  double c = auto_width ? mad_width(rel, metric, alpha) : opts.gm_width;

  ScaleResult res;
  res.alpha = alpha;
  double prev_obj = gm_objective(rel, metric, alpha, c);
  if (!std::isfinite(prev_obj)) {
    throw NonFiniteObjective("estimate_scale: non-finite objective");
  }

  int iter = 0;
  for (; iter < opts.max_iterations; ++iter) {
    const double c2 = c * c;
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < rel.size(); ++i) {
      const double r = metric[i] - alpha * rel[i];
      const double w = c2 / ((r * r + c2) * (r * r + c2));
      num += w * rel[i] * metric[i];
      den += w * rel[i] * rel[i];
    }
    if (!(den > 0.0) || !std::isfinite(num)) {
      throw NonFiniteObjective("estimate_scale: degenerate IRLS update");
    }
    const double next = num / den;
    const double obj = gm_objective(rel, metric, next, c);
    if (!std::isfinite(obj)) {
      throw NonFiniteObjective("estimate_scale: non-finite objective");
    }
    // The IRLS update majorizes the GM objective for fixed c, so the cost
    // cannot go up; stop if numerics say otherwise.
    if (obj > prev_obj + 1e-12 * std::max(1.0, prev_obj)) {
      ++iter;
      break;
    }
    const double delta = std::abs(next - alpha);
    alpha = next;
    prev_obj = obj;
    res.objective_history.push_back(obj);
    res.width_history.push_back(c);
    if (auto_width && iter == 2) {
      c = mad_width(rel, metric, alpha);
      prev_obj = gm_objective(rel, metric, alpha, c);
    }
    if (delta <= opts.rel_tolerance * std::abs(alpha)) {
      ++iter;
      break;
    }
  }

  res.alpha = alpha;
  res.iterations = iter;
  res.final_objective = gm_objective(rel, metric, alpha, c);
  std::size_t inliers = 0;
  for (std::size_t i = 0; i < rel.size(); ++i) {
    if (std::abs(metric[i] - alpha * rel[i]) <= c) ++inliers;
  }
  res.inlier_fraction = double(inliers) / double(rel.size());
  return res;
}

namespace {

void gather_samples(const std::vector<DepthFrame>& frames,
                    const DepthBounds& bounds, std::vector<double>& rel,
                    std::vector<double>& metric) {
  for (const DepthFrame& f : frames) {
    const auto idx = adaptive_sample(f, bounds);
    for (std::int64_t i : idx) {
      rel.push_back(f.rel.data()[std::size_t(i)]);
      metric.push_back(f.metric.data()[std::size_t(i)]);
    }
  }
}

}  // namespace

ScaleResult estimate_scale(const std::vector<DepthFrame>& frames,
                           const DepthBounds& bounds,
                           const ScaleOptions& opts) {
  std::vector<double> rel, metric;
  gather_samples(frames, bounds, rel, metric);
  return estimate_scale_samples(rel, metric, opts);
}

double estimate_scale_least_squares(const std::vector<DepthFrame>& frames,
                                    const DepthBounds& bounds) {
  std::vector<double> rel, metric;
  gather_samples(frames, bounds, rel, metric);
  if (rel.empty()) {
    throw EmptySampleSet("estimate_scale_least_squares: no points selected");
  }
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < rel.size(); ++i) {
    num += rel[i] * metric[i];
    den += rel[i] * rel[i];
  }
  return num / den;
}

DepthBounds calibrate_depth_bounds(
    const std::vector<std::pair<std::vector<DepthFrame>, double>>& calib) {
  if (calib.empty()) {
    throw EmptyCalibSet("calibrate_depth_bounds: empty calibration set");
  }

  DepthBounds best;
  double best_err = std::numeric_limits<double>::infinity();
  double best_width = -1.0;

  for (int i = 0; i < 10; ++i) {
    const double d_min = 0.1 + 0.1 * i;
    for (int j = 0; j <= 12; ++j) {
      const double d_max = 2.0 + 0.5 * j;
      const DepthBounds bounds{d_min, d_max};

      double err = 0.0;
      bool usable = true;
      for (const auto& [frames, alpha_true] : calib) {
        try {
          const ScaleResult r = estimate_scale(frames, bounds);
          err += std::abs(r.alpha - alpha_true) / alpha_true;
        } catch (const EmptySampleSet&) {
          usable = false;
          break;
        }
      }
      if (!usable) continue;
      err /= double(calib.size());

      const double width = d_max - d_min;
      const bool better =
          err < best_err ||
          (err == best_err &&
           (width > best_width ||
            (width == best_width && d_min < best.d_min)));
      if (better) {
        best_err = err;
        best_width = width;
        best = bounds;
      }
    }
  }
  if (!(best_width > 0.0)) {
    throw EmptyCalibSet(
        "calibrate_depth_bounds: no bounds produced a usable sample set");
  }
  return best;
}

}  // namespace egohand
