#pragma once

#include <cstdint>
#include <vector>

#include "egohand/errors.hpp"
#include "egohand/image.hpp"

namespace egohand {

struct EmptySampleSet : Error {
  explicit EmptySampleSet(const std::string& msg) : Error(msg) {}
};

struct NonFiniteObjective : Error {
  explicit NonFiniteObjective(const std::string& msg) : Error(msg) {}
};

struct EmptyCalibSet : Error {
  explicit EmptyCalibSet(const std::string& msg) : Error(msg) {}
};

// Per-keyframe depth data: SLAM relative depth, metric depth, hand mask and
// validity mask, all sharing dimensions.
struct DepthFrame {
  DepthImage rel;     // d_t, SLAM units
  DepthImage metric;  // D_t, meters
  Mask hand_mask;     // M_t
  Mask valid;         // pixels with defined depth
};

struct DepthBounds {
  double d_min = 0.3;  // meters
  double d_max = 4.0;
};

struct ScaleResult {
  double alpha = 0.0;
  int iterations = 0;
  double final_objective = 0.0;
  double inlier_fraction = 0.0;  // |residual| <= gm width at the solution

  // Objective after each accepted IRLS update with the width in force at
  // that step; nonincreasing wherever the width is constant.
  std::vector<double> objective_history;
  std::vector<double> width_history;
};

struct ScaleOptions {
  // Geman-McClure width. Non-positive selects 1.4826 * MAD of the residuals
  // at the median-ratio initialization, recomputed once after 3 iterations.
  double gm_width = 0.0;
  int max_iterations = 100;
  double rel_tolerance = 1e-8;
};

// Point set S_t: valid, outside the hand mask, metric depth strictly inside
// (d_min, d_max). Returned as linear pixel indices in row-major order.
std::vector<std::int64_t> adaptive_sample(const DepthFrame& frame,
                                          const DepthBounds& bounds);

// Robust scale aligning metric to relative depth over the union of sampled
// points: minimizes sum of rho(D - alpha*d) with rho(r) = r^2/(r^2+c^2) by
// IRLS (weights c^2/(r^2+c^2)^2, closed-form weighted update).
ScaleResult estimate_scale(const std::vector<DepthFrame>& frames,
                           const DepthBounds& bounds,
                           const ScaleOptions& opts = {});

// Same objective on an explicit sample list (d, D pairs); the base routine
// above reduces to this after sampling.
ScaleResult estimate_scale_samples(const std::vector<double>& rel,
                                   const std::vector<double>& metric,
                                   const ScaleOptions& opts = {});

// Least-squares limit (c -> infinity): alpha = sum(d*D)/sum(d*d).
double estimate_scale_least_squares(const std::vector<DepthFrame>& frames,
                                    const DepthBounds& bounds);

// Grid search over (d_min in 0.1..1.0 step 0.1, d_max in 2..8 step 0.5)
// minimizing mean relative scale error against alpha_true; ties broken by
// the widest interval, then the smallest d_min.
DepthBounds calibrate_depth_bounds(
    const std::vector<std::pair<std::vector<DepthFrame>, double>>& calib);

}  // namespace egohand
