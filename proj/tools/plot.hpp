#pragma once

#include <filesystem>

#include "egohand/metrics.hpp"
#include "egohand/motion.hpp"

namespace egohand::plots {

// Writes traj.csv (one row per frame: gt/est camera and hand root
// positions, estimate similarity-aligned to GT for display) and traj.svg
// (top-down and isometric overlays). Returns the csv/svg paths.
struct PlotPaths {
  std::filesystem::path csv;
  std::filesystem::path svg;
};

PlotPaths write_trajectory_plots(const std::filesystem::path& out_dir,
                                 const PointSeq& gt_cam,
                                 const PointSeq& est_cam_aligned,
                                 const PointSeq& gt_hand,
                                 const PointSeq& est_hand);

// The fixed projections used by the SVG panels (exposed for tests).
Vec2 top_down(const Vec3& p);
Vec2 isometric(const Vec3& p);

}  // namespace egohand::plots
