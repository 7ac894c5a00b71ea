#pragma once

#include <filesystem>
#include <string>

#include "egohand/metrics.hpp"
#include "egohand/sim.hpp"

namespace egohand {

// All writers are atomic: temp file in the target directory, then rename.

// TUM trajectory format: "timestamp tx ty tz qx qy qz qw", 9 significant
// digits, one line per pose.
void write_tum(const std::filesystem::path& path, const CameraTrajectory& traj);
CameraTrajectory read_tum(const std::filesystem::path& path);

// Motion file: JSON lines. First line is a header record carrying fps,
// side, frame tag and the hand template; each following line is
// {t, visible, phi[3], theta[45], beta[10], gamma[3]}.
void write_motion(const std::filesystem::path& path, const MotionSequence& seq,
                  const HandTemplate& tmpl);
MotionSequence read_motion(const std::filesystem::path& path,
                           HandTemplate* tmpl = nullptr);

// 16-bit binary PGM with a "# scale <s>" comment; meters = value * s.
void write_pgm16(const std::filesystem::path& path, const DepthImage& img);
DepthImage read_pgm16(const std::filesystem::path& path);
void write_pgm_mask(const std::filesystem::path& path, const Mask& mask);
Mask read_pgm_mask(const std::filesystem::path& path);

// Scene directory layout:
//   cams_gt.tum, cams_slam.tum, cams_init.tum,
//   hand_world.jsonl, hand_camera.jsonl, tracks.jsonl,
//   depth/####_rel.pgm, depth/####_metric.pgm, masks/####.pgm,
//   scene.meta (spec echo + template + per-track anchor depth inits)
void save_scene(const SceneBundle& bundle, const std::filesystem::path& dir);
SceneBundle load_scene(const std::filesystem::path& dir);

void write_report(const std::filesystem::path& txt_path,
                  const std::filesystem::path& json_path,
                  const MetricReport& report);
MetricReport read_report_json(const std::filesystem::path& json_path);

// SceneSpec <-> JSON (config files and the scene.meta echo).
std::string scene_spec_to_json(const SceneSpec& spec);
SceneSpec scene_spec_from_json(const std::string& text);

void write_text_atomic(const std::filesystem::path& path,
                       const std::string& text);
std::string read_text(const std::filesystem::path& path);

}  // namespace egohand
