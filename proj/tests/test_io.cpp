#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <unistd.h>

#include "egohand/io.hpp"
#include "test_util.hpp"

using namespace egohand;
using namespace egohand::testutil;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("egohand_io_" + std::to_string(::getpid()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST_CASE("TUM round trip at 9 significant digits") {
  TempDir tmp;
  SplitRng rng(111);
  const CameraTrajectory traj = random_trajectory(rng, 25);
  write_tum(tmp.path / "a.tum", traj);
  const CameraTrajectory back = read_tum(tmp.path / "a.tum");

  REQUIRE(back.size() == traj.size());
  for (int t = 0; t < traj.size(); ++t) {
    CHECK(std::abs(back.timestamps[t] - traj.timestamps[t]) < 1e-9);
    CHECK((back.poses[t].t - traj.poses[t].t).norm() < 1e-7);
    CHECK((back.poses[t].R - traj.poses[t].R).norm() < 1e-7);
  }

  // Format: 8 space-separated fields per line.
  const std::string text = read_text(tmp.path / "a.tum");
  std::istringstream is(text);
  std::string line;
  int lines = 0;
  while (std::getline(is, line)) {
    ++lines;
    std::istringstream ls(line);
    std::string tok;
    int fields = 0;
    while (ls >> tok) ++fields;
    CHECK(fields == 8);
  }
  CHECK(lines == 25);
}

TEST_CASE("motion file round trip with template header") {
  TempDir tmp;
  SplitRng rng(112);
  MotionSequence seq = random_camera_motion(rng, 12);
  seq.visible[3] = 0;
  seq.visible[4] = 0;
  seq.fps = 25.0;
  const HandTemplate tmpl = HandTemplate::standard();

  write_motion(tmp.path / "m.jsonl", seq, tmpl);
  HandTemplate tmpl_back;
  const MotionSequence back = read_motion(tmp.path / "m.jsonl", &tmpl_back);

  REQUIRE(back.size() == seq.size());
  CHECK(back.fps == seq.fps);
  CHECK(back.frame_tag == seq.frame_tag);
  CHECK(back.visible == seq.visible);
  for (int t = 0; t < seq.size(); ++t) {
    CHECK(max_state_diff(back.states[t], seq.states[t]) < 1e-15);
  }
  for (int j = 0; j < kNumJoints; ++j) {
    CHECK((tmpl_back.rest_joints[j] - tmpl.rest_joints[j]).norm() < 1e-15);
    CHECK(tmpl_back.parent[j] == tmpl.parent[j]);
    CHECK(tmpl_back.bone_group[j] == tmpl.bone_group[j]);
  }
}

TEST_CASE("16-bit depth PGM quantizes to the stored scale") {
  TempDir tmp;
  DepthImage img(33, 21);
  SplitRng rng(113);
  for (double& v : img.data()) v = rng.uniform(0.0, 6.0);
  write_pgm16(tmp.path / "d.pgm", img);
  const DepthImage back = read_pgm16(tmp.path / "d.pgm");

  REQUIRE(back.width() == img.width());
  REQUIRE(back.height() == img.height());
  const double step = 6.0 / 65535.0;
  for (std::size_t i = 0; i < img.data().size(); ++i) {
    CHECK(std::abs(back.data()[i] - img.data()[i]) <= 0.51 * step);
  }
}

TEST_CASE("mask PGM round trip is exact") {
  TempDir tmp;
  SplitRng rng(114);
  Mask m(40, 18);
  for (auto& v : m.data()) v = rng.bernoulli(0.3);
  write_pgm_mask(tmp.path / "m.pgm", m);
  CHECK(read_pgm_mask(tmp.path / "m.pgm") == m);
}

TEST_CASE("scene directory round trip preserves the pipeline inputs") {
  TempDir tmp;
  SceneSpec spec;
  spec.seed = 115;
  spec.frames = 6;
  spec.alpha_true = 1.7;
  spec.hand_coverage = 0.2;
  spec.track_noise_px = 0.3;
  const SceneBundle b = generate(spec);
  save_scene(b, tmp.path / "scene");
  const SceneBundle back = load_scene(tmp.path / "scene");

  CHECK(back.spec.seed == spec.seed);
  CHECK(back.spec.alpha_true == spec.alpha_true);
  REQUIRE(back.tracks.size() == b.tracks.size());
  for (std::size_t l = 0; l < b.tracks.size(); ++l) {
    CHECK(back.tracks[l].landmark_id == b.tracks[l].landmark_id);
    CHECK(back.tracks[l].is_dynamic == b.tracks[l].is_dynamic);
    REQUIRE(back.tracks[l].observations.size() ==
            b.tracks[l].observations.size());
    for (std::size_t o = 0; o < b.tracks[l].observations.size(); ++o) {
      CHECK(back.tracks[l].observations[o].frame ==
            b.tracks[l].observations[o].frame);
      CHECK((back.tracks[l].observations[o].pixel -
             b.tracks[l].observations[o].pixel)
                .norm() < 1e-12);
    }
  }
  CHECK(back.init_inverse_depths == b.init_inverse_depths);
  REQUIRE(back.gt_cams.size() == b.gt_cams.size());
  for (int t = 0; t < b.gt_cams.size(); ++t) {
    CHECK((back.gt_cams.poses[t].t - b.gt_cams.poses[t].t).norm() < 1e-7);
    CHECK((back.init_cams.poses[t].t - b.init_cams.poses[t].t).norm() < 1e-7);
    CHECK(back.masks[t] == b.masks[t]);
  }
  CHECK(back.gt_hand_world.visible == b.gt_hand_world.visible);
  REQUIRE(back.depth_frames.size() == b.depth_frames.size());
}

TEST_CASE("expected files exist in a saved scene") {
  TempDir tmp;
  SceneSpec spec;
  spec.seed = 116;
  spec.frames = 3;
  const SceneBundle b = generate(spec);
  save_scene(b, tmp.path / "scene");

  for (const char* name :
       {"cams_gt.tum", "cams_slam.tum", "cams_init.tum", "hand_world.jsonl",
        "hand_camera.jsonl", "tracks.jsonl", "scene.meta"}) {
    CHECK(fs::exists(tmp.path / "scene" / name));
  }
  for (int t = 0; t < 3; ++t) {
    char rel[32], met[32], msk[32];
    std::snprintf(rel, sizeof(rel), "depth/%04d_rel.pgm", t);
    std::snprintf(met, sizeof(met), "depth/%04d_metric.pgm", t);
    std::snprintf(msk, sizeof(msk), "masks/%04d.pgm", t);
    CHECK(fs::exists(tmp.path / "scene" / rel));
    CHECK(fs::exists(tmp.path / "scene" / met));
    CHECK(fs::exists(tmp.path / "scene" / msk));
  }
}

TEST_CASE("metric report text and json") {
  TempDir tmp;
  MetricReport r;
  r.pa_mpjpe = 1.25;
  r.auc = 0.93;
  r.w_mpjpe = 10.5;
  r.wa_mpjpe = 7.25;
  r.rte = 0.4;
  r.accel = 2.5;
  r.ate = 3.75;
  r.ate_s = 8.125;
  r.fid = 0.0625;
  write_report(tmp.path / "report.txt", tmp.path / "report.json", r);

  const MetricReport back = read_report_json(tmp.path / "report.json");
  CHECK(back.pa_mpjpe == r.pa_mpjpe);
  CHECK(back.auc == r.auc);
  CHECK(back.w_mpjpe == r.w_mpjpe);
  CHECK(back.wa_mpjpe == r.wa_mpjpe);
  CHECK(back.rte == r.rte);
  CHECK(back.accel == r.accel);
  CHECK(back.ate == r.ate);
  CHECK(back.ate_s == r.ate_s);
  CHECK(back.fid == r.fid);

  const std::string txt = read_text(tmp.path / "report.txt");
  for (const char* key : {"pa_mpjpe", "auc", "w_mpjpe", "wa_mpjpe", "rte",
                          "accel", "ate", "ate_s", "fid"}) {
    CHECK(txt.find(key) != std::string::npos);
  }
}

TEST_CASE("scene spec json round trip") {
  SceneSpec spec;
  spec.seed = 17;
  spec.frames = 77;
  spec.alpha_true = 3.25;
  spec.near_far_bands = true;
  spec.track_noise_px = 0.625;
  const SceneSpec back = scene_spec_from_json(scene_spec_to_json(spec));
  CHECK(back.seed == spec.seed);
  CHECK(back.frames == spec.frames);
  CHECK(back.alpha_true == spec.alpha_true);
  CHECK(back.near_far_bands == spec.near_far_bands);
  CHECK(back.track_noise_px == spec.track_noise_px);
  CHECK_THROWS_AS(scene_spec_from_json("{broken"), ConfigError);
}
