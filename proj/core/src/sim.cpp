#include "egohand/sim.hpp"

#include <algorithm>
#include <cmath>

#include "egohand/canonical.hpp"
#include "egohand/rng.hpp"
#include "egohand/world.hpp"

namespace egohand {

namespace {

double catmull_rom_1d(double p0, double p1, double p2, double p3, double u) {
  return 0.5 * ((2.0 * p1) + (-p0 + p2) * u +
                (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3) * u * u +
                (-p0 + 3.0 * p1 - 3.0 * p2 + p3) * u * u * u);
}

template <typename Get>
double spline_eval(int n, double s, Get get) {
  int i = int(std::floor(s));
  i = std::clamp(i, 0, n - 2);
  const double u = s - i;
  auto at = [&](int k) { return get(std::clamp(k, 0, n - 1)); };
  return catmull_rom_1d(at(i - 1), at(i), at(i + 1), at(i + 2), u);
}

Vec3 rand_in_box(SplitRng& rng, double sx, double sy, double sz) {
  return Vec3(rng.uniform(-sx, sx), rng.uniform(-sy, sy), rng.uniform(-sz, sz));
}

AxisAngle rand_rotation(SplitRng& rng, double max_angle) {
  Vec3 axis(rng.normal(), rng.normal(), rng.normal());
  const double n = axis.norm();
  if (n < 1e-12) return AxisAngle();
  return AxisAngle(axis / n * rng.uniform(0.0, max_angle));
}

// Analytic static scene used for both depth rendering and landmarks.
struct Surfaces {
  // finite mid-depth patch
  double mid_z, mid_x0 = -0.95, mid_x1 = -0.18, mid_y0 = -0.7, mid_y1 = 0.7;
  // sphere
  Vec3 sphere_c;
  double sphere_r = 0.34;
  // infinite backdrop with an optional far pit window
  double backdrop_z;
  bool bands = false;
  double near_z, near_x0 = 0.12, near_x1 = 0.55, near_y0 = 0.08,
                 near_y1 = 0.42;
  double far_z, pit_x0 = -0.5, pit_x1 = 0.25, pit_y0 = -0.8, pit_y1 = -0.25;

  static Surfaces from_spec(const SceneSpec& s) {
    Surfaces f;
    f.mid_z = s.plane_mid_z;
    f.sphere_c = Vec3(0.45, -0.05, s.sphere_z);
    f.backdrop_z = s.backdrop_z;
    f.bands = s.near_far_bands;
    f.near_z = s.near_band_z;
    f.far_z = s.far_band_z;
    return f;
  }

  // First hit along origin + t*dir, t > 1e-6; returns t or -1.
  double raycast(const Vec3& o, const Vec3& d) const {
    double best = -1.0;
    auto consider = [&best](double t) {
      if (t > 1e-6 && (best < 0.0 || t < best)) best = t;
    };

    auto plane_hit = [&](double z, double x0, double x1, double y0, double y1,
                         bool finite) {
      if (std::abs(d.z()) < 1e-12) return;
      const double t = (z - o.z()) / d.z();
      if (t <= 1e-6) return;
      const Vec3 p = o + t * d;
      if (!finite ||
          (p.x() >= x0 && p.x() <= x1 && p.y() >= y0 && p.y() <= y1)) {
        consider(t);
      }
    };

    if (bands) plane_hit(near_z, near_x0, near_x1, near_y0, near_y1, true);
    plane_hit(mid_z, mid_x0, mid_x1, mid_y0, mid_y1, true);

    // Sphere.
    {
      const Vec3 oc = o - sphere_c;
      const double b = oc.dot(d);
      const double c = oc.squaredNorm() - sphere_r * sphere_r;
      const double disc = b * b - d.squaredNorm() * c;
      if (disc > 0.0) {
        const double sq = std::sqrt(disc);
        const double t1 = (-b - sq) / d.squaredNorm();
        const double t2 = (-b + sq) / d.squaredNorm();
        if (t1 > 1e-6) {
          consider(t1);
        } else if (t2 > 1e-6) {
          consider(t2);
        }
      }
    }

    // Backdrop, possibly opening into the far pit.
    if (std::abs(d.z()) > 1e-12) {
      const double t = (backdrop_z - o.z()) / d.z();
      if (t > 1e-6) {
        const Vec3 p = o + t * d;
        const bool in_pit = bands && p.x() >= pit_x0 && p.x() <= pit_x1 &&
                            p.y() >= pit_y0 && p.y() <= pit_y1;
        if (in_pit) {
          const double tf = (far_z - o.z()) / d.z();
          if (tf > 1e-6) consider(tf);
        } else {
          consider(t);
        }
      }
    }
    return best;
  }
};

std::vector<RigidTransform> make_camera_controls(const SceneSpec& spec,
                                                 SplitRng rng) {
  std::vector<RigidTransform> controls;
  controls.reserve(spec.camera_control_count);
  controls.push_back(RigidTransform::identity());
  for (int i = 1; i < spec.camera_control_count; ++i) {
    const Vec3 t = rand_in_box(rng, spec.camera_excursion,
                               0.6 * spec.camera_excursion,
                               0.4 * spec.camera_excursion);
    const Mat3 R = aa_to_matrix(rand_rotation(rng, spec.camera_rot_excursion));
    controls.emplace_back(R, t);
  }
  return controls;
}

std::vector<HandState> make_hand_controls(const SceneSpec& spec,
                                          SplitRng rng) {
  std::vector<HandState> controls;
  const int n = spec.hand_control_count;
  controls.reserve(n);
  for (int i = 0; i < n; ++i) {
    HandState s;
    s.gamma = Vec3(rng.uniform(-spec.hand_lateral, spec.hand_lateral),
                   rng.uniform(-0.6 * spec.hand_lateral,
                               0.6 * spec.hand_lateral),
                   spec.hand_depth + rng.uniform(-0.04, 0.04));
    if (spec.hand_excursion > 0.0 && i > n / 3 && i <= (2 * n) / 3) {
      s.gamma.x() += spec.hand_excursion;
    }
    // Rotation-rich articulation with gentle translation: egocentric hand
    // use is dominated by wrist turns and finger curls.
    s.phi = rand_rotation(rng, 1.25);
    for (int j = 0; j < kNumArticulated; ++j) {
      s.theta[j] = AxisAngle(rng.uniform(0.0, 0.9), rng.uniform(-0.25, 0.25),
                             rng.uniform(-0.25, 0.25));
    }
    for (int k = 0; k < 5; ++k) s.beta[k] = rng.uniform(-0.15, 0.15);
    controls.push_back(s);
  }
  return controls;
}

RigidTransform spline_pose(const std::vector<RigidTransform>& controls,
                           double s) {
  const int n = int(controls.size());
  Vec3 t;
  for (int k = 0; k < 3; ++k) {
    t[k] = spline_eval(n, s, [&](int i) { return controls[i].t[k]; });
  }
  const int i = std::clamp(int(std::floor(s)), 0, n - 2);
  const UnitQuaternion q =
      slerp(matrix_to_quat(controls[i].R), matrix_to_quat(controls[i + 1].R),
            s - i);
  return RigidTransform(quat_to_matrix(q), t);
}

HandState spline_state(const std::vector<HandState>& controls, double s) {
  const int n = int(controls.size());
  HandState out;
  auto ev = [&](auto get) { return spline_eval(n, s, get); };
  for (int k = 0; k < 3; ++k) {
    out.gamma[k] = ev([&](int i) { return controls[i].gamma[k]; });
    out.phi.v[k] = ev([&](int i) { return controls[i].phi.v[k]; });
  }
  for (int j = 0; j < kNumArticulated; ++j) {
    for (int k = 0; k < 3; ++k) {
      out.theta[j].v[k] = ev([&](int i) { return controls[i].theta[j].v[k]; });
    }
  }
  for (int b = 0; b < kNumShape; ++b) {
    out.beta[b] = ev([&](int i) { return controls[i].beta[b]; });
  }
  out.side = controls.front().side;
  return out;
}

}  // namespace

Vec3 catmull_rom(const std::vector<Vec3>& controls, double s) {
  Vec3 out;
  for (int k = 0; k < 3; ++k) {
    out[k] = spline_eval(int(controls.size()), s,
                         [&](int i) { return controls[i][k]; });
  }
  return out;
}

bool frustum_visibility(const Joints3d& joints_cam, const CameraIntrinsics& K,
                        double margin_px, bool require_all) {
  int inside = 0;
  for (int j = 0; j < kNumJoints; ++j) {
    const Vec3& p = joints_cam.j[j];
    if (p.z() <= 1e-6) continue;
    const double u = K.fx * p.x() / p.z() + K.cx;
    const double v = K.fy * p.y() / p.z() + K.cy;
    if (u >= -margin_px && u <= K.width - 1 + margin_px && v >= -margin_px &&
        v <= K.height - 1 + margin_px) {
      ++inside;
    }
  }
  return require_all ? inside == kNumJoints : inside >= 1;
}

SceneBundle generate(const SceneSpec& spec) {
  if (spec.frames < 2 || !(spec.fps > 0.0) || !(spec.alpha_true > 0.0) ||
      spec.outlier_fraction < 0.0 || spec.outlier_fraction > 1.0 ||
      spec.hand_coverage < 0.0 || spec.hand_coverage > 1.0 ||
      spec.band_corrupt_fraction < 0.0 || spec.band_corrupt_fraction > 1.0 ||
      spec.landmark_count < 0) {
    throw InvalidSpec("generate: invalid scene spec");
  }

  SceneBundle b;
  b.spec = spec;
  b.intrinsics = spec.intrinsics;
  b.hand_template = HandTemplate::standard();

  const SplitRng root(spec.seed);
  const int T = spec.frames;
  const Surfaces surf = Surfaces::from_spec(spec);

  // Camera trajectory.
  const auto cam_controls =
      spec.camera_controls.empty()
          ? make_camera_controls(spec, root.derive("camera-controls"))
          : spec.camera_controls;
  b.gt_cams.poses.resize(T);
  b.gt_cams.timestamps.resize(T);
  for (int t = 0; t < T; ++t) {
    const double s =
        double(t) * double(cam_controls.size() - 1) / double(T - 1);
    b.gt_cams.poses[t] = spline_pose(cam_controls, s);
    b.gt_cams.timestamps[t] = t / spec.fps;
  }

  b.slam_cams = b.gt_cams;
  for (auto& p : b.slam_cams.poses) p.t /= spec.alpha_true;

  // Hand motion (world frame), then camera frame + visibility.
  const auto hand_controls =
      spec.hand_controls.empty()
          ? make_hand_controls(spec, root.derive("hand-controls"))
          : spec.hand_controls;
  b.gt_hand_world.states.resize(T);
  b.gt_hand_world.visible.assign(T, 1);
  b.gt_hand_world.frame_tag = FrameTag::World;
  b.gt_hand_world.fps = spec.fps;
  for (int t = 0; t < T; ++t) {
    const double s =
        double(t) * double(hand_controls.size() - 1) / double(T - 1);
    b.gt_hand_world.states[t] = spline_state(hand_controls, s);
  }

  b.gt_hand_camera = world_to_camera_motion(b.gt_hand_world, b.gt_cams);
  std::vector<Joints3d> joints_cam(T);
  for (int t = 0; t < T; ++t) {
    joints_cam[t] =
        forward_kinematics(b.hand_template, b.gt_hand_camera.states[t]);
    const bool vis = frustum_visibility(joints_cam[t], spec.intrinsics,
                                        spec.frustum_margin_px);
    b.gt_hand_world.visible[t] = vis;
    b.gt_hand_camera.visible[t] = vis;
  }

  // Hand-state noise on the "network estimates"; zero state when invisible.
  {
    SplitRng rng = root.derive("hand-noise");
    for (int t = 0; t < T; ++t) {
      if (!b.gt_hand_camera.is_visible(t)) {
        b.gt_hand_camera.states[t] = HandState{};
        continue;
      }
      if (spec.hand_state_noise > 0.0) {
        HandState& s = b.gt_hand_camera.states[t];
        for (int k = 0; k < 3; ++k) {
          s.gamma[k] += rng.normal(0.0, spec.hand_state_noise);
          s.phi.v[k] += rng.normal(0.0, spec.hand_state_noise);
        }
        for (int j = 0; j < kNumArticulated; ++j) {
          for (int k = 0; k < 3; ++k) {
            s.theta[j].v[k] += rng.normal(0.0, spec.hand_state_noise);
          }
        }
      }
    }
  }

  // Hand masks rendered from the ground-truth camera-frame hand.
  b.masks.resize(T);
  const auto bones = b.hand_template.bones();
  for (int t = 0; t < T; ++t) {
    Joints2d j2;
    std::array<bool, kNumJoints> valid{};
    for (int j = 0; j < kNumJoints; ++j) {
      if (joints_cam[t].j[j].z() > 1e-6) {
        j2.j[j] = project(spec.intrinsics, joints_cam[t].j[j]);
        valid[j] = true;
      }
    }
    b.masks[t] = render_hand_mask(spec.intrinsics, j2, spec.mask_radius_px,
                                  bones, &valid);
  }

  // Static landmarks: backprojected from random frame-0 pixels.
  std::vector<Vec3> landmarks;
  {
    SplitRng rng = root.derive("landmarks");
    const RigidTransform& c0 = b.gt_cams.poses[0];
    int guard = 0;
    while (int(landmarks.size()) < spec.landmark_count && guard++ < 20000) {
      const double u = rng.uniform(2.0, spec.intrinsics.width - 3.0);
      const double v = rng.uniform(2.0, spec.intrinsics.height - 3.0);
      const Vec3 dir_cam((u - spec.intrinsics.cx) / spec.intrinsics.fx,
                         (v - spec.intrinsics.cy) / spec.intrinsics.fy, 1.0);
      const Vec3 o = c0.t;
      const Vec3 d = c0.R * dir_cam;
      const double th = surf.raycast(o, d);
      if (th <= 0.0) continue;
      landmarks.push_back(o + th * d);
    }
  }

  // Tracks: static landmarks first (landmark 0 anchors the scale gauge),
  // then dynamic hand-attached tracks up to the coverage target.
  SplitRng track_rng = root.derive("track-noise");
  auto observe = [&](const Vec3& world, int frame) -> std::pair<bool, Vec2> {
    const RigidTransform inv = invert(b.gt_cams.poses[frame]);
    const Vec3 pc = inv.apply(world);
    if (pc.z() <= 0.05) return {false, Vec2::Zero()};
    Vec2 px(spec.intrinsics.fx * pc.x() / pc.z() + spec.intrinsics.cx,
            spec.intrinsics.fy * pc.y() / pc.z() + spec.intrinsics.cy);
    if (spec.track_noise_px > 0.0) {
      px.x() += track_rng.normal(0.0, spec.track_noise_px);
      px.y() += track_rng.normal(0.0, spec.track_noise_px);
    }
    if (px.x() < 1.0 || px.x() > spec.intrinsics.width - 2.0 || px.y() < 1.0 ||
        px.y() > spec.intrinsics.height - 2.0) {
      return {false, Vec2::Zero()};
    }
    return {true, px};
  };

  // Metric depth of each track's point at its anchor frame, recorded while
  // building the track.
  std::vector<double> anchor_depths;

  auto cam_depth = [&](const Vec3& world, int frame) {
    return invert(b.gt_cams.poses[frame]).apply(world).z();
  };

  std::size_t n_static_obs = 0;
  int next_id = 0;
  for (const Vec3& lm : landmarks) {
    FeatureTrack tr;
    tr.is_dynamic = false;
    for (int t = 0; t < T; ++t) {
      auto [ok, px] = observe(lm, t);
      if (ok) tr.observations.push_back({t, px, 1.0});
    }
    if (tr.observations.size() >= 2) {
      n_static_obs += tr.observations.size();
      tr.landmark_id = next_id++;
      anchor_depths.push_back(cam_depth(lm, tr.observations.front().frame));
      b.tracks.push_back(std::move(tr));
    }
  }

  if (spec.hand_coverage > 0.0) {
    const double f = spec.hand_coverage;
    const std::size_t target_dyn =
        std::size_t(std::llround(f / (1.0 - f) * double(n_static_obs)));
    std::vector<Joints3d> joints_world(T);
    for (int t = 0; t < T; ++t) {
      joints_world[t] =
          forward_kinematics(b.hand_template, b.gt_hand_world.states[t]);
    }
    std::size_t n_dyn_obs = 0;
    for (int pass = 0; pass < 8 && n_dyn_obs < target_dyn; ++pass) {
      for (int j = 0; j < kNumJoints && n_dyn_obs < target_dyn; ++j) {
        // Small per-pass offset separates repeated attachments.
        const Vec3 offset = 0.004 * pass * Vec3(1, 0.5, 0.25);
        FeatureTrack tr;
        tr.is_dynamic = true;
        std::vector<Vec3> points;
        for (int t = 0; t < T; ++t) {
          if (!b.gt_hand_world.is_visible(t)) continue;
          const Vec3 world = joints_world[t].j[j] + offset;
          auto [ok, px] = observe(world, t);
          if (ok) {
            tr.observations.push_back({t, px, 1.0});
            points.push_back(world);
          }
        }
        if (tr.observations.size() >= 2) {
          n_dyn_obs += tr.observations.size();
          tr.landmark_id = next_id++;
          anchor_depths.push_back(
              std::max(cam_depth(points.front(),
                                 tr.observations.front().frame),
                       0.05));
          b.tracks.push_back(std::move(tr));
        }
      }
    }
  }

  // BA initialization: perturbed slam-unit poses and anchor depths.
  // Landmark 0 keeps its exact inverse depth so the solver's scale gauge
  // matches the slam unit of the relative depth maps.
  {
    SplitRng rng = root.derive("init-noise");
    b.init_cams = b.slam_cams;
    for (int t = 1; t < T; ++t) {
      RigidTransform& p = b.init_cams.poses[t];
      if (spec.init_rot_noise > 0.0) {
        p.R = aa_to_matrix(rand_rotation(rng, spec.init_rot_noise)) * p.R;
      }
      if (spec.init_trans_noise > 0.0) {
        const Vec3 d = p.t - b.init_cams.poses[0].t;
        Vec3 n(rng.normal(), rng.normal(), rng.normal());
        p.t += spec.init_trans_noise * d.norm() * n;
      }
    }

    b.init_inverse_depths.reserve(b.tracks.size());
    for (std::size_t l = 0; l < b.tracks.size(); ++l) {
      double rho = spec.alpha_true / anchor_depths[l];  // slam units
      if (spec.init_depth_noise > 0.0 && l != 0) {
        rho *= 1.0 + rng.normal(0.0, spec.init_depth_noise);
        rho = std::max(rho, 1e-3);
      }
      b.init_inverse_depths.push_back(rho);
    }
  }

  // Depth frames.
  if (spec.depth_frames_enabled) {
    SplitRng noise_rng = root.derive("depth-noise");
    SplitRng outlier_rng = root.derive("outliers");
    SplitRng band_rng = root.derive("band");
    const int W = spec.intrinsics.width;
    const int H = spec.intrinsics.height;
    b.depth_frames.resize(T);
    for (int t = 0; t < T; ++t) {
      DepthFrame& f = b.depth_frames[t];
      f.rel = DepthImage(W, H, 0.0);
      f.metric = DepthImage(W, H, 0.0);
      f.valid = Mask(W, H, 0);
      f.hand_mask = b.masks[t];
      const RigidTransform& cam = b.gt_cams.poses[t];
      const Vec3 fwd = cam.R.col(2);

      // Hand depth at masked pixels: nearest-joint camera depth.
      double hand_z = spec.hand_depth;
      {
        const Vec3 pc = invert(cam).apply(b.gt_hand_world.states[t].gamma);
        if (pc.z() > 0.05) hand_z = pc.z();
      }

      for (int y = 0; y < H; ++y) {
        for (int x = 0; x < W; ++x) {
          const Vec3 dir_cam((x - spec.intrinsics.cx) / spec.intrinsics.fx,
                             (y - spec.intrinsics.cy) / spec.intrinsics.fy,
                             1.0);
          const Vec3 d = cam.R * dir_cam;
          const double th = surf.raycast(cam.t, d);
          if (th <= 0.0) continue;
          const double depth = (th * d).dot(fwd);  // camera-frame z
          if (depth <= 0.02) continue;

          f.valid.at(x, y) = 1;
          double metric = depth;
          double rel = depth / spec.alpha_true;

          if (f.hand_mask.at(x, y)) {
            // Metric net sees the hand; SLAM geometry is corrupted by the
            // motion, modeled as seeing through to the static scene.
            metric = hand_z;
          }

          if (spec.depth_noise > 0.0) {
            metric += noise_rng.normal(0.0, spec.depth_noise);
            if (metric < 0.01) metric = 0.01;
          }
          if (spec.band_corrupt_fraction > 0.0 &&
              (depth < spec.reliable_lo || depth > spec.reliable_hi) &&
              band_rng.bernoulli(spec.band_corrupt_fraction)) {
            metric = depth * (depth < spec.reliable_lo
                                  ? band_rng.uniform(0.5, 1.4)
                                  : band_rng.uniform(0.8, 1.5));
            // Stay in regime so band sampling can reject by observed value.
            metric = depth < spec.reliable_lo
                         ? std::min(metric, 0.95 * spec.reliable_lo)
                         : std::max(metric, 1.05 * spec.reliable_hi);
          }
          if (spec.outlier_fraction > 0.0 &&
              outlier_rng.bernoulli(spec.outlier_fraction)) {
            rel *= spec.outlier_multiplier;
          }
          f.rel.at(x, y) = rel;
          f.metric.at(x, y) = metric;
        }
      }
    }
  }

  return b;
}

std::vector<MotionSequence> sample_canonical_motions(std::uint64_t seed,
                                                     int count, int frames,
                                                     double fps) {
  std::vector<MotionSequence> out;
  out.reserve(count);
  SplitRng root(seed);
  CameraTrajectory identity_cams;
  identity_cams.poses.assign(frames, RigidTransform::identity());
  identity_cams.timestamps.resize(frames);
  for (int t = 0; t < frames; ++t) identity_cams.timestamps[t] = t / fps;

  for (int i = 0; i < count; ++i) {
    SceneSpec spec;
    spec.frames = frames;
    spec.fps = fps;
    const auto controls =
        make_hand_controls(spec, root.derive(std::uint64_t(i)));
    MotionSequence seq;
    seq.states.resize(frames);
    seq.visible.assign(frames, 1);
    seq.frame_tag = FrameTag::Camera;
    seq.fps = fps;
    for (int t = 0; t < frames; ++t) {
      const double s =
          double(t) * double(controls.size() - 1) / double(frames - 1);
      seq.states[t] = spline_state(controls, s);
    }
    out.push_back(camera_to_canonical(seq, identity_cams).sequence);
  }
  return out;
}

}  // namespace egohand
