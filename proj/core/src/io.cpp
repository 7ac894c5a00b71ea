#include "egohand/io.hpp"

#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace egohand {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

namespace {

std::string fmt9(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

fs::path temp_sibling(const fs::path& path) {
  return path.parent_path() / (path.filename().string() + ".tmp");
}

}  // namespace

void write_text_atomic(const fs::path& path, const std::string& text) {
  const fs::path tmp = temp_sibling(path);
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw IoError("cannot open for writing: " + tmp.string());
    os << text;
    if (!os) throw IoError("write failed: " + tmp.string());
  }
  fs::rename(tmp, path);
}

std::string read_text(const fs::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open: " + path.string());
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

void write_tum(const fs::path& path, const CameraTrajectory& traj) {
  std::ostringstream os;
  for (int t = 0; t < traj.size(); ++t) {
    const UnitQuaternion q = matrix_to_quat(traj.poses[t].R);
    const Vec3& p = traj.poses[t].t;
    os << fmt9(traj.timestamps[t]) << ' ' << fmt9(p.x()) << ' ' << fmt9(p.y())
       << ' ' << fmt9(p.z()) << ' ' << fmt9(q.x) << ' ' << fmt9(q.y) << ' '
       << fmt9(q.z) << ' ' << fmt9(q.w) << '\n';
  }
  write_text_atomic(path, os.str());
}

CameraTrajectory read_tum(const fs::path& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open: " + path.string());
  CameraTrajectory traj;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    double ts, tx, ty, tz, qx, qy, qz, qw;
    if (!(ls >> ts >> tx >> ty >> tz >> qx >> qy >> qz >> qw)) {
      throw IoError("malformed TUM line in " + path.string() + ": " + line);
    }
    traj.timestamps.push_back(ts);
    traj.poses.emplace_back(quat_to_matrix(UnitQuaternion(qw, qx, qy, qz)),
                            Vec3(tx, ty, tz));
  }
  return traj;
}

namespace {

ordered_json template_to_json(const HandTemplate& t) {
  ordered_json j;
  auto& rest = j["rest_joints"] = ordered_json::array();
  for (const Vec3& p : t.rest_joints) rest.push_back({p.x(), p.y(), p.z()});
  j["parent"] = t.parent;
  j["bone_group"] = t.bone_group;
  return j;
}

HandTemplate template_from_json(const ordered_json& j) {
  HandTemplate t;
  for (int i = 0; i < kNumJoints; ++i) {
    const auto& p = j.at("rest_joints").at(i);
    t.rest_joints[i] = Vec3(p.at(0), p.at(1), p.at(2));
    t.parent[i] = j.at("parent").at(i);
    t.bone_group[i] = j.at("bone_group").at(i);
  }
  return t;
}

const char* tag_name(FrameTag tag) {
  switch (tag) {
    case FrameTag::Camera: return "camera";
    case FrameTag::Canonical: return "canonical";
    default: return "world";
  }
}

FrameTag tag_from_name(const std::string& s) {
  if (s == "camera") return FrameTag::Camera;
  if (s == "canonical") return FrameTag::Canonical;
  if (s == "world") return FrameTag::World;
  throw IoError("unknown frame tag: " + s);
}

}  // namespace

void write_motion(const fs::path& path, const MotionSequence& seq,
                  const HandTemplate& tmpl) {
  std::ostringstream os;
  ordered_json header;
  header["fps"] = seq.fps;
  header["frame_tag"] = tag_name(seq.frame_tag);
  header["side"] =
      (!seq.states.empty() && seq.states[0].side == HandSide::Left) ? "left"
                                                                    : "right";
  header["template"] = template_to_json(tmpl);
  os << header.dump() << '\n';

  for (int t = 0; t < seq.size(); ++t) {
    const HandState& s = seq.states[t];
    ordered_json rec;
    rec["t"] = t;
    rec["visible"] = seq.is_visible(t);
    rec["phi"] = {s.phi.v.x(), s.phi.v.y(), s.phi.v.z()};
    auto& th = rec["theta"] = ordered_json::array();
    for (const AxisAngle& a : s.theta) {
      th.push_back(a.v.x());
      th.push_back(a.v.y());
      th.push_back(a.v.z());
    }
    rec["beta"] = s.beta;
    rec["gamma"] = {s.gamma.x(), s.gamma.y(), s.gamma.z()};
    os << rec.dump() << '\n';
  }
  write_text_atomic(path, os.str());
}

MotionSequence read_motion(const fs::path& path, HandTemplate* tmpl) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open: " + path.string());
  std::string line;
  if (!std::getline(is, line)) {
    throw IoError("empty motion file: " + path.string());
  }
  const ordered_json header = ordered_json::parse(line);
  MotionSequence seq;
  seq.fps = header.at("fps");
  seq.frame_tag = tag_from_name(header.at("frame_tag"));
  const HandSide side =
      header.at("side") == "left" ? HandSide::Left : HandSide::Right;
  if (tmpl) *tmpl = template_from_json(header.at("template"));

  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const ordered_json rec = ordered_json::parse(line);
    HandState s;
    s.side = side;
    const auto& phi = rec.at("phi");
    s.phi = AxisAngle(Vec3(phi.at(0), phi.at(1), phi.at(2)));
    const auto& th = rec.at("theta");
    for (int j = 0; j < kNumArticulated; ++j) {
      s.theta[j] =
          AxisAngle(Vec3(th.at(3 * j), th.at(3 * j + 1), th.at(3 * j + 2)));
    }
    for (int k = 0; k < kNumShape; ++k) s.beta[k] = rec.at("beta").at(k);
    const auto& g = rec.at("gamma");
    s.gamma = Vec3(g.at(0), g.at(1), g.at(2));
    seq.states.push_back(s);
    seq.visible.push_back(rec.at("visible").get<bool>() ? 1 : 0);
  }
  return seq;
}

void write_pgm16(const fs::path& path, const DepthImage& img) {
  double maxv = 0.0;
  for (double v : img.data()) maxv = std::max(maxv, v);
  const double scale = maxv > 0.0 ? maxv / 65535.0 : 1.0;

  std::ostringstream os;
  char header[128];
  std::snprintf(header, sizeof(header), "P5\n# scale %.17g\n%d %d\n65535\n",
                scale, img.width(), img.height());
  os << header;
  for (double v : img.data()) {
    const long q = std::lround(v / scale);
    const std::uint16_t u =
        std::uint16_t(std::clamp<long>(q, 0, 65535));
    os.put(char(u >> 8));
    os.put(char(u & 0xff));
  }
  write_text_atomic(path, os.str());
}

namespace {

void parse_pgmexpect(std::istream& is, int* w, int* h, double* scale) {
  std::string magic;
  is >> magic;
  if (magic != "P5") throw IoError("not a binary PGM");
  *scale = 1.0;
  // Optional comments; "# scale <v>" carries the depth quantization.
  is >> std::ws;
  while (is.peek() == '#') {
    std::string comment;
    std::getline(is, comment);
    std::istringstream cs(comment.substr(1));
    std::string key;
    if (cs >> key && key == "scale") cs >> *scale;
    is >> std::ws;
  }
  int maxval;
  is >> *w >> *h >> maxval;
  if (maxval != 65535) throw IoError("expected 16-bit PGM");
  is.get();  // single whitespace before raster
}

}  // namespace

DepthImage read_pgm16(const fs::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open: " + path.string());
  int w, h;
  double scale;
  parse_pgmexpect(is, &w, &h, &scale);
  DepthImage img(w, h);
  for (double& v : img.data()) {
    const int hi = is.get();
    const int lo = is.get();
    if (hi < 0 || lo < 0) throw IoError("truncated PGM: " + path.string());
    v = double((hi << 8) | lo) * scale;
  }
  return img;
}

void write_pgm_mask(const fs::path& path, const Mask& mask) {
  std::ostringstream os;
  char header[128];
  std::snprintf(header, sizeof(header), "P5\n%d %d\n65535\n", mask.width(),
                mask.height());
  os << header;
  for (std::uint8_t v : mask.data()) {
    const std::uint16_t u = v ? 65535 : 0;
    os.put(char(u >> 8));
    os.put(char(u & 0xff));
  }
  write_text_atomic(path, os.str());
}

Mask read_pgm_mask(const fs::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open: " + path.string());
  int w, h;
  double scale;
  parse_pgmexpect(is, &w, &h, &scale);
  Mask mask(w, h);
  for (std::uint8_t& v : mask.data()) {
    const int hi = is.get();
    const int lo = is.get();
    if (hi < 0 || lo < 0) throw IoError("truncated PGM: " + path.string());
    v = ((hi << 8) | lo) ? 1 : 0;
  }
  return mask;
}

namespace {

ordered_json intrinsics_to_json(const CameraIntrinsics& K) {
  return ordered_json{{"fx", K.fx}, {"fy", K.fy}, {"cx", K.cx}, {"cy", K.cy},
                      {"width", K.width}, {"height", K.height}};
}

CameraIntrinsics intrinsics_from_json(const ordered_json& j) {
  CameraIntrinsics K;
  K.fx = j.at("fx");
  K.fy = j.at("fy");
  K.cx = j.at("cx");
  K.cy = j.at("cy");
  K.width = j.at("width");
  K.height = j.at("height");
  return K;
}

ordered_json spec_to_json_obj(const SceneSpec& s) {
  ordered_json j;
  j["seed"] = s.seed;
  j["frames"] = s.frames;
  j["fps"] = s.fps;
  j["intrinsics"] = intrinsics_to_json(s.intrinsics);
  j["camera_control_count"] = s.camera_control_count;
  j["camera_excursion"] = s.camera_excursion;
  j["camera_rot_excursion"] = s.camera_rot_excursion;
  j["hand_control_count"] = s.hand_control_count;
  j["hand_depth"] = s.hand_depth;
  j["hand_lateral"] = s.hand_lateral;
  j["hand_excursion"] = s.hand_excursion;
  j["landmark_count"] = s.landmark_count;
  j["plane_mid_z"] = s.plane_mid_z;
  j["sphere_z"] = s.sphere_z;
  j["backdrop_z"] = s.backdrop_z;
  j["near_far_bands"] = s.near_far_bands;
  j["near_band_z"] = s.near_band_z;
  j["far_band_z"] = s.far_band_z;
  j["alpha_true"] = s.alpha_true;
  j["depth_noise"] = s.depth_noise;
  j["outlier_fraction"] = s.outlier_fraction;
  j["outlier_multiplier"] = s.outlier_multiplier;
  j["band_corrupt_fraction"] = s.band_corrupt_fraction;
  j["reliable_lo"] = s.reliable_lo;
  j["reliable_hi"] = s.reliable_hi;
  j["track_noise_px"] = s.track_noise_px;
  j["hand_coverage"] = s.hand_coverage;
  j["hand_state_noise"] = s.hand_state_noise;
  j["init_rot_noise"] = s.init_rot_noise;
  j["init_trans_noise"] = s.init_trans_noise;
  j["init_depth_noise"] = s.init_depth_noise;
  j["mask_radius_px"] = s.mask_radius_px;
  j["frustum_margin_px"] = s.frustum_margin_px;
  j["depth_frames_enabled"] = s.depth_frames_enabled;
  return j;
}

SceneSpec spec_from_json_obj(const ordered_json& j) {
  SceneSpec s;
  auto get = [&j](const char* key, auto& field) {
    if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
  };
  get("seed", s.seed);
  get("frames", s.frames);
  get("fps", s.fps);
  if (j.contains("intrinsics")) {
    s.intrinsics = intrinsics_from_json(j.at("intrinsics"));
  }
  get("camera_control_count", s.camera_control_count);
  get("camera_excursion", s.camera_excursion);
  get("camera_rot_excursion", s.camera_rot_excursion);
  get("hand_control_count", s.hand_control_count);
  get("hand_depth", s.hand_depth);
  get("hand_lateral", s.hand_lateral);
  get("hand_excursion", s.hand_excursion);
  get("landmark_count", s.landmark_count);
  get("plane_mid_z", s.plane_mid_z);
  get("sphere_z", s.sphere_z);
  get("backdrop_z", s.backdrop_z);
  get("near_far_bands", s.near_far_bands);
  get("near_band_z", s.near_band_z);
  get("far_band_z", s.far_band_z);
  get("alpha_true", s.alpha_true);
  get("depth_noise", s.depth_noise);
  get("outlier_fraction", s.outlier_fraction);
  get("outlier_multiplier", s.outlier_multiplier);
  get("band_corrupt_fraction", s.band_corrupt_fraction);
  get("reliable_lo", s.reliable_lo);
  get("reliable_hi", s.reliable_hi);
  get("track_noise_px", s.track_noise_px);
  get("hand_coverage", s.hand_coverage);
  get("hand_state_noise", s.hand_state_noise);
  get("init_rot_noise", s.init_rot_noise);
  get("init_trans_noise", s.init_trans_noise);
  get("init_depth_noise", s.init_depth_noise);
  get("mask_radius_px", s.mask_radius_px);
  get("frustum_margin_px", s.frustum_margin_px);
  get("depth_frames_enabled", s.depth_frames_enabled);
  return s;
}

std::string frame_name(int t) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%04d", t);
  return buf;
}

}  // namespace

std::string scene_spec_to_json(const SceneSpec& spec) {
  return spec_to_json_obj(spec).dump(2) + "\n";
}

SceneSpec scene_spec_from_json(const std::string& text) {
  try {
    return spec_from_json_obj(ordered_json::parse(text));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("scene spec parse error: ") + e.what());
  }
}

void save_scene(const SceneBundle& b, const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir / "depth", ec);
  fs::create_directories(dir / "masks", ec);

  write_tum(dir / "cams_gt.tum", b.gt_cams);
  write_tum(dir / "cams_slam.tum", b.slam_cams);
  write_tum(dir / "cams_init.tum", b.init_cams);
  write_motion(dir / "hand_world.jsonl", b.gt_hand_world, b.hand_template);
  write_motion(dir / "hand_camera.jsonl", b.gt_hand_camera, b.hand_template);

  {
    std::ostringstream os;
    for (std::size_t l = 0; l < b.tracks.size(); ++l) {
      const auto& tr = b.tracks[l];
      ordered_json rec;
      rec["id"] = tr.landmark_id;
      rec["dynamic"] = tr.is_dynamic;
      rec["init_inv_depth"] = b.init_inverse_depths[l];
      auto& obs = rec["obs"] = ordered_json::array();
      for (const auto& ob : tr.observations) {
        obs.push_back({ob.frame, ob.pixel.x(), ob.pixel.y(), ob.confidence});
      }
      os << rec.dump() << '\n';
    }
    write_text_atomic(dir / "tracks.jsonl", os.str());
  }

  for (int t = 0; t < int(b.depth_frames.size()); ++t) {
    write_pgm16(dir / "depth" / (frame_name(t) + "_rel.pgm"),
                b.depth_frames[t].rel);
    write_pgm16(dir / "depth" / (frame_name(t) + "_metric.pgm"),
                b.depth_frames[t].metric);
  }
  for (int t = 0; t < int(b.masks.size()); ++t) {
    write_pgm_mask(dir / "masks" / (frame_name(t) + ".pgm"), b.masks[t]);
  }

  ordered_json meta;
  meta["spec"] = spec_to_json_obj(b.spec);
  meta["template"] = template_to_json(b.hand_template);
  write_text_atomic(dir / "scene.meta", meta.dump(2) + "\n");
}

SceneBundle load_scene(const fs::path& dir) {
  SceneBundle b;
  const ordered_json meta = ordered_json::parse(read_text(dir / "scene.meta"));
  b.spec = spec_from_json_obj(meta.at("spec"));
  b.intrinsics = b.spec.intrinsics;
  b.hand_template = template_from_json(meta.at("template"));

  b.gt_cams = read_tum(dir / "cams_gt.tum");
  b.slam_cams = read_tum(dir / "cams_slam.tum");
  b.init_cams = read_tum(dir / "cams_init.tum");
  b.gt_hand_world = read_motion(dir / "hand_world.jsonl");
  b.gt_hand_camera = read_motion(dir / "hand_camera.jsonl");

  {
    std::istringstream is(read_text(dir / "tracks.jsonl"));
    std::string line;
    while (std::getline(is, line)) {
      if (line.empty()) continue;
      const ordered_json rec = ordered_json::parse(line);
      FeatureTrack tr;
      tr.landmark_id = rec.at("id");
      tr.is_dynamic = rec.at("dynamic");
      b.init_inverse_depths.push_back(rec.at("init_inv_depth"));
      for (const auto& ob : rec.at("obs")) {
        tr.observations.push_back(
            {ob.at(0), Vec2(ob.at(1), ob.at(2)), ob.at(3)});
      }
      b.tracks.push_back(std::move(tr));
    }
  }

  const int T = b.gt_cams.size();
  b.masks.reserve(T);
  for (int t = 0; t < T; ++t) {
    const fs::path p = dir / "masks" / (frame_name(t) + ".pgm");
    if (!fs::exists(p)) break;
    b.masks.push_back(read_pgm_mask(p));
  }
  for (int t = 0; t < T; ++t) {
    const fs::path rel = dir / "depth" / (frame_name(t) + "_rel.pgm");
    const fs::path met = dir / "depth" / (frame_name(t) + "_metric.pgm");
    if (!fs::exists(rel) || !fs::exists(met)) break;
    DepthFrame f;
    f.rel = read_pgm16(rel);
    f.metric = read_pgm16(met);
    f.hand_mask = t < int(b.masks.size())
                      ? b.masks[t]
                      : Mask(f.rel.width(), f.rel.height(), 0);
    f.valid = Mask(f.rel.width(), f.rel.height(), 0);
    for (int y = 0; y < f.rel.height(); ++y) {
      for (int x = 0; x < f.rel.width(); ++x) {
        f.valid.at(x, y) =
            (f.rel.at(x, y) > 0.0 && f.metric.at(x, y) > 0.0) ? 1 : 0;
      }
    }
    b.depth_frames.push_back(std::move(f));
  }
  return b;
}

void write_report(const fs::path& txt_path, const fs::path& json_path,
                  const MetricReport& r) {
  std::ostringstream txt;
  txt << "pa_mpjpe " << fmt9(r.pa_mpjpe) << "\n"
      << "auc " << fmt9(r.auc) << "\n"
      << "w_mpjpe " << fmt9(r.w_mpjpe) << "\n"
      << "wa_mpjpe " << fmt9(r.wa_mpjpe) << "\n"
      << "rte " << fmt9(r.rte) << "\n"
      << "accel " << fmt9(r.accel) << "\n"
      << "ate " << fmt9(r.ate) << "\n"
      << "ate_s " << fmt9(r.ate_s) << "\n"
      << "fid " << fmt9(r.fid) << "\n";
  write_text_atomic(txt_path, txt.str());

  ordered_json j;
  j["pa_mpjpe"] = r.pa_mpjpe;
  j["auc"] = r.auc;
  j["w_mpjpe"] = r.w_mpjpe;
  j["wa_mpjpe"] = r.wa_mpjpe;
  j["rte"] = r.rte;
  j["accel"] = r.accel;
  j["ate"] = r.ate;
  j["ate_s"] = r.ate_s;
  j["fid"] = r.fid;
  write_text_atomic(json_path, j.dump(2) + "\n");
}

MetricReport read_report_json(const fs::path& json_path) {
  const ordered_json j = ordered_json::parse(read_text(json_path));
  MetricReport r;
  r.pa_mpjpe = j.at("pa_mpjpe");
  r.auc = j.at("auc");
  r.w_mpjpe = j.at("w_mpjpe");
  r.wa_mpjpe = j.at("wa_mpjpe");
  r.rte = j.at("rte");
  r.accel = j.at("accel");
  r.ate = j.at("ate");
  r.ate_s = j.at("ate_s");
  r.fid = j.at("fid");
  return r;
}

}  // namespace egohand
