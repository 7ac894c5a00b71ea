#include "plot.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

#include "egohand/io.hpp"

namespace egohand::plots {

Vec2 top_down(const Vec3& p) { return Vec2(p.x(), p.z()); }

Vec2 isometric(const Vec3& p) {
  // Fixed oblique projection.
  return Vec2(p.x() + 0.5 * p.z(), p.y() + 0.35 * p.z());
}

namespace {

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

struct Panel {
  double x0, y0, size;  // viewport square
  Vec2 lo, hi;          // data bounds

  Vec2 map(const Vec2& p) const {
    const double span = std::max({hi.x() - lo.x(), hi.y() - lo.y(), 1e-9});
    const double s = (size - 20.0) / span;
    return Vec2(x0 + 10.0 + s * (p.x() - lo.x()),
                y0 + size - 10.0 - s * (p.y() - lo.y()));
  }
};

void emit_polyline(std::ostringstream& os, const Panel& panel,
                   const std::vector<Vec2>& pts, const char* color,
                   const char* id) {
  os << "  <polyline id=\"" << id << "\" fill=\"none\" stroke=\"" << color
     << "\" stroke-width=\"1.5\" points=\"";
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const Vec2 m = panel.map(pts[i]);
    if (i) os << ' ';
    os << fmt(m.x()) << ',' << fmt(m.y());
  }
  os << "\"/>\n";
}

Panel fit_panel(double x0, double y0, double size,
                const std::vector<std::vector<Vec2>>& series) {
  Panel p{x0, y0, size, Vec2(1e300, 1e300), Vec2(-1e300, -1e300)};
  for (const auto& s : series) {
    for (const Vec2& v : s) {
      p.lo = p.lo.cwiseMin(v);
      p.hi = p.hi.cwiseMax(v);
    }
  }
  return p;
}

std::vector<Vec2> apply(const PointSeq& pts, Vec2 (*proj)(const Vec3&)) {
  std::vector<Vec2> out;
  out.reserve(pts.size());
  for (const Vec3& p : pts) out.push_back(proj(p));
  return out;
}

}  // namespace

PlotPaths write_trajectory_plots(const std::filesystem::path& out_dir,
                                 const PointSeq& gt_cam,
                                 const PointSeq& est_cam,
                                 const PointSeq& gt_hand,
                                 const PointSeq& est_hand) {
  PlotPaths paths{out_dir / "traj.csv", out_dir / "traj.svg"};

  std::ostringstream csv;
  csv << "frame,gt_cam_x,gt_cam_y,gt_cam_z,est_cam_x,est_cam_y,est_cam_z,"
         "gt_hand_x,gt_hand_y,gt_hand_z,est_hand_x,est_hand_y,est_hand_z\n";
  for (std::size_t t = 0; t < gt_cam.size(); ++t) {
    csv << t;
    for (const PointSeq* seq : {&gt_cam, &est_cam, &gt_hand, &est_hand}) {
      const Vec3& p = (*seq)[t];
      csv << ',' << fmt(p.x()) << ',' << fmt(p.y()) << ',' << fmt(p.z());
    }
    csv << '\n';
  }
  write_text_atomic(paths.csv, csv.str());

  const auto td = {apply(gt_cam, top_down), apply(est_cam, top_down),
                   apply(gt_hand, top_down), apply(est_hand, top_down)};
  const auto iso = {apply(gt_cam, isometric), apply(est_cam, isometric),
                    apply(gt_hand, isometric), apply(est_hand, isometric)};
  const std::vector<std::vector<Vec2>> td_v(td), iso_v(iso);
  const Panel left = fit_panel(0, 0, 400, td_v);
  const Panel right = fit_panel(400, 0, 400, iso_v);

  std::ostringstream svg;
  svg << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"800\" "
         "height=\"400\" viewBox=\"0 0 800 400\">\n"
      << "  <rect x=\"0\" y=\"0\" width=\"800\" height=\"400\" "
         "fill=\"white\"/>\n"
      << "  <line x1=\"400\" y1=\"0\" x2=\"400\" y2=\"400\" "
         "stroke=\"#cccccc\"/>\n"
      << "  <text x=\"12\" y=\"18\" font-size=\"13\">top-down (x,z)</text>\n"
      << "  <text x=\"412\" y=\"18\" font-size=\"13\">isometric</text>\n";
  emit_polyline(svg, left, td_v[0], "#202020", "td_gt_cam");
  emit_polyline(svg, left, td_v[1], "#d62728", "td_est_cam");
  emit_polyline(svg, left, td_v[2], "#1f77b4", "td_gt_hand");
  emit_polyline(svg, left, td_v[3], "#ff7f0e", "td_est_hand");
  emit_polyline(svg, right, iso_v[0], "#202020", "iso_gt_cam");
  emit_polyline(svg, right, iso_v[1], "#d62728", "iso_est_cam");
  emit_polyline(svg, right, iso_v[2], "#1f77b4", "iso_gt_hand");
  emit_polyline(svg, right, iso_v[3], "#ff7f0e", "iso_est_hand");
  svg << "</svg>\n";
  write_text_atomic(paths.svg, svg.str());
  return paths;
}

}  // namespace egohand::plots
