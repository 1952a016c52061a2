// SPDX-License-Identifier: Apache-2.0
#include "mogen/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <limits>
#include <string>

#include "mogen/common.hpp"
#include "mogen/io.hpp"

namespace mogen {

namespace {

// 30-degree oblique orthographic view; SVG y points down.
constexpr double kViewCos = 0.8660254037844387;
constexpr double kViewSin = 0.5;

double proj_u(const double* p) { return kViewCos * p[0] + kViewSin * p[2]; }
double proj_v(const double* p) { return -p[1]; }

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f", x);
  if (std::strcmp(buf, "-0.0") == 0) return "0.0";
  return buf;
}

std::string fmt3(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", x);
  return buf;
}

}  // namespace

std::string render_svg(const MotionSequence& seq, const SvgOptions& opt) {
  const int64_t n = seq.length();
  if (n < 1) fail_value("render_svg: empty motion");
  if (opt.fps < 0.0 || opt.scale <= 0.0 || opt.margin < 0.0) {
    fail_value("render_svg: fps/scale/margin out of range");
  }
  const Skeleton& sk = seq.skeleton;
  const int J = sk.joints;
  const std::vector<double> pos = world_joints(seq);
  const double fps = opt.fps > 0.0 ? opt.fps : seq.fps;

  double umin = std::numeric_limits<double>::infinity();
  double umax = -umin, vmin = umin, vmax = -umin;
  for (int64_t i = 0; i < n * J; ++i) {
    const double* p = pos.data() + i * 3;
    umin = std::min(umin, proj_u(p));
    umax = std::max(umax, proj_u(p));
    vmin = std::min(vmin, proj_v(p));
    vmax = std::max(vmax, proj_v(p));
  }
  vmax = std::max(vmax, 0.0);  // keep the ground in view
  vmin = std::min(vmin, 0.0);

  const double width = (umax - umin) * opt.scale + 2.0 * opt.margin;
  const double height = (vmax - vmin) * opt.scale + 2.0 * opt.margin;
  const auto px = [&](double u) { return (u - umin) * opt.scale + opt.margin; };
  const auto py = [&](double v) { return (v - vmin) * opt.scale + opt.margin; };
  const auto joint_xy = [&](int64_t f, int j, double& x, double& y) {
    const double* p = pos.data() + (f * J + j) * 3;
    x = px(proj_u(p));
    y = py(proj_v(p));
  };

  std::string out;
  out.reserve(static_cast<size_t>(n) * static_cast<size_t>(J) * 64 + 1024);
  out += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  out += "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 " + fmt(width) + " " +
         fmt(height) + "\" width=\"" + fmt(width) + "\" height=\"" + fmt(height) + "\">\n";
  out += "<rect x=\"0\" y=\"0\" width=\"" + fmt(width) + "\" height=\"" + fmt(height) +
         "\" fill=\"#f8fafc\"/>\n";
  out += "<line x1=\"0\" y1=\"" + fmt(py(0.0)) + "\" x2=\"" + fmt(width) + "\" y2=\"" +
         fmt(py(0.0)) + "\" stroke=\"#cbd5e1\" stroke-width=\"1\"/>\n";

  // root trajectory trace
  out += "<polyline fill=\"none\" stroke=\"#94a3b8\" stroke-width=\"1.5\" "
         "stroke-dasharray=\"4 3\" points=\"";
  for (int64_t f = 0; f < n; ++f) {
    double x, y;
    joint_xy(f, 0, x, y);
    if (f) out += " ";
    out += fmt(x) + "," + fmt(y);
  }
  out += "\"/>\n";

  // one group of bone segments per frame
  out += "<defs>\n";
  for (int64_t f = 0; f < n; ++f) {
    out += "<g id=\"f" + std::to_string(f) +
           "\" stroke=\"#1e293b\" stroke-width=\"3\" stroke-linecap=\"round\">\n";
    for (int j = 1; j < J; ++j) {
      double x1, y1, x2, y2;
      joint_xy(f, sk.parents[static_cast<size_t>(j)], x1, y1);
      joint_xy(f, j, x2, y2);
      out += "<line x1=\"" + fmt(x1) + "\" y1=\"" + fmt(y1) + "\" x2=\"" + fmt(x2) + "\" y2=\"" +
             fmt(y2) + "\"/>\n";
    }
    double rx, ry;
    joint_xy(f, 0, rx, ry);
    out += "<circle cx=\"" + fmt(rx) + "\" cy=\"" + fmt(ry) +
           "\" r=\"3.5\" fill=\"#1e293b\" stroke=\"none\"/>\n";
    out += "</g>\n";
  }
  out += "</defs>\n";

  out += "<use href=\"#f0\">";
  if (n > 1) {
    out += "\n<animate attributeName=\"href\" calcMode=\"discrete\" repeatCount=\"indefinite\" "
           "dur=\"" +
           fmt3(static_cast<double>(n) / fps) + "s\" values=\"";
    for (int64_t f = 0; f < n; ++f) {
      if (f) out += ";";
      out += "#f" + std::to_string(f);
    }
    out += "\"/>\n";
  }
  out += "</use>\n";
  out += "</svg>\n";
  return out;
}

void export_svg(const std::string& motion_path, const std::string& out_path, double fps) {
  ojson j;
  try {
    j = ojson::parse(read_text_file(motion_path));
  } catch (const nlohmann::json::exception& e) {
    fail_io("invalid JSON in ", motion_path, ": ", e.what());
  }
  const MotionSequence seq = motion_from_json(j, Skeleton::toy12());
  SvgOptions opt;
  opt.fps = fps;
  write_text_file(out_path, render_svg(seq, opt));
}

}  // namespace mogen
