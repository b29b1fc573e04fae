#include "posefield/render.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

namespace posefield {

namespace {

// Evenly spread hues, fixed saturation/value.
std::string connection_color(int index, int total) {
  const double h = 360.0 * index / total;
  const double s = 0.85, v = 0.95;
  const double c = v * s;
  const double x = c * (1.0 - std::abs(std::fmod(h / 60.0, 2.0) - 1.0));
  const double m = v - c;
  double r = 0, g = 0, b = 0;
  if (h < 60) { r = c; g = x; }
  else if (h < 120) { r = x; g = c; }
  else if (h < 180) { g = c; b = x; }
  else if (h < 240) { g = x; b = c; }
  else if (h < 300) { r = x; b = c; }
  else { r = c; b = x; }
  char buf[8];
  std::snprintf(buf, sizeof(buf), "#%02x%02x%02x",
                static_cast<int>(std::lround((r + m) * 255)),
                static_cast<int>(std::lround((g + m) * 255)),
                static_cast<int>(std::lround((b + m) * 255)));
  return buf;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

}  // namespace

std::string render_svg(const std::vector<DecodedPose>& poses,
                       const SkeletonSpec& skeleton, int width, int height) {
  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width
      << "\" height=\"" << height << "\" viewBox=\"0 0 " << width << " "
      << height << "\">\n";
  svg << "  <rect width=\"100%\" height=\"100%\" fill=\"#202020\"/>\n";

  const int n_conn = static_cast<int>(skeleton.connections.size());
  for (const DecodedPose& pose : poses) {
    for (int ci = 0; ci < n_conn; ++ci) {
      const auto [a, b] = skeleton.connections[ci];
      const DecodedJoint& ja = pose.joints[a];
      const DecodedJoint& jb = pose.joints[b];
      if (!ja.present || !jb.present) continue;
      svg << "  <line x1=\"" << fmt(ja.x) << "\" y1=\"" << fmt(ja.y)
          << "\" x2=\"" << fmt(jb.x) << "\" y2=\"" << fmt(jb.y)
          << "\" stroke=\"" << connection_color(ci, n_conn)
          << "\" stroke-width=\"2\"/>\n";
    }
    for (const DecodedJoint& joint : pose.joints) {
      if (!joint.present) continue;
      svg << "  <circle cx=\"" << fmt(joint.x) << "\" cy=\"" << fmt(joint.y)
          << "\" r=\"2\" fill=\"#ffffff\"/>\n";
    }
  }
  svg << "</svg>\n";
  return svg.str();
}

std::vector<DecodedPose> poses_from_scene(const Scene& scene) {
  std::vector<DecodedPose> out;
  for (const Pose& pose : scene.poses) {
    DecodedPose dp;
    for (int k = 0; k < kNumKeypoints; ++k) {
      const Keypoint& kp = pose.keypoints[k];
      if (!kp.labeled()) continue;
      dp.joints[k] = DecodedJoint{kp.x, kp.y, 1.0, true};
    }
    dp.recompute_score();
    out.push_back(std::move(dp));
  }
  return out;
}

}  // namespace posefield
