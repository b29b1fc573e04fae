#include "posefield/encoder.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace posefield {

namespace {

using Eigen::Vector2d;

double point_segment_distance(const Vector2d& p, const Vector2d& a,
                              const Vector2d& b) {
  const Vector2d ab = b - a;
  const double len2 = ab.squaredNorm();
  if (len2 <= 0.0) return (p - a).norm();
  const double t = std::clamp((p - a).dot(ab) / len2, 0.0, 1.0);
  return (p - (a + t * ab)).norm();
}

struct CellRange {
  int lo, hi;  // inclusive
};

CellRange clamp_range(double lo, double hi, int n) {
  CellRange r;
  r.lo = std::max(0, static_cast<int>(std::ceil(lo)));
  r.hi = std::min(n - 1, static_cast<int>(std::floor(hi)));
  return r;
}

}  // namespace

PifField encode_pif(const Scene& scene, const SkeletonSpec& skeleton,
                    const FieldGeometry& geometry,
                    const EncoderConfig& config) {
  validate(scene);
  auto [pif, paf] = new_fields(geometry, skeleton);
  (void)paf;

  const double half = config.s_target / 2.0;
  const int num_types = pif.num_types;

  for (int k = 0; k < num_types; ++k) {
    Plane& c = pif.plane(k, pif::kC);
    Plane& dx = pif.plane(k, pif::kDx);
    Plane& dy = pif.plane(k, pif::kDy);
    Plane& b = pif.plane(k, pif::kB);
    Plane& sig = pif.plane(k, pif::kSigma);

    PlaneT<double> best_dist2(geometry.grid_h, geometry.grid_w);
    best_dist2.setConstant(std::numeric_limits<double>::infinity());
    PlaneT<std::uint64_t> winner(geometry.grid_h, geometry.grid_w);
    winner.setZero();

    for (const Pose& pose : scene.poses) {
      const Keypoint& kp = pose.keypoints[k];
      if (!kp.labeled()) continue;
      const double fx = geometry.to_field(kp.x);
      const double fy = geometry.to_field(kp.y);
      const CellRange xi = clamp_range(fx - half, fx + half, geometry.grid_w);
      const CellRange yj = clamp_range(fy - half, fy + half, geometry.grid_h);
      const double sigma =
          std::max<double>(kSigmaMin,
                           skeleton.kappa[k] * std::sqrt(pose.bbox_area) /
                               geometry.stride);

      for (int j = yj.lo; j <= yj.hi; ++j) {
        for (int i = xi.lo; i <= xi.hi; ++i) {
          const double d2 = (fx - i) * (fx - i) + (fy - j) * (fy - j);
          const bool wins =
              d2 < best_dist2(j, i) ||
              (d2 == best_dist2(j, i) && pose.instance_id < winner(j, i));
          if (!wins) continue;
          best_dist2(j, i) = d2;
          winner(j, i) = pose.instance_id;
          c(j, i) = 1.0f;
          dx(j, i) = static_cast<float>(fx - i);
          dy(j, i) = static_cast<float>(fy - j);
          b(j, i) = static_cast<float>(config.b_target);
          sig(j, i) = static_cast<float>(sigma);
        }
      }
    }
  }
  return pif;
}

PafField encode_paf(const Scene& scene, const SkeletonSpec& skeleton,
                    const FieldGeometry& geometry,
                    const EncoderConfig& config) {
  validate(scene);
  auto [pif, paf] = new_fields(geometry, skeleton);
  (void)pif;

  for (int ci = 0; ci < paf.num_types; ++ci) {
    const auto [ka, kb] = skeleton.connections[ci];
    const int k_lo = std::min(ka, kb);
    const int k_hi = std::max(ka, kb);

    Plane& ac = paf.plane(ci, paf::kC);
    Plane& dx1 = paf.plane(ci, paf::kDx1);
    Plane& dy1 = paf.plane(ci, paf::kDy1);
    Plane& b1 = paf.plane(ci, paf::kB1);
    Plane& dx2 = paf.plane(ci, paf::kDx2);
    Plane& dy2 = paf.plane(ci, paf::kDy2);
    Plane& b2 = paf.plane(ci, paf::kB2);

    PlaneT<double> best_dist(geometry.grid_h, geometry.grid_w);
    best_dist.setConstant(std::numeric_limits<double>::infinity());
    PlaneT<std::uint64_t> winner(geometry.grid_h, geometry.grid_w);
    winner.setZero();

    for (const Pose& pose : scene.poses) {
      const Keypoint& kp_lo = pose.keypoints[k_lo];
      const Keypoint& kp_hi = pose.keypoints[k_hi];
      if (!kp_lo.labeled() || !kp_hi.labeled()) continue;
      const Vector2d j_lo(geometry.to_field(kp_lo.x),
                          geometry.to_field(kp_lo.y));
      const Vector2d j_hi(geometry.to_field(kp_hi.x),
                          geometry.to_field(kp_hi.y));

      const double x_min = std::min(j_lo.x(), j_hi.x()) - config.r_paf;
      const double x_max = std::max(j_lo.x(), j_hi.x()) + config.r_paf;
      const double y_min = std::min(j_lo.y(), j_hi.y()) - config.r_paf;
      const double y_max = std::max(j_lo.y(), j_hi.y()) + config.r_paf;
      const CellRange xi = clamp_range(x_min, x_max, geometry.grid_w);
      const CellRange yj = clamp_range(y_min, y_max, geometry.grid_h);

      for (int j = yj.lo; j <= yj.hi; ++j) {
        for (int i = xi.lo; i <= xi.hi; ++i) {
          const Vector2d center(static_cast<double>(i),
                                static_cast<double>(j));
          const double seg_dist = point_segment_distance(center, j_lo, j_hi);
          if (seg_dist > config.r_paf) continue;
          const bool wins =
              seg_dist < best_dist(j, i) ||
              (seg_dist == best_dist(j, i) &&
               pose.instance_id < winner(j, i));
          if (!wins) continue;
          best_dist(j, i) = seg_dist;
          winner(j, i) = pose.instance_id;

          // vector 1 -> closer joint of the two types (ties: lower index)
          const Vector2d& near_j =
              ((center - j_lo).norm() <= (center - j_hi).norm()) ? j_lo : j_hi;
          const Vector2d& far_j = (&near_j == &j_lo) ? j_hi : j_lo;

          ac(j, i) = 1.0f;
          dx1(j, i) = static_cast<float>(near_j.x() - i);
          dy1(j, i) = static_cast<float>(near_j.y() - j);
          b1(j, i) = static_cast<float>(config.b_target);
          dx2(j, i) = static_cast<float>(far_j.x() - i);
          dy2(j, i) = static_cast<float>(far_j.y() - j);
          b2(j, i) = static_cast<float>(config.b_target);
        }
      }
    }
  }
  return paf;
}

std::pair<PifField, PafField> encode(const Scene& scene,
                                     const SkeletonSpec& skeleton,
                                     const FieldGeometry& geometry,
                                     const EncoderConfig& config) {
  return {encode_pif(scene, skeleton, geometry, config),
          encode_paf(scene, skeleton, geometry, config)};
}

}  // namespace posefield
