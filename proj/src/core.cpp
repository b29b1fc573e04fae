#include "posefield/core.hpp"

#include <algorithm>
#include <cmath>

namespace posefield {

int SkeletonSpec::keypoint_index(const std::string& name) const {
  for (int i = 0; i < static_cast<int>(keypoint_names.size()); ++i) {
    if (keypoint_names[i] == name) return i;
  }
  return -1;
}

bool SkeletonSpec::has_connection(int a, int b) const {
  for (const auto& [u, v] : connections) {
    if ((u == a && v == b) || (u == b && v == a)) return true;
  }
  return false;
}

SkeletonSpec build_coco_skeleton() {
  SkeletonSpec s;
  s.keypoint_names = {
      "nose",           "left_eye",      "right_eye",     "left_ear",
      "right_ear",      "left_shoulder", "right_shoulder", "left_elbow",
      "right_elbow",    "left_wrist",    "right_wrist",   "left_hip",
      "right_hip",      "left_knee",     "right_knee",    "left_ankle",
      "right_ankle"};
  // COCO person skeleton, zero-based.
  s.connections = {{15, 13}, {13, 11}, {16, 14}, {14, 12}, {11, 12},
                   {5, 11},  {6, 12},  {5, 6},   {5, 7},   {6, 8},
                   {7, 9},   {8, 10},  {1, 2},   {0, 1},   {0, 2},
                   {1, 3},   {2, 4},   {3, 5},   {4, 6}};
  // COCO keypoint falloff constants (twice the per-keypoint sigmas used by
  // the reference evaluation).
  s.kappa = {0.052, 0.050, 0.050, 0.070, 0.070, 0.158, 0.158, 0.144, 0.144,
             0.124, 0.124, 0.214, 0.214, 0.174, 0.174, 0.178, 0.178};
  s.flip_pairs = {{1, 2}, {3, 4}, {5, 6}, {7, 8}, {9, 10}, {11, 12},
                  {13, 14}, {15, 16}};
  return s;
}

int Pose::labeled_count() const {
  int n = 0;
  for (const auto& kp : keypoints) {
    if (kp.labeled()) ++n;
  }
  return n;
}

void validate(const Scene& scene) {
  if (scene.width <= 0 || scene.height <= 0) {
    throw ValidationError("scene extent must be positive");
  }
  for (const auto& pose : scene.poses) {
    if (!(pose.bbox_area > 0.0)) {
      throw ValidationError("pose bbox_area must be positive");
    }
    if (pose.labeled_count() == 0) {
      throw ValidationError("pose has no labeled keypoint");
    }
    for (const auto& kp : pose.keypoints) {
      if (!kp.labeled()) continue;
      if (!std::isfinite(kp.x) || !std::isfinite(kp.y)) {
        throw ValidationError("labeled keypoint has non-finite coordinates");
      }
      if (kp.x < 0.0 || kp.x >= scene.width || kp.y < 0.0 ||
          kp.y >= scene.height) {
        throw ValidationError("labeled keypoint outside image bounds");
      }
    }
  }
}

Scene flip_horizontal(const Scene& scene, const SkeletonSpec& skeleton) {
  Scene out = scene;
  for (auto& pose : out.poses) {
    for (auto& kp : pose.keypoints) {
      kp.x = static_cast<double>(scene.width - 1) - kp.x;
    }
    for (const auto& [l, r] : skeleton.flip_pairs) {
      std::swap(pose.keypoints[l], pose.keypoints[r]);
    }
  }
  return out;
}

}  // namespace posefield
