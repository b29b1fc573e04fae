#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace posefield {

inline constexpr int kNumKeypoints = 17;
inline constexpr int kNumConnections = 19;

enum class Visibility : std::uint8_t {
  unlabeled = 0,
  occluded = 1,  // labeled but occluded
  visible = 2,
};

struct Keypoint {
  double x = 0.0;  // image px; (0,0) is the center of the top-left pixel
  double y = 0.0;
  Visibility v = Visibility::unlabeled;

  bool labeled() const { return v != Visibility::unlabeled; }
};

/// Fixed keypoint taxonomy: 17 named parts, 19 connections, per-keypoint
/// OKS falloff constants and left/right flip pairs.
struct SkeletonSpec {
  std::vector<std::string> keypoint_names;          // 17
  std::vector<std::pair<int, int>> connections;     // 19 ordered index pairs
  std::vector<double> kappa;                        // 17, all > 0
  std::vector<std::pair<int, int>> flip_pairs;

  int keypoint_index(const std::string& name) const;
  bool has_connection(int a, int b) const;  // orientation-insensitive
};

SkeletonSpec build_coco_skeleton();

struct Pose {
  std::array<Keypoint, kNumKeypoints> keypoints;
  double bbox_area = 0.0;  // image px^2
  std::uint64_t instance_id = 0;

  int labeled_count() const;
};

struct Scene {
  int width = 0;   // image px
  int height = 0;
  std::vector<Pose> poses;
};

class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Throws ValidationError if any invariant fails: positive extent, every
/// pose has bbox_area > 0 and at least one labeled keypoint, and all
/// labeled keypoints are finite and inside [0,width) x [0,height).
void validate(const Scene& scene);

/// x -> width-1-x for every keypoint, with left/right channels swapped per
/// flip_pairs. Applying twice is the identity.
Scene flip_horizontal(const Scene& scene, const SkeletonSpec& skeleton);

}  // namespace posefield
