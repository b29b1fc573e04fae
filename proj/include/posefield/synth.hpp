#pragma once

#include <cstdint>
#include <vector>

#include "posefield/core.hpp"
#include "posefield/fields.hpp"
#include "posefield/rng.hpp"

namespace posefield {

struct SceneParams {
  int min_poses = 1;
  int max_poses = 5;
  double min_height = 40.0;  // image px
  double max_height = 200.0;
  double max_pairwise_iou = 0.0;  // tight keypoint bboxes
  int width = 640;
  int height = 480;
  int max_attempts = 200;  // placement retries per pose
  // When non-empty, only these keypoint types are labeled.
  std::vector<int> active_keypoints;
};

/// Articulated stick figures sampled from a jointed template with random
/// limb angles; reproducible from the seed alone.
std::vector<Scene> generate_scenes(std::uint64_t seed, int n_scenes,
                                   const SceneParams& params,
                                   const SkeletonSpec& skeleton);

struct NoiseParams {
  double confidence_sigma = 0.0;  // jitter on confidences, clamped to [0,1]
  double vector_sigma = 0.0;      // jitter on offsets, field cells
  double dropout = 0.0;           // probability a cell's confidence is zeroed
  // Draw a per-cell jitter scale and record it in the spread channels, so
  // the spread genuinely reflects how unreliable each cell's vectors are.
  bool heteroscedastic = false;
};

/// Deterministic field corruption; output always satisfies the field
/// invariants.
std::pair<PifField, PafField> perturb_fields(const PifField& pif,
                                             const PafField& paf,
                                             const NoiseParams& noise,
                                             std::uint64_t seed);

}  // namespace posefield
