#pragma once

#include <vector>

#include "posefield/core.hpp"
#include "posefield/decoder.hpp"

namespace posefield {

/// Object keypoint similarity: mean over labeled ground-truth keypoints of
/// exp(-d^2 / (2 * area * kappa^2)). Throws ValidationError when the ground
/// truth has no labeled keypoint.
double oks(const DecodedPose& pred, const Pose& gt,
           const SkeletonSpec& skeleton);

/// Fraction of labeled keypoints within alpha * sqrt(area) of the ground
/// truth (boundary inclusive). Absent predicted joints count as misses.
double pck(const DecodedPose& pred, const Pose& gt, double alpha);

struct Metrics {
  double ap = 0.0;
  double ap50 = 0.0;
  double ap75 = 0.0;
  double ap_medium = 0.0;  // -1 when no ground truth falls in the range
  double ap_large = 0.0;
  double ar = 0.0;
  double ar50 = 0.0;
  double ar75 = 0.0;
  double ar_medium = 0.0;
  double ar_large = 0.0;
};

/// COCO-style keypoint evaluation: greedy score-ordered matching at OKS
/// thresholds 0.50:0.05:0.95, 101-point precision interpolation, medium and
/// large area breakdowns, at most 20 predictions per scene.
Metrics evaluate(const std::vector<std::vector<DecodedPose>>& predictions,
                 const std::vector<Scene>& ground_truth,
                 const SkeletonSpec& skeleton);

struct MatchStats {
  int n_gt = 0;
  int n_matched = 0;
  double oks_sum = 0.0;  // over matched pairs

  double recall() const { return n_gt > 0 ? static_cast<double>(n_matched) / n_gt : 0.0; }
  double mean_oks() const { return n_gt > 0 ? oks_sum / n_gt : 0.0; }
};

/// Single-threshold greedy matching, for round-trip reports.
MatchStats match_at_oks(const std::vector<std::vector<DecodedPose>>& predictions,
                        const std::vector<Scene>& ground_truth,
                        const SkeletonSpec& skeleton, double threshold);

}  // namespace posefield
