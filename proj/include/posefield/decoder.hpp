#pragma once

#include <array>
#include <optional>
#include <vector>

#include "posefield/core.hpp"
#include "posefield/fields.hpp"
#include "posefield/fusion.hpp"

namespace posefield {

struct DecodedJoint {
  double x = 0.0;  // image px
  double y = 0.0;
  double confidence = 0.0;
  bool present = false;
};

struct DecodedPose {
  std::array<DecodedJoint, kNumKeypoints> joints;
  double score = 0.0;  // mean confidence of present joints

  int present_count() const;
  void recompute_score();
};

struct DecoderConfig {
  double seed_threshold = 0.5;
  double keypoint_threshold = 0.1;
  bool use_b_in_decoder = true;  // false replaces b1 with the stride length
  double nms_scale_factor = 1.0;
  double nms_min_radius = 3.0;          // image px
  double reverse_match_tolerance = 2.0;  // in strides
  double assoc_window = 5.0;  // side of the cell window scanned per move
  int max_poses = 20;
  FusionConfig fusion;
};

struct Seed {
  int type = 0;
  double x = 0.0;  // image px, sub-raster refined
  double y = 0.0;
  double confidence = 0.0;
};

/// Local maxima of every fused plane with value >= seed_threshold, sorted
/// by descending confidence. Coordinates are refined by a quadratic fit of
/// the 3x3 neighborhood.
///
/// With `support` given, a maximum only qualifies when some field cell's
/// regressed target lands near it. Stacked Gaussian tails of several
/// same-type joints can form genuine local maxima between the joints; no
/// vector points there, so the support check rejects exactly those phantoms.
std::vector<Seed> seed_candidates(const HighResMap& highres,
                                  double seed_threshold,
                                  const PifField* support = nullptr,
                                  double min_support_confidence = 0.1);

/// One association cell reconstructed to image coordinates.
struct AssociationCell {
  double c = 0.0;
  double x1 = 0.0, y1 = 0.0, b1 = 0.0;  // b in image px
  double x2 = 0.0, y2 = 0.0, b2 = 0.0;
};

/// s = c * exp(-|from - v1| / b1) * f_target(v2), the greedy move score.
/// With use_b_in_decoder=false, b1 is replaced by stride_px.
double score_association(const AssociationCell& cell, double from_x,
                         double from_y, const HighResMap& highres,
                         int target_type, const DecoderConfig& config,
                         double stride_px);

/// Best association of `connection` anchored near (from_x, from_y),
/// proposing the other endpoint. Returns nothing when no cell with positive
/// confidence scores above zero.
struct AssociationProposal {
  double score = 0.0;
  double target_x = 0.0;
  double target_y = 0.0;
};
std::optional<AssociationProposal> best_association(
    const PafField& paf, int connection, double from_x, double from_y,
    const HighResMap& highres, int target_type, const DecoderConfig& config);

/// Accepts the proposed target when the best reverse association lands
/// within reverse_match_tolerance strides of the placed source.
bool reverse_match(const PafField& paf, int connection, double source_x,
                   double source_y, int source_type, double proposed_x,
                   double proposed_y, const HighResMap& highres,
                   const DecoderConfig& config);

/// Instrumentation for determinism and oracle comparisons.
struct Placement {
  int pose_index = 0;
  int type = 0;
  double x = 0.0, y = 0.0;
  double move_score = 0.0;  // 0 for seed joints
};

struct DecodeStats {
  double association_total = 0.0;  // sum of accepted move scores
  std::vector<Placement> placements;
  int seeds_total = 0;
  int seeds_claimed = 0;
  long pif_cells_active = 0;  // confidence >= fusion cutoff
  long paf_cells_active = 0;  // confidence > 0
};

/// Grows one pose greedily from a seed. Placed joints never move; the
/// highest-scoring frontier move wins, confirmed by reverse matching
/// (failures are halved and re-queued).
DecodedPose grow_pose(const Seed& seed, const PafField& paf,
                      const HighResMap& highres, const SkeletonSpec& skeleton,
                      const DecoderConfig& config,
                      std::vector<Placement>* placements = nullptr,
                      int pose_index = 0, double* association_total = nullptr);

/// Per-type suppression against higher-scoring poses within the dynamic
/// radius max(nms_scale_factor * sigma_pred * stride, nms_min_radius).
/// Poses left with no joints are dropped.
std::vector<DecodedPose> nms_keypoints(std::vector<DecodedPose> poses,
                                       const PifField& pif_scales,
                                       const DecoderConfig& config);

/// fuse -> seed -> grow -> suppress -> score; deterministic and sorted by
/// descending score, at most max_poses entries.
std::vector<DecodedPose> decode(const PifField& pif, const PafField& paf,
                                const SkeletonSpec& skeleton,
                                const DecoderConfig& config = {},
                                DecodeStats* stats = nullptr);

/// Predicted joint scale at an image location: sigma of the nearest cell.
double scale_at(const PifField& pif, int type, double x, double y);

struct OracleLimits {
  int max_seeds_per_type = 3;
  int max_active_types = 5;
  long max_nodes = 5'000'000;  // enumeration guard
  // A seed within this distance of a same-type placed joint is the same
  // physical joint, not a second candidate.
  double merge_tolerance = 3.0;     // px
  double landing_tolerance = 1e-4;  // px, proposal-to-candidate match
};

class OracleLimitError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Exhaustive assignment oracle for tiny instances: enumerates groupings of
/// candidate joints into poses and maximizes the summed association scores
/// over each pose's best spanning tree. Globally optimal over a candidate
/// space that contains every greedy outcome, so the greedy total never
/// exceeds the oracle total.
std::vector<DecodedPose> brute_force_decode(const PifField& pif,
                                            const PafField& paf,
                                            const SkeletonSpec& skeleton,
                                            const DecoderConfig& config,
                                            const OracleLimits& limits = {},
                                            double* total_score = nullptr);

}  // namespace posefield
