#pragma once

#include "posefield/core.hpp"
#include "posefield/fields.hpp"

namespace posefield {

struct EncoderConfig {
  double s_target = 4.0;  // side of the square confidence window, cells
  double r_paf = 1.0;     // support distance around a connection segment, cells
  double b_target = 1.0;  // spread written into target cells, cells
};

/// Writes c=1 target cells around every labeled keypoint: offsets point at
/// the keypoint's field coordinate, sigma carries kappa_k*sqrt(A)/stride.
/// Contested cells go to the nearer keypoint (ties: lower instance_id).
PifField encode_pif(const Scene& scene, const SkeletonSpec& skeleton,
                    const FieldGeometry& geometry,
                    const EncoderConfig& config = {});

/// Writes association cells along every fully-labeled connection segment.
/// Vector 1 points to the closer endpoint of the two joint types (ties:
/// lower keypoint index), vector 2 to the other joint of the same pose.
PafField encode_paf(const Scene& scene, const SkeletonSpec& skeleton,
                    const FieldGeometry& geometry,
                    const EncoderConfig& config = {});

std::pair<PifField, PafField> encode(const Scene& scene,
                                     const SkeletonSpec& skeleton,
                                     const FieldGeometry& geometry,
                                     const EncoderConfig& config = {});

}  // namespace posefield
