#pragma once

#include <string>
#include <vector>

#include "posefield/core.hpp"
#include "posefield/decoder.hpp"

namespace posefield {

/// SVG overlay of decoded poses: one colored segment per connection with
/// both joints present, plus joint markers. Output is deterministic.
std::string render_svg(const std::vector<DecodedPose>& poses,
                       const SkeletonSpec& skeleton, int width, int height);

/// Ground-truth scenes render through the same path.
std::vector<DecodedPose> poses_from_scene(const Scene& scene);

}  // namespace posefield
