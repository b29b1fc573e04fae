#pragma once

#include <vector>

#include "posefield/fields.hpp"

namespace posefield {

struct FusionConfig {
  int hr_stride = 2;            // image px per raster cell
  double min_confidence = 0.1;  // cells below this do not contribute
  double truncation = 3.0;      // kernel support, in sigmas
};

/// Confidence surface per keypoint type: a sum of confidence-weighted
/// unnormalized Gaussians centered on the regressed targets, rasterized at
/// hr_stride and queried with bilinear interpolation. Sample (u, v) sits at
/// image coordinate (u*hr_stride, v*hr_stride).
class HighResMap {
 public:
  HighResMap(int width, int height, int hr_stride, int num_types);

  int width() const { return width_; }
  int height() const { return height_; }
  int hr_stride() const { return hr_stride_; }
  int num_types() const { return static_cast<int>(planes_.size()); }
  int raster_w() const { return raster_w_; }
  int raster_h() const { return raster_h_; }

  Plane& plane(int type) { return planes_[type]; }
  const Plane& plane(int type) const { return planes_[type]; }

  /// Bilinear interpolation in image coordinates; queries outside the image
  /// score zero.
  double query(int type, double x, double y) const;

 private:
  int width_;
  int height_;
  int hr_stride_;
  int raster_w_;
  int raster_h_;
  std::vector<Plane> planes_;
};

/// Fuses a part intensity field into the high resolution confidence
/// surface, in image pixel units. Kernel peaks are 1 (unnormalized), so a
/// single full-confidence cell produces a surface maximum of 1 at its target.
HighResMap fuse(const PifField& pif, const FusionConfig& config = {});

}  // namespace posefield
