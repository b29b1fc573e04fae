#include "posefield/fusion.hpp"

#include <algorithm>
#include <cmath>

namespace posefield {

HighResMap::HighResMap(int width, int height, int hr_stride, int num_types)
    : width_(width), height_(height), hr_stride_(hr_stride) {
  // One extra sample past the image edge so every in-image query has a full
  // bilinear neighborhood.
  raster_w_ = static_cast<int>(std::ceil(static_cast<double>(width) /
                                         hr_stride)) + 1;
  raster_h_ = static_cast<int>(std::ceil(static_cast<double>(height) /
                                         hr_stride)) + 1;
  planes_.resize(num_types);
  for (Plane& p : planes_) {
    p.resize(raster_h_, raster_w_);
    p.setZero();
  }
}

double HighResMap::query(int type, double x, double y) const {
  if (x < 0.0 || y < 0.0 || x >= width_ || y >= height_) return 0.0;
  const Plane& p = planes_[type];
  const double u = x / hr_stride_;
  const double v = y / hr_stride_;
  const int u0 = std::min(static_cast<int>(u), raster_w_ - 2);
  const int v0 = std::min(static_cast<int>(v), raster_h_ - 2);
  const double fu = u - u0;
  const double fv = v - v0;
  const double top = (1.0 - fu) * p(v0, u0) + fu * p(v0, u0 + 1);
  const double bot = (1.0 - fu) * p(v0 + 1, u0) + fu * p(v0 + 1, u0 + 1);
  return (1.0 - fv) * top + fv * bot;
}

HighResMap fuse(const PifField& pif, const FusionConfig& config) {
  const FieldGeometry& g = pif.geometry;
  HighResMap map(g.grid_w * g.stride, g.grid_h * g.stride, config.hr_stride,
                 pif.num_types);

  const double hr = config.hr_stride;
  for (int t = 0; t < pif.num_types; ++t) {
    const Plane& c = pif.plane(t, pif::kC);
    const Plane& dx = pif.plane(t, pif::kDx);
    const Plane& dy = pif.plane(t, pif::kDy);
    const Plane& sig = pif.plane(t, pif::kSigma);
    Plane& out = map.plane(t);

    for (int j = 0; j < g.grid_h; ++j) {
      for (int i = 0; i < g.grid_w; ++i) {
        const double conf = c(j, i);
        if (conf < config.min_confidence) continue;
        const double tx = g.to_image(i + static_cast<double>(dx(j, i)));
        const double ty = g.to_image(j + static_cast<double>(dy(j, i)));
        const double sigma_px =
            std::max<double>(kSigmaMin, sig(j, i)) * g.stride;
        const double radius = config.truncation * sigma_px;
        const double inv_2s2 = 1.0 / (2.0 * sigma_px * sigma_px);

        const int u_lo = std::max(0, static_cast<int>(std::ceil((tx - radius) / hr)));
        const int u_hi = std::min(map.raster_w() - 1,
                                  static_cast<int>(std::floor((tx + radius) / hr)));
        const int v_lo = std::max(0, static_cast<int>(std::ceil((ty - radius) / hr)));
        const int v_hi = std::min(map.raster_h() - 1,
                                  static_cast<int>(std::floor((ty + radius) / hr)));
        for (int v = v_lo; v <= v_hi; ++v) {
          const double py = v * hr;
          const double dy2 = (py - ty) * (py - ty);
          for (int u = u_lo; u <= u_hi; ++u) {
            const double px = u * hr;
            const double d2 = (px - tx) * (px - tx) + dy2;
            out(v, u) += static_cast<float>(conf * std::exp(-d2 * inv_2s2));
          }
        }
      }
    }
  }
  return map;
}

}  // namespace posefield
