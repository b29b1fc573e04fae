#include "posefield/losses.hpp"

namespace posefield {

namespace {

struct Accumulator {
  double confidence_sum = 0.0;
  long confidence_count = 0;
  double regression_sum = 0.0;
  long regression_cells = 0;
  double scale_sum = 0.0;
  long scale_cells = 0;
  long clamped = 0;
};

// One regression component against its target. For smooth_l1 the radius is
// scale-adaptive where a per-cell sigma target exists and constant (k_smooth
// field cells) otherwise.
double regression_component(double pred, double tgt, double pred_b,
                            double r_smooth, const LossConfig& config,
                            long* clamped) {
  switch (config.regression) {
    case RegressionKind::vanilla_l1:
      return std::abs(pred - tgt);
    case RegressionKind::smooth_l1:
      return smooth_l1_loss(pred, tgt, r_smooth).value;
    case RegressionKind::laplace: {
      const auto r = laplace_loss(pred, tgt, pred_b);
      if (r.clamped) ++(*clamped);
      return r.value;
    }
  }
  return 0.0;
}

}  // namespace

LossBreakdown composite_loss(const PifField& pred_pif, const PafField& pred_paf,
                             const PifField& tgt_pif, const PafField& tgt_paf,
                             const LossConfig& config) {
  if (pred_pif.geometry != tgt_pif.geometry ||
      pred_paf.geometry != tgt_paf.geometry ||
      pred_pif.num_types != tgt_pif.num_types ||
      pred_paf.num_types != tgt_paf.num_types) {
    throw GeometryMismatchError("prediction/target field geometry mismatch");
  }

  Accumulator acc;
  const int h = pred_pif.geometry.grid_h;
  const int w = pred_pif.geometry.grid_w;

  for (int t = 0; t < pred_pif.num_types; ++t) {
    const Plane& pc = pred_pif.plane(t, pif::kC);
    const Plane& tc = tgt_pif.plane(t, pif::kC);
    for (int j = 0; j < h; ++j) {
      for (int i = 0; i < w; ++i) {
        acc.confidence_sum += bce_confidence<double>(pc(j, i), tc(j, i)).value;
        ++acc.confidence_count;
        if (tc(j, i) != 1.0f) continue;
        ++acc.regression_cells;
        ++acc.scale_cells;
        const double r_smooth =
            config.k_smooth * static_cast<double>(tgt_pif.plane(t, pif::kSigma)(j, i));
        const double b = pred_pif.plane(t, pif::kB)(j, i);
        acc.regression_sum += regression_component(
            pred_pif.plane(t, pif::kDx)(j, i), tgt_pif.plane(t, pif::kDx)(j, i),
            b, r_smooth, config, &acc.clamped);
        acc.regression_sum += regression_component(
            pred_pif.plane(t, pif::kDy)(j, i), tgt_pif.plane(t, pif::kDy)(j, i),
            b, r_smooth, config, &acc.clamped);
        acc.scale_sum +=
            std::abs(static_cast<double>(pred_pif.plane(t, pif::kSigma)(j, i)) -
                     static_cast<double>(tgt_pif.plane(t, pif::kSigma)(j, i)));
      }
    }
  }

  for (int t = 0; t < pred_paf.num_types; ++t) {
    const Plane& pc = pred_paf.plane(t, paf::kC);
    const Plane& tc = tgt_paf.plane(t, paf::kC);
    for (int j = 0; j < h; ++j) {
      for (int i = 0; i < w; ++i) {
        acc.confidence_sum += bce_confidence<double>(pc(j, i), tc(j, i)).value;
        ++acc.confidence_count;
        if (tc(j, i) != 1.0f) continue;
        ++acc.regression_cells;
        // No per-cell scale target exists for associations; the smooth
        // radius falls back to k_smooth field cells.
        const double r_smooth = config.k_smooth;
        const double b1 = pred_paf.plane(t, paf::kB1)(j, i);
        const double b2 = pred_paf.plane(t, paf::kB2)(j, i);
        acc.regression_sum += regression_component(
            pred_paf.plane(t, paf::kDx1)(j, i), tgt_paf.plane(t, paf::kDx1)(j, i),
            b1, r_smooth, config, &acc.clamped);
        acc.regression_sum += regression_component(
            pred_paf.plane(t, paf::kDy1)(j, i), tgt_paf.plane(t, paf::kDy1)(j, i),
            b1, r_smooth, config, &acc.clamped);
        acc.regression_sum += regression_component(
            pred_paf.plane(t, paf::kDx2)(j, i), tgt_paf.plane(t, paf::kDx2)(j, i),
            b2, r_smooth, config, &acc.clamped);
        acc.regression_sum += regression_component(
            pred_paf.plane(t, paf::kDy2)(j, i), tgt_paf.plane(t, paf::kDy2)(j, i),
            b2, r_smooth, config, &acc.clamped);
      }
    }
  }

  LossBreakdown out;
  out.supervised_pif_cells = acc.scale_cells;
  out.supervised_paf_cells = acc.regression_cells - acc.scale_cells;
  out.clamped_b = acc.clamped;
  out.confidence =
      acc.confidence_count > 0 ? acc.confidence_sum / acc.confidence_count : 0.0;
  out.regression =
      acc.regression_cells > 0 ? acc.regression_sum / acc.regression_cells : 0.0;
  out.scale = acc.scale_cells > 0 ? acc.scale_sum / acc.scale_cells : 0.0;
  out.total = config.w_confidence * out.confidence +
              config.w_regression * out.regression +
              config.w_scale * out.scale;
  return out;
}

}  // namespace posefield
