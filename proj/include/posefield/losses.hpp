#pragma once

#include <cmath>

#include "posefield/fields.hpp"

namespace posefield {

template <typename Scalar>
struct ValueGrad {
  Scalar value;
  Scalar grad;
};

template <typename Scalar>
struct LaplaceTerms {
  Scalar value;
  Scalar d_x;  // derivative w.r.t. the prediction
  Scalar d_b;  // derivative w.r.t. the predicted spread
  bool clamped = false;
};

/// L = |x-mu|/b + log(2b), with b clamped from below. The clamp is reported
/// so callers can count degenerate spreads in diagnostics.
template <typename Scalar>
LaplaceTerms<Scalar> laplace_loss(Scalar x, Scalar mu, Scalar b,
                                  Scalar b_min = Scalar(kBMin)) {
  LaplaceTerms<Scalar> r;
  if (b < b_min) {
    b = b_min;
    r.clamped = true;
  }
  const Scalar d = x - mu;
  const Scalar ad = d < Scalar(0) ? -d : d;
  r.value = ad / b + std::log(Scalar(2) * b);
  r.d_x = (d > Scalar(0) ? Scalar(1) : (d < Scalar(0) ? Scalar(-1) : Scalar(0))) / b;
  r.d_b = -ad / (b * b) + Scalar(1) / b;
  return r;
}

/// Quadratic inside |x-mu| < r_smooth, linear beyond; value and gradient
/// are continuous at the knee.
template <typename Scalar>
ValueGrad<Scalar> smooth_l1_loss(Scalar x, Scalar mu, Scalar r_smooth) {
  const Scalar d = x - mu;
  const Scalar ad = d < Scalar(0) ? -d : d;
  if (ad < r_smooth) {
    return {d * d / (Scalar(2) * r_smooth), d / r_smooth};
  }
  return {ad - r_smooth / Scalar(2), d > Scalar(0) ? Scalar(1) : Scalar(-1)};
}

/// r = k_smooth * sqrt(area) * sigma_k, the scale-adaptive soft radius.
template <typename Scalar>
Scalar smooth_l1_radius(Scalar area, Scalar sigma_k, Scalar k_smooth) {
  return k_smooth * std::sqrt(area) * sigma_k;
}

/// Binary cross entropy on a clamped prediction; target is 0 or 1.
template <typename Scalar>
ValueGrad<Scalar> bce_confidence(Scalar pred, Scalar target,
                                 Scalar eps = Scalar(1e-7)) {
  const Scalar p = pred < eps ? eps : (pred > Scalar(1) - eps ? Scalar(1) - eps : pred);
  const Scalar value = -(target * std::log(p) +
                         (Scalar(1) - target) * std::log(Scalar(1) - p));
  const Scalar grad = -target / p + (Scalar(1) - target) / (Scalar(1) - p);
  return {value, grad};
}

enum class RegressionKind { vanilla_l1, smooth_l1, laplace };

struct LossConfig {
  RegressionKind regression = RegressionKind::laplace;
  double k_smooth = 1.0;  // only used by smooth_l1
  double w_confidence = 1.0;
  double w_regression = 1.0;
  double w_scale = 1.0;
};

struct LossBreakdown {
  double confidence = 0.0;  // mean BCE over every confidence entry
  double regression = 0.0;  // mean vector loss over supervised cells
  double scale = 0.0;       // mean L1 sigma loss over supervised cells
  double total = 0.0;       // weighted sum of the three terms
  long supervised_pif_cells = 0;
  long supervised_paf_cells = 0;
  long clamped_b = 0;
};

/// Confidence planes get BCE everywhere; vector components get the
/// configured regression loss only where the target confidence is 1; pif
/// sigma planes get vanilla L1 at the same cells.
LossBreakdown composite_loss(const PifField& pred_pif, const PafField& pred_paf,
                             const PifField& tgt_pif, const PafField& tgt_paf,
                             const LossConfig& config = {});

}  // namespace posefield
