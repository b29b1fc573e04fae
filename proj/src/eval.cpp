#include "posefield/eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace posefield {

double oks(const DecodedPose& pred, const Pose& gt,
           const SkeletonSpec& skeleton) {
  double sum = 0.0;
  int n = 0;
  for (int k = 0; k < kNumKeypoints; ++k) {
    const Keypoint& g = gt.keypoints[k];
    if (!g.labeled()) continue;
    ++n;
    const DecodedJoint& p = pred.joints[k];
    if (!p.present) continue;
    const double d2 = (p.x - g.x) * (p.x - g.x) + (p.y - g.y) * (p.y - g.y);
    const double denom =
        2.0 * gt.bbox_area * skeleton.kappa[k] * skeleton.kappa[k];
    sum += std::exp(-d2 / denom);
  }
  if (n == 0) {
    throw ValidationError("oks requires at least one labeled keypoint");
  }
  return sum / n;
}

double pck(const DecodedPose& pred, const Pose& gt, double alpha) {
  const double radius = alpha * std::sqrt(gt.bbox_area);
  int n = 0;
  int hits = 0;
  for (int k = 0; k < kNumKeypoints; ++k) {
    const Keypoint& g = gt.keypoints[k];
    if (!g.labeled()) continue;
    ++n;
    const DecodedJoint& p = pred.joints[k];
    if (!p.present) continue;
    if (std::hypot(p.x - g.x, p.y - g.y) <= radius) ++hits;
  }
  return n > 0 ? static_cast<double>(hits) / n : 0.0;
}

namespace {

constexpr int kMaxDetections = 20;
constexpr double kMediumLow = 32.0 * 32.0;
constexpr double kMediumHigh = 96.0 * 96.0;
constexpr double kHuge = 1e10;

double prediction_area(const DecodedPose& pose) {
  double x_min = std::numeric_limits<double>::infinity();
  double x_max = -x_min, y_min = x_min, y_max = -x_min;
  for (const auto& j : pose.joints) {
    if (!j.present) continue;
    x_min = std::min(x_min, j.x);
    x_max = std::max(x_max, j.x);
    y_min = std::min(y_min, j.y);
    y_max = std::max(y_max, j.y);
  }
  if (!(x_max >= x_min)) return 0.0;
  return (x_max - x_min) * (y_max - y_min);
}

std::vector<double> oks_thresholds() {
  std::vector<double> t;
  for (int i = 0; i < 10; ++i) t.push_back(0.5 + 0.05 * i);
  return t;
}

struct SceneEval {
  // per threshold, per detection: matched gt (-1 none) and ignore flags
  std::vector<std::vector<int>> dt_match;
  std::vector<std::vector<char>> dt_ignore;
  std::vector<double> dt_scores;
  int n_gt_counted = 0;
};

/// Score-ordered greedy matching of one scene against one area range,
/// mirroring the reference keypoint evaluation.
SceneEval evaluate_scene(const std::vector<const DecodedPose*>& dts,
                         const std::vector<const Pose*>& gts,
                         const std::vector<std::vector<double>>& oks_matrix,
                         const std::vector<double>& thresholds,
                         double area_lo, double area_hi) {
  const int n_dt = static_cast<int>(dts.size());
  const int n_gt = static_cast<int>(gts.size());

  std::vector<char> gt_ignore(n_gt);
  for (int g = 0; g < n_gt; ++g) {
    const double a = gts[g]->bbox_area;
    gt_ignore[g] = a < area_lo || a > area_hi;
  }
  // non-ignored ground truths get matching priority
  std::vector<int> gt_order(n_gt);
  for (int g = 0; g < n_gt; ++g) gt_order[g] = g;
  std::stable_sort(gt_order.begin(), gt_order.end(),
                   [&](int a, int b) { return gt_ignore[a] < gt_ignore[b]; });

  SceneEval out;
  out.dt_scores.resize(n_dt);
  for (int d = 0; d < n_dt; ++d) out.dt_scores[d] = dts[d]->score;
  out.dt_match.assign(thresholds.size(), std::vector<int>(n_dt, -1));
  out.dt_ignore.assign(thresholds.size(), std::vector<char>(n_dt, 0));
  for (int g = 0; g < n_gt; ++g) {
    if (!gt_ignore[g]) ++out.n_gt_counted;
  }

  for (size_t ti = 0; ti < thresholds.size(); ++ti) {
    std::vector<char> gt_matched(n_gt, 0);
    for (int d = 0; d < n_dt; ++d) {
      double best = std::min(thresholds[ti], 1.0 - 1e-10);
      int m = -1;
      for (int gi : gt_order) {
        if (gt_matched[gi]) continue;
        if (m > -1 && !gt_ignore[m] && gt_ignore[gi]) break;
        if (oks_matrix[d][gi] < best) continue;
        best = oks_matrix[d][gi];
        m = gi;
      }
      if (m == -1) {
        // unmatched detections outside the area range are not penalized
        const double a = prediction_area(*dts[d]);
        out.dt_ignore[ti][d] = a < area_lo || a > area_hi;
        continue;
      }
      gt_matched[m] = 1;
      out.dt_match[ti][d] = m;
      out.dt_ignore[ti][d] = gt_ignore[m];
    }
  }
  return out;
}

struct RangeMetrics {
  double ap = -1.0;
  double ar = -1.0;
  std::vector<double> ap_per_threshold;
  std::vector<double> ar_per_threshold;
};

RangeMetrics accumulate(const std::vector<SceneEval>& evals,
                        const std::vector<double>& thresholds) {
  RangeMetrics out;
  long n_gt = 0;
  for (const auto& e : evals) n_gt += e.n_gt_counted;
  out.ap_per_threshold.assign(thresholds.size(), -1.0);
  out.ar_per_threshold.assign(thresholds.size(), -1.0);
  if (n_gt == 0) return out;

  // global detection order by descending score
  struct Ref {
    int scene, det;
    double score;
  };
  std::vector<Ref> order;
  for (int s = 0; s < static_cast<int>(evals.size()); ++s) {
    for (int d = 0; d < static_cast<int>(evals[s].dt_scores.size()); ++d) {
      order.push_back(Ref{s, d, evals[s].dt_scores[d]});
    }
  }
  std::stable_sort(order.begin(), order.end(),
                   [](const Ref& a, const Ref& b) { return a.score > b.score; });

  const int n_rec = 101;
  double ap_sum = 0.0;
  for (size_t ti = 0; ti < thresholds.size(); ++ti) {
    std::vector<double> precision, recall;
    long tp = 0, fp = 0;
    for (const Ref& r : order) {
      if (evals[r.scene].dt_ignore[ti][r.det]) continue;
      if (evals[r.scene].dt_match[ti][r.det] >= 0) ++tp; else ++fp;
      precision.push_back(static_cast<double>(tp) / (tp + fp));
      recall.push_back(static_cast<double>(tp) / n_gt);
    }
    for (int i = static_cast<int>(precision.size()) - 2; i >= 0; --i) {
      precision[i] = std::max(precision[i], precision[i + 1]);
    }
    double q_sum = 0.0;
    for (int ri = 0; ri < n_rec; ++ri) {
      const double rt = ri / 100.0;
      const auto it = std::lower_bound(recall.begin(), recall.end(), rt);
      if (it != recall.end()) {
        q_sum += precision[it - recall.begin()];
      }
    }
    out.ap_per_threshold[ti] = q_sum / n_rec;
    out.ar_per_threshold[ti] = recall.empty() ? 0.0 : recall.back();
    ap_sum += out.ap_per_threshold[ti];
  }
  out.ap = ap_sum / thresholds.size();
  double ar_sum = 0.0;
  for (double r : out.ar_per_threshold) ar_sum += r;
  out.ar = ar_sum / thresholds.size();
  return out;
}

}  // namespace

Metrics evaluate(const std::vector<std::vector<DecodedPose>>& predictions,
                 const std::vector<Scene>& ground_truth,
                 const SkeletonSpec& skeleton) {
  const auto thresholds = oks_thresholds();
  const int n_scenes = static_cast<int>(ground_truth.size());

  // per-scene capped, score-sorted detections and OKS matrices
  std::vector<std::vector<const DecodedPose*>> dts(n_scenes);
  std::vector<std::vector<const Pose*>> gts(n_scenes);
  std::vector<std::vector<std::vector<double>>> oks_matrix(n_scenes);
  for (int s = 0; s < n_scenes; ++s) {
    std::vector<const DecodedPose*> d;
    if (s < static_cast<int>(predictions.size())) {
      for (const auto& p : predictions[s]) d.push_back(&p);
    }
    std::stable_sort(d.begin(), d.end(),
                     [](const DecodedPose* a, const DecodedPose* b) {
                       return a->score > b->score;
                     });
    if (static_cast<int>(d.size()) > kMaxDetections) d.resize(kMaxDetections);
    dts[s] = std::move(d);
    for (const Pose& g : ground_truth[s].poses) gts[s].push_back(&g);

    oks_matrix[s].assign(dts[s].size(),
                         std::vector<double>(gts[s].size(), 0.0));
    for (size_t di = 0; di < dts[s].size(); ++di) {
      for (size_t gi = 0; gi < gts[s].size(); ++gi) {
        oks_matrix[s][di][gi] = oks(*dts[s][di], *gts[s][gi], skeleton);
      }
    }
  }

  auto run_range = [&](double lo, double hi) {
    std::vector<SceneEval> evals;
    evals.reserve(n_scenes);
    for (int s = 0; s < n_scenes; ++s) {
      evals.push_back(evaluate_scene(dts[s], gts[s], oks_matrix[s],
                                     thresholds, lo, hi));
    }
    return accumulate(evals, thresholds);
  };

  const RangeMetrics all = run_range(0.0, kHuge);
  const RangeMetrics medium = run_range(kMediumLow, kMediumHigh);
  const RangeMetrics large = run_range(kMediumHigh, kHuge);

  Metrics m;
  m.ap = all.ap;
  m.ar = all.ar;
  if (!all.ap_per_threshold.empty()) {
    m.ap50 = all.ap_per_threshold[0];
    m.ap75 = all.ap_per_threshold[5];
    m.ar50 = all.ar_per_threshold[0];
    m.ar75 = all.ar_per_threshold[5];
  }
  m.ap_medium = medium.ap;
  m.ap_large = large.ap;
  m.ar_medium = medium.ar;
  m.ar_large = large.ar;
  return m;
}

MatchStats match_at_oks(const std::vector<std::vector<DecodedPose>>& predictions,
                        const std::vector<Scene>& ground_truth,
                        const SkeletonSpec& skeleton, double threshold) {
  MatchStats stats;
  for (size_t s = 0; s < ground_truth.size(); ++s) {
    const auto& scene = ground_truth[s];
    stats.n_gt += static_cast<int>(scene.poses.size());
    if (s >= predictions.size()) continue;

    std::vector<const DecodedPose*> d;
    for (const auto& p : predictions[s]) d.push_back(&p);
    std::stable_sort(d.begin(), d.end(),
                     [](const DecodedPose* a, const DecodedPose* b) {
                       return a->score > b->score;
                     });
    if (static_cast<int>(d.size()) > kMaxDetections) d.resize(kMaxDetections);

    std::vector<char> matched(scene.poses.size(), 0);
    for (const DecodedPose* dp : d) {
      double best = threshold;
      int m = -1;
      for (size_t gi = 0; gi < scene.poses.size(); ++gi) {
        if (matched[gi]) continue;
        const double v = oks(*dp, scene.poses[gi], skeleton);
        if (v < best) continue;
        best = v;
        m = static_cast<int>(gi);
      }
      if (m >= 0) {
        matched[m] = 1;
        ++stats.n_matched;
        stats.oks_sum += best;
      }
    }
  }
  return stats;
}

}  // namespace posefield
