#include "posefield/synth.hpp"

#include <algorithm>
#include <cmath>

namespace posefield {

namespace {

struct TemplatePoint {
  double x, y;  // units of figure height, y down, vertical span [0, 1]
};

// Upright figure; indices follow the keypoint taxonomy.
constexpr TemplatePoint kTemplate[kNumKeypoints] = {
    {0.00, 0.04},   // nose
    {0.04, 0.00},   // left eye
    {-0.04, 0.00},  // right eye
    {0.08, 0.02},   // left ear
    {-0.08, 0.02},  // right ear
    {0.16, 0.18},   // left shoulder
    {-0.16, 0.18},  // right shoulder
    {0.22, 0.36},   // left elbow
    {-0.22, 0.36},  // right elbow
    {0.25, 0.52},   // left wrist
    {-0.25, 0.52},  // right wrist
    {0.10, 0.52},   // left hip
    {-0.10, 0.52},  // right hip
    {0.11, 0.75},   // left knee
    {-0.11, 0.75},  // right knee
    {0.12, 1.00},   // left ankle
    {-0.12, 1.00},  // right ankle
};

// (pivot, moved...) chains rotated rigidly by a random angle
struct Limb {
  int pivot;
  int moved[2];
  int n_moved;
  double max_angle;  // radians
};

constexpr Limb kLimbs[] = {
    {5, {7, 9}, 2, 0.7},    // left arm about shoulder
    {6, {8, 10}, 2, 0.7},   // right arm about shoulder
    {7, {9, -1}, 1, 0.9},   // left forearm about elbow
    {8, {10, -1}, 1, 0.9},  // right forearm about elbow
    {11, {13, 15}, 2, 0.35},  // left leg about hip
    {12, {14, 16}, 2, 0.35},  // right leg about hip
    {13, {15, -1}, 1, 0.45},  // left shin about knee
    {14, {16, -1}, 1, 0.45},  // right shin about knee
};

struct Box {
  double x0, y0, x1, y1;
  double area() const { return std::max(0.0, x1 - x0) * std::max(0.0, y1 - y0); }
};

Box tight_bbox(const Pose& pose) {
  Box b{1e30, 1e30, -1e30, -1e30};
  for (const auto& kp : pose.keypoints) {
    if (!kp.labeled()) continue;
    b.x0 = std::min(b.x0, kp.x);
    b.y0 = std::min(b.y0, kp.y);
    b.x1 = std::max(b.x1, kp.x);
    b.y1 = std::max(b.y1, kp.y);
  }
  return b;
}

double iou(const Box& a, const Box& b) {
  const double ix = std::max(0.0, std::min(a.x1, b.x1) - std::max(a.x0, b.x0));
  const double iy = std::max(0.0, std::min(a.y1, b.y1) - std::max(a.y0, b.y0));
  const double inter = ix * iy;
  const double uni = a.area() + b.area() - inter;
  return uni > 0.0 ? inter / uni : 0.0;
}

Pose sample_pose(CounterRng rng, double height, double cx, double cy,
                 const std::vector<int>& active) {
  Pose pose;
  double px[kNumKeypoints], py[kNumKeypoints];
  for (int k = 0; k < kNumKeypoints; ++k) {
    px[k] = kTemplate[k].x * height;
    py[k] = kTemplate[k].y * height;
  }
  for (const Limb& limb : kLimbs) {
    const double angle = rng.uniform(-limb.max_angle, limb.max_angle);
    const double ca = std::cos(angle);
    const double sa = std::sin(angle);
    for (int m = 0; m < limb.n_moved; ++m) {
      const int k = limb.moved[m];
      const double rx = px[k] - px[limb.pivot];
      const double ry = py[k] - py[limb.pivot];
      px[k] = px[limb.pivot] + ca * rx - sa * ry;
      py[k] = py[limb.pivot] + sa * rx + ca * ry;
    }
  }
  for (int k = 0; k < kNumKeypoints; ++k) {
    const bool labeled =
        active.empty() ||
        std::find(active.begin(), active.end(), k) != active.end();
    pose.keypoints[k].x = cx + px[k];
    pose.keypoints[k].y = cy - height / 2.0 + py[k];
    pose.keypoints[k].v = labeled ? Visibility::visible : Visibility::unlabeled;
  }
  const Box box = tight_bbox(pose);
  pose.bbox_area = std::max(1.0, box.area());
  return pose;
}

}  // namespace

std::vector<Scene> generate_scenes(std::uint64_t seed, int n_scenes,
                                   const SceneParams& params,
                                   const SkeletonSpec& skeleton) {
  (void)skeleton;
  CounterRng root(seed);
  std::vector<Scene> scenes;
  scenes.reserve(n_scenes);

  for (int s = 0; s < n_scenes; ++s) {
    CounterRng scene_rng = root.derive(static_cast<std::uint64_t>(s) + 1);
    Scene scene;
    scene.width = params.width;
    scene.height = params.height;

    const int n_poses =
        params.min_poses + scene_rng.uniform_int(params.max_poses -
                                                 params.min_poses + 1);
    std::vector<Box> boxes;
    for (int p = 0; p < n_poses; ++p) {
      bool placed = false;
      for (int attempt = 0; attempt < params.max_attempts; ++attempt) {
        CounterRng pose_rng = scene_rng.derive(
            1000ULL + static_cast<std::uint64_t>(p) * params.max_attempts +
            attempt);
        const double height =
            pose_rng.uniform(params.min_height, params.max_height);
        // covers the widest articulated reach of the template
        const double margin = 0.50 * height + 2.0;
        if (2.0 * margin >= params.width || 2.0 * margin >= params.height) {
          continue;  // figure cannot fit; try a smaller draw
        }
        const double cx = pose_rng.uniform(margin, params.width - margin);
        const double cy = pose_rng.uniform(margin, params.height - margin);
        Pose pose = sample_pose(pose_rng.derive(7), height, cx, cy,
                                params.active_keypoints);
        pose.instance_id = static_cast<std::uint64_t>(p);

        const Box box = tight_bbox(pose);
        if (box.x0 < 0 || box.y0 < 0 || box.x1 >= params.width ||
            box.y1 >= params.height) {
          continue;
        }
        bool ok = true;
        for (const Box& other : boxes) {
          if (iou(box, other) > params.max_pairwise_iou) {
            ok = false;
            break;
          }
        }
        if (!ok) continue;
        boxes.push_back(box);
        scene.poses.push_back(std::move(pose));
        placed = true;
        break;
      }
      if (!placed) {
        throw ValidationError(
            "scene constraints unsatisfiable after max_attempts");
      }
    }
    validate(scene);
    scenes.push_back(std::move(scene));
  }
  return scenes;
}

namespace {

float clamp01(double v) {
  return static_cast<float>(std::clamp(v, 0.0, 1.0));
}

}  // namespace

std::pair<PifField, PafField> perturb_fields(const PifField& pif,
                                             const PafField& paf,
                                             const NoiseParams& noise,
                                             std::uint64_t seed) {
  PifField out_pif = pif;
  PafField out_paf = paf;
  CounterRng root(seed);

  const int h = pif.geometry.grid_h;
  const int w = pif.geometry.grid_w;

  // Independent stream per (field, type, cell) so iteration order is
  // irrelevant to the outcome.
  auto cell_rng = [&](int field, int type, int j, int i) {
    const std::uint64_t id =
        (static_cast<std::uint64_t>(field) << 56) ^
        (static_cast<std::uint64_t>(type) << 40) ^
        (static_cast<std::uint64_t>(j) << 20) ^ static_cast<std::uint64_t>(i);
    return root.derive(id);
  };

  // Stream shared by all cells regressing to the same target: neighboring
  // cells see the same image content, so their errors move together.
  auto target_rng = [&](int field, int type, double tx, double ty) {
    const auto qx = static_cast<std::int64_t>(std::llround(tx));
    const auto qy = static_cast<std::int64_t>(std::llround(ty));
    std::uint64_t id = CounterRng::mix(
        (static_cast<std::uint64_t>(field) << 58) ^
        (static_cast<std::uint64_t>(type) << 48) ^
        (static_cast<std::uint64_t>(qx) << 24) ^ static_cast<std::uint64_t>(qy));
    return root.derive(id ^ 0x7A39F);
  };

  for (int t = 0; t < pif.num_types; ++t) {
    for (int j = 0; j < h; ++j) {
      for (int i = 0; i < w; ++i) {
        CounterRng rng = cell_rng(0, t, j, i);
        Plane& c = out_pif.plane(t, pif::kC);
        if (noise.dropout > 0.0 && rng.uniform() < noise.dropout) {
          c(j, i) = 0.f;
          continue;
        }
        if (noise.confidence_sigma > 0.0 && c(j, i) > 0.f) {
          c(j, i) = clamp01(c(j, i) + rng.normal(0.0, noise.confidence_sigma));
        }
        if (noise.vector_sigma > 0.0 && c(j, i) > 0.f) {
          double cell_sigma = noise.vector_sigma;
          double jx, jy;
          if (noise.heteroscedastic) {
            // part localization stays comparatively accurate; association
            // regressions carry the bulk of the uncertainty. Cells pointing
            // at the same joint share most of their error.
            const double size = pif.plane(t, pif::kSigma)(j, i);
            cell_sigma *= 0.25 * std::clamp(size, 0.5, 3.0);
            out_pif.plane(t, pif::kB)(j, i) =
                std::max(kBMin, static_cast<float>(cell_sigma));
            CounterRng shared = target_rng(
                0, t, i + pif.plane(t, pif::kDx)(j, i),
                j + pif.plane(t, pif::kDy)(j, i));
            jx = shared.normal(0.0, cell_sigma) +
                 rng.normal(0.0, cell_sigma / 4.0);
            jy = shared.normal(0.0, cell_sigma) +
                 rng.normal(0.0, cell_sigma / 4.0);
          } else {
            jx = rng.normal(0.0, cell_sigma);
            jy = rng.normal(0.0, cell_sigma);
          }
          out_pif.plane(t, pif::kDx)(j, i) += static_cast<float>(jx);
          out_pif.plane(t, pif::kDy)(j, i) += static_cast<float>(jy);
        }
      }
    }
  }

  for (int t = 0; t < paf.num_types; ++t) {
    for (int j = 0; j < h; ++j) {
      for (int i = 0; i < w; ++i) {
        CounterRng rng = cell_rng(1, t, j, i);
        Plane& c = out_paf.plane(t, paf::kC);
        if (noise.dropout > 0.0 && rng.uniform() < noise.dropout) {
          c(j, i) = 0.f;
          continue;
        }
        if (noise.confidence_sigma > 0.0 && c(j, i) > 0.f) {
          c(j, i) = clamp01(c(j, i) + rng.normal(0.0, noise.confidence_sigma));
        }
        if (noise.vector_sigma > 0.0 && c(j, i) > 0.f) {
          // the two endpoint regressions carry separate spreads; error
          // scales with the limb length, and cells of one association share
          // most of their error
          double sigma1 = noise.vector_sigma;
          double sigma2 = noise.vector_sigma;
          double j1x, j1y, j2x, j2y;
          if (noise.heteroscedastic) {
            const double limb =
                std::hypot(out_paf.plane(t, paf::kDx2)(j, i) -
                               out_paf.plane(t, paf::kDx1)(j, i),
                           out_paf.plane(t, paf::kDy2)(j, i) -
                               out_paf.plane(t, paf::kDy1)(j, i));
            const double scale = std::clamp(limb / 3.0, 0.5, 3.0);
            sigma1 *= scale;
            sigma2 *= scale;
            out_paf.plane(t, paf::kB1)(j, i) =
                std::max(kBMin, static_cast<float>(sigma1));
            out_paf.plane(t, paf::kB2)(j, i) =
                std::max(kBMin, static_cast<float>(sigma2));
            CounterRng shared = target_rng(
                1, t,
                (i + out_paf.plane(t, paf::kDx1)(j, i)) +
                    1000.0 * (i + out_paf.plane(t, paf::kDx2)(j, i)),
                (j + out_paf.plane(t, paf::kDy1)(j, i)) +
                    1000.0 * (j + out_paf.plane(t, paf::kDy2)(j, i)));
            j1x = shared.normal(0.0, sigma1) + rng.normal(0.0, sigma1 / 4.0);
            j1y = shared.normal(0.0, sigma1) + rng.normal(0.0, sigma1 / 4.0);
            j2x = shared.normal(0.0, sigma2) + rng.normal(0.0, sigma2 / 4.0);
            j2y = shared.normal(0.0, sigma2) + rng.normal(0.0, sigma2 / 4.0);
          } else {
            j1x = rng.normal(0.0, sigma1);
            j1y = rng.normal(0.0, sigma1);
            j2x = rng.normal(0.0, sigma2);
            j2y = rng.normal(0.0, sigma2);
          }
          out_paf.plane(t, paf::kDx1)(j, i) += static_cast<float>(j1x);
          out_paf.plane(t, paf::kDy1)(j, i) += static_cast<float>(j1y);
          out_paf.plane(t, paf::kDx2)(j, i) += static_cast<float>(j2x);
          out_paf.plane(t, paf::kDy2)(j, i) += static_cast<float>(j2y);
        }
      }
    }
  }
  return {std::move(out_pif), std::move(out_paf)};
}

}  // namespace posefield
