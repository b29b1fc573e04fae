#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "posefield/eval.hpp"
#include "posefield/synth.hpp"

using namespace posefield;

namespace {

DecodedPose as_prediction(const Pose& gt, double score = 1.0) {
  DecodedPose p;
  for (int k = 0; k < kNumKeypoints; ++k) {
    if (!gt.keypoints[k].labeled()) continue;
    p.joints[k] = DecodedJoint{gt.keypoints[k].x, gt.keypoints[k].y, score, true};
  }
  p.score = score;
  return p;
}

Scene grid_scene(int n_poses, double area = 10000.0) {
  Scene scene;
  scene.width = 2000;
  scene.height = 2000;
  for (int p = 0; p < n_poses; ++p) {
    Pose pose;
    pose.instance_id = p;
    pose.bbox_area = area;
    for (int k = 0; k < kNumKeypoints; ++k) {
      pose.keypoints[k] = {100.0 + 400.0 * (p % 4) + 5.0 * k,
                           100.0 + 400.0 * (p / 4) + 7.0 * k,
                           Visibility::visible};
    }
    scene.poses.push_back(pose);
  }
  return scene;
}

}  // namespace

TEST_CASE("oks is 1 for an exact prediction") {
  const auto skeleton = build_coco_skeleton();
  const Scene scene = grid_scene(1);
  CHECK(oks(as_prediction(scene.poses[0]), scene.poses[0], skeleton) ==
        doctest::Approx(1.0));
}

TEST_CASE("oks equals exp(-1/2) when every keypoint is kappa*sqrt(area) off") {
  const auto skeleton = build_coco_skeleton();
  const Scene scene = grid_scene(1);
  const Pose& gt = scene.poses[0];
  DecodedPose pred = as_prediction(gt);
  for (int k = 0; k < kNumKeypoints; ++k) {
    pred.joints[k].x += skeleton.kappa[k] * std::sqrt(gt.bbox_area);
  }
  CHECK(oks(pred, gt, skeleton) ==
        doctest::Approx(std::exp(-0.5)).epsilon(1e-9));
}

TEST_CASE("oks vanishes for a distant prediction and rejects empty gt") {
  const auto skeleton = build_coco_skeleton();
  Scene scene = grid_scene(1);
  Pose& gt = scene.poses[0];
  for (int k = 1; k < kNumKeypoints; ++k) gt.keypoints[k].v = Visibility::unlabeled;
  DecodedPose pred = as_prediction(gt);
  pred.joints[0].x += 1000.0;
  CHECK(oks(pred, gt, skeleton) < 1e-12);

  Pose empty = gt;
  empty.keypoints[0].v = Visibility::unlabeled;
  CHECK_THROWS_AS(oks(pred, empty, skeleton), ValidationError);
}

TEST_CASE("oks is invariant under uniform scaling") {
  const auto skeleton = build_coco_skeleton();
  const Scene scene = grid_scene(1);
  const Pose& gt = scene.poses[0];
  DecodedPose pred = as_prediction(gt);
  for (int k = 0; k < kNumKeypoints; ++k) {
    pred.joints[k].x += 3.0;
    pred.joints[k].y -= 2.0;
  }
  const double base = oks(pred, gt, skeleton);

  const double s = 2.5;
  Pose gt_scaled = gt;
  gt_scaled.bbox_area = gt.bbox_area * s * s;
  DecodedPose pred_scaled = pred;
  for (int k = 0; k < kNumKeypoints; ++k) {
    gt_scaled.keypoints[k].x *= s;
    gt_scaled.keypoints[k].y *= s;
    pred_scaled.joints[k].x = pred.joints[k].x * s;
    pred_scaled.joints[k].y = pred.joints[k].y * s;
  }
  CHECK(oks(pred_scaled, gt_scaled, skeleton) ==
        doctest::Approx(base).epsilon(1e-9));
}

TEST_CASE("a perfect detector scores AP = AR = 1 exactly") {
  const auto skeleton = build_coco_skeleton();
  std::vector<Scene> scenes = {grid_scene(3), grid_scene(5)};
  std::vector<std::vector<DecodedPose>> preds;
  for (const Scene& s : scenes) {
    std::vector<DecodedPose> p;
    for (const Pose& gt : s.poses) p.push_back(as_prediction(gt));
    preds.push_back(std::move(p));
  }
  const Metrics m = evaluate(preds, scenes, skeleton);
  CHECK(m.ap == 1.0);
  CHECK(m.ar == 1.0);
  CHECK(m.ap50 == 1.0);
  CHECK(m.ap75 == 1.0);
}

TEST_CASE("empty predictions score zero") {
  const auto skeleton = build_coco_skeleton();
  const std::vector<Scene> scenes = {grid_scene(2)};
  const Metrics m = evaluate({{}}, scenes, skeleton);
  CHECK(m.ap == 0.0);
  CHECK(m.ar == 0.0);
}

TEST_CASE("a trailing false positive does not dent a saturated PR curve") {
  const auto skeleton = build_coco_skeleton();
  const std::vector<Scene> scenes = {grid_scene(1)};
  DecodedPose exact = as_prediction(scenes[0].poses[0], 0.9);
  DecodedPose far = as_prediction(scenes[0].poses[0], 0.8);
  for (auto& j : far.joints) {
    j.x += 900.0;
    j.y += 900.0;
  }
  // hand-computed PR: rank 1 matches (recall 1, precision 1); rank 2 is an
  // unmatched detection, so every sampled recall still reads precision 1
  const Metrics m = evaluate({{exact, far}}, scenes, skeleton);
  CHECK(m.ap == 1.0);
  CHECK(m.ar == 1.0);
}

TEST_CASE("duplicated predictions never beat the deduplicated set") {
  const auto skeleton = build_coco_skeleton();
  SceneParams params;
  params.max_poses = 3;
  const auto scenes = generate_scenes(41, 6, params, skeleton);

  std::vector<std::vector<DecodedPose>> clean, duplicated;
  CounterRng rng(4);
  for (const Scene& s : scenes) {
    std::vector<DecodedPose> p;
    for (const Pose& gt : s.poses) {
      DecodedPose dp = as_prediction(gt, rng.uniform(0.5, 1.0));
      for (auto& j : dp.joints) {
        j.x += rng.normal(0, 4.0);
        j.y += rng.normal(0, 4.0);
      }
      p.push_back(dp);
    }
    clean.push_back(p);
    auto dup = p;
    for (auto d : p) {
      d.score *= 0.9;
      dup.push_back(d);
    }
    duplicated.push_back(std::move(dup));
  }
  const Metrics a = evaluate(clean, scenes, skeleton);
  const Metrics b = evaluate(duplicated, scenes, skeleton);
  CHECK(b.ap <= a.ap + 1e-12);
}

TEST_CASE("ap is monotonically non-increasing in the oks threshold") {
  const auto skeleton = build_coco_skeleton();
  SceneParams params;
  const auto scenes = generate_scenes(43, 8, params, skeleton);
  std::vector<std::vector<DecodedPose>> preds;
  CounterRng rng(9);
  for (const Scene& s : scenes) {
    std::vector<DecodedPose> p;
    for (const Pose& gt : s.poses) {
      DecodedPose dp = as_prediction(gt, rng.uniform(0.3, 1.0));
      for (auto& j : dp.joints) {
        j.x += rng.normal(0, 6.0);
        j.y += rng.normal(0, 6.0);
      }
      p.push_back(dp);
    }
    preds.push_back(std::move(p));
  }
  const Metrics m = evaluate(preds, scenes, skeleton);
  CHECK(m.ap50 >= m.ap75 - 1e-12);
  CHECK(m.ar50 >= m.ar75 - 1e-12);
}

TEST_CASE("pck counts boundary-inclusive fractions") {
  const auto skeleton = build_coco_skeleton();
  (void)skeleton;
  const Scene scene = grid_scene(1, 2500.0);
  const Pose& gt = scene.poses[0];

  CHECK(pck(as_prediction(gt), gt, 0.1) == 1.0);

  DecodedPose boundary = as_prediction(gt);
  const double radius = 0.1 * std::sqrt(gt.bbox_area);
  for (auto& j : boundary.joints) j.x += radius;
  CHECK(pck(boundary, gt, 0.1) == 1.0);

  DecodedPose half = as_prediction(gt);
  for (int k = 0; k < 8; ++k) half.joints[k].x += 1000.0;
  CHECK(pck(half, gt, 0.1) == doctest::Approx(9.0 / 17.0));
}

TEST_CASE("match_at_oks reports recall and mean oks") {
  const auto skeleton = build_coco_skeleton();
  const std::vector<Scene> scenes = {grid_scene(2)};
  std::vector<std::vector<DecodedPose>> preds(1);
  preds[0].push_back(as_prediction(scenes[0].poses[0]));
  const MatchStats m = match_at_oks(preds, scenes, skeleton, 0.5);
  CHECK(m.n_gt == 2);
  CHECK(m.n_matched == 1);
  CHECK(m.recall() == doctest::Approx(0.5));
  CHECK(m.mean_oks() == doctest::Approx(0.5));
}
