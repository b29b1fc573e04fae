#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstring>
#include <limits>

#include "posefield/encoder.hpp"
#include "posefield/synth.hpp"

using namespace posefield;

namespace {

Scene one_keypoint_scene(double x, double y, int type = 0, int width = 160,
                         int height = 160) {
  Scene scene;
  scene.width = width;
  scene.height = height;
  Pose pose;
  pose.keypoints[type] = {x, y, Visibility::visible};
  pose.bbox_area = 900.0;
  scene.poses.push_back(pose);
  return scene;
}

double segment_distance(double px, double py, double ax, double ay, double bx,
                        double by) {
  const double abx = bx - ax, aby = by - ay;
  const double len2 = abx * abx + aby * aby;
  double t = len2 > 0 ? ((px - ax) * abx + (py - ay) * aby) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  return std::hypot(px - (ax + t * abx), py - (ay + t * aby));
}

}  // namespace

TEST_CASE("keypoint at an exact cell center writes zero offsets") {
  const auto skeleton = build_coco_skeleton();
  const Scene scene = one_keypoint_scene(16.0, 24.0, 0);
  const auto g = FieldGeometry::for_scene(scene.width, scene.height, 8);
  const auto pif = encode_pif(scene, skeleton, g);

  CHECK(pif.plane(0, pif::kC)(3, 2) == 1.0f);
  CHECK(pif.plane(0, pif::kDx)(3, 2) == 0.0f);
  CHECK(pif.plane(0, pif::kDy)(3, 2) == 0.0f);
  CHECK(pif.plane(0, pif::kB)(3, 2) == 1.0f);
  const double expected_sigma = skeleton.kappa[0] * std::sqrt(900.0) / 8.0;
  CHECK(pif.plane(0, pif::kSigma)(3, 2) ==
        doctest::Approx(expected_sigma).epsilon(1e-6));
}

TEST_CASE("every window cell reconstructs the original image coordinate") {
  const auto skeleton = build_coco_skeleton();
  const Scene scene = one_keypoint_scene(51.3, 77.9, 4);
  const auto g = FieldGeometry::for_scene(scene.width, scene.height, 8);
  const auto pif = encode_pif(scene, skeleton, g);

  int cells = 0;
  for (int j = 0; j < g.grid_h; ++j) {
    for (int i = 0; i < g.grid_w; ++i) {
      if (pif.plane(4, pif::kC)(j, i) == 0.f) continue;
      ++cells;
      const double x = (i + pif.plane(4, pif::kDx)(j, i)) * g.stride;
      const double y = (j + pif.plane(4, pif::kDy)(j, i)) * g.stride;
      CHECK(std::abs(x - 51.3) < 1e-4);
      CHECK(std::abs(y - 77.9) < 1e-4);
      // the window has side s_target cells
      CHECK(std::abs(i - 51.3 / 8.0) <= 2.0);
      CHECK(std::abs(j - 77.9 / 8.0) <= 2.0);
    }
  }
  CHECK(cells == 16);  // 4x4 block for a generic sub-cell position
}

TEST_CASE("contested cells go to the nearest keypoint (brute-force oracle)") {
  const auto skeleton = build_coco_skeleton();
  Scene scene;
  scene.width = 160;
  scene.height = 160;
  for (int p = 0; p < 2; ++p) {
    Pose pose;
    pose.instance_id = p;
    pose.bbox_area = 900.0;
    pose.keypoints[2] = {60.0 + p * 8.0, 64.0, Visibility::visible};  // 1 cell apart
    scene.poses.push_back(pose);
  }
  const auto g = FieldGeometry::for_scene(scene.width, scene.height, 8);
  const auto pif = encode_pif(scene, skeleton, g);

  for (int j = 0; j < g.grid_h; ++j) {
    for (int i = 0; i < g.grid_w; ++i) {
      if (pif.plane(2, pif::kC)(j, i) == 0.f) continue;
      const double x = (i + pif.plane(2, pif::kDx)(j, i)) * g.stride;
      // exhaustive nearest-keypoint check in field units
      double best = std::numeric_limits<double>::infinity();
      double best_x = 0;
      for (const Pose& pose : scene.poses) {
        const double fx = pose.keypoints[2].x / 8.0;
        const double fy = pose.keypoints[2].y / 8.0;
        const double d2 = (fx - i) * (fx - i) + (fy - j) * (fy - j);
        if (d2 < best) {
          best = d2;
          best_x = pose.keypoints[2].x;
        }
      }
      CHECK(x == doctest::Approx(best_x).epsilon(1e-6));
    }
  }
}

TEST_CASE("paf midpoint tie points vector 1 at the lower keypoint index") {
  const auto skeleton = build_coco_skeleton();
  // connection 7 is (5, 6): the two shoulders
  Scene scene;
  scene.width = 160;
  scene.height = 160;
  Pose pose;
  pose.bbox_area = 3600.0;
  pose.keypoints[5] = {96.0, 80.0, Visibility::visible};
  pose.keypoints[6] = {64.0, 80.0, Visibility::visible};
  scene.poses.push_back(pose);
  const auto g = FieldGeometry::for_scene(scene.width, scene.height, 8);
  const auto paf = encode_paf(scene, skeleton, g);

  const int ci = 7;
  REQUIRE(skeleton.connections[ci] == std::pair<int, int>(5, 6));
  // cell (10, 10) sits exactly at the midpoint (80, 80)
  REQUIRE(paf.plane(ci, paf::kC)(10, 10) == 1.0f);
  const double x1 = (10 + paf.plane(ci, paf::kDx1)(10, 10)) * 8.0;
  const double x2 = (10 + paf.plane(ci, paf::kDx2)(10, 10)) * 8.0;
  CHECK(x1 == doctest::Approx(96.0));  // keypoint 5 wins the tie
  CHECK(x2 == doctest::Approx(64.0));
}

TEST_CASE("vector 2 stays within the pose even when another joint is closer") {
  const auto skeleton = build_coco_skeleton();
  const int ci = 8;  // (5, 7): left shoulder -> left elbow
  REQUIRE(skeleton.connections[ci] == std::pair<int, int>(5, 7));

  Scene scene;
  scene.width = 320;
  scene.height = 320;
  Pose a;  // long horizontal arm
  a.instance_id = 0;
  a.bbox_area = 10000.0;
  a.keypoints[5] = {40.0, 40.0, Visibility::visible};
  a.keypoints[7] = {160.0, 40.0, Visibility::visible};
  scene.poses.push_back(a);
  Pose b;  // its elbow is near a's shoulder, its own segment is far
  b.instance_id = 1;
  b.bbox_area = 10000.0;
  b.keypoints[5] = {48.0, 240.0, Visibility::visible};
  b.keypoints[7] = {48.0, 56.0, Visibility::visible};
  scene.poses.push_back(b);

  const auto g = FieldGeometry::for_scene(scene.width, scene.height, 8);
  const auto paf = encode_paf(scene, skeleton, g);

  // cell (5, 5) center (40, 40) lies on a's joint; b's segment is 8px away
  REQUIRE(paf.plane(ci, paf::kC)(5, 5) == 1.0f);
  const double x1 = (5 + paf.plane(ci, paf::kDx1)(5, 5)) * 8.0;
  const double y1 = (5 + paf.plane(ci, paf::kDy1)(5, 5)) * 8.0;
  const double x2 = (5 + paf.plane(ci, paf::kDx2)(5, 5)) * 8.0;
  const double y2 = (5 + paf.plane(ci, paf::kDy2)(5, 5)) * 8.0;
  CHECK(x1 == doctest::Approx(40.0));
  CHECK(y1 == doctest::Approx(40.0));
  // the partner is a's elbow at (160, 40), not b's elbow 17px away
  CHECK(x2 == doctest::Approx(160.0));
  CHECK(y2 == doctest::Approx(40.0));
}

TEST_CASE("active paf cells always reconstruct a ground-truth segment") {
  const auto skeleton = build_coco_skeleton();
  SceneParams params;
  params.max_poses = 3;
  params.max_pairwise_iou = 0.3;
  const auto scenes = generate_scenes(23, 5, params, skeleton);

  for (const Scene& scene : scenes) {
    const auto g = FieldGeometry::for_scene(scene.width, scene.height, 8);
    const auto paf = encode_paf(scene, skeleton, g);
    for (int ci = 0; ci < paf.num_types; ++ci) {
      const auto [ka, kb] = skeleton.connections[ci];
      for (int j = 0; j < g.grid_h; ++j) {
        for (int i = 0; i < g.grid_w; ++i) {
          if (paf.plane(ci, paf::kC)(j, i) == 0.f) continue;
          const double x1 = (i + paf.plane(ci, paf::kDx1)(j, i)) * g.stride;
          const double y1 = (j + paf.plane(ci, paf::kDy1)(j, i)) * g.stride;
          const double x2 = (i + paf.plane(ci, paf::kDx2)(j, i)) * g.stride;
          const double y2 = (j + paf.plane(ci, paf::kDy2)(j, i)) * g.stride;

          // brute force over every pose's segment for this connection
          bool found = false;
          for (const Pose& pose : scene.poses) {
            const Keypoint& A = pose.keypoints[ka];
            const Keypoint& B = pose.keypoints[kb];
            if (!A.labeled() || !B.labeled()) continue;
            const bool fwd = std::hypot(x1 - A.x, y1 - A.y) < 1e-3 &&
                             std::hypot(x2 - B.x, y2 - B.y) < 1e-3;
            const bool bwd = std::hypot(x1 - B.x, y1 - B.y) < 1e-3 &&
                             std::hypot(x2 - A.x, y2 - A.y) < 1e-3;
            if (fwd || bwd) {
              found = true;
              // support region: the cell center is within r_paf of the segment
              CHECK(segment_distance(i, j, A.x / 8, A.y / 8, B.x / 8,
                                     B.y / 8) <= 1.0 + 1e-9);
              break;
            }
          }
          CHECK(found);
        }
      }
    }
  }
}

TEST_CASE("encoding is deterministic") {
  const auto skeleton = build_coco_skeleton();
  SceneParams params;
  const auto scenes = generate_scenes(5, 1, params, skeleton);
  const auto g = FieldGeometry::for_scene(scenes[0].width, scenes[0].height, 8);
  const auto [pif1, paf1] = encode(scenes[0], skeleton, g);
  const auto [pif2, paf2] = encode(scenes[0], skeleton, g);
  for (size_t p = 0; p < pif1.planes.size(); ++p) {
    CHECK(std::memcmp(pif1.planes[p].data(), pif2.planes[p].data(),
                      sizeof(float) * pif1.planes[p].size()) == 0);
  }
  for (size_t p = 0; p < paf1.planes.size(); ++p) {
    CHECK(std::memcmp(paf1.planes[p].data(), paf2.planes[p].data(),
                      sizeof(float) * paf1.planes[p].size()) == 0);
  }
}

TEST_CASE("keypoints outside the image reject the scene") {
  const auto skeleton = build_coco_skeleton();
  Scene scene = one_keypoint_scene(170.0, 20.0);  // width is 160
  const auto g = FieldGeometry::for_scene(160, 160, 8);
  CHECK_THROWS_AS(encode_pif(scene, skeleton, g), ValidationError);
  CHECK_THROWS_AS(encode_paf(scene, skeleton, g), ValidationError);
}
