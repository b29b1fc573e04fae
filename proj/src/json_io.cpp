#include "posefield/json_io.hpp"

#include <json.hpp>

#include <fstream>
#include <sstream>

namespace posefield {

using nlohmann::json;

namespace {

json pose_to_json(const Pose& pose) {
  json kp = json::array();
  for (const auto& k : pose.keypoints) {
    kp.push_back(k.x);
    kp.push_back(k.y);
    kp.push_back(static_cast<int>(k.v));
  }
  return json{{"keypoints", std::move(kp)},
              {"bbox_area", pose.bbox_area},
              {"instance_id", pose.instance_id}};
}

Pose pose_from_json(const json& j) {
  Pose pose;
  const auto& kp = j.at("keypoints");
  if (!kp.is_array() || kp.size() != 3 * kNumKeypoints) {
    throw ValidationError("pose keypoints must be a flat array of 51 values");
  }
  for (int k = 0; k < kNumKeypoints; ++k) {
    pose.keypoints[k].x = kp[3 * k].get<double>();
    pose.keypoints[k].y = kp[3 * k + 1].get<double>();
    const int v = kp[3 * k + 2].get<int>();
    if (v < 0 || v > 2) {
      throw ValidationError("keypoint visibility must be 0, 1 or 2");
    }
    pose.keypoints[k].v = static_cast<Visibility>(v);
  }
  pose.bbox_area = j.at("bbox_area").get<double>();
  pose.instance_id = j.value("instance_id", std::uint64_t{0});
  return pose;
}

json scene_to_json_obj(const Scene& scene) {
  json poses = json::array();
  for (const auto& p : scene.poses) poses.push_back(pose_to_json(p));
  return json{{"width", scene.width},
              {"height", scene.height},
              {"poses", std::move(poses)}};
}

Scene scene_from_json_obj(const json& j) {
  Scene scene;
  scene.width = j.at("width").get<int>();
  scene.height = j.at("height").get<int>();
  for (const auto& p : j.at("poses")) {
    scene.poses.push_back(pose_from_json(p));
  }
  return scene;
}

json decoded_to_json(const DecodedPose& pose) {
  json kp = json::array();
  for (const auto& joint : pose.joints) {
    kp.push_back(joint.present ? joint.x : 0.0);
    kp.push_back(joint.present ? joint.y : 0.0);
    kp.push_back(joint.present ? joint.confidence : 0.0);
  }
  return json{{"keypoints", std::move(kp)}, {"score", pose.score}};
}

DecodedPose decoded_from_json(const json& j) {
  DecodedPose pose;
  const auto& kp = j.at("keypoints");
  if (!kp.is_array() || kp.size() != 3 * kNumKeypoints) {
    throw ValidationError("result keypoints must be a flat array of 51 values");
  }
  for (int k = 0; k < kNumKeypoints; ++k) {
    DecodedJoint& joint = pose.joints[k];
    joint.x = kp[3 * k].get<double>();
    joint.y = kp[3 * k + 1].get<double>();
    joint.confidence = kp[3 * k + 2].get<double>();
    joint.present = joint.confidence > 0.0;
  }
  pose.score = j.at("score").get<double>();
  return pose;
}

}  // namespace

std::string scene_to_json(const Scene& scene) {
  return scene_to_json_obj(scene).dump(2);
}

Scene scene_from_json(const std::string& text) {
  return scene_from_json_obj(json::parse(text));
}

std::string scenes_to_json(const std::vector<Scene>& scenes) {
  json arr = json::array();
  for (const auto& s : scenes) arr.push_back(scene_to_json_obj(s));
  return json{{"scenes", std::move(arr)}}.dump(2);
}

std::vector<Scene> scenes_from_json(const std::string& text) {
  const json j = json::parse(text);
  std::vector<Scene> scenes;
  if (j.contains("scenes")) {
    for (const auto& s : j.at("scenes")) {
      scenes.push_back(scene_from_json_obj(s));
    }
  } else {
    scenes.push_back(scene_from_json_obj(j));
  }
  return scenes;
}

std::string results_to_json(
    const std::vector<std::vector<DecodedPose>>& results) {
  json arr = json::array();
  for (const auto& scene : results) {
    json poses = json::array();
    for (const auto& p : scene) poses.push_back(decoded_to_json(p));
    arr.push_back(json{{"poses", std::move(poses)}});
  }
  return json{{"scenes", std::move(arr)}}.dump(2);
}

std::vector<std::vector<DecodedPose>> results_from_json(
    const std::string& text) {
  const json j = json::parse(text);
  std::vector<std::vector<DecodedPose>> results;
  for (const auto& scene : j.at("scenes")) {
    std::vector<DecodedPose> poses;
    for (const auto& p : scene.at("poses")) {
      poses.push_back(decoded_from_json(p));
    }
    results.push_back(std::move(poses));
  }
  return results;
}

std::string metrics_to_json(const Metrics& m) {
  json j;
  j["AP"] = m.ap;
  j["AP50"] = m.ap50;
  j["AP75"] = m.ap75;
  j["APM"] = m.ap_medium;
  j["APL"] = m.ap_large;
  j["AR"] = m.ar;
  j["AR50"] = m.ar50;
  j["AR75"] = m.ar75;
  j["ARM"] = m.ar_medium;
  j["ARL"] = m.ar_large;
  return j.dump(2);
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) {
    throw std::runtime_error("cannot open: " + path.string());
  }
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

void write_text_file(const std::filesystem::path& path,
                     const std::string& text) {
  std::ofstream os(path);
  if (!os) {
    throw std::runtime_error("cannot open for writing: " + path.string());
  }
  os << text;
}

}  // namespace posefield
