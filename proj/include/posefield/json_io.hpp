#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "posefield/core.hpp"
#include "posefield/decoder.hpp"
#include "posefield/eval.hpp"

namespace posefield {

/// Scene layout: poses as flat [x1,y1,v1,...,x17,y17,v17] arrays plus bbox
/// area, wrapped in {"width", "height", "poses"}.
std::string scene_to_json(const Scene& scene);
Scene scene_from_json(const std::string& text);

std::string scenes_to_json(const std::vector<Scene>& scenes);
std::vector<Scene> scenes_from_json(const std::string& text);

/// Results layout: {"scenes": [{"poses": [{"keypoints": [x,y,c]*17,
/// "score": s}]}]}. Absent joints carry zeros.
std::string results_to_json(const std::vector<std::vector<DecodedPose>>& results);
std::vector<std::vector<DecodedPose>> results_from_json(const std::string& text);

std::string metrics_to_json(const Metrics& metrics);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace posefield
