#pragma once

#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "fitbench/geometry.hpp"
#include "fitbench/shape_metrics.hpp"

namespace fitbench {

inline std::string read_text_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error(ErrorKind::IoError, "cannot open for reading: " + path);
  std::ostringstream buf;
  buf << is.rdbuf();
  return buf.str();
}

inline void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error(ErrorKind::IoError, "cannot open for writing: " + path);
  os << text;
  if (!os) throw Error(ErrorKind::IoError, "write failed: " + path);
}

/// Parses a keypoint document:
/// {"image_width": W, "image_height": H,
///  "joints": {"left_shoulder": [x, y, visible], ...}}.
/// Unknown joint names are ignored; missing ones stay invisible. Visibility
/// accepts booleans or numbers (nonzero = visible).
inline Skeleton2D skeleton_from_json(const std::string& text,
                                     const std::string& origin = "<keypoints>") {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::ParseError, origin + ": " + e.what());
  }
  Skeleton2D skeleton;
  try {
    skeleton.image_width = doc.at("image_width").get<int>();
    skeleton.image_height = doc.at("image_height").get<int>();
    for (const auto& [name, value] : doc.at("joints").items()) {
      const auto joint = joint_from_name(name);
      if (!joint) continue;
      if (!value.is_array() || value.size() != 3)
        throw Error(ErrorKind::ParseError, origin + ": joint " + name + " must be [x, y, visible]");
      const double x = value[0].get<double>();
      const double y = value[1].get<double>();
      bool visible = false;
      if (value[2].is_boolean())
        visible = value[2].get<bool>();
      else
        visible = value[2].get<double>() != 0.0;
      skeleton.set(*joint, x, y, visible);
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::ParseError, origin + ": " + e.what());
  }
  skeleton.validate();
  return skeleton;
}

inline std::string skeleton_to_json(const Skeleton2D& skeleton) {
  nlohmann::ordered_json doc;
  doc["image_width"] = skeleton.image_width;
  doc["image_height"] = skeleton.image_height;
  nlohmann::ordered_json joints;
  for (JointName j : kAllJoints) {
    const Joint& p = skeleton.joint(j);
    joints[joint_name(j)] = {p.x, p.y, p.visible};
  }
  doc["joints"] = joints;
  return doc.dump(2) + "\n";
}

/// Contour as a JSON point array: {"points": [[x, y], ...]}.
inline std::string contour_to_json(const Contour& contour) {
  nlohmann::ordered_json doc;
  doc["points"] = nlohmann::ordered_json::array();
  for (const ContourPoint& p : contour) doc["points"].push_back({p.x, p.y});
  return doc.dump() + "\n";
}

inline Contour contour_from_json(const std::string& text,
                                 const std::string& origin = "<contour>") {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::ParseError, origin + ": " + e.what());
  }
  Contour contour;
  try {
    for (const auto& p : doc.at("points"))
      contour.push_back({p.at(0).get<int>(), p.at(1).get<int>()});
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::ParseError, origin + ": " + e.what());
  }
  return contour;
}

}  // namespace fitbench
