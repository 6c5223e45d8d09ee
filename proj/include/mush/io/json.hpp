#pragma once

#include <fstream>
#include <string>

#include <json.hpp>

#include "mush/errors.hpp"
#include "mush/geometry.hpp"
#include "mush/localization.hpp"

namespace mush {

/// Key-order-preserving JSON; serialized output is reproducible byte for byte.
using Json = nlohmann::ordered_json;

inline Json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("load_json: cannot open " + path);
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw IoError("load_json: " + path + ": " + e.what());
  }
}

inline void save_json(const std::string& path, const Json& j) {
  std::ofstream out(path);
  if (!out) throw IoError("save_json: cannot open " + path);
  out << j.dump(2) << "\n";
  if (!out) throw IoError("save_json: failed writing " + path);
}

inline CameraIntrinsics intrinsics_from_json(const Json& j) {
  CameraIntrinsics k;
  try {
    k.fx = j.at("fx").get<double>();
    k.fy = j.at("fy").get<double>();
    k.cx = j.at("cx").get<double>();
    k.cy = j.at("cy").get<double>();
    k.width = j.at("width").get<int>();
    k.height = j.at("height").get<int>();
    k.depth_scale = j.at("depth_scale").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("intrinsics_from_json: ") + e.what());
  }
  if (k.fx <= 0.0 || k.fy <= 0.0 || k.width <= 0 || k.height <= 0 || k.depth_scale <= 0.0)
    throw IoError("intrinsics_from_json: non-positive field");
  return k;
}

inline Json intrinsics_to_json(const CameraIntrinsics& k) {
  Json j;
  j["fx"] = k.fx;
  j["fy"] = k.fy;
  j["cx"] = k.cx;
  j["cy"] = k.cy;
  j["width"] = k.width;
  j["height"] = k.height;
  j["depth_scale"] = k.depth_scale;
  return j;
}

inline CameraIntrinsics load_intrinsics(const std::string& path) {
  return intrinsics_from_json(load_json(path));
}

/// Up axis for a cap model, looked up in a JSON sidecar next to the model
/// file ("model.ply" -> "model.json", key "up"). Models without a sidecar
/// are assumed upright.
inline Vec3 load_model_up(const std::string& model_path) {
  std::string sidecar = model_path;
  const auto dot = sidecar.find_last_of('.');
  if (dot != std::string::npos && sidecar.find('/', dot) == std::string::npos)
    sidecar.resize(dot);
  sidecar += ".json";
  std::ifstream probe(sidecar);
  if (!probe) return {0.0, 0.0, 1.0};
  probe.close();
  const Json j = load_json(sidecar);
  if (!j.contains("up")) return {0.0, 0.0, 1.0};
  const auto& u = j.at("up");
  if (!u.is_array() || u.size() != 3) throw IoError("load_model_up: " + sidecar + ": bad up field");
  return {u[0].get<double>(), u[1].get<double>(), u[2].get<double>()};
}

}  // namespace mush
