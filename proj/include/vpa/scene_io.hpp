#pragma once
//! \file
//! JSON files for scenes and observation sets.
//!
//! Scene (schema_version 1):
//!   { "schema_version": 1,
//!     "room": { "length": 8, "width": 6, "height": 3 },
//!     "luminaires": [ { "id": 1, "center": [2, 2, 3], "radius": 0.15 }, ... ] }
//!
//! Observations (schema_version 1), pixel units, optional intrinsics
//! (defaults to the simulation camera):
//!   { "schema_version": 1,
//!     "intrinsics": { "focal_cm": 0.4, "dx_cm": 1.25e-3, "dy_cm": 1.25e-3,
//!                     "u0": 320, "v0": 240, "width": 640, "height": 480 },
//!     "observations": [
//!       { "luminaire_id": 1, "complete": true,
//!         "ellipse": [a, b, c, d, e]        | "contour_px": [[u, v], ...],
//!         "center_px": [u, v], "mark_px": [u, v],
//!         "contour_length_px": 512.3 }, ... ] }
//! A contour is fitted on load; contour_length_px then defaults to its
//! polyline length. Unknown keys are rejected.

#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "vpa/conic.hpp"
#include "vpa/error.hpp"
#include "vpa/frames.hpp"
#include "vpa/sim.hpp"
#include "vpa/solver.hpp"

namespace vpa::io {

using nlohmann::json;

inline constexpr int kSchemaVersion = 1;

inline void reject_unknown_keys(const json& j, std::initializer_list<const char*> allowed,
                                const std::string& where) {
  if (!j.is_object()) throw Error(ErrorCode::ConfigInvalid, where + ": expected an object");
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [key, _] : j.items()) {
    if (!ok.contains(key)) throw Error(ErrorCode::ConfigInvalid, where + ": unknown field '" + key + "'");
  }
}

template <typename T>
T field(const json& j, const char* key, const std::string& where) {
  if (!j.contains(key)) throw Error(ErrorCode::ConfigInvalid, where + ": missing field '" + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw Error(ErrorCode::ConfigInvalid, where + ": bad value for field '" + std::string(key) + "'");
  }
}

inline void check_schema(const json& j, const std::string& where) {
  if (field<int>(j, "schema_version", where) != kSchemaVersion) {
    throw Error(ErrorCode::ConfigInvalid, where + ": unsupported schema_version");
  }
}

inline json read_json_file(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw Error(ErrorCode::FileNotFound, path.string());
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::ConfigInvalid, path.string() + ": " + e.what());
  }
}

inline json intrinsics_to_json(const CameraIntrinsics& k) {
  return {{"focal_cm", k.focal_cm}, {"dx_cm", k.dx_cm}, {"dy_cm", k.dy_cm}, {"u0", k.u0},
          {"v0", k.v0},             {"width", k.width}, {"height", k.height}};
}

inline CameraIntrinsics intrinsics_from_json(const json& j) {
  const std::string where = "intrinsics";
  reject_unknown_keys(j, {"focal_cm", "dx_cm", "dy_cm", "u0", "v0", "width", "height"}, where);
  CameraIntrinsics k;
  k.focal_cm = field<double>(j, "focal_cm", where);
  k.dx_cm = field<double>(j, "dx_cm", where);
  k.dy_cm = field<double>(j, "dy_cm", where);
  k.u0 = field<double>(j, "u0", where);
  k.v0 = field<double>(j, "v0", where);
  k.width = field<int>(j, "width", where);
  k.height = field<int>(j, "height", where);
  try {
    k.validate();
  } catch (const Error& e) {
    throw Error(ErrorCode::ConfigInvalid, e.what());
  }
  return k;
}

inline Vec3 vec3_from_json(const json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 3) throw Error(ErrorCode::ConfigInvalid, where + ": expected [x, y, z]");
  try {
    return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
  } catch (const json::exception&) {
    throw Error(ErrorCode::ConfigInvalid, where + ": expected numbers");
  }
}

inline PixelPoint pixel_from_json(const json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 2) throw Error(ErrorCode::ConfigInvalid, where + ": expected [u, v]");
  try {
    return {j[0].get<double>(), j[1].get<double>()};
  } catch (const json::exception&) {
    throw Error(ErrorCode::ConfigInvalid, where + ": expected numbers");
  }
}

inline json scene_to_json(const sim::Scene& s) {
  json lums = json::array();
  for (const auto& l : s.luminaires) {
    lums.push_back({{"id", l.id}, {"center", {l.center.x(), l.center.y(), l.center.z()}}, {"radius", l.radius}});
  }
  return {{"schema_version", kSchemaVersion},
          {"room", {{"length", s.room.length}, {"width", s.room.width}, {"height", s.room.height}}},
          {"luminaires", lums}};
}

inline sim::Scene scene_from_json(const json& j) {
  const std::string where = "scene";
  reject_unknown_keys(j, {"schema_version", "room", "luminaires"}, where);
  check_schema(j, where);
  sim::Scene s;
  const json& room = j.at("room");
  reject_unknown_keys(room, {"length", "width", "height"}, "scene.room");
  s.room.length = field<double>(room, "length", "scene.room");
  s.room.width = field<double>(room, "width", "scene.room");
  s.room.height = field<double>(room, "height", "scene.room");
  if (!j.contains("luminaires") || !j["luminaires"].is_array())
    throw Error(ErrorCode::ConfigInvalid, "scene: 'luminaires' must be an array");
  for (const auto& l : j["luminaires"]) {
    reject_unknown_keys(l, {"id", "center", "radius"}, "scene.luminaires[]");
    const double radius = field<double>(l, "radius", "scene.luminaires[]");
    if (!(radius > 0.0)) throw Error(ErrorCode::ConfigInvalid, "scene.luminaires[].radius must be positive");
    s.luminaires.push_back(LuminaireInfo::make(field<int>(l, "id", "scene.luminaires[]"),
                                               WorldPoint(vec3_from_json(l.at("center"), "scene.luminaires[].center")),
                                               radius));
  }
  s.validate();
  return s;
}

inline sim::Scene load_scene(const std::filesystem::path& path) { return scene_from_json(read_json_file(path)); }

struct ObservationSet {
  CameraIntrinsics intrinsics;
  std::vector<Observation> observations;
};

inline json observation_to_json(const Observation& o) {
  json j = {{"luminaire_id", o.luminaire_id},
            {"complete", o.complete},
            {"ellipse", {o.ellipse.a, o.ellipse.b, o.ellipse.c, o.ellipse.d, o.ellipse.e}},
            {"contour_length_px", o.contour_length_px}};
  if (o.center_proj) j["center_px"] = {o.center_proj->u, o.center_proj->v};
  if (o.mark_proj) j["mark_px"] = {o.mark_proj->u, o.mark_proj->v};
  return j;
}

inline json observation_set_to_json(const ObservationSet& set) {
  json obs = json::array();
  for (const auto& o : set.observations) obs.push_back(observation_to_json(o));
  return {{"schema_version", kSchemaVersion}, {"intrinsics", intrinsics_to_json(set.intrinsics)}, {"observations", obs}};
}

inline ObservationSet observation_set_from_json(const json& j) {
  const std::string where = "observations file";
  reject_unknown_keys(j, {"schema_version", "intrinsics", "observations"}, where);
  check_schema(j, where);
  ObservationSet set;
  if (j.contains("intrinsics")) set.intrinsics = intrinsics_from_json(j["intrinsics"]);
  if (!j.contains("observations") || !j["observations"].is_array())
    throw Error(ErrorCode::ConfigInvalid, where + ": 'observations' must be an array");
  for (const auto& jo : j["observations"]) {
    const std::string w = "observations[]";
    reject_unknown_keys(jo, {"luminaire_id", "complete", "ellipse", "contour_px", "center_px", "mark_px", "contour_length_px"}, w);
    Observation o;
    o.luminaire_id = field<int>(jo, "luminaire_id", w);
    o.complete = jo.contains("complete") ? field<bool>(jo, "complete", w) : false;
    if (jo.contains("center_px")) o.center_proj = pixel_from_json(jo["center_px"], w + ".center_px");
    if (jo.contains("mark_px")) o.mark_proj = pixel_from_json(jo["mark_px"], w + ".mark_px");
    if (o.complete && (!o.center_proj || !o.mark_proj))
      throw Error(ErrorCode::ConfigInvalid, w + ": complete observations need center_px and mark_px");

    if (jo.contains("ellipse") == jo.contains("contour_px"))
      throw Error(ErrorCode::ConfigInvalid, w + ": give exactly one of 'ellipse' or 'contour_px'");
    if (jo.contains("ellipse")) {
      const auto c = field<std::vector<double>>(jo, "ellipse", w);
      if (c.size() != 5) throw Error(ErrorCode::ConfigInvalid, w + ".ellipse: expected 5 coefficients");
      o.ellipse = {c[0], c[1], c[2], c[3], c[4]};
    } else {
      std::vector<ImagePoint> pts;
      double length = 0.0;
      PixelPoint prev{};
      bool first = true;
      for (const auto& p : jo["contour_px"]) {
        const PixelPoint px = pixel_from_json(p, w + ".contour_px[]");
        if (!first) length += std::hypot(px.u - prev.u, px.v - prev.v);
        prev = px;
        first = false;
        pts.push_back(pixel_to_image(px, set.intrinsics));
      }
      o.ellipse = fit_ellipse(pts);
      o.contour_length_px = length;
    }
    if (jo.contains("contour_length_px")) o.contour_length_px = field<double>(jo, "contour_length_px", w);
    set.observations.push_back(o);
  }
  return set;
}

inline ObservationSet load_observations(const std::filesystem::path& path) {
  return observation_set_from_json(read_json_file(path));
}

}  // namespace vpa::io
