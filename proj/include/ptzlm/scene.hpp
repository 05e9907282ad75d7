#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ptzlm/camera_state.hpp"
#include "ptzlm/common.hpp"
#include "ptzlm/error.hpp"
#include "ptzlm/geometry.hpp"

namespace ptzlm {

struct SceneObject {
  std::string id;
  std::string label;
  std::vector<std::string> attributes;
  AngularRect extent;

  friend bool operator==(const SceneObject&, const SceneObject&) = default;
};

/// Static world observed by the camera. Objects are fixed at construction.
class Scene {
 public:
  Scene() = default;

  /// Validates every invariant; throws InvalidScene naming the first offending field.
  Scene(std::string scene_id, std::string environment, std::vector<SceneObject> objects,
        AngularRect world_bounds = kWorldBounds)
      : scene_id_(std::move(scene_id)),
        environment_(std::move(environment)),
        objects_(std::move(objects)),
        world_bounds_(world_bounds) {
    validate();
  }

  const std::string& scene_id() const { return scene_id_; }
  const std::string& environment() const { return environment_; }
  const std::vector<SceneObject>& objects() const { return objects_; }
  const AngularRect& world_bounds() const { return world_bounds_; }

  const SceneObject* find(std::string_view id) const {
    for (const auto& obj : objects_)
      if (obj.id == id) return &obj;
    return nullptr;
  }

  friend bool operator==(const Scene&, const Scene&) = default;

 private:
  void validate() const {
    if (scene_id_.empty()) throw Error(ErrorCode::InvalidScene, "scene_id: must be nonempty");
    if (auto p = check_rect(world_bounds_)) throw Error(ErrorCode::InvalidScene, "world_bounds: " + *p);
    std::vector<std::string> seen;
    for (std::size_t i = 0; i < objects_.size(); ++i) {
      const auto& obj = objects_[i];
      const std::string where = "objects[" + std::to_string(i) + "]";
      if (obj.id.empty()) throw Error(ErrorCode::InvalidScene, where + ".id: must be nonempty");
      if (std::find(seen.begin(), seen.end(), obj.id) != seen.end())
        throw Error(ErrorCode::InvalidScene, where + ".id: duplicate id '" + obj.id + "'");
      seen.push_back(obj.id);
      if (obj.label.empty()) throw Error(ErrorCode::InvalidScene, where + ".label: must be nonempty");
      if (auto p = check_rect(obj.extent)) throw Error(ErrorCode::InvalidScene, where + ".extent: " + *p);
      if (!world_bounds_.contains(obj.extent))
        throw Error(ErrorCode::InvalidScene, where + ".extent: not contained in world_bounds");
    }
  }

  std::string scene_id_;
  std::string environment_;
  std::vector<SceneObject> objects_;
  AngularRect world_bounds_ = kWorldBounds;
};

struct EnvironmentVocabulary {
  std::string environment;
  std::vector<std::string> labels;
  std::vector<std::string> attributes;
};

inline const std::vector<EnvironmentVocabulary>& environment_catalog() {
  static const std::vector<EnvironmentVocabulary> catalog{
      {"construction",
       {"excavator", "dump_truck", "roller", "car", "person", "crane"},
       {"yellow", "orange", "gray", "red", "white", "rusty"}},
      {"industrial",
       {"forklift", "truck", "container", "person", "pallet", "tank", "crane", "car"},
       {"blue", "red", "gray", "stacked", "white", "green"}},
      {"urban",
       {"car", "bus", "bicycle", "person", "truck", "motorcycle", "traffic_light", "van"},
       {"red", "black", "white", "gray", "blue", "parked"}},
      {"mining",
       {"haul_truck", "excavator", "drill_rig", "loader", "person", "conveyor", "dozer"},
       {"yellow", "dusty", "orange", "large", "gray", "white"}},
      {"parking",
       {"car", "suv", "van", "truck", "motorcycle", "person", "pickup", "bus"},
       {"red", "gray", "black", "white", "silver", "blue"}},
  };
  return catalog;
}

inline const EnvironmentVocabulary* find_environment(std::string_view environment) {
  for (const auto& env : environment_catalog())
    if (env.environment == environment) return &env;
  return nullptr;
}

inline constexpr int kMaxSceneObjects = 50;

namespace detail {
inline double round_tenth(double v) { return std::round(v * 10.0) / 10.0; }
}  // namespace detail

/// Procedural scene: pure function of its arguments.
inline Scene generate_scene(std::string_view environment, std::uint64_t seed, int object_count) {
  const auto* vocab = find_environment(environment);
  if (vocab == nullptr) throw Error(ErrorCode::UnknownEnvironment, "'" + std::string(environment) + "'");
  if (object_count < 1 || object_count > kMaxSceneObjects)
    throw Error(ErrorCode::InvalidObjectCount, std::to_string(object_count) + " not in [1, 50]");

  Rng rng(fnv1a64(environment) ^ splitmix64(seed) ^ (static_cast<std::uint64_t>(object_count) << 48));
  std::map<std::string, int> ordinals;
  std::vector<SceneObject> objects;
  objects.reserve(static_cast<std::size_t>(object_count));
  for (int i = 0; i < object_count; ++i) {
    SceneObject obj;
    obj.label = vocab->labels[rng.below(vocab->labels.size())];
    obj.id = obj.label + "_" + std::to_string(++ordinals[obj.label]);

    const std::size_t n_attr = 1 + rng.below(2);
    while (obj.attributes.size() < n_attr) {
      const auto& attr = vocab->attributes[rng.below(vocab->attributes.size())];
      if (std::find(obj.attributes.begin(), obj.attributes.end(), attr) == obj.attributes.end())
        obj.attributes.push_back(attr);
    }

    const double w = detail::round_tenth(rng.uniform(2.0, 30.0));
    const double h = detail::round_tenth(rng.uniform(2.0, 20.0));
    const double pan_min = detail::round_tenth(rng.uniform(-150.0, 150.0) - 0.5 * w);
    const double tilt_min = detail::round_tenth(rng.uniform(-40.0, 25.0) - 0.5 * h);
    obj.extent = {pan_min, detail::round_tenth(pan_min + w), tilt_min, detail::round_tenth(tilt_min + h)};
    objects.push_back(std::move(obj));
  }
  std::string scene_id = std::string(environment) + "-" + std::to_string(seed) + "-" + std::to_string(object_count);
  return Scene(std::move(scene_id), std::string(environment), std::move(objects));
}

/// Where an object sits relative to the camera axis, in the fixed direction bins.
inline std::string position_phrase(const SceneObject& obj, const CameraState& state) {
  const double d_pan = obj.extent.center_pan() - state.pan;
  const double d_tilt = obj.extent.center_tilt() - state.tilt;
  const double half_h = 0.5 * hfov(state.zoom);
  const double half_v = 0.5 * vfov(state.zoom);
  const bool h_in = std::abs(d_pan) <= half_h;
  const bool v_in = std::abs(d_tilt) <= half_v;
  if (h_in && v_in) return "in view";

  std::string horizontal;
  if (!h_in) {
    const double off = std::abs(d_pan);
    const char* side = d_pan < 0 ? "left" : "right";
    if (off <= 45.0)
      horizontal = std::string("slightly ") + side;
    else if (off <= 100.0)
      horizontal = std::string("to the ") + side;
    else
      horizontal = std::string("far to the ") + side;
  }
  std::string vertical;
  if (!v_in) vertical = d_tilt > 0 ? "above" : "below";

  if (horizontal.empty()) return vertical;
  if (vertical.empty()) return horizontal;
  return horizontal + " and " + vertical;
}

/// Textual observations: one "id: a {attributes} {label} is {position}" line per
/// object in id order, then the camera-state line.
inline std::string describe_observations(const Scene& scene, const CameraState& state) {
  std::vector<const SceneObject*> sorted;
  for (const auto& obj : scene.objects()) sorted.push_back(&obj);
  std::sort(sorted.begin(), sorted.end(), [](auto* a, auto* b) { return a->id < b->id; });

  std::string out;
  for (const auto* obj : sorted) {
    out += obj->id + ": a ";
    for (const auto& attr : obj->attributes) out += attr + " ";
    out += obj->label + " is " + position_phrase(*obj, state) + "\n";
  }
  out += state_line(state);
  return out;
}

inline void to_json(nlohmann::json& j, const SceneObject& o) {
  j = nlohmann::json{{"id", o.id}, {"label", o.label}, {"attributes", o.attributes}, {"extent", o.extent}};
}

inline void to_json(nlohmann::json& j, const Scene& s) {
  j = nlohmann::json{{"scene_id", s.scene_id()},
                     {"environment", s.environment()},
                     {"world_bounds", s.world_bounds()},
                     {"objects", s.objects()}};
}

namespace detail {

inline const nlohmann::json& field(const nlohmann::json& j, const char* key, const std::string& where) {
  if (!j.is_object()) throw Error(ErrorCode::InvalidScene, where + ": expected an object");
  auto it = j.find(key);
  if (it == j.end()) throw Error(ErrorCode::InvalidScene, where + "." + key + ": missing field");
  return *it;
}

inline double number_field(const nlohmann::json& j, const char* key, const std::string& where) {
  const auto& v = field(j, key, where);
  if (!v.is_number()) throw Error(ErrorCode::InvalidScene, where + "." + key + ": expected a number");
  return v.get<double>();
}

inline std::string string_field(const nlohmann::json& j, const char* key, const std::string& where) {
  const auto& v = field(j, key, where);
  if (!v.is_string()) throw Error(ErrorCode::InvalidScene, where + "." + key + ": expected a string");
  return v.get<std::string>();
}

inline AngularRect rect_field(const nlohmann::json& j, const char* key, const std::string& where) {
  const auto& v = field(j, key, where);
  const std::string path = where + "." + key;
  return {number_field(v, "pan_min", path), number_field(v, "pan_max", path), number_field(v, "tilt_min", path),
          number_field(v, "tilt_max", path)};
}

}  // namespace detail

/// Strict scene decoder. `where` prefixes the field path in diagnostics.
inline Scene scene_from_json(const nlohmann::json& j, const std::string& where = "scene") {
  using namespace detail;
  std::string scene_id = string_field(j, "scene_id", where);
  std::string environment = string_field(j, "environment", where);
  AngularRect bounds = kWorldBounds;
  if (j.contains("world_bounds")) bounds = rect_field(j, "world_bounds", where);

  const auto& arr = field(j, "objects", where);
  if (!arr.is_array()) throw Error(ErrorCode::InvalidScene, where + ".objects: expected an array");
  std::vector<SceneObject> objects;
  for (std::size_t i = 0; i < arr.size(); ++i) {
    const std::string at = where + ".objects[" + std::to_string(i) + "]";
    SceneObject obj;
    obj.id = string_field(arr[i], "id", at);
    obj.label = string_field(arr[i], "label", at);
    if (arr[i].contains("attributes")) {
      const auto& attrs = arr[i]["attributes"];
      if (!attrs.is_array()) throw Error(ErrorCode::InvalidScene, at + ".attributes: expected an array");
      for (const auto& a : attrs) {
        if (!a.is_string()) throw Error(ErrorCode::InvalidScene, at + ".attributes: expected strings");
        obj.attributes.push_back(a.get<std::string>());
      }
    }
    obj.extent = rect_field(arr[i], "extent", at);
    objects.push_back(std::move(obj));
  }
  try {
    return Scene(std::move(scene_id), std::move(environment), std::move(objects), bounds);
  } catch (const Error& e) {
    throw Error(ErrorCode::InvalidScene, where + "." + std::string(e.what()).substr(sizeof("InvalidScene: ") - 1));
  }
}

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_text_file(const std::string& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, "cannot write '" + path + "'");
  out << text;
}

inline Scene load_scene_file(const std::string& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_text_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::InvalidScene, path + ": " + e.what());
  }
  return scene_from_json(j, path);
}

}  // namespace ptzlm
