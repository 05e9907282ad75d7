#pragma once

#include <algorithm>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

namespace ptzlm {

inline constexpr double kPanLimit = 180.0;
inline constexpr double kTiltLimit = 90.0;

/// Axis-aligned rectangle on the flat pan x tilt plane, in degrees.
struct AngularRect {
  double pan_min = 0.0;
  double pan_max = 0.0;
  double tilt_min = 0.0;
  double tilt_max = 0.0;

  double width() const { return pan_max - pan_min; }
  double height() const { return tilt_max - tilt_min; }
  double area() const { return width() * height(); }
  double center_pan() const { return 0.5 * (pan_min + pan_max); }
  double center_tilt() const { return 0.5 * (tilt_min + tilt_max); }

  bool contains(const AngularRect& other) const {
    return other.pan_min >= pan_min && other.pan_max <= pan_max && other.tilt_min >= tilt_min &&
           other.tilt_max <= tilt_max;
  }

  friend bool operator==(const AngularRect&, const AngularRect&) = default;
};

inline constexpr AngularRect kWorldBounds{-kPanLimit, kPanLimit, -kTiltLimit, kTiltLimit};

/// Returns a description of the first violated invariant, if any.
inline std::optional<std::string> check_rect(const AngularRect& r) {
  if (!(r.pan_min < r.pan_max)) return "pan_min must be < pan_max";
  if (!(r.tilt_min < r.tilt_max)) return "tilt_min must be < tilt_max";
  if (!kWorldBounds.contains(r)) return "rect exceeds world bounds pan [-180, 180], tilt [-90, 90]";
  return std::nullopt;
}

inline std::optional<AngularRect> intersection(const AngularRect& a, const AngularRect& b) {
  AngularRect r{std::max(a.pan_min, b.pan_min), std::min(a.pan_max, b.pan_max),
                std::max(a.tilt_min, b.tilt_min), std::min(a.tilt_max, b.tilt_max)};
  if (r.pan_min >= r.pan_max || r.tilt_min >= r.tilt_max) return std::nullopt;
  return r;
}

inline AngularRect clip_to(const AngularRect& r, const AngularRect& bounds) {
  return {std::max(r.pan_min, bounds.pan_min), std::min(r.pan_max, bounds.pan_max),
          std::max(r.tilt_min, bounds.tilt_min), std::min(r.tilt_max, bounds.tilt_max)};
}

inline void to_json(nlohmann::json& j, const AngularRect& r) {
  j = nlohmann::json{{"pan_min", r.pan_min}, {"pan_max", r.pan_max}, {"tilt_min", r.tilt_min}, {"tilt_max", r.tilt_max}};
}

inline void from_json(const nlohmann::json& j, AngularRect& r) {
  j.at("pan_min").get_to(r.pan_min);
  j.at("pan_max").get_to(r.pan_max);
  j.at("tilt_min").get_to(r.tilt_min);
  j.at("tilt_max").get_to(r.tilt_max);
}

}  // namespace ptzlm
