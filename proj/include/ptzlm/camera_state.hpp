#pragma once

#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "ptzlm/common.hpp"
#include "ptzlm/error.hpp"
#include "ptzlm/geometry.hpp"

namespace ptzlm {

inline constexpr double kMinZoom = 1.0;
inline constexpr double kMaxZoom = 25.0;
inline constexpr double kBaseHfov = 60.0;
inline constexpr double kBaseVfov = 33.75;

struct CameraState {
  double pan = 0.0;
  double tilt = 0.0;
  double zoom = 1.0;

  friend bool operator==(const CameraState&, const CameraState&) = default;
};

inline constexpr CameraState kHomeState{0.0, 0.0, 1.0};

inline double hfov(double zoom) { return kBaseHfov / zoom; }
inline double vfov(double zoom) { return kBaseVfov / zoom; }

inline std::optional<std::string> check_state(const CameraState& s) {
  if (!(s.pan >= -kPanLimit && s.pan <= kPanLimit)) return "pan must lie in [-180, 180]";
  if (!(s.tilt >= -kTiltLimit && s.tilt <= kTiltLimit)) return "tilt must lie in [-90, 90]";
  if (!(s.zoom >= kMinZoom && s.zoom <= kMaxZoom)) return "zoom must lie in [1.0, 25.0]";
  return std::nullopt;
}

inline void require_valid(const CameraState& s) {
  if (auto problem = check_state(s)) throw Error(ErrorCode::InvalidState, *problem);
}

inline CameraState clamp_state(CameraState s) {
  return {clamp_value(s.pan, -kPanLimit, kPanLimit), clamp_value(s.tilt, -kTiltLimit, kTiltLimit),
          clamp_value(s.zoom, kMinZoom, kMaxZoom)};
}

/// Field of view centered on the camera axis, before clipping.
inline AngularRect unclipped_viewport(const CameraState& s) {
  const double half_w = 0.5 * hfov(s.zoom);
  const double half_h = 0.5 * vfov(s.zoom);
  return {s.pan - half_w, s.pan + half_w, s.tilt - half_h, s.tilt + half_h};
}

inline AngularRect viewport_of(const CameraState& s) { return clip_to(unclipped_viewport(s), kWorldBounds); }

inline std::string state_line(const CameraState& s) {
  return "camera: pan=" + format_number(s.pan) + "°, tilt=" + format_number(s.tilt) +
         "°, zoom=" + format_number(s.zoom) + "x";
}

inline void to_json(nlohmann::json& j, const CameraState& s) {
  j = nlohmann::json{{"pan", s.pan}, {"tilt", s.tilt}, {"zoom", s.zoom}};
}

inline void from_json(const nlohmann::json& j, CameraState& s) {
  j.at("pan").get_to(s.pan);
  j.at("tilt").get_to(s.tilt);
  j.at("zoom").get_to(s.zoom);
}

}  // namespace ptzlm
