#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ptzlm/camera_state.hpp"
#include "ptzlm/command.hpp"
#include "ptzlm/scene.hpp"

namespace ptzlm {

inline constexpr double kPanStepDeg = 5.0;
inline constexpr double kTiltStepDeg = 3.0;
inline constexpr double kZoomToFill = 0.8;

struct Frame {
  std::int64_t index = 0;  // 1-based within a sequence
  AngularRect viewport;
  CameraState state;

  friend bool operator==(const Frame&, const Frame&) = default;
};

struct CommandSpan {
  std::int64_t command = 0;  // 1-based ordinal in the command sequence
  std::int64_t first_frame = 0;
  std::int64_t last_frame = 0;

  friend bool operator==(const CommandSpan&, const CommandSpan&) = default;
};

struct SimResult {
  std::vector<Frame> frames;
  CameraState final_state;
  std::vector<CommandSpan> spans;

  std::vector<AngularRect> viewports() const {
    std::vector<AngularRect> out;
    out.reserve(frames.size());
    for (const auto& f : frames) out.push_back(f.viewport);
    return out;
  }

  friend bool operator==(const SimResult&, const SimResult&) = default;
};

/// Zoom that frames an object at 80% of the tighter axis, within zoom limits.
inline double zoom_to_fit(const AngularRect& extent) {
  const double z = std::min(kZoomToFill * kBaseHfov / extent.width(), kZoomToFill * kBaseVfov / extent.height());
  return clamp_value(z, kMinZoom, kMaxZoom);
}

namespace detail {

class FrameEmitter {
 public:
  explicit FrameEmitter(CameraState initial) : state_(initial) {}

  void emit(CameraState next) {
    state_ = clamp_state(next);
    frames_.push_back({static_cast<std::int64_t>(frames_.size()) + 1, viewport_of(state_), state_});
  }

  const CameraState& state() const { return state_; }
  std::int64_t count() const { return static_cast<std::int64_t>(frames_.size()); }
  std::vector<Frame> take() { return std::move(frames_); }

 private:
  CameraState state_;
  std::vector<Frame> frames_;
};

/// Linear interpolation of pan/tilt towards an object's center.
inline void emit_center(FrameEmitter& em, const AngularRect& extent) {
  const CameraState start = em.state();
  const double target_pan = extent.center_pan();
  const double target_tilt = extent.center_tilt();
  const double d_pan = target_pan - start.pan;
  const double d_tilt = target_tilt - start.tilt;
  const double steps = std::ceil(std::max(std::abs(d_pan) / kPanStepDeg, std::abs(d_tilt) / kTiltStepDeg));
  const auto k = std::max<std::int64_t>(1, static_cast<std::int64_t>(steps));
  for (std::int64_t j = 1; j <= k; ++j) {
    if (j == k) {
      em.emit({target_pan, target_tilt, start.zoom});
    } else {
      const double t = static_cast<double>(j) / static_cast<double>(k);
      em.emit({start.pan + d_pan * t, start.tilt + d_tilt * t, start.zoom});
    }
  }
}

}  // namespace detail

/// Expands an already-validated command sequence into viewport frames.
/// Commands naming objects absent from the scene emit no frames.
inline SimResult simulate(const Scene& scene, const CameraState& initial, const CommandSequence& commands) {
  detail::FrameEmitter em(initial);
  std::vector<CommandSpan> spans;
  std::int64_t ordinal = 0;
  for (const auto& cmd : commands) {
    ++ordinal;
    const std::int64_t before = em.count();
    switch (cmd.name) {
      case CommandName::PanLeft:
      case CommandName::PanRight: {
        const double step = cmd.name == CommandName::PanLeft ? -kPanStepDeg : kPanStepDeg;
        for (std::int64_t s = 0; s < cmd.steps(); ++s) {
          auto next = em.state();
          next.pan += step;
          em.emit(next);
        }
        break;
      }
      case CommandName::TiltUp:
      case CommandName::TiltDown: {
        const double step = cmd.name == CommandName::TiltDown ? -kTiltStepDeg : kTiltStepDeg;
        for (std::int64_t s = 0; s < cmd.steps(); ++s) {
          auto next = em.state();
          next.tilt += step;
          em.emit(next);
        }
        break;
      }
      case CommandName::Zoom: {
        auto next = em.state();
        next.zoom = cmd.value();
        em.emit(next);
        break;
      }
      case CommandName::Home: em.emit(kHomeState); break;
      case CommandName::Hold:
        for (std::int64_t s = 0; s < cmd.steps(); ++s) em.emit(em.state());
        break;
      case CommandName::Center:
      case CommandName::ZoomTo: {
        const auto* obj = scene.find(cmd.target());
        if (obj == nullptr) break;
        detail::emit_center(em, obj->extent);
        if (cmd.name == CommandName::ZoomTo) {
          auto next = em.state();
          next.zoom = zoom_to_fit(obj->extent);
          em.emit(next);
        }
        break;
      }
    }
    if (em.count() > before) spans.push_back({ordinal, before + 1, em.count()});
  }
  SimResult result;
  result.final_state = em.state();
  result.frames = em.take();
  result.spans = std::move(spans);
  return result;
}

inline void to_json(nlohmann::json& j, const Frame& f) {
  j = nlohmann::json{{"index", f.index}, {"viewport", f.viewport}, {"state", f.state}};
}

inline void from_json(const nlohmann::json& j, Frame& f) {
  j.at("index").get_to(f.index);
  j.at("viewport").get_to(f.viewport);
  j.at("state").get_to(f.state);
}

inline void to_json(nlohmann::json& j, const CommandSpan& s) {
  j = nlohmann::json{{"command", s.command}, {"first_frame", s.first_frame}, {"last_frame", s.last_frame}};
}

inline void from_json(const nlohmann::json& j, CommandSpan& s) {
  j.at("command").get_to(s.command);
  j.at("first_frame").get_to(s.first_frame);
  j.at("last_frame").get_to(s.last_frame);
}

inline void to_json(nlohmann::json& j, const SimResult& r) {
  j = nlohmann::json{{"frames", r.frames}, {"final_state", r.final_state}, {"spans", r.spans}};
}

inline void from_json(const nlohmann::json& j, SimResult& r) {
  j.at("frames").get_to(r.frames);
  j.at("final_state").get_to(r.final_state);
  if (j.contains("spans")) j.at("spans").get_to(r.spans);
}

/// Frame-sequence file text; stable bytes for identical results.
inline std::string frames_document(const SimResult& r) { return nlohmann::json(r).dump(2) + "\n"; }

}  // namespace ptzlm
