#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ptzlm/command.hpp"
#include "ptzlm/common.hpp"
#include "ptzlm/datagen.hpp"
#include "ptzlm/gateway.hpp"
#include "ptzlm/instance.hpp"
#include "ptzlm/scene.hpp"
#include "ptzlm/simulator.hpp"

// Templated synthesis of (request, response) conversations. Feeds the shipped
// fixtures and stands in for a generator model in offline runs.

namespace ptzlm {

namespace detail {

inline std::string describe_object(const SceneObject& obj) {
  std::string out;
  for (const auto& a : obj.attributes) out += a + " ";
  std::string label = obj.label;
  for (auto& c : label)
    if (c == '_') c = ' ';
  return out + label;
}

struct Task {
  std::string request;
  CommandSequence commands;
};

inline Task make_task(int kind, const Scene& scene, Rng& rng) {
  const auto& objs = scene.objects();
  const auto& a = objs[rng.below(objs.size())];
  const auto& b = objs[rng.below(objs.size())];
  const auto n = rng.between(2, 12);
  static const double zoom_levels[] = {2.0, 3.5, 5.0, 8.0, 12.0};
  const double level = zoom_levels[rng.below(5)];
  switch (kind) {
    case 0:
      if (rng.below(2) == 0) return {"Pan right by " + std::to_string(n) + " frames.", {pan_right(n)}};
      return {"Pan left by " + std::to_string(n) + " frames.", {pan_left(n)}};
    case 1: return {"Zoom in on the " + describe_object(a) + ".", {zoom_to(a.id)}};
    case 2:
      return {"Center on the " + describe_object(a) + " and set the zoom to " + format_decimal(level) + "x.",
              {center(a.id), zoom(level)}};
    case 3:
      return {"Look at the " + describe_object(a) + " first, wait a moment, then move over to the " +
                  describe_object(b) + ".",
              {center(a.id), hold(3), center(b.id)}};
    case 4:
      if (rng.below(2) == 0)
        return {"Tilt up " + std::to_string(n) + " frames, then zoom to 2x.", {tilt_up(n), zoom(2.0)}};
      return {"Tilt down " + std::to_string(n) + " frames, then zoom to 2x.", {tilt_down(n), zoom(2.0)}};
    case 5:
      return {"Reset the camera, then pan right " + std::to_string(n) + " frames.", {home(), pan_right(n)}};
    case 6:
      return {"Sweep in from the left and finish zoomed in on the " + describe_object(a) + ".",
              {pan_left(6), hold(2), zoom_to(a.id)}};
    default:
      return {"Track from the " + describe_object(a) + " to the " + describe_object(b) + " and zoom to " +
                  format_decimal(level) + "x at the end.",
              {center(a.id), center(b.id), zoom(level)}};
  }
}

inline std::vector<int> kinds_for_style(const std::optional<std::string>& style) {
  if (style == "panning") return {0, 3, 5, 6};
  if (style == "zooming") return {1, 2, 4};
  if (style == "tracking") return {3, 6, 7};
  return {0, 1, 2, 3, 4, 5, 6, 7};
}

}  // namespace detail

/// True when the final command moves the view: some frame it emits differs
/// from the view held just before it. Dropping such a command always costs
/// frame-matching score.
inline bool final_command_moves(const Scene& scene, const CameraState& initial, const CommandSequence& commands) {
  if (commands.empty()) return false;
  const auto sim = simulate(scene, initial, commands);
  if (sim.spans.empty() || sim.spans.back().command != static_cast<std::int64_t>(commands.size())) return false;
  const auto& last = sim.spans.back();
  const AngularRect before = last.first_frame > 1 ? sim.frames[static_cast<std::size_t>(last.first_frame - 2)].viewport
                                                  : viewport_of(initial);
  for (auto i = last.first_frame; i <= last.last_frame; ++i)
    if (!(sim.frames[static_cast<std::size_t>(i - 1)].viewport == before)) return true;
  return false;
}

/// One valid conversation in `environment`. Responses always end with a
/// command that moves the view.
inline Instance synthesize_instance(const std::string& environment, std::string instance_id, InstanceSource source,
                                    std::optional<std::string> style, Rng& rng) {
  const auto kinds = detail::kinds_for_style(style);
  for (int attempt = 0;; ++attempt) {
    const int object_count = static_cast<int>(rng.between(3, 8));
    Scene scene = generate_scene(environment, rng.next() % 1000000007ULL, object_count);
    CameraState init{5.0 * static_cast<double>(rng.between(-12, 12)), 3.0 * static_cast<double>(rng.between(-4, 4)),
                     rng.below(4) == 0 ? 2.0 : 1.0};
    auto task = detail::make_task(kinds[rng.below(kinds.size())], scene, rng);
    if (!final_command_moves(scene, init, task.commands) && attempt < 64) continue;
    Instance in;
    in.instance_id = std::move(instance_id);
    in.source = source;
    in.environment = environment;
    in.scene = std::move(scene);
    in.initial_state = init;
    in.request = std::move(task.request);
    in.response = serialize(task.commands);
    in.style = std::move(style);
    return in;
  }
}

enum class Corruption { UnknownCommand, OutOfRange, AbsentObject };

/// Rewrites the response so it fails validation in exactly the given way.
inline void corrupt_response(Instance& in, Corruption kind, Rng& rng) {
  switch (kind) {
    case Corruption::UnknownCommand: {
      static const char* fakes[] = {"pan_all_right()", "scan(3)", "zoom_in(2.0)", "rotate(90)"};
      in.response += std::string("\n") + fakes[rng.below(4)];
      break;
    }
    case Corruption::OutOfRange: {
      static const char* bad[] = {"zoom(99.0)", "pan_right(100)", "tilt_up(0)", "zoom(0.5)"};
      in.response += std::string("\n") + bad[rng.below(4)];
      break;
    }
    case Corruption::AbsentObject: {
      std::string ghost = "ghost_" + std::to_string(90 + rng.below(10));
      while (in.scene.find(ghost)) ghost += "x";
      in.response += "\ncenter(" + ghost + ")";
      break;
    }
  }
}

/// Responder that plays a generator model: answers a generation prompt with a
/// JSON array of `Count` conversations, of which round(invalid_fraction * Count)
/// are corrupted. Output depends only on the prompt fingerprint.
inline std::function<std::optional<std::string>(const AssembledPrompt&)> synthetic_generator(double invalid_fraction) {
  return [invalid_fraction](const AssembledPrompt& prompt) -> std::optional<std::string> {
    auto field = [&](const std::string& key) -> std::optional<std::string> {
      const auto at = prompt.user_text.find(key + ": ");
      if (at == std::string::npos) return std::nullopt;
      const auto start = at + key.size() + 2;
      return prompt.user_text.substr(start, prompt.user_text.find('\n', start) - start);
    };
    const auto env = field("Environment");
    const auto style = field("Style");
    const auto count_text = field("Count");
    if (!env || !count_text || !find_environment(*env)) return std::nullopt;
    const auto count = static_cast<std::size_t>(std::stoul(*count_text));

    Rng rng(fnv1a64(prompt.fingerprint));
    const auto invalid = static_cast<std::size_t>(std::llround(invalid_fraction * static_cast<double>(count)));
    nlohmann::json arr = nlohmann::json::array();
    for (std::size_t k = 0; k < count; ++k) {
      auto in = synthesize_instance(*env, "g", InstanceSource::Generated, style, rng);
      if (k < invalid) corrupt_response(in, static_cast<Corruption>(k % 3), rng);
      arr.push_back(to_generation_element(in));
    }
    return "Here are the conversations:\n```json\n" + arr.dump(2) + "\n```\n";
  };
}

inline EndpointSpec synthetic_generator_endpoint(double invalid_fraction) {
  auto transcript = std::make_shared<Transcript>();
  transcript->responder = synthetic_generator(invalid_fraction);
  EndpointSpec spec;
  spec.kind = EndpointKind::Scripted;
  spec.model_name = "synthetic-generator";
  spec.temperature = 1.0;
  spec.transcript = std::move(transcript);
  return spec;
}

}  // namespace ptzlm
