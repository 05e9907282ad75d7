#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ptzlm/camera_state.hpp"
#include "ptzlm/command.hpp"
#include "ptzlm/common.hpp"
#include "ptzlm/error.hpp"
#include "ptzlm/instance.hpp"
#include "ptzlm/scene.hpp"

namespace ptzlm {

inline constexpr std::size_t kDefaultMultiShot = 4;

inline const std::string& default_preamble() {
  static const std::string text =
      "You control a pan-tilt-zoom (PTZ) camera. You are an assistant that turns a user's request into an "
      "ordered list of camera API calls. Reply only with calls from the Camera API below, one per line, using "
      "object ids exactly as they appear in the observations. Do not invent commands or objects.";
  return text;
}

struct PromptConfig {
  std::size_t shots = 0;
  std::vector<Instance> example_pool;
  bool include_state = true;
  std::string system_preamble = default_preamble();
};

struct AssembledPrompt {
  std::string system_text;
  std::string user_text;
  std::size_t example_count = 0;
  std::string fingerprint;

  friend bool operator==(const AssembledPrompt&, const AssembledPrompt&) = default;
};

inline std::string prompt_fingerprint(const std::string& system_text, const std::string& user_text) {
  std::uint64_t h = fnv1a64(system_text);
  h = fnv1a64(std::string_view("\x1f", 1), h);
  h = fnv1a64(user_text, h);
  return to_hex(h);
}

inline AssembledPrompt make_prompt(std::string system_text, std::string user_text, std::size_t example_count) {
  AssembledPrompt p;
  p.fingerprint = prompt_fingerprint(system_text, user_text);
  p.system_text = std::move(system_text);
  p.user_text = std::move(user_text);
  p.example_count = example_count;
  return p;
}

inline std::string render_api_docs() {
  std::string out = "## Camera API\n";
  for (const auto& doc : api_docs())
    out += "- " + doc.signature + ": " + doc.description + " Parameters: " + doc.param_ranges + "\n";
  return out;
}

/// The p side of a conversation: state, observations, request.
inline std::string render_request_block(const Scene& scene, const CameraState& state, const std::string& request,
                                        bool include_state) {
  std::string out;
  if (include_state) out += "## State\n" + state_line(state) + "\n\n";
  out += "## Observations\n" + describe_observations(scene, state) + "\n\n";
  out += "Request: " + request;
  return out;
}

inline std::string render_example(std::size_t ordinal, const Instance& ex, bool include_state) {
  std::string out = "### Example " + std::to_string(ordinal) + " (p, r)\n";
  out += "User:\n" + render_request_block(ex.scene, ex.initial_state, ex.request, include_state) + "\n";
  out += "Assistant:\n" + ex.response + "\n";
  return out;
}

/// Sections in fixed order: description, API, examples, state, observations, request.
inline AssembledPrompt build_prompt(const Scene& scene, const CameraState& state, const std::string& request,
                                    const PromptConfig& config) {
  if (detail::trim(request).empty()) throw Error(ErrorCode::EmptyRequest, "request text is empty");
  if (config.shots > config.example_pool.size())
    throw Error(ErrorCode::ShotCountExceedsPool, std::to_string(config.shots) + " shots but pool holds " +
                                                     std::to_string(config.example_pool.size()));

  std::string system_text = config.system_preamble + "\n\n" + render_api_docs();

  std::string user_text;
  if (config.shots > 0) {
    user_text += "## Examples\n";
    for (std::size_t i = 0; i < config.shots; ++i)
      user_text += render_example(i + 1, config.example_pool[i], config.include_state) + "\n";
  }
  user_text += render_request_block(scene, state, request, config.include_state);
  return make_prompt(std::move(system_text), std::move(user_text), config.shots);
}

inline AssembledPrompt build_prompt(const Instance& in, const PromptConfig& config) {
  return build_prompt(in.scene, in.initial_state, in.request, config);
}

inline void to_json(nlohmann::json& j, const AssembledPrompt& p) {
  j = nlohmann::json{{"system_text", p.system_text},
                     {"user_text", p.user_text},
                     {"example_count", p.example_count},
                     {"fingerprint", p.fingerprint}};
}

}  // namespace ptzlm
