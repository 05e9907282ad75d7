#pragma once

#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ptzlm/camera_state.hpp"
#include "ptzlm/error.hpp"
#include "ptzlm/parser.hpp"
#include "ptzlm/scene.hpp"

namespace ptzlm {

enum class InstanceSource { Seed, Generated, Expert };

constexpr std::string_view to_string(InstanceSource s) {
  switch (s) {
    case InstanceSource::Seed: return "seed";
    case InstanceSource::Generated: return "generated";
    case InstanceSource::Expert: return "expert";
  }
  return "generated";
}

inline std::optional<InstanceSource> source_from_string(std::string_view s) {
  if (s == "seed") return InstanceSource::Seed;
  if (s == "generated") return InstanceSource::Generated;
  if (s == "expert") return InstanceSource::Expert;
  return std::nullopt;
}

/// One (p, r) conversation: the request side plus its canonical command response.
struct Instance {
  std::string instance_id;
  InstanceSource source = InstanceSource::Generated;
  std::string environment;
  Scene scene;
  CameraState initial_state;
  std::string request;
  std::string response;
  std::optional<std::string> style;

  friend bool operator==(const Instance&, const Instance&) = default;
};

inline void to_json(nlohmann::json& j, const Instance& in) {
  j = nlohmann::json{{"instance_id", in.instance_id},
                     {"source", std::string(to_string(in.source))},
                     {"environment", in.environment},
                     {"scene", in.scene},
                     {"initial_state", in.initial_state},
                     {"request", in.request},
                     {"response", in.response}};
  if (in.style) j["style"] = *in.style;
}

/// Decodes and checks the schema; does not check that the response parses.
inline Instance instance_from_json(const nlohmann::json& j, const std::string& where = "instance") {
  auto fail = [&](const std::string& what) -> Error { return Error(ErrorCode::InvalidInstance, where + "." + what); };
  if (!j.is_object()) throw Error(ErrorCode::InvalidInstance, where + ": expected an object");
  auto str = [&](const char* key) {
    if (!j.contains(key) || !j[key].is_string()) throw fail(std::string(key) + ": missing or not a string");
    return j[key].get<std::string>();
  };
  Instance in;
  in.instance_id = str("instance_id");
  auto src = source_from_string(str("source"));
  if (!src) throw fail("source: must be one of seed, generated, expert");
  in.source = *src;
  in.environment = str("environment");
  in.request = str("request");
  in.response = str("response");
  if (j.contains("style") && !j["style"].is_null()) {
    if (!j["style"].is_string()) throw fail("style: expected a string");
    in.style = j["style"].get<std::string>();
  }
  if (!j.contains("scene")) throw fail("scene: missing");
  try {
    in.scene = scene_from_json(j["scene"], where + ".scene");
  } catch (const Error& e) {
    throw Error(ErrorCode::InvalidInstance, e.what());
  }
  if (!j.contains("initial_state") || !j["initial_state"].is_object()) throw fail("initial_state: missing");
  try {
    in.initial_state = j["initial_state"].get<CameraState>();
  } catch (const nlohmann::json::exception&) {
    throw fail("initial_state: expected {pan, tilt, zoom} numbers");
  }
  if (auto p = check_state(in.initial_state)) throw fail("initial_state: " + *p);
  if (in.request.empty()) throw fail("request: must be nonempty");
  return in;
}

/// Response must parse and validate against the instance's own scene.
inline ParseOutcome validate_instance(const Instance& in) { return parse_response(in.response, in.scene); }

inline std::string instance_line(const Instance& in) { return nlohmann::json(in).dump(); }

inline std::string dataset_text(const std::vector<Instance>& instances) {
  std::string out;
  for (const auto& in : instances) out += instance_line(in) + "\n";
  return out;
}

/// JSONL dataset reader. With `require_valid_responses`, every response must
/// parse against its scene (seed and expert sets).
inline std::vector<Instance> parse_dataset(std::string_view text, const std::string& name,
                                           bool require_valid_responses) {
  std::vector<Instance> out;
  std::size_t line_no = 0, start = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    start = end + 1;
    ++line_no;
    if (detail::trim(line).empty()) continue;
    const std::string where = name + ":" + std::to_string(line_no);
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw Error(ErrorCode::InvalidInstance, where + ": " + e.what());
    }
    Instance in = instance_from_json(j, where);
    if (require_valid_responses) {
      auto outcome = validate_instance(in);
      if (!outcome.accepted) {
        const auto& d = outcome.diagnostics.front();
        throw Error(ErrorCode::InvalidInstance,
                    where + ".response: " + std::string(to_string(d.kind)) + " (" + d.text + ")");
      }
    }
    out.push_back(std::move(in));
  }
  return out;
}

inline std::vector<Instance> load_dataset(const std::string& path, bool require_valid_responses = true) {
  std::string text;
  try {
    text = read_text_file(path);
  } catch (const Error& e) {
    throw Error(ErrorCode::UnreadableDataset, e.what());
  }
  return parse_dataset(text, path, require_valid_responses);
}

inline void save_dataset(const std::string& path, const std::vector<Instance>& instances) {
  write_text_file(path, dataset_text(instances));
}

}  // namespace ptzlm
