#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "ptzlm/common.hpp"

namespace ptzlm {

enum class CommandName { PanLeft, PanRight, TiltUp, TiltDown, Zoom, ZoomTo, Center, Hold, Home };

enum class ArgKind { Integer, Decimal, Identifier, None };

struct CommandSpec {
  CommandName name;
  std::string_view spelling;
  ArgKind arg;
};

inline constexpr std::array<CommandSpec, 9> kCommandTable{{
    {CommandName::PanLeft, "pan_left", ArgKind::Integer},
    {CommandName::PanRight, "pan_right", ArgKind::Integer},
    {CommandName::TiltUp, "tilt_up", ArgKind::Integer},
    {CommandName::TiltDown, "tilt_down", ArgKind::Integer},
    {CommandName::Zoom, "zoom", ArgKind::Decimal},
    {CommandName::ZoomTo, "zoom_to", ArgKind::Identifier},
    {CommandName::Center, "center", ArgKind::Identifier},
    {CommandName::Hold, "hold", ArgKind::Integer},
    {CommandName::Home, "home", ArgKind::None},
}};

inline constexpr std::int64_t kMinSteps = 1;
inline constexpr std::int64_t kMaxSteps = 72;

inline const CommandSpec& spec_of(CommandName name) { return kCommandTable[static_cast<std::size_t>(name)]; }

inline std::optional<CommandName> command_from_spelling(std::string_view word) {
  for (const auto& s : kCommandTable)
    if (s.spelling == word) return s.name;
  return std::nullopt;
}

using CommandArg = std::variant<std::int64_t, double, std::string>;

struct Command {
  CommandName name = CommandName::Home;
  std::vector<CommandArg> args;

  friend bool operator==(const Command&, const Command&) = default;

  std::int64_t steps() const { return std::get<std::int64_t>(args.at(0)); }
  double value() const { return std::get<double>(args.at(0)); }
  const std::string& target() const { return std::get<std::string>(args.at(0)); }
};

using CommandSequence = std::vector<Command>;

inline Command pan_left(std::int64_t n) { return {CommandName::PanLeft, {n}}; }
inline Command pan_right(std::int64_t n) { return {CommandName::PanRight, {n}}; }
inline Command tilt_up(std::int64_t n) { return {CommandName::TiltUp, {n}}; }
inline Command tilt_down(std::int64_t n) { return {CommandName::TiltDown, {n}}; }
inline Command zoom(double v) { return {CommandName::Zoom, {v}}; }
inline Command zoom_to(std::string id) { return {CommandName::ZoomTo, {std::move(id)}}; }
inline Command center(std::string id) { return {CommandName::Center, {std::move(id)}}; }
inline Command hold(std::int64_t n) { return {CommandName::Hold, {n}}; }
inline Command home() { return {CommandName::Home, {}}; }

inline std::string to_string(const Command& c) {
  std::string out(spec_of(c.name).spelling);
  out += '(';
  for (std::size_t i = 0; i < c.args.size(); ++i) {
    if (i > 0) out += ", ";
    std::visit(
        [&out](const auto& v) {
          using T = std::decay_t<decltype(v)>;
          if constexpr (std::is_same_v<T, std::int64_t>)
            out += std::to_string(v);
          else if constexpr (std::is_same_v<T, double>)
            out += format_decimal(v);
          else
            out += v;
        },
        c.args[i]);
  }
  out += ')';
  return out;
}

/// Canonical text: one command per line, no trailing newline.
inline std::string serialize(const CommandSequence& commands) {
  std::string out;
  for (std::size_t i = 0; i < commands.size(); ++i) {
    if (i > 0) out += '\n';
    out += to_string(commands[i]);
  }
  return out;
}

struct CommandDoc {
  std::string name;
  std::string signature;
  std::string description;
  std::string param_ranges;
};

/// Camera API reference, in command-table order. Rendered verbatim into prompts.
inline const std::vector<CommandDoc>& api_docs() {
  static const std::vector<CommandDoc> docs{
      {"pan_left", "pan_left(n)", "Rotate the camera left by n frames, 5 degrees per frame.",
       "n: integer, 1 to 72"},
      {"pan_right", "pan_right(n)", "Rotate the camera right by n frames, 5 degrees per frame.",
       "n: integer, 1 to 72"},
      {"tilt_up", "tilt_up(n)", "Tilt the camera up by n frames, 3 degrees per frame.", "n: integer, 1 to 72"},
      {"tilt_down", "tilt_down(n)", "Tilt the camera down by n frames, 3 degrees per frame.",
       "n: integer, 1 to 72"},
      {"zoom", "zoom(value)", "Set the absolute zoom level. 1.0 is the widest view.",
       "value: decimal, minimum 1.0, maximum 25.0"},
      {"zoom_to", "zoom_to(object_id)",
       "Center on an observed object, then zoom so it fills most of the frame.",
       "object_id: id of an object listed in the observations"},
      {"center", "center(object_id)", "Move the camera so an observed object is centered. Zoom is unchanged.",
       "object_id: id of an object listed in the observations"},
      {"hold", "hold(n)", "Keep the camera still for n frames.", "n: integer, 1 to 72"},
      {"home", "home()", "Return to pan 0, tilt 0, zoom 1.0.", "no parameters"},
  };
  return docs;
}

}  // namespace ptzlm
