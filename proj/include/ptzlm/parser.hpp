#pragma once

#include <charconv>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "ptzlm/camera_state.hpp"
#include "ptzlm/command.hpp"
#include "ptzlm/scene.hpp"

namespace ptzlm {

enum class DiagnosticKind { UnknownCommand, BadArity, OutOfRange, UnknownObject, MalformedArgument, NoCommandsFound };

constexpr std::string_view to_string(DiagnosticKind k) {
  switch (k) {
    case DiagnosticKind::UnknownCommand: return "UnknownCommand";
    case DiagnosticKind::BadArity: return "BadArity";
    case DiagnosticKind::OutOfRange: return "OutOfRange";
    case DiagnosticKind::UnknownObject: return "UnknownObject";
    case DiagnosticKind::MalformedArgument: return "MalformedArgument";
    case DiagnosticKind::NoCommandsFound: return "NoCommandsFound";
  }
  return "Unknown";
}

struct Diagnostic {
  std::size_t position = 0;  // byte offset into the raw text
  DiagnosticKind kind = DiagnosticKind::NoCommandsFound;
  std::string text;

  friend bool operator==(const Diagnostic&, const Diagnostic&) = default;
};

struct ParseOutcome {
  CommandSequence commands;
  std::vector<Diagnostic> diagnostics;
  bool accepted = false;
};

namespace detail {

inline bool is_ident_start(char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_'; }
inline bool is_ident_char(char c) { return is_ident_start(c) || (c >= '0' && c <= '9'); }
inline bool is_digit(char c) { return c >= '0' && c <= '9'; }
inline bool is_space(char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\n' || c == '\f' || c == '\v'; }

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

inline bool is_identifier(std::string_view s) {
  if (s.empty() || !is_ident_start(s[0])) return false;
  for (char c : s)
    if (!is_ident_char(c)) return false;
  return true;
}

inline bool is_integer_literal(std::string_view s) {
  if (!s.empty() && (s[0] == '+' || s[0] == '-')) s.remove_prefix(1);
  if (s.empty()) return false;
  for (char c : s)
    if (!is_digit(c)) return false;
  return true;
}

/// digits[.digits][(e|E)[+-]digits] with an optional sign, or .digits
inline bool is_decimal_literal(std::string_view s) {
  std::size_t i = 0;
  if (i < s.size() && (s[i] == '+' || s[i] == '-')) ++i;
  std::size_t int_digits = 0, frac_digits = 0;
  while (i < s.size() && is_digit(s[i])) ++i, ++int_digits;
  if (i < s.size() && s[i] == '.') {
    ++i;
    while (i < s.size() && is_digit(s[i])) ++i, ++frac_digits;
  }
  if (int_digits + frac_digits == 0) return false;
  if (i < s.size() && (s[i] == 'e' || s[i] == 'E')) {
    ++i;
    if (i < s.size() && (s[i] == '+' || s[i] == '-')) ++i;
    std::size_t exp_digits = 0;
    while (i < s.size() && is_digit(s[i])) ++i, ++exp_digits;
    if (exp_digits == 0) return false;
  }
  return i == s.size();
}

inline std::string_view unquote(std::string_view s) {
  if (s.size() >= 2 && (s.front() == '"' || s.front() == '\'') && s.back() == s.front())
    return s.substr(1, s.size() - 2);
  return s;
}

/// Argument list looks like code rather than prose: empty, or every
/// comma-separated piece is a literal or identifier.
inline bool looks_like_call_args(std::string_view inner) {
  inner = trim(inner);
  if (inner.empty()) return true;
  std::size_t start = 0;
  while (start <= inner.size()) {
    std::size_t comma = inner.find(',', start);
    std::string_view piece = trim(unquote(trim(inner.substr(start, comma == std::string_view::npos ? inner.npos : comma - start))));
    if (!(is_identifier(piece) || is_decimal_literal(piece))) return false;
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return true;
}

inline std::vector<std::string_view> split_args(std::string_view inner) {
  std::vector<std::string_view> out;
  inner = trim(inner);
  if (inner.empty()) return out;
  std::size_t start = 0;
  while (true) {
    std::size_t comma = inner.find(',', start);
    out.push_back(trim(inner.substr(start, comma == std::string_view::npos ? inner.npos : comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

}  // namespace detail

/// Validates one call `name(args)` found at `pos`. Appends to `out` or `diags`.
inline void validate_call(CommandName name, std::string_view inner, std::size_t pos, const Scene& scene,
                          CommandSequence& out, std::vector<Diagnostic>& diags) {
  using namespace detail;
  const auto& spec = spec_of(name);
  const std::string call = std::string(spec.spelling) + "(" + std::string(inner) + ")";
  const auto args = split_args(inner);
  const std::size_t want = spec.arg == ArgKind::None ? 0 : 1;
  if (args.size() != want) {
    diags.push_back({pos, DiagnosticKind::BadArity,
                     call + ": expected " + std::to_string(want) + " argument(s), got " + std::to_string(args.size())});
    return;
  }
  if (want == 0) {
    out.push_back({name, {}});
    return;
  }

  const std::string_view arg = args[0];
  switch (spec.arg) {
    case ArgKind::Integer: {
      if (!is_integer_literal(arg)) {
        diags.push_back({pos, DiagnosticKind::MalformedArgument, call + ": expected an integer frame count"});
        return;
      }
      std::int64_t n = 0;
      std::string_view digits = arg[0] == '+' ? arg.substr(1) : arg;
      auto [p, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), n);
      if (ec != std::errc{} || p != digits.data() + digits.size() || n < kMinSteps || n > kMaxSteps) {
        diags.push_back({pos, DiagnosticKind::OutOfRange, call + ": frame count must be in [1, 72]"});
        return;
      }
      out.push_back({name, {n}});
      return;
    }
    case ArgKind::Decimal: {
      if (!is_decimal_literal(arg)) {
        diags.push_back({pos, DiagnosticKind::MalformedArgument, call + ": expected a decimal zoom value"});
        return;
      }
      double v = 0.0;
      std::string_view digits = arg[0] == '+' ? arg.substr(1) : arg;
      auto [p, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), v);
      if (ec != std::errc{} || p != digits.data() + digits.size() || !(v >= kMinZoom && v <= kMaxZoom)) {
        diags.push_back({pos, DiagnosticKind::OutOfRange, call + ": zoom must be in [1.0, 25.0]"});
        return;
      }
      out.push_back({name, {v}});
      return;
    }
    case ArgKind::Identifier: {
      const std::string_view id = unquote(arg);
      if (!is_identifier(id)) {
        diags.push_back({pos, DiagnosticKind::MalformedArgument, call + ": expected an object id"});
        return;
      }
      if (scene.find(id) == nullptr) {
        diags.push_back({pos, DiagnosticKind::UnknownObject, call + ": no object '" + std::string(id) + "' in scene"});
        return;
      }
      out.push_back({name, {std::string(id)}});
      return;
    }
    case ArgKind::None: break;
  }
}

/// Extracts every `name(args)` call from free-form model text, in order of
/// appearance, and validates it against the command table and the scene.
/// Total: never throws on any input.
inline ParseOutcome parse_response(std::string_view raw, const Scene& scene) {
  using namespace detail;
  ParseOutcome outcome;
  std::size_t candidates = 0;
  std::size_t i = 0;
  const std::size_t n = raw.size();
  while (i < n) {
    if (!is_ident_start(raw[i]) || (i > 0 && is_ident_char(raw[i - 1]))) {
      ++i;
      continue;
    }
    const std::size_t word_start = i;
    while (i < n && is_ident_char(raw[i])) ++i;
    const std::string_view word = raw.substr(word_start, i - word_start);
    const auto known = command_from_spelling(word);

    std::size_t j = i;
    if (known) {
      while (j < n && (raw[j] == ' ' || raw[j] == '\t')) ++j;
    }
    if (j >= n || raw[j] != '(') continue;

    // Argument text runs to the closing paren on the same line.
    std::size_t close = j + 1;
    bool nested = false;
    while (close < n && raw[close] != ')' && raw[close] != '\n') {
      if (raw[close] == '(') nested = true;
      ++close;
    }
    const bool closed = close < n && raw[close] == ')';

    if (!known) {
      // Unknown identifiers count only when they look like a call, so prose
      // parentheticals such as "note (see above)" are not flagged.
      if (closed && !nested && looks_like_call_args(raw.substr(j + 1, close - j - 1))) {
        ++candidates;
        outcome.diagnostics.push_back({word_start, DiagnosticKind::UnknownCommand,
                                       "unknown command '" + std::string(word) + "'"});
        i = close + 1;
      }
      continue;
    }

    // "zoom (slowly)" with a gap before the paren is prose, not a call.
    if (j > i && !(closed && !nested && looks_like_call_args(raw.substr(j + 1, close - j - 1)))) continue;

    ++candidates;
    if (!closed || nested) {
      outcome.diagnostics.push_back(
          {word_start, DiagnosticKind::MalformedArgument, std::string(word) + ": unterminated or nested argument list"});
      i = j + 1;
      continue;
    }
    validate_call(*known, raw.substr(j + 1, close - j - 1), word_start, scene, outcome.commands, outcome.diagnostics);
    i = close + 1;
  }

  if (candidates == 0)
    outcome.diagnostics.push_back({0, DiagnosticKind::NoCommandsFound, "no API commands found in response"});
  outcome.accepted = !outcome.commands.empty() && outcome.diagnostics.empty();
  return outcome;
}

inline void to_json(nlohmann::json& j, const Diagnostic& d) {
  j = nlohmann::json{{"position", d.position}, {"kind", std::string(to_string(d.kind))}, {"text", d.text}};
}

}  // namespace ptzlm
