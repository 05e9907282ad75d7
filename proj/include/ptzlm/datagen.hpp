#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ptzlm/common.hpp"
#include "ptzlm/error.hpp"
#include "ptzlm/gateway.hpp"
#include "ptzlm/instance.hpp"
#include "ptzlm/parser.hpp"
#include "ptzlm/prompt.hpp"

namespace ptzlm {

inline constexpr std::size_t kExamplesPerSource = 4;
inline constexpr std::size_t kDefaultBatchSize = 10;

inline const std::vector<std::string>& generation_styles() {
  static const std::vector<std::string> styles{"panning", "unique", "creative", "zooming", "tracking"};
  return styles;
}

struct GenBatchSpec {
  std::string environment;
  std::string style;
  std::size_t batch_size = kDefaultBatchSize;
  std::vector<Instance> seed_examples;       // drawn from the seed store
  std::vector<Instance> generated_examples;  // drawn from the pool, backfilled from seeds
  std::size_t backfilled = 0;                // how many generated_examples came from seeds
};

struct FilterStats {
  std::int64_t total = 0;
  std::int64_t kept = 0;
  std::map<std::string, std::int64_t> rejected_by_kind;
  double reject_rate = 0.0;

  std::int64_t rejected() const {
    std::int64_t sum = 0;
    for (const auto& [kind, n] : rejected_by_kind) sum += n;
    return sum;
  }

  void reject(const std::string& kind, std::int64_t n = 1) {
    rejected_by_kind[kind] += n;
    total += n;
    refresh();
  }

  void keep(std::int64_t n = 1) {
    kept += n;
    total += n;
    refresh();
  }

  void merge(const FilterStats& other) {
    total += other.total;
    kept += other.kept;
    for (const auto& [kind, n] : other.rejected_by_kind) rejected_by_kind[kind] += n;
    refresh();
  }

  void refresh() { reject_rate = total == 0 ? 0.0 : 1.0 - static_cast<double>(kept) / static_cast<double>(total); }

  friend bool operator==(const FilterStats&, const FilterStats&) = default;
};

inline void to_json(nlohmann::json& j, const FilterStats& s) {
  j = nlohmann::json{{"total", s.total}, {"kept", s.kept}, {"rejected_by_kind", s.rejected_by_kind}, {"reject_rate", s.reject_rate}};
}

inline void from_json(const nlohmann::json& j, FilterStats& s) {
  j.at("total").get_to(s.total);
  j.at("kept").get_to(s.kept);
  j.at("rejected_by_kind").get_to(s.rejected_by_kind);
  s.refresh();
}

/// Wire shape of one generated conversation.
inline nlohmann::json to_generation_element(const Instance& in) {
  return nlohmann::json{{"environment", in.environment},
                        {"objects", in.scene.objects()},
                        {"state", in.initial_state},
                        {"request", in.request},
                        {"response", in.response}};
}

namespace detail {

inline std::vector<std::size_t> pick_distinct(std::size_t pool_size, std::size_t count, Rng& rng,
                                              const std::vector<std::size_t>& exclude = {}) {
  std::vector<std::size_t> candidates;
  for (std::size_t i = 0; i < pool_size; ++i)
    if (std::find(exclude.begin(), exclude.end(), i) == exclude.end()) candidates.push_back(i);
  std::vector<std::size_t> out;
  // Partial Fisher-Yates; falls back to repeats only if the pool is too small.
  for (std::size_t k = 0; k < count; ++k) {
    if (k < candidates.size()) {
      const std::size_t r = k + rng.below(candidates.size() - k);
      std::swap(candidates[k], candidates[r]);
      out.push_back(candidates[k]);
    } else {
      out.push_back(rng.below(pool_size));
    }
  }
  return out;
}

}  // namespace detail

/// Chooses 4 seed examples and 4 pool examples; while the pool holds fewer
/// than 4, the remainder is backfilled with further seeds.
inline GenBatchSpec sample_batch_spec(const std::vector<Instance>& seeds, const std::vector<Instance>& pool,
                                      std::string environment, std::string style, std::size_t batch_size, Rng& rng) {
  if (seeds.size() < kExamplesPerSource)
    throw Error(ErrorCode::InsufficientSeeds,
                "seed store holds " + std::to_string(seeds.size()) + ", need at least " + std::to_string(kExamplesPerSource));
  GenBatchSpec spec;
  spec.environment = std::move(environment);
  spec.style = std::move(style);
  spec.batch_size = batch_size;

  const auto seed_idx = detail::pick_distinct(seeds.size(), kExamplesPerSource, rng);
  for (auto i : seed_idx) spec.seed_examples.push_back(seeds[i]);

  const std::size_t from_pool = std::min(pool.size(), kExamplesPerSource);
  for (auto i : detail::pick_distinct(pool.size(), from_pool, rng)) spec.generated_examples.push_back(pool[i]);
  spec.backfilled = kExamplesPerSource - from_pool;
  if (spec.backfilled > 0)
    for (auto i : detail::pick_distinct(seeds.size(), spec.backfilled, rng, seed_idx))
      spec.generated_examples.push_back(seeds[i]);
  return spec;
}

inline AssembledPrompt build_generation_prompt(const GenBatchSpec& spec) {
  const std::size_t n_examples = spec.seed_examples.size() + spec.generated_examples.size();
  if (spec.seed_examples.size() < kExamplesPerSource)
    throw Error(ErrorCode::InsufficientSeeds, "generation prompt needs " + std::to_string(kExamplesPerSource) + " seed examples");

  std::string system_text =
      "You write training conversations for an assistant that controls a pan-tilt-zoom camera. Each conversation "
      "has a scene (objects with angular extents in degrees), a camera state, a user request, and a response "
      "made only of Camera API calls, one per line.\n\n" +
      render_api_docs();

  const std::string count = std::to_string(spec.batch_size);
  std::string user_text = "Environment: " + spec.environment + "\nStyle: " + spec.style + "\nCount: " + count + "\n\n";
  user_text += "## Examples\n";
  std::size_t ordinal = 0;
  for (const auto& ex : spec.seed_examples)
    user_text += "### Example " + std::to_string(++ordinal) + " (p, r), curated\n" + to_generation_element(ex).dump() + "\n";
  for (const auto& ex : spec.generated_examples)
    user_text += "### Example " + std::to_string(++ordinal) + " (p, r), generated\n" + to_generation_element(ex).dump() + "\n";
  user_text += "\n## Task\nWrite exactly " + count + " new \"" + spec.style + "\" conversations set in a \"" +
               spec.environment +
               "\" environment. Return them as one JSON array of objects with the fields environment, objects, "
               "state, request, response. Every object needs id, label, attributes and an extent {pan_min, pan_max, "
               "tilt_min, tilt_max}. The response may only call Camera API commands on ids listed in objects.";
  return make_prompt(std::move(system_text), std::move(user_text), n_examples);
}

struct DiscardRecord {
  std::size_t element = 0;
  std::string kind;  // MissingField or InvalidField
  std::string reason;
};

struct GenerationParse {
  std::vector<Instance> candidates;
  std::vector<DiscardRecord> discards;
};

namespace detail {

/// Byte range of the first balanced top-level JSON array that parses.
inline std::optional<nlohmann::json> first_json_array(std::string_view text) {
  for (std::size_t open = text.find('['); open != std::string_view::npos; open = text.find('[', open + 1)) {
    int depth = 0;
    bool in_string = false, escaped = false;
    for (std::size_t i = open; i < text.size(); ++i) {
      const char c = text[i];
      if (in_string) {
        if (escaped)
          escaped = false;
        else if (c == '\\')
          escaped = true;
        else if (c == '"')
          in_string = false;
        continue;
      }
      if (c == '"') in_string = true;
      else if (c == '[' || c == '{') ++depth;
      else if (c == ']' || c == '}') {
        if (--depth == 0) {
          auto parsed = nlohmann::json::parse(text.substr(open, i - open + 1), nullptr, false);
          if (!parsed.is_discarded() && parsed.is_array()) return parsed;
          break;
        }
      }
    }
  }
  return std::nullopt;
}

}  // namespace detail

/// Recovers candidate instances from raw generator output. Throws NoArrayFound
/// when no JSON array is present.
inline GenerationParse parse_generation_output(std::string_view raw, const std::string& id_prefix = "candidate") {
  auto array = detail::first_json_array(raw);
  if (!array) throw Error(ErrorCode::NoArrayFound, "generator output holds no JSON array");

  GenerationParse out;
  for (std::size_t k = 0; k < array->size(); ++k) {
    const auto& el = (*array)[k];
    const std::string id = id_prefix + "-" + std::to_string(k + 1);
    if (!el.is_object()) {
      out.discards.push_back({k, "InvalidField", "element is not an object"});
      continue;
    }
    std::string missing;
    for (const char* key : {"environment", "objects", "state", "request", "response"})
      if (!el.contains(key)) {
        missing = key;
        break;
      }
    if (!missing.empty()) {
      out.discards.push_back({k, "MissingField", "missing \"" + missing + "\""});
      continue;
    }
    try {
      if (!el["environment"].is_string() || !el["request"].is_string() || !el["response"].is_string())
        throw Error(ErrorCode::InvalidInstance, "environment, request and response must be strings");
      Instance in;
      in.instance_id = id;
      in.source = InstanceSource::Generated;
      in.environment = el["environment"].get<std::string>();
      in.request = el["request"].get<std::string>();
      in.response = el["response"].get<std::string>();
      if (detail::trim(in.request).empty()) throw Error(ErrorCode::InvalidInstance, "request is empty");
      nlohmann::json scene_doc{{"scene_id", id}, {"environment", in.environment}, {"objects", el["objects"]}};
      in.scene = scene_from_json(scene_doc, "objects");
      if (!el["state"].is_object()) throw Error(ErrorCode::InvalidInstance, "state must be an object");
      in.initial_state = el["state"].get<CameraState>();
      if (auto p = check_state(in.initial_state)) throw Error(ErrorCode::InvalidInstance, "state: " + *p);
      out.candidates.push_back(std::move(in));
    } catch (const Error& e) {
      out.discards.push_back({k, "InvalidField", e.what()});
    } catch (const nlohmann::json::exception& e) {
      out.discards.push_back({k, "InvalidField", e.what()});
    }
  }
  return out;
}

struct FilterResult {
  std::vector<Instance> kept;
  FilterStats stats;
};

/// Keeps candidates whose response is accepted against their own scene.
/// Kept responses are rewritten in canonical form. Rejections are tallied by
/// the first diagnostic kind.
inline FilterResult filter_instances(const std::vector<Instance>& candidates) {
  FilterResult out;
  for (const auto& c : candidates) {
    auto outcome = parse_response(c.response, c.scene);
    if (outcome.accepted) {
      Instance kept = c;
      kept.response = serialize(outcome.commands);
      out.kept.push_back(std::move(kept));
      out.stats.keep();
    } else {
      out.stats.reject(std::string(to_string(outcome.diagnostics.front().kind)));
    }
  }
  return out;
}

struct GenerationOptions {
  std::size_t target_count = 1000;
  std::map<std::string, double> env_mix;    // empty: uniform over the catalog
  std::map<std::string, double> style_mix;  // empty: uniform over the styles
  std::uint64_t seed = 0;
  std::size_t batch_size = kDefaultBatchSize;
  std::string checkpoint_path;               // empty disables checkpointing
  std::size_t stop_after_batches = 0;        // 0: run to completion
  std::size_t max_batches = 0;               // 0: derived from the target
  std::function<void(std::size_t batch, const GenBatchSpec&, const AssembledPrompt&)> on_batch;
};

struct GenerationResult {
  std::vector<Instance> dataset;
  FilterStats stats;
  std::size_t batches = 0;
  bool completed = false;
};

namespace detail {

inline std::string weighted_pick(const std::map<std::string, double>& mix, const std::vector<std::string>& fallback,
                                 Rng& rng) {
  if (mix.empty()) return fallback[rng.below(fallback.size())];
  double total = 0.0;
  for (const auto& [k, w] : mix) total += std::max(0.0, w);
  if (!(total > 0.0)) return mix.begin()->first;
  double r = rng.uniform() * total;
  for (const auto& [k, w] : mix) {
    r -= std::max(0.0, w);
    if (r < 0.0) return k;
  }
  return std::prev(mix.end())->first;
}

inline std::string pool_digest(const std::vector<Instance>& pool) { return to_hex(fnv1a64(dataset_text(pool))); }

struct Checkpoint {
  std::uint64_t seed = 0;
  std::size_t batch_cursor = 0;
  FilterStats stats;
  std::vector<Instance> pool;
};

inline void write_checkpoint(const std::string& path, const Checkpoint& cp) {
  nlohmann::json pool = nlohmann::json::array();
  for (const auto& in : cp.pool) pool.push_back(in);
  nlohmann::json j{{"version", 1},
                   {"seed", cp.seed},
                   {"batch_cursor", cp.batch_cursor},
                   {"pool_digest", pool_digest(cp.pool)},
                   {"stats", cp.stats},
                   {"pool", pool}};
  const std::string tmp = path + ".tmp";
  write_text_file(tmp, j.dump() + "\n");
  std::filesystem::rename(tmp, path);
}

inline std::optional<Checkpoint> read_checkpoint(const std::string& path) {
  if (path.empty() || !std::filesystem::exists(path)) return std::nullopt;
  try {
    auto j = nlohmann::json::parse(read_text_file(path));
    Checkpoint cp;
    cp.seed = j.at("seed").get<std::uint64_t>();
    cp.batch_cursor = j.at("batch_cursor").get<std::size_t>();
    cp.stats = j.at("stats").get<FilterStats>();
    for (const auto& el : j.at("pool")) cp.pool.push_back(instance_from_json(el, path + ".pool"));
    if (pool_digest(cp.pool) != j.at("pool_digest").get<std::string>())
      throw Error(ErrorCode::InvalidCheckpoint, path + ": pool digest mismatch");
    return cp;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidCheckpoint, path + ": " + e.what());
  }
}

}  // namespace detail

/// Self-instruct loop: sample a batch spec, prompt the generator, parse, filter,
/// and grow the generated pool until `target_count` instances are kept.
/// Batch k's environment, style and example choice depend only on the seed, k,
/// and the pool, so a resumed run reproduces an uninterrupted one.
inline GenerationResult run_generation(Gateway& gateway, const std::vector<Instance>& seeds,
                                       const GenerationOptions& opts) {
  if (opts.target_count < 1) throw Error(ErrorCode::InvalidTarget, "target_count must be >= 1");
  if (opts.batch_size < 1) throw Error(ErrorCode::InvalidTarget, "batch_size must be >= 1");
  if (seeds.size() < kExamplesPerSource)
    throw Error(ErrorCode::InsufficientSeeds, "seed store holds " + std::to_string(seeds.size()));
  for (const auto& [env, w] : opts.env_mix)
    if (!find_environment(env)) throw Error(ErrorCode::UnknownEnvironment, "'" + env + "' in env_mix");

  std::vector<std::string> envs;
  for (const auto& e : environment_catalog()) envs.push_back(e.environment);

  detail::Checkpoint state;
  state.seed = opts.seed;
  if (auto cp = detail::read_checkpoint(opts.checkpoint_path)) {
    if (cp->seed != opts.seed) throw Error(ErrorCode::InvalidCheckpoint, "checkpoint was written with another seed");
    state = std::move(*cp);
  }

  const std::size_t max_batches =
      opts.max_batches > 0 ? opts.max_batches : 10 * (opts.target_count / opts.batch_size + 1) + 10;
  std::size_t run_this_call = 0;
  while (state.pool.size() < opts.target_count && state.batch_cursor < max_batches) {
    if (opts.stop_after_batches > 0 && run_this_call >= opts.stop_after_batches) break;
    const std::size_t batch = state.batch_cursor;
    Rng rng(opts.seed ^ splitmix64(batch + 1));
    std::string env = detail::weighted_pick(opts.env_mix, envs, rng);
    std::string style = detail::weighted_pick(opts.style_mix, generation_styles(), rng);
    const auto spec = sample_batch_spec(seeds, state.pool, std::move(env), std::move(style), opts.batch_size, rng);
    const auto prompt = build_generation_prompt(spec);
    if (opts.on_batch) opts.on_batch(batch, spec, prompt);

    const auto exchange = gateway.complete(prompt);
    char prefix[32];
    std::snprintf(prefix, sizeof(prefix), "gen-%05zu", batch);
    try {
      auto parsed = parse_generation_output(exchange.response_text, prefix);
      for (const auto& d : parsed.discards) state.stats.reject(d.kind);
      for (auto& c : parsed.candidates) c.style = spec.style;
      auto filtered = filter_instances(parsed.candidates);
      state.stats.merge(filtered.stats);
      for (auto& in : filtered.kept) state.pool.push_back(std::move(in));
    } catch (const Error& e) {
      if (e.code() != ErrorCode::NoArrayFound) throw;
      state.stats.reject("NoArrayFound", static_cast<std::int64_t>(opts.batch_size));
    }
    ++state.batch_cursor;
    ++run_this_call;
    if (!opts.checkpoint_path.empty()) detail::write_checkpoint(opts.checkpoint_path, state);
  }

  GenerationResult result;
  result.completed = state.pool.size() >= opts.target_count;
  result.batches = state.batch_cursor;
  result.stats = state.stats;
  result.dataset = std::move(state.pool);
  return result;
}

}  // namespace ptzlm
