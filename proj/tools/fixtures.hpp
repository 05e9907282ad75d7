#pragma once

// Builders for the shipped fixtures under data/. Output is a pure function of
// the fixed seeds below, so rerunning reproduces the files byte for byte.

#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ptzlm/ptzlm.hpp"

namespace ptzlm::fixtures {

inline constexpr std::uint64_t kSeedStoreSeed = 20240101;
inline constexpr std::uint64_t kExpertSeed = 20240202;
inline constexpr std::uint64_t kCorpusSeed = 20240303;

inline std::string id(const char* prefix, std::size_t i, const char* suffix = "") {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%s-%04zu%s", prefix, i, suffix);
  return buf;
}

inline std::vector<Instance> seed_store() {
  Rng rng(kSeedStoreSeed);
  const auto& envs = environment_catalog();
  const auto& styles = generation_styles();
  std::vector<Instance> out;
  for (std::size_t i = 0; i < 200; ++i)
    out.push_back(synthesize_instance(envs[i % envs.size()].environment, id("seed", i + 1), InstanceSource::Seed,
                                      styles[i % styles.size()], rng));
  return out;
}

inline std::vector<Instance> expert_set() {
  Rng rng(kExpertSeed);
  const auto& envs = environment_catalog();
  std::vector<Instance> out;
  for (std::size_t i = 0; i < 100; ++i)
    out.push_back(synthesize_instance(envs[(i * 3) % envs.size()].environment, id("task", i + 1),
                                      InstanceSource::Expert, std::nullopt, rng));
  return out;
}

/// 100 candidates; positions with i % 10 in {2, 5, 8} are corrupted, cycling
/// unknown command, out-of-range argument, absent object.
inline std::vector<Instance> corrupted_corpus() {
  Rng rng(kCorpusSeed);
  const auto& envs = environment_catalog();
  const auto& styles = generation_styles();
  std::vector<Instance> out;
  std::size_t corrupted = 0;
  for (std::size_t i = 0; i < 100; ++i) {
    const bool bad = i % 10 == 2 || i % 10 == 5 || i % 10 == 8;
    static const char* suffixes[] = {"-bad-unknown", "-bad-range", "-bad-object"};
    const std::size_t kind = corrupted % 3;
    auto in = synthesize_instance(envs[i % envs.size()].environment, id("cand", i + 1, bad ? suffixes[kind] : "-ok"),
                                  InstanceSource::Generated, styles[(i / 2) % styles.size()], rng);
    if (bad) {
      corrupt_response(in, static_cast<Corruption>(kind), rng);
      ++corrupted;
    }
    out.push_back(std::move(in));
  }
  return out;
}


inline void write_all(const std::filesystem::path& root) {
  namespace fs = std::filesystem;

  fs::create_directories(root / "scenes");
  fs::create_directories(root / "commands");
  fs::create_directories(root / "endpoints");

  const auto seeds = fixtures::seed_store();
  const auto expert = fixtures::expert_set();
  save_dataset((root / "seeds.jsonl").string(), seeds);
  save_dataset((root / "expert_test.jsonl").string(), expert);
  save_dataset((root / "corrupted_candidates.jsonl").string(), fixtures::corrupted_corpus());

  // Replay must be able to tell every task apart.
  scripted_from_dataset(expert);

  write_text_file((root / "scenes" / "construction_7.json").string(),
                  nlohmann::json(generate_scene("construction", 7, 5)).dump(2) + "\n");
  write_text_file((root / "commands" / "survey.txt").string(),
                  "Sure! First pan_right(3), then zoom(2.0).\nhold(2)\ncenter(excavator_1)\n");
  write_text_file((root / "endpoints" / "replay.json").string(),
                  nlohmann::json{{"kind", "scripted"}, {"replay_dataset", "../expert_test.jsonl"}}.dump(2) + "\n");
  write_text_file((root / "endpoints" / "synthetic_generator.json").string(),
                  nlohmann::json{{"kind", "scripted"}, {"synthetic_generator", {{"invalid_fraction", 0.3}}}}.dump(2) + "\n");
  write_text_file((root / "endpoints" / "local_openai.json").string(),
                  nlohmann::json{{"kind", "remote-chat"},
                                 {"base_url", "http://127.0.0.1:8000/v1"},
                                 {"model_name", "zephyr-7b-beta"},
                                 {"timeout", 60},
                                 {"max_retries", 2},
                                 {"temperature", 0.0},
                                 {"max_output_tokens", 256},
                                 {"auth_token_env_var", "OPENAI_API_KEY"}}
                          .dump(2) + "\n");
}

}  // namespace ptzlm::fixtures
