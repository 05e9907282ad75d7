#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "ptzlm/bootstrap.hpp"
#include "ptzlm/common.hpp"
#include "ptzlm/error.hpp"
#include "ptzlm/gateway.hpp"
#include "ptzlm/instance.hpp"
#include "ptzlm/metrics.hpp"
#include "ptzlm/parser.hpp"
#include "ptzlm/prompt.hpp"
#include "ptzlm/simulator.hpp"

namespace ptzlm {

struct TaskResult {
  std::string task_id;
  double bma = 0.0;
  double aa = 0.0;
  std::size_t n_model_frames = 0;
  std::size_t n_expert_frames = 0;
  bool parse_accepted = false;
  std::string status = "ok";  // ok, parse_rejected, gateway_error, error
  std::string error;
  std::vector<std::string> diagnostic_kinds;
  std::string response;

  friend bool operator==(const TaskResult&, const TaskResult&) = default;
};

struct EvalReport {
  nlohmann::json header;
  std::vector<TaskResult> tasks;
  double bma_mean = 0.0;
  double aa_mean = 0.0;
  std::vector<BootstrapReport> bootstrap;
};

struct EvalRunConfig {
  std::string dataset_path;
  EndpointSpec endpoint;
  PromptConfig prompt;
  std::size_t concurrency = 4;
  std::string output_path;
  std::uint64_t seed = 0;
  bool shuffle_pool = false;  // shuffle the example pool once with `seed`
};

inline nlohmann::json report_conventions() {
  return {{"bma_normalization", "sum of per-frame IOU divided by max(N_model, N_expert); shorter sequence holds its last frame"},
          {"empty_sequences", "both empty scores 1, exactly one empty scores 0"},
          {"unparseable_responses", "scored bma = aa = 0 and kept in the aggregate"},
          {"geometry", "flat pan x tilt plane in degrees; exact rectangle union areas"}};
}

/// Scores one model response against an instance's expert response.
inline TaskResult score_response(const Instance& in, const std::string& model_text) {
  TaskResult r;
  r.task_id = in.instance_id;
  r.response = model_text;
  const auto expert = parse_response(in.response, in.scene);
  const auto expert_frames = simulate(in.scene, in.initial_state, expert.commands).viewports();
  r.n_expert_frames = expert_frames.size();

  const auto model = parse_response(model_text, in.scene);
  r.parse_accepted = model.accepted;
  if (!model.accepted) {
    r.status = "parse_rejected";
    for (const auto& d : model.diagnostics) r.diagnostic_kinds.emplace_back(to_string(d.kind));
    return r;
  }
  const auto model_frames = simulate(in.scene, in.initial_state, model.commands).viewports();
  r.n_model_frames = model_frames.size();
  r.bma = bma(model_frames, expert_frames);
  r.aa = aa(model_frames, expert_frames);
  return r;
}

inline void aggregate(EvalReport& report) {
  double b = 0.0, a = 0.0;
  for (const auto& t : report.tasks) {
    b += t.bma;
    a += t.aa;
  }
  const double n = report.tasks.empty() ? 1.0 : static_cast<double>(report.tasks.size());
  report.bma_mean = b / n;
  report.aa_mean = a / n;
}

/// Runs every instance through prompt -> completion -> parse -> simulate and
/// scores it against the expert response. Tasks run on up to `concurrency`
/// workers; results are stored by dataset position, so output order never
/// depends on completion order. A failing task never aborts the run.
inline EvalReport evaluate_instances(const std::vector<Instance>& dataset, Gateway& gateway,
                                     const PromptConfig& prompt_config, std::size_t concurrency) {
  EvalReport report;
  report.tasks.resize(dataset.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < dataset.size(); i = next++) {
      const auto& in = dataset[i];
      try {
        const auto prompt = build_prompt(in, prompt_config);
        std::string text;
        try {
          text = gateway.complete(prompt).response_text;
        } catch (const Error& e) {
          TaskResult r;
          r.task_id = in.instance_id;
          r.status = "gateway_error";
          r.error = e.what();
          report.tasks[i] = std::move(r);
          continue;
        }
        report.tasks[i] = score_response(in, text);
      } catch (const std::exception& e) {
        TaskResult r;
        r.task_id = in.instance_id;
        r.status = "error";
        r.error = e.what();
        report.tasks[i] = std::move(r);
      }
    }
  };
  const std::size_t n_workers = std::max<std::size_t>(1, std::min(concurrency, dataset.size()));
  {
    std::vector<std::jthread> workers;
    for (std::size_t w = 0; w < n_workers; ++w) workers.emplace_back(worker);
  }
  aggregate(report);
  report.header = report_conventions();
  report.header["task_count"] = dataset.size();
  report.header["model"] = gateway.spec().model_name;
  report.header["shots"] = prompt_config.shots;
  return report;
}

inline void to_json(nlohmann::json& j, const TaskResult& t) {
  j = nlohmann::json{{"task_id", t.task_id},
                     {"bma", t.bma},
                     {"aa", t.aa},
                     {"n_model_frames", t.n_model_frames},
                     {"n_expert_frames", t.n_expert_frames},
                     {"parse_accepted", t.parse_accepted},
                     {"status", t.status},
                     {"response", t.response}};
  if (!t.error.empty()) j["error"] = t.error;
  if (!t.diagnostic_kinds.empty()) j["diagnostics"] = t.diagnostic_kinds;
}

inline void from_json(const nlohmann::json& j, TaskResult& t) {
  j.at("task_id").get_to(t.task_id);
  j.at("bma").get_to(t.bma);
  j.at("aa").get_to(t.aa);
  t.n_model_frames = j.value("n_model_frames", std::size_t{0});
  t.n_expert_frames = j.value("n_expert_frames", std::size_t{0});
  t.parse_accepted = j.value("parse_accepted", false);
  t.status = j.value("status", std::string("ok"));
  t.error = j.value("error", std::string());
  t.response = j.value("response", std::string());
  if (j.contains("diagnostics")) j.at("diagnostics").get_to(t.diagnostic_kinds);
}

inline void to_json(nlohmann::json& j, const EvalReport& r) {
  j = nlohmann::json{{"header", r.header},
                     {"tasks", r.tasks},
                     {"aggregate", {{"bma_mean", r.bma_mean}, {"aa_mean", r.aa_mean}}},
                     {"bootstrap", r.bootstrap}};
}

inline void from_json(const nlohmann::json& j, EvalReport& r) {
  r.header = j.value("header", nlohmann::json::object());
  j.at("tasks").get_to(r.tasks);
  r.bma_mean = j.at("aggregate").at("bma_mean").get<double>();
  r.aa_mean = j.at("aggregate").at("aa_mean").get<double>();
  if (j.contains("bootstrap")) j.at("bootstrap").get_to(r.bootstrap);
}

inline std::string report_document(const EvalReport& r) { return nlohmann::json(r).dump(2) + "\n"; }

inline EvalReport load_report(const std::string& path) {
  try {
    return nlohmann::json::parse(read_text_file(path)).get<EvalReport>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::Io, path + ": not a report (" + e.what() + ")");
  }
}

inline EvalReport evaluate(const EvalRunConfig& config) {
  const auto dataset = load_dataset(config.dataset_path, true);
  if (dataset.empty()) throw Error(ErrorCode::UnreadableDataset, config.dataset_path + ": dataset is empty");
  PromptConfig prompt = config.prompt;
  if (config.shuffle_pool) {
    Rng rng(config.seed);
    for (std::size_t i = prompt.example_pool.size(); i > 1; --i)
      std::swap(prompt.example_pool[i - 1], prompt.example_pool[rng.below(i)]);
  }
  Gateway gateway(config.endpoint);
  auto report = evaluate_instances(dataset, gateway, prompt, config.concurrency);
  report.header["seed"] = config.seed;
  report.header["pool_shuffled"] = config.shuffle_pool;
  if (!config.output_path.empty()) write_text_file(config.output_path, report_document(report));
  return report;
}

enum class Metric { Bma, Aa };

inline Metric metric_from_string(std::string_view s) {
  if (s == "bma") return Metric::Bma;
  if (s == "aa") return Metric::Aa;
  throw Error(ErrorCode::InvalidTarget, "metric must be bma or aa, got '" + std::string(s) + "'");
}

/// Paired bootstrap of report_a - report_b on one metric, paired by task id.
inline BootstrapReport compare(const EvalReport& report_a, const EvalReport& report_b, Metric metric,
                               const BootstrapOptions& opts) {
  std::map<std::string, double> a, b;
  auto pick = [metric](const TaskResult& t) { return metric == Metric::Bma ? t.bma : t.aa; };
  for (const auto& t : report_a.tasks) a[t.task_id] = pick(t);
  for (const auto& t : report_b.tasks) b[t.task_id] = pick(t);
  if (a.size() != report_a.tasks.size() || b.size() != report_b.tasks.size())
    throw Error(ErrorCode::TaskSetMismatch, "duplicate task ids in a report");
  std::vector<double> va, vb;
  for (const auto& [id, score] : a) {
    auto it = b.find(id);
    if (it == b.end()) throw Error(ErrorCode::TaskSetMismatch, "task '" + id + "' missing from the second report");
    va.push_back(score);
    vb.push_back(it->second);
  }
  if (a.size() != b.size()) throw Error(ErrorCode::TaskSetMismatch, "reports cover different task sets");
  return bootstrap_compare(va, vb, opts, metric == Metric::Bma ? "bma" : "aa");
}

}  // namespace ptzlm
