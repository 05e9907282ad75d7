// Command-line front end: simulate, eval, datagen, filter, score, compare,
// validate, serve, prompt.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "ptzlm/ptzlm.hpp"

namespace {

using namespace ptzlm;
using nlohmann::json;

json read_json(const std::string& path) {
  try {
    return json::parse(read_text_file(path));
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::Io, path + ": " + e.what());
  }
}

/// Endpoint config, plus the offline synthetic generator:
/// {"kind": "scripted", "synthetic_generator": {"invalid_fraction": 0.3}}
EndpointSpec load_endpoint(const std::string& path, const PromptConfig& replay_config) {
  const auto j = read_json(path);
  if (j.is_object() && j.contains("synthetic_generator")) {
    auto spec = synthetic_generator_endpoint(j["synthetic_generator"].value("invalid_fraction", 0.0));
    spec.max_concurrency = j.value("max_concurrency", spec.max_concurrency);
    return spec;
  }
  return endpoint_from_json(j, std::filesystem::path(path).parent_path(), replay_config);
}

std::map<std::string, double> parse_mix(const std::string& text) {
  std::map<std::string, double> mix;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    const auto eq = item.find('=');
    const std::string key = item.substr(0, eq);
    mix[key] = eq == std::string::npos ? 1.0 : std::stod(item.substr(eq + 1));
  }
  return mix;
}

CameraState parse_state(const std::string& text) {
  CameraState s;
  char c1 = 0, c2 = 0;
  std::stringstream ss(text);
  if (!(ss >> s.pan >> c1 >> s.tilt >> c2 >> s.zoom) || c1 != ',' || c2 != ',')
    throw Error(ErrorCode::InvalidState, "--initial expects pan,tilt,zoom");
  require_valid(s);
  return s;
}

std::vector<AngularRect> load_frame_viewports(const std::string& path) {
  const auto j = read_json(path);
  try {
    return j.get<SimResult>().viewports();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Io, path + ": not a frame-sequence file (" + e.what() + ")");
  }
}

PromptConfig prompt_config(std::size_t shots, const std::string& pool_path) {
  PromptConfig cfg;
  cfg.shots = shots;
  if (!pool_path.empty()) cfg.example_pool = load_dataset(pool_path, true);
  if (cfg.shots > cfg.example_pool.size())
    throw Error(ErrorCode::ShotCountExceedsPool,
                std::to_string(shots) + " shots need --pool with at least that many instances");
  return cfg;
}

Instance load_single_instance(const std::string& path) {
  const auto text = read_text_file(path);
  auto first = text.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) throw Error(ErrorCode::InvalidInstance, path + ": empty file");
  // A whole-file JSON object, or the first line of a JSONL dataset.
  auto j = json::parse(text, nullptr, false);
  if (!j.is_discarded() && j.is_object()) return instance_from_json(j, path);
  auto all = parse_dataset(text, path, false);
  return all.front();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"PTZ camera language-control toolkit"};
  app.require_subcommand(1);

  // simulate
  auto* sim = app.add_subcommand("simulate", "Expand a command file into frames for a scene");
  std::string sim_scene, sim_commands, sim_out, sim_initial = "0,0,1";
  sim->add_option("--scene", sim_scene, "Scene JSON file")->required();
  sim->add_option("--commands", sim_commands, "Command text file")->required();
  sim->add_option("--out", sim_out, "Frame-sequence JSON output")->required();
  sim->add_option("--initial", sim_initial, "Initial state pan,tilt,zoom");

  // eval
  auto* ev = app.add_subcommand("eval", "Evaluate an endpoint over an expert dataset");
  std::string ev_dataset, ev_endpoint, ev_out, ev_pool;
  std::size_t ev_shots = 0, ev_concurrency = 4;
  std::uint64_t ev_seed = 0;
  bool ev_shuffle = false;
  ev->add_option("--dataset", ev_dataset, "Dataset JSONL")->required();
  ev->add_option("--endpoint-config", ev_endpoint, "Endpoint config JSON")->required();
  ev->add_option("--shots", ev_shots, "Examples per prompt (0 = zero-shot)");
  ev->add_option("--pool", ev_pool, "Example pool JSONL for multi-shot prompts");
  ev->add_option("--out", ev_out, "Report JSON output")->required();
  ev->add_option("--concurrency", ev_concurrency, "Concurrent tasks");
  ev->add_option("--seed", ev_seed, "Seed for pool shuffling");
  ev->add_flag("--shuffle-pool", ev_shuffle, "Shuffle the example pool once with --seed");

  // datagen
  auto* dg = app.add_subcommand("datagen", "Self-instruct dataset generation");
  std::string dg_seeds, dg_out, dg_stats, dg_endpoint, dg_checkpoint, dg_env_mix, dg_style_mix;
  std::size_t dg_target = 1000, dg_batch = kDefaultBatchSize;
  std::uint64_t dg_seed = 0;
  dg->add_option("--seeds", dg_seeds, "Seed store JSONL")->required();
  dg->add_option("--target", dg_target, "Instances to keep")->required();
  dg->add_option("--out", dg_out, "Generated dataset JSONL")->required();
  dg->add_option("--stats", dg_stats, "Filter statistics JSON")->required();
  dg->add_option("--endpoint-config", dg_endpoint, "Generator endpoint config JSON")->required();
  dg->add_option("--checkpoint", dg_checkpoint, "Checkpoint file (resumes if present)");
  dg->add_option("--seed", dg_seed, "Batch scheduling seed");
  dg->add_option("--batch-size", dg_batch, "Instances requested per prompt");
  dg->add_option("--env-mix", dg_env_mix, "e.g. construction=2,urban=1");
  dg->add_option("--style-mix", dg_style_mix, "e.g. panning=1,creative=1");

  // filter
  auto* fl = app.add_subcommand("filter", "Keep only instances whose responses validate");
  std::string fl_in, fl_out, fl_stats;
  fl->add_option("--in", fl_in, "Candidate JSONL")->required();
  fl->add_option("--out", fl_out, "Kept JSONL")->required();
  fl->add_option("--stats", fl_stats, "Filter statistics JSON")->required();

  // score
  auto* sc = app.add_subcommand("score", "BMA and AA between two frame files");
  std::string sc_model, sc_expert;
  sc->add_option("--model-frames", sc_model, "Model frame-sequence JSON")->required();
  sc->add_option("--expert-frames", sc_expert, "Expert frame-sequence JSON")->required();

  // compare
  auto* cmp = app.add_subcommand("compare", "Paired bootstrap between two reports");
  std::string cmp_a, cmp_b, cmp_metric = "bma";
  BootstrapOptions cmp_opts;
  cmp->add_option("--a", cmp_a, "First report")->required();
  cmp->add_option("--b", cmp_b, "Second report")->required();
  cmp->add_option("--metric", cmp_metric, "bma or aa")->check(CLI::IsMember({"bma", "aa"}));
  cmp->add_option("--iterations", cmp_opts.iterations, "Bootstrap iterations");
  cmp->add_option("--sample-size", cmp_opts.sample_size, "Draws per iteration");
  cmp->add_option("--alpha", cmp_opts.alpha, "Significance level");
  cmp->add_option("--seed", cmp_opts.seed, "Resampling seed");

  // validate
  auto* va = app.add_subcommand("validate", "Check a draft dataset: parse and simulate every response");
  std::string va_dataset;
  va->add_option("--dataset", va_dataset, "Dataset JSONL")->required();

  // serve
  auto* sv = app.add_subcommand("serve", "HTTP service for the interactive console");
  int sv_port = 8080;
  std::string sv_host = "0.0.0.0", sv_endpoint, sv_pool, sv_log;
  std::size_t sv_shots = 0;
  sv->add_option("--port", sv_port, "Listen port");
  sv->add_option("--host", sv_host, "Listen address");
  sv->add_option("--endpoint-config", sv_endpoint, "Default model endpoint");
  sv->add_option("--shots", sv_shots, "Examples per prompt");
  sv->add_option("--pool", sv_pool, "Example pool JSONL");
  sv->add_option("--transcript-log", sv_log, "Append session transcripts to this JSONL file");

  // prompt
  auto* pr = app.add_subcommand("prompt", "Build and dump the prompt for one instance");
  std::string pr_instance, pr_dump, pr_pool;
  std::size_t pr_shots = 0;
  pr->add_option("--instance", pr_instance, "Instance JSON (or JSONL, first line)")->required();
  pr->add_option("--shots", pr_shots, "Examples per prompt");
  pr->add_option("--pool", pr_pool, "Example pool JSONL");
  pr->add_option("--dump", pr_dump, "Output JSON {system_text, user_text}")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*sim) {
      const auto scene = load_scene_file(sim_scene);
      const auto outcome = parse_response(read_text_file(sim_commands), scene);
      if (!outcome.accepted) {
        for (const auto& d : outcome.diagnostics)
          std::cerr << sim_commands << ":" << d.position << ": " << to_string(d.kind) << ": " << d.text << "\n";
        return 2;
      }
      write_text_file(sim_out, frames_document(simulate(scene, parse_state(sim_initial), outcome.commands)));
      return 0;
    }

    if (*ev) {
      EvalRunConfig cfg;
      cfg.dataset_path = ev_dataset;
      cfg.prompt = prompt_config(ev_shots, ev_pool);
      cfg.endpoint = load_endpoint(ev_endpoint, cfg.prompt);
      cfg.concurrency = ev_concurrency;
      cfg.output_path = ev_out;
      cfg.seed = ev_seed;
      cfg.shuffle_pool = ev_shuffle;
      const auto report = evaluate(cfg);
      std::cout << "tasks = " << report.tasks.size() << "\nbma_mean = " << format_decimal(report.bma_mean)
                << "\naa_mean = " << format_decimal(report.aa_mean) << "\n";
      return 0;
    }

    if (*dg) {
      const auto seeds = load_dataset(dg_seeds, true);
      Gateway gateway(load_endpoint(dg_endpoint, {}));
      GenerationOptions opts;
      opts.target_count = dg_target;
      opts.seed = dg_seed;
      opts.batch_size = dg_batch;
      opts.checkpoint_path = dg_checkpoint;
      opts.env_mix = parse_mix(dg_env_mix);
      opts.style_mix = parse_mix(dg_style_mix);
      const auto result = run_generation(gateway, seeds, opts);
      save_dataset(dg_out, result.dataset);
      write_text_file(dg_stats, json(result.stats).dump(2) + "\n");
      std::cout << "kept = " << result.dataset.size() << "\nbatches = " << result.batches
                << "\nreject_rate = " << format_number(result.stats.reject_rate) << "\n";
      if (!result.completed) {
        std::cerr << "datagen: stopped before reaching the target\n";
        return 3;
      }
      return 0;
    }

    if (*fl) {
      const auto candidates = load_dataset(fl_in, false);
      const auto result = filter_instances(candidates);
      save_dataset(fl_out, result.kept);
      write_text_file(fl_stats, json(result.stats).dump(2) + "\n");
      std::cout << "total = " << result.stats.total << "\nkept = " << result.stats.kept
                << "\nreject_rate = " << format_number(result.stats.reject_rate) << "\n";
      return 0;
    }

    if (*sc) {
      const auto model = load_frame_viewports(sc_model);
      const auto expert = load_frame_viewports(sc_expert);
      std::cout << "bma = " << format_decimal(bma(model, expert)) << "\naa = " << format_decimal(aa(model, expert))
                << "\n";
      return 0;
    }

    if (*cmp) {
      const auto report = compare(load_report(cmp_a), load_report(cmp_b), metric_from_string(cmp_metric), cmp_opts);
      std::cout << json(report).dump(2) << "\n";
      return 0;
    }

    if (*va) {
      const auto dataset = load_dataset(va_dataset, false);
      std::size_t bad = 0;
      for (const auto& in : dataset) {
        const auto outcome = validate_instance(in);
        if (!outcome.accepted) {
          ++bad;
          for (const auto& d : outcome.diagnostics)
            std::cout << in.instance_id << ": " << to_string(d.kind) << ": " << d.text << "\n";
          continue;
        }
        const auto sim_result = simulate(in.scene, in.initial_state, outcome.commands);
        std::cout << in.instance_id << ": ok, " << sim_result.frames.size() << " frames\n";
      }
      std::cout << "valid = " << dataset.size() - bad << " / " << dataset.size() << "\n";
      return bad == 0 ? 0 : 1;
    }

    if (*sv) {
      ServiceConfig cfg;
      cfg.prompt = prompt_config(sv_shots, sv_pool);
      if (!sv_endpoint.empty()) cfg.endpoint = load_endpoint(sv_endpoint, cfg.prompt);
      cfg.transcript_log = sv_log;
      std::cout << "serving on " << sv_host << ":" << sv_port << std::endl;
      return serve(sv_port, std::move(cfg), sv_host) ? 0 : 1;
    }

    if (*pr) {
      const auto in = load_single_instance(pr_instance);
      const auto prompt = build_prompt(in, prompt_config(pr_shots, pr_pool));
      write_text_file(pr_dump, json(prompt).dump(2) + "\n");
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
