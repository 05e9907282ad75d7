// Acceptance checks. Prints one PASS/FAIL line per criterion and exits nonzero
// if any fail. `ptzlm_acceptance --emit-sim-corpus FILE` writes the simulator
// corpus used by the cross-process determinism check.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>
#include <cstdio>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "ptzlm/ptzlm.hpp"
#include "test_support.hpp"

using namespace ptzlm;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(double v, int digits = 6) {
  std::ostringstream os;
  os.precision(digits);
  os << v;
  return os.str();
}

std::vector<Instance> load(const std::string& rel, bool require_valid = true) {
  return load_dataset(testing::data_path(rel), require_valid);
}

// ---------------------------------------------------------------------------

Outcome geometry_oracle() {
  const auto start = std::chrono::steady_clock::now();
  Rng rng(20240601);
  double worst_iou = 0.0, worst_union_rel = 0.0, worst_union_abs = 0.0;
  int failures = 0;
  for (int i = 0; i < 200; ++i) {
    AngularRect a = oracle::random_rect(rng), b = oracle::random_rect(rng);
    // Half the pairs are forced to overlap so the ratio is exercised.
    if (i % 2 == 0) b = {a.pan_min + 0.3 * a.width(), std::min(a.pan_min + 0.3 * a.width() + b.width(), 180.0),
                         a.tilt_min + 0.2 * a.height(), std::min(a.tilt_min + 0.2 * a.height() + b.height(), 90.0)};
    const double err = std::abs(iou(a, b) - oracle::raster_iou(a, b, 2000));
    worst_iou = std::max(worst_iou, err);
    failures += err > 0.005;
  }
  for (int i = 0; i < 100; ++i) {
    std::vector<AngularRect> rects(rng.between(1, 20));
    for (auto& r : rects) r = oracle::random_rect(rng);
    const double exact = union_area(rects), approx = oracle::raster_union_area(rects, 2000);
    const double abs_err = std::abs(exact - approx), rel_err = abs_err / exact;
    worst_union_rel = std::max(worst_union_rel, rel_err);
    worst_union_abs = std::max(worst_union_abs, abs_err);
    failures += abs_err > 0.005 && rel_err > 0.005;
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return {failures == 0 && secs < 60.0, "200 pairs, 100 sets; worst iou abs err " + fmt(worst_iou) +
                                            ", worst union rel err " + fmt(worst_union_rel) + "; " + fmt(secs, 3) + " s"};
}

Outcome metric_identities() {
  Rng rng(20240602);
  int identity_fail = 0, range_fail = 0, aa_perm_fail = 0, nonconstant = 0, bma_sensitive = 0;
  std::vector<AngularRect> previous;
  for (int i = 0; i < 100; ++i) {
    const auto scene = generate_scene(environment_catalog()[i % 5].environment, rng.next(), 6);
    const CameraState init{5.0 * rng.between(-20, 20), 3.0 * rng.between(-10, 10), 1.0};
    const auto frames = simulate(scene, init, testing::random_sequence(scene, rng, 1, 8)).viewports();
    identity_fail += !(bma(frames, frames) == 1.0 && aa(frames, frames) == 1.0);
    if (!previous.empty()) {
      for (double s : {bma(frames, previous), aa(frames, previous), bma(previous, frames), aa(previous, frames)})
        range_fail += !(s >= 0.0 && s <= 1.0);
    }
    previous = frames;

    const bool constant = std::all_of(frames.begin(), frames.end(), [&](const AngularRect& r) { return r == frames[0]; });
    if (!constant) ++nonconstant;
    bool changed = false;
    for (int p = 0; p < 24; ++p) {
      auto perm = frames;
      if (p == 0)
        std::reverse(perm.begin(), perm.end());
      else
        for (std::size_t k = perm.size(); k > 1; --k) std::swap(perm[k - 1], perm[rng.below(k)]);
      aa_perm_fail += aa(perm, frames) != 1.0 || aa(perm, previous) != aa(frames, previous);
      changed = changed || bma(perm, frames) != 1.0;
    }
    if (!constant && changed) ++bma_sensitive;
  }
  const double sensitive_rate = nonconstant ? static_cast<double>(bma_sensitive) / nonconstant : 0.0;
  const bool pass = identity_fail == 0 && range_fail == 0 && aa_perm_fail == 0 && sensitive_rate >= 0.90;
  return {pass, "identity failures " + std::to_string(identity_fail) + ", out-of-range " + std::to_string(range_fail) +
                    ", aa permutation changes " + std::to_string(aa_perm_fail) + ", bma permutation-sensitive " +
                    std::to_string(bma_sensitive) + "/" + std::to_string(nonconstant) + " non-constant sequences"};
}

Outcome worked_values() {
  const AngularRect a{0, 1, 0, 1}, b{2, 3, 0, 1};
  struct Case {
    const char* name;
    double got, want;
  };
  const std::vector<Case> cases{
      {"bma([A,B],[A])", bma({a, b}, {a}), 0.5},
      {"bma([A],[A])", bma({a}, {a}), 1.0},
      {"bma([],[A])", bma(std::vector<AngularRect>{}, {a}), 0.0},
      {"aa([0,1]^2, [0,1]^2 + [2,3]x[0,1])", aa({a}, {a, b}), 0.5},
      {"aa(disjoint)", aa({a}, {b}), 0.0},
      {"aa(reordered)", aa({b, a}, {a, b}), 1.0},
      {"aa([0,2]^2, [1,3]^2)", aa({{0, 2, 0, 2}}, {{1, 3, 1, 3}}), 1.0 / 7.0},
      {"union([0,2]^2, [1,3]^2)", union_area({{0, 2, 0, 2}, {1, 3, 1, 3}}), 7.0},
      {"iou([0,10]^2, [5,15]x[0,10])", iou({0, 10, 0, 10}, {5, 15, 0, 10}), 50.0 / 150.0},
  };
  std::string bad;
  for (const auto& c : cases)
    if (std::abs(c.got - c.want) > 1e-9) bad += std::string(" ") + c.name + "=" + fmt(c.got, 12);
  return {bad.empty(), std::to_string(cases.size()) + " worked values within 1e-9" + (bad.empty() ? "" : ";" + bad)};
}

std::string sim_corpus() {
  Rng rng(20240603);
  std::string out;
  for (int i = 0; i < 100; ++i) {
    const auto scene = generate_scene(environment_catalog()[i % 5].environment, rng.next(), static_cast<int>(rng.between(1, 12)));
    const CameraState init{std::round(rng.uniform(-180, 180)), std::round(rng.uniform(-90, 90)), 1.0 + rng.below(10)};
    out += frames_document(simulate(scene, init, testing::random_sequence(scene, rng, 1, 10)));
  }
  return out;
}

Outcome simulator_determinism(const std::string& self) {
  testing::TempDir dir;
  const auto a = testing::run("'" + self + "' --emit-sim-corpus '" + dir.file("a.json") + "'");
  const auto b = testing::run("'" + self + "' --emit-sim-corpus '" + dir.file("b.json") + "'");
  bool identical = a.status == 0 && b.status == 0 &&
                   read_text_file(dir.file("a.json")) == read_text_file(dir.file("b.json")) &&
                   read_text_file(dir.file("a.json")) == sim_corpus();

  const Scene scene("k", "urban", {});
  const auto pan = simulate(scene, kHomeState, {pan_right(3)});
  const bool kinematics = pan.frames.size() == 3 && pan.frames[0].state.pan == 5.0 && pan.frames[1].state.pan == 10.0 &&
                          pan.final_state.pan == 15.0;

  bool clamps = true;
  auto r = simulate(scene, {178, 0, 1}, {pan_right(2)});
  clamps &= r.frames.size() == 2 && r.frames[0].state.pan == 180.0 && r.frames[1].state.pan == 180.0;
  r = simulate(scene, {-176, 0, 1}, {pan_left(4)});
  clamps &= r.frames.size() == 4 && r.frames[0].state.pan == -180.0 && r.final_state.pan == -180.0;
  r = simulate(scene, {0, 87, 1}, {tilt_up(3)});
  clamps &= r.frames.size() == 3 && r.final_state.tilt == 90.0;
  r = simulate(scene, {0, -89, 1}, {tilt_down(2)});
  clamps &= r.frames.size() == 2 && r.final_state.tilt == -90.0;
  r = simulate(scene, {180, 90, 25}, {zoom(25.0), hold(1)});
  clamps &= r.frames.size() == 2 && r.final_state == (CameraState{180, 90, 25});
  clamps &= viewport_of({180, 90, 25}).pan_max == 180.0 && viewport_of({180, 90, 25}).tilt_max == 90.0;

  return {identical && kinematics && clamps, std::string("100-case corpus identical across two processes: ") +
                                                 (identical ? "yes" : "no") + "; pan_right(3) lands at " +
                                                 fmt(pan.final_state.pan) + "; clamping " + (clamps ? "holds" : "broken")};
}

Outcome replay_oracle() {
  EvalRunConfig cfg;
  cfg.dataset_path = testing::data_path("expert_test.jsonl");
  cfg.endpoint = load_endpoint_config(testing::data_path("endpoints/replay.json"));
  const auto replay = evaluate(cfg);

  const auto dataset = load("expert_test.jsonl");
  auto t = std::make_shared<Transcript>();
  for (const auto& in : dataset) {
    const auto cut = in.response.rfind('\n');
    t->responses[build_prompt(in, {}).fingerprint] = cut == std::string::npos ? std::string() : in.response.substr(0, cut);
  }
  EndpointSpec truncated_spec;
  truncated_spec.transcript = t;
  Gateway truncated_gw(truncated_spec);
  const auto truncated = evaluate_instances(dataset, truncated_gw, {}, 4);

  std::size_t eligible = 0, below_one = 0;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    const auto& in = dataset[i];
    const auto frames = simulate(in.scene, in.initial_state, parse_response(in.response, in.scene).commands).viewports();
    std::set<std::tuple<double, double, double, double>> distinct;
    for (const auto& f : frames) distinct.insert({f.pan_min, f.pan_max, f.tilt_min, f.tilt_max});
    if (distinct.size() < 2) continue;
    ++eligible;
    below_one += truncated.tasks[i].bma < 1.0;
  }
  const bool pass = replay.tasks.size() == 100 && replay.bma_mean == 1.0 && replay.aa_mean == 1.0 && eligible == below_one;
  return {pass, std::to_string(replay.tasks.size()) + " tasks: replay bma " + fmt(replay.bma_mean) + ", aa " +
                    fmt(replay.aa_mean) + "; truncated bma < 1 on " + std::to_string(below_one) + "/" +
                    std::to_string(eligible) + " tasks with >= 2 distinct frames (mean " + fmt(truncated.bma_mean) + ")"};
}

bool well_formed(const ParseOutcome& o, std::size_t text_size, const Scene& scene) {
  if (o.accepted != (!o.commands.empty() && o.diagnostics.empty())) return false;
  for (const auto& d : o.diagnostics)
    if (d.position > text_size || d.text.empty()) return false;
  for (const auto& c : o.commands) {
    const auto& spec = spec_of(c.name);
    if (c.args.size() != (spec.arg == ArgKind::None ? 0u : 1u)) return false;
    if (spec.arg == ArgKind::Integer && (c.steps() < kMinSteps || c.steps() > kMaxSteps)) return false;
    if (spec.arg == ArgKind::Decimal && !(c.value() >= kMinZoom && c.value() <= kMaxZoom)) return false;
    if (spec.arg == ArgKind::Identifier && !scene.find(c.target())) return false;
  }
  return true;
}

Outcome parser_fuzz() {
  Rng rng(20240604);
  const auto scene = generate_scene("urban", 5, 8);
  const std::string vocab[] = {"zoom(", "pan_left(", "center(", "hold", "home()", ")", "(", ",", "car_1", "25.0",
                               "1e1", "\n", "```", " ", "'", "-", "72", "73"};
  int crashes = 0, malformed = 0;
  for (int i = 0; i < 10000; ++i) {
    std::string text;
    const auto len = rng.below(400);
    if (i % 2 == 0) {
      text.resize(len);
      for (auto& c : text) c = static_cast<char>(rng.below(256));
    } else {
      while (text.size() < len) text += rng.below(3) ? vocab[rng.below(std::size(vocab))] : std::string(1, static_cast<char>(rng.below(256)));
    }
    try {
      malformed += !well_formed(parse_response(text, scene), text.size(), scene);
    } catch (...) {
      ++crashes;
    }
  }
  int roundtrip_fail = 0;
  for (int i = 0; i < 1000; ++i) {
    const auto s = generate_scene(environment_catalog()[i % 5].environment, rng.next(), static_cast<int>(rng.between(1, 10)));
    const auto cmds = testing::random_sequence(s, rng, 1, 12);
    const auto o = parse_response(serialize(cmds), s);
    roundtrip_fail += !(o.accepted && o.commands == cmds);
  }
  return {crashes == 0 && malformed == 0 && roundtrip_fail == 0,
          "10000 random inputs: " + std::to_string(crashes) + " crashes, " + std::to_string(malformed) +
              " malformed outcomes; 1000 round-trips: " + std::to_string(roundtrip_fail) + " mismatches"};
}

Outcome filter_fidelity() {
  const auto corpus = load("corrupted_candidates.jsonl", false);
  std::set<std::string> invalid;
  for (const auto& in : corpus)
    if (in.instance_id.find("-bad-") != std::string::npos) invalid.insert(in.instance_id);
  const auto result = filter_instances(corpus);
  std::set<std::string> kept;
  for (const auto& in : result.kept) kept.insert(in.instance_id);
  std::size_t true_reject = 0, false_reject = 0;
  for (const auto& in : corpus) {
    const bool rejected = !kept.count(in.instance_id);
    if (rejected && invalid.count(in.instance_id)) ++true_reject;
    if (rejected && !invalid.count(in.instance_id)) ++false_reject;
  }
  const std::size_t rejected = corpus.size() - kept.size();
  const double precision = rejected ? static_cast<double>(true_reject) / rejected : 0.0;
  const double recall = invalid.empty() ? 0.0 : static_cast<double>(true_reject) / invalid.size();
  const auto& by_kind = result.stats.rejected_by_kind;
  const bool equal_parts = by_kind.size() == 3 && by_kind.count("UnknownCommand") && by_kind.count("OutOfRange") &&
                           by_kind.count("UnknownObject") && by_kind.at("UnknownCommand") == 10 &&
                           by_kind.at("OutOfRange") == 10 && by_kind.at("UnknownObject") == 10;
  const bool pass = corpus.size() == 100 && invalid.size() == 30 && precision == 1.0 && recall == 1.0 &&
                    std::abs(result.stats.reject_rate - 0.30) < 1e-12 && equal_parts;
  return {pass, std::to_string(corpus.size()) + " candidates, " + std::to_string(invalid.size()) +
                    " injected: precision " + fmt(precision) + ", recall " + fmt(recall) + ", reject_rate " +
                    fmt(result.stats.reject_rate) + " " + nlohmann::json(by_kind).dump()};
}

Outcome bootstrap_behavior() {
  BootstrapOptions defaults;
  const bool constants = defaults.iterations == 1000 && defaults.sample_size == 100 && defaults.alpha == 0.05;
  int identical_nonsig = 0, shifted_sig = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    Rng data(seed * 7919 + 1);
    std::vector<double> a(100), b(100);
    for (auto& v : a) v = data.uniform();
    BootstrapOptions opts;
    opts.seed = seed;
    identical_nonsig += !bootstrap_compare(a, a, opts).significant;
    for (std::size_t i = 0; i < 100; ++i) {
      b[i] = data.normal(0.5, 0.05);
      a[i] = data.normal(0.7, 0.05);
    }
    shifted_sig += bootstrap_compare(a, b, opts).significant;
  }
  Rng data(99);
  std::vector<double> a(100), b(100);
  for (std::size_t i = 0; i < 100; ++i) {
    a[i] = data.uniform();
    b[i] = data.uniform();
  }
  BootstrapOptions fixed;
  fixed.seed = 424242;
  const auto r1 = bootstrap_compare(a, b, fixed, "bma"), r2 = bootstrap_compare(a, b, fixed, "bma");
  const bool bit_identical = r1 == r2 && nlohmann::json(r1).dump() == nlohmann::json(r2).dump() &&
                             std::memcmp(&r1.p_value, &r2.p_value, sizeof(double)) == 0 &&
                             std::memcmp(&r1.ci_low, &r2.ci_low, sizeof(double)) == 0 &&
                             std::memcmp(&r1.ci_high, &r2.ci_high, sizeof(double)) == 0;
  const bool pass = constants && identical_nonsig >= 95 && shifted_sig >= 99 && bit_identical;
  return {pass, "1000 iterations x 100 draws, alpha 0.05: identical arrays non-significant " +
                    std::to_string(identical_nonsig) + "/100; +0.2 shift (sd 0.05) significant " +
                    std::to_string(shifted_sig) + "/100; fixed-seed report bit-identical: " + (bit_identical ? "yes" : "no")};
}

Outcome datagen_pipeline() {
  const auto seeds = load("seeds.jsonl");
  Gateway gw(synthetic_generator_endpoint(0.3));
  GenerationOptions opts;
  opts.target_count = 1000;
  opts.seed = 20240605;

  std::size_t prompts = 0, bad_prompts = 0;
  bool backfill_done = false, backfill_monotone = true;
  opts.on_batch = [&](std::size_t, const GenBatchSpec& spec, const AssembledPrompt& p) {
    ++prompts;
    std::size_t from_seed = 0, from_pool = 0;
    for (const auto& in : spec.seed_examples) from_seed += in.source == InstanceSource::Seed;
    for (const auto& in : spec.generated_examples) from_pool += in.source == InstanceSource::Generated;
    const bool ok = spec.seed_examples.size() == 4 && from_seed == 4 && spec.generated_examples.size() == 4 &&
                    from_pool + spec.backfilled == 4 && p.example_count == 8;
    bad_prompts += !ok;
    if (spec.backfilled == 0) backfill_done = true;
    if (backfill_done && spec.backfilled > 0) backfill_monotone = false;
  };
  const auto full = run_generation(gw, seeds, opts);

  testing::TempDir dir;
  opts.on_batch = nullptr;
  opts.checkpoint_path = dir.file("ckpt.json");
  opts.stop_after_batches = 60;
  const auto partial = run_generation(gw, seeds, opts);
  opts.stop_after_batches = 0;
  const auto resumed = run_generation(gw, seeds, opts);
  const bool identical = !partial.completed && resumed.completed &&
                         dataset_text(resumed.dataset) == dataset_text(full.dataset) && resumed.stats == full.stats;

  const bool pass = full.completed && full.dataset.size() >= 1000 && bad_prompts == 0 && backfill_monotone && identical;
  return {pass, std::to_string(full.dataset.size()) + " kept in " + std::to_string(full.batches) + " batches (reject_rate " +
                    fmt(full.stats.reject_rate) + "); resumed after " + std::to_string(partial.batches) +
                    " batches identical: " + (identical ? "yes" : "no") + "; prompts with 4 seed + 4 pool/backfill: " +
                    std::to_string(prompts - bad_prompts) + "/" + std::to_string(prompts)};
}

}  // namespace

int main(int argc, char** argv) {
  if (argc == 3 && std::string(argv[1]) == "--emit-sim-corpus") {
    write_text_file(argv[2], sim_corpus());
    return 0;
  }
  const std::string self = std::filesystem::read_symlink("/proc/self/exe").string();

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"geometry oracle", geometry_oracle},
      {"metric identities", metric_identities},
      {"worked metric values", worked_values},
      {"simulator determinism and kinematics", [&] { return simulator_determinism(self); }},
      {"replay oracle end to end", replay_oracle},
      {"parser totality fuzz", parser_fuzz},
      {"filter fidelity", filter_fidelity},
      {"bootstrap behavior", bootstrap_behavior},
      {"datagen pipeline", datagen_pipeline},
  };
  int failed = 0;
  for (const auto& [name, check] : criteria) {
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    failed += !o.pass;
    std::cout << (o.pass ? "PASS" : "FAIL") << "  " << name << ": " << o.detail << std::endl;
  }
  std::cout << (criteria.size() - failed) << "/" << criteria.size() << " criteria passed" << std::endl;
  return failed == 0 ? 0 : 1;
}
