#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ptzlm/common.hpp"
#include "ptzlm/error.hpp"

namespace ptzlm {

inline constexpr std::int64_t kDefaultBootstrapIterations = 1000;
inline constexpr std::int64_t kDefaultBootstrapSampleSize = 100;
inline constexpr double kDefaultAlpha = 0.05;

struct BootstrapOptions {
  std::int64_t iterations = kDefaultBootstrapIterations;
  std::int64_t sample_size = kDefaultBootstrapSampleSize;
  double alpha = kDefaultAlpha;
  std::uint64_t seed = 0;
};

struct BootstrapReport {
  std::string metric;
  double mean_diff = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  double p_value = 1.0;
  bool significant = false;
  std::int64_t iterations = 0;
  std::int64_t sample_size = 0;
  std::uint64_t seed = 0;

  friend bool operator==(const BootstrapReport&, const BootstrapReport&) = default;
};

namespace detail {

/// Linear-interpolated percentile of sorted data, q in [0, 1].
inline double percentile_sorted(const std::vector<double>& sorted, double q) {
  if (sorted.empty()) return 0.0;
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + (sorted[hi] - sorted[lo]) * frac;
}

}  // namespace detail

/// Paired bootstrap of mean(a - b). Each iteration draws `sample_size` task
/// indices with replacement; the two-sided p-value is twice the smaller tail
/// of resampled means on either side of zero.
inline BootstrapReport bootstrap_compare(std::span<const double> scores_a, std::span<const double> scores_b,
                                         const BootstrapOptions& opts, std::string metric = "") {
  if (scores_a.empty() || scores_b.empty()) throw Error(ErrorCode::EmptyScores, "score lists must be nonempty");
  if (scores_a.size() != scores_b.size())
    throw Error(ErrorCode::LengthMismatch, std::to_string(scores_a.size()) + " vs " + std::to_string(scores_b.size()));
  if (opts.iterations < 1 || opts.sample_size < 1)
    throw Error(ErrorCode::EmptyScores, "iterations and sample_size must be positive");

  const std::size_t n = scores_a.size();
  std::vector<double> diffs(n);
  double observed = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    diffs[i] = scores_a[i] - scores_b[i];
    observed += diffs[i];
  }
  observed /= static_cast<double>(n);

  Rng rng(opts.seed);
  std::vector<double> means(static_cast<std::size_t>(opts.iterations));
  std::int64_t at_or_below = 0, at_or_above = 0;
  for (auto& m : means) {
    double sum = 0.0;
    for (std::int64_t k = 0; k < opts.sample_size; ++k) sum += diffs[rng.below(n)];
    m = sum / static_cast<double>(opts.sample_size);
    if (m <= 0.0) ++at_or_below;
    if (m >= 0.0) ++at_or_above;
  }
  std::sort(means.begin(), means.end());

  BootstrapReport r;
  r.metric = std::move(metric);
  r.mean_diff = observed;
  // The interval is widened to cover the point estimate in heavily skewed samples.
  r.ci_low = std::min(detail::percentile_sorted(means, 0.025), observed);
  r.ci_high = std::max(detail::percentile_sorted(means, 0.975), observed);
  const double iters = static_cast<double>(opts.iterations);
  const double tail = std::min(static_cast<double>(at_or_below) / iters, static_cast<double>(at_or_above) / iters);
  r.p_value = std::clamp(2.0 * tail, 0.0, 1.0);
  r.significant = r.p_value < opts.alpha;
  r.iterations = opts.iterations;
  r.sample_size = opts.sample_size;
  r.seed = opts.seed;
  return r;
}

inline BootstrapReport bootstrap_compare(const std::vector<double>& a, const std::vector<double>& b,
                                         const BootstrapOptions& opts, std::string metric = "") {
  return bootstrap_compare(std::span<const double>(a), std::span<const double>(b), opts, std::move(metric));
}

inline void to_json(nlohmann::json& j, const BootstrapReport& r) {
  j = nlohmann::json{{"metric", r.metric},         {"mean_diff", r.mean_diff},     {"ci_low", r.ci_low},
                     {"ci_high", r.ci_high},       {"p_value", r.p_value},         {"significant", r.significant},
                     {"iterations", r.iterations}, {"sample_size", r.sample_size}, {"seed", r.seed}};
}

inline void from_json(const nlohmann::json& j, BootstrapReport& r) {
  j.at("metric").get_to(r.metric);
  j.at("mean_diff").get_to(r.mean_diff);
  j.at("ci_low").get_to(r.ci_low);
  j.at("ci_high").get_to(r.ci_high);
  j.at("p_value").get_to(r.p_value);
  j.at("significant").get_to(r.significant);
  j.at("iterations").get_to(r.iterations);
  j.at("sample_size").get_to(r.sample_size);
  j.at("seed").get_to(r.seed);
}

}  // namespace ptzlm
