#pragma once

#include <algorithm>
#include <span>
#include <utility>
#include <vector>

#include "ptzlm/geometry.hpp"

namespace ptzlm {

inline double iou(const AngularRect& a, const AngularRect& b) {
  const auto inter = intersection(a, b);
  if (!inter) return 0.0;
  const double i = inter->area();
  const double u = a.area() + b.area() - i;
  return u > 0.0 ? std::clamp(i / u, 0.0, 1.0) : 0.0;
}

/// Exact area of a union of rectangles by coordinate-compression sweep over
/// pan, merging tilt intervals within each slab.
inline double union_area(std::span<const AngularRect> rects) {
  if (rects.empty()) return 0.0;
  std::vector<double> xs;
  xs.reserve(rects.size() * 2);
  for (const auto& r : rects) {
    xs.push_back(r.pan_min);
    xs.push_back(r.pan_max);
  }
  std::sort(xs.begin(), xs.end());
  xs.erase(std::unique(xs.begin(), xs.end()), xs.end());

  double total = 0.0;
  std::vector<std::pair<double, double>> spans;
  for (std::size_t s = 0; s + 1 < xs.size(); ++s) {
    const double x0 = xs[s], x1 = xs[s + 1];
    spans.clear();
    for (const auto& r : rects)
      if (r.pan_min <= x0 && r.pan_max >= x1 && r.tilt_min < r.tilt_max) spans.emplace_back(r.tilt_min, r.tilt_max);
    if (spans.empty()) continue;
    std::sort(spans.begin(), spans.end());
    double covered = 0.0;
    double lo = spans[0].first, hi = spans[0].second;
    for (std::size_t k = 1; k < spans.size(); ++k) {
      if (spans[k].first > hi) {
        covered += hi - lo;
        lo = spans[k].first;
        hi = spans[k].second;
      } else {
        hi = std::max(hi, spans[k].second);
      }
    }
    covered += hi - lo;
    total += covered * (x1 - x0);
  }
  return total;
}

inline double union_area(const std::vector<AngularRect>& rects) {
  return union_area(std::span<const AngularRect>(rects.data(), rects.size()));
}

/// Frame-by-frame IOU averaged over max(N_model, N_expert) steps. The shorter
/// sequence holds its last frame. Both empty scores 1, one empty scores 0.
inline double bma(std::span<const AngularRect> model, std::span<const AngularRect> expert) {
  if (model.empty() && expert.empty()) return 1.0;
  if (model.empty() || expert.empty()) return 0.0;
  const std::size_t n = std::max(model.size(), expert.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    sum += iou(model[std::min(i, model.size() - 1)], expert[std::min(i, expert.size() - 1)]);
  return std::clamp(sum / static_cast<double>(n), 0.0, 1.0);
}

/// IOU of the regions swept by each sequence, via |A∩B| = |A| + |B| - |A∪B|.
inline double aa(std::span<const AngularRect> model, std::span<const AngularRect> expert) {
  if (model.empty() && expert.empty()) return 1.0;
  if (model.empty() || expert.empty()) return 0.0;
  std::vector<AngularRect> both(model.begin(), model.end());
  both.insert(both.end(), expert.begin(), expert.end());
  const double a = union_area(model);
  const double b = union_area(expert);
  const double u = union_area(std::span<const AngularRect>(both));
  if (!(u > 0.0)) return 0.0;
  return std::clamp((a + b - u) / u, 0.0, 1.0);
}

inline double bma(const std::vector<AngularRect>& model, const std::vector<AngularRect>& expert) {
  return bma(std::span<const AngularRect>(model), std::span<const AngularRect>(expert));
}

inline double aa(const std::vector<AngularRect>& model, const std::vector<AngularRect>& expert) {
  return aa(std::span<const AngularRect>(model), std::span<const AngularRect>(expert));
}

}  // namespace ptzlm
