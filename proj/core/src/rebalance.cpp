#include "acrst/rebalance.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "acrst/error.hpp"
#include "acrst/logging.hpp"

namespace acrst {

std::vector<double> pseudo_recall(const ClassStats& stats) {
  if (!(stats.ratio > 0.0)) throw ArgumentError("pseudo recall needs a positive data ratio");
  if (stats.pseudo_counts.size() != stats.labeled_counts.size()) {
    throw ArgumentError("pseudo and labeled count vectors differ in length");
  }
  std::vector<double> pr(stats.labeled_counts.size());
  for (std::size_t k = 0; k < pr.size(); ++k) {
    if (stats.labeled_counts[k] <= 0) {
      pr[k] = kAbsentClassRecall;
    } else {
      pr[k] = static_cast<double>(stats.pseudo_counts[k]) /
              (stats.ratio * static_cast<double>(stats.labeled_counts[k]));
    }
  }
  return pr;
}

SamplingDistribution affr_distribution(std::span<const double> pr, double beta) {
  if (beta < 0.0) throw ArgumentError("beta must be non-negative");
  const int num_classes = static_cast<int>(pr.size());
  for (double v : pr) {
    if (!(v >= 0.0)) throw ArgumentError("pseudo recall values must be non-negative");
  }

  std::vector<std::size_t> regular;
  double sum = 0.0;
  for (std::size_t k = 0; k < pr.size(); ++k) {
    if (pr[k] >= kAbsentClassRecall) continue;
    regular.push_back(k);
    sum += pr[k];
  }
  if (regular.empty() || !(sum > 0.0)) {
    log_warning("pseudo recall is zero for every class; using uniform crop sampling");
    auto d = SamplingDistribution::uniform(num_classes);
    d.beta = beta;
    return d;
  }

  // Descending by recall; stable sort over ascending ids gives the tie-break.
  std::stable_sort(regular.begin(), regular.end(),
                   [&](std::size_t a, std::size_t b) { return pr[a] > pr[b]; });

  std::vector<double> raw(pr.size(), 0.0);
  const std::size_t n = regular.size();
  double min_raw = INFINITY;
  for (std::size_t rank = 0; rank < n; ++rank) {
    const double mirrored = pr[regular[n - 1 - rank]];
    raw[regular[rank]] = std::pow(mirrored / sum, beta);
    min_raw = std::min(min_raw, raw[regular[rank]]);
  }
  for (std::size_t k = 0; k < pr.size(); ++k) {
    if (pr[k] >= kAbsentClassRecall) raw[k] = min_raw;
  }

  const double total = std::accumulate(raw.begin(), raw.end(), 0.0);
  SamplingDistribution d{std::vector<double>(pr.size()), beta};
  for (std::size_t k = 0; k < pr.size(); ++k) d.mu[k] = raw[k] / total;
  return d;
}

double visible_fraction(const BBox& inst, std::span<const BBox> occluders) {
  const double area = inst.area();
  if (!(area > 0.0)) throw ArgumentError("visible_fraction needs a box with positive area");

  std::vector<BBox> clipped;
  std::vector<double> xs{inst.x, inst.right()};
  std::vector<double> ys{inst.y, inst.bottom()};
  for (const auto& o : occluders) {
    const double x0 = std::max(o.x, inst.x);
    const double y0 = std::max(o.y, inst.y);
    const double x1 = std::min(o.right(), inst.right());
    const double y1 = std::min(o.bottom(), inst.bottom());
    if (x1 <= x0 || y1 <= y0) continue;
    clipped.push_back(BBox{x0, y0, x1 - x0, y1 - y0});
    xs.insert(xs.end(), {x0, x1});
    ys.insert(ys.end(), {y0, y1});
  }
  if (clipped.empty()) return 1.0;

  std::sort(xs.begin(), xs.end());
  xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
  std::sort(ys.begin(), ys.end());
  ys.erase(std::unique(ys.begin(), ys.end()), ys.end());

  double covered = 0.0;
  for (std::size_t i = 0; i + 1 < xs.size(); ++i) {
    const double cx = 0.5 * (xs[i] + xs[i + 1]);
    for (std::size_t j = 0; j + 1 < ys.size(); ++j) {
      const double cy = 0.5 * (ys[j] + ys[j + 1]);
      const bool hit = std::any_of(clipped.begin(), clipped.end(), [&](const BBox& c) {
        return cx > c.x && cx < c.right() && cy > c.y && cy < c.bottom();
      });
      if (hit) covered += (xs[i + 1] - xs[i]) * (ys[j + 1] - ys[j]);
    }
  }
  return std::clamp((area - covered) / area, 0.0, 1.0);
}

std::vector<MergedInstance> merge_annotations(std::span<const Instance> base,
                                              std::span<const PastePlacement> pasted,
                                              double occlusion_threshold) {
  if (!(occlusion_threshold >= 0.0 && occlusion_threshold <= 1.0)) {
    throw ArgumentError("occlusion_threshold must lie in [0,1]");
  }
  std::vector<BBox> rects;
  rects.reserve(pasted.size());
  for (const auto& p : pasted) rects.push_back(p.target_bbox);

  std::vector<MergedInstance> out;
  out.reserve(base.size() + pasted.size());
  for (const auto& inst : base) {
    const double vis = rects.empty() ? 1.0 : visible_fraction(inst.bbox, rects);
    if (vis > 0.0 && vis >= occlusion_threshold) out.push_back({inst, vis, false});
  }
  for (std::size_t i = 0; i < pasted.size(); ++i) {
    const auto later = std::span<const BBox>(rects).subspan(i + 1);
    const double vis = visible_fraction(rects[i], later);
    out.push_back({Instance{pasted[i].crop.class_id, rects[i], 0}, vis, true});
  }
  return out;
}

std::size_t MixedRecord::dropped_base() const noexcept {
  const auto kept = static_cast<std::size_t>(std::count_if(
      merged_annotations.begin(), merged_annotations.end(),
      [](const MergedInstance& m) { return !m.pasted; }));
  return base.ground_truth.size() - kept;
}

void validate(const PasteConfig& config) {
  if (config.crops_per_image < 0) throw ArgumentError("crops_per_image must be non-negative");
  if (!(config.rescale_min > 0.0) || config.rescale_max < config.rescale_min) {
    throw ArgumentError("rescale range must satisfy 0 < rescale_min <= rescale_max");
  }
  if (!(config.occlusion_threshold >= 0.0 && config.occlusion_threshold <= 1.0)) {
    throw ArgumentError("occlusion_threshold must lie in [0,1]");
  }
  if (config.beta < 0.0) throw ArgumentError("beta must be non-negative");
}

MixedRecord fbr_mix(const ImageRecord& record, std::span<const CropEntry> crops, Rng& rng,
                    const PasteConfig& config) {
  validate(config);
  if (!(record.width > 0.0 && record.height > 0.0)) {
    throw ArgumentError("fbr_mix needs an image with positive dimensions");
  }
  MixedRecord mixed{record, {}, {}, 0};
  const double shorter = std::min(record.width, record.height);
  const auto fits = [&](double w, double h) { return w <= record.width && h <= record.height; };

  for (const auto& crop : crops) {
    double w = crop.bbox.w;
    double h = crop.bbox.h;
    double scale = 1.0;
    if (!fits(w, h)) {
      const double longer = std::max(w, h);
      scale = uniform(rng, config.rescale_min, config.rescale_max) * shorter / longer;
      if (!fits(w * scale, h * scale)) scale = config.rescale_min * shorter / longer;
      if (!fits(w * scale, h * scale)) {
        log_warning("crop from image " + std::to_string(crop.source_image_id) +
                    " does not fit image " + std::to_string(record.id) + "; skipped");
        ++mixed.skipped_crops;
        continue;
      }
      w *= scale;
      h *= scale;
    }
    const double x = uniform(rng, 0.0, record.width - w);
    const double y = uniform(rng, 0.0, record.height - h);
    mixed.placements.push_back({crop, BBox{x, y, w, h}, scale});
  }

  mixed.merged_annotations =
      merge_annotations(record.ground_truth, mixed.placements, config.occlusion_threshold);
  for (auto& m : mixed.merged_annotations) {
    if (m.pasted) m.instance.source_image_id = record.id;
  }
  return mixed;
}

}  // namespace acrst
