#include "acrst/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <tuple>

#include "acrst/error.hpp"

namespace acrst {

double iou(const BBox& a, const BBox& b) noexcept {
  const double inter = intersection_area(a, b);
  if (inter <= 0.0) return 0.0;
  const double uni = a.area() + b.area() - inter;
  return uni > 0.0 ? std::min(1.0, inter / uni) : 0.0;
}

bool ranks_before(const Prediction& a, const Prediction& b) noexcept {
  return std::tie(b.score, a.class_id, a.bbox.x, a.bbox.y, a.bbox.w, a.bbox.h) <
         std::tie(a.score, b.class_id, b.bbox.x, b.bbox.y, b.bbox.w, b.bbox.h);
}

MatchResult match_greedy(std::span<const Prediction> preds, std::span<const Instance> gts,
                         double iou_thr, bool class_aware) {
  if (!(iou_thr > 0.0 && iou_thr <= 1.0)) throw ArgumentError("iou threshold must lie in (0,1]");
  std::vector<std::size_t> order(preds.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return ranks_before(preds[a], preds[b]); });

  MatchResult result;
  std::vector<bool> claimed(gts.size(), false);
  for (std::size_t pi : order) {
    const Prediction& p = preds[pi];
    double best = -1.0;
    std::size_t best_gt = gts.size();
    for (std::size_t gi = 0; gi < gts.size(); ++gi) {
      if (claimed[gi]) continue;
      if (class_aware && gts[gi].class_id != p.class_id) continue;
      const double v = iou(p.bbox, gts[gi].bbox);
      if (v >= iou_thr && v > best) {
        best = v;
        best_gt = gi;
      }
    }
    if (best_gt < gts.size()) {
      claimed[best_gt] = true;
      result.pairs.push_back({pi, best_gt, best});
    } else {
      result.unmatched_preds.push_back(pi);
    }
  }
  std::sort(result.unmatched_preds.begin(), result.unmatched_preds.end());
  for (std::size_t gi = 0; gi < gts.size(); ++gi) {
    if (!claimed[gi]) result.unmatched_gts.push_back(gi);
  }
  return result;
}

void QualityCounts::add(std::span<const Prediction> preds, std::span<const Instance> gts,
                        double iou_thr) {
  const MatchResult m = match_greedy(preds, gts, iou_thr, true);
  matched_preds += static_cast<std::int64_t>(m.pairs.size());
  matched_gts += static_cast<std::int64_t>(m.pairs.size());
  total_preds += static_cast<std::int64_t>(preds.size());
  total_gts += static_cast<std::int64_t>(gts.size());
  for (const auto& pair : m.pairs) iou_sum += pair.iou;
}

PseudoQuality QualityCounts::quality() const noexcept {
  PseudoQuality q;
  if (total_preds > 0) q.accuracy = static_cast<double>(matched_preds) / static_cast<double>(total_preds);
  if (total_gts > 0) q.recall = static_cast<double>(matched_gts) / static_cast<double>(total_gts);
  return q;
}

double QualityCounts::mean_iou() const noexcept {
  return matched_preds > 0 ? iou_sum / static_cast<double>(matched_preds) : 0.0;
}

PseudoQuality pseudo_quality(std::span<const Prediction> preds, std::span<const Instance> gts,
                             double iou_thr) {
  QualityCounts counts;
  counts.add(preds, gts, iou_thr);
  return counts.quality();
}

TargetAssignment ProposalModel::assign(std::size_t num_instances) const noexcept {
  const auto budget_l = static_cast<std::int64_t>(std::max(0, budget));
  const auto fg = std::min<std::int64_t>(
      budget_l, static_cast<std::int64_t>(num_instances) * std::max(0, proposals_per_instance));
  return {fg, budget_l - fg};
}

double fg_ratio(TargetAssignment targets) {
  if (targets.foreground < 0 || targets.background < 0) {
    throw ArgumentError("target counts must be non-negative");
  }
  const auto total = targets.foreground + targets.background;
  if (total == 0) throw ArgumentError("fg_ratio is undefined without training targets");
  return static_cast<double>(targets.foreground) / static_cast<double>(total);
}

double class_kld(std::span<const std::int64_t> p_counts, std::span<const std::int64_t> q_counts,
                 double epsilon) {
  if (!(epsilon > 0.0)) throw ArgumentError("kld smoothing epsilon must be positive");
  if (p_counts.size() != q_counts.size()) throw ArgumentError("count vectors differ in length");
  const double q_sum = std::accumulate(q_counts.begin(), q_counts.end(), 0.0);
  if (!(q_sum > 0.0)) throw ArgumentError("reference counts must not all be zero");
  const double p_sum = std::accumulate(p_counts.begin(), p_counts.end(), 0.0);

  const double n = static_cast<double>(p_counts.size());
  const double p_norm = p_sum + epsilon * n;
  const double q_norm = q_sum + epsilon * n;
  double kld = 0.0;
  for (std::size_t k = 0; k < p_counts.size(); ++k) {
    const double p = (static_cast<double>(p_counts[k]) + epsilon) / p_norm;
    const double q = (static_cast<double>(q_counts[k]) + epsilon) / q_norm;
    kld += p * std::log(p / q);
  }
  return std::max(0.0, kld);
}

MiouResult box_miou(std::span<const Prediction> preds, std::span<const Instance> gts,
                    double iou_thr) {
  QualityCounts counts;
  counts.add(preds, gts, iou_thr);
  return {counts.mean_iou(), counts.matched_preds > 0};
}

namespace {

struct Ranked {
  const Prediction* pred;
  std::size_t image;
  bool tp;
};

}  // namespace

double average_precision(std::span<const EvalImage> images, double iou_thr) {
  std::map<int, std::int64_t> gt_per_class;
  std::map<int, std::vector<Ranked>> ranked;
  for (std::size_t i = 0; i < images.size(); ++i) {
    const EvalImage& img = images[i];
    for (const auto& g : img.gts) ++gt_per_class[g.class_id];
    const MatchResult m = match_greedy(img.preds, img.gts, iou_thr, true);
    std::vector<bool> tp(img.preds.size(), false);
    for (const auto& pair : m.pairs) tp[pair.pred] = true;
    for (std::size_t p = 0; p < img.preds.size(); ++p) {
      ranked[img.preds[p].class_id].push_back({&img.preds[p], i, tp[p]});
    }
  }
  if (gt_per_class.empty()) return 0.0;

  double ap_sum = 0.0;
  for (const auto& [cls, n_gt] : gt_per_class) {
    auto& dets = ranked[cls];
    std::sort(dets.begin(), dets.end(), [](const Ranked& a, const Ranked& b) {
      if (ranks_before(*a.pred, *b.pred)) return true;
      if (ranks_before(*b.pred, *a.pred)) return false;
      return a.image < b.image;
    });
    std::vector<double> precision;
    std::vector<double> recall;
    std::int64_t tp = 0;
    for (std::size_t i = 0; i < dets.size(); ++i) {
      if (dets[i].tp) ++tp;
      precision.push_back(static_cast<double>(tp) / static_cast<double>(i + 1));
      recall.push_back(static_cast<double>(tp) / static_cast<double>(n_gt));
    }
    // Precision envelope: max precision at any recall to the right.
    for (std::size_t i = precision.size(); i-- > 1;) {
      precision[i - 1] = std::max(precision[i - 1], precision[i]);
    }
    double sum = 0.0;
    for (int r = 0; r <= 100; ++r) {
      const double level = r / 100.0;
      const auto it = std::lower_bound(recall.begin(), recall.end(), level - 1e-12);
      if (it != recall.end()) sum += precision[static_cast<std::size_t>(it - recall.begin())];
    }
    ap_sum += sum / 101.0;
  }
  return ap_sum / static_cast<double>(gt_per_class.size());
}

double average_precision_50_95(std::span<const EvalImage> images) {
  double sum = 0.0;
  for (int t = 0; t < 10; ++t) sum += average_precision(images, 0.5 + 0.05 * t);
  return sum / 10.0;
}

}  // namespace acrst
