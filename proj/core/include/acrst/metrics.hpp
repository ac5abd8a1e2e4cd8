#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "acrst/types.hpp"

namespace acrst {

/// Intersection over union; 0 for disjoint boxes.
double iou(const BBox& a, const BBox& b) noexcept;

struct MatchPair {
  std::size_t pred = 0;
  std::size_t gt = 0;
  double iou = 0.0;

  friend bool operator==(const MatchPair&, const MatchPair&) = default;
};

struct MatchResult {
  std::vector<MatchPair> pairs;  // in the order predictions claimed them
  std::vector<std::size_t> unmatched_preds;
  std::vector<std::size_t> unmatched_gts;
};

/// Strict ordering used wherever predictions are ranked: descending score,
/// then class id, then box coordinates. Makes ranking independent of input
/// order.
bool ranks_before(const Prediction& a, const Prediction& b) noexcept;

/// Greedy one-to-one matching. Predictions are visited in rank order and each
/// claims the unclaimed ground truth of highest IoU (lowest index on ties)
/// with IoU >= iou_thr, restricted to the same class when class_aware.
MatchResult match_greedy(std::span<const Prediction> preds, std::span<const Instance> gts,
                         double iou_thr, bool class_aware);

struct PseudoQuality {
  double accuracy = 1.0;
  double recall = 1.0;
};

/// Class-aware matching at iou_thr. Accuracy is 1 when there are no
/// predictions; recall is 1 when there is no ground truth.
PseudoQuality pseudo_quality(std::span<const Prediction> preds, std::span<const Instance> gts,
                             double iou_thr = 0.5);

/// Sums matched/total counts over several images before dividing.
struct QualityCounts {
  std::int64_t matched_preds = 0;
  std::int64_t total_preds = 0;
  std::int64_t matched_gts = 0;
  std::int64_t total_gts = 0;
  double iou_sum = 0.0;

  void add(std::span<const Prediction> preds, std::span<const Instance> gts, double iou_thr);
  PseudoQuality quality() const noexcept;
  double mean_iou() const noexcept;  // 0 when nothing matched
};

/// Number of foreground and background target assignments of one training image.
struct TargetAssignment {
  std::int64_t foreground = 0;
  std::int64_t background = 0;
};

/// Fixed proposal budget per image; each foreground instance claims
/// `proposals_per_instance` proposals (capped at the budget) and the rest are
/// background.
struct ProposalModel {
  int budget = 256;
  int proposals_per_instance = 16;

  TargetAssignment assign(std::size_t num_instances) const noexcept;
};

/// foreground / (foreground + background). Throws ArgumentError when both are 0.
double fg_ratio(TargetAssignment targets);

/// KL(p || q) in nats over epsilon-smoothed, normalized count vectors.
double class_kld(std::span<const std::int64_t> p_counts, std::span<const std::int64_t> q_counts,
                 double epsilon = 1e-6);

struct MiouResult {
  double value = 0.0;
  bool has_matches = false;
};

/// Mean IoU over class-aware greedy matches.
MiouResult box_miou(std::span<const Prediction> preds, std::span<const Instance> gts,
                    double iou_thr = 0.5);

/// Predictions and ground truth of one evaluation image.
struct EvalImage {
  std::vector<Prediction> preds;
  std::vector<Instance> gts;
};

/// Class-averaged AP with 101-point interpolated precision, over classes that
/// have at least one ground-truth instance. 0 when there is no ground truth.
double average_precision(std::span<const EvalImage> images, double iou_thr);

/// Mean of average_precision over IoU thresholds 0.50:0.05:0.95.
double average_precision_50_95(std::span<const EvalImage> images);

}  // namespace acrst
