#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "acrst/random.hpp"
#include "acrst/types.hpp"

namespace acrst {

/// Behavioral parameters standing in for detector weights. Teacher and
/// student each hold one; the teacher tracks the student by EMA.
struct DetectorParams {
  std::vector<double> recall_skill;  // per class, probability of detecting an instance
  double confusion_rate = 0.1;       // probability a detection carries a wrong class
  double loc_skill = 0.5;            // 1 - relative box-noise scale
  double partial_rate = 0.2;         // probability a detection is a truncated box
  double fp_rate = 0.5;              // expected background false positives per image
  double confidence_sharpness = 8.0;
  std::vector<double> class_prior;   // weights for wrong-class and false-positive labels

  int num_classes() const noexcept { return static_cast<int>(recall_skill.size()); }

  friend bool operator==(const DetectorParams&, const DetectorParams&) = default;
};

/// Checks every field against its range. Throws ArgumentError.
void validate(const DetectorParams& params);

/// teacher <- alpha * teacher + (1 - alpha) * student, field-wise, clamped
/// to each field's range.
DetectorParams ema_update(const DetectorParams& teacher, const DetectorParams& student,
                          double alpha);

/// Score a detection of a class with the given skill would receive before noise.
double base_confidence(double skill, double sharpness) noexcept;

/// Simulated detector pass over one image with (hidden) ground truth.
///
/// Each instance of class k is found with probability recall_skill[k]. Found
/// boxes are jittered with scale (1 - loc_skill) * 0.1 * min(w, h), or with
/// probability partial_rate replaced by a sub-rectangle covering 40-70% of
/// the instance. With probability confusion_rate the class is swapped for a
/// prior-weighted wrong class. Scores follow base_confidence of the true
/// class plus U(-0.1, 0.1) noise. Poisson(fp_rate) background boxes with
/// prior-weighted classes and U(0.3, 0.8) scores are appended.
std::vector<Prediction> synth_detect(const DetectorParams& params, const ImageRecord& record,
                                     Rng& rng);

/// Training signal gathered from one batch.
struct BatchSignal {
  std::vector<std::int64_t> class_exposure;  // clean targets per class
  std::int64_t reg_targets = 0;              // targets that carry a regression loss
  std::int64_t total_instances = 0;          // all targets in the batch
  std::int64_t noisy_targets = 0;            // targets whose label is wrong
};

struct UpdateRule {
  double lr = 0.1;
  double confusion_floor = 0.02;
  double partial_floor = 0.02;
  double noise_gain = 0.3;  // how strongly wrong labels raise the confusion rate
};

/// Saturating update driven by class exposure and regression supervision.
///
///   recall_k   += lr * e_k * (1 - recall_k),  e_k = exposure_k / max(1, sum exposure)
///   loc_skill  += lr * s * (1 - loc_skill),   s = reg_targets / max(1, total_instances)
///   confusion, partial decay toward their floors by (1 - lr * s)
///   confusion  += lr * noise_gain * n * (1 - confusion),  n = noisy / max(1, total)
DetectorParams student_update(const DetectorParams& params, const BatchSignal& signal,
                              const UpdateRule& rule);

enum class LossMode { supervised, unsup_cls_only, unsup_selective };

/// One matched (or unmatched) training target as seen by the loss.
struct TrainingPair {
  bool foreground = true;
  double objectness = 1.0;       // predicted foreground probability
  double true_class_prob = 1.0;  // probability assigned to the target class (background for bg pairs)
  std::array<double, 4> box_delta{};  // dx/w, dy/h, dlog w, dlog h
  bool pasted = false;                // instance came from the crop bank
};

struct LossBreakdown {
  double rpn_cls = 0.0;
  double rpn_reg = 0.0;
  double roi_cls = 0.0;
  double roi_reg = 0.0;
  double total = 0.0;
};

/// Normalized box deltas of `pred` relative to `target`.
std::array<double, 4> box_delta(const BBox& pred, const BBox& target) noexcept;

double smooth_l1(double x, double beta = 1.0) noexcept;

/// Mean binary objectness cross-entropy, mean (K+1)-way cross-entropy and
/// mean smooth-L1 box loss. unsup_cls_only zeroes both regression terms;
/// unsup_selective regresses only pasted foreground targets.
LossBreakdown loss_breakdown(std::span<const TrainingPair> pairs, LossMode mode);

}  // namespace acrst
