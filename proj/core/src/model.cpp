#include "acrst/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "acrst/error.hpp"

namespace acrst {
namespace {

bool unit(double v) { return v >= 0.0 && v <= 1.0; }

double clamp01(double v) { return std::clamp(v, 0.0, 1.0); }

// Index drawn proportionally to `weights`, skipping `exclude` (1-based, 0 for none).
// Falls back to uniform over the admissible classes when all weights are zero.
int draw_class(const std::vector<double>& weights, int num_classes, int exclude, Rng& rng) {
  double total = 0.0;
  for (int k = 1; k <= num_classes; ++k) {
    if (k != exclude && k - 1 < static_cast<int>(weights.size())) total += std::max(0.0, weights[k - 1]);
  }
  if (!(total > 0.0)) {
    const int options = num_classes - (exclude > 0 ? 1 : 0);
    int pick = static_cast<int>(uniform_index(rng, static_cast<std::size_t>(options))) + 1;
    if (exclude > 0 && pick >= exclude) ++pick;
    return pick;
  }
  const double u = uniform(rng, 0.0, total);
  double acc = 0.0;
  int last = 0;
  for (int k = 1; k <= num_classes; ++k) {
    if (k == exclude || k - 1 >= static_cast<int>(weights.size())) continue;
    const double w = std::max(0.0, weights[k - 1]);
    if (w <= 0.0) continue;
    last = k;
    acc += w;
    if (u < acc) return k;
  }
  return last;
}

BBox ensure_valid(BBox b, double width, double height) {
  b = clip(b, width, height);
  if (b.w < 1.0) {
    b.w = std::min(1.0, width);
    b.x = std::min(b.x, width - b.w);
  }
  if (b.h < 1.0) {
    b.h = std::min(1.0, height);
    b.y = std::min(b.y, height - b.h);
  }
  return b;
}

}  // namespace

void validate(const DetectorParams& p) {
  if (p.recall_skill.empty()) throw ArgumentError("detector needs at least one class");
  if (!std::all_of(p.recall_skill.begin(), p.recall_skill.end(), unit)) {
    throw ArgumentError("recall_skill entries must lie in [0,1]");
  }
  if (!unit(p.confusion_rate)) throw ArgumentError("confusion_rate must lie in [0,1]");
  if (!unit(p.loc_skill)) throw ArgumentError("loc_skill must lie in [0,1]");
  if (!unit(p.partial_rate)) throw ArgumentError("partial_rate must lie in [0,1]");
  if (!(p.fp_rate >= 0.0)) throw ArgumentError("fp_rate must be non-negative");
  if (!(p.confidence_sharpness > 0.0)) throw ArgumentError("confidence_sharpness must be positive");
  if (!p.class_prior.empty() && p.class_prior.size() != p.recall_skill.size()) {
    throw ArgumentError("class_prior size must match recall_skill");
  }
}

DetectorParams ema_update(const DetectorParams& teacher, const DetectorParams& student,
                          double alpha) {
  if (!unit(alpha)) throw ArgumentError("ema alpha must lie in [0,1]");
  if (teacher.recall_skill.size() != student.recall_skill.size() ||
      teacher.class_prior.size() != student.class_prior.size()) {
    throw ArgumentError("teacher and student parameter shapes differ");
  }
  const auto mix = [alpha](double t, double s) { return alpha * t + (1.0 - alpha) * s; };
  DetectorParams out = teacher;
  for (std::size_t k = 0; k < out.recall_skill.size(); ++k) {
    out.recall_skill[k] = clamp01(mix(teacher.recall_skill[k], student.recall_skill[k]));
  }
  for (std::size_t k = 0; k < out.class_prior.size(); ++k) {
    out.class_prior[k] = std::max(0.0, mix(teacher.class_prior[k], student.class_prior[k]));
  }
  out.confusion_rate = clamp01(mix(teacher.confusion_rate, student.confusion_rate));
  out.loc_skill = clamp01(mix(teacher.loc_skill, student.loc_skill));
  out.partial_rate = clamp01(mix(teacher.partial_rate, student.partial_rate));
  out.fp_rate = std::max(0.0, mix(teacher.fp_rate, student.fp_rate));
  out.confidence_sharpness =
      std::max(1e-9, mix(teacher.confidence_sharpness, student.confidence_sharpness));
  return out;
}

double base_confidence(double skill, double sharpness) noexcept {
  return 1.0 / (1.0 + std::exp(-sharpness * (skill - 0.5)));
}

std::vector<Prediction> synth_detect(const DetectorParams& params, const ImageRecord& record,
                                     Rng& rng) {
  const int num_classes = params.num_classes();
  std::vector<Prediction> out;
  for (const auto& gt : record.ground_truth) {
    if (gt.class_id < 1 || gt.class_id > num_classes) continue;
    const double skill = params.recall_skill[gt.class_id - 1];
    if (!(uniform(rng) < skill)) continue;

    BBox box = gt.bbox;
    if (uniform(rng) < params.partial_rate) {
      const double area_frac = uniform(rng, 0.4, 0.7);
      const double wf = uniform(rng, area_frac, 1.0);
      const double hf = area_frac / wf;
      const double w = gt.bbox.w * wf;
      const double h = gt.bbox.h * hf;
      box = BBox{gt.bbox.x + uniform(rng, 0.0, gt.bbox.w - w), gt.bbox.y + uniform(rng, 0.0, gt.bbox.h - h), w, h};
    } else {
      const double sigma = (1.0 - params.loc_skill) * 0.1 * std::min(gt.bbox.w, gt.bbox.h);
      if (sigma > 0.0) {
        box.x += sigma * normal(rng);
        box.y += sigma * normal(rng);
        box.w = std::max(1.0, box.w + sigma * normal(rng));
        box.h = std::max(1.0, box.h + sigma * normal(rng));
      }
    }

    int cls = gt.class_id;
    if (num_classes > 1 && uniform(rng) < params.confusion_rate) {
      cls = draw_class(params.class_prior, num_classes, gt.class_id, rng);
    }
    const double score = std::clamp(
        base_confidence(skill, params.confidence_sharpness) + uniform(rng, -0.1, 0.1), 0.0, 1.0);
    out.push_back(Prediction{cls, ensure_valid(box, record.width, record.height), score});
  }

  const int n_fp = poisson(rng, params.fp_rate);
  for (int i = 0; i < n_fp; ++i) {
    const int cls = draw_class(params.class_prior, num_classes, 0, rng);
    const double w = record.width * uniform(rng, 0.05, 0.35);
    const double h = record.height * uniform(rng, 0.05, 0.35);
    const BBox box{uniform(rng, 0.0, record.width - w), uniform(rng, 0.0, record.height - h), w, h};
    out.push_back(Prediction{cls, box, uniform(rng, 0.3, 0.8)});
  }
  return out;
}

DetectorParams student_update(const DetectorParams& params, const BatchSignal& signal,
                              const UpdateRule& rule) {
  if (!(rule.lr > 0.0)) throw ArgumentError("learning rate must be positive");
  if (signal.class_exposure.size() != params.recall_skill.size()) {
    throw ArgumentError("exposure vector size does not match the number of classes");
  }
  DetectorParams out = params;
  const double exposure_sum = std::max<double>(
      1.0, static_cast<double>(std::accumulate(signal.class_exposure.begin(),
                                               signal.class_exposure.end(), std::int64_t{0})));
  for (std::size_t k = 0; k < out.recall_skill.size(); ++k) {
    const double e = static_cast<double>(std::max<std::int64_t>(0, signal.class_exposure[k])) / exposure_sum;
    out.recall_skill[k] = clamp01(out.recall_skill[k] + rule.lr * e * (1.0 - out.recall_skill[k]));
  }

  const double total = std::max<double>(1.0, static_cast<double>(signal.total_instances));
  const double reg = std::clamp(static_cast<double>(signal.reg_targets) / total, 0.0, 1.0);
  const double noise = std::clamp(static_cast<double>(signal.noisy_targets) / total, 0.0, 1.0);
  const double decay = std::clamp(1.0 - rule.lr * reg, 0.0, 1.0);

  if (reg > 0.0) {
    out.loc_skill = clamp01(out.loc_skill + rule.lr * reg * (1.0 - out.loc_skill));
    if (out.confusion_rate > rule.confusion_floor) {
      out.confusion_rate = rule.confusion_floor + (out.confusion_rate - rule.confusion_floor) * decay;
    }
    if (out.partial_rate > rule.partial_floor) {
      out.partial_rate = rule.partial_floor + (out.partial_rate - rule.partial_floor) * decay;
    }
  }
  if (noise > 0.0) {
    out.confusion_rate = clamp01(out.confusion_rate + std::min(1.0, rule.lr * rule.noise_gain * noise) *
                                                          (1.0 - out.confusion_rate));
  }
  return out;
}

std::array<double, 4> box_delta(const BBox& pred, const BBox& target) noexcept {
  const double pcx = pred.x + 0.5 * pred.w;
  const double pcy = pred.y + 0.5 * pred.h;
  const double tcx = target.x + 0.5 * target.w;
  const double tcy = target.y + 0.5 * target.h;
  return {(pcx - tcx) / target.w, (pcy - tcy) / target.h, std::log(pred.w / target.w),
          std::log(pred.h / target.h)};
}

double smooth_l1(double x, double beta) noexcept {
  const double a = std::abs(x);
  return a < beta ? 0.5 * a * a / beta : a - 0.5 * beta;
}

LossBreakdown loss_breakdown(std::span<const TrainingPair> pairs, LossMode mode) {
  LossBreakdown loss;
  if (pairs.empty()) return loss;
  constexpr double kEps = 1e-12;

  double obj = 0.0;
  double cls = 0.0;
  double reg = 0.0;
  std::size_t n_reg = 0;
  for (const auto& p : pairs) {
    const double o = std::clamp(p.objectness, 0.0, 1.0);
    obj += p.foreground ? -std::log(std::max(o, kEps)) : -std::log(std::max(1.0 - o, kEps));
    cls += -std::log(std::max(std::clamp(p.true_class_prob, 0.0, 1.0), kEps));
    const bool regress = p.foreground && (mode == LossMode::supervised ||
                                          (mode == LossMode::unsup_selective && p.pasted));
    if (regress) {
      for (double d : p.box_delta) reg += smooth_l1(d);
      ++n_reg;
    }
  }
  const auto n = static_cast<double>(pairs.size());
  loss.rpn_cls = obj / n;
  loss.roi_cls = cls / n;
  if (mode != LossMode::unsup_cls_only && n_reg > 0) {
    loss.rpn_reg = loss.roi_reg = reg / static_cast<double>(n_reg);
  }
  loss.total = loss.rpn_cls + loss.rpn_reg + loss.roi_cls + loss.roi_reg;
  return loss;
}

}  // namespace acrst
