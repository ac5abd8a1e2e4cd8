#include "acrst/filter.hpp"

#include <algorithm>
#include <cmath>

#include "acrst/error.hpp"

namespace acrst {

double ImageLevelLabel::activation(int class_id) const {
  if (class_id < 1 || static_cast<std::size_t>(class_id) > activations.size()) {
    throw ArgumentError("class id " + std::to_string(class_id) + " has no activation");
  }
  return activations[static_cast<std::size_t>(class_id - 1)];
}

const char* to_string(FilterMode mode) noexcept {
  switch (mode) {
    case FilterMode::one_stage: return "one_stage";
    case FilterMode::two_stage_filtering: return "two_stage_filtering";
    case FilterMode::two_stage_mining: return "two_stage_mining";
  }
  return "unknown";
}

FilterMode filter_mode_from_string(std::string_view name) {
  if (name == "one_stage") return FilterMode::one_stage;
  if (name == "two_stage_filtering") return FilterMode::two_stage_filtering;
  if (name == "two_stage_mining") return FilterMode::two_stage_mining;
  throw ArgumentError("unknown filter mode \"" + std::string(name) + "\"");
}

void validate(const FilterConfig& cfg) {
  const auto unit = [](double v) { return v >= 0.0 && v <= 1.0; };
  if (!unit(cfg.tau_cls)) throw ArgumentError("tau_cls must lie in [0,1]");
  if (!unit(cfg.tau_ml)) throw ArgumentError("tau_ml must lie in [0,1]");
}

std::vector<Prediction> two_stage_filter(std::span<const Prediction> preds,
                                         const ImageLevelLabel& v, const FilterConfig& cfg) {
  validate(cfg);
  if (cfg.mode == FilterMode::two_stage_mining) {
    throw ArgumentError("two_stage_filter does not handle mining mode; use two_stage_mining");
  }
  std::vector<Prediction> out;
  for (const auto& p : preds) {
    if (p.score < cfg.tau_cls) continue;
    if (cfg.mode == FilterMode::two_stage_filtering && v.activation(p.class_id) < cfg.tau_ml) continue;
    out.push_back(p);
  }
  return out;
}

std::vector<Prediction> two_stage_mining(std::span<const Prediction> preds,
                                         const ImageLevelLabel& v, const FilterConfig& cfg) {
  validate(cfg);
  std::vector<Prediction> out;
  std::copy_if(preds.begin(), preds.end(), std::back_inserter(out), [&](const Prediction& p) {
    return p.score >= cfg.tau_cls || v.activation(p.class_id) >= cfg.tau_ml;
  });
  return out;
}

std::vector<Prediction> apply_filter(std::span<const Prediction> preds, const ImageLevelLabel& v,
                                     const FilterConfig& cfg) {
  if (cfg.mode == FilterMode::two_stage_mining) return two_stage_mining(preds, v, cfg);
  return two_stage_filter(preds, v, cfg);
}

ImageLevelLabel oracle_image_labels(const ImageRecord& record, int num_classes, OracleNoise noise,
                                    Rng& rng, double tau_ml) {
  const auto unit = [](double r) { return r >= 0.0 && r <= 1.0; };
  if (!unit(noise.fn_rate) || !unit(noise.fp_rate)) {
    throw ArgumentError("oracle flip rates must lie in [0,1]");
  }
  std::vector<bool> present(static_cast<std::size_t>(num_classes), false);
  for (const auto& inst : record.ground_truth) {
    if (inst.class_id >= 1 && inst.class_id <= num_classes) present[inst.class_id - 1] = true;
  }
  ImageLevelLabel label{record.id, std::vector<double>(present.size())};
  for (std::size_t k = 0; k < present.size(); ++k) {
    const double flip = uniform(rng);
    const bool high = present[k] ? flip >= noise.fn_rate : flip < noise.fp_rate;
    label.activations[k] = high ? uniform(rng, 0.6, 1.0) : uniform(rng, 0.0, tau_ml);
  }
  return label;
}

double focal_bce(double p, bool y, double gamma) {
  p = std::clamp(p, 1e-7, 1.0 - 1e-7);
  if (y) return -std::pow(1.0 - p, gamma) * std::log(p);
  return -std::pow(p, gamma) * std::log(1.0 - p);
}

}  // namespace acrst
