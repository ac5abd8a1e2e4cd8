#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "acrst/random.hpp"
#include "acrst/types.hpp"

namespace acrst {

/// Image-level class activations, `activations[k-1]` for class k.
struct ImageLevelLabel {
  ImageId image_id = 0;
  std::vector<double> activations;

  double activation(int class_id) const;
};

enum class FilterMode { one_stage, two_stage_filtering, two_stage_mining };

const char* to_string(FilterMode mode) noexcept;
FilterMode filter_mode_from_string(std::string_view name);

struct FilterConfig {
  double tau_cls = 0.7;
  double tau_ml = 0.2;
  FilterMode mode = FilterMode::two_stage_filtering;
};

void validate(const FilterConfig& cfg);

/// Score threshold, then (two_stage_filtering) drop classes whose image-level
/// activation is below tau_ml. Order is preserved. Throws ArgumentError when
/// called in mining mode.
std::vector<Prediction> two_stage_filter(std::span<const Prediction> preds,
                                         const ImageLevelLabel& v, const FilterConfig& cfg);

/// Keeps predictions passing either the score or the activation threshold.
std::vector<Prediction> two_stage_mining(std::span<const Prediction> preds,
                                         const ImageLevelLabel& v, const FilterConfig& cfg);

/// Dispatches on cfg.mode.
std::vector<Prediction> apply_filter(std::span<const Prediction> preds, const ImageLevelLabel& v,
                                     const FilterConfig& cfg);

/// Error rates of the simulated image-level classifier.
struct OracleNoise {
  double fn_rate = 0.1;
  double fp_rate = 0.1;
};

/// Stand-in for a multi-label classifier: classes present in the record's
/// ground truth activate in [0.6,1.0] unless flipped with probability
/// fn_rate (then [0,tau_ml)); absent classes activate in [0,tau_ml) unless
/// flipped with probability fp_rate.
ImageLevelLabel oracle_image_labels(const ImageRecord& record, int num_classes, OracleNoise noise,
                                    Rng& rng, double tau_ml = 0.2);

/// Focal binary cross-entropy of probability p against label y; p is clamped
/// to [1e-7, 1-1e-7].
double focal_bce(double p, bool y, double gamma = 2.0);

}  // namespace acrst
