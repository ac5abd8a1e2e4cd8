#pragma once

#include <vector>

namespace acrst {

/// Per-class crop-sampling probabilities. `mu[k-1]` is the probability of
/// drawing class k; `beta` records the exponent that produced it (0 for
/// distributions not derived from pseudo recall).
struct SamplingDistribution {
  std::vector<double> mu;
  double beta = 0.0;

  static SamplingDistribution uniform(int num_classes);
  static SamplingDistribution one_hot(int num_classes, int class_id);
};

}  // namespace acrst
