#pragma once

#include <cstdint>

#include "acrst/dataset.hpp"

namespace acrst {

/// Parameters of the generated long-tailed detection dataset.
struct SyntheticConfig {
  int num_images = 200;
  int num_classes = 10;
  double width = 640.0;
  double height = 480.0;
  int min_instances = 1;
  int max_instances = 6;
  double zipf_exponent = 1.2;  // class k has weight 1/k^s
  double min_box_fraction = 0.08;  // box side relative to the image side
  double max_box_fraction = 0.35;
  std::uint64_t seed = 1;
};

/// Generates a dataset with skewed class frequencies. All images are flagged
/// labeled; categories are named "class_1".."class_K" with source ids 1..K.
Dataset make_synthetic_dataset(const SyntheticConfig& cfg);

}  // namespace acrst
