#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "acrst/cropbank.hpp"
#include "acrst/random.hpp"
#include "acrst/sampling.hpp"
#include "acrst/types.hpp"

namespace acrst {

/// Pseudo recall assigned to classes that have no labeled instances. These
/// classes are excluded from the normalizing sum and receive the minimum
/// sampling weight.
inline constexpr double kAbsentClassRecall = 1e9;

struct ClassStats {
  std::vector<std::int64_t> pseudo_counts;   // N_k^u
  std::vector<std::int64_t> labeled_counts;  // N_k^l
  double ratio = 1.0;                        // unlabeled / labeled image count
};

/// PR_k = N_k^u / (r * N_k^l). Throws ArgumentError for r <= 0 or
/// mismatched vector sizes.
std::vector<double> pseudo_recall(const ClassStats& stats);

/// Inverse-rank sampling distribution: classes are sorted by descending pseudo
/// recall (ties: lower class id first) and the class at rank i takes the
/// normalized recall found at the mirrored rank, raised to `beta`. The raw
/// weights are then normalized to sum to one. All-zero recall falls back to
/// the uniform distribution.
SamplingDistribution affr_distribution(std::span<const double> pr, double beta);

/// Fraction of `inst` not covered by the union of `occluders`, computed
/// exactly by coordinate compression.
double visible_fraction(const BBox& inst, std::span<const BBox> occluders);

/// Crop-and-paste settings for foreground-background rebalancing.
struct PasteConfig {
  int crops_per_image = 2;
  double rescale_min = 0.5;  // fraction of the destination's shorter side
  double rescale_max = 1.0;
  double occlusion_threshold = 0.0;
  double beta = 2.0;
};

struct PastePlacement {
  CropEntry crop;
  BBox target_bbox;
  double scale = 1.0;  // target extent / crop extent
};

struct MergedInstance {
  Instance instance;
  double visibility = 1.0;
  bool pasted = false;

  friend bool operator==(const MergedInstance&, const MergedInstance&) = default;
};

/// Merges base annotations with pasted objects. Pasted objects sit on top and
/// are always kept (later pastes occlude earlier ones in their visibility).
/// A base instance survives when it is not fully occluded and its visible
/// fraction is at least `occlusion_threshold`. Base survivors come first, in
/// input order, followed by the pasted objects in placement order.
std::vector<MergedInstance> merge_annotations(std::span<const Instance> base,
                                              std::span<const PastePlacement> pasted,
                                              double occlusion_threshold);

struct MixedRecord {
  ImageRecord base;
  std::vector<PastePlacement> placements;
  std::vector<MergedInstance> merged_annotations;
  int skipped_crops = 0;

  std::size_t dropped_base() const noexcept;
};

/// Pastes `crops` at uniformly random in-bounds positions of `record`. Crops
/// that do not fit are rescaled so their longer side becomes a uniform
/// fraction in [rescale_min, rescale_max] of the image's shorter side; crops
/// that still do not fit are skipped with a warning.
MixedRecord fbr_mix(const ImageRecord& record, std::span<const CropEntry> crops, Rng& rng,
                    const PasteConfig& config);

void validate(const PasteConfig& config);

}  // namespace acrst
