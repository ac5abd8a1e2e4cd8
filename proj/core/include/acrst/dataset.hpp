#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "acrst/types.hpp"

namespace acrst {

struct Category {
  std::int64_t source_id = 0;  // id in the ingested document
  std::string name;

  friend bool operator==(const Category&, const Category&) = default;
};

/// A set of annotated images over K contiguous classes 1..K.
///
/// Images flagged unlabeled keep their ground truth for evaluation only; use
/// `training_view()` to obtain the copy the training loop is allowed to see.
struct Dataset {
  std::vector<ImageRecord> images;
  std::vector<Category> categories;  // categories[k-1] describes class k
  std::vector<bool> labeled;         // parallel to images

  int num_classes() const noexcept { return static_cast<int>(categories.size()); }
  std::size_t size() const noexcept { return images.size(); }
  std::size_t num_labeled() const noexcept;
  std::size_t num_unlabeled() const noexcept { return size() - num_labeled(); }
  std::size_t num_instances() const noexcept;

  /// Copy with ground truth removed from every unlabeled image.
  Dataset training_view() const;

  friend bool operator==(const Dataset&, const Dataset&) = default;
};

/// Parses a COCO-style instances document (images / annotations / categories).
/// Category ids are remapped to 1..K in order of appearance. Every image is
/// flagged labeled. Throws ParseError on malformed JSON and ValidationError on
/// dangling references or invalid boxes.
Dataset parse_coco_annotations(std::string_view text);

/// Writes `dataset` back in the same schema using the stored source category ids.
std::string serialize_coco(const Dataset& dataset);

/// Seeded uniform image-level split. `fraction` must lie strictly inside (0,1).
/// Returns (labeled, unlabeled); the unlabeled part keeps hidden ground truth.
std::pair<Dataset, Dataset> split_standard(const Dataset& dataset, double fraction,
                                           std::uint64_t seed);

/// Per-class instance counts; index k-1 holds class k.
std::vector<std::int64_t> class_counts(const Dataset& dataset, bool labeled_only);

}  // namespace acrst
