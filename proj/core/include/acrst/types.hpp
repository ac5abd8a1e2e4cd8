#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace acrst {

using ImageId = std::int64_t;

/// Axis-aligned box in pixel coordinates: top-left corner plus extent.
struct BBox {
  double x = 0.0;
  double y = 0.0;
  double w = 0.0;
  double h = 0.0;

  double area() const noexcept { return w * h; }
  double right() const noexcept { return x + w; }
  double bottom() const noexcept { return y + h; }
  bool valid() const noexcept { return w > 0.0 && h > 0.0; }
  bool within(double width, double height) const noexcept {
    return x >= 0.0 && y >= 0.0 && right() <= width && bottom() <= height;
  }

  friend bool operator==(const BBox&, const BBox&) = default;
};

/// Area of the overlap of two boxes (0 when disjoint).
double intersection_area(const BBox& a, const BBox& b) noexcept;

/// Clips `b` to [0,width]x[0,height]. The result may be degenerate.
BBox clip(const BBox& b, double width, double height) noexcept;

/// Ground-truth or pseudo-label object annotation. Class ids are 1-based.
struct Instance {
  int class_id = 0;
  BBox bbox;
  ImageId source_image_id = 0;

  friend bool operator==(const Instance&, const Instance&) = default;
};

/// A scored detection.
struct Prediction {
  int class_id = 0;
  BBox bbox;
  double score = 0.0;

  friend bool operator==(const Prediction&, const Prediction&) = default;
};

struct ImageRecord {
  ImageId id = 0;
  double width = 0.0;
  double height = 0.0;
  std::vector<Instance> ground_truth;

  friend bool operator==(const ImageRecord&, const ImageRecord&) = default;
};

inline Instance to_instance(const Prediction& p, ImageId image) {
  return Instance{p.class_id, p.bbox, image};
}

}  // namespace acrst
