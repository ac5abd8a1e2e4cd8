#include "acrst/types.hpp"

#include <algorithm>

namespace acrst {

double intersection_area(const BBox& a, const BBox& b) noexcept {
  const double w = std::min(a.right(), b.right()) - std::max(a.x, b.x);
  const double h = std::min(a.bottom(), b.bottom()) - std::max(a.y, b.y);
  if (w <= 0.0 || h <= 0.0) return 0.0;
  return w * h;
}

BBox clip(const BBox& b, double width, double height) noexcept {
  const double x0 = std::clamp(b.x, 0.0, width);
  const double y0 = std::clamp(b.y, 0.0, height);
  const double x1 = std::clamp(b.right(), 0.0, width);
  const double y1 = std::clamp(b.bottom(), 0.0, height);
  return BBox{x0, y0, x1 - x0, y1 - y0};
}

}  // namespace acrst
