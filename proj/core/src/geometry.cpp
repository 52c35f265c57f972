#include "pointdet/geometry.hpp"

#include <algorithm>

namespace pointdet {

namespace {

double intersection_area(const Box& a, const Box& b) {
  const double iw = std::min(a.x2, b.x2) - std::max(a.x1, b.x1);
  const double ih = std::min(a.y2, b.y2) - std::max(a.y1, b.y1);
  if (iw <= 0.0 || ih <= 0.0) return 0.0;
  return iw * ih;
}

}  // namespace

double iou(const Box& a, const Box& b) {
  const double inter = intersection_area(a, b);
  const double uni = a.area() + b.area() - inter;
  if (uni <= 0.0) return 0.0;  // degenerate boxes score as misses
  return inter / uni;
}

double giou(const Box& a, const Box& b) {
  const double inter = intersection_area(a, b);
  const double uni = a.area() + b.area() - inter;
  if (uni <= 0.0) return 0.0;
  const double hull_w = std::max(a.x2, b.x2) - std::min(a.x1, b.x1);
  const double hull_h = std::max(a.y2, b.y2) - std::min(a.y1, b.y1);
  const double hull = hull_w * hull_h;
  if (hull <= 0.0) return 0.0;
  return inter / uni - (hull - uni) / hull;
}

Box decode_offsets(const PointAnnotation& p, const OffsetQuad& d) {
  auto clamp01 = [](double v) { return std::clamp(v, 0.0, 1.0); };
  return Box{clamp01(p.x - d.l), clamp01(p.y - d.t), clamp01(p.x + d.r),
             clamp01(p.y + d.b)};
}

OffsetQuad encode_offsets(const PointAnnotation& p, const Box& box) {
  if (!box.contains(p.x, p.y)) {
    throw std::invalid_argument(
        "encode_offsets: point lies outside its box (point/box "
        "correspondence violation)");
  }
  return OffsetQuad{p.x - box.x1, p.y - box.y1, box.x2 - p.x, box.y2 - p.y};
}

}  // namespace pointdet
