#pragma once

#include <stdexcept>

namespace pointdet {

// Axis-aligned box in normalized image coordinates, corner form.
// Valid boxes satisfy x1 <= x2, y1 <= y2 with all coordinates in [0,1].
struct Box {
  double x1 = 0.0;
  double y1 = 0.0;
  double x2 = 0.0;
  double y2 = 0.0;

  double width() const { return x2 - x1; }
  double height() const { return y2 - y1; }
  double area() const { return width() * height(); }
  double cx() const { return 0.5 * (x1 + x2); }
  double cy() const { return 0.5 * (y1 + y2); }

  bool valid() const {
    return x1 <= x2 && y1 <= y2 && x1 >= 0.0 && y1 >= 0.0 && x2 <= 1.0 &&
           y2 <= 1.0;
  }
  bool contains(double x, double y) const {
    return x >= x1 && x <= x2 && y >= y1 && y <= y2;
  }
  bool operator==(const Box&) const = default;
};

// A labeled point on an object: location in [0,1]^2 plus category index.
struct PointAnnotation {
  double x = 0.0;
  double y = 0.0;
  int category = 0;
};

// Nonnegative distances from a point to the left/top/right/bottom box sides,
// in normalized units. Each component is in [0,1].
struct OffsetQuad {
  double l = 0.0;
  double t = 0.0;
  double r = 0.0;
  double b = 0.0;
};

// Intersection over union. Degenerate (zero-area) boxes score 0.
double iou(const Box& a, const Box& b);

// Generalized IoU: iou minus the fraction of the smallest enclosing box not
// covered by the union. In [-1,1]; equals iou when the hull adds no area.
double giou(const Box& a, const Box& b);

// Reconstruct a box from a point and side offsets, clamped to [0,1].
// The point always lies inside the returned box (inclusive).
Box decode_offsets(const PointAnnotation& p, const OffsetQuad& d);

// Side offsets of `box` relative to `p`. Throws std::invalid_argument when
// the point lies outside the box.
OffsetQuad encode_offsets(const PointAnnotation& p, const Box& box);

}  // namespace pointdet
