#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pointdet/geometry.hpp"
#include "pointdet/image.hpp"
#include "pointdet/rng.hpp"

namespace pointdet {

enum class ShapeKind { Rectangle, Ellipse, Triangle, Ring };

ShapeKind shape_kind_from_string(const std::string& s);
std::string to_string(ShapeKind k);

// One shape family per category, so category identity carries a real
// extent/shape prior.
struct ShapeCategoryConfig {
  std::string name;
  ShapeKind shape = ShapeKind::Rectangle;
  double min_size = 0.1;    // geometric mean of width/height, normalized
  double max_size = 0.4;
  double aspect_min = 1.0;  // width / height
  double aspect_max = 1.0;
};

struct SynthConfig {
  int canvas_size = 64;
  int channels = 1;
  int min_instances = 1;
  int max_instances = 4;
  std::vector<ShapeCategoryConfig> categories;
  bool amodal_masks = true;  // store full shape masks; false = visible-only
  double background_level = 0.05;
  double noise_sigma = 0.02;
  double intensity_min = 0.35;
  double intensity_max = 1.0;
  int max_place_retries = 50;

  void validate() const;  // throws std::invalid_argument
};

struct Instance {
  int category = 0;
  Box box;        // tight bounding box of the stored mask cells
  MaskGrid mask;  // amodal or visible, per config
  int64_t ann_id = 0;  // assigned at dataset assembly; 0 = unassigned
  // generator-internal shape parameters
  double shape_cx = 0, shape_cy = 0, shape_w = 0, shape_h = 0;
};

struct Scene {
  int64_t scene_id = 0;
  int canvas_size = 0;
  Image image;
  std::vector<Instance> instances;
  // Fixed weak annotations, one per instance when present (synthesized at
  // dataset assembly; empty for scenes without point annotations).
  std::vector<PointAnnotation> weak_points;
};

// ids partitioned into a fully-labeled prefix set and the weakly-labeled
// rest; produced by one shuffle, so growing the fraction extends full_set.
struct DatasetSplit {
  std::vector<int64_t> full_set;
  std::vector<int64_t> weak_set;
  double fraction = 0.0;
  uint64_t seed = 0;
};

// Deterministic for fixed (seed, config). Instances are drawn in order;
// later instances occlude earlier ones in the rendered image.
Scene generate_scene(uint64_t seed, const SynthConfig& config,
                     int64_t scene_id = 0);

enum class PointSampleMode { Mask, BBox, Center };

PointSampleMode point_mode_from_string(const std::string& s);
std::string to_string(PointSampleMode m);

// Mask: uniform over nonzero mask cells (cell centers). BBox: uniform over
// the box interior. Center: the box center. Category is copied.
PointAnnotation sample_point(const Instance& inst, PointSampleMode mode,
                             Rng& rng);

// Uniform split by a single shuffle + prefix. |full| = round(fraction * n).
DatasetSplit split_dataset(const std::vector<int64_t>& scene_ids,
                           double fraction, uint64_t seed);

}  // namespace pointdet
