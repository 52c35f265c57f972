#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "pointdet/synth.hpp"

namespace pointdet {

void to_json(nlohmann::json& j, const ShapeCategoryConfig& c);
void from_json(const nlohmann::json& j, ShapeCategoryConfig& c);
void to_json(nlohmann::json& j, const SynthConfig& c);
void from_json(const nlohmann::json& j, SynthConfig& c);

}  // namespace pointdet

namespace pointdet::dataset {

// A serialized detection dataset directory:
//   annotations.json    COCO-like index (images, annotations, categories)
//   images/*.img        raw float32 grids (header "PDIMG1\n<h> <w> <c>\n")
//   splits.json         optional: full/weak splits, one per fraction
//   points_<mode>.json  optional: alternative point annotations by ann_id
struct Dataset {
  SynthConfig config;
  std::vector<Scene> scenes;  // ordered by scene_id
  uint64_t gen_seed = 0;

  const Scene& scene_by_id(int64_t id) const;
  std::vector<int64_t> scene_ids() const;
  int num_categories() const {
    return static_cast<int>(config.categories.size());
  }
};

void save_image(const Image& img, const std::string& path);
Image load_image(const std::string& path);

// COCO-style uncompressed RLE, column-major, starting with the zero run.
std::vector<int> rle_encode(const MaskGrid& mask);
MaskGrid rle_decode(const std::vector<int>& counts, int h, int w);

void save(const Dataset& ds, const std::string& dir);
Dataset load(const std::string& dir);

void save_splits(const std::vector<DatasetSplit>& splits,
                 const std::string& path);
std::vector<DatasetSplit> load_splits(const std::string& path);

// Sidecar point annotations (ann_id -> point), used for the point-location
// ablation without duplicating the dataset.
void save_point_overrides(const std::map<int64_t, PointAnnotation>& points,
                          const std::string& path);
std::map<int64_t, PointAnnotation> load_point_overrides(
    const std::string& path);

// Build a full dataset: generate scenes, assign annotation ids, synthesize
// stored weak points (in `point_mode`). Deterministic in (seed, config).
Dataset build_dataset(const SynthConfig& config, int num_scenes,
                      uint64_t seed, PointSampleMode point_mode,
                      int64_t first_scene_id = 1);

}  // namespace pointdet::dataset
