#include "pointdet/dataset_io.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace fs = std::filesystem;
using nlohmann::json;

namespace pointdet {

// ---- config <-> json ----

void to_json(json& j, const ShapeCategoryConfig& c) {
  j = json{{"name", c.name},          {"shape", to_string(c.shape)},
           {"min_size", c.min_size},  {"max_size", c.max_size},
           {"aspect_min", c.aspect_min}, {"aspect_max", c.aspect_max}};
}

void from_json(const json& j, ShapeCategoryConfig& c) {
  c.name = j.at("name").get<std::string>();
  c.shape = shape_kind_from_string(j.at("shape").get<std::string>());
  c.min_size = j.at("min_size").get<double>();
  c.max_size = j.at("max_size").get<double>();
  c.aspect_min = j.at("aspect_min").get<double>();
  c.aspect_max = j.at("aspect_max").get<double>();
}

void to_json(json& j, const SynthConfig& c) {
  j = json{{"canvas_size", c.canvas_size},
           {"channels", c.channels},
           {"min_instances", c.min_instances},
           {"max_instances", c.max_instances},
           {"categories", c.categories},
           {"amodal_masks", c.amodal_masks},
           {"background_level", c.background_level},
           {"noise_sigma", c.noise_sigma},
           {"intensity_min", c.intensity_min},
           {"intensity_max", c.intensity_max},
           {"max_place_retries", c.max_place_retries}};
}

void from_json(const json& j, SynthConfig& c) {
  j.at("canvas_size").get_to(c.canvas_size);
  c.channels = j.value("channels", 1);
  j.at("min_instances").get_to(c.min_instances);
  j.at("max_instances").get_to(c.max_instances);
  c.categories = j.at("categories").get<std::vector<ShapeCategoryConfig>>();
  c.amodal_masks = j.value("amodal_masks", true);
  c.background_level = j.value("background_level", 0.05);
  c.noise_sigma = j.value("noise_sigma", 0.02);
  c.intensity_min = j.value("intensity_min", 0.35);
  c.intensity_max = j.value("intensity_max", 1.0);
  c.max_place_retries = j.value("max_place_retries", 50);
}

namespace dataset {

const Scene& Dataset::scene_by_id(int64_t id) const {
  for (const auto& s : scenes)
    if (s.scene_id == id) return s;
  throw std::out_of_range("dataset: unknown scene id " + std::to_string(id));
}

std::vector<int64_t> Dataset::scene_ids() const {
  std::vector<int64_t> ids;
  ids.reserve(scenes.size());
  for (const auto& s : scenes) ids.push_back(s.scene_id);
  return ids;
}

// ---- raw image files ----

void save_image(const Image& img, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write image file: " + path);
  f << "PDIMG1\n" << img.h << " " << img.w << " " << img.c << "\n";
  f.write(reinterpret_cast<const char*>(img.data.data()),
          static_cast<std::streamsize>(img.data.size() * sizeof(float)));
}

Image load_image(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot read image file: " + path);
  std::string magic;
  std::getline(f, magic);
  if (magic != "PDIMG1")
    throw std::runtime_error("bad image magic in " + path);
  int h = 0, w = 0, c = 0;
  f >> h >> w >> c;
  f.ignore(1);  // newline
  if (h <= 0 || w <= 0 || c <= 0)
    throw std::runtime_error("bad image header in " + path);
  Image img(h, w, c);
  f.read(reinterpret_cast<char*>(img.data.data()),
         static_cast<std::streamsize>(img.data.size() * sizeof(float)));
  if (!f) throw std::runtime_error("truncated image file: " + path);
  return img;
}

// ---- RLE ----

std::vector<int> rle_encode(const MaskGrid& mask) {
  std::vector<int> counts;
  uint8_t cur = 0;  // column-major scan starts counting zeros
  int run = 0;
  for (int x = 0; x < mask.w; ++x) {
    for (int y = 0; y < mask.h; ++y) {
      const uint8_t v = mask.at(y, x) ? 1 : 0;
      if (v == cur) {
        ++run;
      } else {
        counts.push_back(run);
        cur = v;
        run = 1;
      }
    }
  }
  counts.push_back(run);
  return counts;
}

MaskGrid rle_decode(const std::vector<int>& counts, int h, int w) {
  MaskGrid mask(h, w);
  int64_t pos = 0;
  uint8_t cur = 0;
  for (int c : counts) {
    if (c < 0) throw std::runtime_error("rle_decode: negative run");
    for (int k = 0; k < c; ++k) {
      if (pos >= static_cast<int64_t>(h) * w)
        throw std::runtime_error("rle_decode: run past mask size");
      const int x = static_cast<int>(pos / h);
      const int y = static_cast<int>(pos % h);
      mask.at(y, x) = cur;
      ++pos;
    }
    cur = cur ? 0 : 1;
  }
  if (pos != static_cast<int64_t>(h) * w)
    throw std::runtime_error("rle_decode: runs do not cover mask");
  return mask;
}

// ---- dataset save/load ----

namespace {

std::string image_file_name(int64_t scene_id) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "scene_%06lld.img",
                static_cast<long long>(scene_id));
  return buf;
}

}  // namespace

void save(const Dataset& ds, const std::string& dir) {
  fs::create_directories(fs::path(dir) / "images");

  json images = json::array();
  json annotations = json::array();
  json categories = json::array();
  for (size_t i = 0; i < ds.config.categories.size(); ++i) {
    categories.push_back(
        {{"id", static_cast<int>(i) + 1}, {"name", ds.config.categories[i].name}});
  }

  const double scale = ds.config.canvas_size;
  for (const auto& scene : ds.scenes) {
    const std::string fname = image_file_name(scene.scene_id);
    save_image(scene.image, (fs::path(dir) / "images" / fname).string());
    images.push_back({{"id", scene.scene_id},
                      {"file_name", "images/" + fname},
                      {"width", scene.image.w},
                      {"height", scene.image.h}});
    for (size_t k = 0; k < scene.instances.size(); ++k) {
      const auto& inst = scene.instances[k];
      if (inst.ann_id == 0)
        throw std::invalid_argument("save: instance without ann_id");
      json ann = {
          {"id", inst.ann_id},
          {"image_id", scene.scene_id},
          {"category_id", inst.category + 1},
          {"bbox",
           {inst.box.x1 * scale, inst.box.y1 * scale,
            inst.box.width() * scale, inst.box.height() * scale}},
          {"area", inst.box.area() * scale * scale},
          {"iscrowd", 0},
          {"segmentation",
           {{"size", {inst.mask.h, inst.mask.w}},
            {"counts", rle_encode(inst.mask)}}},
      };
      if (k < scene.weak_points.size()) {
        const auto& p = scene.weak_points[k];
        ann["point"] = {p.x * scale, p.y * scale};
      }
      annotations.push_back(std::move(ann));
    }
  }

  json root = {{"info",
                {{"description", "synthetic shapes detection dataset"},
                 {"generator_config", ds.config},
                 {"gen_seed", ds.gen_seed}}},
               {"images", images},
               {"annotations", annotations},
               {"categories", categories}};

  std::ofstream f(fs::path(dir) / "annotations.json");
  if (!f) throw std::runtime_error("cannot write annotations.json in " + dir);
  f << root.dump(1, '\t') << "\n";
}

Dataset load(const std::string& dir) {
  const auto ann_path = fs::path(dir) / "annotations.json";
  std::ifstream f(ann_path);
  if (!f)
    throw std::runtime_error("cannot open dataset: " + ann_path.string());
  json root;
  try {
    f >> root;
  } catch (const json::exception& e) {
    throw std::runtime_error("malformed annotations.json: " +
                             std::string(e.what()));
  }

  Dataset ds;
  ds.config = root.at("info").at("generator_config").get<SynthConfig>();
  ds.gen_seed = root.at("info").value("gen_seed", 0ull);

  // categories must match the stored config ordering
  const auto& cats = root.at("categories");
  if (cats.size() != ds.config.categories.size())
    throw std::runtime_error("annotations.json: category table size mismatch");
  for (size_t i = 0; i < cats.size(); ++i) {
    if (cats[i].at("id").get<int>() != static_cast<int>(i) + 1)
      throw std::runtime_error("annotations.json: non-sequential category id");
  }

  const double scale = ds.config.canvas_size;
  std::map<int64_t, Scene> scenes;
  for (const auto& im : root.at("images")) {
    Scene s;
    s.scene_id = im.at("id").get<int64_t>();
    s.canvas_size = ds.config.canvas_size;
    s.image = load_image(
        (fs::path(dir) / im.at("file_name").get<std::string>()).string());
    if (s.image.w != im.at("width").get<int>() ||
        s.image.h != im.at("height").get<int>())
      throw std::runtime_error("image size mismatch for scene " +
                               std::to_string(s.scene_id));
    scenes.emplace(s.scene_id, std::move(s));
  }

  for (const auto& ann : root.at("annotations")) {
    const int64_t ann_id = ann.at("id").get<int64_t>();
    const int64_t image_id = ann.at("image_id").get<int64_t>();
    auto it = scenes.find(image_id);
    if (it == scenes.end())
      throw std::runtime_error("annotation " + std::to_string(ann_id) +
                               ": unknown image_id " +
                               std::to_string(image_id));
    Instance inst;
    inst.ann_id = ann_id;
    const int cat_id = ann.at("category_id").get<int>();
    if (cat_id < 1 || cat_id > static_cast<int>(ds.config.categories.size()))
      throw std::runtime_error("annotation " + std::to_string(ann_id) +
                               ": category_id out of range");
    inst.category = cat_id - 1;
    const auto& bb = ann.at("bbox");
    if (bb.size() != 4)
      throw std::runtime_error("annotation " + std::to_string(ann_id) +
                               ": bbox must have 4 entries");
    inst.box =
        Box{bb[0].get<double>() / scale, bb[1].get<double>() / scale,
            (bb[0].get<double>() + bb[2].get<double>()) / scale,
            (bb[1].get<double>() + bb[3].get<double>()) / scale};
    if (!inst.box.valid())
      throw std::runtime_error("annotation " + std::to_string(ann_id) +
                               ": invalid bbox");
    if (ann.contains("segmentation")) {
      const auto& seg = ann.at("segmentation");
      const auto& size = seg.at("size");
      inst.mask = rle_decode(seg.at("counts").get<std::vector<int>>(),
                             size[0].get<int>(), size[1].get<int>());
    }
    Scene& s = it->second;
    if (ann.contains("point")) {
      const auto& pt = ann.at("point");
      if (s.weak_points.size() != s.instances.size())
        throw std::runtime_error(
            "annotation " + std::to_string(ann_id) +
            ": mixed point/no-point annotations within one image");
      s.weak_points.push_back(PointAnnotation{pt[0].get<double>() / scale,
                                              pt[1].get<double>() / scale,
                                              inst.category});
    } else if (!s.weak_points.empty()) {
      throw std::runtime_error("annotation " + std::to_string(ann_id) +
                               ": mixed point/no-point annotations within "
                               "one image");
    }
    s.instances.push_back(std::move(inst));
  }

  ds.scenes.reserve(scenes.size());
  for (auto& [id, s] : scenes) ds.scenes.push_back(std::move(s));
  std::sort(ds.scenes.begin(), ds.scenes.end(),
            [](const Scene& a, const Scene& b) {
              return a.scene_id < b.scene_id;
            });
  return ds;
}

// ---- splits ----

void save_splits(const std::vector<DatasetSplit>& splits,
                 const std::string& path) {
  json arr = json::array();
  for (const auto& s : splits) {
    arr.push_back({{"fraction", s.fraction},
                   {"seed", s.seed},
                   {"full", s.full_set},
                   {"weak", s.weak_set}});
  }
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write splits file: " + path);
  f << json{{"splits", arr}}.dump(1, '\t') << "\n";
}

std::vector<DatasetSplit> load_splits(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open splits file: " + path);
  json root;
  f >> root;
  std::vector<DatasetSplit> out;
  for (const auto& j : root.at("splits")) {
    DatasetSplit s;
    s.fraction = j.at("fraction").get<double>();
    s.seed = j.at("seed").get<uint64_t>();
    s.full_set = j.at("full").get<std::vector<int64_t>>();
    s.weak_set = j.at("weak").get<std::vector<int64_t>>();
    out.push_back(std::move(s));
  }
  return out;
}

// ---- point overrides ----

void save_point_overrides(const std::map<int64_t, PointAnnotation>& points,
                          const std::string& path) {
  json arr = json::array();
  for (const auto& [ann_id, p] : points) {
    arr.push_back({{"ann_id", ann_id},
                   {"point", {p.x, p.y}},
                   {"category", p.category}});
  }
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write points file: " + path);
  f << json{{"points", arr}}.dump(1, '\t') << "\n";
}

std::map<int64_t, PointAnnotation> load_point_overrides(
    const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open points file: " + path);
  json root;
  f >> root;
  std::map<int64_t, PointAnnotation> out;
  for (const auto& j : root.at("points")) {
    PointAnnotation p;
    p.x = j.at("point")[0].get<double>();
    p.y = j.at("point")[1].get<double>();
    p.category = j.at("category").get<int>();
    out.emplace(j.at("ann_id").get<int64_t>(), p);
  }
  return out;
}

// ---- builder ----

Dataset build_dataset(const SynthConfig& config, int num_scenes,
                      uint64_t seed, PointSampleMode point_mode,
                      int64_t first_scene_id) {
  config.validate();
  Dataset ds;
  ds.config = config;
  ds.gen_seed = seed;
  ds.scenes.reserve(num_scenes);
  int64_t next_ann = 1;
  for (int i = 0; i < num_scenes; ++i) {
    const int64_t scene_id = first_scene_id + i;
    Scene scene =
        generate_scene(mix_seed(seed, static_cast<uint64_t>(i), 0), config,
                       scene_id);
    Rng point_rng = make_rng(mix_seed(seed, static_cast<uint64_t>(i), 1));
    for (auto& inst : scene.instances) {
      inst.ann_id = next_ann++;
      scene.weak_points.push_back(sample_point(inst, point_mode, point_rng));
    }
    ds.scenes.push_back(std::move(scene));
  }
  return ds;
}

}  // namespace dataset
}  // namespace pointdet
