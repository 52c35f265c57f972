#include "pointdet/synth.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace pointdet {

ShapeKind shape_kind_from_string(const std::string& s) {
  if (s == "rectangle") return ShapeKind::Rectangle;
  if (s == "ellipse") return ShapeKind::Ellipse;
  if (s == "triangle") return ShapeKind::Triangle;
  if (s == "ring") return ShapeKind::Ring;
  throw std::invalid_argument("unknown shape kind: " + s);
}

std::string to_string(ShapeKind k) {
  switch (k) {
    case ShapeKind::Rectangle: return "rectangle";
    case ShapeKind::Ellipse: return "ellipse";
    case ShapeKind::Triangle: return "triangle";
    case ShapeKind::Ring: return "ring";
  }
  return "rectangle";
}

PointSampleMode point_mode_from_string(const std::string& s) {
  if (s == "mask") return PointSampleMode::Mask;
  if (s == "bbox") return PointSampleMode::BBox;
  if (s == "center") return PointSampleMode::Center;
  throw std::invalid_argument("unknown point sample mode: " + s);
}

std::string to_string(PointSampleMode m) {
  switch (m) {
    case PointSampleMode::Mask: return "mask";
    case PointSampleMode::BBox: return "bbox";
    case PointSampleMode::Center: return "center";
  }
  return "mask";
}

void SynthConfig::validate() const {
  if (canvas_size < 32)
    throw std::invalid_argument("synth config: canvas_size must be >= 32");
  if (channels < 1)
    throw std::invalid_argument("synth config: channels must be >= 1");
  if (categories.size() < 2)
    throw std::invalid_argument("synth config: need >= 2 shape categories");
  if (min_instances < 1 || max_instances < min_instances)
    throw std::invalid_argument("synth config: bad instance count range");
  for (const auto& c : categories) {
    if (c.min_size <= 0.0 || c.max_size < c.min_size || c.max_size > 0.95)
      throw std::invalid_argument("synth config: bad size range for " + c.name);
    if (c.aspect_min <= 0.0 || c.aspect_max < c.aspect_min)
      throw std::invalid_argument("synth config: bad aspect range for " +
                                  c.name);
  }
}

namespace {

struct ShapeSpec {
  ShapeKind kind;
  double cx, cy, w, h;  // normalized
};

bool inside_shape(const ShapeSpec& s, double x, double y) {
  const double dx = x - s.cx;
  const double dy = y - s.cy;
  const double hw = 0.5 * s.w;
  const double hh = 0.5 * s.h;
  switch (s.kind) {
    case ShapeKind::Rectangle:
      return std::abs(dx) <= hw && std::abs(dy) <= hh;
    case ShapeKind::Ellipse: {
      const double rx = dx / hw;
      const double ry = dy / hh;
      return rx * rx + ry * ry <= 1.0;
    }
    case ShapeKind::Triangle: {
      // apex at top center, base at the bottom edge
      if (std::abs(dy) > hh) return false;
      const double frac = (dy + hh) / (2.0 * hh);  // 0 at apex row, 1 at base
      return std::abs(dx) <= hw * frac;
    }
    case ShapeKind::Ring: {
      const double rx = dx / hw;
      const double ry = dy / hh;
      const double rr = rx * rx + ry * ry;
      constexpr double inner = 0.55;
      return rr <= 1.0 && rr >= inner * inner;
    }
  }
  return false;
}

MaskGrid rasterize(const ShapeSpec& s, int canvas) {
  MaskGrid m(canvas, canvas);
  // limit the scan to the shape's bounding cells
  const int x0 = std::max(0, static_cast<int>((s.cx - 0.5 * s.w) * canvas) - 1);
  const int x1 =
      std::min(canvas - 1, static_cast<int>((s.cx + 0.5 * s.w) * canvas) + 1);
  const int y0 = std::max(0, static_cast<int>((s.cy - 0.5 * s.h) * canvas) - 1);
  const int y1 =
      std::min(canvas - 1, static_cast<int>((s.cy + 0.5 * s.h) * canvas) + 1);
  for (int y = y0; y <= y1; ++y) {
    for (int x = x0; x <= x1; ++x) {
      const double px = (x + 0.5) / canvas;
      const double py = (y + 0.5) / canvas;
      if (inside_shape(s, px, py)) m.at(y, x) = 1;
    }
  }
  return m;
}

Box tight_box(const MaskGrid& m) {
  int xmin = m.w, xmax = -1, ymin = m.h, ymax = -1;
  for (int y = 0; y < m.h; ++y)
    for (int x = 0; x < m.w; ++x)
      if (m.at(y, x)) {
        xmin = std::min(xmin, x);
        xmax = std::max(xmax, x);
        ymin = std::min(ymin, y);
        ymax = std::max(ymax, y);
      }
  if (xmax < 0) return Box{};
  return Box{static_cast<double>(xmin) / m.w, static_cast<double>(ymin) / m.h,
             static_cast<double>(xmax + 1) / m.w,
             static_cast<double>(ymax + 1) / m.h};
}

}  // namespace

Scene generate_scene(uint64_t seed, const SynthConfig& config,
                     int64_t scene_id) {
  config.validate();
  Rng rng = make_rng(seed);
  const int canvas = config.canvas_size;

  Scene scene;
  scene.scene_id = scene_id;
  scene.canvas_size = canvas;

  std::uniform_int_distribution<int> count_dist(config.min_instances,
                                                config.max_instances);
  const int target_count = count_dist(rng);

  std::vector<ShapeSpec> shapes;
  std::vector<MaskGrid> own_masks;
  std::vector<std::vector<float>> colors;

  std::uniform_int_distribution<int> cat_dist(
      0, static_cast<int>(config.categories.size()) - 1);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  for (int k = 0; k < target_count; ++k) {
    bool placed = false;
    for (int attempt = 0; attempt < config.max_place_retries; ++attempt) {
      const int cat = cat_dist(rng);
      const auto& cc = config.categories[cat];
      const double size =
          cc.min_size + (cc.max_size - cc.min_size) * unit(rng);
      const double aspect =
          cc.aspect_min + (cc.aspect_max - cc.aspect_min) * unit(rng);
      const double w = std::min(0.95, size * std::sqrt(aspect));
      const double h = std::min(0.95, size / std::sqrt(aspect));
      constexpr double margin = 0.01;
      const double lo_x = 0.5 * w + margin;
      const double hi_x = 1.0 - 0.5 * w - margin;
      const double lo_y = 0.5 * h + margin;
      const double hi_y = 1.0 - 0.5 * h - margin;
      if (lo_x >= hi_x || lo_y >= hi_y) continue;
      ShapeSpec spec{cc.shape, lo_x + (hi_x - lo_x) * unit(rng),
                     lo_y + (hi_y - lo_y) * unit(rng), w, h};
      MaskGrid mask = rasterize(spec, canvas);
      if (mask.count() == 0) continue;

      std::vector<float> color(config.channels);
      for (int ch = 0; ch < config.channels; ++ch)
        color[ch] = static_cast<float>(
            config.intensity_min +
            (config.intensity_max - config.intensity_min) * unit(rng));

      Instance inst;
      inst.category = cat;
      inst.mask = mask;  // may be reduced to visible cells below
      inst.shape_cx = spec.cx;
      inst.shape_cy = spec.cy;
      inst.shape_w = spec.w;
      inst.shape_h = spec.h;
      scene.instances.push_back(std::move(inst));
      shapes.push_back(spec);
      own_masks.push_back(std::move(mask));
      colors.push_back(std::move(color));
      placed = true;
      break;
    }
    if (!placed)
      throw std::runtime_error(
          "generate_scene: could not place instance after bounded retries "
          "(impossible placement constraints?)");
  }

  // Painter's order: later instances overwrite earlier ones.
  if (!config.amodal_masks) {
    for (size_t i = 0; i < scene.instances.size(); ++i) {
      MaskGrid visible = own_masks[i];
      for (size_t j = i + 1; j < scene.instances.size(); ++j)
        for (size_t cell = 0; cell < visible.cells.size(); ++cell)
          if (own_masks[j].cells[cell]) visible.cells[cell] = 0;
      scene.instances[i].mask = std::move(visible);
    }
    // fully occluded instances disappear from the annotation set
    std::vector<Instance> kept;
    std::vector<size_t> kept_src;
    for (size_t i = 0; i < scene.instances.size(); ++i) {
      if (scene.instances[i].mask.count() > 0) {
        kept.push_back(std::move(scene.instances[i]));
        kept_src.push_back(i);
      }
    }
    scene.instances = std::move(kept);
    std::vector<ShapeSpec> s2;
    std::vector<MaskGrid> m2;
    std::vector<std::vector<float>> c2;
    for (size_t i : kept_src) {
      s2.push_back(shapes[i]);
      m2.push_back(own_masks[i]);
      c2.push_back(colors[i]);
    }
    shapes = std::move(s2);
    own_masks = std::move(m2);
    colors = std::move(c2);
  }

  for (auto& inst : scene.instances) inst.box = tight_box(inst.mask);

  // Render: flat fills in draw order, then additive noise.
  scene.image = Image(canvas, canvas, config.channels);
  for (int y = 0; y < canvas; ++y)
    for (int x = 0; x < canvas; ++x)
      for (int ch = 0; ch < config.channels; ++ch)
        scene.image.at(y, x, ch) = static_cast<float>(config.background_level);
  for (size_t i = 0; i < shapes.size(); ++i) {
    for (int y = 0; y < canvas; ++y)
      for (int x = 0; x < canvas; ++x)
        if (own_masks[i].at(y, x))
          for (int ch = 0; ch < config.channels; ++ch)
            scene.image.at(y, x, ch) = colors[i][ch];
  }
  if (config.noise_sigma > 0.0) {
    std::normal_distribution<double> noise(0.0, config.noise_sigma);
    for (auto& v : scene.image.data)
      v = std::clamp(v + static_cast<float>(noise(rng)), 0.0f, 1.0f);
  }
  return scene;
}

PointAnnotation sample_point(const Instance& inst, PointSampleMode mode,
                             Rng& rng) {
  PointAnnotation p;
  p.category = inst.category;
  switch (mode) {
    case PointSampleMode::Mask: {
      const size_t n = inst.mask.count();
      if (n == 0)
        throw std::invalid_argument("sample_point: empty instance mask");
      std::uniform_int_distribution<size_t> pick(0, n - 1);
      size_t target = pick(rng);
      for (int y = 0; y < inst.mask.h; ++y) {
        for (int x = 0; x < inst.mask.w; ++x) {
          if (!inst.mask.at(y, x)) continue;
          if (target == 0) {
            p.x = (x + 0.5) / inst.mask.w;
            p.y = (y + 0.5) / inst.mask.h;
            return p;
          }
          --target;
        }
      }
      throw std::logic_error("sample_point: mask scan ran past count");
    }
    case PointSampleMode::BBox: {
      std::uniform_real_distribution<double> ux(inst.box.x1, inst.box.x2);
      std::uniform_real_distribution<double> uy(inst.box.y1, inst.box.y2);
      p.x = ux(rng);
      p.y = uy(rng);
      return p;
    }
    case PointSampleMode::Center:
      p.x = inst.box.cx();
      p.y = inst.box.cy();
      return p;
  }
  throw std::logic_error("sample_point: unhandled mode");
}

DatasetSplit split_dataset(const std::vector<int64_t>& scene_ids,
                           double fraction, uint64_t seed) {
  if (!(fraction > 0.0 && fraction < 1.0))
    throw std::invalid_argument("split_dataset: fraction must be in (0,1)");
  const size_t n = scene_ids.size();
  const size_t n_full =
      static_cast<size_t>(std::llround(fraction * static_cast<double>(n)));
  if (n_full == 0 || n_full == n)
    throw std::invalid_argument(
        "split_dataset: fraction produces an empty side");

  std::vector<int64_t> order = scene_ids;
  Rng rng = make_rng(mix_seed(seed, 0x5711ull));
  deterministic_shuffle(order, rng);

  DatasetSplit split;
  split.fraction = fraction;
  split.seed = seed;
  split.full_set.assign(order.begin(), order.begin() + n_full);
  split.weak_set.assign(order.begin() + n_full, order.end());
  return split;
}

}  // namespace pointdet
