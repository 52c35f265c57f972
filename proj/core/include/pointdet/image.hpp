#pragma once

#include <cstdint>
#include <vector>

namespace pointdet {

// Dense float intensity grid, row-major (y, x, channel).
struct Image {
  int h = 0;
  int w = 0;
  int c = 1;
  std::vector<float> data;

  Image() = default;
  Image(int h_, int w_, int c_)
      : h(h_), w(w_), c(c_), data(static_cast<size_t>(h_) * w_ * c_, 0.0f) {}

  float& at(int y, int x, int ch) {
    return data[(static_cast<size_t>(y) * w + x) * c + ch];
  }
  float at(int y, int x, int ch) const {
    return data[(static_cast<size_t>(y) * w + x) * c + ch];
  }

  Image hflip() const {
    Image out(h, w, c);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x)
        for (int ch = 0; ch < c; ++ch) out.at(y, x, ch) = at(y, w - 1 - x, ch);
    return out;
  }

  bool operator==(const Image&) const = default;
};

// Binary occupancy grid at canvas resolution, row-major.
struct MaskGrid {
  int h = 0;
  int w = 0;
  std::vector<uint8_t> cells;

  MaskGrid() = default;
  MaskGrid(int h_, int w_)
      : h(h_), w(w_), cells(static_cast<size_t>(h_) * w_, 0) {}

  uint8_t& at(int y, int x) { return cells[static_cast<size_t>(y) * w + x]; }
  uint8_t at(int y, int x) const {
    return cells[static_cast<size_t>(y) * w + x];
  }
  size_t count() const {
    size_t n = 0;
    for (uint8_t v : cells) n += v != 0;
    return n;
  }

  bool operator==(const MaskGrid&) const = default;
};

}  // namespace pointdet
