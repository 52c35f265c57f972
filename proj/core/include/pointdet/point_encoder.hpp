#pragma once

#include <vector>

#include "pointdet/geometry.hpp"
#include "pointdet/nn.hpp"

namespace pointdet {

// Sinusoidal position embedding plus learnable category embedding, fused by
// elementwise sum into one object query per annotated point.
struct PointEncoderParams {
  int d_model = 64;           // divisible by 4: half per axis, sin/cos pairs
  double temperature = 10000.0;
  int num_categories = 4;
  bool use_position = true;   // ablation switches; zero the disabled part
  bool use_category = true;
};

// Fixed sinusoidal embedding of a normalized 2D location. Layout: the first
// d_model/2 entries encode y, the rest x; within each half, frequencies are
// laid out as (sin, cos) pairs from low to high index. Angles use the
// location scaled by 2*pi.
std::vector<float> positional_encoding(double x, double y,
                                       const PointEncoderParams& params);

// Positional map of a feature grid: row (gy*w + gx) holds the encoding of
// the cell center ((gx+0.5)/w, (gy+0.5)/h). The same formula as
// positional_encoding, evaluated on the grid.
nn::Mat positional_grid(int h, int w, const PointEncoderParams& params);

class PointEncoder {
 public:
  PointEncoder(const PointEncoderParams& params, nn::ParameterStore& store,
               uint64_t seed);

  // Row c of the learnable category table.
  std::vector<float> category_embedding(int c) const;

  // One query per point, order-preserving: pos(x, y) + cat(c).
  // n = 0 yields an empty matrix (allowed at inference).
  nn::Mat encode_points(const std::vector<PointAnnotation>& points) const;

  // Graph-building variant; gradients reach the category table.
  nn::Var encode_points(nn::Graph& g,
                        const std::vector<PointAnnotation>& points) const;

  const PointEncoderParams& params() const { return params_; }
  const nn::Parameter& category_table() const { return *category_table_; }

 private:
  PointEncoderParams params_;
  nn::Parameter* category_table_;  // owned by the model's ParameterStore
};

}  // namespace pointdet
