#include "pointdet/point_encoder.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace pointdet {

namespace {

void fill_axis(double coord, double temperature, int feats, float* out) {
  // (sin, cos) pairs over geometric frequencies, matching the transformer
  // encoder's spatial map.
  const double angle_base = coord * 2.0 * std::numbers::pi;
  for (int i = 0; i < feats; i += 2) {
    const double div =
        std::pow(temperature, static_cast<double>(i) / static_cast<double>(feats));
    const double angle = angle_base / div;
    out[i] = static_cast<float>(std::sin(angle));
    if (i + 1 < feats) out[i + 1] = static_cast<float>(std::cos(angle));
  }
}

void check_params(const PointEncoderParams& p) {
  if (p.d_model <= 0 || p.d_model % 4 != 0)
    throw std::invalid_argument("point encoder: d_model must be divisible by 4");
  if (p.temperature <= 0.0)
    throw std::invalid_argument("point encoder: temperature must be positive");
}

}  // namespace

std::vector<float> positional_encoding(double x, double y,
                                       const PointEncoderParams& params) {
  check_params(params);
  const int half = params.d_model / 2;
  std::vector<float> out(params.d_model, 0.0f);
  fill_axis(y, params.temperature, half, out.data());
  fill_axis(x, params.temperature, half, out.data() + half);
  return out;
}

nn::Mat positional_grid(int h, int w, const PointEncoderParams& params) {
  nn::Mat grid(static_cast<Eigen::Index>(h) * w, params.d_model);
  for (int gy = 0; gy < h; ++gy) {
    for (int gx = 0; gx < w; ++gx) {
      const double cx = (gx + 0.5) / static_cast<double>(w);
      const double cy = (gy + 0.5) / static_cast<double>(h);
      const auto enc = positional_encoding(cx, cy, params);
      for (int k = 0; k < params.d_model; ++k)
        grid(static_cast<Eigen::Index>(gy) * w + gx, k) = enc[k];
    }
  }
  return grid;
}

PointEncoder::PointEncoder(const PointEncoderParams& params,
                           nn::ParameterStore& store, uint64_t seed)
    : params_(params) {
  check_params(params_);
  category_table_ = &store.create("point_encoder.category_table",
                                  params_.num_categories, params_.d_model);
  // Small init keeps early behavior close to position-only queries.
  nn::init_normal(*category_table_, 0.0f, 0.02f, seed);
}

std::vector<float> PointEncoder::category_embedding(int c) const {
  if (c < 0 || c >= params_.num_categories)
    throw std::out_of_range("category_embedding: index out of range");
  std::vector<float> out(params_.d_model);
  for (int k = 0; k < params_.d_model; ++k)
    out[k] = category_table_->value(c, k);
  return out;
}

nn::Mat PointEncoder::encode_points(
    const std::vector<PointAnnotation>& points) const {
  nn::Mat out(static_cast<Eigen::Index>(points.size()), params_.d_model);
  for (size_t i = 0; i < points.size(); ++i) {
    const auto& p = points[i];
    if (p.category < 0 || p.category >= params_.num_categories)
      throw std::out_of_range("encode_points: category out of range");
    if (params_.use_position) {
      const auto pos = positional_encoding(p.x, p.y, params_);
      for (int k = 0; k < params_.d_model; ++k)
        out(static_cast<Eigen::Index>(i), k) = pos[k];
    } else {
      out.row(static_cast<Eigen::Index>(i)).setZero();
    }
    if (params_.use_category) {
      out.row(static_cast<Eigen::Index>(i)) +=
          category_table_->value.row(p.category);
    }
  }
  return out;
}

nn::Var PointEncoder::encode_points(
    nn::Graph& g, const std::vector<PointAnnotation>& points) const {
  nn::Mat pos(static_cast<Eigen::Index>(points.size()), params_.d_model);
  std::vector<int> cats(points.size());
  for (size_t i = 0; i < points.size(); ++i) {
    const auto& p = points[i];
    if (p.category < 0 || p.category >= params_.num_categories)
      throw std::out_of_range("encode_points: category out of range");
    cats[i] = p.category;
    if (params_.use_position) {
      const auto enc = positional_encoding(p.x, p.y, params_);
      for (int k = 0; k < params_.d_model; ++k)
        pos(static_cast<Eigen::Index>(i), k) = enc[k];
    } else {
      pos.row(static_cast<Eigen::Index>(i)).setZero();
    }
  }
  nn::Var pos_var = g.leaf(std::move(pos));
  if (!params_.use_category) return pos_var;
  nn::Var cat = nn::gather_rows(g.param(*category_table_), std::move(cats));
  return nn::add(pos_var, cat);
}

}  // namespace pointdet
