#include "pointdet/model.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "pointdet/matcher.hpp"
#include "pointdet/rng.hpp"

using nlohmann::json;

namespace pointdet {

DetectorMode mode_from_string(const std::string& s) {
  if (s == "point") return DetectorMode::PointConditioned;
  if (s == "set") return DetectorMode::SetPrediction;
  throw std::invalid_argument("unknown detector mode: " + s);
}

std::string to_string(DetectorMode m) {
  return m == DetectorMode::PointConditioned ? "point" : "set";
}

void ModelConfig::validate() const {
  if (d_model <= 0 || d_model % 4 != 0)
    throw std::invalid_argument("model config: d_model must be divisible by 4");
  if (d_model % num_heads != 0)
    throw std::invalid_argument("model config: d_model % num_heads != 0");
  if (backbone_channels.empty())
    throw std::invalid_argument("model config: backbone_channels empty");
  if (canvas_size % stride() != 0)
    throw std::invalid_argument(
        "model config: canvas_size not divisible by backbone stride");
  if (num_categories < 1)
    throw std::invalid_argument("model config: num_categories < 1");
  if (mode == DetectorMode::SetPrediction && num_learned_queries < 1)
    throw std::invalid_argument("model config: num_learned_queries < 1");
}

void to_json(json& j, const ModelConfig& c) {
  j = json{{"mode", to_string(c.mode)},
           {"canvas_size", c.canvas_size},
           {"in_channels", c.in_channels},
           {"backbone_channels", c.backbone_channels},
           {"d_model", c.d_model},
           {"num_heads", c.num_heads},
           {"enc_layers", c.enc_layers},
           {"dec_layers", c.dec_layers},
           {"ffn_dim", c.ffn_dim},
           {"num_categories", c.num_categories},
           {"num_learned_queries", c.num_learned_queries},
           {"lambda_l1", c.lambda_l1},
           {"lambda_giou", c.lambda_giou},
           {"noobj_weight", c.noobj_weight},
           {"absolute_regression", c.absolute_regression},
           {"aux_loss", c.aux_loss},
           {"use_position", c.use_position},
           {"use_category", c.use_category},
           {"pe_temperature", c.pe_temperature}};
}

void from_json(const json& j, ModelConfig& c) {
  c.mode = mode_from_string(j.value("mode", std::string("point")));
  c.canvas_size = j.value("canvas_size", 64);
  c.in_channels = j.value("in_channels", 1);
  c.backbone_channels =
      j.value("backbone_channels", std::vector<int>{16, 32, 64});
  c.d_model = j.value("d_model", 64);
  c.num_heads = j.value("num_heads", 4);
  c.enc_layers = j.value("enc_layers", 2);
  c.dec_layers = j.value("dec_layers", 2);
  c.ffn_dim = j.value("ffn_dim", 128);
  c.num_categories = j.value("num_categories", 4);
  c.num_learned_queries = j.value("num_learned_queries", 25);
  c.lambda_l1 = j.value("lambda_l1", 5.0f);
  c.lambda_giou = j.value("lambda_giou", 2.0f);
  c.noobj_weight = j.value("noobj_weight", 0.1f);
  c.absolute_regression = j.value("absolute_regression", false);
  c.aux_loss = j.value("aux_loss", false);
  c.use_position = j.value("use_position", true);
  c.use_category = j.value("use_category", true);
  c.pe_temperature = j.value("pe_temperature", 10000.0);
}

// ---- building blocks ----

nn::Var DetectionModel::Linear::operator()(nn::Graph& g, nn::Var x) const {
  return nn::rowwise_add(nn::matmul(x, g.param(*w)), g.param(*b));
}

nn::Var DetectionModel::Mha::operator()(nn::Graph& g, nn::Var query,
                                        nn::Var key, nn::Var value) const {
  nn::Var Q = q(g, query);
  nn::Var K = k(g, key);
  nn::Var V = v(g, value);
  const int d = static_cast<int>(Q->value.cols());
  const int dh = d / heads;
  const float inv_sqrt = 1.0f / std::sqrt(static_cast<float>(dh));
  std::vector<nn::Var> outs;
  outs.reserve(heads);
  for (int h = 0; h < heads; ++h) {
    nn::Var Qh = nn::slice_cols(Q, h * dh, dh);
    nn::Var Kh = nn::slice_cols(K, h * dh, dh);
    nn::Var Vh = nn::slice_cols(V, h * dh, dh);
    nn::Var scores = nn::scale(nn::matmul(Qh, nn::transpose(Kh)), inv_sqrt);
    nn::Var attn = nn::softmax_rows(scores);
    outs.push_back(nn::matmul(attn, Vh));
  }
  return o(g, nn::concat_cols(outs));
}

nn::Var DetectionModel::LayerNorm::operator()(nn::Graph& g, nn::Var x) const {
  return nn::layer_norm_rows(x, g.param(*gamma), g.param(*beta));
}

DetectionModel::Linear DetectionModel::make_linear(const std::string& name,
                                                   int in, int out,
                                                   uint64_t seed) {
  Linear l;
  l.w = &store_.create(name + ".weight", in, out);
  l.b = &store_.create(name + ".bias", 1, out);
  nn::init_xavier(*l.w, seed);
  return l;
}

DetectionModel::Mha DetectionModel::make_mha(const std::string& name,
                                             uint64_t seed) {
  Mha m;
  m.heads = cfg_.num_heads;
  const int d = cfg_.d_model;
  m.q = make_linear(name + ".q", d, d, mix_seed(seed, 1));
  m.k = make_linear(name + ".k", d, d, mix_seed(seed, 2));
  m.v = make_linear(name + ".v", d, d, mix_seed(seed, 3));
  m.o = make_linear(name + ".o", d, d, mix_seed(seed, 4));
  return m;
}

DetectionModel::LayerNorm DetectionModel::make_layer_norm(
    const std::string& name) {
  LayerNorm ln;
  ln.gamma = &store_.create(name + ".gamma", 1, cfg_.d_model);
  ln.beta = &store_.create(name + ".beta", 1, cfg_.d_model);
  nn::init_constant(*ln.gamma, 1.0f);
  return ln;
}

DetectionModel::DetectionModel(const ModelConfig& cfg, uint64_t seed)
    : cfg_(cfg) {
  cfg_.validate();
  uint64_t s = mix_seed(seed, 0xd37ull);

  // backbone: stride-2 conv stages with per-position channel LayerNorm
  int cin = cfg_.in_channels;
  for (size_t i = 0; i < cfg_.backbone_channels.size(); ++i) {
    const int cout = cfg_.backbone_channels[i];
    ConvStage stage;
    const std::string name = "backbone.conv" + std::to_string(i);
    stage.w = &store_.create(name + ".weight", 3 * 3 * cin, cout);
    stage.b = &store_.create(name + ".bias", 1, cout);
    nn::init_xavier(*stage.w, mix_seed(s, 10 + i));
    stage.ln.gamma = &store_.create(name + ".ln.gamma", 1, cout);
    stage.ln.beta = &store_.create(name + ".ln.beta", 1, cout);
    nn::init_constant(*stage.ln.gamma, 1.0f);
    backbone_.push_back(stage);
    cin = cout;
  }
  input_proj_ = make_linear("input_proj", cin, cfg_.d_model, mix_seed(s, 20));

  for (int i = 0; i < cfg_.enc_layers; ++i) {
    EncoderLayer layer;
    const std::string name = "encoder." + std::to_string(i);
    layer.self_attn = make_mha(name + ".self", mix_seed(s, 30 + i));
    layer.ffn1 = make_linear(name + ".ffn1", cfg_.d_model, cfg_.ffn_dim,
                             mix_seed(s, 40 + i));
    layer.ffn2 = make_linear(name + ".ffn2", cfg_.ffn_dim, cfg_.d_model,
                             mix_seed(s, 50 + i));
    layer.ln1 = make_layer_norm(name + ".ln1");
    layer.ln2 = make_layer_norm(name + ".ln2");
    encoder_.push_back(layer);
  }

  for (int i = 0; i < cfg_.dec_layers; ++i) {
    DecoderLayer layer;
    const std::string name = "decoder." + std::to_string(i);
    layer.self_attn = make_mha(name + ".self", mix_seed(s, 60 + i));
    layer.cross_attn = make_mha(name + ".cross", mix_seed(s, 70 + i));
    layer.ffn1 = make_linear(name + ".ffn1", cfg_.d_model, cfg_.ffn_dim,
                             mix_seed(s, 80 + i));
    layer.ffn2 = make_linear(name + ".ffn2", cfg_.ffn_dim, cfg_.d_model,
                             mix_seed(s, 90 + i));
    layer.ln1 = make_layer_norm(name + ".ln1");
    layer.ln2 = make_layer_norm(name + ".ln2");
    layer.ln3 = make_layer_norm(name + ".ln3");
    decoder_.push_back(layer);
  }

  PointEncoderParams pe;
  pe.d_model = cfg_.d_model;
  pe.temperature = cfg_.pe_temperature;
  pe.num_categories = cfg_.num_categories;
  pe.use_position = cfg_.use_position;
  pe.use_category = cfg_.use_category;
  point_encoder_.emplace(pe, store_, mix_seed(s, 100));

  if (cfg_.mode == DetectorMode::SetPrediction) {
    learned_queries_ = &store_.create("queries.embed",
                                      cfg_.num_learned_queries, cfg_.d_model);
    nn::init_normal(*learned_queries_, 0.0f, 1.0f, mix_seed(s, 110));
    class_head_ = make_linear("head.class", cfg_.d_model,
                              cfg_.num_categories + 1, mix_seed(s, 120));
  }

  // box/offset head: 3-layer MLP, sigmoid output
  offset_fc1_ = make_linear("head.box.fc1", cfg_.d_model, cfg_.d_model,
                            mix_seed(s, 130));
  offset_fc2_ = make_linear("head.box.fc2", cfg_.d_model, cfg_.d_model,
                            mix_seed(s, 131));
  offset_fc3_ = make_linear("head.box.fc3", cfg_.d_model, 4,
                            mix_seed(s, 132));
  // start with small extents instead of half-canvas ones
  nn::init_constant(*offset_fc3_.b, -1.5f);

  PointEncoderParams grid_pe = pe;
  grid_pe.use_position = true;
  grid_pe.use_category = true;
  grid_pos_ = positional_grid(cfg_.feat_size(), cfg_.feat_size(), grid_pe);
}

// ---- forward pieces ----

nn::Var DetectionModel::encode_image(nn::Graph& g, const Image& img) const {
  if (img.h != cfg_.canvas_size || img.w != cfg_.canvas_size ||
      img.c != cfg_.in_channels)
    throw std::invalid_argument("encode_image: image size mismatch");

  nn::Mat x(static_cast<Eigen::Index>(img.h) * img.w, img.c);
  for (int y = 0; y < img.h; ++y)
    for (int xcol = 0; xcol < img.w; ++xcol)
      for (int ch = 0; ch < img.c; ++ch)
        x(static_cast<Eigen::Index>(y) * img.w + xcol, ch) =
            img.at(y, xcol, ch);

  nn::Var h = g.leaf(std::move(x));
  int side = img.h;
  for (const auto& stage : backbone_) {
    h = nn::conv2d(h, side, side, g.param(*stage.w), g.param(*stage.b), 3, 2,
                   1);
    side = nn::conv_out_dim(side, 3, 2, 1);
    h = stage.ln(g, h);
    h = nn::relu(h);
  }
  h = input_proj_(g, h);

  nn::Var pos = g.leaf(grid_pos_);
  for (const auto& layer : encoder_) {
    nn::Var qk = nn::add(h, pos);
    nn::Var attn = layer.self_attn(g, qk, qk, h);
    h = layer.ln1(g, nn::add(h, attn));
    nn::Var ffn = layer.ffn2(g, nn::relu(layer.ffn1(g, h)));
    h = layer.ln2(g, nn::add(h, ffn));
  }
  return h;
}

std::vector<nn::Var> DetectionModel::decode(nn::Graph& g, nn::Var memory,
                                            nn::Var query_pos) const {
  nn::Var mem_pos = g.leaf(grid_pos_);
  nn::Var tgt = g.leaf(
      nn::Mat::Zero(query_pos->value.rows(), query_pos->value.cols()));
  std::vector<nn::Var> outputs;
  for (const auto& layer : decoder_) {
    nn::Var qk = nn::add(tgt, query_pos);
    nn::Var attn = layer.self_attn(g, qk, qk, tgt);
    tgt = layer.ln1(g, nn::add(tgt, attn));
    nn::Var q = nn::add(tgt, query_pos);
    nn::Var kk = nn::add(memory, mem_pos);
    nn::Var cross = layer.cross_attn(g, q, kk, memory);
    tgt = layer.ln2(g, nn::add(tgt, cross));
    nn::Var ffn = layer.ffn2(g, nn::relu(layer.ffn1(g, tgt)));
    tgt = layer.ln3(g, nn::add(tgt, ffn));
    outputs.push_back(tgt);
  }
  return outputs;
}

nn::Var DetectionModel::offsets_head(nn::Graph& g, nn::Var x) const {
  nn::Var h = nn::relu(offset_fc1_(g, x));
  h = nn::relu(offset_fc2_(g, h));
  return nn::sigmoid(offset_fc3_(g, h));
}

nn::Var DetectionModel::box_head(nn::Graph& g, nn::Var x) const {
  // same MLP stack; output rows read as (cx, cy, w, h)
  return offsets_head(g, x);
}

nn::Var DetectionModel::class_logits_head(nn::Graph& g, nn::Var x) const {
  return class_head_(g, x);
}

nn::Mat DetectionModel::backbone_forward(const Image& img) const {
  if (img.h != cfg_.canvas_size || img.w != cfg_.canvas_size ||
      img.c != cfg_.in_channels)
    throw std::invalid_argument("backbone_forward: image size mismatch");
  nn::Graph g;
  nn::Mat x(static_cast<Eigen::Index>(img.h) * img.w, img.c);
  for (int y = 0; y < img.h; ++y)
    for (int xcol = 0; xcol < img.w; ++xcol)
      for (int ch = 0; ch < img.c; ++ch)
        x(static_cast<Eigen::Index>(y) * img.w + xcol, ch) =
            img.at(y, xcol, ch);
  nn::Var h = g.leaf(std::move(x));
  int side = img.h;
  for (const auto& stage : backbone_) {
    h = nn::conv2d(h, side, side, g.param(*stage.w), g.param(*stage.b), 3, 2,
                   1);
    side = nn::conv_out_dim(side, 3, 2, 1);
    h = stage.ln(g, h);
    h = nn::relu(h);
  }
  return h->value;
}

namespace {

Box clamp_box(double x1, double y1, double x2, double y2) {
  auto c = [](double v) { return std::clamp(v, 0.0, 1.0); };
  Box b{c(x1), c(y1), c(x2), c(y2)};
  if (b.x2 < b.x1) std::swap(b.x1, b.x2);
  if (b.y2 < b.y1) std::swap(b.y1, b.y2);
  return b;
}

}  // namespace

std::vector<DetectionModel::PointPrediction>
DetectionModel::predict_from_points(
    const Image& img, const std::vector<PointAnnotation>& points) const {
  if (cfg_.mode != DetectorMode::PointConditioned)
    throw std::logic_error(
        "predict_from_points: model is not in point-conditioned mode");
  if (points.empty()) return {};

  nn::Graph g;
  nn::Var memory = encode_image(g, img);
  nn::Var qpos = point_encoder_->encode_points(g, points);
  nn::Var hs = decode(g, memory, qpos).back();

  std::vector<PointPrediction> preds(points.size());
  if (!cfg_.absolute_regression) {
    nn::Var off = offsets_head(g, hs);
    for (size_t i = 0; i < points.size(); ++i) {
      const auto r = static_cast<Eigen::Index>(i);
      OffsetQuad q{off->value(r, 0), off->value(r, 1), off->value(r, 2),
                   off->value(r, 3)};
      preds[i].offsets = q;
      preds[i].box = decode_offsets(points[i], q);
    }
  } else {
    nn::Var params = box_head(g, hs);
    for (size_t i = 0; i < points.size(); ++i) {
      const auto r = static_cast<Eigen::Index>(i);
      const double cx = params->value(r, 0), cy = params->value(r, 1);
      const double w = params->value(r, 2), h = params->value(r, 3);
      preds[i].box = clamp_box(cx - w / 2, cy - h / 2, cx + w / 2, cy + h / 2);
    }
  }
  return preds;
}

DetectionModel::SetOutput DetectionModel::predict_set(const Image& img) const {
  if (cfg_.mode != DetectorMode::SetPrediction)
    throw std::logic_error("predict_set: model is not in set-prediction mode");
  nn::Graph g;
  nn::Var memory = encode_image(g, img);
  nn::Var qpos = g.param(*learned_queries_);
  nn::Var hs = decode(g, memory, qpos).back();
  nn::Var probs = nn::softmax_rows(class_logits_head(g, hs));
  nn::Var params = box_head(g, hs);

  SetOutput out;
  const int nq = cfg_.num_learned_queries;
  out.probs.resize(nq);
  out.boxes.resize(nq);
  for (int i = 0; i < nq; ++i) {
    out.probs[i].resize(cfg_.num_categories + 1);
    for (int c = 0; c <= cfg_.num_categories; ++c)
      out.probs[i][c] = probs->value(i, c);
    const double cx = params->value(i, 0), cy = params->value(i, 1);
    const double w = params->value(i, 2), h = params->value(i, 3);
    out.boxes[i] = clamp_box(cx - w / 2, cy - h / 2, cx + w / 2, cy + h / 2);
  }
  return out;
}

std::vector<Detection> DetectionModel::detect(const Image& img) const {
  const SetOutput out = predict_set(img);
  std::vector<Detection> dets;
  dets.reserve(out.boxes.size());
  for (size_t i = 0; i < out.boxes.size(); ++i) {
    int best = 0;
    for (int c = 1; c < cfg_.num_categories; ++c)
      if (out.probs[i][c] > out.probs[i][best]) best = c;
    dets.push_back(Detection{out.boxes[i], best, out.probs[i][best]});
  }
  return dets;
}

// ---- training losses ----

nn::Var DetectionModel::point_training_loss(
    nn::Graph& g, const Image& img, const std::vector<PointAnnotation>& points,
    const std::vector<Box>& targets) const {
  if (cfg_.mode != DetectorMode::PointConditioned)
    throw std::logic_error("point_training_loss: wrong mode");
  if (points.size() != targets.size())
    throw std::invalid_argument("point_training_loss: size mismatch");
  if (points.empty())
    throw std::invalid_argument("point_training_loss: no points");

  nn::Var memory = encode_image(g, img);
  nn::Var qpos = point_encoder_->encode_points(g, points);
  const auto layer_outputs = decode(g, memory, qpos);
  nn::Var target_corners = corner_constant(g, targets);

  std::vector<nn::Var> losses;
  const size_t first =
      cfg_.aux_loss ? 0 : layer_outputs.size() - 1;
  for (size_t li = first; li < layer_outputs.size(); ++li) {
    nn::Var pred_corners;
    if (!cfg_.absolute_regression) {
      nn::Var off = offsets_head(g, layer_outputs[li]);
      pred_corners = corners_from_offsets(off, points);
    } else {
      pred_corners = corners_from_center_form(box_head(g, layer_outputs[li]));
    }
    losses.push_back(nn::mean_all(box_loss_rows(
        pred_corners, target_corners, cfg_.lambda_l1, cfg_.lambda_giou)));
  }
  nn::Var total = losses[0];
  for (size_t i = 1; i < losses.size(); ++i) total = nn::add(total, losses[i]);
  return total;
}

nn::Var DetectionModel::set_training_loss(
    nn::Graph& g, const Image& img, const std::vector<int>& target_categories,
    const std::vector<Box>& target_boxes) const {
  if (cfg_.mode != DetectorMode::SetPrediction)
    throw std::logic_error("set_training_loss: wrong mode");
  if (target_categories.size() != target_boxes.size())
    throw std::invalid_argument("set_training_loss: size mismatch");

  nn::Var memory = encode_image(g, img);
  nn::Var qpos = g.param(*learned_queries_);
  const auto layer_outputs = decode(g, memory, qpos);

  const int nq = cfg_.num_learned_queries;
  const int nt = static_cast<int>(target_boxes.size());
  const int noobj_class = cfg_.num_categories;

  nn::Var total = nullptr;
  const size_t first = cfg_.aux_loss ? 0 : layer_outputs.size() - 1;
  for (size_t li = first; li < layer_outputs.size(); ++li) {
    nn::Var logits = class_logits_head(g, layer_outputs[li]);
    nn::Var params = box_head(g, layer_outputs[li]);
    nn::Var corners = corners_from_center_form(params);
    nn::Var logp = nn::log_softmax_rows(logits);

    // Hungarian matching on detached values (no gradient through matching)
    std::vector<int> assignment;
    if (nt > 0) {
      nn::Mat prob(nq, noobj_class + 1);
      for (int i = 0; i < nq; ++i) {
        // softmax from log-probs
        for (int c = 0; c <= noobj_class; ++c)
          prob(i, c) = std::exp(logp->value(i, c));
      }
      CostMatrix costs(nt, nq);
      for (int t = 0; t < nt; ++t) {
        for (int q = 0; q < nq; ++q) {
          const Box pb{corners->value(q, 0), corners->value(q, 1),
                       corners->value(q, 2), corners->value(q, 3)};
          double l1 = std::abs(pb.x1 - target_boxes[t].x1) +
                      std::abs(pb.y1 - target_boxes[t].y1) +
                      std::abs(pb.x2 - target_boxes[t].x2) +
                      std::abs(pb.y2 - target_boxes[t].y2);
          costs(t, q) = -static_cast<double>(prob(q, target_categories[t])) +
                        cfg_.lambda_l1 * l1 +
                        cfg_.lambda_giou *
                            (1.0 - giou(pb, target_boxes[t]));
        }
      }
      assignment = hungarian(costs);
    }

    // classification: NLL toward the matched class or no-object
    std::vector<int> wanted(nq, noobj_class);
    std::vector<float> weights(nq, cfg_.noobj_weight);
    for (int t = 0; t < nt; ++t) {
      wanted[assignment[t]] = target_categories[t];
      weights[assignment[t]] = 1.0f;
    }
    nn::Mat sel = nn::Mat::Zero(nq, noobj_class + 1);
    for (int q = 0; q < nq; ++q) sel(q, wanted[q]) = -weights[q];
    nn::Var cls_loss = nn::sum_all(nn::mul(g.leaf(std::move(sel)), logp));

    nn::Var layer_loss = cls_loss;
    if (nt > 0) {
      // gather matched query boxes in target order
      nn::Mat gather = nn::Mat::Zero(nt, nq);
      for (int t = 0; t < nt; ++t) gather(t, assignment[t]) = 1.0f;
      nn::Var matched = nn::matmul(g.leaf(std::move(gather)), corners);
      nn::Var tc = corner_constant(g, target_boxes);
      nn::Var box_terms =
          box_loss_rows(matched, tc, cfg_.lambda_l1, cfg_.lambda_giou);
      layer_loss = nn::add(layer_loss, nn::sum_all(box_terms));
    }
    total = total ? nn::add(total, layer_loss) : layer_loss;
  }
  return total;
}

// ---- checkpointing ----

namespace {
constexpr char kCheckpointMagic[] = "PDCK0001";
}

void DetectionModel::save_checkpoint(const std::string& path, int epoch,
                                     uint64_t train_seed) const {
  json params = json::array();
  for (const auto* p : store_.all()) {
    params.push_back({{"name", p->name},
                      {"rows", p->value.rows()},
                      {"cols", p->value.cols()}});
  }
  json header = {{"config", cfg_},
                 {"epoch", epoch},
                 {"train_seed", train_seed},
                 {"params", params}};
  const std::string hs = header.dump();

  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write checkpoint: " + path);
  f.write(kCheckpointMagic, 8);
  const uint64_t len = hs.size();
  f.write(reinterpret_cast<const char*>(&len), sizeof(len));
  f.write(hs.data(), static_cast<std::streamsize>(hs.size()));
  for (const auto* p : store_.all()) {
    f.write(reinterpret_cast<const char*>(p->value.data()),
            static_cast<std::streamsize>(p->value.size() * sizeof(float)));
  }
}

DetectionModel DetectionModel::load_checkpoint(const std::string& path,
                                               CheckpointMeta* meta) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open checkpoint: " + path);
  char magic[8];
  f.read(magic, 8);
  if (!f || std::memcmp(magic, kCheckpointMagic, 8) != 0)
    throw std::runtime_error("bad checkpoint magic: " + path);
  uint64_t len = 0;
  f.read(reinterpret_cast<char*>(&len), sizeof(len));
  std::string hs(len, '\0');
  f.read(hs.data(), static_cast<std::streamsize>(len));
  if (!f) throw std::runtime_error("truncated checkpoint header: " + path);
  const json header = json::parse(hs);

  const ModelConfig cfg = header.at("config").get<ModelConfig>();
  DetectionModel model(cfg, /*seed=*/0);
  if (meta) {
    meta->epoch = header.at("epoch").get<int>();
    meta->train_seed = header.at("train_seed").get<uint64_t>();
  }

  const auto params = model.store_.all();
  const auto& plist = header.at("params");
  if (plist.size() != params.size())
    throw std::runtime_error("checkpoint parameter count mismatch: " + path);
  for (size_t i = 0; i < params.size(); ++i) {
    const auto& meta_p = plist[i];
    if (meta_p.at("name").get<std::string>() != params[i]->name ||
        meta_p.at("rows").get<Eigen::Index>() != params[i]->value.rows() ||
        meta_p.at("cols").get<Eigen::Index>() != params[i]->value.cols())
      throw std::runtime_error("checkpoint parameter layout mismatch at " +
                               params[i]->name);
    f.read(reinterpret_cast<char*>(params[i]->value.data()),
           static_cast<std::streamsize>(params[i]->value.size() *
                                        sizeof(float)));
  }
  if (!f) throw std::runtime_error("truncated checkpoint data: " + path);
  return model;
}

}  // namespace pointdet
