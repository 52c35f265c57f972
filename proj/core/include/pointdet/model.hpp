#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "pointdet/geometry.hpp"
#include "pointdet/image.hpp"
#include "pointdet/losses.hpp"
#include "pointdet/nn.hpp"
#include "pointdet/point_encoder.hpp"

namespace pointdet {

enum class DetectorMode { PointConditioned, SetPrediction };

DetectorMode mode_from_string(const std::string& s);
std::string to_string(DetectorMode m);

// Shared backbone + transformer with two heads. PointConditioned: queries
// come from the point encoder and the head regresses side offsets (box-only
// loss). SetPrediction: learned queries, class head with a no-object slot
// plus a center-form box head.
struct ModelConfig {
  DetectorMode mode = DetectorMode::PointConditioned;
  int canvas_size = 64;
  int in_channels = 1;
  std::vector<int> backbone_channels = {16, 32, 64};  // one stride-2 stage each
  int d_model = 64;
  int num_heads = 4;
  int enc_layers = 2;
  int dec_layers = 2;
  int ffn_dim = 128;
  int num_categories = 4;
  int num_learned_queries = 25;   // set-prediction mode
  float lambda_l1 = 5.0f;
  float lambda_giou = 2.0f;
  float noobj_weight = 0.1f;
  bool absolute_regression = false;  // point mode: (cx,cy,w,h) head instead
  bool aux_loss = false;             // per-decoder-layer losses
  bool use_position = true;          // point encoder ablation switches
  bool use_category = true;
  double pe_temperature = 10000.0;

  int stride() const { return 1 << static_cast<int>(backbone_channels.size()); }
  int feat_size() const { return canvas_size / stride(); }
  void validate() const;
};

void to_json(nlohmann::json& j, const ModelConfig& c);
void from_json(const nlohmann::json& j, ModelConfig& c);

struct Detection {
  Box box;
  int category = 0;
  double score = 0.0;
};

class DetectionModel {
 public:
  DetectionModel(const ModelConfig& cfg, uint64_t seed);

  DetectionModel(const DetectionModel&) = delete;
  DetectionModel& operator=(const DetectionModel&) = delete;
  DetectionModel(DetectionModel&&) = default;
  DetectionModel& operator=(DetectionModel&&) = default;

  const ModelConfig& config() const { return cfg_; }
  const PointEncoder& point_encoder() const { return *point_encoder_; }

  // Backbone feature map (single level, stride s): [feat*feat x C_last].
  nn::Mat backbone_forward(const Image& img) const;

  struct PointPrediction {
    OffsetQuad offsets;  // zero quad in absolute-regression mode
    Box box;             // clamped to the canvas
  };
  // Point-conditioned inference: exactly one prediction per point, in input
  // order. Each box contains its point (relative regression).
  std::vector<PointPrediction> predict_from_points(
      const Image& img, const std::vector<PointAnnotation>& points) const;

  struct SetOutput {
    std::vector<std::vector<double>> probs;  // [nq][C+1]
    std::vector<Box> boxes;                  // clamped to the canvas
  };
  // Set-prediction inference: num_learned_queries outputs.
  SetOutput predict_set(const Image& img) const;
  std::vector<Detection> detect(const Image& img) const;

  // Training losses (mean box loss over queries / DETR-style set loss summed
  // over queries; see pipeline for batch scaling).
  nn::Var point_training_loss(nn::Graph& g, const Image& img,
                              const std::vector<PointAnnotation>& points,
                              const std::vector<Box>& targets) const;
  nn::Var set_training_loss(nn::Graph& g, const Image& img,
                            const std::vector<int>& target_categories,
                            const std::vector<Box>& target_boxes) const;

  std::vector<nn::Parameter*> parameters() { return store_.all(); }
  std::vector<const nn::Parameter*> parameters() const { return store_.all(); }

  void save_checkpoint(const std::string& path, int epoch,
                       uint64_t train_seed) const;
  struct CheckpointMeta {
    int epoch = 0;
    uint64_t train_seed = 0;
  };
  static DetectionModel load_checkpoint(const std::string& path,
                                        CheckpointMeta* meta = nullptr);

 private:
  struct Linear {
    nn::Parameter* w = nullptr;
    nn::Parameter* b = nullptr;
    nn::Var operator()(nn::Graph& g, nn::Var x) const;
  };
  struct Mha {
    Linear q, k, v, o;
    int heads = 1;
    nn::Var operator()(nn::Graph& g, nn::Var query, nn::Var key,
                       nn::Var value) const;
  };
  struct LayerNorm {
    nn::Parameter* gamma = nullptr;
    nn::Parameter* beta = nullptr;
    nn::Var operator()(nn::Graph& g, nn::Var x) const;
  };
  struct EncoderLayer {
    Mha self_attn;
    Linear ffn1, ffn2;
    LayerNorm ln1, ln2;
  };
  struct DecoderLayer {
    Mha self_attn, cross_attn;
    Linear ffn1, ffn2;
    LayerNorm ln1, ln2, ln3;
  };
  struct ConvStage {
    nn::Parameter* w = nullptr;
    nn::Parameter* b = nullptr;
    LayerNorm ln;
  };

  Linear make_linear(const std::string& name, int in, int out, uint64_t seed);
  Mha make_mha(const std::string& name, uint64_t seed);
  LayerNorm make_layer_norm(const std::string& name);

  // memory [feat^2 x d_model]
  nn::Var encode_image(nn::Graph& g, const Image& img) const;
  // decoder outputs per layer (last element = final), given query pos
  std::vector<nn::Var> decode(nn::Graph& g, nn::Var memory,
                              nn::Var query_pos) const;
  nn::Var offsets_head(nn::Graph& g, nn::Var x) const;      // sigmoid [n x 4]
  nn::Var box_head(nn::Graph& g, nn::Var x) const;          // sigmoid [n x 4]
  nn::Var class_logits_head(nn::Graph& g, nn::Var x) const; // [n x C+1]

  ModelConfig cfg_;
  nn::ParameterStore store_;
  std::optional<PointEncoder> point_encoder_;
  std::vector<ConvStage> backbone_;
  Linear input_proj_;
  std::vector<EncoderLayer> encoder_;
  std::vector<DecoderLayer> decoder_;
  Linear offset_fc1_, offset_fc2_, offset_fc3_;
  Linear class_head_;
  nn::Parameter* learned_queries_ = nullptr;
  nn::Mat grid_pos_;  // fixed positional map of the feature grid

  friend struct ModelTestAccess;
};

}  // namespace pointdet
