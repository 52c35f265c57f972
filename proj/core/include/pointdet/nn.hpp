#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <deque>
#include <functional>
#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

namespace pointdet::nn {

using Mat = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// A named learnable matrix. Values are owned here; gradients and optimizer
// state live with the trainer so parameters stay immutable during inference.
struct Parameter {
  std::string name;
  Mat value;
};

class Graph;

// One node of the computation tape. Creation order is a topological order,
// so backward() is a single reverse sweep.
struct Node {
  Graph* graph = nullptr;
  Mat value;
  Mat grad;  // allocated lazily during backward
  bool needs_grad = false;
  const Parameter* param = nullptr;
  std::function<void(Node&)> backward;
};

using Var = Node*;

// Per-forward-pass tape. Gradients w.r.t. parameters are collected locally
// (not into the Parameter), which keeps concurrent graphs over shared
// parameters race-free and gradient reduction order explicit.
class Graph {
 public:
  Var leaf(Mat value);
  Var constant(float value);                 // 1x1
  Var variable(Mat value);                   // leaf with gradient tracking
  Var param(const Parameter& p);             // deduplicated per graph
  Var make(Mat value, bool needs_grad, std::function<void(Node&)> bwd);

  // Backpropagate from a 1x1 loss node.
  void backward(Var loss);

  // (parameter, gradient) pairs in first-use order; valid after backward().
  std::vector<std::pair<const Parameter*, const Mat*>> param_grads() const;

  static void accumulate(Node* n, const Mat& g);

 private:
  std::deque<Node> nodes_;
  std::vector<Node*> param_leaves_;
  std::unordered_map<const Parameter*, Var> param_lookup_;
};

// ---- primitive ops (all shapes are [rows x cols] row-major) ----

Var matmul(Var a, Var b);
Var transpose(Var a);
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);        // elementwise
Var divide(Var a, Var b);     // elementwise
Var scale(Var a, float s);
Var add_scalar(Var a, float s);
Var rowwise_add(Var a, Var row);  // row: [1 x c] broadcast over rows
Var relu(Var a);
Var sigmoid(Var a);
Var abs_val(Var a);
Var minimum(Var a, Var b);    // ties route gradient to a
Var maximum(Var a, Var b);
Var softmax_rows(Var a);
Var log_softmax_rows(Var a);
Var layer_norm_rows(Var a, Var gamma, Var beta, float eps = 1e-5f);
Var gather_rows(Var table, std::vector<int> indices);
Var slice_cols(Var a, int start, int count);
Var slice_rows(Var a, int start, int count);
Var concat_cols(const std::vector<Var>& parts);
Var concat_rows(const std::vector<Var>& parts);
Var sum_all(Var a);           // 1x1
Var mean_all(Var a);          // 1x1

// 2D convolution over a feature map stored as [H*W x Cin] (row = y*W + x).
// weight: [K*K*Cin x Cout] with patch layout (ky, kx, cin); bias: [1 x Cout].
// Zero padding. Output: [Ho*Wo x Cout].
Var conv2d(Var input, int h, int w, Var weight, Var bias, int ksize,
           int stride, int pad);

inline int conv_out_dim(int in, int ksize, int stride, int pad) {
  return (in + 2 * pad - ksize) / stride + 1;
}

// ---- parameter store / init / optimizer ----

// Owns parameters for one model. Registration order is the checkpoint order.
class ParameterStore {
 public:
  Parameter& create(const std::string& name, int rows, int cols);
  Parameter& get(const std::string& name);
  const Parameter& get(const std::string& name) const;
  std::vector<Parameter*> all();
  std::vector<const Parameter*> all() const;
  size_t size() const { return params_.size(); }

 private:
  std::deque<Parameter> params_;
  std::unordered_map<std::string, Parameter*> by_name_;
};

void init_uniform(Parameter& p, float lo, float hi, uint64_t seed);
void init_normal(Parameter& p, float mean, float stddev, uint64_t seed);
// Glorot/fan-based uniform init for a [fan_in x fan_out] weight.
void init_xavier(Parameter& p, uint64_t seed);
void init_constant(Parameter& p, float v);

struct AdamConfig {
  float lr = 1e-3f;
  float beta1 = 0.9f;
  float beta2 = 0.999f;
  float eps = 1e-8f;
  float weight_decay = 1e-4f;
  float max_grad_norm = 1.0f;  // <=0 disables clipping
};

// Decoupled-weight-decay Adam over a fixed parameter set.
class AdamOptimizer {
 public:
  AdamOptimizer(std::vector<Parameter*> params, AdamConfig cfg);

  void zero_grad();
  // Merge one example's gradients (call in a deterministic example order).
  void accumulate(const std::vector<std::pair<const Parameter*, const Mat*>>& grads);
  // Apply one update with the given learning-rate multiplier, then clear
  // accumulated gradients. Returns the pre-clip global gradient norm.
  float step(float lr_multiplier = 1.0f);

 private:
  struct State {
    Mat grad, m, v;
  };
  std::vector<Parameter*> params_;
  std::unordered_map<const Parameter*, State> state_;
  AdamConfig cfg_;
  int64_t t_ = 0;
};

}  // namespace pointdet::nn
