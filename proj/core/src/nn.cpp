#include "pointdet/nn.hpp"

#include <cmath>
#include <stdexcept>

#include "pointdet/rng.hpp"

namespace pointdet::nn {

namespace {

void check(bool cond, const char* msg) {
  if (!cond) throw std::invalid_argument(msg);
}

}  // namespace

// ---- Graph ----

Var Graph::leaf(Mat value) {
  Node n;
  n.graph = this;
  n.value = std::move(value);
  nodes_.push_back(std::move(n));
  return &nodes_.back();
}

Var Graph::constant(float value) {
  Mat m(1, 1);
  m(0, 0) = value;
  return leaf(std::move(m));
}

Var Graph::variable(Mat value) {
  Node n;
  n.graph = this;
  n.value = std::move(value);
  n.needs_grad = true;
  nodes_.push_back(std::move(n));
  return &nodes_.back();
}

Var Graph::param(const Parameter& p) {
  auto it = param_lookup_.find(&p);
  if (it != param_lookup_.end()) return it->second;
  Node n;
  n.graph = this;
  n.value = p.value;
  n.needs_grad = true;
  n.param = &p;
  nodes_.push_back(std::move(n));
  Var v = &nodes_.back();
  param_leaves_.push_back(v);
  param_lookup_.emplace(&p, v);
  return v;
}

Var Graph::make(Mat value, bool needs_grad, std::function<void(Node&)> bwd) {
  Node n;
  n.graph = this;
  n.value = std::move(value);
  n.needs_grad = needs_grad;
  if (needs_grad) n.backward = std::move(bwd);
  nodes_.push_back(std::move(n));
  return &nodes_.back();
}

void Graph::accumulate(Node* n, const Mat& g) {
  if (!n->needs_grad) return;
  if (n->grad.size() == 0) {
    n->grad = g;
  } else {
    n->grad += g;
  }
}

void Graph::backward(Var loss) {
  check(loss->graph == this, "backward: node from another graph");
  check(loss->value.rows() == 1 && loss->value.cols() == 1,
        "backward: loss must be 1x1");
  loss->grad = Mat::Ones(1, 1);
  for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
    Node& n = *it;
    if (n.needs_grad && n.grad.size() != 0 && n.backward) n.backward(n);
  }
}

std::vector<std::pair<const Parameter*, const Mat*>> Graph::param_grads()
    const {
  std::vector<std::pair<const Parameter*, const Mat*>> out;
  out.reserve(param_leaves_.size());
  for (const Var v : param_leaves_) {
    if (v->grad.size() != 0) out.emplace_back(v->param, &v->grad);
  }
  return out;
}

// ---- ops ----

namespace {

Graph& graph_of(Var a) { return *a->graph; }

bool any_grad(std::initializer_list<Var> vs) {
  for (Var v : vs)
    if (v->needs_grad) return true;
  return false;
}

void check_same_shape(Var a, Var b, const char* msg) {
  check(a->value.rows() == b->value.rows() &&
            a->value.cols() == b->value.cols(),
        msg);
}

}  // namespace

Var matmul(Var a, Var b) {
  check(a->value.cols() == b->value.rows(), "matmul: inner dims differ");
  Mat y = a->value * b->value;
  return graph_of(a).make(std::move(y), any_grad({a, b}), [a, b](Node& n) {
    if (a->needs_grad) Graph::accumulate(a, Mat(n.grad * b->value.transpose()));
    if (b->needs_grad) Graph::accumulate(b, Mat(a->value.transpose() * n.grad));
  });
}

Var transpose(Var a) {
  Mat y = a->value.transpose();
  return graph_of(a).make(std::move(y), a->needs_grad, [a](Node& n) {
    Graph::accumulate(a, Mat(n.grad.transpose()));
  });
}

Var add(Var a, Var b) {
  check_same_shape(a, b, "add: shape mismatch");
  Mat y = a->value + b->value;
  return graph_of(a).make(std::move(y), any_grad({a, b}), [a, b](Node& n) {
    Graph::accumulate(a, n.grad);
    Graph::accumulate(b, n.grad);
  });
}

Var sub(Var a, Var b) {
  check_same_shape(a, b, "sub: shape mismatch");
  Mat y = a->value - b->value;
  return graph_of(a).make(std::move(y), any_grad({a, b}), [a, b](Node& n) {
    Graph::accumulate(a, n.grad);
    if (b->needs_grad) Graph::accumulate(b, Mat(-n.grad));
  });
}

Var mul(Var a, Var b) {
  check_same_shape(a, b, "mul: shape mismatch");
  Mat y = a->value.cwiseProduct(b->value);
  return graph_of(a).make(std::move(y), any_grad({a, b}), [a, b](Node& n) {
    if (a->needs_grad)
      Graph::accumulate(a, Mat(n.grad.cwiseProduct(b->value)));
    if (b->needs_grad)
      Graph::accumulate(b, Mat(n.grad.cwiseProduct(a->value)));
  });
}

Var divide(Var a, Var b) {
  check_same_shape(a, b, "divide: shape mismatch");
  Mat y = a->value.cwiseQuotient(b->value);
  return graph_of(a).make(std::move(y), any_grad({a, b}), [a, b](Node& n) {
    if (a->needs_grad)
      Graph::accumulate(a, Mat(n.grad.cwiseQuotient(b->value)));
    if (b->needs_grad) {
      Mat g = -(n.grad.cwiseProduct(a->value)
                    .cwiseQuotient(b->value.cwiseProduct(b->value)));
      Graph::accumulate(b, g);
    }
  });
}

Var scale(Var a, float s) {
  Mat y = a->value * s;
  return graph_of(a).make(std::move(y), a->needs_grad, [a, s](Node& n) {
    Graph::accumulate(a, Mat(n.grad * s));
  });
}

Var add_scalar(Var a, float s) {
  Mat y = (a->value.array() + s).matrix();
  return graph_of(a).make(std::move(y), a->needs_grad, [a](Node& n) {
    Graph::accumulate(a, n.grad);
  });
}

Var rowwise_add(Var a, Var row) {
  check(row->value.rows() == 1 && row->value.cols() == a->value.cols(),
        "rowwise_add: row shape mismatch");
  Mat y = a->value;
  y.rowwise() += row->value.row(0);
  return graph_of(a).make(std::move(y), any_grad({a, row}), [a, row](Node& n) {
    Graph::accumulate(a, n.grad);
    if (row->needs_grad) Graph::accumulate(row, Mat(n.grad.colwise().sum()));
  });
}

Var relu(Var a) {
  Mat y = a->value.cwiseMax(0.0f);
  return graph_of(a).make(std::move(y), a->needs_grad, [a](Node& n) {
    Mat mask = (a->value.array() > 0.0f).cast<float>().matrix();
    Graph::accumulate(a, Mat(n.grad.cwiseProduct(mask)));
  });
}

Var sigmoid(Var a) {
  Mat y = (1.0f / (1.0f + (-a->value.array()).exp())).matrix();
  return graph_of(a).make(y, a->needs_grad, [a, y](Node& n) {
    Mat g = (n.grad.array() * y.array() * (1.0f - y.array())).matrix();
    Graph::accumulate(a, g);
  });
}

Var abs_val(Var a) {
  Mat y = a->value.cwiseAbs();
  return graph_of(a).make(std::move(y), a->needs_grad, [a](Node& n) {
    // sign with sign(0) = 0
    Mat s = a->value.unaryExpr([](float v) {
      return v > 0.0f ? 1.0f : (v < 0.0f ? -1.0f : 0.0f);
    });
    Graph::accumulate(a, Mat(n.grad.cwiseProduct(s)));
  });
}

Var minimum(Var a, Var b) {
  check_same_shape(a, b, "minimum: shape mismatch");
  Mat y = a->value.cwiseMin(b->value);
  return graph_of(a).make(std::move(y), any_grad({a, b}), [a, b](Node& n) {
    Mat mask = (a->value.array() <= b->value.array()).cast<float>().matrix();
    if (a->needs_grad) Graph::accumulate(a, Mat(n.grad.cwiseProduct(mask)));
    if (b->needs_grad) {
      Mat inv = (1.0f - mask.array()).matrix();
      Graph::accumulate(b, Mat(n.grad.cwiseProduct(inv)));
    }
  });
}

Var maximum(Var a, Var b) {
  check_same_shape(a, b, "maximum: shape mismatch");
  Mat y = a->value.cwiseMax(b->value);
  return graph_of(a).make(std::move(y), any_grad({a, b}), [a, b](Node& n) {
    Mat mask = (a->value.array() >= b->value.array()).cast<float>().matrix();
    if (a->needs_grad) Graph::accumulate(a, Mat(n.grad.cwiseProduct(mask)));
    if (b->needs_grad) {
      Mat inv = (1.0f - mask.array()).matrix();
      Graph::accumulate(b, Mat(n.grad.cwiseProduct(inv)));
    }
  });
}

Var softmax_rows(Var a) {
  Mat y = a->value;
  for (Eigen::Index i = 0; i < y.rows(); ++i) {
    const float m = y.row(i).maxCoeff();
    y.row(i) = (y.row(i).array() - m).exp().matrix();
    y.row(i) /= y.row(i).sum();
  }
  return graph_of(a).make(y, a->needs_grad, [a, y](Node& n) {
    Mat g(y.rows(), y.cols());
    for (Eigen::Index i = 0; i < y.rows(); ++i) {
      const float dot = n.grad.row(i).dot(y.row(i));
      g.row(i) = ((n.grad.row(i).array() - dot) * y.row(i).array()).matrix();
    }
    Graph::accumulate(a, g);
  });
}

Var log_softmax_rows(Var a) {
  Mat y = a->value;
  for (Eigen::Index i = 0; i < y.rows(); ++i) {
    const float m = y.row(i).maxCoeff();
    const float lse = std::log((y.row(i).array() - m).exp().sum()) + m;
    y.row(i) = (y.row(i).array() - lse).matrix();
  }
  return graph_of(a).make(y, a->needs_grad, [a, y](Node& n) {
    Mat g(y.rows(), y.cols());
    for (Eigen::Index i = 0; i < y.rows(); ++i) {
      const float rowsum = n.grad.row(i).sum();
      g.row(i) =
          (n.grad.row(i).array() - rowsum * y.row(i).array().exp()).matrix();
    }
    Graph::accumulate(a, g);
  });
}

Var layer_norm_rows(Var a, Var gamma, Var beta, float eps) {
  const auto rows = a->value.rows();
  const auto cols = a->value.cols();
  check(gamma->value.rows() == 1 && gamma->value.cols() == cols,
        "layer_norm: gamma shape");
  check(beta->value.rows() == 1 && beta->value.cols() == cols,
        "layer_norm: beta shape");
  Mat xhat(rows, cols);
  Eigen::VectorXf inv_std(rows);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const float mean = a->value.row(i).mean();
    const float var = (a->value.row(i).array() - mean).square().sum() /
                      static_cast<float>(cols);
    const float is = 1.0f / std::sqrt(var + eps);
    inv_std(i) = is;
    xhat.row(i) = ((a->value.row(i).array() - mean) * is).matrix();
  }
  Mat y(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    y.row(i) = xhat.row(i).cwiseProduct(gamma->value.row(0)) +
               beta->value.row(0);
  }
  return graph_of(a).make(
      std::move(y), any_grad({a, gamma, beta}),
      [a, gamma, beta, xhat, inv_std](Node& n) {
        if (beta->needs_grad)
          Graph::accumulate(beta, Mat(n.grad.colwise().sum()));
        if (gamma->needs_grad) {
          Mat gg = n.grad.cwiseProduct(xhat).colwise().sum();
          Graph::accumulate(gamma, gg);
        }
        if (a->needs_grad) {
          Mat dxhat(n.grad.rows(), n.grad.cols());
          for (Eigen::Index i = 0; i < n.grad.rows(); ++i)
            dxhat.row(i) = n.grad.row(i).cwiseProduct(gamma->value.row(0));
          Mat g(n.grad.rows(), n.grad.cols());
          for (Eigen::Index i = 0; i < n.grad.rows(); ++i) {
            const float m1 = dxhat.row(i).mean();
            const float m2 = dxhat.row(i).cwiseProduct(xhat.row(i)).mean();
            g.row(i) = ((dxhat.row(i).array() - m1 -
                         xhat.row(i).array() * m2) *
                        inv_std(i))
                           .matrix();
          }
          Graph::accumulate(a, g);
        }
      });
}

Var gather_rows(Var table, std::vector<int> indices) {
  Mat y(static_cast<Eigen::Index>(indices.size()), table->value.cols());
  for (size_t i = 0; i < indices.size(); ++i) {
    check(indices[i] >= 0 && indices[i] < table->value.rows(),
          "gather_rows: index out of range");
    y.row(static_cast<Eigen::Index>(i)) = table->value.row(indices[i]);
  }
  return graph_of(table).make(
      std::move(y), table->needs_grad,
      [table, idx = std::move(indices)](Node& n) {
        Mat g = Mat::Zero(table->value.rows(), table->value.cols());
        for (size_t i = 0; i < idx.size(); ++i) {
          g.row(idx[i]) += n.grad.row(static_cast<Eigen::Index>(i));
        }
        Graph::accumulate(table, g);
      });
}

Var slice_cols(Var a, int start, int count) {
  check(start >= 0 && count >= 0 && start + count <= a->value.cols(),
        "slice_cols: range");
  Mat y = a->value.middleCols(start, count);
  return graph_of(a).make(
      std::move(y), a->needs_grad, [a, start, count](Node& n) {
        Mat g = Mat::Zero(a->value.rows(), a->value.cols());
        g.middleCols(start, count) = n.grad;
        Graph::accumulate(a, g);
      });
}

Var slice_rows(Var a, int start, int count) {
  check(start >= 0 && count >= 0 && start + count <= a->value.rows(),
        "slice_rows: range");
  Mat y = a->value.middleRows(start, count);
  return graph_of(a).make(
      std::move(y), a->needs_grad, [a, start, count](Node& n) {
        Mat g = Mat::Zero(a->value.rows(), a->value.cols());
        g.middleRows(start, count) = n.grad;
        Graph::accumulate(a, g);
      });
}

Var concat_cols(const std::vector<Var>& parts) {
  check(!parts.empty(), "concat_cols: empty");
  Eigen::Index rows = parts[0]->value.rows();
  Eigen::Index cols = 0;
  bool ng = false;
  for (Var p : parts) {
    check(p->value.rows() == rows, "concat_cols: row mismatch");
    cols += p->value.cols();
    ng = ng || p->needs_grad;
  }
  Mat y(rows, cols);
  Eigen::Index at = 0;
  for (Var p : parts) {
    y.middleCols(at, p->value.cols()) = p->value;
    at += p->value.cols();
  }
  return graph_of(parts[0]).make(std::move(y), ng, [parts](Node& n) {
    Eigen::Index at = 0;
    for (Var p : parts) {
      if (p->needs_grad)
        Graph::accumulate(p, Mat(n.grad.middleCols(at, p->value.cols())));
      at += p->value.cols();
    }
  });
}

Var concat_rows(const std::vector<Var>& parts) {
  check(!parts.empty(), "concat_rows: empty");
  Eigen::Index cols = parts[0]->value.cols();
  Eigen::Index rows = 0;
  bool ng = false;
  for (Var p : parts) {
    check(p->value.cols() == cols, "concat_rows: col mismatch");
    rows += p->value.rows();
    ng = ng || p->needs_grad;
  }
  Mat y(rows, cols);
  Eigen::Index at = 0;
  for (Var p : parts) {
    y.middleRows(at, p->value.rows()) = p->value;
    at += p->value.rows();
  }
  return graph_of(parts[0]).make(std::move(y), ng, [parts](Node& n) {
    Eigen::Index at = 0;
    for (Var p : parts) {
      if (p->needs_grad)
        Graph::accumulate(p, Mat(n.grad.middleRows(at, p->value.rows())));
      at += p->value.rows();
    }
  });
}

Var sum_all(Var a) {
  Mat y(1, 1);
  y(0, 0) = a->value.sum();
  return graph_of(a).make(std::move(y), a->needs_grad, [a](Node& n) {
    Graph::accumulate(
        a, Mat(Mat::Constant(a->value.rows(), a->value.cols(), n.grad(0, 0))));
  });
}

Var mean_all(Var a) {
  check(a->value.size() > 0, "mean_all: empty");
  Mat y(1, 1);
  y(0, 0) = a->value.mean();
  const float inv = 1.0f / static_cast<float>(a->value.size());
  return graph_of(a).make(std::move(y), a->needs_grad, [a, inv](Node& n) {
    Graph::accumulate(a, Mat(Mat::Constant(a->value.rows(), a->value.cols(),
                                           n.grad(0, 0) * inv)));
  });
}

Var conv2d(Var input, int h, int w, Var weight, Var bias, int ksize,
           int stride, int pad) {
  const int cin = static_cast<int>(input->value.cols());
  check(input->value.rows() == static_cast<Eigen::Index>(h) * w,
        "conv2d: input rows != h*w");
  check(weight->value.rows() == static_cast<Eigen::Index>(ksize) * ksize * cin,
        "conv2d: weight rows != k*k*cin");
  const int cout = static_cast<int>(weight->value.cols());
  check(bias->value.rows() == 1 && bias->value.cols() == cout,
        "conv2d: bias shape");
  const int ho = conv_out_dim(h, ksize, stride, pad);
  const int wo = conv_out_dim(w, ksize, stride, pad);

  // im2col: one row per output cell, columns ordered (ky, kx, cin).
  Mat patches = Mat::Zero(static_cast<Eigen::Index>(ho) * wo,
                          static_cast<Eigen::Index>(ksize) * ksize * cin);
  for (int oy = 0; oy < ho; ++oy) {
    for (int ox = 0; ox < wo; ++ox) {
      const Eigen::Index row = static_cast<Eigen::Index>(oy) * wo + ox;
      for (int ky = 0; ky < ksize; ++ky) {
        const int iy = oy * stride - pad + ky;
        if (iy < 0 || iy >= h) continue;
        for (int kx = 0; kx < ksize; ++kx) {
          const int ix = ox * stride - pad + kx;
          if (ix < 0 || ix >= w) continue;
          patches.block(row,
                        (static_cast<Eigen::Index>(ky) * ksize + kx) * cin, 1,
                        cin) =
              input->value.row(static_cast<Eigen::Index>(iy) * w + ix);
        }
      }
    }
  }

  Mat y = patches * weight->value;
  y.rowwise() += bias->value.row(0);
  const bool ng = any_grad({input, weight, bias});
  return graph_of(input).make(
      std::move(y), ng,
      [input, weight, bias, patches, h, w, ksize, stride, pad, ho, wo,
       cin](Node& n) {
        if (bias->needs_grad)
          Graph::accumulate(bias, Mat(n.grad.colwise().sum()));
        if (weight->needs_grad)
          Graph::accumulate(weight, Mat(patches.transpose() * n.grad));
        if (input->needs_grad) {
          Mat dpatches = n.grad * weight->value.transpose();
          Mat g = Mat::Zero(input->value.rows(), input->value.cols());
          for (int oy = 0; oy < ho; ++oy) {
            for (int ox = 0; ox < wo; ++ox) {
              const Eigen::Index row = static_cast<Eigen::Index>(oy) * wo + ox;
              for (int ky = 0; ky < ksize; ++ky) {
                const int iy = oy * stride - pad + ky;
                if (iy < 0 || iy >= h) continue;
                for (int kx = 0; kx < ksize; ++kx) {
                  const int ix = ox * stride - pad + kx;
                  if (ix < 0 || ix >= w) continue;
                  g.row(static_cast<Eigen::Index>(iy) * w + ix) +=
                      dpatches.block(
                          row,
                          (static_cast<Eigen::Index>(ky) * ksize + kx) * cin,
                          1, cin);
                }
              }
            }
          }
          Graph::accumulate(input, g);
        }
      });
}

// ---- ParameterStore / init ----

Parameter& ParameterStore::create(const std::string& name, int rows,
                                  int cols) {
  if (by_name_.count(name))
    throw std::invalid_argument("duplicate parameter name: " + name);
  params_.push_back(Parameter{name, Mat::Zero(rows, cols)});
  by_name_[name] = &params_.back();
  return params_.back();
}

Parameter& ParameterStore::get(const std::string& name) {
  auto it = by_name_.find(name);
  if (it == by_name_.end())
    throw std::out_of_range("unknown parameter: " + name);
  return *it->second;
}

const Parameter& ParameterStore::get(const std::string& name) const {
  auto it = by_name_.find(name);
  if (it == by_name_.end())
    throw std::out_of_range("unknown parameter: " + name);
  return *it->second;
}

std::vector<Parameter*> ParameterStore::all() {
  std::vector<Parameter*> out;
  out.reserve(params_.size());
  for (auto& p : params_) out.push_back(&p);
  return out;
}

std::vector<const Parameter*> ParameterStore::all() const {
  std::vector<const Parameter*> out;
  out.reserve(params_.size());
  for (const auto& p : params_) out.push_back(&p);
  return out;
}

void init_uniform(Parameter& p, float lo, float hi, uint64_t seed) {
  auto rng = make_rng(seed);
  std::uniform_real_distribution<float> dist(lo, hi);
  for (Eigen::Index i = 0; i < p.value.rows(); ++i)
    for (Eigen::Index j = 0; j < p.value.cols(); ++j) p.value(i, j) = dist(rng);
}

void init_normal(Parameter& p, float mean, float stddev, uint64_t seed) {
  auto rng = make_rng(seed);
  std::normal_distribution<float> dist(mean, stddev);
  for (Eigen::Index i = 0; i < p.value.rows(); ++i)
    for (Eigen::Index j = 0; j < p.value.cols(); ++j) p.value(i, j) = dist(rng);
}

void init_xavier(Parameter& p, uint64_t seed) {
  const float bound =
      std::sqrt(6.0f / static_cast<float>(p.value.rows() + p.value.cols()));
  init_uniform(p, -bound, bound, seed);
}

void init_constant(Parameter& p, float v) { p.value.setConstant(v); }

// ---- AdamOptimizer ----

AdamOptimizer::AdamOptimizer(std::vector<Parameter*> params, AdamConfig cfg)
    : params_(std::move(params)), cfg_(cfg) {
  for (Parameter* p : params_) {
    State s;
    s.grad = Mat::Zero(p->value.rows(), p->value.cols());
    s.m = Mat::Zero(p->value.rows(), p->value.cols());
    s.v = Mat::Zero(p->value.rows(), p->value.cols());
    state_.emplace(p, std::move(s));
  }
}

void AdamOptimizer::zero_grad() {
  for (auto& [p, s] : state_) s.grad.setZero();
}

void AdamOptimizer::accumulate(
    const std::vector<std::pair<const Parameter*, const Mat*>>& grads) {
  for (const auto& [p, g] : grads) {
    auto it = state_.find(p);
    if (it == state_.end())
      throw std::invalid_argument("gradient for unmanaged parameter: " +
                                  p->name);
    it->second.grad += *g;
  }
}

float AdamOptimizer::step(float lr_multiplier) {
  ++t_;
  double sq = 0.0;
  for (Parameter* p : params_) sq += state_.at(p).grad.squaredNorm();
  const float norm = static_cast<float>(std::sqrt(sq));
  float clip = 1.0f;
  if (cfg_.max_grad_norm > 0.0f && norm > cfg_.max_grad_norm)
    clip = cfg_.max_grad_norm / norm;

  const float lr = cfg_.lr * lr_multiplier;
  const float bc1 = 1.0f - std::pow(cfg_.beta1, static_cast<float>(t_));
  const float bc2 = 1.0f - std::pow(cfg_.beta2, static_cast<float>(t_));
  for (Parameter* p : params_) {
    State& s = state_.at(p);
    Mat g = s.grad * clip;
    s.m = cfg_.beta1 * s.m + (1.0f - cfg_.beta1) * g;
    s.v = (cfg_.beta2 * s.v.array() + (1.0f - cfg_.beta2) * g.array().square())
              .matrix();
    p->value.array() -=
        lr * ((s.m.array() / bc1) /
                  ((s.v.array() / bc2).sqrt() + cfg_.eps) +
              cfg_.weight_decay * p->value.array());
    s.grad.setZero();
  }
  return norm;
}

}  // namespace pointdet::nn
