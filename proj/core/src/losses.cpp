#include "pointdet/losses.hpp"

#include <cmath>
#include <stdexcept>

namespace pointdet {

double box_loss(const Box& pred, const Box& target, double l1_weight,
                double giou_weight) {
  const double l1 = std::abs(pred.x1 - target.x1) +
                    std::abs(pred.y1 - target.y1) +
                    std::abs(pred.x2 - target.x2) +
                    std::abs(pred.y2 - target.y2);
  return l1_weight * l1 + giou_weight * (1.0 - giou(pred, target));
}

double set_loss(const SetPredictions& pred,
                const std::vector<int>& target_categories,
                const std::vector<Box>& target_boxes,
                const std::vector<int>& assignment, double noobj_weight,
                double l1_weight, double giou_weight) {
  const size_t nq = pred.probs.size();
  if (pred.boxes.size() != nq)
    throw std::invalid_argument("set_loss: probs/boxes size mismatch");
  if (target_categories.size() != target_boxes.size() ||
      assignment.size() != target_boxes.size())
    throw std::invalid_argument("set_loss: target/assignment size mismatch");

  std::vector<int> matched_target(nq, -1);
  for (size_t t = 0; t < assignment.size(); ++t) {
    const int q = assignment[t];
    if (q < 0 || q >= static_cast<int>(nq))
      throw std::invalid_argument("set_loss: assignment index out of range");
    if (matched_target[q] != -1)
      throw std::invalid_argument("set_loss: assignment is not injective");
    matched_target[q] = static_cast<int>(t);
  }

  double total = 0.0;
  for (size_t q = 0; q < nq; ++q) {
    const auto& probs = pred.probs[q];
    if (probs.empty()) throw std::invalid_argument("set_loss: empty probs row");
    const int noobj_class = static_cast<int>(probs.size()) - 1;
    const int t = matched_target[q];
    if (t >= 0) {
      const int cls = target_categories[t];
      if (cls < 0 || cls >= noobj_class)
        throw std::invalid_argument("set_loss: target category out of range");
      total += -std::log(probs[cls]);
      total += box_loss(pred.boxes[q], target_boxes[t], l1_weight, giou_weight);
    } else {
      total += -noobj_weight * std::log(probs[noobj_class]);
    }
  }
  return total;
}

// ---- graph builders ----

namespace {

using nn::Var;

Var col(Var m, int j) { return nn::slice_cols(m, j, 1); }

}  // namespace

nn::Var corners_from_offsets(nn::Var offsets,
                             const std::vector<PointAnnotation>& points) {
  const auto n = offsets->value.rows();
  if (n != static_cast<Eigen::Index>(points.size()))
    throw std::invalid_argument("corners_from_offsets: row/point mismatch");
  nn::Mat px(n, 1), py(n, 1);
  for (Eigen::Index i = 0; i < n; ++i) {
    px(i, 0) = static_cast<float>(points[static_cast<size_t>(i)].x);
    py(i, 0) = static_cast<float>(points[static_cast<size_t>(i)].y);
  }
  nn::Graph& g = *offsets->graph;
  Var vx = g.leaf(px);
  Var vy = g.leaf(py);
  Var x1 = nn::sub(vx, col(offsets, 0));
  Var y1 = nn::sub(vy, col(offsets, 1));
  Var x2 = nn::add(vx, col(offsets, 2));
  Var y2 = nn::add(vy, col(offsets, 3));
  return nn::concat_cols({x1, y1, x2, y2});
}

nn::Var corners_from_center_form(nn::Var params) {
  Var cx = col(params, 0);
  Var cy = col(params, 1);
  Var hw = nn::scale(col(params, 2), 0.5f);
  Var hh = nn::scale(col(params, 3), 0.5f);
  return nn::concat_cols({nn::sub(cx, hw), nn::sub(cy, hh), nn::add(cx, hw),
                          nn::add(cy, hh)});
}

nn::Var giou_rows(nn::Var pred, nn::Var target) {
  Var px1 = col(pred, 0), py1 = col(pred, 1), px2 = col(pred, 2),
      py2 = col(pred, 3);
  Var tx1 = col(target, 0), ty1 = col(target, 1), tx2 = col(target, 2),
      ty2 = col(target, 3);

  nn::Graph& g = *pred->graph;
  Var zero = g.leaf(nn::Mat::Zero(pred->value.rows(), 1));

  Var iw = nn::maximum(zero, nn::sub(nn::minimum(px2, tx2),
                                     nn::maximum(px1, tx1)));
  Var ih = nn::maximum(zero, nn::sub(nn::minimum(py2, ty2),
                                     nn::maximum(py1, ty1)));
  Var inter = nn::mul(iw, ih);
  Var area_p = nn::mul(nn::sub(px2, px1), nn::sub(py2, py1));
  Var area_t = nn::mul(nn::sub(tx2, tx1), nn::sub(ty2, ty1));
  Var uni = nn::sub(nn::add(area_p, area_t), inter);
  Var iou = nn::divide(inter, uni);
  Var hull_w = nn::sub(nn::maximum(px2, tx2), nn::minimum(px1, tx1));
  Var hull_h = nn::sub(nn::maximum(py2, ty2), nn::minimum(py1, ty1));
  Var hull = nn::mul(hull_w, hull_h);
  return nn::sub(iou, nn::divide(nn::sub(hull, uni), hull));
}

nn::Var box_loss_rows(nn::Var pred, nn::Var target, float l1_weight,
                      float giou_weight) {
  Var diff = nn::abs_val(nn::sub(pred, target));
  Var l1 = nn::add(nn::add(col(diff, 0), col(diff, 1)),
                   nn::add(col(diff, 2), col(diff, 3)));
  Var giou_term = nn::add_scalar(nn::scale(giou_rows(pred, target), -1.0f),
                                 1.0f);
  return nn::add(nn::scale(l1, l1_weight),
                 nn::scale(giou_term, giou_weight));
}

nn::Var corner_constant(nn::Graph& g, const std::vector<Box>& boxes) {
  nn::Mat m(static_cast<Eigen::Index>(boxes.size()), 4);
  for (size_t i = 0; i < boxes.size(); ++i) {
    m(static_cast<Eigen::Index>(i), 0) = static_cast<float>(boxes[i].x1);
    m(static_cast<Eigen::Index>(i), 1) = static_cast<float>(boxes[i].y1);
    m(static_cast<Eigen::Index>(i), 2) = static_cast<float>(boxes[i].x2);
    m(static_cast<Eigen::Index>(i), 3) = static_cast<float>(boxes[i].y2);
  }
  return g.leaf(std::move(m));
}

}  // namespace pointdet
