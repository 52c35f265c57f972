#pragma once

#include <vector>

#include "pointdet/geometry.hpp"
#include "pointdet/nn.hpp"

namespace pointdet {

// L1-plus-GIoU box regression loss on corner-form boxes:
//   l1_weight * sum |coordinate diffs| + giou_weight * (1 - giou).
// Zero iff the boxes are identical.
double box_loss(const Box& pred, const Box& target, double l1_weight,
                double giou_weight);

// Plain set-prediction outputs, one row per query.
struct SetPredictions {
  std::vector<std::vector<double>> probs;  // [nq][C+1], last = no-object
  std::vector<Box> boxes;                  // [nq]
};

// Matched queries incur class NLL + box loss; unmatched queries incur
// down-weighted no-object NLL. Total is the sum over queries.
// `assignment` maps each target to a distinct query index.
double set_loss(const SetPredictions& pred,
                const std::vector<int>& target_categories,
                const std::vector<Box>& target_boxes,
                const std::vector<int>& assignment, double noobj_weight,
                double l1_weight, double giou_weight);

// ---- graph builders (training path) ----

// Corner boxes from per-point side offsets, without canvas clamping:
// (x - l, y - t, x + r, y + b). Offsets: [n x 4] = (l, t, r, b).
nn::Var corners_from_offsets(nn::Var offsets,
                             const std::vector<PointAnnotation>& points);

// Corner boxes from (cx, cy, w, h) rows, without clamping.
nn::Var corners_from_center_form(nn::Var params);

// Per-row giou between predicted corner boxes and fixed targets: [n x 1].
nn::Var giou_rows(nn::Var pred_corners, nn::Var target_corners);

// Per-row box loss: [n x 1].
nn::Var box_loss_rows(nn::Var pred_corners, nn::Var target_corners,
                      float l1_weight, float giou_weight);

// Targets as a constant [n x 4] corner matrix.
nn::Var corner_constant(nn::Graph& g, const std::vector<Box>& boxes);

}  // namespace pointdet
