#pragma once

#include <Eigen/Dense>
#include <vector>

#include "pointdet/geometry.hpp"

namespace pointdet {

// rows = targets, cols = queries, entries = real matching costs.
using CostMatrix = Eigen::MatrixXd;

// DETR-style matching cost: -p(target class) + l1_weight * L1(corners)
// + giou_weight * (1 - giou). Probabilities enter directly, not as logs.
double match_cost(const std::vector<double>& class_probs, const Box& pred_box,
                  int target_category, const Box& target_box,
                  double l1_weight, double giou_weight);

// Optimal injective assignment targets -> queries minimizing total cost.
// Requires cols >= rows and finite entries; O(rows^2 * cols). Ties resolve
// toward lower indices. Returns the assigned column per row.
std::vector<int> hungarian(const CostMatrix& costs);

}  // namespace pointdet
