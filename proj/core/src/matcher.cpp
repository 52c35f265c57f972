#include "pointdet/matcher.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace pointdet {

double match_cost(const std::vector<double>& class_probs, const Box& pred_box,
                  int target_category, const Box& target_box,
                  double l1_weight, double giou_weight) {
  if (target_category < 0 ||
      target_category >= static_cast<int>(class_probs.size()))
    throw std::invalid_argument("match_cost: target category out of range");
  const double l1 = std::abs(pred_box.x1 - target_box.x1) +
                    std::abs(pred_box.y1 - target_box.y1) +
                    std::abs(pred_box.x2 - target_box.x2) +
                    std::abs(pred_box.y2 - target_box.y2);
  return -class_probs[target_category] + l1_weight * l1 +
         giou_weight * (1.0 - giou(pred_box, target_box));
}

std::vector<int> hungarian(const CostMatrix& costs) {
  const int n = static_cast<int>(costs.rows());
  const int m = static_cast<int>(costs.cols());
  if (n == 0) return {};
  if (m < n)
    throw std::invalid_argument("hungarian: need cols >= rows");
  if (!costs.allFinite())
    throw std::invalid_argument("hungarian: non-finite cost entry");

  // Shortest-augmenting-path Hungarian with row/column potentials,
  // 1-indexed with a virtual row 0. Strict '<' comparisons make ties
  // resolve toward the lowest column index.
  constexpr double kInf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(m + 1, 0.0);
  std::vector<int> match(m + 1, 0);  // match[j] = row assigned to column j
  std::vector<int> way(m + 1, 0);

  for (int i = 1; i <= n; ++i) {
    match[0] = i;
    int j0 = 0;
    std::vector<double> minv(m + 1, kInf);
    std::vector<char> used(m + 1, 0);
    do {
      used[j0] = 1;
      const int i0 = match[j0];
      int j1 = -1;
      double delta = kInf;
      for (int j = 1; j <= m; ++j) {
        if (used[j]) continue;
        const double cur = costs(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= m; ++j) {
        if (used[j]) {
          u[match[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (match[j0] != 0);
    do {
      const int j1 = way[j0];
      match[j0] = match[j1];
      j0 = j1;
    } while (j0 != 0);
  }

  std::vector<int> assignment(n, -1);
  for (int j = 1; j <= m; ++j) {
    if (match[j] != 0) assignment[match[j] - 1] = j - 1;
  }
  return assignment;
}

}  // namespace pointdet
