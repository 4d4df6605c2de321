#pragma once

#include <vector>

#include <Eigen/Dense>

namespace lmkit {

// Posterior expectations for one unit under one cluster class, already
// multiplied by the unit weight and the class posterior.
struct UnitPosterior {
  Eigen::MatrixXd state;              // T x k
  std::vector<Eigen::MatrixXd> pair;  // T - 1 matrices, k x k
};

// Expected complete-data sufficient statistics from an E-step.
struct ExpectedCounts {
  int k = 0;
  int T = 0;
  int m = 1;
  int unit_count = 0;
  double total = 0.0;                            // sum of unit weights
  Eigen::VectorXd initial;                       // a^(1)_u
  Eigen::MatrixXd occupancy;                     // a^(t)_u, T x k
  std::vector<Eigen::MatrixXd> transitions;      // a^(t)_uv, t = 1..T-1
  std::vector<std::vector<Eigen::MatrixXd>> responses;  // [j][t], k x l_j
  // Same quantities split by cluster class.
  Eigen::MatrixXd class_initial;                              // m x k
  std::vector<std::vector<Eigen::MatrixXd>> class_transitions;  // [w][t - 1]
  std::vector<UnitPosterior> units;              // index w * unit_count + i
  Eigen::MatrixXd cluster;                       // groups x m, posterior class weights

  const UnitPosterior& unit(int w, int i) const { return units[w * unit_count + i]; }

  // Zeroed statistics of the given shape.
  static ExpectedCounts zeros(int k, int T, int m, const std::vector<int>& levels, int units,
                              int groups);
};

}  // namespace lmkit
