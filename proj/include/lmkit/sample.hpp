#pragma once

#include <vector>

#include <Eigen/Dense>

#include "lmkit/data.hpp"
#include "lmkit/spec.hpp"

namespace lmkit {

// How x^(t) is assembled from covariate columns and lagged responses.
struct CovariateDesign {
  std::vector<int> columns;        // dataset covariate indices
  std::vector<int> lag_variables;  // response variables lagged one occasion
  std::vector<int> lag_levels;

  int width() const;
  // x^(t) for one subject; y_prev is null at the first occasion, where lag
  // dummies stay at zero.
  Eigen::RowVectorXd row(const Eigen::RowVectorXd& covariates, const int* y_prev) const;
};

CovariateDesign make_covariate_design(const ModelSpec& spec, const PanelDataset& data);

// A subject, or an aggregated response pattern standing for `weight` subjects.
struct Unit {
  double weight = 1.0;
  int group = 0;
  int subject = -1;    // -1 for aggregated patterns
  Eigen::MatrixXi y;   // T x r
  Eigen::MatrixXd x;   // T x width
};

struct Sample {
  int occasions = 0;
  std::vector<int> levels;
  int covariate_width = 0;
  std::vector<Unit> units;
  // Units of each group in order; each unit forms its own group when the data
  // carry no clusters.
  std::vector<std::vector<int>> groups;
  Eigen::MatrixXd group_covariates;  // groups x q
  bool aggregated = false;
  bool clustered = false;
  double subjects = 0.0;  // total subject weight

  Dims dims() const;
};

// Builds the estimation sample. Response patterns are aggregated when no
// covariates, lags or clusters are involved and `aggregate` is set.
Sample build_sample(const PanelDataset& data, const ModelSpec& spec, bool aggregate = true);

}  // namespace lmkit
