#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "lmkit/blocks.hpp"
#include "lmkit/model.hpp"
#include "lmkit/sample.hpp"

namespace lmkit {

class InferenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Gradient of the log-likelihood in the model's coordinates, obtained as the
// gradient of the expected complete-data log-likelihood at the E-step of the
// same parameters.
Eigen::VectorXd em_score(const Model& model, const Sample& sample, int threads = 1);

// Step for coordinate j: max(step, step * |theta_j|).
inline double difference_step(double theta, double step) {
  return std::max(step, step * std::abs(theta));
}

// Minus the central-difference Jacobian of em_score, symmetrized.
Eigen::MatrixXd observed_information(const Model& model, const Sample& sample,
                                     double step = 1e-6, int threads = 1);

struct InformationCriteria {
  double aic = 0.0;
  double bic = 0.0;
};

InformationCriteria information_criteria(double loglik, int g, double n);

struct InferenceOptions {
  double step = 1e-6;
  int threads = 0;  // 0: default_thread_count()
  double rank_tolerance = 1e-8;  // on smallest / largest singular value
};

struct InferenceReport {
  std::vector<std::string> names;
  Eigen::VectorXd coords;
  Eigen::VectorXd score;
  Eigen::MatrixXd information;
  Eigen::VectorXd se;  // empty when the information is singular
  bool identifiable = false;
  int rank = 0;
  double min_singular = 0.0;
  double max_singular = 0.0;
  double loglik = 0.0;
  int g = 0;
  double n = 0.0;
  double aic = 0.0;
  double bic = 0.0;
  // Reported probabilities with delta-method standard errors (NaN when the
  // information is singular).
  std::vector<NamedValue> probabilities;
  std::vector<double> probability_se;
};

InferenceReport infer(const Model& model, const Sample& sample,
                      const InferenceOptions& options = {});

// Deviance D = -2 (constrained - full), clipped to zero above -1e-6. Throws
// InferenceError for more negative values.
double lr_statistic(double loglik_full, double loglik_constrained);

// P(chi-bar^2 >= D) = sum_j w_j P(chi^2_j >= D), chi^2_0 a point mass at zero.
double chi_bar_p_value(double statistic, const std::vector<double>& weights);

double chi_squared_p_value(double statistic, int df);

struct ChiBarWeights {
  std::vector<double> weights;  // index j: j positive components
  std::vector<double> se;       // simulation standard errors
};

// Mixing weights for a non-negativity cone on parameters with the given
// information: counts of positive components of the projection of
// N(0, information^-1) draws onto the cone.
ChiBarWeights chi_bar_weights(const Eigen::MatrixXd& information, int draws = 10000,
                              std::uint64_t seed = 0);

enum class NullKind { chi_squared, chi_bar, chi_bar_monte_carlo };

struct LrNull {
  NullKind kind = NullKind::chi_squared;
  int df = 1;
  std::vector<double> weights;     // chi_bar
  Eigen::MatrixXd information;     // chi_bar_monte_carlo, constrained coordinates
  int draws = 10000;
  std::uint64_t seed = 0;
};

struct LrTestResult {
  double statistic = 0.0;
  double p_value = 1.0;
  int df = 0;
  std::vector<double> weights;
  std::vector<double> weight_se;
};

LrTestResult lr_test(double loglik_full, double loglik_constrained, const LrNull& null);

// Non-negative least squares min |A x - b|, x >= 0 (active-set method).
Eigen::VectorXd nnls(const Eigen::MatrixXd& A, const Eigen::VectorXd& b);

}  // namespace lmkit
