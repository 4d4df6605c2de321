#pragma once

#include <vector>

#include <Eigen/Dense>

namespace lmkit {

// Resolved latent-chain probabilities for one unit.
// transitions[t - 1] maps occasion t - 1 to occasion t (0-based t >= 1);
// entry (u, v) is P(U^(t) = v | U^(t-1) = u).
struct ChainProbs {
  Eigen::VectorXd initial;
  std::vector<Eigen::MatrixXd> transitions;
};

// emissions(t, u) = p(y^(t) | U^(t) = u), product over response variables.
struct ForwardResult {
  Eigen::MatrixXd forward;     // T x k, each row sums to one
  Eigen::VectorXd log_scale;   // log normalizer per occasion
  double log_f = 0.0;          // -infinity when the observation is impossible
};

ForwardResult forward(const ChainProbs& chain, const Eigen::MatrixXd& emissions);

// Normalized backward vectors (T x k); row T - 1 is proportional to ones.
Eigen::MatrixXd backward(const ChainProbs& chain, const Eigen::MatrixXd& emissions);

struct Lattice {
  double log_f = 0.0;
  Eigen::MatrixXd forward;
  Eigen::VectorXd log_scale;
  Eigen::MatrixXd backward;
  Eigen::MatrixXd state;             // r^(t)(u | y), T x k
  std::vector<Eigen::MatrixXd> pair; // pair[t - 1](u, v) = R^(t)(u, v | y), t >= 1

  bool possible() const;
};

// Full forward-backward pass. When the observation has zero probability the
// returned lattice has log_f = -infinity and empty posteriors.
Lattice posteriors(const ChainProbs& chain, const Eigen::MatrixXd& emissions);

}  // namespace lmkit
