#pragma once

#include <Eigen/Dense>

#include "lmkit/links.hpp"

namespace lmkit {

// Probability vector eta = Z beta mapped through the link.
Eigen::VectorXd resolve_measurement(const LinkKind& link, const Eigen::MatrixXd& Z,
                                    const Eigen::VectorXd& beta);

// Two responses, Y1 binary and Y2 with three categories. Joint cells are
// ordered row-major, cell = 3 * y1 + y2. The five predictors are
//   eta1 = log P(Y1 = 1) / P(Y1 = 0)
//   eta2 = log P(Y2 >= 1) / P(Y2 = 0)
//   eta3 = log P(Y2 = 2) / P(Y2 <= 1)
//   eta4, eta5 = global log-odds ratios of (Y1 >= 1) with (Y2 >= 1), (Y2 >= 2)
// and equal C log(M p) for the matrices below.
inline constexpr int kBivariateCells = 6;
inline constexpr int kBivariateEta = 5;

const Eigen::MatrixXd& bivariate_marginal_matrix();  // M, 14 x 6
const Eigen::MatrixXd& bivariate_contrast_matrix();  // C, 5 x 14

Eigen::VectorXd bivariate_link(const Eigen::VectorXd& p);

// Joint probabilities with C log(M p) = eta. Throws LinkError when the Newton
// inversion does not reach a residual below 1e-10.
Eigen::VectorXd bivariate_marginal(const Eigen::VectorXd& eta);

// d p / d eta at p, 6 x 5.
Eigen::MatrixXd bivariate_jacobian(const Eigen::VectorXd& p);

}  // namespace lmkit
