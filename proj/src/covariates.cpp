#include "lmkit/covariates.hpp"

#include <cmath>
#include <limits>

namespace lmkit {

Eigen::VectorXd resolve_measurement(const LinkKind& link, const Eigen::MatrixXd& Z,
                                    const Eigen::VectorXd& beta) {
  return invert_link(link, Z * beta);
}

namespace {

Eigen::MatrixXd build_marginal_matrix() {
  // cells: 0 (0,0) 1 (0,1) 2 (0,2) 3 (1,0) 4 (1,1) 5 (1,2)
  const int rows[14][6] = {
      {1, 1, 1, 0, 0, 0},  // Y1 = 0
      {0, 0, 0, 1, 1, 1},  // Y1 = 1
      {1, 0, 0, 1, 0, 0},  // Y2 = 0
      {0, 1, 1, 0, 1, 1},  // Y2 >= 1
      {1, 1, 0, 1, 1, 0},  // Y2 <= 1
      {0, 0, 1, 0, 0, 1},  // Y2 = 2
      {0, 0, 0, 0, 1, 1},  // Y1 = 1, Y2 >= 1
      {1, 0, 0, 0, 0, 0},  // Y1 = 0, Y2 = 0
      {0, 0, 0, 1, 0, 0},  // Y1 = 1, Y2 = 0
      {0, 1, 1, 0, 0, 0},  // Y1 = 0, Y2 >= 1
      {0, 0, 0, 0, 0, 1},  // Y1 = 1, Y2 = 2
      {1, 1, 0, 0, 0, 0},  // Y1 = 0, Y2 <= 1
      {0, 0, 0, 1, 1, 0},  // Y1 = 1, Y2 <= 1
      {0, 0, 1, 0, 0, 0},  // Y1 = 0, Y2 = 2
  };
  Eigen::MatrixXd M(14, 6);
  for (int i = 0; i < 14; ++i) {
    for (int c = 0; c < 6; ++c) M(i, c) = rows[i][c];
  }
  return M;
}

Eigen::MatrixXd build_contrast_matrix() {
  Eigen::MatrixXd C = Eigen::MatrixXd::Zero(5, 14);
  C(0, 1) = 1;
  C(0, 0) = -1;
  C(1, 3) = 1;
  C(1, 2) = -1;
  C(2, 5) = 1;
  C(2, 4) = -1;
  C(3, 6) = 1;
  C(3, 7) = 1;
  C(3, 8) = -1;
  C(3, 9) = -1;
  C(4, 10) = 1;
  C(4, 11) = 1;
  C(4, 12) = -1;
  C(4, 13) = -1;
  return C;
}

// d eta / d theta for theta = log(p / p_0) over cells 1..5.
Eigen::MatrixXd eta_theta_jacobian(const Eigen::VectorXd& p) {
  const Eigen::MatrixXd& M = bivariate_marginal_matrix();
  const Eigen::MatrixXd& C = bivariate_contrast_matrix();
  const Eigen::VectorXd mp = M * p;
  const Eigen::MatrixXd dp_dtheta =
      (Eigen::MatrixXd(p.asDiagonal()) - p * p.transpose()).rightCols(kBivariateCells - 1);
  return C * mp.cwiseInverse().asDiagonal() * M * dp_dtheta;
}

Eigen::VectorXd softmax_theta(const Eigen::VectorXd& theta) {
  Eigen::VectorXd full(kBivariateCells);
  full[0] = 0.0;
  full.tail(kBivariateCells - 1) = theta;
  const double top = full.maxCoeff();
  Eigen::VectorXd p = (full.array() - top).exp();
  return p / p.sum();
}

}  // namespace

const Eigen::MatrixXd& bivariate_marginal_matrix() {
  static const Eigen::MatrixXd M = build_marginal_matrix();
  return M;
}

const Eigen::MatrixXd& bivariate_contrast_matrix() {
  static const Eigen::MatrixXd C = build_contrast_matrix();
  return C;
}

Eigen::VectorXd bivariate_link(const Eigen::VectorXd& p) {
  if (p.size() != kBivariateCells) throw LinkError("bivariate map needs 6 joint cells");
  const Eigen::VectorXd mp = bivariate_marginal_matrix() * p;
  Eigen::VectorXd logs(mp.size());
  const double tiny = std::numeric_limits<double>::min();
  for (int i = 0; i < mp.size(); ++i) logs[i] = std::log(std::max(mp[i], tiny));
  return bivariate_contrast_matrix() * logs;
}

Eigen::VectorXd bivariate_marginal(const Eigen::VectorXd& eta) {
  if (eta.size() != kBivariateEta) throw LinkError("bivariate map needs 5 predictors");
  for (int i = 0; i < eta.size(); ++i) {
    if (!std::isfinite(eta[i])) throw LinkError("bivariate predictors must be finite");
  }
  if (!(eta[1] > eta[2])) {
    throw LinkError("global logits of the second response must be strictly decreasing");
  }
  // independence start from the two marginals
  const Eigen::VectorXd p1 = invert_link(LinkKind{LinkFamily::binary_logit, 0}, eta.head(1));
  const Eigen::VectorXd p2 = invert_link(LinkKind{LinkFamily::global, 0}, eta.segment(1, 2));
  Eigen::VectorXd theta(kBivariateCells - 1);
  for (int c = 1; c < kBivariateCells; ++c) {
    theta[c - 1] = std::log(p1[c / 3] * p2[c % 3]) - std::log(p1[0] * p2[0]);
  }
  Eigen::VectorXd p = softmax_theta(theta);
  Eigen::VectorXd residual = bivariate_link(p) - eta;
  double norm = residual.cwiseAbs().maxCoeff();
  for (int it = 0; it < 200 && norm >= 1e-10; ++it) {
    const Eigen::VectorXd step = eta_theta_jacobian(p).fullPivLu().solve(-residual);
    if (!step.allFinite()) break;
    double scale = 1.0;
    bool improved = false;
    for (int h = 0; h < 40; ++h, scale *= 0.5) {
      const Eigen::VectorXd candidate = theta + scale * step;
      const Eigen::VectorXd q = softmax_theta(candidate);
      if (q.minCoeff() <= 0.0) continue;
      const Eigen::VectorXd r = bivariate_link(q) - eta;
      const double n = r.cwiseAbs().maxCoeff();
      if (n < norm) {
        theta = candidate;
        p = q;
        residual = r;
        norm = n;
        improved = true;
        break;
      }
    }
    if (!improved) break;
  }
  if (!(norm < 1e-10)) {
    throw LinkError("bivariate marginal inversion did not converge (residual " +
                    std::to_string(norm) + ")");
  }
  return p;
}

Eigen::MatrixXd bivariate_jacobian(const Eigen::VectorXd& p) {
  const Eigen::MatrixXd dp_dtheta =
      (Eigen::MatrixXd(p.asDiagonal()) - p * p.transpose()).rightCols(kBivariateCells - 1);
  return dp_dtheta * eta_theta_jacobian(p).inverse();
}

}  // namespace lmkit
