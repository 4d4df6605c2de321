#include "lmkit/multilevel.hpp"

#include <cmath>
#include <limits>

#include "lmkit/parallel.hpp"

namespace lmkit {

namespace {

double log_sum_exp(const Eigen::VectorXd& v) {
  const double top = v.maxCoeff();
  if (!std::isfinite(top)) return top;
  return top + std::log((v.array() - top).exp().sum());
}

// log rho_w + sum_i log f(y_hi | w) for every class w.
Eigen::VectorXd class_joint(const Model& model, const Sample& sample, int group) {
  const int m = model.classes();
  const Eigen::VectorXd rho = model.class_weights(sample, group);
  Eigen::VectorXd joint(m);
  for (int w = 0; w < m; ++w) {
    double total = 0.0;
    for (int i : sample.groups[group]) {
      const Unit& unit = sample.units[i];
      total += forward(resolve_member_chain(model, unit, w), model.emissions(unit)).log_f;
    }
    joint[w] = rho[w] > 0.0 ? std::log(rho[w]) + total
                            : -std::numeric_limits<double>::infinity();
  }
  return joint;
}

}  // namespace

Eigen::VectorXd resolve_cluster_mixture(const Eigen::MatrixXd& gamma, const Eigen::RowVectorXd& z) {
  const int m = static_cast<int>(gamma.rows()) + 1;
  Eigen::VectorXd eta = Eigen::VectorXd::Zero(m);
  for (int w = 1; w < m; ++w) {
    eta[w] = gamma(w - 1, 0);
    for (int c = 0; c + 1 < gamma.cols() && c < z.size(); ++c) eta[w] += gamma(w - 1, c + 1) * z[c];
  }
  const Eigen::ArrayXd e = (eta.array() - eta.maxCoeff()).exp();
  return (e / e.sum()).matrix();
}

ChainProbs resolve_member_chain(const Model& model, const Unit& unit, int w) {
  return model.chain(unit, w);
}

double cluster_loglik(const Model& model, const Sample& sample, int group) {
  return log_sum_exp(class_joint(model, sample, group));
}

Eigen::MatrixXd cluster_posteriors(const Model& model, const Sample& sample, int threads) {
  const int groups = static_cast<int>(sample.groups.size());
  Eigen::MatrixXd b(groups, model.classes());
  parallel_for(groups, threads, [&](int h) {
    const Eigen::VectorXd joint = class_joint(model, sample, h);
    const double total = log_sum_exp(joint);
    if (!std::isfinite(total)) {
      throw FitError("the model assigns zero probability to cluster #" + std::to_string(h + 1));
    }
    b.row(h) = (joint.array() - total).exp().matrix().transpose();
  });
  return b;
}

FitResult fit_multilevel(const PanelDataset& data, const ModelSpec& spec,
                         const FitOptions& options) {
  if (!data.has_clusters()) throw DataError("multilevel fit requires a cluster column");
  return fit(build_sample(data, spec), spec, options);
}

}  // namespace lmkit
