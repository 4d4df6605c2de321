#pragma once

#include <Eigen/Dense>

#include "lmkit/data.hpp"
#include "lmkit/em.hpp"
#include "lmkit/model.hpp"
#include "lmkit/recursions.hpp"
#include "lmkit/sample.hpp"

namespace lmkit {

// rho_h for cluster covariates z: row w - 2 of gamma holds (gamma_0w, gamma_1w')
// for w = 2..m; class 1 is the reference.
Eigen::VectorXd resolve_cluster_mixture(const Eigen::MatrixXd& gamma, const Eigen::RowVectorXd& z);

// Chain probabilities of a cluster member given class w.
ChainProbs resolve_member_chain(const Model& model, const Unit& unit, int w);

// log f_h: the members' manifest log-probabilities mixed over the cluster
// classes. -infinity when the cluster pattern has zero probability.
double cluster_loglik(const Model& model, const Sample& sample, int group);

// Posterior cluster-class weights b_hw, groups x m; rows sum to one.
Eigen::MatrixXd cluster_posteriors(const Model& model, const Sample& sample, int threads = 1);

// EM for the cluster-level mixture. Throws DataError when the data carry no
// cluster column.
FitResult fit_multilevel(const PanelDataset& data, const ModelSpec& spec,
                         const FitOptions& options = {});

}  // namespace lmkit
