#pragma once

#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "lmkit/blocks.hpp"
#include "lmkit/recursions.hpp"
#include "lmkit/sample.hpp"
#include "lmkit/spec.hpp"

namespace lmkit {

// A latent Markov model instantiated for given dimensions: initial, transition,
// measurement and cluster-mixture blocks. Coordinates are concatenated in that
// order.
class Model {
 public:
  Model(const ModelSpec& spec, const Dims& dims);
  Model(const Model& other);
  Model& operator=(const Model& other);
  Model(Model&&) noexcept = default;
  Model& operator=(Model&&) noexcept = default;

  const ModelSpec& spec() const { return spec_; }
  const Dims& dims() const { return dims_; }
  int states() const { return spec_.k; }
  int classes() const { return spec_.m; }

  InitialBlock& initial() { return *initial_; }
  const InitialBlock& initial() const { return *initial_; }
  TransitionBlock& transition() { return *transition_; }
  const TransitionBlock& transition() const { return *transition_; }
  MeasurementBlock& measurement() { return *measurement_; }
  const MeasurementBlock& measurement() const { return *measurement_; }
  ClusterBlock& cluster() { return *cluster_; }
  const ClusterBlock& cluster() const { return *cluster_; }

  std::vector<Block*> blocks();
  std::vector<const Block*> blocks() const;

  int size() const;
  Eigen::VectorXd coords() const;
  void set_coords(const Eigen::VectorXd& coords);
  std::vector<std::string> coord_names() const;
  Eigen::VectorXd values() const;
  std::vector<NamedValue> probabilities() const;

  // Chain probabilities of one unit given cluster class w.
  ChainProbs chain(const Unit& unit, int w = 0) const;
  Eigen::MatrixXd emissions(const Unit& unit) const;
  // rho_{h,.} for group h of the sample.
  Eigen::VectorXd class_weights(const Sample& sample, int group) const;

  void reset();
  void randomize(Rng& rng);

  // Invariant violations of the current parameter values.
  std::vector<std::string> validate() const;

  nlohmann::json to_json() const;
  // Loads parameter values written by to_json for the same spec and dims.
  void load_json(const nlohmann::json& doc);

 private:
  ModelSpec spec_;
  Dims dims_;
  std::unique_ptr<InitialBlock> initial_;
  std::unique_ptr<TransitionBlock> transition_;
  std::unique_ptr<MeasurementBlock> measurement_;
  std::unique_ptr<ClusterBlock> cluster_;
};

// Probabilities of a unit under the latent model: pi and Pi^(t) resolved at
// its covariates for cluster class w.
ChainProbs resolve_latent(const Model& model, const Unit& unit, int w = 0);

}  // namespace lmkit
