#pragma once

#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "lmkit/counts.hpp"
#include "lmkit/rng.hpp"
#include "lmkit/sample.hpp"
#include "lmkit/scoring.hpp"
#include "lmkit/spec.hpp"

namespace lmkit {

struct NamedValue {
  std::string name;
  double value = 0.0;
};

// One separable component of the complete-data log-likelihood together with
// its parameters. Coordinates are unconstrained (logits or coefficients).
class Block {
 public:
  virtual ~Block() = default;

  virtual int size() const = 0;
  virtual Eigen::VectorXd coords() const = 0;
  virtual void set_coords(const Eigen::VectorXd& coords) = 0;
  virtual std::vector<std::string> coord_names() const = 0;

  // Expected complete-data log-likelihood of this block as a function of its
  // coordinates, given the E-step statistics.
  virtual std::unique_ptr<ScoringProblem> problem(const Sample& sample,
                                                  const ExpectedCounts& counts) const = 0;

  // Gradient of the block's expected complete-data log-likelihood.
  Eigen::VectorXd q_gradient(const Sample& sample, const ExpectedCounts& counts) const;

  // Default M-step: Fisher scoring from the current coordinates.
  virtual void m_step(const Sample& sample, const ExpectedCounts& counts,
                      const ScoringOptions& options);

  virtual void randomize(Rng& rng) = 0;
  virtual void reset() = 0;

  // Quantities monitored for convergence.
  virtual Eigen::VectorXd values() const { return coords(); }

  // Probabilities to report (resolved at zero covariates when covariates enter).
  virtual std::vector<NamedValue> probabilities() const = 0;

  virtual bool permutable() const { return false; }
  virtual void permute(const std::vector<int>& order);
  // Separate relabeling per occasion, orders[t] for 0-based occasion t; only
  // blocks whose likelihood contribution is invariant under it support this.
  virtual bool occasion_permutable() const { return false; }
  virtual void permute_occasions(const std::vector<std::vector<int>>& orders);

  virtual nlohmann::json to_json() const = 0;
  virtual void from_json(const nlohmann::json& doc) = 0;

  // Appends violated invariants.
  virtual void validate(std::vector<std::string>& issues) const;
};

class InitialBlock : public Block {
 public:
  virtual std::unique_ptr<InitialBlock> clone() const = 0;
  // pi for a unit with first-occasion covariates x1 in cluster class w.
  virtual Eigen::VectorXd initial(const Eigen::RowVectorXd& x1, int w) const = 0;
};

class TransitionBlock : public Block {
 public:
  virtual std::unique_ptr<TransitionBlock> clone() const = 0;
  // Transition matrix into 0-based occasion t >= 1.
  virtual Eigen::MatrixXd transition(const Eigen::RowVectorXd& xt, int t, int w) const = 0;
};

class MeasurementBlock : public Block {
 public:
  virtual std::unique_ptr<MeasurementBlock> clone() const = 0;
  virtual const Dims& dims() const = 0;
  virtual int states() const = 0;
  // p(y^(t) | u) for every occasion and state, T x k.
  virtual Eigen::MatrixXd emissions(const Unit& unit) const = 0;
  // Response distribution of variable j (or the joint cells when the block
  // models variables jointly) at occasion t in state u.
  virtual std::vector<Eigen::VectorXd> distributions(const Eigen::RowVectorXd& xt, int t,
                                                     int u) const = 0;
  virtual std::vector<int> draw(const Eigen::RowVectorXd& xt, int t, int u, Rng& rng) const;
  // Scalar location of each state at each occasion (mean response rescaled
  // to [0, 1], averaged over variables), T x k.
  virtual Eigen::MatrixXd occasion_scores() const;
  // Occasion scores averaged over time.
  Eigen::VectorXd state_scores() const;
  virtual bool joint() const { return false; }
};

class ClusterBlock : public Block {
 public:
  virtual std::unique_ptr<ClusterBlock> clone() const = 0;
  virtual Eigen::VectorXd weights(const Eigen::RowVectorXd& z) const = 0;
};

std::unique_ptr<InitialBlock> make_initial_block(const ModelSpec& spec, const Dims& dims);
std::unique_ptr<TransitionBlock> make_transition_block(const ModelSpec& spec, const Dims& dims);
std::unique_ptr<MeasurementBlock> make_measurement_block(const ModelSpec& spec,
                                                         const Dims& dims);
std::unique_ptr<ClusterBlock> make_cluster_block(const ModelSpec& spec, const Dims& dims);

// Shared helpers for block implementations.
namespace detail {

Eigen::VectorXd json_vector(const nlohmann::json& doc, const std::string& field, int size);
nlohmann::json vector_json(const Eigen::VectorXd& v);
Eigen::MatrixXd json_matrix(const nlohmann::json& doc, const std::string& field, int rows,
                            int cols);
nlohmann::json matrix_json(const Eigen::MatrixXd& m);
void check_simplex(const Eigen::VectorXd& p, const std::string& what,
                   std::vector<std::string>& issues);
std::string label(const std::string& base, std::initializer_list<int> indices);

}  // namespace detail

}  // namespace lmkit
