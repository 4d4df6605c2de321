#pragma once

#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "lmkit/links.hpp"

namespace lmkit {

class ScoringError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Objective sum_c sum_y a_cy log p_cy(beta) over a set of categorical cells.
// Implementations supply p_c(beta) and its Jacobian d p_c / d beta.
class ScoringProblem {
 public:
  virtual ~ScoringProblem() = default;
  virtual int dimension() const = 0;
  virtual int cells() const = 0;
  virtual const Eigen::VectorXd& counts(int cell) const = 0;
  // Returns false when beta is outside the cell's domain.
  virtual bool evaluate(const Eigen::VectorXd& beta, int cell, Eigen::VectorXd& p,
                        Eigen::MatrixXd* jacobian) const = 0;
};

// Ordered-intercept chart: a_1 = r_1, a_s = a_{s-1} - exp(r_s). Groups of
// natural coefficients listed here are strictly decreasing for every r.
struct OrderedGroup {
  int start = 0;
  int length = 0;
};

Eigen::VectorXd ordered_to_natural(const Eigen::VectorXd& free,
                                   const std::vector<OrderedGroup>& groups);
Eigen::VectorXd natural_to_ordered(const Eigen::VectorXd& natural,
                                   const std::vector<OrderedGroup>& groups);
// d natural / d free
Eigen::MatrixXd ordered_jacobian(const Eigen::VectorXd& free,
                                 const std::vector<OrderedGroup>& groups);

// Cells whose predictor is eta = Z_c a(beta) + offset_c, mapped through a link.
// `support` lists the categories that carry probability (others are structural
// zeros); empty means all categories.
struct LinkCell {
  LinkKind link;
  Eigen::MatrixXd design;   // (support - 1) x dimension
  Eigen::VectorXd offset;   // empty or support - 1
  Eigen::VectorXd counts;   // full category length
  std::vector<int> support;
};

// Natural coefficients are ordered(E beta); an empty embedding E is the
// identity.
class LinkCellProblem : public ScoringProblem {
 public:
  LinkCellProblem(int dimension, std::vector<LinkCell> cells,
                  std::vector<OrderedGroup> ordered = {}, Eigen::MatrixXd embedding = {});
  int dimension() const override { return dimension_; }
  int cells() const override { return static_cast<int>(cells_.size()); }
  const Eigen::VectorXd& counts(int cell) const override { return cells_[cell].counts; }
  bool evaluate(const Eigen::VectorXd& beta, int cell, Eigen::VectorXd& p,
                Eigen::MatrixXd* jacobian) const override;

  // Probability vector of an arbitrary cell definition at beta.
  static bool resolve(const LinkCell& cell, const Eigen::VectorXd& natural, Eigen::VectorXd& p,
                      Eigen::MatrixXd* dp_dnatural);

 private:
  void refresh(const Eigen::VectorXd& beta) const;

  int dimension_;
  std::vector<LinkCell> cells_;
  std::vector<OrderedGroup> ordered_;
  Eigen::MatrixXd embedding_;
  // natural coefficients and d natural / d beta at the last beta seen
  mutable Eigen::VectorXd cached_beta_;
  mutable Eigen::VectorXd cached_natural_;
  mutable Eigen::MatrixXd cached_chart_;
};

// Affine cells p_c = base_c + D_c beta; feasible only while every free
// probability stays within [floor, 1].
struct AffineCell {
  Eigen::VectorXd base;
  Eigen::MatrixXd slope;  // l x dimension
  Eigen::VectorXd counts;
  std::vector<int> structural_zero;  // categories fixed at 0
};

class AffineCellProblem : public ScoringProblem {
 public:
  AffineCellProblem(int dimension, std::vector<AffineCell> cells, double floor);
  int dimension() const override { return dimension_; }
  int cells() const override { return static_cast<int>(cells_.size()); }
  const Eigen::VectorXd& counts(int cell) const override { return cells_[cell].counts; }
  bool evaluate(const Eigen::VectorXd& beta, int cell, Eigen::VectorXd& p,
                Eigen::MatrixXd* jacobian) const override;

 private:
  int dimension_;
  std::vector<AffineCell> cells_;
  double floor_;
};

// -infinity when beta is infeasible for some cell with positive counts.
double scoring_objective(const ScoringProblem& problem, const Eigen::VectorXd& beta);

// Score vector and expected information at beta; false when infeasible.
bool scoring_derivatives(const ScoringProblem& problem, const Eigen::VectorXd& beta,
                         Eigen::VectorXd& score, Eigen::MatrixXd& information);

struct ScoringOptions {
  int max_iterations = 100;
  int max_halvings = 20;
  double tolerance = 1e-12;  // on the objective increase, relative to 1 + |objective|
  // Drop the null space of a singular information instead of throwing.
  bool allow_singular = false;
};

struct ScoringResult {
  Eigen::VectorXd beta;
  double objective = 0.0;
  int iterations = 0;
  bool converged = false;
};

// Fisher scoring with step-halving from a feasible beta0. The objective never
// decreases along the iterates. Throws ScoringError when the information is
// singular or beta0 is infeasible.
ScoringResult fisher_scoring(const ScoringProblem& problem, const Eigen::VectorXd& beta0,
                             const ScoringOptions& options = {});

}  // namespace lmkit
