#include "lmkit/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace lmkit {

Eigen::VectorXd ordered_to_natural(const Eigen::VectorXd& free,
                                   const std::vector<OrderedGroup>& groups) {
  Eigen::VectorXd natural = free;
  for (const auto& g : groups) {
    for (int s = 1; s < g.length; ++s) {
      natural[g.start + s] = natural[g.start + s - 1] - std::exp(free[g.start + s]);
    }
  }
  return natural;
}

Eigen::VectorXd natural_to_ordered(const Eigen::VectorXd& natural,
                                   const std::vector<OrderedGroup>& groups) {
  Eigen::VectorXd free = natural;
  for (const auto& g : groups) {
    for (int s = 1; s < g.length; ++s) {
      const double gap = natural[g.start + s - 1] - natural[g.start + s];
      free[g.start + s] = std::log(std::max(gap, 1e-12));
    }
  }
  return free;
}

Eigen::MatrixXd ordered_jacobian(const Eigen::VectorXd& free,
                                 const std::vector<OrderedGroup>& groups) {
  const int n = static_cast<int>(free.size());
  Eigen::MatrixXd H = Eigen::MatrixXd::Identity(n, n);
  for (const auto& g : groups) {
    for (int s = 1; s < g.length; ++s) {
      H(g.start + s, g.start + s) = 0.0;
      H(g.start + s, g.start) = 1.0;
      for (int z = 1; z <= s; ++z) H(g.start + s, g.start + z) = -std::exp(free[g.start + z]);
    }
  }
  return H;
}

LinkCellProblem::LinkCellProblem(int dimension, std::vector<LinkCell> cells,
                                 std::vector<OrderedGroup> ordered, Eigen::MatrixXd embedding)
    : dimension_(dimension),
      cells_(std::move(cells)),
      ordered_(std::move(ordered)),
      embedding_(std::move(embedding)) {}

void LinkCellProblem::refresh(const Eigen::VectorXd& beta) const {
  if (cached_beta_.size() == beta.size() && cached_beta_ == beta && cached_natural_.size() > 0) {
    return;
  }
  const Eigen::VectorXd free = embedding_.size() > 0 ? Eigen::VectorXd(embedding_ * beta) : beta;
  cached_natural_ = ordered_to_natural(free, ordered_);
  cached_chart_ = ordered_jacobian(free, ordered_);
  if (embedding_.size() > 0) cached_chart_ = cached_chart_ * embedding_;
  cached_beta_ = beta;
}

bool LinkCellProblem::resolve(const LinkCell& cell, const Eigen::VectorXd& natural,
                              Eigen::VectorXd& p, Eigen::MatrixXd* dp_dnatural) {
  const int full = static_cast<int>(cell.counts.size());
  if (cell.support.size() == 1) {
    // a single reachable category carries no free logit
    p = Eigen::VectorXd::Unit(full, cell.support[0]);
    if (dp_dnatural) dp_dnatural->setZero(full, cell.design.cols());
    return true;
  }
  Eigen::VectorXd eta = cell.design * natural;
  if (cell.offset.size() > 0) eta += cell.offset;
  Eigen::VectorXd sub;
  try {
    sub = invert_link(cell.link, eta);
  } catch (const LinkError&) {
    return false;
  }
  if (cell.support.empty()) {
    p = sub;
    if (dp_dnatural) *dp_dnatural = link_jacobian(cell.link, eta, sub) * cell.design;
    return true;
  }
  p = Eigen::VectorXd::Zero(full);
  for (size_t i = 0; i < cell.support.size(); ++i) p[cell.support[i]] = sub[i];
  if (dp_dnatural) {
    const Eigen::MatrixXd dsub = link_jacobian(cell.link, eta, sub) * cell.design;
    dp_dnatural->setZero(full, cell.design.cols());
    for (size_t i = 0; i < cell.support.size(); ++i) dp_dnatural->row(cell.support[i]) = dsub.row(i);
  }
  return true;
}

bool LinkCellProblem::evaluate(const Eigen::VectorXd& beta, int cell, Eigen::VectorXd& p,
                               Eigen::MatrixXd* jacobian) const {
  if (ordered_.empty() && embedding_.size() == 0) return resolve(cells_[cell], beta, p, jacobian);
  refresh(beta);
  if (!jacobian) return resolve(cells_[cell], cached_natural_, p, nullptr);
  Eigen::MatrixXd dp;
  if (!resolve(cells_[cell], cached_natural_, p, &dp)) return false;
  *jacobian = dp * cached_chart_;
  return true;
}

AffineCellProblem::AffineCellProblem(int dimension, std::vector<AffineCell> cells, double floor)
    : dimension_(dimension), cells_(std::move(cells)), floor_(floor) {}

bool AffineCellProblem::evaluate(const Eigen::VectorXd& beta, int cell, Eigen::VectorXd& p,
                                 Eigen::MatrixXd* jacobian) const {
  const AffineCell& c = cells_[cell];
  p = c.base + c.slope * beta;
  for (int z : c.structural_zero) p[z] = 0.0;
  for (int y = 0; y < p.size(); ++y) {
    const bool fixed = std::find(c.structural_zero.begin(), c.structural_zero.end(), y) !=
                       c.structural_zero.end();
    if (!fixed && !(p[y] >= floor_)) return false;
  }
  if (jacobian) {
    *jacobian = c.slope;
    for (int z : c.structural_zero) jacobian->row(z).setZero();
  }
  return true;
}

double scoring_objective(const ScoringProblem& problem, const Eigen::VectorXd& beta) {
  constexpr double minus_inf = -std::numeric_limits<double>::infinity();
  double total = 0.0;
  Eigen::VectorXd p;
  for (int c = 0; c < problem.cells(); ++c) {
    if (!problem.evaluate(beta, c, p, nullptr)) return minus_inf;
    const Eigen::VectorXd& a = problem.counts(c);
    for (int y = 0; y < a.size(); ++y) {
      if (a[y] <= 0.0) continue;
      if (!(p[y] > 0.0)) return minus_inf;
      total += a[y] * std::log(p[y]);
    }
  }
  return total;
}

bool scoring_derivatives(const ScoringProblem& problem, const Eigen::VectorXd& beta,
                         Eigen::VectorXd& score, Eigen::MatrixXd& information) {
  const int d = problem.dimension();
  score = Eigen::VectorXd::Zero(d);
  information = Eigen::MatrixXd::Zero(d, d);
  Eigen::VectorXd p;
  Eigen::MatrixXd dp;
  for (int c = 0; c < problem.cells(); ++c) {
    if (!problem.evaluate(beta, c, p, &dp)) return false;
    const Eigen::VectorXd& a = problem.counts(c);
    const double total = a.sum();
    if (total <= 0.0) continue;
    for (int y = 0; y < a.size(); ++y) {
      if (!(p[y] > 0.0)) {
        if (a[y] > 0.0) return false;
        continue;
      }
      score += (a[y] / p[y]) * dp.row(y).transpose();
      information.selfadjointView<Eigen::Lower>().rankUpdate(dp.row(y).transpose(),
                                                             total / p[y]);
    }
  }
  information = information.selfadjointView<Eigen::Lower>();
  return true;
}

namespace {

// Solves F d = s; with allow_singular the null space of F is dropped.
Eigen::VectorXd scoring_step(const Eigen::MatrixXd& F, const Eigen::VectorXd& s,
                             bool allow_singular) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(F);
  const Eigen::VectorXd& values = eig.eigenvalues();
  const double top = std::max(values.cwiseAbs().maxCoeff(), 1e-300);
  const double cutoff = 1e-12 * top;
  int rank = 0;
  for (int i = 0; i < values.size(); ++i) rank += values[i] > cutoff ? 1 : 0;
  if (rank < values.size() && !allow_singular) {
    throw ScoringError("singular information matrix: rank " + std::to_string(rank) + " of " +
                       std::to_string(values.size()));
  }
  Eigen::VectorXd projected = eig.eigenvectors().transpose() * s;
  for (int i = 0; i < values.size(); ++i) {
    projected[i] = values[i] > cutoff ? projected[i] / values[i] : 0.0;
  }
  return eig.eigenvectors() * projected;
}

}  // namespace

ScoringResult fisher_scoring(const ScoringProblem& problem, const Eigen::VectorXd& beta0,
                             const ScoringOptions& options) {
  ScoringResult result;
  result.beta = beta0;
  result.objective = scoring_objective(problem, beta0);
  if (!std::isfinite(result.objective)) {
    throw ScoringError("starting point is outside the parameter space");
  }
  if (problem.dimension() == 0) {
    result.converged = true;
    return result;
  }
  Eigen::VectorXd score;
  Eigen::MatrixXd info;
  for (int it = 0; it < options.max_iterations; ++it) {
    result.iterations = it + 1;
    if (!scoring_derivatives(problem, result.beta, score, info)) {
      throw ScoringError("derivatives undefined at the current iterate");
    }
    const Eigen::VectorXd step = scoring_step(info, score, options.allow_singular);
    double scale = 1.0;
    bool accepted = false;
    Eigen::VectorXd candidate;
    double value = 0.0;
    for (int h = 0; h <= options.max_halvings; ++h, scale *= 0.5) {
      candidate = result.beta + scale * step;
      value = scoring_objective(problem, candidate);
      if (std::isfinite(value) && value >= result.objective) {
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      result.converged = true;
      break;
    }
    const double gain = value - result.objective;
    result.beta = candidate;
    result.objective = value;
    if (gain <= options.tolerance * (1.0 + std::abs(value))) {
      result.converged = true;
      break;
    }
  }
  return result;
}

}  // namespace lmkit
