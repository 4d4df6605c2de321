#include "lmkit/inference.hpp"

#include <limits>

#include <boost/math/distributions/chi_squared.hpp>

#include "lmkit/em.hpp"
#include "lmkit/parallel.hpp"
#include "lmkit/rng.hpp"

namespace lmkit {

Eigen::VectorXd em_score(const Model& model, const Sample& sample, int threads) {
  const EStepResult e = e_step(model, sample, threads);
  Eigen::VectorXd score(model.size());
  int pos = 0;
  for (const Block* b : model.blocks()) {
    const int s = b->size();
    if (s > 0) score.segment(pos, s) = b->q_gradient(sample, e.counts);
    pos += s;
  }
  return score;
}

Eigen::MatrixXd observed_information(const Model& model, const Sample& sample, double step,
                                     int threads) {
  const int d = model.size();
  const Eigen::VectorXd theta = model.coords();
  Eigen::MatrixXd J(d, d);
  parallel_for(d, threads, [&](int j) {
    const double h = difference_step(theta[j], step);
    Model shifted = model;
    Eigen::VectorXd c = theta;
    c[j] = theta[j] + h;
    shifted.set_coords(c);
    const Eigen::VectorXd up = em_score(shifted, sample);
    c[j] = theta[j] - h;
    shifted.set_coords(c);
    const Eigen::VectorXd down = em_score(shifted, sample);
    J.col(j) = -(up - down) / (2.0 * h);
  });
  return 0.5 * (J + J.transpose());
}

InformationCriteria information_criteria(double loglik, int g, double n) {
  return {-2.0 * loglik + 2.0 * g, -2.0 * loglik + g * std::log(n)};
}

namespace {

// d probabilities / d coords by central differences, one column per coordinate.
Eigen::MatrixXd probability_jacobian(const Model& model, double step) {
  const Eigen::VectorXd theta = model.coords();
  const int rows = static_cast<int>(model.probabilities().size());
  Eigen::MatrixXd D(rows, theta.size());
  Model shifted = model;
  auto values = [&](const Eigen::VectorXd& c) {
    shifted.set_coords(c);
    const auto probs = shifted.probabilities();
    Eigen::VectorXd v(rows);
    for (int r = 0; r < rows; ++r) v[r] = probs[r].value;
    return v;
  };
  for (int j = 0; j < theta.size(); ++j) {
    const double h = difference_step(theta[j], step);
    Eigen::VectorXd c = theta;
    c[j] += h;
    const Eigen::VectorXd up = values(c);
    c[j] = theta[j] - h;
    D.col(j) = (up - values(c)) / (2.0 * h);
  }
  return D;
}

}  // namespace

InferenceReport infer(const Model& model, const Sample& sample, const InferenceOptions& options) {
  const int threads = resolve_threads(options.threads);
  InferenceReport r;
  r.names = model.coord_names();
  r.coords = model.coords();
  r.loglik = log_likelihood(model, sample, threads);
  r.score = em_score(model, sample, threads);
  r.information = observed_information(model, sample, options.step, threads);
  r.g = model.size();
  r.n = sample.subjects;
  const InformationCriteria ic = information_criteria(r.loglik, r.g, r.n);
  r.aic = ic.aic;
  r.bic = ic.bic;
  r.probabilities = model.probabilities();
  r.probability_se.assign(r.probabilities.size(), std::numeric_limits<double>::quiet_NaN());

  if (r.g == 0) {
    r.identifiable = true;
    r.se = Eigen::VectorXd(0);
    r.probability_se.assign(r.probabilities.size(), 0.0);
    return r;
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(r.information);
  const Eigen::VectorXd sv = svd.singularValues();
  r.max_singular = sv[0];
  r.min_singular = sv[sv.size() - 1];
  for (int i = 0; i < sv.size(); ++i) r.rank += sv[i] > options.rank_tolerance * sv[0] ? 1 : 0;
  r.identifiable = sv[0] > 0.0 && r.min_singular / r.max_singular > options.rank_tolerance;
  if (!r.identifiable) return r;

  const Eigen::MatrixXd cov = r.information.ldlt().solve(Eigen::MatrixXd::Identity(r.g, r.g));
  r.se = cov.diagonal().cwiseMax(0.0).cwiseSqrt();
  const Eigen::MatrixXd D = probability_jacobian(model, options.step);
  for (size_t p = 0; p < r.probabilities.size(); ++p) {
    const Eigen::RowVectorXd g = D.row(static_cast<int>(p));
    r.probability_se[p] = std::sqrt(std::max(0.0, (g * cov * g.transpose())(0, 0)));
  }
  return r;
}

double lr_statistic(double loglik_full, double loglik_constrained) {
  const double d = -2.0 * (loglik_constrained - loglik_full);
  if (!std::isfinite(d)) throw InferenceError("likelihood ratio statistic is not finite");
  if (d < -1e-6) {
    throw InferenceError("likelihood ratio statistic is negative (" + std::to_string(d) +
                         "): models not nested or fits not converged");
  }
  return std::max(d, 0.0);
}

double chi_squared_p_value(double statistic, int df) {
  if (df <= 0) return statistic > 0.0 ? 0.0 : 1.0;
  if (statistic <= 0.0) return 1.0;
  const boost::math::chi_squared dist(df);
  return boost::math::cdf(boost::math::complement(dist, statistic));
}

double chi_bar_p_value(double statistic, const std::vector<double>& weights) {
  double p = 0.0;
  for (size_t j = 0; j < weights.size(); ++j) {
    p += weights[j] * chi_squared_p_value(statistic, static_cast<int>(j));
  }
  return std::min(p, 1.0);
}

Eigen::VectorXd nnls(const Eigen::MatrixXd& A, const Eigen::VectorXd& b) {
  const int n = static_cast<int>(A.cols());
  Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
  std::vector<bool> passive(n, false);
  const double tol = 10.0 * std::numeric_limits<double>::epsilon() *
                     A.cwiseAbs().colwise().sum().maxCoeff() * std::max(A.rows(), A.cols());

  auto solve_passive = [&]() {
    std::vector<int> idx;
    for (int j = 0; j < n; ++j) {
      if (passive[j]) idx.push_back(j);
    }
    Eigen::MatrixXd Ap(A.rows(), static_cast<int>(idx.size()));
    for (size_t c = 0; c < idx.size(); ++c) Ap.col(static_cast<int>(c)) = A.col(idx[c]);
    const Eigen::VectorXd sp = Ap.colPivHouseholderQr().solve(b);
    Eigen::VectorXd s = Eigen::VectorXd::Zero(n);
    for (size_t c = 0; c < idx.size(); ++c) s[idx[c]] = sp[static_cast<int>(c)];
    return s;
  };

  for (int outer = 0; outer < 3 * n + 3; ++outer) {
    const Eigen::VectorXd w = A.transpose() * (b - A * x);
    int entering = -1;
    for (int j = 0; j < n; ++j) {
      if (!passive[j] && w[j] > tol && (entering < 0 || w[j] > w[entering])) entering = j;
    }
    if (entering < 0) break;
    passive[entering] = true;
    Eigen::VectorXd s = solve_passive();
    for (int inner = 0; inner < 3 * n + 3; ++inner) {
      double alpha = std::numeric_limits<double>::infinity();
      for (int j = 0; j < n; ++j) {
        if (passive[j] && s[j] <= 0.0) alpha = std::min(alpha, x[j] / (x[j] - s[j]));
      }
      if (!std::isfinite(alpha)) break;
      x += alpha * (s - x);
      for (int j = 0; j < n; ++j) {
        if (passive[j] && x[j] <= tol) {
          passive[j] = false;
          x[j] = 0.0;
        }
      }
      s = solve_passive();
    }
    x = s;
  }
  return x;
}

ChiBarWeights chi_bar_weights(const Eigen::MatrixXd& information, int draws, std::uint64_t seed) {
  const int d = static_cast<int>(information.rows());
  if (draws <= 0) throw InferenceError("chi-bar weights need a positive number of draws");
  const Eigen::LLT<Eigen::MatrixXd> llt(information);
  if (llt.info() != Eigen::Success) {
    throw InferenceError("information of the constrained parameters is not positive definite");
  }
  // Z = L^-T e has covariance information^-1; the projection minimizes
  // |L^T (x - Z)| = |L^T x - e| over x >= 0.
  const Eigen::MatrixXd A = llt.matrixU();
  std::vector<double> hits(d + 1, 0.0);
  const Rng base(seed);
  for (int s = 0; s < draws; ++s) {
    Rng rng = base.split(static_cast<std::uint64_t>(s));
    Eigen::VectorXd e(d);
    for (int i = 0; i < d; ++i) e[i] = rng.normal();
    const Eigen::VectorXd x = nnls(A, e);
    int positive = 0;
    for (int i = 0; i < d; ++i) positive += x[i] > 0.0 ? 1 : 0;
    hits[positive] += 1.0;
  }
  ChiBarWeights out;
  for (int j = 0; j <= d; ++j) {
    const double w = hits[j] / draws;
    out.weights.push_back(w);
    out.se.push_back(std::sqrt(w * (1.0 - w) / draws));
  }
  return out;
}

LrTestResult lr_test(double loglik_full, double loglik_constrained, const LrNull& null) {
  LrTestResult r;
  r.statistic = lr_statistic(loglik_full, loglik_constrained);
  switch (null.kind) {
    case NullKind::chi_squared:
      if (null.df < 0) throw InferenceError("degrees of freedom must be non-negative");
      r.df = null.df;
      r.p_value = chi_squared_p_value(r.statistic, r.df);
      break;
    case NullKind::chi_bar: {
      if (null.weights.empty()) throw InferenceError("chi-bar test needs mixing weights");
      double total = 0.0;
      for (double w : null.weights) {
        if (!(w >= 0.0)) throw InferenceError("chi-bar weights must be non-negative");
        total += w;
      }
      if (std::abs(total - 1.0) > 1e-8) throw InferenceError("chi-bar weights must sum to one");
      r.df = static_cast<int>(null.weights.size()) - 1;
      r.weights = null.weights;
      r.p_value = chi_bar_p_value(r.statistic, r.weights);
      break;
    }
    case NullKind::chi_bar_monte_carlo: {
      const ChiBarWeights w = chi_bar_weights(null.information, null.draws, null.seed);
      r.df = static_cast<int>(null.information.rows());
      r.weights = w.weights;
      r.weight_se = w.se;
      r.p_value = chi_bar_p_value(r.statistic, r.weights);
      break;
    }
  }
  return r;
}

}  // namespace lmkit
