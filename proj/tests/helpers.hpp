#pragma once

#include <cmath>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "lmkit/data.hpp"
#include "lmkit/model.hpp"
#include "lmkit/recursions.hpp"
#include "lmkit/rng.hpp"
#include "lmkit/sample.hpp"
#include "lmkit/spec.hpp"

namespace lmtest {

using lmkit::ChainProbs;
using lmkit::Dims;
using lmkit::Model;
using lmkit::ModelSpec;
using lmkit::PanelDataset;

// Long-format panel from y[i][t] (one response variable).
inline PanelDataset panel(const std::vector<std::vector<int>>& y) {
  std::ostringstream csv;
  csv << "id,time,y1\n";
  for (size_t i = 0; i < y.size(); ++i) {
    for (size_t t = 0; t < y[i].size(); ++t) csv << (i + 1) << ',' << (t + 1) << ',' << y[i][t] << '\n';
  }
  std::istringstream in(csv.str());
  return lmkit::load_panel(in);
}

inline PanelDataset panel_from_csv(const std::string& text, const lmkit::PanelSchema& schema = {}) {
  std::istringstream in(text);
  return lmkit::load_panel(in, schema);
}

inline Dims dims(int T, std::vector<int> levels, int covariates = 0, int cluster_covariates = 0) {
  Dims d;
  d.T = T;
  d.levels = std::move(levels);
  d.covariates = covariates;
  d.cluster_covariates = cluster_covariates;
  return d;
}

// Basic model k = 2 with one binary response used across several tests:
// pi = (0.6, 0.4), Pi = [[0.7, 0.3], [0.2, 0.8]], phi_{1|1} = 0.1, phi_{1|2} = 0.9.
inline Model worked_model(int T = 2) {
  ModelSpec spec;
  spec.k = 2;
  Model model(spec, dims(T, {2}));
  nlohmann::json doc = model.to_json();
  doc["initial"]["pi"] = {0.6, 0.4};
  doc["transition"]["matrices"] = nlohmann::json::array();
  for (int t = 1; t < T; ++t) doc["transition"]["matrices"].push_back({{0.7, 0.3}, {0.2, 0.8}});
  nlohmann::json occ = nlohmann::json::array();
  for (int t = 0; t < T; ++t) occ.push_back({{0.9, 0.1}, {0.1, 0.9}});
  doc["measurement"]["phi"] = nlohmann::json::array({occ});
  model.load_json(doc);
  return model;
}

inline Model random_model(const ModelSpec& spec, const Dims& d, std::uint64_t seed) {
  Model model(spec, d);
  model.reset();
  lmkit::Rng rng(seed);
  model.randomize(rng);
  return model;
}

// Sum over all k^T latent paths of p(u) p(y | u) for emissions e (T x k).
inline double brute_force_f(const ChainProbs& chain, const Eigen::MatrixXd& e) {
  const int T = static_cast<int>(e.rows());
  const int k = static_cast<int>(e.cols());
  std::vector<int> u(T, 0);
  double total = 0.0;
  while (true) {
    double p = chain.initial[u[0]] * e(0, u[0]);
    for (int t = 1; t < T; ++t) p *= chain.transitions[t - 1](u[t - 1], u[t]) * e(t, u[t]);
    total += p;
    int pos = T - 1;
    while (pos >= 0 && ++u[pos] == k) u[pos--] = 0;
    if (pos < 0) break;
  }
  return total;
}

// Visits every latent path with its joint probability.
inline void for_each_path(const ChainProbs& chain, const Eigen::MatrixXd& e,
                          const std::function<void(const std::vector<int>&, double)>& visit) {
  const int T = static_cast<int>(e.rows());
  const int k = static_cast<int>(e.cols());
  std::vector<int> u(T, 0);
  while (true) {
    double p = chain.initial[u[0]] * e(0, u[0]);
    for (int t = 1; t < T; ++t) p *= chain.transitions[t - 1](u[t - 1], u[t]) * e(t, u[t]);
    visit(u, p);
    int pos = T - 1;
    while (pos >= 0 && ++u[pos] == k) u[pos--] = 0;
    if (pos < 0) break;
  }
}

inline lmkit::Unit unit_with(const Eigen::MatrixXi& y, int covariates = 0) {
  lmkit::Unit unit;
  unit.y = y;
  unit.x = Eigen::MatrixXd::Zero(y.rows(), covariates);
  return unit;
}

// Sample holding a single unit with responses y (T x r).
inline lmkit::Sample single_unit_sample(const Eigen::MatrixXi& y, std::vector<int> levels) {
  lmkit::Sample s;
  s.occasions = static_cast<int>(y.rows());
  s.levels = std::move(levels);
  s.units.push_back(unit_with(y));
  s.units[0].subject = 0;
  s.groups = {{0}};
  s.group_covariates = Eigen::MatrixXd(1, 0);
  s.subjects = 1.0;
  return s;
}

// Central finite-difference gradient of f at x.
inline Eigen::VectorXd numeric_gradient(const std::function<double(const Eigen::VectorXd&)>& f,
                                        const Eigen::VectorXd& x, double h = 1e-5) {
  Eigen::VectorXd g(x.size());
  for (int j = 0; j < x.size(); ++j) {
    Eigen::VectorXd a = x, b = x;
    a[j] += h;
    b[j] -= h;
    g[j] = (f(a) - f(b)) / (2.0 * h);
  }
  return g;
}

// Random long-format panel: n subjects, T occasions, responses with the given
// levels, covariates x1..xq on U(-1, 1) and, when cluster_size > 0, a cluster
// column "cl" grouping consecutive subjects plus cluster covariate z1.
inline PanelDataset design_panel(int n, int T, const std::vector<int>& levels, int q,
                                 int cluster_size, std::uint64_t seed) {
  lmkit::Rng rng(seed);
  lmkit::Rng cluster_rng(seed, 1);
  std::ostringstream csv;
  csv << "id,time";
  for (size_t j = 0; j < levels.size(); ++j) csv << ",y" << j + 1;
  for (int c = 0; c < q; ++c) csv << ",x" << c + 1;
  if (cluster_size > 0) csv << ",cl,z1";
  csv << '\n';
  std::vector<double> z;
  for (int i = 0; i < n; ++i) {
    const int h = cluster_size > 0 ? i / cluster_size : 0;
    while (static_cast<int>(z.size()) <= h) z.push_back(cluster_rng.uniform(-1.0, 1.0));
    for (int t = 0; t < T; ++t) {
      csv << i + 1 << ',' << t + 1;
      for (size_t j = 0; j < levels.size(); ++j) {
        // the first subjects cover every category so each level is observed
        const int y = i < levels[j] ? i : static_cast<int>(rng.uniform() * levels[j]);
        csv << ',' << y;
      }
      for (int c = 0; c < q; ++c) csv << ',' << rng.uniform(-1.0, 1.0);
      if (cluster_size > 0) csv << ",c" << h + 1 << ',' << z[h];
      csv << '\n';
    }
  }
  lmkit::PanelSchema schema;
  for (int c = 0; c < q; ++c) schema.covariates.push_back("x" + std::to_string(c + 1));
  if (cluster_size > 0) {
    schema.cluster_column = "cl";
    schema.cluster_covariates = {"z1"};
  }
  return panel_from_csv(csv.str(), schema);
}

struct Family {
  std::string name;
  ModelSpec spec;
  PanelDataset data;
};

// One small instance of every spec family.
inline std::vector<Family> spec_families(std::uint64_t seed) {
  std::vector<Family> out;
  ModelSpec basic;
  basic.k = 2;
  out.push_back({"basic", basic, design_panel(40, 3, {3}, 0, 0, seed)});

  ModelSpec rasch;
  rasch.k = 3;
  rasch.measurement.type = lmkit::MeasurementType::link;
  rasch.measurement.link = lmkit::LinkFamily::binary_logit;
  rasch.measurement.design = lmkit::MeasurementDesign::rasch;
  rasch.transition.type = lmkit::TransitionType::homogeneous;
  out.push_back({"rasch", rasch, design_panel(40, 4, {2}, 0, 0, seed + 1)});

  ModelSpec homogeneous;
  homogeneous.k = 3;
  homogeneous.measurement.type = lmkit::MeasurementType::time_invariant;
  homogeneous.transition.type = lmkit::TransitionType::homogeneous;
  out.push_back({"homogeneous", homogeneous, design_panel(40, 4, {2, 3}, 0, 0, seed + 2)});

  ModelSpec tridiagonal = homogeneous;
  tridiagonal.transition.type = lmkit::TransitionType::logit;
  tridiagonal.transition.mask = lmkit::MaskPattern::tridiagonal;
  out.push_back({"tridiagonal", tridiagonal, design_panel(40, 4, {3}, 0, 0, seed + 3)});

  ModelSpec linear = homogeneous;
  linear.transition.type = lmkit::TransitionType::linear;
  linear.transition.pattern = lmkit::LinearPattern::equal_off_diagonal;
  out.push_back({"linear", linear, design_panel(40, 4, {3}, 0, 0, seed + 4)});

  ModelSpec partial = homogeneous;
  partial.k = 2;
  partial.transition.type = lmkit::TransitionType::partial;
  partial.transition.change_point = 2;
  out.push_back({"partial", partial, design_panel(40, 4, {2}, 0, 0, seed + 5)});

  ModelSpec cov_measurement;
  cov_measurement.k = 2;
  cov_measurement.covariates = {"x1"};
  cov_measurement.placement = lmkit::CovariatePlacement::measurement;
  cov_measurement.measurement.type = lmkit::MeasurementType::link;
  cov_measurement.measurement.link = lmkit::LinkFamily::global;
  cov_measurement.transition.type = lmkit::TransitionType::homogeneous;
  out.push_back({"covariate-measurement", cov_measurement, design_panel(40, 3, {3}, 1, 0, seed + 6)});

  ModelSpec cov_latent;
  cov_latent.k = 3;
  cov_latent.covariates = {"x1", "x2"};
  cov_latent.placement = lmkit::CovariatePlacement::latent;
  cov_latent.initial.type = lmkit::InitialType::logit;
  cov_latent.transition.type = lmkit::TransitionType::logit;
  cov_latent.measurement.type = lmkit::MeasurementType::time_invariant;
  out.push_back({"covariate-latent", cov_latent, design_panel(40, 3, {3}, 2, 0, seed + 7)});

  ModelSpec multilevel;
  multilevel.k = 2;
  multilevel.m = 2;
  multilevel.cluster_covariates = {"z1"};
  multilevel.initial.type = lmkit::InitialType::logit;
  multilevel.transition.type = lmkit::TransitionType::logit;
  multilevel.measurement.type = lmkit::MeasurementType::time_invariant;
  out.push_back({"multilevel", multilevel, design_panel(40, 3, {2}, 0, 4, seed + 8)});

  ModelSpec bivariate;
  bivariate.k = 2;
  bivariate.measurement.type = lmkit::MeasurementType::bivariate_marginal;
  bivariate.transition.type = lmkit::TransitionType::homogeneous;
  out.push_back({"bivariate", bivariate, design_panel(40, 3, {2, 3}, 0, 0, seed + 9)});
  return out;
}

}  // namespace lmtest
