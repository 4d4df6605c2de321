#include "lmkit/blocks.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace lmkit {

ExpectedCounts ExpectedCounts::zeros(int k, int T, int m, const std::vector<int>& levels,
                                     int units, int groups) {
  ExpectedCounts c;
  c.k = k;
  c.T = T;
  c.m = m;
  c.unit_count = units;
  c.initial = Eigen::VectorXd::Zero(k);
  c.occupancy = Eigen::MatrixXd::Zero(T, k);
  c.transitions.assign(T > 0 ? T - 1 : 0, Eigen::MatrixXd::Zero(k, k));
  c.responses.resize(levels.size());
  for (size_t j = 0; j < levels.size(); ++j) {
    c.responses[j].assign(T, Eigen::MatrixXd::Zero(k, levels[j]));
  }
  c.class_initial = Eigen::MatrixXd::Zero(m, k);
  c.class_transitions.assign(m, c.transitions);
  c.units.resize(static_cast<size_t>(m) * units);
  c.cluster = Eigen::MatrixXd::Zero(groups, m);
  return c;
}

Eigen::VectorXd Block::q_gradient(const Sample& sample, const ExpectedCounts& counts) const {
  if (size() == 0) return Eigen::VectorXd(0);
  const auto prob = problem(sample, counts);
  Eigen::VectorXd score;
  Eigen::MatrixXd info;
  if (!scoring_derivatives(*prob, coords(), score, info)) {
    throw ScoringError("score undefined at the current parameters");
  }
  return score;
}

void Block::m_step(const Sample& sample, const ExpectedCounts& counts,
                   const ScoringOptions& options) {
  if (size() == 0) return;
  const auto prob = problem(sample, counts);
  ScoringOptions opts = options;
  opts.allow_singular = true;
  const ScoringResult result = fisher_scoring(*prob, coords(), opts);
  set_coords(result.beta);
}

void Block::permute(const std::vector<int>&) {
  throw std::logic_error("block does not support state relabeling");
}

void Block::permute_occasions(const std::vector<std::vector<int>>&) {
  throw std::logic_error("block does not support per-occasion relabeling");
}

void Block::validate(std::vector<std::string>&) const {}

std::vector<int> MeasurementBlock::draw(const Eigen::RowVectorXd& xt, int t, int u,
                                        Rng& rng) const {
  std::vector<int> y;
  for (const auto& p : distributions(xt, t, u)) y.push_back(rng.categorical(p));
  return y;
}

Eigen::MatrixXd MeasurementBlock::occasion_scores() const {
  const Dims& d = dims();
  const int k = states();
  Eigen::MatrixXd scores = Eigen::MatrixXd::Zero(d.T, k);
  const Eigen::RowVectorXd zero = Eigen::RowVectorXd::Zero(d.covariates);
  for (int t = 0; t < d.T; ++t) {
    for (int u = 0; u < k; ++u) {
      const auto dists = distributions(zero, t, u);
      double occasion = 0.0;
      for (const auto& p : dists) {
        double mean = 0.0;
        for (int y = 0; y < p.size(); ++y) mean += y * p[y];
        occasion += mean / (p.size() - 1);
      }
      scores(t, u) = occasion / static_cast<double>(dists.size());
    }
  }
  return scores;
}

Eigen::VectorXd MeasurementBlock::state_scores() const {
  return occasion_scores().colwise().mean().transpose();
}

namespace detail {

Eigen::VectorXd json_vector(const nlohmann::json& doc, const std::string& field, int size) {
  if (!doc.contains(field) || !doc.at(field).is_array()) {
    throw SpecError("parameter field '" + field + "' missing or not a list");
  }
  const auto& node = doc.at(field);
  if (static_cast<int>(node.size()) != size) {
    throw SpecError("parameter field '" + field + "' must have " + std::to_string(size) +
                    " entries");
  }
  Eigen::VectorXd v(size);
  for (int i = 0; i < size; ++i) v[i] = node.at(i).get<double>();
  return v;
}

nlohmann::json vector_json(const Eigen::VectorXd& v) {
  nlohmann::json out = nlohmann::json::array();
  for (int i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

Eigen::MatrixXd json_matrix(const nlohmann::json& doc, const std::string& field, int rows,
                            int cols) {
  if (!doc.contains(field) || !doc.at(field).is_array() ||
      static_cast<int>(doc.at(field).size()) != rows) {
    throw SpecError("parameter field '" + field + "' must be a " + std::to_string(rows) + " x " +
                    std::to_string(cols) + " matrix");
  }
  Eigen::MatrixXd m(rows, cols);
  for (int i = 0; i < rows; ++i) {
    const auto& row = doc.at(field).at(i);
    if (!row.is_array() || static_cast<int>(row.size()) != cols) {
      throw SpecError("parameter field '" + field + "' must be a " + std::to_string(rows) +
                      " x " + std::to_string(cols) + " matrix");
    }
    for (int j = 0; j < cols; ++j) m(i, j) = row.at(j).get<double>();
  }
  return m;
}

nlohmann::json matrix_json(const Eigen::MatrixXd& m) {
  nlohmann::json out = nlohmann::json::array();
  for (int i = 0; i < m.rows(); ++i) out.push_back(vector_json(m.row(i).transpose()));
  return out;
}

void check_simplex(const Eigen::VectorXd& p, const std::string& what,
                   std::vector<std::string>& issues) {
  for (int i = 0; i < p.size(); ++i) {
    if (!(p[i] >= 0.0) || !std::isfinite(p[i])) {
      std::ostringstream msg;
      msg << what << ": entry " << (i + 1) << " is " << p[i] << ", outside [0, 1]";
      issues.push_back(msg.str());
    }
  }
  const double sum = p.sum();
  if (std::abs(sum - 1.0) > 1e-8) {
    std::ostringstream msg;
    msg << what << " sum " << sum << " != 1";
    issues.push_back(msg.str());
  }
}

std::string label(const std::string& base, std::initializer_list<int> indices) {
  std::string out = base + "[";
  bool first = true;
  for (int i : indices) {
    out += (first ? "" : ",") + std::to_string(i);
    first = false;
  }
  return out + "]";
}

}  // namespace detail

}  // namespace lmkit
