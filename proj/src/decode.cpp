#include "lmkit/decode.hpp"

#include <cmath>
#include <limits>

#include "lmkit/parallel.hpp"

namespace lmkit {

namespace {

constexpr double kMinusInf = -std::numeric_limits<double>::infinity();

double safe_log(double p) { return p > 0.0 ? std::log(p) : kMinusInf; }

// Index of the first maximum.
int first_max(const Eigen::VectorXd& v) {
  int best = 0;
  for (int i = 1; i < v.size(); ++i) {
    if (v[i] > v[best]) best = i;
  }
  return best;
}

}  // namespace

DecodedPath viterbi(const ChainProbs& chain, const Eigen::MatrixXd& emissions) {
  const int T = static_cast<int>(emissions.rows());
  const int k = static_cast<int>(emissions.cols());
  Eigen::MatrixXd score(T, k);
  Eigen::MatrixXi from = Eigen::MatrixXi::Zero(T, k);
  for (int u = 0; u < k; ++u) score(0, u) = safe_log(chain.initial[u]) + safe_log(emissions(0, u));
  for (int t = 1; t < T; ++t) {
    const Eigen::MatrixXd& P = chain.transitions[t - 1];
    for (int v = 0; v < k; ++v) {
      double best = kMinusInf;
      int arg = 0;
      for (int u = 0; u < k; ++u) {
        const double s = score(t - 1, u) + safe_log(P(u, v));
        if (s > best) {
          best = s;
          arg = u;
        }
      }
      from(t, v) = arg;
      score(t, v) = best + safe_log(emissions(t, v));
    }
  }
  DecodedPath out;
  out.path.assign(T, 0);
  if (T == 0) return out;
  const Eigen::VectorXd last = score.row(T - 1).transpose();
  out.path[T - 1] = first_max(last);
  out.log_joint = last[out.path[T - 1]];
  if (!std::isfinite(out.log_joint)) {
    throw DecodeError("the observation has zero probability under the model");
  }
  for (int t = T - 1; t > 0; --t) out.path[t - 1] = from(t, out.path[t]);
  const Lattice lattice = posteriors(chain, emissions);
  out.local = local_decode(lattice);
  out.local_mass.resize(T);
  for (int t = 0; t < T; ++t) out.local_mass[t] = lattice.state(t, out.local[t]);
  return out;
}

std::vector<int> local_decode(const Lattice& lattice) {
  std::vector<int> states(lattice.state.rows(), 0);
  for (int t = 0; t < lattice.state.rows(); ++t) {
    states[t] = first_max(lattice.state.row(t).transpose());
  }
  return states;
}

std::vector<SubjectDecoding> decode_sample(const Model& model, const Sample& sample,
                                           int threads) {
  const int m = model.classes();
  const int groups = static_cast<int>(sample.groups.size());
  std::vector<SubjectDecoding> out(sample.units.size());
  std::vector<int> failed(groups, -1);
  parallel_for(groups, threads, [&](int h) {
    const auto& members = sample.groups[h];
    const int size = static_cast<int>(members.size());
    const Eigen::VectorXd rho = model.class_weights(sample, h);
    std::vector<Eigen::MatrixXd> emissions(size);
    for (int p = 0; p < size; ++p) emissions[p] = model.emissions(sample.units[members[p]]);
    // per class: Viterbi paths, lattices, totals
    std::vector<std::vector<DecodedPath>> paths(m, std::vector<DecodedPath>(size));
    std::vector<std::vector<Lattice>> lattices(m, std::vector<Lattice>(size));
    Eigen::VectorXd map_score = Eigen::VectorXd::Constant(m, kMinusInf);
    Eigen::VectorXd marginal = Eigen::VectorXd::Constant(m, kMinusInf);
    for (int w = 0; w < m; ++w) {
      if (!(rho[w] > 0.0)) continue;
      double map_total = std::log(rho[w]);
      double log_total = std::log(rho[w]);
      bool possible = true;
      for (int p = 0; p < size && possible; ++p) {
        const ChainProbs chain = model.chain(sample.units[members[p]], w);
        lattices[w][p] = posteriors(chain, emissions[p]);
        if (!lattices[w][p].possible()) {
          possible = false;
          break;
        }
        paths[w][p] = viterbi(chain, emissions[p]);
        map_total += paths[w][p].log_joint;
        log_total += lattices[w][p].log_f;
      }
      if (!possible) continue;
      map_score[w] = map_total;
      marginal[w] = log_total;
    }
    const int w_map = first_max(map_score);
    if (!std::isfinite(map_score[w_map])) {
      failed[h] = members[0];
      return;
    }
    const double top = marginal.maxCoeff();
    Eigen::VectorXd b = (marginal.array() - top).exp();
    b /= b.sum();
    for (int p = 0; p < size; ++p) {
      SubjectDecoding& d = out[members[p]];
      d.unit = members[p];
      d.cluster_class = w_map;
      d.decoded = paths[w_map][p];
      d.posterior = Eigen::MatrixXd::Zero(sample.occasions, model.states());
      for (int w = 0; w < m; ++w) {
        if (b[w] > 0.0 && std::isfinite(marginal[w])) d.posterior += b[w] * lattices[w][p].state;
      }
      d.decoded.local.assign(sample.occasions, 0);
      d.decoded.local_mass.assign(sample.occasions, 0.0);
      for (int t = 0; t < sample.occasions; ++t) {
        const int u = first_max(d.posterior.row(t).transpose());
        d.decoded.local[t] = u;
        d.decoded.local_mass[t] = d.posterior(t, u);
      }
    }
  });
  for (int h = 0; h < groups; ++h) {
    if (failed[h] >= 0) {
      throw DecodeError("the model assigns zero probability to cluster or unit #" +
                        std::to_string(failed[h] + 1));
    }
  }
  return out;
}

}  // namespace lmkit
