#include "lmkit/recursions.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace lmkit {

namespace {

void check_shapes(const ChainProbs& chain, const Eigen::MatrixXd& emissions) {
  const auto T = emissions.rows();
  const auto k = emissions.cols();
  if (chain.initial.size() != k) throw std::invalid_argument("initial vector has wrong length");
  if (static_cast<Eigen::Index>(chain.transitions.size()) != T - 1) {
    throw std::invalid_argument("need T - 1 transition matrices");
  }
  for (const auto& P : chain.transitions) {
    if (P.rows() != k || P.cols() != k) throw std::invalid_argument("transition matrix not k x k");
  }
}

}  // namespace

bool Lattice::possible() const { return std::isfinite(log_f); }

ForwardResult forward(const ChainProbs& chain, const Eigen::MatrixXd& emissions) {
  check_shapes(chain, emissions);
  const int T = static_cast<int>(emissions.rows());
  const int k = static_cast<int>(emissions.cols());
  ForwardResult out;
  out.forward.resize(T, k);
  out.log_scale.resize(T);
  Eigen::VectorXd q = chain.initial.cwiseProduct(emissions.row(0).transpose());
  for (int t = 0; t < T; ++t) {
    if (t > 0) {
      q = (chain.transitions[t - 1].transpose() * out.forward.row(t - 1).transpose())
              .cwiseProduct(emissions.row(t).transpose());
    }
    const double c = q.sum();
    if (!(c > 0.0)) {
      out.log_f = -std::numeric_limits<double>::infinity();
      out.forward.bottomRows(T - t).setZero();
      out.log_scale.tail(T - t).setConstant(out.log_f);
      return out;
    }
    out.forward.row(t) = q.transpose() / c;
    out.log_scale[t] = std::log(c);
  }
  out.log_f = out.log_scale.sum();
  return out;
}

Eigen::MatrixXd backward(const ChainProbs& chain, const Eigen::MatrixXd& emissions) {
  check_shapes(chain, emissions);
  const int T = static_cast<int>(emissions.rows());
  const int k = static_cast<int>(emissions.cols());
  Eigen::MatrixXd out(T, k);
  out.row(T - 1).setConstant(1.0 / k);
  for (int t = T - 2; t >= 0; --t) {
    Eigen::VectorXd q = chain.transitions[t] *
                        emissions.row(t + 1).transpose().cwiseProduct(out.row(t + 1).transpose());
    const double c = q.sum();
    if (!(c > 0.0)) {
      out.topRows(t + 1).setZero();
      return out;
    }
    out.row(t) = q.transpose() / c;
  }
  return out;
}

Lattice posteriors(const ChainProbs& chain, const Eigen::MatrixXd& emissions) {
  Lattice lattice;
  ForwardResult fw = forward(chain, emissions);
  lattice.log_f = fw.log_f;
  if (!std::isfinite(fw.log_f)) return lattice;
  lattice.forward = std::move(fw.forward);
  lattice.log_scale = std::move(fw.log_scale);
  lattice.backward = backward(chain, emissions);
  const int T = static_cast<int>(emissions.rows());
  const int k = static_cast<int>(emissions.cols());
  lattice.state.resize(T, k);
  for (int t = 0; t < T; ++t) {
    Eigen::RowVectorXd r = lattice.forward.row(t).cwiseProduct(lattice.backward.row(t));
    lattice.state.row(t) = r / r.sum();
  }
  lattice.pair.resize(T > 0 ? T - 1 : 0);
  for (int t = 1; t < T; ++t) {
    const Eigen::RowVectorXd arrival =
        emissions.row(t).cwiseProduct(lattice.backward.row(t));
    Eigen::MatrixXd R = lattice.forward.row(t - 1).transpose().asDiagonal() *
                        chain.transitions[t - 1] * arrival.asDiagonal();
    lattice.pair[t - 1] = R / R.sum();
  }
  return lattice;
}

}  // namespace lmkit
