#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "lmkit/recursions.hpp"

using namespace lmkit;
using lmtest::dims;

namespace {

ChainProbs worked_chain() {
  ChainProbs c;
  c.initial = Eigen::Vector2d(0.6, 0.4);
  Eigen::Matrix2d P;
  P << 0.7, 0.3, 0.2, 0.8;
  c.transitions = {P};
  return c;
}

// y = (1, 1) with phi_{1|1} = 0.1, phi_{1|2} = 0.9
Eigen::MatrixXd worked_emissions() {
  Eigen::MatrixXd e(2, 2);
  e << 0.1, 0.9, 0.1, 0.9;
  return e;
}

void check_lattice_identities(const Lattice& lat) {
  const int T = static_cast<int>(lat.state.rows());
  for (int t = 0; t < T; ++t) CHECK(std::abs(lat.state.row(t).sum() - 1.0) < 1e-10);
  for (int t = 1; t < T; ++t) {
    const Eigen::MatrixXd& R = lat.pair[t - 1];
    CHECK(std::abs(R.sum() - 1.0) < 1e-10);
    CHECK((R.rowwise().sum().transpose() - lat.state.row(t - 1)).cwiseAbs().maxCoeff() < 1e-10);
    CHECK((R.colwise().sum() - lat.state.row(t)).cwiseAbs().maxCoeff() < 1e-10);
  }
}

}  // namespace

TEST_CASE("forward probability of the worked instance") {
  const ForwardResult r = forward(worked_chain(), worked_emissions());
  CHECK(std::exp(r.log_f) == doctest::Approx(0.2868).epsilon(1e-12));
  CHECK(std::exp(r.log_f) == doctest::Approx(lmtest::brute_force_f(worked_chain(), worked_emissions())));
  CHECK(r.log_scale.sum() == doctest::Approx(r.log_f));
}

TEST_CASE("forward with one state and one occasion") {
  ChainProbs c;
  c.initial = Eigen::VectorXd::Ones(1);
  c.transitions.assign(2, Eigen::MatrixXd::Ones(1, 1));
  Eigen::MatrixXd e(3, 1);
  e << 0.3, 0.6, 0.2;
  CHECK(forward(c, e).log_f == doctest::Approx(std::log(0.3 * 0.6 * 0.2)));

  ChainProbs s;
  s.initial = Eigen::Vector2d(0.5, 0.5);
  Eigen::MatrixXd e1(1, 2);
  e1 << 0.2, 0.8;
  CHECK(std::exp(forward(s, e1).log_f) == doctest::Approx(0.5));
}

TEST_CASE("impossible observations give minus infinity") {
  ChainProbs c = worked_chain();
  Eigen::MatrixXd e = Eigen::MatrixXd::Zero(2, 2);
  e(0, 0) = 1.0;
  const ForwardResult r = forward(c, e);
  CHECK(std::isinf(r.log_f));
  CHECK(r.log_f < 0);
  CHECK_FALSE(posteriors(c, e).possible());
}

TEST_CASE("backward vectors") {
  const Eigen::MatrixXd b = backward(worked_chain(), worked_emissions());
  CHECK(std::abs(b(1, 0) - b(1, 1)) < 1e-15);
  // unnormalized q*(1) = Pi diag(e2) 1 = (0.34, 0.74); check proportionality
  CHECK(b(0, 1) / b(0, 0) == doctest::Approx(0.74 / 0.34));
  const Lattice lat = posteriors(worked_chain(), worked_emissions());
  CHECK(std::exp(lat.log_f) == doctest::Approx(0.2868));
}

TEST_CASE("posteriors of the worked instance") {
  const Lattice lat = posteriors(worked_chain(), worked_emissions());
  CHECK(lat.state(0, 1) == doctest::Approx((0.0072 + 0.2592) / 0.2868).epsilon(1e-12));
  CHECK(lat.state(0, 1) == doctest::Approx(0.92887).epsilon(1e-5));
  CHECK(lat.pair[0](1, 1) == doctest::Approx(0.2592 / 0.2868));
  check_lattice_identities(lat);
}

TEST_CASE("identity emissions force the posterior") {
  ChainProbs c;
  c.initial = Eigen::Vector3d(0.2, 0.3, 0.5);
  c.transitions.assign(3, Eigen::MatrixXd::Constant(3, 3, 1.0 / 3));
  const std::vector<int> y = {2, 0, 1, 1};
  Eigen::MatrixXd e = Eigen::MatrixXd::Zero(4, 3);
  for (int t = 0; t < 4; ++t) e(t, y[t]) = 1.0;
  const Lattice lat = posteriors(c, e);
  for (int t = 0; t < 4; ++t) CHECK(lat.state(t, y[t]) == doctest::Approx(1.0));
}

TEST_CASE("forward matches path enumeration on random models") {
  Rng seeds(77);
  for (int rep = 0; rep < 60; ++rep) {
    const int k = 1 + rep % 3;
    const int T = 1 + rep % 6;
    const int l = 2 + rep % 2;
    ModelSpec spec;
    spec.k = k;
    const Model model = lmtest::random_model(spec, dims(T, {l}), seeds.next_u64());
    Rng rng(rep);
    Eigen::MatrixXi y(T, 1);
    for (int t = 0; t < T; ++t) y(t, 0) = static_cast<int>(rng.uniform() * l);
    const Unit unit = lmtest::unit_with(y);
    const ChainProbs chain = model.chain(unit);
    const Eigen::MatrixXd e = model.emissions(unit);
    const double brute = std::log(lmtest::brute_force_f(chain, e));
    CHECK(std::abs(forward(chain, e).log_f - brute) < 1e-10);
    const Lattice lat = posteriors(chain, e);
    check_lattice_identities(lat);
  }
}

TEST_CASE("scaling an emission row leaves posteriors unchanged") {
  ChainProbs c = worked_chain();
  Eigen::MatrixXd e = worked_emissions();
  const Lattice a = posteriors(c, e);
  e.row(1) *= 7.5;
  const Lattice b = posteriors(c, e);
  CHECK((a.state - b.state).cwiseAbs().maxCoeff() < 1e-14);
  CHECK(b.log_f - a.log_f == doctest::Approx(std::log(7.5)));
}

TEST_CASE("long sequences neither underflow nor overflow") {
  const int T = 10000;
  const int k = 5;
  Rng rng(3);
  ChainProbs c;
  c.initial = rng.flat_dirichlet(k);
  c.transitions.resize(T - 1);
  Eigen::MatrixXd P(k, k);
  for (int u = 0; u < k; ++u) P.row(u) = rng.flat_dirichlet(k).transpose();
  for (auto& m : c.transitions) m = P;
  Eigen::MatrixXd e(T, k);
  for (int t = 0; t < T; ++t) {
    for (int u = 0; u < k; ++u) e(t, u) = rng.uniform(0.01, 0.2);
  }
  const Lattice lat = posteriors(c, e);
  CHECK(std::isfinite(lat.log_f));
  CHECK(lat.log_f < 0.0);
  CHECK(lat.state.allFinite());
  CHECK(std::abs(lat.state.row(T / 2).sum() - 1.0) < 1e-10);
}
