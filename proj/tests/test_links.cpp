#include <doctest.h>

#include <cmath>

#include "lmkit/links.hpp"
#include "lmkit/rng.hpp"

using namespace lmkit;

namespace {

LinkKind kind(LinkFamily f, int ref = 0) { return LinkKind{f, ref}; }

}  // namespace

TEST_CASE("apply_link evaluates each family") {
  Eigen::VectorXd p(3);
  p << 0.25, 0.25, 0.5;
  const Eigen::VectorXd g = apply_link(kind(LinkFamily::global), p);
  CHECK(g[0] == doctest::Approx(std::log(3.0)).epsilon(1e-12));
  CHECK(std::abs(g[1]) < 1e-12);
  const Eigen::VectorXd c = apply_link(kind(LinkFamily::continuation), p);
  CHECK(c[0] == doctest::Approx(std::log(3.0)).epsilon(1e-12));
  CHECK(c[1] == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  const Eigen::VectorXd m = apply_link(kind(LinkFamily::multinomial), Eigen::VectorXd::Constant(3, 1.0 / 3));
  CHECK(m.cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("diagonal reference uses the row state") {
  Eigen::VectorXd p(3);
  p << 0.25, 0.5, 0.25;
  const Eigen::VectorXd eta = apply_link(kind(LinkFamily::diagonal_reference, 1), p);
  REQUIRE(eta.size() == 2);
  CHECK(eta[0] == doctest::Approx(std::log(0.5)));
  CHECK(eta[1] == doctest::Approx(std::log(0.5)));
}

TEST_CASE("invert_link examples") {
  const Eigen::VectorXd u = invert_link(kind(LinkFamily::multinomial), Eigen::VectorXd::Zero(2));
  for (int i = 0; i < 3; ++i) CHECK(u[i] == doctest::Approx(1.0 / 3).epsilon(1e-14));
  Eigen::VectorXd eta(1);
  eta << 2.0;
  CHECK(invert_link(kind(LinkFamily::binary_logit), eta)[1] == doctest::Approx(0.880797077977882));
  Eigen::VectorXd g(2);
  g << std::log(3.0), 0.0;
  const Eigen::VectorXd p = invert_link(kind(LinkFamily::global), g);
  CHECK(p[0] == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(p[1] == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(p[2] == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("global inversion rejects non-decreasing predictors") {
  Eigen::VectorXd g(2);
  g << 0.0, 1.0;
  CHECK_THROWS_AS(invert_link(kind(LinkFamily::global), g), LinkError);
}

TEST_CASE("apply and invert round-trip for every family and arity") {
  Rng rng(11);
  for (int l = 2; l <= 6; ++l) {
    for (int rep = 0; rep < 50; ++rep) {
      Eigen::VectorXd p = rng.flat_dirichlet(l);
      p = (p.array() + 0.01).matrix();
      p /= p.sum();
      std::vector<LinkKind> kinds = {kind(LinkFamily::multinomial, rep % l), kind(LinkFamily::global),
                                     kind(LinkFamily::continuation),
                                     kind(LinkFamily::diagonal_reference, rep % l)};
      if (l == 2) kinds.push_back(kind(LinkFamily::binary_logit));
      for (const LinkKind& k : kinds) {
        const Eigen::VectorXd eta = apply_link(k, p);
        const Eigen::VectorXd back = invert_link(k, eta);
        CHECK((back - p).cwiseAbs().maxCoeff() < 1e-12);
        CHECK((apply_link(k, back) - eta).cwiseAbs().maxCoeff() < 1e-10);
      }
    }
  }
}

TEST_CASE("link jacobian matches finite differences") {
  Rng rng(5);
  for (LinkFamily f : {LinkFamily::multinomial, LinkFamily::global, LinkFamily::continuation}) {
    Eigen::VectorXd p = rng.flat_dirichlet(4);
    p = ((p.array() + 0.05) / (1.0 + 0.2)).matrix();
    p /= p.sum();
    const Eigen::VectorXd eta = apply_link(kind(f), p);
    const Eigen::MatrixXd J = link_jacobian(kind(f), eta, p);
    for (int j = 0; j < eta.size(); ++j) {
      Eigen::VectorXd a = eta, b = eta;
      a[j] += 1e-6;
      b[j] -= 1e-6;
      const Eigen::VectorXd d = (invert_link(kind(f), a) - invert_link(kind(f), b)) / 2e-6;
      CHECK((d - J.col(j)).cwiseAbs().maxCoeff() < 1e-7);
    }
  }
}

TEST_CASE("rasch probability") {
  CHECK(rasch_probability(1.0, 1.0) == doctest::Approx(0.5));
  CHECK(rasch_probability(2.0, 0.0) == doctest::Approx(0.880797077977882));
  double previous = 1.0;
  for (double psi = -2.0; psi <= 2.0; psi += 0.5) {
    const double p = rasch_probability(0.3, psi);
    CHECK(p < previous);
    previous = p;
  }
}

TEST_CASE("arity check") {
  CHECK_THROWS(check_link_arity(kind(LinkFamily::binary_logit), 3));
  CHECK_THROWS(check_link_arity(kind(LinkFamily::multinomial, 3), 3));
  CHECK_NOTHROW(check_link_arity(kind(LinkFamily::global), 4));
}
