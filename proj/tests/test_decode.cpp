#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "lmkit/decode.hpp"
#include "lmkit/em.hpp"

using namespace lmkit;
using lmtest::dims;

namespace {

Eigen::MatrixXd emissions_for(const Model& model, const Eigen::MatrixXi& y) {
  return model.emissions(lmtest::unit_with(y));
}

}  // namespace

TEST_CASE("worked instance decodes to (2, 2)") {
  const Model model = lmtest::worked_model(2);
  const Eigen::MatrixXi y = Eigen::MatrixXi::Ones(2, 1);
  const Eigen::MatrixXd e = emissions_for(model, y);
  const DecodedPath d = viterbi(model.chain(lmtest::unit_with(y)), e);
  CHECK(d.path == std::vector<int>{1, 1});
  CHECK(std::exp(d.log_joint) == doctest::Approx(0.2592).epsilon(1e-12));
  CHECK(d.local == std::vector<int>{1, 1});
  REQUIRE(d.local_mass.size() == 2);
  CHECK(d.local_mass[0] == doctest::Approx(0.2664 / 0.2868).epsilon(1e-12));
  CHECK(d.local_mass[1] == doctest::Approx(0.2754 / 0.2868).epsilon(1e-12));
  CHECK(local_decode(posteriors(model.chain(lmtest::unit_with(y)), e)) == std::vector<int>{1, 1});
}

TEST_CASE("a single state decodes to the constant path") {
  ModelSpec spec;
  spec.k = 1;
  const Model model = lmtest::random_model(spec, dims(4, {3}), 2);
  Eigen::MatrixXi y(4, 1);
  y << 0, 2, 1, 2;
  const Eigen::MatrixXd e = emissions_for(model, y);
  const ChainProbs chain = model.chain(lmtest::unit_with(y));
  const DecodedPath d = viterbi(chain, e);
  CHECK(d.path == std::vector<int>(4, 0));
  CHECK(d.log_joint == doctest::Approx(forward(chain, e).log_f).epsilon(1e-14));
}

TEST_CASE("identity emissions reveal the states") {
  ModelSpec spec;
  spec.k = 3;
  spec.measurement.type = MeasurementType::time_invariant;
  spec.transition.type = TransitionType::homogeneous;
  Model model = lmtest::random_model(spec, dims(5, {3}), 8);
  nlohmann::json doc = model.to_json();
  const nlohmann::json eye = {{1.0, 0.0, 0.0}, {0.0, 1.0, 0.0}, {0.0, 0.0, 1.0}};
  doc["measurement"]["phi"] = nlohmann::json::array({nlohmann::json::array({eye})});
  model.load_json(doc);
  Eigen::MatrixXi y(5, 1);
  y << 2, 2, 0, 1, 0;
  const DecodedPath d = viterbi(model.chain(lmtest::unit_with(y)), emissions_for(model, y));
  CHECK(d.path == std::vector<int>{2, 2, 0, 1, 0});
  CHECK(d.local == d.path);
}

TEST_CASE("ties go to the smallest state") {
  ModelSpec spec;
  spec.k = 3;
  spec.initial.type = InitialType::uniform;
  Model model(spec, dims(3, {2}));
  nlohmann::json doc = model.to_json();
  const nlohmann::json flat = {{0.5, 0.5}, {0.5, 0.5}, {0.5, 0.5}};
  const nlohmann::json third = {{1.0 / 3, 1.0 / 3, 1.0 / 3}, {1.0 / 3, 1.0 / 3, 1.0 / 3}, {1.0 / 3, 1.0 / 3, 1.0 / 3}};
  doc["measurement"]["phi"] = nlohmann::json::array({nlohmann::json::array({flat, flat, flat})});
  doc["transition"]["matrices"] = nlohmann::json::array({third, third});
  model.load_json(doc);
  const Eigen::MatrixXi y = Eigen::MatrixXi::Zero(3, 1);
  const ChainProbs chain = model.chain(lmtest::unit_with(y));
  const Eigen::MatrixXd e = emissions_for(model, y);
  CHECK(viterbi(chain, e).path == std::vector<int>{0, 0, 0});
  CHECK(local_decode(posteriors(chain, e)) == std::vector<int>{0, 0, 0});
}

TEST_CASE("impossible observations are an error") {
  ModelSpec spec;
  spec.k = 2;
  Model model = lmtest::worked_model(2);
  nlohmann::json doc = model.to_json();
  const nlohmann::json row = {{1.0, 0.0}, {1.0, 0.0}};
  doc["measurement"]["phi"] = nlohmann::json::array({nlohmann::json::array({row, row})});
  model.load_json(doc);
  const Eigen::MatrixXi y = Eigen::MatrixXi::Ones(2, 1);
  CHECK_THROWS_AS(viterbi(model.chain(lmtest::unit_with(y)), emissions_for(model, y)), DecodeError);
}

TEST_CASE("Viterbi equals the brute-force maximum") {
  Rng rng(4);
  for (int rep = 0; rep < 100; ++rep) {
    ModelSpec spec;
    spec.k = 1 + rep % 3;
    const int T = 1 + rep % 5;
    const int levels = 2 + rep % 2;
    const Model model = lmtest::random_model(spec, dims(T, {levels}), 300 + rep);
    Eigen::MatrixXi y(T, 1);
    for (int t = 0; t < T; ++t) y(t, 0) = static_cast<int>(rng.uniform() * levels);
    const ChainProbs chain = model.chain(lmtest::unit_with(y));
    const Eigen::MatrixXd e = emissions_for(model, y);
    double best = -1.0;
    lmtest::for_each_path(chain, e, [&](const std::vector<int>&, double p) { best = std::max(best, p); });
    const DecodedPath d = viterbi(chain, e);
    CHECK(d.log_joint == doctest::Approx(std::log(best)).epsilon(1e-12));
    double joint = chain.initial[d.path[0]] * e(0, d.path[0]);
    for (int t = 1; t < T; ++t) joint *= chain.transitions[t - 1](d.path[t - 1], d.path[t]) * e(t, d.path[t]);
    CHECK(std::log(joint) == doctest::Approx(d.log_joint).epsilon(1e-12));
  }
}

TEST_CASE("global and local decoding agree when posteriors are sharp") {
  const Model model = lmtest::worked_model(6);
  nlohmann::json doc = model.to_json();
  const nlohmann::json sharp = {{0.999, 0.001}, {0.001, 0.999}};
  nlohmann::json occ = nlohmann::json::array();
  for (int t = 0; t < 6; ++t) occ.push_back(sharp);
  doc["measurement"]["phi"] = nlohmann::json::array({occ});
  Model m = model;
  m.load_json(doc);
  Eigen::MatrixXi y(6, 1);
  y << 0, 0, 1, 1, 1, 0;
  const DecodedPath d = viterbi(m.chain(lmtest::unit_with(y)), emissions_for(m, y));
  CHECK(d.path == d.local);
  CHECK(d.path == std::vector<int>{0, 0, 1, 1, 1, 0});
}

TEST_CASE("sample decoding with cluster classes maximizes the joint") {
  const auto families = lmtest::spec_families(3);
  const auto& family = families[8];
  REQUIRE(family.name == "multilevel");
  const Sample sample = build_sample(family.data, family.spec);
  const Model model = lmtest::random_model(family.spec, sample.dims(), 12);
  const auto decoded = decode_sample(model, sample, 2);
  REQUIRE(decoded.size() == sample.units.size());
  for (size_t h = 0; h < sample.groups.size(); ++h) {
    const Eigen::VectorXd rho = model.class_weights(sample, static_cast<int>(h));
    double best = -std::numeric_limits<double>::infinity();
    int best_w = -1;
    for (int w = 0; w < model.classes(); ++w) {
      double total = std::log(rho[w]);
      for (int i : sample.groups[h]) {
        const Unit& u = sample.units[i];
        double top = -1.0;
        lmtest::for_each_path(model.chain(u, w), model.emissions(u),
                              [&](const std::vector<int>&, double p) { top = std::max(top, p); });
        total += std::log(top);
      }
      if (total > best) {
        best = total;
        best_w = w;
      }
    }
    for (int i : sample.groups[h]) {
      const SubjectDecoding& s = decoded[i];
      CHECK(s.unit == i);
      CHECK(s.cluster_class == best_w);
      CHECK((s.posterior.rowwise().sum().array() - 1.0).abs().maxCoeff() < 1e-12);
    }
  }
  CHECK(decode_sample(model, sample, 1).front().decoded.path == decoded.front().decoded.path);
}
