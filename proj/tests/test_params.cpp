#include <doctest.h>

#include <algorithm>

#include "helpers.hpp"
#include "lmkit/params.hpp"

using namespace lmkit;
using lmtest::dims;

namespace {

bool mentions(const std::vector<std::string>& issues, const std::string& text) {
  return std::any_of(issues.begin(), issues.end(),
                     [&](const std::string& s) { return s.find(text) != std::string::npos; });
}

}  // namespace

TEST_CASE("valid parameters give an empty report") {
  const Model model = lmtest::worked_model(3);
  CHECK(validate_params(model, model.spec()).empty());
}

TEST_CASE("initial probabilities off the simplex are reported") {
  Model model = lmtest::worked_model(2);
  nlohmann::json doc = model.to_json();
  doc["initial"]["pi"] = {0.6, 0.6};
  model.load_json(doc);
  const auto issues = validate_params(model, model.spec());
  REQUIRE(issues.size() == 1);
  CHECK(mentions(issues, "initial probabilities sum 1.2"));
}

TEST_CASE("mask row without a free diagonal entry is unreachable") {
  ModelSpec spec;
  spec.k = 3;
  spec.initial.type = InitialType::logit;
  spec.transition.type = TransitionType::logit;
  spec.transition.mask = MaskPattern::custom;
  spec.transition.custom_mask = {{1, 1, 0}, {0, 0, 1}, {0, 1, 1}};
  std::vector<std::string> issues;
  try {
    const Model model(spec, dims(3, {2}));
    issues = validate_params(model, spec);
  } catch (const SpecError& ex) {
    issues.push_back(ex.what());
  }
  CHECK(mentions(issues, "unreachable row"));
}

TEST_CASE("spec mismatch is reported") {
  const Model model = lmtest::worked_model(2);
  ModelSpec other = model.spec();
  other.transition.type = TransitionType::homogeneous;
  CHECK(mentions(validate_params(model, other), "different model spec"));
}

TEST_CASE("free parameter counts") {
  ModelSpec free;
  free.k = 3;
  CHECK(count_free_parameters(free, dims(5, {3})) == 56);

  ModelSpec constrained = free;
  constrained.transition.type = TransitionType::homogeneous;
  constrained.measurement.type = MeasurementType::time_invariant;
  CHECK(count_free_parameters(constrained, dims(5, {3})) == 14);

  ModelSpec rasch = free;
  rasch.measurement.type = MeasurementType::link;
  rasch.measurement.design = MeasurementDesign::rasch;
  const int g_free = count_free_parameters(free, dims(5, {2}));
  const int g_rasch = count_free_parameters(rasch, dims(5, {2}));
  CHECK(g_free - g_rasch == 8);

  ModelSpec uniform = free;
  uniform.initial.type = InitialType::uniform;
  CHECK(count_free_parameters(free, dims(5, {3})) - count_free_parameters(uniform, dims(5, {3})) == 2);

  ModelSpec partial = free;
  partial.transition.type = TransitionType::partial;
  partial.transition.change_point = 3;
  CHECK(count_free_parameters(partial, dims(5, {3})) == 2 + 12 + 30);

  ModelSpec eod = free;
  eod.transition.type = TransitionType::linear;
  eod.transition.pattern = LinearPattern::equal_off_diagonal;
  CHECK(count_free_parameters(eod, dims(5, {3})) == 2 + 1 + 30);
}

TEST_CASE("nested pairs agree with parameter count differences") {
  ModelSpec free;
  free.k = 3;
  ModelSpec hom = free;
  hom.transition.type = TransitionType::homogeneous;
  ModelSpec inv = free;
  inv.measurement.type = MeasurementType::time_invariant;
  ModelSpec rasch = free;
  rasch.measurement.type = MeasurementType::link;
  rasch.measurement.design = MeasurementDesign::rasch;
  ModelSpec eod = hom;
  eod.transition.type = TransitionType::linear;
  ModelSpec identity = eod;
  identity.transition.pattern = LinearPattern::identity;

  const Dims d = dims(4, {2});
  for (const auto& [c, f] : std::vector<std::pair<ModelSpec, ModelSpec>>{
           {hom, free}, {inv, free}, {rasch, free}, {eod, hom}, {identity, eod}}) {
    CHECK(nested_spec(c, f));
    CHECK(count_free_parameters(f, d) > count_free_parameters(c, d));
  }
  CHECK_FALSE(nested_spec(free, hom));
  CHECK_FALSE(nested_spec(rasch, inv));
  ModelSpec other_k = free;
  other_k.k = 2;
  CHECK_FALSE(nested_spec(other_k, free));
}

TEST_CASE("canonical relabeling orders states by score") {
  ModelSpec spec;
  spec.k = 3;
  spec.transition.type = TransitionType::homogeneous;
  spec.measurement.type = MeasurementType::time_invariant;
  Model model(spec, dims(3, {3}));
  nlohmann::json doc = model.to_json();
  doc["initial"]["pi"] = {0.2, 0.3, 0.5};
  doc["transition"]["matrices"] = {{{0.8, 0.1, 0.1}, {0.05, 0.9, 0.05}, {0.3, 0.3, 0.4}}};
  doc["measurement"]["phi"] = {{{{0.1, 0.1, 0.8}, {0.8, 0.1, 0.1}, {0.3, 0.4, 0.3}}}};
  model.load_json(doc);
  const Model before = model;
  CHECK_FALSE(states_ordered(model));
  REQUIRE(canonicalize(model));
  CHECK(states_ordered(model));
  // new order: old 2, old 3, old 1
  CHECK(model.initial().initial(Eigen::RowVectorXd(0), 0)[0] == doctest::Approx(0.3));
  const Eigen::MatrixXd P = model.transition().transition(Eigen::RowVectorXd(0), 1, 0);
  CHECK(P(0, 0) == doctest::Approx(0.9));
  CHECK(P(2, 0) == doctest::Approx(0.1));
  CHECK(P(0, 2) == doctest::Approx(0.05));
  CHECK(P(1, 2) == doctest::Approx(0.3));
}

TEST_CASE("spec documents round-trip") {
  ModelSpec spec;
  spec.k = 3;
  spec.transition.type = TransitionType::logit;
  spec.transition.mask = MaskPattern::tridiagonal;
  spec.initial.type = InitialType::logit;
  spec.measurement.type = MeasurementType::link;
  spec.measurement.link = LinkFamily::global;
  CHECK(spec_from_json(spec_to_json(spec)) == spec);
}

TEST_CASE("covariates in both placements are rejected") {
  const nlohmann::json doc = {{"k", 2},
                              {"covariates", {"x"}},
                              {"covariate_placement", {"measurement", "latent"}}};
  try {
    spec_from_json(doc);
    FAIL("expected SpecError");
  } catch (const SpecError& ex) {
    CHECK(std::string(ex.what()).find("one scheme") != std::string::npos);
  }
}
