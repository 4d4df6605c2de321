#include "lmkit/params.hpp"

#include <algorithm>
#include <numeric>

namespace lmkit {

std::vector<std::string> validate_params(const Model& model, const ModelSpec& spec) {
  std::vector<std::string> issues;
  if (!(model.spec() == spec)) {
    issues.push_back("parameters were built for a different model spec");
  }
  if (spec.transition.type == TransitionType::logit) {
    const auto mask = transition_mask(spec.transition, spec.k);
    for (int u = 0; u < spec.k; ++u) {
      if (spec.transition.link == LinkFamily::global) break;
      if (std::none_of(mask[u].begin(), mask[u].end(), [](int v) { return v != 0; })) {
        issues.push_back("transition mask row " + std::to_string(u + 1) +
                         " has no free entry (unreachable row)");
      } else if (!mask[u][u]) {
        issues.push_back("transition mask row " + std::to_string(u + 1) +
                         " fixes the diagonal reference entry at zero (unreachable row)");
      }
    }
  }
  for (auto& issue : model.validate()) {
    if (std::find(issues.begin(), issues.end(), issue) == issues.end()) issues.push_back(issue);
  }
  return issues;
}

int count_free_parameters(const ModelSpec& spec, const Dims& dims) {
  return Model(spec, dims).size();
}

namespace {

std::vector<int> score_order(const Eigen::VectorXd& scores) {
  std::vector<int> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return scores[a] < scores[b]; });
  return order;
}

}  // namespace

bool canonicalize(Model& model) {
  const bool per_occasion = model.initial().occasion_permutable() &&
                            model.transition().occasion_permutable() &&
                            model.measurement().occasion_permutable() && model.classes() == 1;
  if (per_occasion) {
    const Eigen::MatrixXd scores = model.measurement().occasion_scores();
    std::vector<std::vector<int>> orders;
    for (int t = 0; t < scores.rows(); ++t) orders.push_back(score_order(scores.row(t).transpose()));
    model.initial().permute_occasions(orders);
    model.transition().permute_occasions(orders);
    model.measurement().permute_occasions(orders);
    return true;
  }
  for (const Block* b : model.blocks()) {
    if (b != &model.cluster() && !b->permutable()) return false;
  }
  const std::vector<int> order = score_order(model.measurement().state_scores());
  model.initial().permute(order);
  model.transition().permute(order);
  model.measurement().permute(order);
  return true;
}

bool states_ordered(const Model& model) {
  const Eigen::VectorXd scores = model.measurement().state_scores();
  for (int u = 1; u < scores.size(); ++u) {
    if (scores[u] < scores[u - 1]) return false;
  }
  return true;
}

}  // namespace lmkit

namespace lmkit {

namespace {

bool measurement_nested(const ModelSpec& c, const ModelSpec& f) {
  const MeasurementSpec& a = c.measurement;
  const MeasurementSpec& b = f.measurement;
  if (a == b) return true;
  const bool plain = c.placement != CovariatePlacement::measurement;
  if (b.type == MeasurementType::free) {
    return plain && (a.type == MeasurementType::time_invariant || a.type == MeasurementType::link);
  }
  if (b.type == MeasurementType::time_invariant) {
    return plain && a.type == MeasurementType::link &&
           a.design == MeasurementDesign::state_intercepts;
  }
  return false;
}

bool initial_nested(const ModelSpec& c, const ModelSpec& f) {
  const InitialSpec& a = c.initial;
  const InitialSpec& b = f.initial;
  if (a == b) return true;
  if (a.type == InitialType::uniform) return true;
  return b.type == InitialType::free && a.type == InitialType::logit &&
         c.placement != CovariatePlacement::latent && c.m == 1;
}

bool transition_nested(const ModelSpec& c, const ModelSpec& f) {
  const TransitionSpec& a = c.transition;
  const TransitionSpec& b = f.transition;
  if (a == b) return true;
  const bool plain = c.placement != CovariatePlacement::latent && c.m == 1;
  const bool homogeneous_a =
      a.type == TransitionType::homogeneous ||
      ((a.type == TransitionType::linear || a.type == TransitionType::logit) && a.homogeneous);
  switch (b.type) {
    case TransitionType::free:
      return plain || a.type == TransitionType::free;
    case TransitionType::partial:
      return plain && homogeneous_a;
    case TransitionType::homogeneous:
      return plain && homogeneous_a;
    case TransitionType::linear:
      return a.type == TransitionType::linear && a.pattern == LinearPattern::identity &&
             (a.homogeneous || !b.homogeneous);
    case TransitionType::logit:
      return a.type == TransitionType::logit && a.link == b.link &&
             (a.homogeneous || !b.homogeneous);
  }
  return false;
}

}  // namespace

bool nested_spec(const ModelSpec& constrained, const ModelSpec& full) {
  if (constrained.k != full.k || constrained.m > full.m) return false;
  if (constrained.covariates != full.covariates || constrained.lags != full.lags ||
      constrained.placement != full.placement) {
    return false;
  }
  if (constrained.m == full.m && constrained.cluster_covariates != full.cluster_covariates) {
    return false;
  }
  return measurement_nested(constrained, full) && initial_nested(constrained, full) &&
         transition_nested(constrained, full);
}

}  // namespace lmkit
