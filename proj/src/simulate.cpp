#include "lmkit/simulate.hpp"

#include <algorithm>

#include "lmkit/sample.hpp"

namespace lmkit {

namespace {

constexpr std::uint64_t kClusterStreams = 1ULL << 40;

CovariateDesign simulation_design(const ModelSpec& spec, const Dims& dims,
                                  const PanelDataset* design) {
  if (design) return make_covariate_design(spec, *design);
  CovariateDesign cd;
  for (const auto& name : spec.lags) {
    int j = -1;
    for (int v = 0; v < dims.variables(); ++v) {
      if (name == "y" + std::to_string(v + 1)) j = v;
    }
    if (j < 0) throw SpecError("field 'lags': unknown response '" + name + "'");
    cd.lag_variables.push_back(j);
    cd.lag_levels.push_back(dims.levels[j]);
  }
  return cd;
}

}  // namespace

SimulatedPanel simulate_panel(const Model& model, int n, std::uint64_t seed,
                              const PanelDataset* design) {
  const ModelSpec& spec = model.spec();
  const Dims& dims = model.dims();
  const int T = dims.T;
  const int r = dims.variables();
  if (n < 1) throw DataError("simulation needs at least one subject");
  {
    const auto issues = model.validate();
    if (!issues.empty()) throw SpecError("invalid parameters: " + issues.front());
  }
  if (design) {
    if (design->subjects() != n) throw DataError("design dataset must have n subjects");
    if (design->occasions() != T) throw DataError("design dataset has a different T");
  } else if (!spec.covariates.empty() || spec.m > 1) {
    throw DataError("covariate or multilevel models need a design dataset to simulate from");
  }
  if (spec.m > 1 && !design->has_clusters()) {
    throw DataError("multilevel simulation needs a clustered design dataset");
  }
  const CovariateDesign cd = simulation_design(spec, dims, design);
  if (cd.width() != dims.covariates) {
    throw SpecError("covariate design width does not match the model");
  }
  const Rng base(seed);

  // cluster classes
  std::vector<int> cluster_class;
  if (spec.m > 1) {
    const int H = design->cluster_count();
    cluster_class.resize(H);
    for (int h = 0; h < H; ++h) {
      Eigen::RowVectorXd z(dims.cluster_covariates);
      for (size_t c = 0; c < spec.cluster_covariates.size(); ++c) {
        z[c] = design->cluster_covariate(h, design->cluster_covariate_index(spec.cluster_covariates[c]));
      }
      Rng rng = base.split(kClusterStreams + h);
      cluster_class[h] = rng.categorical(model.cluster().weights(z));
    }
  }

  PanelData out;
  out.occasions = T;
  out.levels = dims.levels;
  if (design) {
    out.subject_ids = design->raw().subject_ids;
    out.response_names = design->raw().response_names;
    out.category_labels = design->raw().category_labels;
    out.covariate_names = design->raw().covariate_names;
    out.covariates = design->raw().covariates;
    out.cluster = design->raw().cluster;
    out.cluster_labels = design->raw().cluster_labels;
    out.cluster_covariate_names = design->raw().cluster_covariate_names;
    out.cluster_covariates = design->raw().cluster_covariates;
    out.weights = design->raw().weights;
  } else {
    for (int i = 0; i < n; ++i) out.subject_ids.push_back(std::to_string(i + 1));
    for (int j = 0; j < r; ++j) out.response_names.push_back("y" + std::to_string(j + 1));
  }
  out.responses.assign(static_cast<size_t>(n) * T * r, 0);

  SimulatedPanel result;
  result.paths.assign(n, std::vector<int>(T, 0));
  result.classes.assign(n, 0);
  const int p_raw = design ? design->covariate_count() : 0;
  for (int i = 0; i < n; ++i) {
    Rng rng = base.split(static_cast<std::uint64_t>(i));
    const int w = spec.m > 1 ? cluster_class[design->cluster_of(i)] : 0;
    result.classes[i] = w;
    std::vector<int> prev(r, 0);
    int state = 0;
    for (int t = 0; t < T; ++t) {
      Eigen::RowVectorXd raw(p_raw);
      for (int c = 0; c < p_raw; ++c) raw[c] = design->covariate(i, t, c);
      const Eigen::RowVectorXd x = cd.row(raw, t > 0 ? prev.data() : nullptr);
      if (t == 0) {
        state = rng.categorical(model.initial().initial(x, w));
      } else {
        state = rng.categorical(model.transition().transition(x, t, w).row(state).transpose());
      }
      result.paths[i][t] = state;
      const std::vector<int> y = model.measurement().draw(x, t, state, rng);
      for (int j = 0; j < r; ++j) {
        out.responses[(static_cast<size_t>(i) * T + t) * r + j] = y[j];
        prev[j] = y[j];
      }
    }
  }
  result.data = PanelDataset(std::move(out));
  return result;
}

}  // namespace lmkit
