#include "lmkit/sample.hpp"

#include <algorithm>

namespace lmkit {

int CovariateDesign::width() const {
  int w = static_cast<int>(columns.size());
  for (int l : lag_levels) w += l - 1;
  return w;
}

Eigen::RowVectorXd CovariateDesign::row(const Eigen::RowVectorXd& covariates,
                                        const int* y_prev) const {
  Eigen::RowVectorXd x = Eigen::RowVectorXd::Zero(width());
  int c = 0;
  for (size_t i = 0; i < columns.size(); ++i) x[c++] = covariates[columns[i]];
  for (size_t i = 0; i < lag_variables.size(); ++i) {
    if (y_prev) {
      const int y = y_prev[lag_variables[i]];
      if (y > 0) x[c + y - 1] = 1.0;
    }
    c += lag_levels[i] - 1;
  }
  return x;
}

CovariateDesign make_covariate_design(const ModelSpec& spec, const PanelDataset& data) {
  CovariateDesign design;
  for (const auto& name : spec.covariates) design.columns.push_back(data.covariate_index(name));
  const auto& names = data.raw().response_names;
  for (const auto& name : spec.lags) {
    const auto it = std::find(names.begin(), names.end(), name);
    if (it == names.end()) throw SpecError("field 'lags': unknown response '" + name + "'");
    const int j = static_cast<int>(it - names.begin());
    design.lag_variables.push_back(j);
    design.lag_levels.push_back(data.levels()[j]);
  }
  return design;
}

Dims Sample::dims() const {
  Dims d;
  d.T = occasions;
  d.levels = levels;
  d.covariates = covariate_width;
  d.cluster_covariates = static_cast<int>(group_covariates.cols());
  return d;
}

Sample build_sample(const PanelDataset& data, const ModelSpec& spec, bool aggregate) {
  const CovariateDesign design = make_covariate_design(spec, data);
  Sample sample;
  sample.occasions = data.occasions();
  sample.levels = data.levels();
  sample.covariate_width = design.width();
  sample.clustered = data.has_clusters();
  sample.subjects = data.total_weight();
  const int T = data.occasions();
  const int r = data.variables();

  if (sample.clustered && data.has_weights()) {
    throw DataError("subject weights cannot be combined with clusters");
  }
  std::vector<int> cluster_covariate_columns;
  for (const auto& name : spec.cluster_covariates) {
    if (!sample.clustered) {
      throw SpecError("field 'cluster_covariates' needs a cluster column in the data");
    }
    cluster_covariate_columns.push_back(data.cluster_covariate_index(name));
  }

  const bool aggregate_now = aggregate && design.width() == 0 && !sample.clustered;
  if (aggregate_now) {
    const PatternTable table = aggregate_patterns(data);
    sample.aggregated = true;
    for (int p = 0; p < table.size(); ++p) {
      Unit unit;
      unit.weight = table.counts[p];
      unit.group = p;
      unit.y.resize(T, r);
      for (int t = 0; t < T; ++t) {
        for (int j = 0; j < r; ++j) unit.y(t, j) = table.patterns[p][t * r + j];
      }
      unit.x.resize(T, 0);
      sample.units.push_back(std::move(unit));
      sample.groups.push_back({p});
    }
    sample.group_covariates.resize(table.size(), 0);
    return sample;
  }

  const int n = data.subjects();
  const int width = design.width();
  Eigen::RowVectorXd raw(data.covariate_count());
  std::vector<int> y_prev(r);
  for (int i = 0; i < n; ++i) {
    Unit unit;
    unit.weight = data.weight(i);
    unit.subject = i;
    unit.group = sample.clustered ? data.cluster_of(i) : i;
    unit.y.resize(T, r);
    unit.x.resize(T, width);
    for (int t = 0; t < T; ++t) {
      for (int c = 0; c < data.covariate_count(); ++c) raw[c] = data.covariate(i, t, c);
      unit.x.row(t) = design.row(raw, t > 0 ? y_prev.data() : nullptr);
      for (int j = 0; j < r; ++j) {
        unit.y(t, j) = data.response(i, t, j);
        y_prev[j] = unit.y(t, j);
      }
    }
    sample.units.push_back(std::move(unit));
  }
  const int groups = sample.clustered ? data.cluster_count() : n;
  sample.groups.assign(groups, {});
  for (int i = 0; i < n; ++i) sample.groups[sample.units[i].group].push_back(i);
  sample.group_covariates.resize(groups, static_cast<int>(cluster_covariate_columns.size()));
  for (int h = 0; h < groups; ++h) {
    for (size_t c = 0; c < cluster_covariate_columns.size(); ++c) {
      sample.group_covariates(h, c) = data.cluster_covariate(h, cluster_covariate_columns[c]);
    }
  }
  return sample;
}

}  // namespace lmkit
