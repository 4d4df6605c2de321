#pragma once

#include <iosfwd>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace lmkit {

class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Column-role mapping for long-format input (one row per subject-occasion).
struct PanelSchema {
  std::string id_column = "id";
  std::string time_column = "time";
  // Empty: every header column named y<digits>, ordered by the digits.
  std::vector<std::string> responses;
  std::vector<std::string> covariates;
  std::string cluster_column;  // empty when there are no clusters
  std::vector<std::string> cluster_covariates;
  std::string weight_column;
  // Explicit (column, role) declarations; roles are id, time, response,
  // covariate, cluster, cluster_covariate, weight, ignore.
  std::vector<std::pair<std::string, std::string>> roles;
  char delimiter = '\0';  // '\0': detect from the header line
};

// Raw field storage; PanelDataset validates it on construction.
struct PanelData {
  int occasions = 0;
  std::vector<std::string> subject_ids;
  std::vector<std::string> response_names;
  std::vector<int> levels;
  // Original category label of each internal code, per variable.
  std::vector<std::vector<std::string>> category_labels;
  // responses[(i * T + t) * r + j]
  std::vector<int> responses;
  std::vector<std::string> covariate_names;
  // covariates[(i * T + t) * p + c]
  std::vector<double> covariates;
  // cluster index per subject (empty when unclustered)
  std::vector<int> cluster;
  std::vector<std::string> cluster_labels;
  std::vector<std::string> cluster_covariate_names;
  // cluster_covariates[h * q + c]
  std::vector<double> cluster_covariates;
  std::vector<double> weights;  // empty: unit weights
};

// Balanced panel of n subjects x T occasions x r categorical responses.
// Immutable after construction.
class PanelDataset {
 public:
  PanelDataset() = default;
  explicit PanelDataset(PanelData data);

  int subjects() const { return static_cast<int>(data_.subject_ids.size()); }
  int occasions() const { return data_.occasions; }
  int variables() const { return static_cast<int>(data_.levels.size()); }
  const std::vector<int>& levels() const { return data_.levels; }

  int response(int i, int t, int j) const {
    return data_.responses[(static_cast<size_t>(i) * occasions() + t) * variables() + j];
  }

  int covariate_count() const { return static_cast<int>(data_.covariate_names.size()); }
  double covariate(int i, int t, int c) const {
    return data_.covariates[(static_cast<size_t>(i) * occasions() + t) * covariate_count() + c];
  }
  // Column index of a covariate by name; throws DataError when absent.
  int covariate_index(const std::string& name) const;

  bool has_clusters() const { return !data_.cluster.empty(); }
  int cluster_count() const { return static_cast<int>(data_.cluster_labels.size()); }
  int cluster_of(int i) const { return data_.cluster[i]; }
  int cluster_covariate_count() const {
    return static_cast<int>(data_.cluster_covariate_names.size());
  }
  double cluster_covariate(int h, int c) const {
    return data_.cluster_covariates[static_cast<size_t>(h) * cluster_covariate_count() + c];
  }
  int cluster_covariate_index(const std::string& name) const;

  bool has_weights() const { return !data_.weights.empty(); }
  double weight(int i) const { return has_weights() ? data_.weights[i] : 1.0; }
  double total_weight() const;

  const PanelData& raw() const { return data_; }

  bool operator==(const PanelDataset& other) const;

 private:
  PanelData data_;
};

// Distinct response configurations with their frequencies, in lexicographic order.
struct PatternTable {
  int occasions = 0;
  std::vector<int> levels;
  std::vector<std::vector<int>> patterns;  // each of length T * r, occasion-major
  std::vector<double> counts;

  int size() const { return static_cast<int>(patterns.size()); }
  double total() const;
};

PanelDataset load_panel(std::istream& source, const PanelSchema& schema = {});
PanelDataset load_panel_file(const std::string& path, const PanelSchema& schema = {});

// Long-format writer; load_panel(write_panel(d)) reproduces d.
void write_panel(const PanelDataset& data, std::ostream& out, char delimiter = ',');

PatternTable aggregate_patterns(const PanelDataset& data);

// Dataset with the same layout whose responses are replaced.
PanelDataset with_responses(const PanelDataset& data, std::vector<int> responses);

}  // namespace lmkit
