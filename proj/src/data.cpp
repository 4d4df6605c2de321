#include "lmkit/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <unordered_map>

namespace lmkit {

namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return {};
  const auto end = s.find_last_not_of(" \t\r\n");
  std::string out = s.substr(begin, end - begin + 1);
  if (out.size() >= 2 && out.front() == '"' && out.back() == '"') {
    out = out.substr(1, out.size() - 2);
  }
  return out;
}

std::vector<std::string> split(const std::string& line, char delimiter) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, delimiter)) fields.push_back(trim(field));
  if (!line.empty() && line.back() == delimiter) fields.emplace_back();
  return fields;
}

char detect_delimiter(const std::string& header) {
  if (header.find('\t') != std::string::npos) return '\t';
  if (header.find(',') == std::string::npos && header.find(';') != std::string::npos) return ';';
  return ',';
}

bool parse_integer(const std::string& text, long long& value) {
  const char* first = text.data();
  const char* last = text.data() + text.size();
  if (first != last && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, value);
  return ec == std::errc() && ptr == last && first != last;
}

bool parse_number(const std::string& text, double& value) {
  if (text.empty()) return false;
  char* end = nullptr;
  value = std::strtod(text.c_str(), &end);
  return end == text.c_str() + text.size() && std::isfinite(value);
}

// y1, y2, ... ordered by their numeric suffix.
std::vector<std::string> default_response_columns(const std::vector<std::string>& header) {
  std::vector<std::pair<long long, std::string>> found;
  for (const auto& name : header) {
    long long number = 0;
    if (name.size() > 1 && name[0] == 'y' && parse_integer(name.substr(1), number)) {
      found.emplace_back(number, name);
    }
  }
  std::sort(found.begin(), found.end());
  std::vector<std::string> out;
  for (auto& [number, name] : found) out.push_back(name);
  return out;
}

std::string format_number(double value) {
  std::ostringstream out;
  out.precision(17);
  out << value;
  return out.str();
}

}  // namespace

PanelDataset::PanelDataset(PanelData data) : data_(std::move(data)) {
  const int n = subjects();
  const int T = occasions();
  const int r = variables();
  if (n < 1) throw DataError("panel has no subjects");
  if (T < 1) throw DataError("panel has no occasions");
  if (r < 1) throw DataError("panel has no response variables");
  if (static_cast<int>(data_.response_names.size()) != r) {
    throw DataError("response name count does not match variable count");
  }
  for (int j = 0; j < r; ++j) {
    if (data_.levels[j] < 2) {
      throw DataError("response '" + data_.response_names[j] + "' has fewer than 2 categories");
    }
  }
  if (data_.category_labels.empty()) {
    data_.category_labels.resize(r);
    for (int j = 0; j < r; ++j) {
      for (int y = 0; y < data_.levels[j]; ++y) data_.category_labels[j].push_back(std::to_string(y));
    }
  }
  if (data_.responses.size() != static_cast<size_t>(n) * T * r) {
    throw DataError("response array size does not match n x T x r");
  }
  for (int i = 0; i < n; ++i) {
    for (int t = 0; t < T; ++t) {
      for (int j = 0; j < r; ++j) {
        const int y = response(i, t, j);
        if (y < 0 || y >= data_.levels[j]) {
          throw DataError("response code " + std::to_string(y) + " out of range for '" +
                          data_.response_names[j] + "'");
        }
      }
    }
  }
  if (data_.covariates.size() != static_cast<size_t>(n) * T * covariate_count()) {
    throw DataError("covariate array size does not match n x T x p");
  }
  if (!data_.cluster.empty()) {
    if (static_cast<int>(data_.cluster.size()) != n) {
      throw DataError("cluster assignment must list every subject");
    }
    for (int h : data_.cluster) {
      if (h < 0 || h >= cluster_count()) throw DataError("cluster index out of range");
    }
    if (data_.cluster_covariates.size() !=
        static_cast<size_t>(cluster_count()) * cluster_covariate_count()) {
      throw DataError("cluster covariate array size does not match H x q");
    }
  } else if (cluster_covariate_count() > 0) {
    throw DataError("cluster covariates given without a cluster column");
  }
  if (!data_.weights.empty()) {
    if (static_cast<int>(data_.weights.size()) != n) throw DataError("weight count mismatch");
    for (double w : data_.weights) {
      if (!(w > 0.0) || !std::isfinite(w)) throw DataError("subject weights must be positive");
    }
  }
}

int PanelDataset::covariate_index(const std::string& name) const {
  const auto& names = data_.covariate_names;
  const auto it = std::find(names.begin(), names.end(), name);
  if (it == names.end()) throw DataError("covariate '" + name + "' not present in data");
  return static_cast<int>(it - names.begin());
}

int PanelDataset::cluster_covariate_index(const std::string& name) const {
  const auto& names = data_.cluster_covariate_names;
  const auto it = std::find(names.begin(), names.end(), name);
  if (it == names.end()) throw DataError("cluster covariate '" + name + "' not present in data");
  return static_cast<int>(it - names.begin());
}

double PanelDataset::total_weight() const {
  if (!has_weights()) return subjects();
  double total = 0.0;
  for (double w : data_.weights) total += w;
  return total;
}

bool PanelDataset::operator==(const PanelDataset& other) const {
  const PanelData& a = data_;
  const PanelData& b = other.data_;
  return a.occasions == b.occasions && a.subject_ids == b.subject_ids &&
         a.response_names == b.response_names && a.levels == b.levels &&
         a.category_labels == b.category_labels && a.responses == b.responses &&
         a.covariate_names == b.covariate_names && a.covariates == b.covariates &&
         a.cluster == b.cluster && a.cluster_labels == b.cluster_labels &&
         a.cluster_covariate_names == b.cluster_covariate_names &&
         a.cluster_covariates == b.cluster_covariates && a.weights == b.weights;
}

double PatternTable::total() const {
  double total = 0.0;
  for (double c : counts) total += c;
  return total;
}

PanelDataset load_panel(std::istream& source, const PanelSchema& schema) {
  std::string header_line;
  while (std::getline(source, header_line) && trim(header_line).empty()) {
  }
  if (trim(header_line).empty()) throw DataError("input has no header line");
  const char delimiter = schema.delimiter ? schema.delimiter : detect_delimiter(header_line);
  const std::vector<std::string> header = split(header_line, delimiter);

  auto column_of = [&](const std::string& name) {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw DataError("column '" + name + "' not found in header");
    return static_cast<int>(it - header.begin());
  };

  std::string id_name = schema.id_column;
  std::string time_name = schema.time_column;
  std::vector<std::string> response_names = schema.responses;
  std::vector<std::string> covariate_names = schema.covariates;
  std::string cluster_name = schema.cluster_column;
  std::vector<std::string> cluster_cov_names = schema.cluster_covariates;
  std::string weight_name = schema.weight_column;
  for (const auto& [column, role] : schema.roles) {
    column_of(column);
    if (role == "id") {
      id_name = column;
    } else if (role == "time") {
      time_name = column;
    } else if (role == "response") {
      response_names.push_back(column);
    } else if (role == "covariate") {
      covariate_names.push_back(column);
    } else if (role == "cluster") {
      cluster_name = column;
    } else if (role == "cluster_covariate") {
      cluster_cov_names.push_back(column);
    } else if (role == "weight") {
      weight_name = column;
    } else if (role != "ignore") {
      throw DataError("unknown column role '" + role + "' for column '" + column + "'");
    }
  }
  if (response_names.empty()) response_names = default_response_columns(header);
  if (response_names.empty()) throw DataError("no response columns (expected y1..yr)");

  const int id_col = column_of(id_name);
  const int time_col = column_of(time_name);
  std::vector<int> response_cols, covariate_cols, cluster_cov_cols;
  for (const auto& name : response_names) response_cols.push_back(column_of(name));
  for (const auto& name : covariate_names) covariate_cols.push_back(column_of(name));
  for (const auto& name : cluster_cov_names) cluster_cov_cols.push_back(column_of(name));
  const int cluster_col = cluster_name.empty() ? -1 : column_of(cluster_name);
  const int weight_col = weight_name.empty() ? -1 : column_of(weight_name);

  struct Row {
    std::vector<long long> codes;
    std::vector<double> covariates;
    std::string cluster;
    std::vector<double> cluster_covariates;
    double weight = 1.0;
  };
  std::vector<std::string> subject_ids;
  std::unordered_map<std::string, int> subject_index;
  std::vector<std::map<int, Row>> rows;
  const int r = static_cast<int>(response_cols.size());

  std::string line;
  int line_number = 1;
  while (std::getline(source, line)) {
    ++line_number;
    if (trim(line).empty()) continue;
    const std::vector<std::string> fields = split(line, delimiter);
    if (fields.size() != header.size()) {
      throw DataError("line " + std::to_string(line_number) + ": expected " +
                      std::to_string(header.size()) + " fields, got " +
                      std::to_string(fields.size()));
    }
    const std::string& id = fields[id_col];
    long long time = 0;
    if (!parse_integer(fields[time_col], time) || time < 1) {
      throw DataError("line " + std::to_string(line_number) + ": occasion index '" +
                      fields[time_col] + "' is not a positive integer");
    }
    auto [it, inserted] = subject_index.try_emplace(id, static_cast<int>(subject_ids.size()));
    if (inserted) {
      subject_ids.push_back(id);
      rows.emplace_back();
    }
    Row row;
    for (int j = 0; j < r; ++j) {
      long long code = 0;
      if (!parse_integer(fields[response_cols[j]], code)) {
        throw DataError("line " + std::to_string(line_number) + ": non-integer response '" +
                        fields[response_cols[j]] + "' in column '" + response_names[j] + "'");
      }
      row.codes.push_back(code);
    }
    for (size_t c = 0; c < covariate_cols.size(); ++c) {
      double value = 0.0;
      if (!parse_number(fields[covariate_cols[c]], value)) {
        throw DataError("line " + std::to_string(line_number) + ": covariate '" +
                        covariate_names[c] + "' is not numeric");
      }
      row.covariates.push_back(value);
    }
    for (size_t c = 0; c < cluster_cov_cols.size(); ++c) {
      double value = 0.0;
      if (!parse_number(fields[cluster_cov_cols[c]], value)) {
        throw DataError("line " + std::to_string(line_number) + ": cluster covariate '" +
                        cluster_cov_names[c] + "' is not numeric");
      }
      row.cluster_covariates.push_back(value);
    }
    if (cluster_col >= 0) row.cluster = fields[cluster_col];
    if (weight_col >= 0 && !parse_number(fields[weight_col], row.weight)) {
      throw DataError("line " + std::to_string(line_number) + ": weight is not numeric");
    }
    if (!rows[it->second].emplace(static_cast<int>(time), std::move(row)).second) {
      throw DataError("subject '" + id + "' has occasion " + std::to_string(time) + " twice");
    }
  }
  if (subject_ids.empty()) throw DataError("input has no data rows");

  int T = 0;
  for (const auto& subject_rows : rows) T = std::max(T, subject_rows.rbegin()->first);
  for (size_t i = 0; i < rows.size(); ++i) {
    for (int t = 1; t <= T; ++t) {
      if (!rows[i].count(t)) {
        throw DataError("unbalanced panel: subject '" + subject_ids[i] + "' lacks occasion " +
                        std::to_string(t));
      }
    }
  }

  PanelData data;
  data.occasions = T;
  data.subject_ids = subject_ids;
  data.response_names = response_names;
  data.covariate_names = covariate_names;
  data.cluster_covariate_names = cluster_cov_names;
  const int n = static_cast<int>(subject_ids.size());

  std::vector<std::map<long long, int>> recode(r);
  for (const auto& subject_rows : rows) {
    for (const auto& [t, row] : subject_rows) {
      for (int j = 0; j < r; ++j) recode[j].emplace(row.codes[j], 0);
    }
  }
  data.levels.resize(r);
  data.category_labels.resize(r);
  for (int j = 0; j < r; ++j) {
    int code = 0;
    for (auto& [label, internal] : recode[j]) {
      internal = code++;
      data.category_labels[j].push_back(std::to_string(label));
    }
    data.levels[j] = code;
    if (code < 2) {
      throw DataError("response '" + response_names[j] + "' has fewer than 2 categories");
    }
  }

  std::map<std::string, int> cluster_lookup;
  std::vector<std::vector<double>> cluster_values;
  for (int i = 0; i < n; ++i) {
    const auto& first = rows[i].begin()->second;
    for (const auto& [t, row] : rows[i]) {
      for (int j = 0; j < r; ++j) data.responses.push_back(recode[j].at(row.codes[j]));
      for (double x : row.covariates) data.covariates.push_back(x);
      if (cluster_col >= 0 && row.cluster != first.cluster) {
        throw DataError("subject '" + subject_ids[i] + "' changes cluster over time");
      }
      if (weight_col >= 0 && row.weight != first.weight) {
        throw DataError("subject '" + subject_ids[i] + "' has a time-varying weight");
      }
    }
    if (cluster_col >= 0) {
      auto [it, inserted] =
          cluster_lookup.try_emplace(first.cluster, static_cast<int>(data.cluster_labels.size()));
      if (inserted) {
        data.cluster_labels.push_back(first.cluster);
        cluster_values.push_back(first.cluster_covariates);
      }
      data.cluster.push_back(it->second);
      for (const auto& [t, row] : rows[i]) {
        if (row.cluster_covariates != cluster_values[it->second]) {
          throw DataError("cluster covariates vary within cluster '" + first.cluster + "'");
        }
      }
    }
    if (weight_col >= 0) data.weights.push_back(first.weight);
  }
  for (const auto& values : cluster_values) {
    data.cluster_covariates.insert(data.cluster_covariates.end(), values.begin(), values.end());
  }
  if (cluster_col < 0 && !cluster_cov_names.empty()) {
    throw DataError("cluster covariates declared without a cluster column");
  }
  return PanelDataset(std::move(data));
}

PanelDataset load_panel_file(const std::string& path, const PanelSchema& schema) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open data file '" + path + "'");
  return load_panel(in, schema);
}

void write_panel(const PanelDataset& data, std::ostream& out, char delimiter) {
  const PanelData& raw = data.raw();
  out << "id" << delimiter << "time";
  if (data.has_clusters()) out << delimiter << "cluster";
  for (const auto& name : raw.response_names) out << delimiter << name;
  for (const auto& name : raw.covariate_names) out << delimiter << name;
  for (const auto& name : raw.cluster_covariate_names) out << delimiter << name;
  if (data.has_weights()) out << delimiter << "weight";
  out << '\n';
  for (int i = 0; i < data.subjects(); ++i) {
    for (int t = 0; t < data.occasions(); ++t) {
      out << raw.subject_ids[i] << delimiter << (t + 1);
      if (data.has_clusters()) out << delimiter << raw.cluster_labels[data.cluster_of(i)];
      for (int j = 0; j < data.variables(); ++j) {
        out << delimiter << raw.category_labels[j][data.response(i, t, j)];
      }
      for (int c = 0; c < data.covariate_count(); ++c) {
        out << delimiter << format_number(data.covariate(i, t, c));
      }
      for (int c = 0; c < data.cluster_covariate_count(); ++c) {
        out << delimiter << format_number(data.cluster_covariate(data.cluster_of(i), c));
      }
      if (data.has_weights()) out << delimiter << format_number(data.weight(i));
      out << '\n';
    }
  }
}

PatternTable aggregate_patterns(const PanelDataset& data) {
  if (data.covariate_count() > 0) {
    throw DataError(
        "cannot aggregate response patterns when covariates are present; "
        "use the per-subject likelihood");
  }
  if (data.has_clusters()) {
    throw DataError(
        "cannot aggregate response patterns across clusters; use the per-subject likelihood");
  }
  const int T = data.occasions();
  const int r = data.variables();
  std::map<std::vector<int>, double> counts;
  for (int i = 0; i < data.subjects(); ++i) {
    std::vector<int> pattern(static_cast<size_t>(T) * r);
    for (int t = 0; t < T; ++t) {
      for (int j = 0; j < r; ++j) pattern[t * r + j] = data.response(i, t, j);
    }
    counts[pattern] += data.weight(i);
  }
  PatternTable table;
  table.occasions = T;
  table.levels = data.levels();
  for (auto& [pattern, count] : counts) {
    table.patterns.push_back(pattern);
    table.counts.push_back(count);
  }
  return table;
}

PanelDataset with_responses(const PanelDataset& data, std::vector<int> responses) {
  PanelData raw = data.raw();
  raw.responses = std::move(responses);
  return PanelDataset(std::move(raw));
}

}  // namespace lmkit
