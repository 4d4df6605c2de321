#include "lmkit/report.hpp"

#include <charconv>
#include <cmath>
#include <limits>
#include <sstream>

#include "lmkit/spec.hpp"

namespace lmkit {

using nlohmann::json;

namespace {

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json matrix_rows(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (int i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (int j = 0; j < m.cols(); ++j) row.push_back(number_or_null(m(i, j)));
    rows.push_back(row);
  }
  return rows;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string csv_number(const json& v) {
  return v.is_number() ? format_number(v.get<double>()) : std::string();
}

}  // namespace

std::string format_number(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buffer[64];
  const auto res = std::to_chars(buffer, buffer + sizeof buffer, value);
  return std::string(buffer, res.ptr);
}

json dims_to_json(const Dims& dims) {
  return {{"occasions", dims.T},
          {"levels", dims.levels},
          {"covariates", dims.covariates},
          {"cluster_covariates", dims.cluster_covariates}};
}

Dims dims_from_json(const json& doc) {
  if (!doc.is_object()) throw SpecError("field 'dims' must be an object");
  Dims dims;
  try {
    dims.T = doc.at("occasions").get<int>();
    dims.levels = doc.at("levels").get<std::vector<int>>();
    dims.covariates = doc.value("covariates", 0);
    dims.cluster_covariates = doc.value("cluster_covariates", 0);
  } catch (const json::exception& ex) {
    throw SpecError(std::string("field 'dims': ") + ex.what());
  }
  return dims;
}

json params_document(const Model& model) {
  return {{"spec", spec_to_json(model.spec())},
          {"dims", dims_to_json(model.dims())},
          {"parameters", model.to_json()}};
}

Model load_params_document(const json& doc) {
  for (const char* field : {"spec", "dims", "parameters"}) {
    if (!doc.contains(field)) {
      throw SpecError(std::string("parameter document lacks field '") + field + "'");
    }
  }
  Model model(spec_from_json(doc.at("spec")), dims_from_json(doc.at("dims")));
  model.load_json(doc.at("parameters"));
  return model;
}

json fit_report(const FitResult& result, const Sample& sample, const InferenceReport* inference) {
  json report = params_document(result.model);
  report["data"] = {{"subjects", sample.subjects},
                    {"occasions", sample.occasions},
                    {"variables", static_cast<int>(sample.levels.size())},
                    {"groups", static_cast<int>(sample.groups.size())},
                    {"clustered", sample.clustered}};

  json starts = json::array();
  for (const StartSummary& s : result.starts) {
    json item = {{"kind", s.kind},
                 {"index", s.index},
                 {"loglik", number_or_null(s.loglik)},
                 {"iterations", s.iterations},
                 {"converged", s.converged}};
    if (!s.error.empty()) item["error"] = s.error;
    starts.push_back(item);
  }
  report["fit"] = {{"loglik", result.loglik},
                   {"iterations", result.iterations},
                   {"converged", result.converged},
                   {"best_start", result.best_start},
                   {"canonical", result.canonical},
                   {"trace", result.trace},
                   {"starts", starts}};

  const auto names = result.model.coord_names();
  const Eigen::VectorXd coords = result.model.coords();
  const auto probabilities = result.model.probabilities();
  const bool with_se = inference != nullptr && inference->identifiable;

  json estimates = json::array();
  for (size_t p = 0; p < probabilities.size(); ++p) {
    json item = {{"name", probabilities[p].name}, {"value", probabilities[p].value}};
    item["se"] = with_se ? number_or_null(inference->probability_se[p]) : json(nullptr);
    estimates.push_back(item);
  }
  report["estimates"] = estimates;

  json coordinates = json::array();
  for (size_t c = 0; c < names.size(); ++c) {
    const int i = static_cast<int>(c);
    json item = {{"name", names[c]}, {"value", coords[i]}};
    item["se"] = with_se ? number_or_null(inference->se[i]) : json(nullptr);
    if (inference != nullptr) item["score"] = number_or_null(inference->score[i]);
    coordinates.push_back(item);
  }
  report["coordinates"] = coordinates;

  if (inference != nullptr) {
    const double max_score = inference->score.size() > 0 ? inference->score.cwiseAbs().maxCoeff() : 0.0;
    report["inference"] = {{"g", inference->g},
                           {"n", inference->n},
                           {"aic", inference->aic},
                           {"bic", inference->bic},
                           {"identifiable", inference->identifiable},
                           {"rank", inference->rank},
                           {"min_singular", inference->min_singular},
                           {"max_singular", inference->max_singular},
                           {"max_abs_score", max_score},
                           {"information", matrix_rows(inference->information)}};
  } else {
    const int g = result.model.size();
    const InformationCriteria ic = information_criteria(result.loglik, g, sample.subjects);
    report["inference"] = {{"g", g}, {"n", sample.subjects}, {"aic", ic.aic}, {"bic", ic.bic}};
  }
  return report;
}

json decoding_json(const std::vector<SubjectDecoding>& decoding, const Sample& sample,
                   const PanelDataset* data) {
  json out = json::array();
  for (const SubjectDecoding& d : decoding) {
    const Unit& unit = sample.units[d.unit];
    json item;
    if (data != nullptr && unit.subject >= 0) {
      item["id"] = data->raw().subject_ids[unit.subject];
    } else {
      item["unit"] = d.unit + 1;
      item["weight"] = unit.weight;
    }
    std::vector<int> path, local;
    for (int u : d.decoded.path) path.push_back(u + 1);
    for (int u : d.decoded.local) local.push_back(u + 1);
    item["path"] = path;
    item["log_joint"] = d.decoded.log_joint;
    item["local"] = local;
    item["local_mass"] = d.decoded.local_mass;
    item["posterior"] = matrix_rows(d.posterior);
    if (sample.clustered) item["cluster_class"] = d.cluster_class + 1;
    out.push_back(item);
  }
  return out;
}

std::string estimates_csv(const json& report) {
  std::ostringstream out;
  out << "section,name,value,se\n";
  for (const char* section : {"estimates", "coordinates"}) {
    if (!report.contains(section)) continue;
    for (const auto& item : report.at(section)) {
      out << section << ',' << csv_field(item.at("name").get<std::string>()) << ','
          << csv_number(item.at("value")) << ',' << csv_number(item.value("se", json())) << '\n';
    }
  }
  if (report.contains("fit")) {
    out << "fit,loglik," << csv_number(report["fit"]["loglik"]) << ",\n";
  }
  if (report.contains("inference")) {
    out << "fit,aic," << csv_number(report["inference"]["aic"]) << ",\n";
    out << "fit,bic," << csv_number(report["inference"]["bic"]) << ",\n";
  }
  return out.str();
}

void mark_best(std::vector<SelectionRow>& rows) {
  int best = -1;
  for (size_t r = 0; r < rows.size(); ++r) {
    rows[r].best = false;
    if (!rows[r].error.empty()) continue;
    if (best < 0 || rows[r].bic < rows[best].bic) best = static_cast<int>(r);
  }
  if (best >= 0) rows[best].best = true;
}

json selection_json(const std::vector<SelectionRow>& rows) {
  json table = json::array();
  for (const SelectionRow& r : rows) {
    json item = {{"k", r.k}, {"m", r.m}, {"best", r.best}};
    if (r.error.empty()) {
      item["g"] = r.g;
      item["loglik"] = r.loglik;
      item["aic"] = r.aic;
      item["bic"] = r.bic;
      item["converged"] = r.converged;
    } else {
      item["error"] = r.error;
    }
    table.push_back(item);
  }
  return {{"selection", table}};
}

std::string selection_csv(const std::vector<SelectionRow>& rows) {
  std::ostringstream out;
  out << "k,m,g,loglik,aic,bic,converged,best,error\n";
  for (const SelectionRow& r : rows) {
    out << r.k << ',' << r.m << ',';
    if (r.error.empty()) {
      out << r.g << ',' << format_number(r.loglik) << ',' << format_number(r.aic) << ','
          << format_number(r.bic) << ',' << (r.converged ? "true" : "false");
    } else {
      out << ",,,,";
    }
    out << ',' << (r.best ? "true" : "false") << ',' << csv_field(r.error) << '\n';
  }
  return out.str();
}

}  // namespace lmkit
