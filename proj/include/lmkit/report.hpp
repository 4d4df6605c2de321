#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "lmkit/data.hpp"
#include "lmkit/decode.hpp"
#include "lmkit/em.hpp"
#include "lmkit/inference.hpp"
#include "lmkit/model.hpp"
#include "lmkit/sample.hpp"

namespace lmkit {

nlohmann::json dims_to_json(const Dims& dims);
Dims dims_from_json(const nlohmann::json& doc);

// Self-contained parameter document: spec, dims and parameter values.
nlohmann::json params_document(const Model& model);

// Rebuilds a model from a params document or a fit report.
Model load_params_document(const nlohmann::json& doc);

// Structured fit report. Object keys are sorted and numbers printed in
// shortest round-trip form, so equal inputs give byte-identical output.
nlohmann::json fit_report(const FitResult& result, const Sample& sample,
                          const InferenceReport* inference = nullptr);

// Per-subject posterior and decoded-path export.
nlohmann::json decoding_json(const std::vector<SubjectDecoding>& decoding, const Sample& sample,
                             const PanelDataset* data = nullptr);

// Flat table section,name,value,se of the estimates in a fit report.
std::string estimates_csv(const nlohmann::json& report);

struct SelectionRow {
  int k = 0;
  int m = 1;
  int g = 0;
  double loglik = 0.0;
  double aic = 0.0;
  double bic = 0.0;
  bool converged = false;
  std::string error;  // non-empty when the fit failed
  bool best = false;  // BIC-minimal row
};

// Marks the BIC-minimal successful row (first on ties).
void mark_best(std::vector<SelectionRow>& rows);
nlohmann::json selection_json(const std::vector<SelectionRow>& rows);
std::string selection_csv(const std::vector<SelectionRow>& rows);

// Shortest round-trip decimal form of a double; "nan"/"inf" spelled out.
std::string format_number(double value);

}  // namespace lmkit
