#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "lmkit/counts.hpp"
#include "lmkit/model.hpp"
#include "lmkit/sample.hpp"
#include "lmkit/scoring.hpp"

namespace lmkit {

class FitError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct EStepResult {
  double loglik = 0.0;
  ExpectedCounts counts;
};

// Posterior expected counts and the log-likelihood at the model's parameters.
// Throws FitError naming the unit when an observation has zero probability.
EStepResult e_step(const Model& model, const Sample& sample, int threads = 1);

// Log-likelihood only (forward recursions).
double log_likelihood(const Model& model, const Sample& sample, int threads = 1);

// One M-step: closed forms where available, Fisher scoring otherwise.
void m_step(Model& model, const Sample& sample, const ExpectedCounts& counts,
            const ScoringOptions& options = {});

struct FitOptions {
  int starts = 9;  // random starts on top of the deterministic one
  std::uint64_t seed = 0;
  double tolerance = 1e-8;        // relative log-likelihood change
  double param_tolerance = 1e-6;  // max absolute change of the monitored values
  int max_iterations = 5000;
  int threads = 0;  // 0: default_thread_count()
  bool canonicalize = true;
  // Additional starting values, tried after the deterministic start.
  std::vector<Model> start_models;
  ScoringOptions scoring;
};

struct EmRun {
  double loglik = 0.0;
  int iterations = 0;
  bool converged = false;
  std::vector<double> trace;  // log-likelihood at every E-step
};

// EM iterations from the model's current parameters, updated in place.
EmRun run_em(Model& model, const Sample& sample, const FitOptions& options);

struct StartSummary {
  std::string kind;  // deterministic, supplied or random
  int index = 0;
  double loglik = 0.0;
  int iterations = 0;
  bool converged = false;
  std::string error;  // non-empty when the start failed
};

struct FitResult {
  explicit FitResult(Model fitted) : model(std::move(fitted)) {}

  Model model;
  double loglik = 0.0;
  int iterations = 0;
  bool converged = false;
  int best_start = 0;
  bool canonical = false;  // states relabeled by score order
  ExpectedCounts counts;
  std::vector<StartSummary> starts;
  std::vector<double> trace;
};

// Deterministic starting values: blocks at their reset values, measurement
// updated from a quantile split of the first-occasion responses.
Model deterministic_start(const ModelSpec& spec, const Sample& sample);

FitResult fit(const Sample& sample, const ModelSpec& spec, const FitOptions& options = {});
FitResult fit(const PanelDataset& data, const ModelSpec& spec, const FitOptions& options = {});

int resolve_threads(int requested);

}  // namespace lmkit
