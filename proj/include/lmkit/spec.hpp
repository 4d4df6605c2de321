#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "lmkit/links.hpp"

namespace lmkit {

class SpecError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class CovariatePlacement { none, measurement, latent };
enum class MeasurementType { free, time_invariant, link, bivariate_marginal };
enum class MeasurementDesign { state_intercepts, rasch };
enum class InitialType { free, uniform, logit };
enum class TransitionType { free, homogeneous, partial, linear, logit };
enum class LinearPattern { equal_off_diagonal, symmetric, upper_triangular, tridiagonal, identity };
enum class MaskPattern { none, tridiagonal, upper_triangular, custom };

struct MeasurementSpec {
  MeasurementType type = MeasurementType::free;
  LinkFamily link = LinkFamily::global;
  MeasurementDesign design = MeasurementDesign::state_intercepts;

  bool operator==(const MeasurementSpec&) const = default;
};

struct InitialSpec {
  InitialType type = InitialType::free;
  LinkFamily link = LinkFamily::multinomial;  // multinomial or global

  bool operator==(const InitialSpec&) const = default;
};

struct TransitionSpec {
  TransitionType type = TransitionType::free;
  // partial: last occasion (1-based) governed by the first matrix
  int change_point = 0;
  LinearPattern pattern = LinearPattern::equal_off_diagonal;
  // linear and logit: one parameter set for every occasion
  bool homogeneous = true;
  LinkFamily link = LinkFamily::diagonal_reference;  // diagonal_reference or global
  MaskPattern mask = MaskPattern::none;
  std::vector<std::vector<int>> custom_mask;  // k x k, 1 = free entry

  bool operator==(const TransitionSpec&) const = default;
};

struct ModelSpec {
  int k = 2;
  int m = 1;  // cluster classes; 1 means no cluster-level mixture
  std::vector<std::string> covariates;
  std::vector<std::string> lags;  // response variables entering x^(t) through y^(t-1)
  std::vector<std::string> cluster_covariates;
  CovariatePlacement placement = CovariatePlacement::none;
  MeasurementSpec measurement;
  InitialSpec initial;
  TransitionSpec transition;

  bool operator==(const ModelSpec&) const = default;
};

// Problem dimensions a spec is instantiated against.
struct Dims {
  int T = 1;
  std::vector<int> levels;
  int covariates = 0;          // width of x^(t), lag dummies included
  int cluster_covariates = 0;  // width of z_h

  int variables() const { return static_cast<int>(levels.size()); }
};

// Free-entry mask (k x k) implied by the transition spec; all ones when unmasked.
std::vector<std::vector<int>> transition_mask(const TransitionSpec& spec, int k);

// Throws SpecError naming the offending field.
void check_spec(const ModelSpec& spec, const Dims& dims);

ModelSpec spec_from_json(const nlohmann::json& doc);
nlohmann::json spec_to_json(const ModelSpec& spec);

std::string to_string(MeasurementType type);
std::string to_string(InitialType type);
std::string to_string(TransitionType type);
std::string to_string(LinearPattern pattern);
std::string to_string(MaskPattern mask);

}  // namespace lmkit
