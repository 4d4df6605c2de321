#pragma once

#include <string>
#include <vector>

#include "lmkit/model.hpp"
#include "lmkit/spec.hpp"

namespace lmkit {

// Every violated invariant with its location; empty when the parameters are
// valid for `spec`.
std::vector<std::string> validate_params(const Model& model, const ModelSpec& spec);

// Number of free parameters g of a valid spec at the given dimensions.
int count_free_parameters(const ModelSpec& spec, const Dims& dims);

// Relabels states so that the measurement state scores are non-decreasing.
// Returns false when some block cannot be relabeled (the model is unchanged).
bool canonicalize(Model& model);

// True when `constrained` is obtained from `full` by restricting parameters:
// equal k, covariates and placement, at most as many cluster classes, and
// every block at most as flexible as its counterpart.
bool nested_spec(const ModelSpec& constrained, const ModelSpec& full);

// True when the state scores are non-decreasing in the state index.
bool states_ordered(const Model& model);

}  // namespace lmkit
