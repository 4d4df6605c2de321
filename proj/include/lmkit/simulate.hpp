#pragma once

#include <cstdint>
#include <vector>

#include "lmkit/data.hpp"
#include "lmkit/model.hpp"

namespace lmkit {

struct SimulatedPanel {
  PanelDataset data;
  std::vector<std::vector<int>> paths;  // latent states per subject, 0-based
  std::vector<int> classes;             // cluster class per subject (0 when m = 1)
};

// Draws n subjects from the model. Subject i uses its own random stream, so
// its draws do not depend on n or on other subjects. Covariates, cluster
// structure and response names come from `design` when given (then n must
// equal its subject count); models with covariate columns or cluster classes
// require it.
SimulatedPanel simulate_panel(const Model& model, int n, std::uint64_t seed,
                              const PanelDataset* design = nullptr);

}  // namespace lmkit
