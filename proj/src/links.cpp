#include "lmkit/links.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace lmkit {

namespace {

double clamp_probability(double p) {
  return std::clamp(p, kProbabilityFloor, 1.0 - kProbabilityFloor);
}

// Category index of the i-th non-reference position.
int non_reference_index(int position, int reference) {
  return position < reference ? position : position + 1;
}

}  // namespace

std::string_view to_string(LinkFamily family) {
  switch (family) {
    case LinkFamily::binary_logit: return "logit";
    case LinkFamily::multinomial: return "multinomial";
    case LinkFamily::global: return "global";
    case LinkFamily::continuation: return "continuation";
    case LinkFamily::diagonal_reference: return "diagonal_reference";
  }
  return "unknown";
}

LinkFamily link_family_from_string(std::string_view name) {
  if (name == "logit" || name == "binary_logit") return LinkFamily::binary_logit;
  if (name == "multinomial") return LinkFamily::multinomial;
  if (name == "global") return LinkFamily::global;
  if (name == "continuation") return LinkFamily::continuation;
  if (name == "diagonal_reference") return LinkFamily::diagonal_reference;
  throw std::invalid_argument("unknown link family '" + std::string(name) + "'");
}

double logistic(double x) {
  if (x >= 0.0) {
    return 1.0 / (1.0 + std::exp(-x));
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double logit(double p) {
  p = clamp_probability(p);
  return std::log(p) - std::log1p(-p);
}

double rasch_probability(double ability, double difficulty) {
  return logistic(ability - difficulty);
}

void check_link_arity(const LinkKind& kind, int categories) {
  if (categories < 2) {
    throw LinkError("a link needs at least two categories");
  }
  if (kind.family == LinkFamily::binary_logit && categories != 2) {
    throw LinkError("binary logit link requires exactly two categories, got " +
                    std::to_string(categories));
  }
  if ((kind.family == LinkFamily::multinomial ||
       kind.family == LinkFamily::diagonal_reference) &&
      (kind.reference < 0 || kind.reference >= categories)) {
    throw LinkError("reference category " + std::to_string(kind.reference) +
                    " out of range for " + std::to_string(categories) + " categories");
  }
}

Eigen::VectorXd apply_link(const LinkKind& kind, const Eigen::VectorXd& p) {
  const int l = static_cast<int>(p.size());
  check_link_arity(kind, l);
  for (int y = 0; y < l; ++y) {
    if (!(p[y] > 0.0)) {
      throw LinkError("link undefined: probability of category " + std::to_string(y) +
                      " is not positive");
    }
  }
  Eigen::VectorXd eta(l - 1);
  switch (kind.family) {
    case LinkFamily::binary_logit:
      eta[0] = std::log(clamp_probability(p[1])) - std::log(clamp_probability(p[0]));
      break;
    case LinkFamily::multinomial:
    case LinkFamily::diagonal_reference: {
      const int ref = kind.reference;
      const double log_ref = std::log(clamp_probability(p[ref]));
      for (int i = 0; i < l - 1; ++i) {
        eta[i] = std::log(clamp_probability(p[non_reference_index(i, ref)])) - log_ref;
      }
      break;
    }
    case LinkFamily::global: {
      double below = 0.0;
      for (int y = 1; y < l; ++y) {
        below += p[y - 1];
        const double above = p.tail(l - y).sum();
        eta[y - 1] = std::log(clamp_probability(above)) - std::log(clamp_probability(below));
      }
      break;
    }
    case LinkFamily::continuation: {
      for (int y = 1; y < l; ++y) {
        const double above = p.tail(l - y).sum();
        eta[y - 1] = std::log(clamp_probability(above)) - std::log(clamp_probability(p[y - 1]));
      }
      break;
    }
  }
  return eta;
}

Eigen::VectorXd invert_link(const LinkKind& kind, const Eigen::VectorXd& eta) {
  const int l = static_cast<int>(eta.size()) + 1;
  check_link_arity(kind, l);
  for (int i = 0; i < l - 1; ++i) {
    if (!std::isfinite(eta[i])) {
      throw LinkError("non-finite linear predictor");
    }
  }
  Eigen::VectorXd p(l);
  switch (kind.family) {
    case LinkFamily::binary_logit:
      p[1] = logistic(eta[0]);
      p[0] = logistic(-eta[0]);
      break;
    case LinkFamily::multinomial:
    case LinkFamily::diagonal_reference: {
      const int ref = kind.reference;
      const double top = std::max(0.0, eta.maxCoeff());
      p[ref] = std::exp(-top);
      for (int i = 0; i < l - 1; ++i) {
        p[non_reference_index(i, ref)] = std::exp(eta[i] - top);
      }
      p /= p.sum();
      break;
    }
    case LinkFamily::global: {
      for (int i = 1; i < l - 1; ++i) {
        if (!(eta[i] < eta[i - 1])) {
          throw LinkError("global logits must be strictly decreasing");
        }
      }
      // cumulative survival F_y = P(Y >= y)
      double previous = 1.0;
      for (int y = 1; y < l; ++y) {
        const double survival = logistic(eta[y - 1]);
        p[y - 1] = previous - survival;
        previous = survival;
      }
      p[l - 1] = previous;
      // differences of logistic values may lose the exact ordering by rounding
      for (int y = 0; y < l; ++y) {
        if (!(p[y] > 0.0)) {
          throw LinkError("global logits too close to produce positive probabilities");
        }
      }
      break;
    }
    case LinkFamily::continuation: {
      // P(Y >= y) = prod_{z <= y} logistic(eta_z)
      double survival = 1.0;
      for (int y = 1; y < l; ++y) {
        const double next = survival * logistic(eta[y - 1]);
        p[y - 1] = survival * logistic(-eta[y - 1]);
        survival = next;
      }
      p[l - 1] = survival;
      break;
    }
  }
  return p;
}

Eigen::MatrixXd link_jacobian(const LinkKind& kind, const Eigen::VectorXd& eta,
                              const Eigen::VectorXd& p) {
  const int l = static_cast<int>(p.size());
  Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(l, l - 1);
  switch (kind.family) {
    case LinkFamily::binary_logit: {
      const double v = p[0] * p[1];
      jac(1, 0) = v;
      jac(0, 0) = -v;
      break;
    }
    case LinkFamily::multinomial:
    case LinkFamily::diagonal_reference: {
      const int ref = kind.reference;
      for (int i = 0; i < l - 1; ++i) {
        const int z = non_reference_index(i, ref);
        for (int y = 0; y < l; ++y) {
          jac(y, i) = p[y] * ((y == z ? 1.0 : 0.0) - p[z]);
        }
      }
      break;
    }
    case LinkFamily::global: {
      // p_y = F_y - F_{y+1}, dF_y / d eta_y = F_y (1 - F_y)
      for (int y = 1; y < l; ++y) {
        const double f = logistic(eta[y - 1]);
        const double d = f * (1.0 - f);
        jac(y, y - 1) += d;
        jac(y - 1, y - 1) -= d;
      }
      break;
    }
    case LinkFamily::continuation: {
      // S_y = prod_{z<=y} s_z with s_z = logistic(eta_z); p_y = S_y - S_{y+1}
      std::vector<double> survival(l + 1, 0.0);
      survival[0] = 1.0;
      for (int y = 1; y < l; ++y) {
        survival[y] = survival[y - 1] * logistic(eta[y - 1]);
      }
      survival[l] = 0.0;
      for (int z = 1; z < l; ++z) {
        const double one_minus = logistic(-eta[z - 1]);
        // d S_y / d eta_z = S_y (1 - s_z) for y >= z
        for (int y = 0; y < l; ++y) {
          const double ds_y = (y >= z) ? survival[y] * one_minus : 0.0;
          const double ds_next = (y + 1 >= z && y + 1 < l) ? survival[y + 1] * one_minus : 0.0;
          jac(y, z - 1) = ds_y - ds_next;
        }
      }
      break;
    }
  }
  return jac;
}

}  // namespace lmkit
