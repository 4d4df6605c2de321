#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

#include <Eigen/Dense>

namespace lmkit {

// Thrown when a link cannot be evaluated or inverted at the given point.
class LinkError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class LinkFamily {
  binary_logit,         // l = 2, log(p1 / p0)
  multinomial,          // log(p_y / p_ref), y != ref
  global,               // log(P(Y >= y) / P(Y < y)), y = 1..l-1
  continuation,         // log(P(Y >= y) / P(Y = y - 1)), y = 1..l-1
  diagonal_reference,   // transition rows: multinomial with reference = row state
};

struct LinkKind {
  LinkFamily family = LinkFamily::multinomial;
  int reference = 0;  // used by multinomial and diagonal_reference only
};

std::string_view to_string(LinkFamily family);
LinkFamily link_family_from_string(std::string_view name);

// Probabilities are clamped to [kProbabilityFloor, 1 - kProbabilityFloor]
// before any logarithm is taken.
inline constexpr double kProbabilityFloor = 1e-12;

double logistic(double x);
double logit(double p);

// Maps a probability vector of length l to its l - 1 linear predictors.
Eigen::VectorXd apply_link(const LinkKind& kind, const Eigen::VectorXd& p);

// Inverse of apply_link. Global predictors must be strictly decreasing.
Eigen::VectorXd invert_link(const LinkKind& kind, const Eigen::VectorXd& eta);

// d p / d eta at eta, an l x (l - 1) matrix; p must equal invert_link(kind, eta).
Eigen::MatrixXd link_jacobian(const LinkKind& kind, const Eigen::VectorXd& eta,
                              const Eigen::VectorXd& p);

// Success probability logistic(ability - difficulty).
double rasch_probability(double ability, double difficulty);

// Checks the family/arity pairing (binary_logit only for l = 2, reference in range).
void check_link_arity(const LinkKind& kind, int categories);

}  // namespace lmkit
