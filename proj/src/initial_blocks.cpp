#include <cmath>

#include "lmkit/blocks.hpp"

namespace lmkit {

namespace {

using detail::label;

LinkKind multinomial_ref0() { return LinkKind{LinkFamily::multinomial, 0}; }

class FreeInitial final : public InitialBlock {
 public:
  explicit FreeInitial(int k) : pi_(Eigen::VectorXd::Constant(k, 1.0 / k)) {}

  std::unique_ptr<InitialBlock> clone() const override {
    return std::make_unique<FreeInitial>(*this);
  }
  int size() const override { return static_cast<int>(pi_.size()) - 1; }
  Eigen::VectorXd coords() const override { return apply_link(multinomial_ref0(), pi_); }
  void set_coords(const Eigen::VectorXd& c) override { pi_ = invert_link(multinomial_ref0(), c); }
  std::vector<std::string> coord_names() const override {
    std::vector<std::string> names;
    for (int u = 1; u < pi_.size(); ++u) names.push_back(label("initial.logit", {u + 1}));
    return names;
  }

  std::unique_ptr<ScoringProblem> problem(const Sample&,
                                          const ExpectedCounts& counts) const override {
    const int k = static_cast<int>(pi_.size());
    std::vector<LinkCell> cells(1);
    cells[0].link = multinomial_ref0();
    cells[0].design = Eigen::MatrixXd::Identity(k - 1, k - 1);
    cells[0].counts = counts.initial;
    return std::make_unique<LinkCellProblem>(k - 1, std::move(cells));
  }

  void m_step(const Sample&, const ExpectedCounts& counts, const ScoringOptions&) override {
    const double total = counts.initial.sum();
    if (total < 1e-10) return;
    pi_ = counts.initial / total;
  }

  void randomize(Rng& rng) override { pi_ = rng.flat_dirichlet(static_cast<int>(pi_.size())); }
  void reset() override { pi_.setConstant(1.0 / pi_.size()); }
  Eigen::VectorXd values() const override { return pi_; }

  std::vector<NamedValue> probabilities() const override {
    std::vector<NamedValue> out;
    for (int u = 0; u < pi_.size(); ++u) out.push_back({label("pi", {u + 1}), pi_[u]});
    return out;
  }

  bool permutable() const override { return true; }
  void permute(const std::vector<int>& order) override {
    Eigen::VectorXd next(pi_.size());
    for (int u = 0; u < pi_.size(); ++u) next[u] = pi_[order[u]];
    pi_ = next;
  }

  bool occasion_permutable() const override { return true; }
  void permute_occasions(const std::vector<std::vector<int>>& orders) override {
    permute(orders[0]);
  }

  nlohmann::json to_json() const override {
    return {{"type", "free"}, {"pi", detail::vector_json(pi_)}};
  }
  void from_json(const nlohmann::json& doc) override {
    pi_ = detail::json_vector(doc, "pi", static_cast<int>(pi_.size()));
  }
  void validate(std::vector<std::string>& issues) const override {
    detail::check_simplex(pi_, "initial probabilities", issues);
  }

  Eigen::VectorXd initial(const Eigen::RowVectorXd&, int) const override { return pi_; }

  // Direct access used by tests and simulation setups.
  Eigen::VectorXd pi_;
};

class UniformInitial final : public InitialBlock {
 public:
  explicit UniformInitial(int k) : k_(k) {}
  std::unique_ptr<InitialBlock> clone() const override {
    return std::make_unique<UniformInitial>(*this);
  }
  int size() const override { return 0; }
  Eigen::VectorXd coords() const override { return Eigen::VectorXd(0); }
  void set_coords(const Eigen::VectorXd&) override {}
  std::vector<std::string> coord_names() const override { return {}; }
  std::unique_ptr<ScoringProblem> problem(const Sample&, const ExpectedCounts&) const override {
    return std::make_unique<LinkCellProblem>(0, std::vector<LinkCell>{});
  }
  void m_step(const Sample&, const ExpectedCounts&, const ScoringOptions&) override {}
  void randomize(Rng&) override {}
  void reset() override {}
  Eigen::VectorXd values() const override { return Eigen::VectorXd(0); }
  std::vector<NamedValue> probabilities() const override {
    std::vector<NamedValue> out;
    for (int u = 0; u < k_; ++u) out.push_back({label("pi", {u + 1}), 1.0 / k_});
    return out;
  }
  bool permutable() const override { return true; }
  void permute(const std::vector<int>&) override {}
  bool occasion_permutable() const override { return true; }
  void permute_occasions(const std::vector<std::vector<int>>&) override {}
  nlohmann::json to_json() const override { return {{"type", "uniform"}}; }
  void from_json(const nlohmann::json&) override {}
  Eigen::VectorXd initial(const Eigen::RowVectorXd&, int) const override {
    return Eigen::VectorXd::Constant(k_, 1.0 / k_);
  }

 private:
  int k_;
};

// Multinomial (reference state 1) or global logits for the initial
// distribution: eta = intercepts + class shift c_w + slopes' x^(1).
class LogitInitial final : public InitialBlock {
 public:
  LogitInitial(int k, LinkFamily family, int covariates, int classes)
      : k_(k), family_(family), p_(k > 1 ? covariates : 0), m_(classes) {
    shifts_ = k_ > 1 ? m_ - 1 : 0;
    slope_count_ = family_ == LinkFamily::global ? p_ : p_ * (k_ - 1);
    if (family_ == LinkFamily::global && k_ > 2) ordered_.push_back({0, k_ - 1});
    beta_ = Eigen::VectorXd::Zero(dimension());
    reset();
  }

  std::unique_ptr<InitialBlock> clone() const override {
    return std::make_unique<LogitInitial>(*this);
  }
  int size() const override { return dimension(); }
  Eigen::VectorXd coords() const override { return beta_; }
  void set_coords(const Eigen::VectorXd& c) override {
    beta_ = c;
    natural_ = ordered_to_natural(beta_, ordered_);
  }
  std::vector<std::string> coord_names() const override {
    std::vector<std::string> names;
    for (int u = 1; u < k_; ++u) {
      const bool gap = family_ == LinkFamily::global && u > 1;
      names.push_back(label(gap ? "initial.log_gap" : "initial.intercept", {u + 1}));
    }
    for (int w = 1; w <= shifts_; ++w) names.push_back(label("initial.class", {w + 1}));
    if (family_ == LinkFamily::global) {
      for (int c = 0; c < p_; ++c) names.push_back(label("initial.slope", {c + 1}));
    } else {
      for (int v = 1; v < k_; ++v) {
        for (int c = 0; c < p_; ++c) names.push_back(label("initial.slope", {v + 1, c + 1}));
      }
    }
    return names;
  }

  std::unique_ptr<ScoringProblem> problem(const Sample& sample,
                                          const ExpectedCounts& counts) const override {
    std::vector<LinkCell> cells;
    if (p_ == 0) {
      const Eigen::RowVectorXd none(0);
      for (int w = 0; w < m_; ++w) {
        cells.push_back(cell(none, w, counts.class_initial.row(w).transpose()));
      }
    } else {
      for (int w = 0; w < m_; ++w) {
        for (int i = 0; i < counts.unit_count; ++i) {
          const Eigen::VectorXd a = counts.unit(w, i).state.row(0).transpose();
          cells.push_back(cell(sample.units[i].x.row(0), w, a));
        }
      }
    }
    return std::make_unique<LinkCellProblem>(dimension(), std::move(cells), ordered_);
  }

  void randomize(Rng& rng) override {
    for (int i = 0; i < beta_.size(); ++i) beta_[i] = rng.uniform(-1.0, 1.0);
    set_coords(beta_);
  }

  void reset() override {
    Eigen::VectorXd natural = Eigen::VectorXd::Zero(dimension());
    if (family_ == LinkFamily::global) {
      // cut points of the uniform distribution
      for (int u = 1; u < k_; ++u) natural[u - 1] = std::log(double(k_ - u) / u);
    }
    // cluster classes start apart
    for (int w = 1; w <= shifts_; ++w) natural[k_ - 1 + w - 1] = 1.5 * w / shifts_;
    set_natural(natural);
  }

  std::vector<NamedValue> probabilities() const override {
    std::vector<NamedValue> out;
    const Eigen::RowVectorXd zero = Eigen::RowVectorXd::Zero(p_);
    for (int w = 0; w < m_; ++w) {
      const Eigen::VectorXd pi = initial(zero, w);
      for (int u = 0; u < k_; ++u) {
        out.push_back({m_ == 1 ? label("pi", {u + 1}) : label("pi", {w + 1, u + 1}), pi[u]});
      }
    }
    return out;
  }

  nlohmann::json to_json() const override {
    return {{"type", "logit"},
            {"link", std::string(to_string(family_))},
            {"coefficients", detail::vector_json(natural_)}};
  }
  void from_json(const nlohmann::json& doc) override {
    const Eigen::VectorXd natural = detail::json_vector(doc, "coefficients", dimension());
    if (family_ == LinkFamily::global) {
      for (int u = 2; u < k_; ++u) {
        if (!(natural[u - 1] < natural[u - 2])) {
          throw SpecError("initial global intercepts must be strictly decreasing");
        }
      }
    }
    set_natural(natural);
  }

  Eigen::VectorXd initial(const Eigen::RowVectorXd& x1, int w) const override {
    if (k_ == 1) return Eigen::VectorXd::Ones(1);
    Eigen::VectorXd p;
    LinkCell c = cell(p_ > 0 ? x1 : Eigen::RowVectorXd(0), w, Eigen::VectorXd::Zero(k_));
    if (!LinkCellProblem::resolve(c, natural_, p, nullptr)) {
      throw LinkError("initial logits are not invertible");
    }
    return p;
  }

 private:
  int dimension() const { return (k_ - 1) + shifts_ + slope_count_; }

  void set_natural(const Eigen::VectorXd& natural) {
    set_coords(natural_to_ordered(natural, ordered_));
  }

  LinkCell cell(const Eigen::RowVectorXd& x, int w, const Eigen::VectorXd& counts) const {
    LinkCell c;
    c.link = family_ == LinkFamily::global ? LinkKind{LinkFamily::global, 0} : multinomial_ref0();
    c.design = Eigen::MatrixXd::Zero(k_ - 1, dimension());
    const int class_col = k_ - 1;
    const int slope_col = class_col + shifts_;
    for (int v = 0; v < k_ - 1; ++v) {
      c.design(v, v) = 1.0;
      if (w > 0) c.design(v, class_col + w - 1) = 1.0;
      for (int j = 0; j < p_ && j < x.size(); ++j) {
        const int col = family_ == LinkFamily::global ? slope_col + j : slope_col + v * p_ + j;
        c.design(v, col) = x[j];
      }
    }
    c.counts = counts;
    return c;
  }

  int k_;
  LinkFamily family_;
  int p_;
  int m_;
  int shifts_ = 0;
  int slope_count_ = 0;
  std::vector<OrderedGroup> ordered_;
  Eigen::VectorXd beta_;
  Eigen::VectorXd natural_;
};

}  // namespace

std::unique_ptr<InitialBlock> make_initial_block(const ModelSpec& spec, const Dims& dims) {
  const int k = spec.k;
  switch (spec.initial.type) {
    case InitialType::free:
      return std::make_unique<FreeInitial>(k);
    case InitialType::uniform:
      return std::make_unique<UniformInitial>(k);
    case InitialType::logit: {
      const int p = spec.placement == CovariatePlacement::latent ? dims.covariates : 0;
      return std::make_unique<LogitInitial>(k, spec.initial.link, p, spec.m);
    }
  }
  throw SpecError("unsupported initial model");
}

}  // namespace lmkit
