#include <algorithm>
#include <cmath>

#include "lmkit/blocks.hpp"

namespace lmkit {

namespace {

using detail::label;

LinkKind diagonal_reference(int u) { return LinkKind{LinkFamily::diagonal_reference, u}; }

// Free transition matrices shared within segments of occasions: one segment
// per occasion (free), one overall (homogeneous) or two split at the change
// point (partial homogeneity).
class SegmentedTransition final : public TransitionBlock {
 public:
  SegmentedTransition(int k, int T, TransitionType type, int change_point) : k_(k) {
    segment_of_.assign(T, -1);
    int segments = 0;
    for (int t = 1; t < T; ++t) {
      switch (type) {
        case TransitionType::free:
          segment_of_[t] = segments++;
          break;
        case TransitionType::homogeneous:
          segment_of_[t] = 0;
          segments = 1;
          break;
        default:  // partial: 1-based occasions 2..change_point use the first matrix
          segment_of_[t] = (t + 1 <= change_point) ? 0 : 1;
          segments = std::max(segments, segment_of_[t] + 1);
          break;
      }
    }
    if (type == TransitionType::partial && T > 1 && segment_of_[1] == 1) {
      // no occasion in the first segment cannot happen with change_point >= 2
      segments = 2;
    }
    matrices_.assign(segments, default_matrix());
    type_ = type;
  }

  std::unique_ptr<TransitionBlock> clone() const override {
    return std::make_unique<SegmentedTransition>(*this);
  }
  int size() const override { return static_cast<int>(matrices_.size()) * k_ * (k_ - 1); }

  Eigen::VectorXd coords() const override {
    Eigen::VectorXd c(size());
    int pos = 0;
    for (const auto& P : matrices_) {
      for (int u = 0; u < k_; ++u) {
        c.segment(pos, k_ - 1) = apply_link(diagonal_reference(u), P.row(u).transpose());
        pos += k_ - 1;
      }
    }
    return c;
  }
  void set_coords(const Eigen::VectorXd& c) override {
    int pos = 0;
    for (auto& P : matrices_) {
      for (int u = 0; u < k_; ++u) {
        P.row(u) = invert_link(diagonal_reference(u), c.segment(pos, k_ - 1)).transpose();
        pos += k_ - 1;
      }
    }
  }
  std::vector<std::string> coord_names() const override {
    std::vector<std::string> names;
    for (size_t s = 0; s < matrices_.size(); ++s) {
      for (int u = 0; u < k_; ++u) {
        for (int v = 0; v < k_; ++v) {
          if (v != u) names.push_back(label("transition.logit", {int(s) + 1, u + 1, v + 1}));
        }
      }
    }
    return names;
  }

  std::unique_ptr<ScoringProblem> problem(const Sample&,
                                          const ExpectedCounts& counts) const override {
    const auto pooled = pooled_counts(counts);
    std::vector<LinkCell> cells;
    int pos = 0;
    for (size_t s = 0; s < matrices_.size(); ++s) {
      for (int u = 0; u < k_; ++u) {
        LinkCell cell;
        cell.link = diagonal_reference(u);
        cell.design = Eigen::MatrixXd::Zero(k_ - 1, size());
        cell.design.block(0, pos, k_ - 1, k_ - 1).setIdentity();
        cell.counts = pooled[s].row(u).transpose();
        cells.push_back(std::move(cell));
        pos += k_ - 1;
      }
    }
    return std::make_unique<LinkCellProblem>(size(), std::move(cells));
  }

  void m_step(const Sample&, const ExpectedCounts& counts, const ScoringOptions&) override {
    const auto pooled = pooled_counts(counts);
    for (size_t s = 0; s < matrices_.size(); ++s) {
      for (int u = 0; u < k_; ++u) {
        const double total = pooled[s].row(u).sum();
        if (total < 1e-10) continue;
        matrices_[s].row(u) = pooled[s].row(u) / total;
      }
    }
  }

  void randomize(Rng& rng) override {
    for (auto& P : matrices_) {
      for (int u = 0; u < k_; ++u) P.row(u) = rng.flat_dirichlet(k_).transpose();
    }
  }
  void reset() override {
    for (auto& P : matrices_) P = default_matrix();
  }

  Eigen::VectorXd values() const override {
    Eigen::VectorXd v(matrices_.size() * k_ * k_);
    int pos = 0;
    for (const auto& P : matrices_) {
      for (int u = 0; u < k_; ++u) {
        for (int w = 0; w < k_; ++w) v[pos++] = P(u, w);
      }
    }
    return v;
  }

  std::vector<NamedValue> probabilities() const override {
    std::vector<NamedValue> out;
    for (size_t s = 0; s < matrices_.size(); ++s) {
      for (int u = 0; u < k_; ++u) {
        for (int v = 0; v < k_; ++v) {
          out.push_back({label("Pi", {int(s) + 1, u + 1, v + 1}), matrices_[s](u, v)});
        }
      }
    }
    return out;
  }

  bool permutable() const override { return true; }
  void permute(const std::vector<int>& order) override {
    for (auto& P : matrices_) {
      Eigen::MatrixXd next(k_, k_);
      for (int u = 0; u < k_; ++u) {
        for (int v = 0; v < k_; ++v) next(u, v) = P(order[u], order[v]);
      }
      P = next;
    }
  }

  // Only free matrices map one occasion's labels to the next independently.
  bool occasion_permutable() const override { return type_ == TransitionType::free; }
  void permute_occasions(const std::vector<std::vector<int>>& orders) override {
    for (size_t t = 1; t < segment_of_.size(); ++t) {
      Eigen::MatrixXd& P = matrices_[segment_of_[t]];
      Eigen::MatrixXd next(k_, k_);
      for (int u = 0; u < k_; ++u) {
        for (int v = 0; v < k_; ++v) next(u, v) = P(orders[t - 1][u], orders[t][v]);
      }
      P = next;
    }
  }

  nlohmann::json to_json() const override {
    nlohmann::json mats = nlohmann::json::array();
    for (const auto& P : matrices_) mats.push_back(detail::matrix_json(P));
    return {{"type", to_string(type_)}, {"matrices", mats}};
  }
  void from_json(const nlohmann::json& doc) override {
    if (!doc.contains("matrices") || doc.at("matrices").size() != matrices_.size()) {
      throw SpecError("parameter field 'matrices' must hold " + std::to_string(matrices_.size()) +
                      " transition matrices");
    }
    for (size_t s = 0; s < matrices_.size(); ++s) {
      nlohmann::json wrapper = {{"m", doc.at("matrices").at(s)}};
      matrices_[s] = detail::json_matrix(wrapper, "m", k_, k_);
    }
  }
  void validate(std::vector<std::string>& issues) const override {
    for (size_t s = 0; s < matrices_.size(); ++s) {
      for (int u = 0; u < k_; ++u) {
        detail::check_simplex(matrices_[s].row(u).transpose(),
                              "transition row " + std::to_string(u + 1) + " of matrix " +
                                  std::to_string(s + 1),
                              issues);
      }
    }
  }

  Eigen::MatrixXd transition(const Eigen::RowVectorXd&, int t, int) const override {
    return matrices_[segment_of_[t]];
  }

  // Direct access for tests and simulation setups.
  std::vector<Eigen::MatrixXd>& matrices() { return matrices_; }

 private:
  Eigen::MatrixXd default_matrix() const {
    return 0.8 * Eigen::MatrixXd::Identity(k_, k_) + Eigen::MatrixXd::Constant(k_, k_, 0.2 / k_);
  }

  std::vector<Eigen::MatrixXd> pooled_counts(const ExpectedCounts& counts) const {
    std::vector<Eigen::MatrixXd> pooled(matrices_.size(), Eigen::MatrixXd::Zero(k_, k_));
    for (size_t t = 1; t < segment_of_.size(); ++t) pooled[segment_of_[t]] += counts.transitions[t - 1];
    return pooled;
  }

  int k_;
  TransitionType type_ = TransitionType::free;
  std::vector<int> segment_of_;
  std::vector<Eigen::MatrixXd> matrices_;
};

// Off-diagonal transition probabilities linear in delta; the diagonal is one
// minus the row sum. Iterates leaving [floor, 1] are rejected by the scoring
// step-halving.
class LinearTransition final : public TransitionBlock {
 public:
  static constexpr double kFloor = 1e-8;

  LinearTransition(int k, int T, LinearPattern pattern, bool homogeneous)
      : k_(k), T_(T), pattern_(pattern), homogeneous_(homogeneous) {
    int next = 0;
    index_ = Eigen::MatrixXi::Constant(k, k, -1);
    for (int u = 0; u < k; ++u) {
      for (int v = 0; v < k; ++v) {
        if (u == v) continue;
        switch (pattern) {
          case LinearPattern::equal_off_diagonal:
            index_(u, v) = 0;
            next = 1;
            break;
          case LinearPattern::symmetric:
            if (u < v) index_(u, v) = next++;
            break;
          case LinearPattern::upper_triangular:
            if (u < v) index_(u, v) = next++;
            break;
          case LinearPattern::tridiagonal:
            if (std::abs(u - v) == 1) index_(u, v) = next++;
            break;
          case LinearPattern::identity:
            break;
        }
      }
    }
    if (pattern == LinearPattern::symmetric) {
      for (int u = 0; u < k; ++u) {
        for (int v = 0; v < u; ++v) index_(u, v) = index_(v, u);
      }
    }
    per_set_ = next;
    sets_ = homogeneous_ ? (T > 1 ? 1 : 0) : std::max(T - 1, 0);
    delta_ = Eigen::VectorXd::Zero(per_set_ * sets_);
    reset();
  }

  std::unique_ptr<TransitionBlock> clone() const override {
    return std::make_unique<LinearTransition>(*this);
  }
  int size() const override { return static_cast<int>(delta_.size()); }
  Eigen::VectorXd coords() const override { return delta_; }
  void set_coords(const Eigen::VectorXd& c) override { delta_ = c; }
  std::vector<std::string> coord_names() const override {
    std::vector<std::string> names;
    for (int s = 0; s < sets_; ++s) {
      for (int i = 0; i < per_set_; ++i) {
        names.push_back(homogeneous_ ? label("transition.delta", {i + 1})
                                     : label("transition.delta", {s + 2, i + 1}));
      }
    }
    return names;
  }

  std::unique_ptr<ScoringProblem> problem(const Sample&,
                                          const ExpectedCounts& counts) const override {
    std::vector<AffineCell> cells;
    for (int s = 0; s < sets_; ++s) {
      Eigen::MatrixXd pooled = Eigen::MatrixXd::Zero(k_, k_);
      for (int t = 1; t < T_; ++t) {
        if (set_of(t) == s) pooled += counts.transitions[t - 1];
      }
      for (int u = 0; u < k_; ++u) {
        AffineCell cell;
        cell.base = Eigen::VectorXd::Unit(k_, u);
        cell.slope = Eigen::MatrixXd::Zero(k_, size());
        for (int v = 0; v < k_; ++v) {
          if (v == u) continue;
          if (index_(u, v) < 0) {
            cell.structural_zero.push_back(v);
            continue;
          }
          const int col = s * per_set_ + index_(u, v);
          cell.slope(v, col) += 1.0;
          cell.slope(u, col) -= 1.0;
        }
        cell.counts = pooled.row(u).transpose();
        cells.push_back(std::move(cell));
      }
    }
    return std::make_unique<AffineCellProblem>(size(), std::move(cells), kFloor);
  }

  void randomize(Rng& rng) override {
    for (int i = 0; i < delta_.size(); ++i) delta_[i] = rng.uniform(0.0, 0.5 / k_);
  }
  void reset() override { delta_.setConstant(0.2 / k_); }

  std::vector<NamedValue> probabilities() const override {
    std::vector<NamedValue> out;
    const Eigen::RowVectorXd none(0);
    for (int s = 0; s < sets_; ++s) {
      const Eigen::MatrixXd P = matrix(s);
      for (int u = 0; u < k_; ++u) {
        for (int v = 0; v < k_; ++v) out.push_back({label("Pi", {s + 1, u + 1, v + 1}), P(u, v)});
      }
    }
    return out;
  }

  bool permutable() const override {
    return pattern_ == LinearPattern::equal_off_diagonal || pattern_ == LinearPattern::identity;
  }
  void permute(const std::vector<int>&) override {}

  nlohmann::json to_json() const override {
    return {{"type", "linear"},
            {"pattern", to_string(pattern_)},
            {"delta", detail::vector_json(delta_)}};
  }
  void from_json(const nlohmann::json& doc) override {
    delta_ = detail::json_vector(doc, "delta", size());
  }
  void validate(std::vector<std::string>& issues) const override {
    for (int s = 0; s < sets_; ++s) {
      const Eigen::MatrixXd P = matrix(s);
      for (int u = 0; u < k_; ++u) {
        detail::check_simplex(P.row(u).transpose(),
                              "transition row " + std::to_string(u + 1) + " of matrix " +
                                  std::to_string(s + 1),
                              issues);
      }
    }
  }

  Eigen::MatrixXd transition(const Eigen::RowVectorXd&, int t, int) const override {
    return matrix(set_of(t));
  }

 private:
  int set_of(int t) const { return homogeneous_ ? 0 : t - 1; }

  Eigen::MatrixXd matrix(int s) const {
    Eigen::MatrixXd P = Eigen::MatrixXd::Zero(k_, k_);
    for (int u = 0; u < k_; ++u) {
      double off = 0.0;
      for (int v = 0; v < k_; ++v) {
        if (v == u || index_(u, v) < 0) continue;
        P(u, v) = delta_[s * per_set_ + index_(u, v)];
        off += P(u, v);
      }
      P(u, u) = 1.0 - off;
    }
    return P;
  }

  int k_;
  int T_;
  LinearPattern pattern_;
  bool homogeneous_;
  Eigen::MatrixXi index_;
  int per_set_ = 0;
  int sets_ = 0;
  Eigen::VectorXd delta_;
};

// Logit transition rows: diagonal-reference logits over the free entries of
// each row, or global logits with ordered row intercepts. The predictor adds a
// cluster-class shift and covariate slopes.
class LogitTransition final : public TransitionBlock {
 public:
  LogitTransition(int k, int T, LinkFamily family, std::vector<std::vector<int>> mask,
                  bool homogeneous, int covariates, int classes)
      : k_(k), T_(T), family_(family), homogeneous_(homogeneous), m_(classes) {
    p_ = k > 1 ? covariates : 0;
    shifts_ = k > 1 ? m_ - 1 : 0;
    sets_ = homogeneous_ ? (T > 1 ? 1 : 0) : std::max(T - 1, 0);
    support_.resize(k);
    reference_.assign(k, 0);
    for (int u = 0; u < k; ++u) {
      for (int v = 0; v < k; ++v) {
        if (family_ == LinkFamily::global || mask[u][v]) support_[u].push_back(v);
      }
      const auto it = std::find(support_[u].begin(), support_[u].end(), u);
      reference_[u] = it == support_[u].end() ? 0 : static_cast<int>(it - support_[u].begin());
    }
    // intercept layout: per set, per row, (support - 1) entries
    row_start_.assign(k, 0);
    int per_set = 0;
    for (int u = 0; u < k; ++u) {
      row_start_[u] = per_set;
      per_set += std::max(static_cast<int>(support_[u].size()) - 1, 0);
    }
    per_set_ = per_set;
    // slope layout: global common vector; diagonal-reference one vector per free logit
    slope_count_ = family_ == LinkFamily::global ? p_ : p_ * per_set_;
    if (family_ == LinkFamily::global && k_ > 2) {
      for (int s = 0; s < sets_; ++s) {
        for (int u = 0; u < k_; ++u) ordered_.push_back({s * per_set_ + row_start_[u], k_ - 1});
      }
    }
    beta_ = Eigen::VectorXd::Zero(dimension());
    reset();
  }

  std::unique_ptr<TransitionBlock> clone() const override {
    return std::make_unique<LogitTransition>(*this);
  }
  int size() const override { return dimension(); }
  Eigen::VectorXd coords() const override { return beta_; }
  void set_coords(const Eigen::VectorXd& c) override {
    beta_ = c;
    natural_ = ordered_to_natural(beta_, ordered_);
  }
  std::vector<std::string> coord_names() const override {
    std::vector<std::string> names;
    for (int s = 0; s < sets_; ++s) {
      for (int u = 0; u < k_; ++u) {
        int pos = 0;
        for (size_t i = 0; i < support_[u].size(); ++i) {
          if (static_cast<int>(i) == reference_[u] && family_ != LinkFamily::global) continue;
          if (family_ == LinkFamily::global && i == 0) continue;
          const int v = support_[u][i];
          const bool gap = family_ == LinkFamily::global && pos > 0;
          std::string base = gap ? "transition.log_gap" : "transition.intercept";
          names.push_back(homogeneous_ ? label(base, {u + 1, v + 1})
                                       : label(base, {s + 2, u + 1, v + 1}));
          ++pos;
        }
      }
    }
    for (int w = 1; w <= shifts_; ++w) names.push_back(label("transition.class", {w + 1}));
    if (family_ == LinkFamily::global) {
      for (int c = 0; c < p_; ++c) names.push_back(label("transition.slope", {c + 1}));
    } else {
      for (int i = 0; i < per_set_; ++i) {
        for (int c = 0; c < p_; ++c) names.push_back(label("transition.slope", {i + 1, c + 1}));
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
        for (int s = 0; s < sets_; ++s) {
          Eigen::MatrixXd pooled = Eigen::MatrixXd::Zero(k_, k_);
          for (int t = 1; t < T_; ++t) {
            if (set_of(t) == s) pooled += counts.class_transitions[w][t - 1];
          }
          for (int u = 0; u < k_; ++u) {
            if (support_[u].empty()) continue;
            cells.push_back(cell(none, s, u, w, pooled.row(u).transpose()));
          }
        }
      }
    } else {
      for (int w = 0; w < m_; ++w) {
        for (int i = 0; i < counts.unit_count; ++i) {
          const UnitPosterior& post = counts.unit(w, i);
          for (int t = 1; t < T_; ++t) {
            for (int u = 0; u < k_; ++u) {
              if (support_[u].empty()) continue;
              cells.push_back(cell(sample.units[i].x.row(t), set_of(t), u, w,
                                   post.pair[t - 1].row(u).transpose()));
            }
          }
        }
      }
    }
    return std::make_unique<LinkCellProblem>(dimension(), std::move(cells), ordered_);
  }

  void randomize(Rng& rng) override {
    for (int i = 0; i < beta_.size(); ++i) beta_[i] = rng.uniform(-1.0, 1.0);
    set_coords(beta_);
  }

  // Rows of 0.8 I + 0.2 / k restricted to the free entries; cluster classes
  // get increasing shifts so that they start apart.
  void reset() override {
    Eigen::VectorXd natural = Eigen::VectorXd::Zero(dimension());
    for (int s = 0; s < sets_; ++s) {
      for (int u = 0; u < k_; ++u) {
        const int size = static_cast<int>(support_[u].size());
        if (size < 2) continue;
        Eigen::VectorXd row(size);
        for (int i = 0; i < size; ++i) row[i] = (support_[u][i] == u ? 0.8 : 0.0) + 0.2 / k_;
        row /= row.sum();
        const LinkKind link = family_ == LinkFamily::global
                                  ? LinkKind{LinkFamily::global, 0}
                                  : LinkKind{LinkFamily::diagonal_reference, reference_[u]};
        natural.segment(s * per_set_ + row_start_[u], size - 1) = apply_link(link, row);
      }
    }
    for (int w = 1; w <= shifts_; ++w) natural[sets_ * per_set_ + w - 1] = 1.5 * w / shifts_;
    set_coords(natural_to_ordered(natural, ordered_));
  }

  std::vector<NamedValue> probabilities() const override {
    std::vector<NamedValue> out;
    const Eigen::RowVectorXd zero = Eigen::RowVectorXd::Zero(p_);
    for (int w = 0; w < m_; ++w) {
      for (int s = 0; s < sets_; ++s) {
        const int t = homogeneous_ ? 1 : s + 1;
        const Eigen::MatrixXd P = transition(zero, t, w);
        for (int u = 0; u < k_; ++u) {
          for (int v = 0; v < k_; ++v) {
            out.push_back({m_ == 1 ? label("Pi", {s + 1, u + 1, v + 1})
                                   : label("Pi", {w + 1, s + 1, u + 1, v + 1}),
                           P(u, v)});
          }
        }
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
    for (const auto& g : ordered_) {
      for (int i = 1; i < g.length; ++i) {
        if (!(natural[g.start + i] < natural[g.start + i - 1])) {
          throw SpecError("global transition intercepts must be strictly decreasing in v");
        }
      }
    }
    set_coords(natural_to_ordered(natural, ordered_));
  }
  void validate(std::vector<std::string>& issues) const override {
    for (int u = 0; u < k_; ++u) {
      if (support_[u].empty()) {
        issues.push_back("transition row " + std::to_string(u + 1) +
                         " has no free entry (unreachable row)");
      }
    }
  }

  Eigen::MatrixXd transition(const Eigen::RowVectorXd& xt, int t, int w) const override {
    Eigen::MatrixXd P = Eigen::MatrixXd::Zero(k_, k_);
    if (k_ == 1) {
      P(0, 0) = 1.0;
      return P;
    }
    const Eigen::RowVectorXd x = p_ > 0 ? xt : Eigen::RowVectorXd(0);
    for (int u = 0; u < k_; ++u) {
      if (support_[u].empty()) continue;
      Eigen::VectorXd p;
      const LinkCell c = cell(x, set_of(t), u, w, Eigen::VectorXd::Zero(k_));
      if (!LinkCellProblem::resolve(c, natural_, p, nullptr)) {
        throw LinkError("transition logits are not invertible");
      }
      P.row(u) = p.transpose();
    }
    return P;
  }

 private:
  int dimension() const { return sets_ * per_set_ + shifts_ + slope_count_; }
  int set_of(int t) const { return homogeneous_ ? 0 : t - 1; }

  LinkCell cell(const Eigen::RowVectorXd& x, int s, int u, int w,
                const Eigen::VectorXd& counts) const {
    LinkCell c;
    const int size = static_cast<int>(support_[u].size());
    c.counts = counts;
    if (family_ == LinkFamily::global) {
      c.link = LinkKind{LinkFamily::global, 0};
    } else {
      c.link = LinkKind{size == 2 ? LinkFamily::diagonal_reference : LinkFamily::diagonal_reference,
                        reference_[u]};
      if (size != k_) c.support = support_[u];
    }
    c.design = Eigen::MatrixXd::Zero(std::max(size - 1, 0), dimension());
    const int class_col = sets_ * per_set_;
    const int slope_col = class_col + shifts_;
    for (int i = 0; i < size - 1; ++i) {
      const int local = row_start_[u] + i;
      c.design(i, s * per_set_ + local) = 1.0;
      if (w > 0 && shifts_ > 0) c.design(i, class_col + w - 1) = 1.0;
      for (int j = 0; j < p_ && j < x.size(); ++j) {
        const int col = family_ == LinkFamily::global ? slope_col + j : slope_col + local * p_ + j;
        c.design(i, col) = x[j];
      }
    }
    return c;
  }

  int k_;
  int T_;
  LinkFamily family_;
  bool homogeneous_;
  int m_;
  int p_ = 0;
  int shifts_ = 0;
  int sets_ = 0;
  int per_set_ = 0;
  int slope_count_ = 0;
  std::vector<std::vector<int>> support_;
  std::vector<int> reference_;
  std::vector<int> row_start_;
  std::vector<OrderedGroup> ordered_;
  Eigen::VectorXd beta_;
  Eigen::VectorXd natural_;
};

}  // namespace

std::unique_ptr<TransitionBlock> make_transition_block(const ModelSpec& spec, const Dims& dims) {
  const auto& ts = spec.transition;
  switch (ts.type) {
    case TransitionType::free:
    case TransitionType::homogeneous:
    case TransitionType::partial:
      return std::make_unique<SegmentedTransition>(spec.k, dims.T, ts.type, ts.change_point);
    case TransitionType::linear:
      return std::make_unique<LinearTransition>(spec.k, dims.T, ts.pattern, ts.homogeneous);
    case TransitionType::logit: {
      const int p = spec.placement == CovariatePlacement::latent ? dims.covariates : 0;
      return std::make_unique<LogitTransition>(spec.k, dims.T, ts.link,
                                               transition_mask(ts, spec.k), ts.homogeneous, p,
                                               spec.m);
    }
  }
  throw SpecError("unsupported transition model");
}

}  // namespace lmkit
