#include <algorithm>
#include <cmath>

#include "lmkit/blocks.hpp"
#include "lmkit/covariates.hpp"

namespace lmkit {

namespace {

using detail::label;

LinkKind multinomial_ref0() { return LinkKind{LinkFamily::multinomial, 0}; }

// Response distributions free per state, variable and occasion (or shared
// across occasions when time-invariant).
class FreeMeasurement final : public MeasurementBlock {
 public:
  FreeMeasurement(int k, const Dims& dims, bool time_invariant)
      : k_(k), dims_(dims), invariant_(time_invariant) {
    dims_.covariates = 0;
    const int occasions = invariant_ ? 1 : dims_.T;
    phi_.resize(dims_.variables());
    for (int j = 0; j < dims_.variables(); ++j) {
      phi_[j].assign(occasions, Eigen::MatrixXd::Zero(k_, dims_.levels[j]));
    }
    reset();
  }

  std::unique_ptr<MeasurementBlock> clone() const override {
    return std::make_unique<FreeMeasurement>(*this);
  }
  const Dims& dims() const override { return dims_; }
  int states() const override { return k_; }

  int size() const override {
    int n = 0;
    for (const auto& per_t : phi_) n += static_cast<int>(per_t.size()) * k_ * (per_t[0].cols() - 1);
    return n;
  }
  Eigen::VectorXd coords() const override {
    Eigen::VectorXd c(size());
    int pos = 0;
    for (const auto& per_t : phi_) {
      for (const auto& P : per_t) {
        for (int u = 0; u < k_; ++u) {
          const int s = static_cast<int>(P.cols()) - 1;
          c.segment(pos, s) = apply_link(multinomial_ref0(), P.row(u).transpose());
          pos += s;
        }
      }
    }
    return c;
  }
  void set_coords(const Eigen::VectorXd& c) override {
    int pos = 0;
    for (auto& per_t : phi_) {
      for (auto& P : per_t) {
        for (int u = 0; u < k_; ++u) {
          const int s = static_cast<int>(P.cols()) - 1;
          P.row(u) = invert_link(multinomial_ref0(), c.segment(pos, s)).transpose();
          pos += s;
        }
      }
    }
  }
  std::vector<std::string> coord_names() const override {
    std::vector<std::string> names;
    for (size_t j = 0; j < phi_.size(); ++j) {
      for (size_t t = 0; t < phi_[j].size(); ++t) {
        for (int u = 0; u < k_; ++u) {
          for (int y = 1; y < phi_[j][t].cols(); ++y) {
            names.push_back(invariant_ ? label("measurement.logit", {int(j) + 1, u + 1, y})
                                       : label("measurement.logit",
                                               {int(j) + 1, int(t) + 1, u + 1, y}));
          }
        }
      }
    }
    return names;
  }

  std::unique_ptr<ScoringProblem> problem(const Sample&,
                                          const ExpectedCounts& counts) const override {
    std::vector<LinkCell> cells;
    const int dim = size();
    int pos = 0;
    for (size_t j = 0; j < phi_.size(); ++j) {
      const auto pooled = pooled_counts(counts, static_cast<int>(j));
      for (size_t t = 0; t < phi_[j].size(); ++t) {
        const int s = static_cast<int>(phi_[j][t].cols()) - 1;
        for (int u = 0; u < k_; ++u) {
          LinkCell cell;
          cell.link = multinomial_ref0();
          cell.design = Eigen::MatrixXd::Zero(s, dim);
          cell.design.block(0, pos, s, s).setIdentity();
          cell.counts = pooled[t].row(u).transpose();
          cells.push_back(std::move(cell));
          pos += s;
        }
      }
    }
    return std::make_unique<LinkCellProblem>(dim, std::move(cells));
  }

  void m_step(const Sample&, const ExpectedCounts& counts, const ScoringOptions&) override {
    for (size_t j = 0; j < phi_.size(); ++j) {
      const auto pooled = pooled_counts(counts, static_cast<int>(j));
      for (size_t t = 0; t < phi_[j].size(); ++t) {
        for (int u = 0; u < k_; ++u) {
          const double total = pooled[t].row(u).sum();
          if (total < 1e-10) continue;
          phi_[j][t].row(u) = pooled[t].row(u) / total;
        }
      }
    }
  }

  void randomize(Rng& rng) override {
    for (auto& per_t : phi_) {
      for (auto& P : per_t) {
        for (int u = 0; u < k_; ++u) {
          P.row(u) = rng.flat_dirichlet(static_cast<int>(P.cols())).transpose();
        }
      }
    }
  }

  // States ordered from low to high responses.
  void reset() override {
    for (auto& per_t : phi_) {
      for (auto& P : per_t) {
        const int l = static_cast<int>(P.cols());
        for (int u = 0; u < k_; ++u) {
          const double centre = k_ == 1 ? 0.0 : (double(u) / (k_ - 1) - 0.5);
          for (int y = 0; y < l; ++y) P(u, y) = std::exp(2.0 * centre * (y - 0.5 * (l - 1)));
          P.row(u) /= P.row(u).sum();
        }
      }
    }
  }

  Eigen::VectorXd values() const override {
    std::vector<double> flat;
    for (const auto& per_t : phi_) {
      for (const auto& P : per_t) {
        for (int u = 0; u < k_; ++u) {
          for (int y = 0; y < P.cols(); ++y) flat.push_back(P(u, y));
        }
      }
    }
    return Eigen::Map<Eigen::VectorXd>(flat.data(), static_cast<int>(flat.size()));
  }

  std::vector<NamedValue> probabilities() const override {
    std::vector<NamedValue> out;
    for (size_t j = 0; j < phi_.size(); ++j) {
      for (size_t t = 0; t < phi_[j].size(); ++t) {
        for (int u = 0; u < k_; ++u) {
          for (int y = 0; y < phi_[j][t].cols(); ++y) {
            const std::string name =
                invariant_ ? label("phi", {int(j) + 1, u + 1, y})
                           : label("phi", {int(j) + 1, int(t) + 1, u + 1, y});
            out.push_back({name, phi_[j][t](u, y)});
          }
        }
      }
    }
    return out;
  }

  bool permutable() const override { return true; }
  void permute(const std::vector<int>& order) override {
    for (auto& per_t : phi_) {
      for (auto& P : per_t) {
        Eigen::MatrixXd next(P.rows(), P.cols());
        for (int u = 0; u < k_; ++u) next.row(u) = P.row(order[u]);
        P = next;
      }
    }
  }

  bool occasion_permutable() const override { return !invariant_; }
  void permute_occasions(const std::vector<std::vector<int>>& orders) override {
    for (auto& per_t : phi_) {
      for (size_t t = 0; t < per_t.size(); ++t) {
        Eigen::MatrixXd next(per_t[t].rows(), per_t[t].cols());
        for (int u = 0; u < k_; ++u) next.row(u) = per_t[t].row(orders[t][u]);
        per_t[t] = next;
      }
    }
  }

  nlohmann::json to_json() const override {
    nlohmann::json vars = nlohmann::json::array();
    for (const auto& per_t : phi_) {
      nlohmann::json occ = nlohmann::json::array();
      for (const auto& P : per_t) occ.push_back(detail::matrix_json(P));
      vars.push_back(occ);
    }
    return {{"type", invariant_ ? "time_invariant" : "free"}, {"phi", vars}};
  }
  void from_json(const nlohmann::json& doc) override {
    if (!doc.contains("phi") || !doc.at("phi").is_array() ||
        doc.at("phi").size() != phi_.size()) {
      throw SpecError("parameter field 'phi' must list one entry per response variable");
    }
    for (size_t j = 0; j < phi_.size(); ++j) {
      const auto& occ = doc.at("phi").at(j);
      if (!occ.is_array() || occ.size() != phi_[j].size()) {
        throw SpecError("parameter field 'phi' must hold " + std::to_string(phi_[j].size()) +
                        " matrices for variable " + std::to_string(j + 1));
      }
      for (size_t t = 0; t < phi_[j].size(); ++t) {
        const nlohmann::json wrapper = {{"phi", occ.at(t)}};
        phi_[j][t] = detail::json_matrix(wrapper, "phi", k_, static_cast<int>(phi_[j][t].cols()));
      }
    }
  }
  void validate(std::vector<std::string>& issues) const override {
    for (size_t j = 0; j < phi_.size(); ++j) {
      for (size_t t = 0; t < phi_[j].size(); ++t) {
        for (int u = 0; u < k_; ++u) {
          std::string what = "response probabilities of variable " + std::to_string(j + 1);
          if (!invariant_) what += " at occasion " + std::to_string(t + 1);
          what += " in state " + std::to_string(u + 1);
          detail::check_simplex(phi_[j][t].row(u).transpose(), what, issues);
        }
      }
    }
  }

  Eigen::MatrixXd emissions(const Unit& unit) const override {
    Eigen::MatrixXd e = Eigen::MatrixXd::Ones(dims_.T, k_);
    for (int t = 0; t < dims_.T; ++t) {
      const int tt = invariant_ ? 0 : t;
      for (size_t j = 0; j < phi_.size(); ++j) {
        e.row(t).array() *= phi_[j][tt].col(unit.y(t, j)).transpose().array();
      }
    }
    return e;
  }

  std::vector<Eigen::VectorXd> distributions(const Eigen::RowVectorXd&, int t,
                                             int u) const override {
    std::vector<Eigen::VectorXd> out;
    for (const auto& per_t : phi_) out.push_back(per_t[invariant_ ? 0 : t].row(u).transpose());
    return out;
  }

  std::vector<std::vector<Eigen::MatrixXd>>& phi() { return phi_; }

 private:
  std::vector<Eigen::MatrixXd> pooled_counts(const ExpectedCounts& counts, int j) const {
    if (!invariant_) return counts.responses[j];
    std::vector<Eigen::MatrixXd> pooled(1, Eigen::MatrixXd::Zero(k_, dims_.levels[j]));
    for (const auto& a : counts.responses[j]) pooled[0] += a;
    return pooled;
  }

  int k_;
  Dims dims_;
  bool invariant_;
  std::vector<std::vector<Eigen::MatrixXd>> phi_;  // [j][t], k x l_j
};

// Link model per response variable. With state intercepts eta_{u,y} = alpha_{u,y}
// + slopes' x; the Rasch design uses eta_{u,t,y} = xi_u + a_{j,t,y} + slopes' x,
// a = -psi, with the first difficulty of the first variable fixed at zero.
class LinkMeasurement final : public MeasurementBlock {
 public:
  LinkMeasurement(int k, const Dims& dims, LinkFamily family, MeasurementDesign design,
                  int covariates)
      : k_(k), dims_(dims), family_(family), design_(design), p_(covariates) {
    dims_.covariates = covariates;
    const int r = dims_.variables();
    int pos = 0;
    if (design_ == MeasurementDesign::rasch) pos = k_;
    block_start_.resize(r);
    for (int j = 0; j < r; ++j) {
      block_start_[j] = pos;
      const int s = dims_.levels[j] - 1;
      const int groups = design_ == MeasurementDesign::rasch ? dims_.T : k_;
      if (family_ == LinkFamily::global && s > 1) {
        for (int g = 0; g < groups; ++g) ordered_.push_back({pos + g * s, s});
      }
      pos += groups * s;
    }
    slope_start_.resize(r);
    for (int j = 0; j < r; ++j) {
      slope_start_[j] = pos;
      pos += family_ == LinkFamily::multinomial ? p_ * (dims_.levels[j] - 1) : p_;
    }
    natural_size_ = pos;
    if (design_ == MeasurementDesign::rasch) {
      anchor_ = block_start_[0];
      embedding_ = Eigen::MatrixXd::Zero(natural_size_, natural_size_ - 1);
      for (int i = 0, c = 0; i < natural_size_; ++i) {
        if (i != anchor_) embedding_(i, c++) = 1.0;
      }
    }
    beta_ = Eigen::VectorXd::Zero(size());
    reset();
  }

  std::unique_ptr<MeasurementBlock> clone() const override {
    return std::make_unique<LinkMeasurement>(*this);
  }
  const Dims& dims() const override { return dims_; }
  int states() const override { return k_; }

  int size() const override { return natural_size_ - (anchor_ >= 0 ? 1 : 0); }
  Eigen::VectorXd coords() const override { return beta_; }
  void set_coords(const Eigen::VectorXd& c) override {
    beta_ = c;
    const Eigen::VectorXd chart = anchor_ >= 0 ? Eigen::VectorXd(embedding_ * beta_) : beta_;
    natural_ = ordered_to_natural(chart, ordered_);
    refresh_tables();
  }
  std::vector<std::string> coord_names() const override {
    std::vector<std::string> names;
    if (design_ == MeasurementDesign::rasch) {
      for (int u = 0; u < k_; ++u) names.push_back(label("measurement.ability", {u + 1}));
    }
    for (int j = 0; j < dims_.variables(); ++j) {
      const int s = dims_.levels[j] - 1;
      const int groups = design_ == MeasurementDesign::rasch ? dims_.T : k_;
      const std::string base =
          design_ == MeasurementDesign::rasch ? "measurement.easiness" : "measurement.intercept";
      for (int g = 0; g < groups; ++g) {
        for (int y = 0; y < s; ++y) {
          if (design_ == MeasurementDesign::rasch && j == 0 && g == 0 && y == 0) continue;
          const bool gap = family_ == LinkFamily::global && y > 0;
          names.push_back(label(gap ? base + "_log_gap" : base, {j + 1, g + 1, y + 1}));
        }
      }
    }
    for (int j = 0; j < dims_.variables(); ++j) {
      if (family_ == LinkFamily::multinomial) {
        for (int y = 1; y < dims_.levels[j]; ++y) {
          for (int c = 0; c < p_; ++c) names.push_back(label("measurement.slope", {j + 1, y, c + 1}));
        }
      } else {
        for (int c = 0; c < p_; ++c) names.push_back(label("measurement.slope", {j + 1, c + 1}));
      }
    }
    return names;
  }

  std::unique_ptr<ScoringProblem> problem(const Sample& sample,
                                          const ExpectedCounts& counts) const override {
    std::vector<LinkCell> cells;
    const Eigen::RowVectorXd none(0);
    const int r = dims_.variables();
    if (p_ == 0) {
      for (int j = 0; j < r; ++j) {
        if (design_ == MeasurementDesign::state_intercepts) {
          Eigen::MatrixXd pooled = Eigen::MatrixXd::Zero(k_, dims_.levels[j]);
          for (const auto& a : counts.responses[j]) pooled += a;
          for (int u = 0; u < k_; ++u) cells.push_back(cell(none, j, 0, u, pooled.row(u).transpose()));
        } else {
          for (int t = 0; t < dims_.T; ++t) {
            for (int u = 0; u < k_; ++u) {
              cells.push_back(cell(none, j, t, u, counts.responses[j][t].row(u).transpose()));
            }
          }
        }
      }
    } else {
      for (int i = 0; i < counts.unit_count; ++i) {
        Eigen::MatrixXd state = counts.unit(0, i).state;
        for (int w = 1; w < counts.m; ++w) state += counts.unit(w, i).state;
        const Unit& unit = sample.units[i];
        for (int t = 0; t < dims_.T; ++t) {
          for (int u = 0; u < k_; ++u) {
            if (state(t, u) <= 0.0) continue;
            for (int j = 0; j < r; ++j) {
              Eigen::VectorXd a = Eigen::VectorXd::Zero(dims_.levels[j]);
              a[unit.y(t, j)] = state(t, u);
              cells.push_back(cell(unit.x.row(t), j, t, u, a));
            }
          }
        }
      }
    }
    return std::make_unique<LinkCellProblem>(size(), std::move(cells), ordered_, embedding_);
  }

  void randomize(Rng& rng) override {
    Eigen::VectorXd natural = Eigen::VectorXd::Zero(natural_size_);
    if (design_ == MeasurementDesign::rasch) {
      std::vector<double> xi(k_);
      for (auto& v : xi) v = rng.uniform(-2.0, 2.0);
      std::sort(xi.begin(), xi.end());
      for (int u = 0; u < k_; ++u) natural[u] = xi[u];
    }
    const int groups = design_ == MeasurementDesign::rasch ? dims_.T : k_;
    for (int j = 0; j < dims_.variables(); ++j) {
      const int s = dims_.levels[j] - 1;
      for (int g = 0; g < groups; ++g) {
        const Eigen::VectorXd p = rng.flat_dirichlet(s + 1);
        natural.segment(block_start_[j] + g * s, s) = apply_link(LinkKind{family_, 0}, p);
      }
    }
    if (design_ == MeasurementDesign::rasch) {
      const double shift = natural[anchor_];
      const int s = dims_.levels[0] - 1;
      natural.segment(block_start_[0], dims_.T * s).array() -= shift;
    }
    set_natural(natural);
  }

  void reset() override {
    Eigen::VectorXd natural = Eigen::VectorXd::Zero(natural_size_);
    const double spread = 1.5;
    auto centre = [&](int u) { return k_ == 1 ? 0.0 : spread * (2.0 * u / (k_ - 1) - 1.0); };
    if (design_ == MeasurementDesign::rasch) {
      const double c0 = base_cut(0, 0);
      for (int u = 0; u < k_; ++u) natural[u] = centre(u) + c0;
      for (int j = 0; j < dims_.variables(); ++j) {
        const int s = dims_.levels[j] - 1;
        for (int t = 0; t < dims_.T; ++t) {
          for (int y = 0; y < s; ++y) natural[block_start_[j] + t * s + y] = base_cut(j, y) - c0;
        }
      }
    } else {
      for (int j = 0; j < dims_.variables(); ++j) {
        const int s = dims_.levels[j] - 1;
        for (int u = 0; u < k_; ++u) {
          for (int y = 0; y < s; ++y) {
            const double step = family_ == LinkFamily::multinomial ? y + 1.0 : 1.0;
            natural[block_start_[j] + u * s + y] = base_cut(j, y) + centre(u) * step;
          }
        }
      }
    }
    set_natural(natural);
  }

  std::vector<NamedValue> probabilities() const override {
    std::vector<NamedValue> out;
    const Eigen::RowVectorXd zero = Eigen::RowVectorXd::Zero(p_);
    const int occasions = design_ == MeasurementDesign::rasch ? dims_.T : 1;
    for (int j = 0; j < dims_.variables(); ++j) {
      for (int t = 0; t < occasions; ++t) {
        for (int u = 0; u < k_; ++u) {
          const Eigen::VectorXd p = distribution(zero, j, t, u);
          for (int y = 0; y < p.size(); ++y) {
            const std::string name = design_ == MeasurementDesign::rasch
                                         ? label("phi", {j + 1, t + 1, u + 1, y})
                                         : label("phi", {j + 1, u + 1, y});
            out.push_back({name, p[y]});
          }
        }
      }
    }
    return out;
  }

  bool permutable() const override { return true; }
  void permute(const std::vector<int>& order) override {
    Eigen::VectorXd natural = natural_;
    if (design_ == MeasurementDesign::rasch) {
      for (int u = 0; u < k_; ++u) natural[u] = natural_[order[u]];
    } else {
      for (int j = 0; j < dims_.variables(); ++j) {
        const int s = dims_.levels[j] - 1;
        for (int u = 0; u < k_; ++u) {
          natural.segment(block_start_[j] + u * s, s) =
              natural_.segment(block_start_[j] + order[u] * s, s);
        }
      }
    }
    set_natural(natural);
  }

  nlohmann::json to_json() const override {
    nlohmann::json doc = {{"type", design_ == MeasurementDesign::rasch ? "rasch" : "link"},
                          {"link", std::string(to_string(family_))},
                          {"coefficients", detail::vector_json(natural_)}};
    if (design_ == MeasurementDesign::rasch) {
      doc["ability"] = detail::vector_json(natural_.head(k_));
    }
    return doc;
  }
  void from_json(const nlohmann::json& doc) override {
    const Eigen::VectorXd natural = detail::json_vector(doc, "coefficients", natural_size_);
    if (anchor_ >= 0 && natural[anchor_] != 0.0) {
      throw SpecError("the first difficulty of the Rasch design must be 0");
    }
    for (const auto& g : ordered_) {
      for (int i = 1; i < g.length; ++i) {
        if (!(natural[g.start + i] < natural[g.start + i - 1])) {
          throw SpecError("global measurement intercepts must be strictly decreasing in y");
        }
      }
    }
    set_natural(natural);
  }

  Eigen::MatrixXd emissions(const Unit& unit) const override {
    Eigen::MatrixXd e = Eigen::MatrixXd::Ones(dims_.T, k_);
    for (int t = 0; t < dims_.T; ++t) {
      for (int j = 0; j < dims_.variables(); ++j) {
        const int y = unit.y(t, j);
        if (p_ == 0) {
          e.row(t).array() *= tables_[j][table_index(t)].col(y).transpose().array();
        } else {
          for (int u = 0; u < k_; ++u) e(t, u) *= distribution(unit.x.row(t), j, t, u)[y];
        }
      }
    }
    return e;
  }

  std::vector<Eigen::VectorXd> distributions(const Eigen::RowVectorXd& xt, int t,
                                             int u) const override {
    std::vector<Eigen::VectorXd> out;
    for (int j = 0; j < dims_.variables(); ++j) out.push_back(distribution(xt, j, t, u));
    return out;
  }

  const Eigen::VectorXd& natural() const { return natural_; }

 private:
  int table_index(int t) const { return design_ == MeasurementDesign::rasch ? t : 0; }

  double base_cut(int j, int y) const {
    const int l = dims_.levels[j];
    if (family_ == LinkFamily::global) return std::log(double(l - 1 - y) / (y + 1));
    return 0.0;
  }

  void set_natural(const Eigen::VectorXd& natural) {
    const Eigen::VectorXd chart = natural_to_ordered(natural, ordered_);
    Eigen::VectorXd beta(size());
    for (int i = 0, c = 0; i < natural_size_; ++i) {
      if (i != anchor_) beta[c++] = chart[i];
    }
    set_coords(beta);
  }

  LinkCell cell(const Eigen::RowVectorXd& x, int j, int t, int u,
                const Eigen::VectorXd& counts) const {
    LinkCell c;
    const int s = dims_.levels[j] - 1;
    c.link = LinkKind{family_, 0};
    c.counts = counts;
    c.design = Eigen::MatrixXd::Zero(s, natural_size_);
    for (int y = 0; y < s; ++y) {
      if (design_ == MeasurementDesign::rasch) {
        c.design(y, u) = 1.0;
        c.design(y, block_start_[j] + t * s + y) = 1.0;
      } else {
        c.design(y, block_start_[j] + u * s + y) = 1.0;
      }
      for (int q = 0; q < p_ && q < x.size(); ++q) {
        const int col =
            family_ == LinkFamily::multinomial ? slope_start_[j] + y * p_ + q : slope_start_[j] + q;
        c.design(y, col) = x[q];
      }
    }
    return c;
  }

  Eigen::VectorXd distribution(const Eigen::RowVectorXd& x, int j, int t, int u) const {
    if (p_ == 0) return tables_[j][table_index(t)].row(u).transpose();
    Eigen::VectorXd p;
    const LinkCell c = cell(x, j, t, u, Eigen::VectorXd::Zero(dims_.levels[j]));
    if (!LinkCellProblem::resolve(c, natural_, p, nullptr)) {
      throw LinkError("measurement logits are not invertible");
    }
    return p;
  }

  void refresh_tables() {
    if (p_ != 0) return;
    const int occasions = design_ == MeasurementDesign::rasch ? dims_.T : 1;
    const Eigen::RowVectorXd none(0);
    tables_.assign(dims_.variables(), {});
    for (int j = 0; j < dims_.variables(); ++j) {
      tables_[j].assign(occasions, Eigen::MatrixXd::Zero(k_, dims_.levels[j]));
      for (int t = 0; t < occasions; ++t) {
        for (int u = 0; u < k_; ++u) {
          Eigen::VectorXd p;
          const LinkCell c = cell(none, j, t, u, Eigen::VectorXd::Zero(dims_.levels[j]));
          if (!LinkCellProblem::resolve(c, natural_, p, nullptr)) {
            throw LinkError("measurement logits are not invertible");
          }
          tables_[j][t].row(u) = p.transpose();
        }
      }
    }
  }

  int k_;
  Dims dims_;
  LinkFamily family_;
  MeasurementDesign design_;
  int p_;
  std::vector<int> block_start_;
  std::vector<int> slope_start_;
  int natural_size_ = 0;
  int anchor_ = -1;
  Eigen::MatrixXd embedding_;
  std::vector<OrderedGroup> ordered_;
  Eigen::VectorXd beta_;
  Eigen::VectorXd natural_;
  std::vector<std::vector<Eigen::MatrixXd>> tables_;
};

// Joint cells of (Y1, Y2) through the marginal parameterization
// (eta1..eta3 state-specific plus slopes, two constant log-odds ratios).
struct BivariateCell {
  Eigen::MatrixXd design;  // 5 x natural size
  Eigen::VectorXd counts;  // 6
};

class BivariateProblem final : public ScoringProblem {
 public:
  BivariateProblem(int dimension, std::vector<BivariateCell> cells,
                   std::vector<OrderedGroup> ordered)
      : dimension_(dimension), cells_(std::move(cells)), ordered_(std::move(ordered)) {}
  int dimension() const override { return dimension_; }
  int cells() const override { return static_cast<int>(cells_.size()); }
  const Eigen::VectorXd& counts(int cell) const override { return cells_[cell].counts; }
  bool evaluate(const Eigen::VectorXd& beta, int cell, Eigen::VectorXd& p,
                Eigen::MatrixXd* jacobian) const override {
    if (cached_.size() != beta.size() || cached_ != beta) {
      cached_ = beta;
      natural_ = ordered_to_natural(beta, ordered_);
      chart_ = ordered_jacobian(beta, ordered_);
    }
    try {
      p = bivariate_marginal(cells_[cell].design * natural_);
    } catch (const LinkError&) {
      return false;
    }
    if (jacobian) *jacobian = bivariate_jacobian(p) * cells_[cell].design * chart_;
    return true;
  }

 private:
  int dimension_;
  std::vector<BivariateCell> cells_;
  std::vector<OrderedGroup> ordered_;
  mutable Eigen::VectorXd cached_;
  mutable Eigen::VectorXd natural_;
  mutable Eigen::MatrixXd chart_;
};

class BivariateMeasurement final : public MeasurementBlock {
 public:
  BivariateMeasurement(int k, const Dims& dims, int covariates)
      : k_(k), dims_(dims), p_(covariates) {
    dims_.covariates = covariates;
    for (int u = 0; u < k_; ++u) ordered_.push_back({3 * u + 1, 2});
    beta_ = Eigen::VectorXd::Zero(size());
    reset();
  }

  std::unique_ptr<MeasurementBlock> clone() const override {
    return std::make_unique<BivariateMeasurement>(*this);
  }
  const Dims& dims() const override { return dims_; }
  int states() const override { return k_; }
  bool joint() const override { return true; }

  int size() const override { return 3 * k_ + 3 * p_ + 2; }
  Eigen::VectorXd coords() const override { return beta_; }
  void set_coords(const Eigen::VectorXd& c) override {
    beta_ = c;
    natural_ = ordered_to_natural(beta_, ordered_);
    if (p_ == 0) {
      table_ = Eigen::MatrixXd::Zero(k_, kBivariateCells);
      const Eigen::RowVectorXd none(0);
      for (int u = 0; u < k_; ++u) table_.row(u) = bivariate_marginal(design(none, u) * natural_).transpose();
    }
  }
  std::vector<std::string> coord_names() const override {
    std::vector<std::string> names;
    for (int u = 0; u < k_; ++u) {
      names.push_back(label("measurement.xi", {1, u + 1}));
      names.push_back(label("measurement.xi", {2, u + 1}));
      names.push_back(label("measurement.xi_log_gap", {3, u + 1}));
    }
    for (int e = 1; e <= 3; ++e) {
      for (int c = 0; c < p_; ++c) names.push_back(label("measurement.slope", {e, c + 1}));
    }
    names.push_back("measurement.log_odds_ratio[1]");
    names.push_back("measurement.log_odds_ratio[2]");
    return names;
  }

  std::unique_ptr<ScoringProblem> problem(const Sample& sample,
                                          const ExpectedCounts& counts) const override {
    std::vector<BivariateCell> cells;
    const Eigen::RowVectorXd none(0);
    if (p_ == 0) {
      Eigen::MatrixXd pooled = Eigen::MatrixXd::Zero(k_, kBivariateCells);
      for (int i = 0; i < counts.unit_count; ++i) {
        const Unit& unit = sample.units[i];
        for (int w = 0; w < counts.m; ++w) {
          const Eigen::MatrixXd& state = counts.unit(w, i).state;
          for (int t = 0; t < dims_.T; ++t) pooled.col(cell_of(unit, t)) += state.row(t).transpose();
        }
      }
      for (int u = 0; u < k_; ++u) cells.push_back({design(none, u), pooled.row(u).transpose()});
    } else {
      for (int i = 0; i < counts.unit_count; ++i) {
        const Unit& unit = sample.units[i];
        Eigen::MatrixXd state = counts.unit(0, i).state;
        for (int w = 1; w < counts.m; ++w) state += counts.unit(w, i).state;
        for (int t = 0; t < dims_.T; ++t) {
          for (int u = 0; u < k_; ++u) {
            if (state(t, u) <= 0.0) continue;
            Eigen::VectorXd a = Eigen::VectorXd::Zero(kBivariateCells);
            a[cell_of(unit, t)] = state(t, u);
            cells.push_back({design(unit.x.row(t), u), a});
          }
        }
      }
    }
    return std::make_unique<BivariateProblem>(size(), std::move(cells), ordered_);
  }

  void randomize(Rng& rng) override {
    Eigen::VectorXd natural = Eigen::VectorXd::Zero(size());
    for (int u = 0; u < k_; ++u) {
      natural[3 * u] = rng.uniform(-1.5, 1.5);
      natural[3 * u + 1] = rng.uniform(0.0, 1.0);
      natural[3 * u + 2] = rng.uniform(-1.0, 0.0) - 0.1;
    }
    set_coords(natural_to_ordered(natural, ordered_));
  }

  void reset() override {
    Eigen::VectorXd natural = Eigen::VectorXd::Zero(size());
    for (int u = 0; u < k_; ++u) {
      const double c = k_ == 1 ? 0.0 : 2.0 * u / (k_ - 1) - 1.0;
      natural[3 * u] = c;
      natural[3 * u + 1] = std::log(2.0) + c;
      natural[3 * u + 2] = -std::log(2.0) + c;
    }
    set_coords(natural_to_ordered(natural, ordered_));
  }

  std::vector<NamedValue> probabilities() const override {
    std::vector<NamedValue> out;
    const Eigen::RowVectorXd zero = Eigen::RowVectorXd::Zero(p_);
    for (int u = 0; u < k_; ++u) {
      const Eigen::VectorXd p = joint_distribution(zero, u);
      for (int c = 0; c < kBivariateCells; ++c) {
        out.push_back({label("phi_joint", {u + 1, c / 3, c % 3}), p[c]});
      }
    }
    return out;
  }

  bool permutable() const override { return true; }
  void permute(const std::vector<int>& order) override {
    Eigen::VectorXd natural = natural_;
    for (int u = 0; u < k_; ++u) natural.segment(3 * u, 3) = natural_.segment(3 * order[u], 3);
    set_coords(natural_to_ordered(natural, ordered_));
  }

  nlohmann::json to_json() const override {
    return {{"type", "bivariate_marginal"}, {"coefficients", detail::vector_json(natural_)}};
  }
  void from_json(const nlohmann::json& doc) override {
    const Eigen::VectorXd natural = detail::json_vector(doc, "coefficients", size());
    for (int u = 0; u < k_; ++u) {
      if (!(natural[3 * u + 2] < natural[3 * u + 1])) {
        throw SpecError("global logits of the second response must be strictly decreasing");
      }
    }
    set_coords(natural_to_ordered(natural, ordered_));
  }

  Eigen::MatrixXd emissions(const Unit& unit) const override {
    Eigen::MatrixXd e(dims_.T, k_);
    for (int t = 0; t < dims_.T; ++t) {
      const int c = cell_of(unit, t);
      for (int u = 0; u < k_; ++u) {
        e(t, u) = p_ == 0 ? table_(u, c) : joint_distribution(unit.x.row(t), u)[c];
      }
    }
    return e;
  }

  std::vector<Eigen::VectorXd> distributions(const Eigen::RowVectorXd& xt, int,
                                             int u) const override {
    return {joint_distribution(xt, u)};
  }

  std::vector<int> draw(const Eigen::RowVectorXd& xt, int, int u, Rng& rng) const override {
    const int c = rng.categorical(joint_distribution(xt, u));
    return {c / 3, c % 3};
  }

  Eigen::MatrixXd occasion_scores() const override {
    Eigen::RowVectorXd scores(k_);
    const Eigen::RowVectorXd zero = Eigen::RowVectorXd::Zero(p_);
    for (int u = 0; u < k_; ++u) {
      const Eigen::VectorXd p = joint_distribution(zero, u);
      double y1 = 0.0;
      double y2 = 0.0;
      for (int c = 0; c < kBivariateCells; ++c) {
        y1 += (c / 3) * p[c];
        y2 += (c % 3) * p[c];
      }
      scores[u] = 0.5 * (y1 + y2 / 2.0);
    }
    return scores.replicate(dims_.T, 1);
  }

 private:
  static int cell_of(const Unit& unit, int t) { return 3 * unit.y(t, 0) + unit.y(t, 1); }

  Eigen::MatrixXd design(const Eigen::RowVectorXd& x, int u) const {
    Eigen::MatrixXd D = Eigen::MatrixXd::Zero(kBivariateEta, size());
    for (int e = 0; e < 3; ++e) {
      D(e, 3 * u + e) = 1.0;
      for (int c = 0; c < p_ && c < x.size(); ++c) D(e, 3 * k_ + e * p_ + c) = x[c];
    }
    D(3, 3 * k_ + 3 * p_) = 1.0;
    D(4, 3 * k_ + 3 * p_ + 1) = 1.0;
    return D;
  }

  Eigen::VectorXd joint_distribution(const Eigen::RowVectorXd& x, int u) const {
    if (p_ == 0) return table_.row(u).transpose();
    return bivariate_marginal(design(x, u) * natural_);
  }

  int k_;
  Dims dims_;
  int p_;
  std::vector<OrderedGroup> ordered_;
  Eigen::VectorXd beta_;
  Eigen::VectorXd natural_;
  Eigen::MatrixXd table_;
};

}  // namespace

std::unique_ptr<MeasurementBlock> make_measurement_block(const ModelSpec& spec, const Dims& dims) {
  const auto& ms = spec.measurement;
  const int p = spec.placement == CovariatePlacement::measurement ? dims.covariates : 0;
  switch (ms.type) {
    case MeasurementType::free:
      return std::make_unique<FreeMeasurement>(spec.k, dims, false);
    case MeasurementType::time_invariant:
      return std::make_unique<FreeMeasurement>(spec.k, dims, true);
    case MeasurementType::link:
      return std::make_unique<LinkMeasurement>(spec.k, dims, ms.link, ms.design, p);
    case MeasurementType::bivariate_marginal:
      return std::make_unique<BivariateMeasurement>(spec.k, dims, p);
  }
  throw SpecError("unsupported measurement model");
}

}  // namespace lmkit
