#include "lmkit/blocks.hpp"

namespace lmkit {

namespace {

using detail::label;

// Cluster-class masses rho_{h,w}: multinomial logits against class 1 with
// intercepts gamma_0w and cluster-covariate slopes gamma_1w.
class ClusterMixture final : public ClusterBlock {
 public:
  ClusterMixture(int classes, int covariates)
      : m_(classes), q_(classes > 1 ? covariates : 0) {
    gamma_ = Eigen::VectorXd::Zero((m_ - 1) * (1 + q_));
  }

  std::unique_ptr<ClusterBlock> clone() const override {
    return std::make_unique<ClusterMixture>(*this);
  }
  int size() const override { return static_cast<int>(gamma_.size()); }
  Eigen::VectorXd coords() const override { return gamma_; }
  void set_coords(const Eigen::VectorXd& c) override { gamma_ = c; }
  std::vector<std::string> coord_names() const override {
    std::vector<std::string> names;
    for (int w = 2; w <= m_; ++w) {
      names.push_back(label("cluster.intercept", {w}));
      for (int c = 0; c < q_; ++c) names.push_back(label("cluster.slope", {w, c + 1}));
    }
    return names;
  }

  std::unique_ptr<ScoringProblem> problem(const Sample& sample,
                                          const ExpectedCounts& counts) const override {
    std::vector<LinkCell> cells;
    if (q_ == 0) {
      cells.push_back(cell(Eigen::RowVectorXd(0), counts.cluster.colwise().sum().transpose()));
    } else {
      for (int h = 0; h < counts.cluster.rows(); ++h) {
        cells.push_back(cell(sample.group_covariates.row(h), counts.cluster.row(h).transpose()));
      }
    }
    return std::make_unique<LinkCellProblem>(size(), std::move(cells));
  }

  void randomize(Rng& rng) override {
    gamma_.setZero();
    const Eigen::VectorXd rho = rng.flat_dirichlet(m_);
    for (int w = 1; w < m_; ++w) gamma_[(w - 1) * (1 + q_)] = std::log(rho[w] / rho[0]);
  }
  void reset() override { gamma_.setZero(); }

  std::vector<NamedValue> probabilities() const override {
    std::vector<NamedValue> out;
    const Eigen::VectorXd rho = weights(Eigen::RowVectorXd::Zero(q_));
    for (int w = 0; w < m_; ++w) out.push_back({label("rho", {w + 1}), rho[w]});
    return out;
  }

  nlohmann::json to_json() const override {
    return {{"type", "multinomial"}, {"gamma", detail::vector_json(gamma_)}};
  }
  void from_json(const nlohmann::json& doc) override {
    gamma_ = detail::json_vector(doc, "gamma", size());
  }

  Eigen::VectorXd weights(const Eigen::RowVectorXd& z) const override {
    if (m_ == 1) return Eigen::VectorXd::Ones(1);
    Eigen::VectorXd eta(m_ - 1);
    for (int w = 1; w < m_; ++w) {
      const int base = (w - 1) * (1 + q_);
      eta[w - 1] = gamma_[base];
      for (int c = 0; c < q_ && c < z.size(); ++c) eta[w - 1] += z[c] * gamma_[base + 1 + c];
    }
    return invert_link(LinkKind{LinkFamily::multinomial, 0}, eta);
  }

 private:
  LinkCell cell(const Eigen::RowVectorXd& z, const Eigen::VectorXd& counts) const {
    LinkCell c;
    c.link = LinkKind{LinkFamily::multinomial, 0};
    c.design = Eigen::MatrixXd::Zero(m_ - 1, size());
    for (int w = 1; w < m_; ++w) {
      const int base = (w - 1) * (1 + q_);
      c.design(w - 1, base) = 1.0;
      for (int j = 0; j < q_ && j < z.size(); ++j) c.design(w - 1, base + 1 + j) = z[j];
    }
    c.counts = counts;
    return c;
  }

  int m_;
  int q_;
  Eigen::VectorXd gamma_;
};

}  // namespace

std::unique_ptr<ClusterBlock> make_cluster_block(const ModelSpec& spec, const Dims& dims) {
  return std::make_unique<ClusterMixture>(spec.m, dims.cluster_covariates);
}

}  // namespace lmkit
