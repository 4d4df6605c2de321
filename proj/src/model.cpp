#include "lmkit/model.hpp"

namespace lmkit {

Model::Model(const ModelSpec& spec, const Dims& dims) : spec_(spec), dims_(dims) {
  check_spec(spec_, dims_);
  initial_ = make_initial_block(spec_, dims_);
  transition_ = make_transition_block(spec_, dims_);
  measurement_ = make_measurement_block(spec_, dims_);
  cluster_ = make_cluster_block(spec_, dims_);
}

Model::Model(const Model& other)
    : spec_(other.spec_),
      dims_(other.dims_),
      initial_(other.initial_->clone()),
      transition_(other.transition_->clone()),
      measurement_(other.measurement_->clone()),
      cluster_(other.cluster_->clone()) {}

Model& Model::operator=(const Model& other) {
  if (this != &other) {
    Model copy(other);
    *this = std::move(copy);
  }
  return *this;
}

std::vector<Block*> Model::blocks() {
  return {initial_.get(), transition_.get(), measurement_.get(), cluster_.get()};
}

std::vector<const Block*> Model::blocks() const {
  return {initial_.get(), transition_.get(), measurement_.get(), cluster_.get()};
}

int Model::size() const {
  int n = 0;
  for (const Block* b : blocks()) n += b->size();
  return n;
}

Eigen::VectorXd Model::coords() const {
  Eigen::VectorXd c(size());
  int pos = 0;
  for (const Block* b : blocks()) {
    const int s = b->size();
    if (s > 0) c.segment(pos, s) = b->coords();
    pos += s;
  }
  return c;
}

void Model::set_coords(const Eigen::VectorXd& coords) {
  int pos = 0;
  for (Block* b : blocks()) {
    const int s = b->size();
    if (s > 0) b->set_coords(coords.segment(pos, s));
    pos += s;
  }
}

std::vector<std::string> Model::coord_names() const {
  std::vector<std::string> names;
  for (const Block* b : blocks()) {
    for (auto& n : b->coord_names()) names.push_back(std::move(n));
  }
  return names;
}

Eigen::VectorXd Model::values() const {
  std::vector<double> flat;
  for (const Block* b : blocks()) {
    const Eigen::VectorXd v = b->values();
    flat.insert(flat.end(), v.data(), v.data() + v.size());
  }
  return Eigen::Map<Eigen::VectorXd>(flat.data(), static_cast<int>(flat.size()));
}

std::vector<NamedValue> Model::probabilities() const {
  std::vector<NamedValue> out;
  for (const Block* b : blocks()) {
    if (b == cluster_.get() && spec_.m == 1) continue;
    for (auto& v : b->probabilities()) out.push_back(std::move(v));
  }
  return out;
}

ChainProbs Model::chain(const Unit& unit, int w) const {
  ChainProbs probs;
  const int T = dims_.T;
  probs.initial = initial_->initial(unit.x.row(0), w);
  probs.transitions.reserve(T > 0 ? T - 1 : 0);
  for (int t = 1; t < T; ++t) probs.transitions.push_back(transition_->transition(unit.x.row(t), t, w));
  return probs;
}

Eigen::MatrixXd Model::emissions(const Unit& unit) const { return measurement_->emissions(unit); }

Eigen::VectorXd Model::class_weights(const Sample& sample, int group) const {
  if (spec_.m == 1) return Eigen::VectorXd::Ones(1);
  if (sample.group_covariates.cols() == 0) return cluster_->weights(Eigen::RowVectorXd(0));
  return cluster_->weights(sample.group_covariates.row(group));
}

void Model::reset() {
  for (Block* b : blocks()) b->reset();
}

void Model::randomize(Rng& rng) {
  for (Block* b : blocks()) b->randomize(rng);
}

std::vector<std::string> Model::validate() const {
  std::vector<std::string> issues;
  for (const Block* b : blocks()) b->validate(issues);
  return issues;
}

nlohmann::json Model::to_json() const {
  nlohmann::json doc = {{"initial", initial_->to_json()},
                        {"transition", transition_->to_json()},
                        {"measurement", measurement_->to_json()}};
  if (spec_.m > 1) doc["cluster"] = cluster_->to_json();
  return doc;
}

void Model::load_json(const nlohmann::json& doc) {
  for (const char* field : {"initial", "transition", "measurement"}) {
    if (!doc.contains(field)) throw SpecError(std::string("parameters lack field '") + field + "'");
  }
  initial_->from_json(doc.at("initial"));
  transition_->from_json(doc.at("transition"));
  measurement_->from_json(doc.at("measurement"));
  if (spec_.m > 1) {
    if (!doc.contains("cluster")) throw SpecError("parameters lack field 'cluster'");
    cluster_->from_json(doc.at("cluster"));
  }
}

ChainProbs resolve_latent(const Model& model, const Unit& unit, int w) {
  return model.chain(unit, w);
}

}  // namespace lmkit
