#include "lmkit/em.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "lmkit/params.hpp"
#include "lmkit/parallel.hpp"
#include "lmkit/recursions.hpp"

namespace lmkit {

int resolve_threads(int requested) { return requested > 0 ? requested : default_thread_count(); }

namespace {

constexpr double kMinusInf = -std::numeric_limits<double>::infinity();

std::string describe_unit(const Sample& sample, int i) {
  const Unit& unit = sample.units[i];
  std::ostringstream out;
  if (unit.subject >= 0) {
    out << "subject #" << (unit.subject + 1);
  } else {
    out << "response pattern (";
    for (int t = 0; t < unit.y.rows(); ++t) {
      for (int j = 0; j < unit.y.cols(); ++j) {
        out << (t + j > 0 ? "," : "") << unit.y(t, j);
      }
    }
    out << ")";
  }
  return out.str();
}

double log_sum_exp(const Eigen::VectorXd& v) {
  const double top = v.maxCoeff();
  if (!std::isfinite(top)) return top;
  return top + std::log((v.array() - top).exp().sum());
}

// Group weight: the unit weight for single-unit groups (patterns, subjects).
double group_weight(const Sample& sample, int h) {
  const auto& members = sample.groups[h];
  return members.size() == 1 ? sample.units[members[0]].weight : 1.0;
}

struct GroupWork {
  double loglik = 0.0;
  Eigen::VectorXd b;
  std::vector<Lattice> lattices;  // index w * members + position
};

}  // namespace

EStepResult e_step(const Model& model, const Sample& sample, int threads) {
  const int k = model.states();
  const int m = model.classes();
  const int T = sample.occasions;
  const int groups = static_cast<int>(sample.groups.size());
  std::vector<GroupWork> work(groups);
  std::vector<std::string> failures(groups);

  parallel_for(groups, threads, [&](int h) {
    const auto& members = sample.groups[h];
    const int size = static_cast<int>(members.size());
    GroupWork& g = work[h];
    g.lattices.resize(static_cast<size_t>(m) * size);
    std::vector<Eigen::MatrixXd> emissions(size);
    for (int p = 0; p < size; ++p) emissions[p] = model.emissions(sample.units[members[p]]);
    const Eigen::VectorXd rho = model.class_weights(sample, h);
    Eigen::VectorXd joint(m);
    for (int w = 0; w < m; ++w) {
      double total = 0.0;
      for (int p = 0; p < size; ++p) {
        Lattice& lat = g.lattices[w * size + p];
        lat = posteriors(model.chain(sample.units[members[p]], w), emissions[p]);
        total += lat.log_f;
      }
      joint[w] = rho[w] > 0.0 ? std::log(rho[w]) + total : kMinusInf;
    }
    const double log_f = log_sum_exp(joint);
    if (!std::isfinite(log_f)) {
      int culprit = members[0];
      for (int p = 0; p < size; ++p) {
        bool possible = false;
        for (int w = 0; w < m; ++w) possible = possible || g.lattices[w * size + p].possible();
        if (!possible) {
          culprit = members[p];
          break;
        }
      }
      failures[h] = describe_unit(sample, culprit);
      return;
    }
    g.loglik = group_weight(sample, h) * log_f;
    g.b = (joint.array() - log_f).exp();
  });

  for (int h = 0; h < groups; ++h) {
    if (!failures[h].empty()) {
      throw FitError("the model assigns zero probability to " + failures[h]);
    }
  }

  const int n = static_cast<int>(sample.units.size());
  EStepResult result;
  result.counts = ExpectedCounts::zeros(k, T, m, sample.levels, n, groups);
  ExpectedCounts& c = result.counts;
  c.total = sample.subjects;
  for (int h = 0; h < groups; ++h) {
    const auto& members = sample.groups[h];
    const int size = static_cast<int>(members.size());
    const GroupWork& g = work[h];
    const double gw = group_weight(sample, h);
    result.loglik += g.loglik;
    c.cluster.row(h) = gw * g.b.transpose();
    for (int w = 0; w < m; ++w) {
      const double scale = gw * g.b[w];
      for (int p = 0; p < size; ++p) {
        const int i = members[p];
        const Unit& unit = sample.units[i];
        UnitPosterior& post = c.units[static_cast<size_t>(w) * n + i];
        const Lattice& lat = g.lattices[w * size + p];
        if (scale <= 0.0 || !lat.possible()) {
          post.state = Eigen::MatrixXd::Zero(T, k);
          post.pair.assign(T > 0 ? T - 1 : 0, Eigen::MatrixXd::Zero(k, k));
          continue;
        }
        post.state = scale * lat.state;
        post.pair.resize(lat.pair.size());
        for (size_t t = 0; t < lat.pair.size(); ++t) post.pair[t] = scale * lat.pair[t];
        c.initial += post.state.row(0).transpose();
        c.class_initial.row(w) += post.state.row(0);
        c.occupancy += post.state;
        for (int t = 1; t < T; ++t) {
          c.transitions[t - 1] += post.pair[t - 1];
          c.class_transitions[w][t - 1] += post.pair[t - 1];
        }
        for (int t = 0; t < T; ++t) {
          for (size_t j = 0; j < c.responses.size(); ++j) {
            c.responses[j][t].col(unit.y(t, static_cast<int>(j))) += post.state.row(t).transpose();
          }
        }
      }
    }
  }
  return result;
}

double log_likelihood(const Model& model, const Sample& sample, int threads) {
  const int groups = static_cast<int>(sample.groups.size());
  const int m = model.classes();
  std::vector<double> slots(groups, 0.0);
  parallel_for(groups, threads, [&](int h) {
    const Eigen::VectorXd rho = model.class_weights(sample, h);
    Eigen::VectorXd joint(m);
    for (int w = 0; w < m; ++w) {
      double total = 0.0;
      for (int i : sample.groups[h]) {
        const Unit& unit = sample.units[i];
        total += forward(model.chain(unit, w), model.emissions(unit)).log_f;
      }
      joint[w] = rho[w] > 0.0 ? std::log(rho[w]) + total : kMinusInf;
    }
    slots[h] = group_weight(sample, h) * log_sum_exp(joint);
  });
  double total = 0.0;
  for (double v : slots) total += v;
  return total;
}

void m_step(Model& model, const Sample& sample, const ExpectedCounts& counts,
            const ScoringOptions& options) {
  for (Block* b : model.blocks()) b->m_step(sample, counts, options);
}

EmRun run_em(Model& model, const Sample& sample, const FitOptions& options) {
  const int threads = resolve_threads(options.threads);
  EmRun run;
  EStepResult e = e_step(model, sample, threads);
  run.trace.push_back(e.loglik);
  for (int it = 1; it <= options.max_iterations; ++it) {
    const Eigen::VectorXd before = model.values();
    m_step(model, sample, e.counts, options.scoring);
    const Eigen::VectorXd after = model.values();
    const double change = after.size() > 0 ? (after - before).cwiseAbs().maxCoeff() : 0.0;
    const double previous = e.loglik;
    e = e_step(model, sample, threads);
    run.trace.push_back(e.loglik);
    run.iterations = it;
    const double relative = std::abs(e.loglik - previous) / std::max(std::abs(previous), 1e-300);
    if (relative < options.tolerance && change < options.param_tolerance) {
      run.converged = true;
      break;
    }
  }
  run.loglik = e.loglik;
  return run;
}

namespace {

// Scalar score of a unit's responses at one occasion, in [0, 1].
double occasion_score(const Unit& unit, const std::vector<int>& levels, int t) {
  double s = 0.0;
  for (size_t j = 0; j < levels.size(); ++j) s += unit.y(t, static_cast<int>(j)) / double(levels[j] - 1);
  return s / static_cast<double>(levels.size());
}

// Weighted quantile class of each unit by first-occasion score (ties broken
// by the mean score over all occasions), placing tied units at their block
// midpoint.
std::vector<int> quantile_split(const Sample& sample, int k) {
  const int n = static_cast<int>(sample.units.size());
  std::vector<double> first(n), overall(n);
  for (int i = 0; i < n; ++i) {
    const Unit& u = sample.units[i];
    first[i] = occasion_score(u, sample.levels, 0);
    double s = 0.0;
    for (int t = 0; t < sample.occasions; ++t) s += occasion_score(u, sample.levels, t);
    overall[i] = s / sample.occasions;
  }
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    if (first[a] != first[b]) return first[a] < first[b];
    return overall[a] < overall[b];
  });
  double total = 0.0;
  for (const Unit& u : sample.units) total += u.weight;
  std::vector<int> cls(n, 0);
  double cumulative = 0.0;
  for (int pos = 0; pos < n;) {
    int end = pos;
    double block = 0.0;
    while (end < n && first[order[end]] == first[order[pos]] &&
           overall[order[end]] == overall[order[pos]]) {
      block += sample.units[order[end]].weight;
      ++end;
    }
    const double mid = (cumulative + 0.5 * block) / total;
    const int c = std::min(k - 1, static_cast<int>(std::floor(mid * k)));
    for (int q = pos; q < end; ++q) cls[order[q]] = c;
    cumulative += block;
    pos = end;
  }
  return cls;
}

}  // namespace

Model deterministic_start(const ModelSpec& spec, const Sample& sample) {
  Model model(spec, sample.dims());
  model.reset();
  const int k = spec.k;
  const int T = sample.occasions;
  const int n = static_cast<int>(sample.units.size());
  const std::vector<int> cls = quantile_split(sample, k);
  ExpectedCounts pseudo = ExpectedCounts::zeros(k, T, 1, sample.levels, n,
                                                static_cast<int>(sample.groups.size()));
  const double off = k > 1 ? 0.2 / (k - 1) : 0.0;
  for (int i = 0; i < n; ++i) {
    const Unit& unit = sample.units[i];
    Eigen::RowVectorXd row = Eigen::RowVectorXd::Constant(k, off);
    row[cls[i]] = k > 1 ? 0.8 : 1.0;
    row *= unit.weight;
    UnitPosterior& post = pseudo.units[i];
    post.state = row.replicate(T, 1);
    post.pair.assign(T > 0 ? T - 1 : 0, Eigen::MatrixXd::Zero(k, k));
    for (int t = 0; t < T; ++t) {
      for (size_t j = 0; j < sample.levels.size(); ++j) {
        pseudo.responses[j][t].col(unit.y(t, static_cast<int>(j))) += row.transpose();
      }
    }
  }
  model.measurement().m_step(sample, pseudo, ScoringOptions{});
  return model;
}

FitResult fit(const Sample& sample, const ModelSpec& spec, const FitOptions& options) {
  std::vector<Model> candidates;
  std::vector<StartSummary> summaries;
  std::vector<EmRun> runs;

  auto attempt = [&](Model model, const std::string& kind, int index) {
    StartSummary summary;
    summary.kind = kind;
    summary.index = index;
    try {
      EmRun run = run_em(model, sample, options);
      summary.loglik = run.loglik;
      summary.iterations = run.iterations;
      summary.converged = run.converged;
      if (!std::isfinite(run.loglik)) throw FitError("non-finite log-likelihood");
      runs.push_back(std::move(run));
      candidates.push_back(std::move(model));
      summaries.push_back(summary);
      return true;
    } catch (const std::exception& ex) {
      summary.error = ex.what();
      summary.loglik = kMinusInf;
      summaries.push_back(summary);
      runs.emplace_back();
      candidates.push_back(Model(spec, sample.dims()));
      return false;
    }
  };

  attempt(deterministic_start(spec, sample), "deterministic", 0);
  for (size_t s = 0; s < options.start_models.size(); ++s) {
    attempt(options.start_models[s], "supplied", static_cast<int>(s));
  }
  const Rng base(options.seed);
  for (int r = 0; r < options.starts; ++r) {
    bool ok = false;
    for (int retry = 0; retry < 20 && !ok; ++retry) {
      Rng rng = base.split(static_cast<std::uint64_t>(r) * 64 + retry);
      Model model(spec, sample.dims());
      model.reset();
      model.randomize(rng);
      ok = attempt(std::move(model), "random", r + 1);
      if (!ok && retry + 1 < 20) {
        summaries.pop_back();
        runs.pop_back();
        candidates.pop_back();
      }
    }
  }

  int best = -1;
  for (int pass = 0; pass < 2 && best < 0; ++pass) {
    for (size_t s = 0; s < summaries.size(); ++s) {
      if (!summaries[s].error.empty()) continue;
      if (pass == 0 && !summaries[s].converged) continue;
      if (best < 0 || summaries[s].loglik > summaries[best].loglik) best = static_cast<int>(s);
    }
  }
  if (best < 0) {
    std::string message = "all starts failed";
    if (!summaries.empty()) message += ": " + summaries.front().error;
    throw FitError(message);
  }

  Model model = candidates[best];
  bool canonical = false;
  if (options.canonicalize) canonical = canonicalize(model);
  EStepResult e = e_step(model, sample, resolve_threads(options.threads));
  FitResult result(std::move(model));
  result.loglik = e.loglik;
  result.counts = std::move(e.counts);
  result.iterations = runs[best].iterations;
  result.converged = summaries[best].converged;
  result.best_start = best;
  result.canonical = canonical;
  result.starts = std::move(summaries);
  result.trace = std::move(runs[best].trace);
  return result;
}

FitResult fit(const PanelDataset& data, const ModelSpec& spec, const FitOptions& options) {
  return fit(build_sample(data, spec), spec, options);
}

}  // namespace lmkit
