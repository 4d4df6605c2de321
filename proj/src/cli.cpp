#include "lmkit/cli.hpp"

#include <cstdint>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "lmkit/data.hpp"
#include "lmkit/decode.hpp"
#include "lmkit/em.hpp"
#include "lmkit/inference.hpp"
#include "lmkit/model.hpp"
#include "lmkit/params.hpp"
#include "lmkit/report.hpp"
#include "lmkit/sample.hpp"
#include "lmkit/simulate.hpp"
#include "lmkit/spec.hpp"

namespace lmkit {

namespace {

using nlohmann::json;

class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Flags {
  std::string config;
  std::string data;
  std::string out;
  std::string params;
  std::string format = "report";
  std::string k_range;
  std::string null_kind = "chi2";
  std::vector<std::string> cone;
  std::vector<double> weights;
  std::vector<std::string> reports;
  std::uint64_t seed = 0;
  int starts = 0;
  int threads = 0;
  int k = 0;
  int n = 0;
  int draws = 10000;
  CLI::Option* seed_opt = nullptr;
  CLI::Option* starts_opt = nullptr;
  CLI::Option* threads_opt = nullptr;
  CLI::Option* k_opt = nullptr;
  CLI::Option* n_opt = nullptr;

  static bool given(const CLI::Option* opt) { return opt != nullptr && opt->count() > 0; }
};

struct RunConfig {
  json doc = json::object();
  PanelSchema schema;
  std::string data_path;
  std::optional<ModelSpec> spec;
  FitOptions options;
  bool inference = true;
  double step = 1e-6;
  bool export_decoding = false;
  std::vector<int> k_range;
  std::vector<int> m_range;
};

json read_json_file(const std::string& path, const std::string& what) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + what + " '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& ex) {
    throw InputError(what + " '" + path + "' is not valid JSON: " + ex.what());
  }
}

void check_keys(const json& node, const std::string& where,
                std::initializer_list<const char*> allowed) {
  if (!node.is_object()) throw InputError("field '" + where + "' must be an object");
  for (const auto& item : node.items()) {
    bool known = false;
    for (const char* a : allowed) known = known || item.key() == a;
    if (!known) throw InputError("unknown field '" + where + "." + item.key() + "'");
  }
}

template <typename T>
T field(const json& node, const char* name, const std::string& where, T fallback) {
  if (!node.contains(name)) return fallback;
  try {
    return node.at(name).get<T>();
  } catch (const json::exception&) {
    throw InputError("field '" + where + "." + name + "' has the wrong type");
  }
}

std::vector<int> int_range(const json& node, const std::string& where) {
  std::vector<int> bounds;
  try {
    bounds = node.get<std::vector<int>>();
  } catch (const json::exception&) {
    throw InputError("field '" + where + "' must be [first, last]");
  }
  if (bounds.size() != 2 || bounds[0] < 1 || bounds[1] < bounds[0]) {
    throw InputError("field '" + where + "' must be [first, last] with 1 <= first <= last");
  }
  std::vector<int> values;
  for (int v = bounds[0]; v <= bounds[1]; ++v) values.push_back(v);
  return values;
}

// "a..b", "a:b", "a-b" or a comma list.
std::vector<int> parse_k_range(const std::string& text) {
  std::vector<int> values;
  try {
    for (const char* sep : {"..", ":", "-"}) {
      const auto pos = text.find(sep);
      if (pos == std::string::npos) continue;
      const int first = std::stoi(text.substr(0, pos));
      const int last = std::stoi(text.substr(pos + std::string(sep).size()));
      if (first < 1 || last < first) throw InputError("");
      for (int v = first; v <= last; ++v) values.push_back(v);
      return values;
    }
    std::stringstream in(text);
    std::string item;
    while (std::getline(in, item, ',')) {
      const int v = std::stoi(item);
      if (v < 1) throw InputError("");
      values.push_back(v);
    }
  } catch (const std::exception&) {
    values.clear();
  }
  if (values.empty()) throw InputError("flag --k-range must look like 1..4 (non-empty, k >= 1)");
  return values;
}

RunConfig load_config(const Flags& flags, bool need_model) {
  RunConfig cfg;
  if (!flags.config.empty()) cfg.doc = read_json_file(flags.config, "config");
  const json& doc = cfg.doc;
  check_keys(doc, "config", {"data", "model", "fit", "select", "output"});

  if (doc.contains("data")) {
    const json& d = doc.at("data");
    check_keys(d, "data",
               {"path", "id", "time", "responses", "covariates", "cluster", "cluster_covariates",
                "weight", "roles", "delimiter"});
    cfg.data_path = field<std::string>(d, "path", "data", "");
    cfg.schema.id_column = field<std::string>(d, "id", "data", cfg.schema.id_column);
    cfg.schema.time_column = field<std::string>(d, "time", "data", cfg.schema.time_column);
    cfg.schema.responses = field<std::vector<std::string>>(d, "responses", "data", {});
    cfg.schema.covariates = field<std::vector<std::string>>(d, "covariates", "data", {});
    cfg.schema.cluster_column = field<std::string>(d, "cluster", "data", "");
    cfg.schema.cluster_covariates =
        field<std::vector<std::string>>(d, "cluster_covariates", "data", {});
    cfg.schema.weight_column = field<std::string>(d, "weight", "data", "");
    const auto roles = field<std::map<std::string, std::string>>(d, "roles", "data", {});
    cfg.schema.roles.assign(roles.begin(), roles.end());
    const std::string delimiter = field<std::string>(d, "delimiter", "data", "");
    if (delimiter.size() > 1) throw InputError("field 'data.delimiter' must be one character");
    if (!delimiter.empty()) cfg.schema.delimiter = delimiter[0];
  }
  if (!flags.data.empty()) cfg.data_path = flags.data;

  if (doc.contains("model")) cfg.spec = spec_from_json(doc.at("model"));
  if (need_model && !cfg.spec) throw InputError("config lacks field 'model'");
  if (cfg.spec && Flags::given(flags.k_opt)) cfg.spec->k = flags.k;

  FitOptions& o = cfg.options;
  if (doc.contains("fit")) {
    const json& f = doc.at("fit");
    check_keys(f, "fit",
               {"starts", "seed", "tolerance", "param_tolerance", "max_iterations", "threads",
                "canonicalize", "inference", "step"});
    o.starts = field<int>(f, "starts", "fit", o.starts);
    o.seed = field<std::uint64_t>(f, "seed", "fit", o.seed);
    o.tolerance = field<double>(f, "tolerance", "fit", o.tolerance);
    o.param_tolerance = field<double>(f, "param_tolerance", "fit", o.param_tolerance);
    o.max_iterations = field<int>(f, "max_iterations", "fit", o.max_iterations);
    o.threads = field<int>(f, "threads", "fit", o.threads);
    o.canonicalize = field<bool>(f, "canonicalize", "fit", o.canonicalize);
    cfg.inference = field<bool>(f, "inference", "fit", cfg.inference);
    cfg.step = field<double>(f, "step", "fit", cfg.step);
  }
  if (Flags::given(flags.starts_opt)) o.starts = flags.starts;
  if (Flags::given(flags.seed_opt)) o.seed = flags.seed;
  if (Flags::given(flags.threads_opt)) o.threads = flags.threads;
  if (o.starts < 0) throw InputError("field 'fit.starts' must be non-negative");
  if (o.max_iterations < 1) throw InputError("field 'fit.max_iterations' must be positive");
  if (o.threads < 0) throw InputError("field 'fit.threads' must be non-negative");
  if (!(o.tolerance > 0.0) || !(o.param_tolerance > 0.0)) {
    throw InputError("fields 'fit.tolerance' and 'fit.param_tolerance' must be positive");
  }
  if (!(cfg.step > 0.0)) throw InputError("field 'fit.step' must be positive");

  if (doc.contains("select")) {
    const json& s = doc.at("select");
    check_keys(s, "select", {"k_range", "m_range"});
    if (s.contains("k_range")) cfg.k_range = int_range(s.at("k_range"), "select.k_range");
    if (s.contains("m_range")) cfg.m_range = int_range(s.at("m_range"), "select.m_range");
  }
  if (!flags.k_range.empty()) cfg.k_range = parse_k_range(flags.k_range);

  if (doc.contains("output")) {
    const json& out = doc.at("output");
    check_keys(out, "output", {"decode"});
    cfg.export_decoding = field<bool>(out, "decode", "output", false);
  }
  return cfg;
}

PanelDataset load_data(const RunConfig& cfg, const ModelSpec* spec) {
  if (cfg.data_path.empty()) throw InputError("no data: set field 'data.path' or pass --data");
  PanelSchema schema = cfg.schema;
  if (spec != nullptr) {
    if (schema.covariates.empty()) schema.covariates = spec->covariates;
    if (schema.cluster_covariates.empty()) schema.cluster_covariates = spec->cluster_covariates;
    if (spec->m > 1 && schema.cluster_column.empty()) {
      throw InputError("field 'data.cluster' is required when 'model.m' exceeds 1");
    }
  }
  return load_panel_file(cfg.data_path, schema);
}

void emit(const Flags& flags, std::ostream& out, const std::string& text) {
  if (flags.out.empty()) {
    out << text;
    return;
  }
  std::ofstream file(flags.out, std::ios::binary);
  if (!file) throw InputError("cannot write '" + flags.out + "'");
  file << text;
}

std::string json_text(const json& doc) { return doc.dump(2) + "\n"; }

int cmd_fit(const Flags& flags, std::ostream& out, std::ostream& err) {
  const RunConfig cfg = load_config(flags, true);
  const ModelSpec& spec = *cfg.spec;
  const PanelDataset data = load_data(cfg, &spec);
  const Sample sample = build_sample(data, spec);
  check_spec(spec, sample.dims());
  const int threads = resolve_threads(cfg.options.threads);

  const FitResult result = fit(sample, spec, cfg.options);
  std::optional<InferenceReport> inference;
  std::string inference_error;
  if (cfg.inference) {
    try {
      inference = infer(result.model, sample, InferenceOptions{cfg.step, threads});
    } catch (const std::exception& ex) {
      inference_error = ex.what();
    }
  }
  json report = fit_report(result, sample, inference ? &*inference : nullptr);
  if (!inference_error.empty()) report["inference"]["error"] = inference_error;
  if (cfg.export_decoding) {
    const Sample subjects = build_sample(data, spec, false);
    report["subjects"] = decoding_json(decode_sample(result.model, subjects, threads), subjects, &data);
  }
  emit(flags, out, flags.format == "csv" ? estimates_csv(report) : json_text(report));
  if (!result.converged) {
    err << "warning: EM did not converge within " << cfg.options.max_iterations
        << " iterations; results written with converged=false\n";
    return kExitNotConverged;
  }
  return kExitSuccess;
}

Model load_model(const Flags& flags) {
  if (flags.params.empty()) throw InputError("pass --params with a fit report or parameter document");
  return load_params_document(read_json_file(flags.params, "parameter document"));
}

int cmd_simulate(const Flags& flags, std::ostream& out, std::ostream&) {
  const Model model = load_model(flags);
  RunConfig cfg = load_config(flags, false);
  std::optional<PanelDataset> design;
  if (!cfg.data_path.empty()) design = load_data(cfg, &model.spec());
  int n = flags.n;
  if (!Flags::given(flags.n_opt)) {
    if (!design) throw InputError("simulate needs --n or a design dataset (--data)");
    n = design->subjects();
  }
  if (n < 1) throw InputError("flag --n must be positive");
  const std::uint64_t seed = cfg.options.seed;
  const SimulatedPanel sim = simulate_panel(model, n, seed, design ? &*design : nullptr);
  std::ostringstream text;
  write_panel(sim.data, text);
  emit(flags, out, text.str());
  return kExitSuccess;
}

int cmd_decode(const Flags& flags, std::ostream& out, std::ostream&) {
  const Model model = load_model(flags);
  const RunConfig cfg = load_config(flags, false);
  const PanelDataset data = load_data(cfg, &model.spec());
  const Sample sample = build_sample(data, model.spec(), false);
  const Dims dims = sample.dims();
  if (dims.T != model.dims().T || dims.levels != model.dims().levels ||
      dims.covariates != model.dims().covariates ||
      dims.cluster_covariates != model.dims().cluster_covariates) {
    throw InputError("data dimensions do not match the parameter document");
  }
  const auto decoding = decode_sample(model, sample, resolve_threads(cfg.options.threads));
  if (flags.format == "csv") {
    std::ostringstream text;
    text << "id,time,path,local,local_mass\n";
    for (const SubjectDecoding& d : decoding) {
      const std::string& id = data.raw().subject_ids[sample.units[d.unit].subject];
      for (int t = 0; t < sample.occasions; ++t) {
        text << id << ',' << (t + 1) << ',' << (d.decoded.path[t] + 1) << ','
             << (d.decoded.local[t] + 1) << ',' << format_number(d.decoded.local_mass[t]) << '\n';
      }
    }
    emit(flags, out, text.str());
  } else {
    emit(flags, out, json_text({{"subjects", decoding_json(decoding, sample, &data)}}));
  }
  return kExitSuccess;
}

int cmd_select(const Flags& flags, std::ostream& out, std::ostream&) {
  const RunConfig cfg = load_config(flags, true);
  if (cfg.k_range.empty()) throw InputError("select needs a k range (--k-range or 'select.k_range')");
  const PanelDataset data = load_data(cfg, &*cfg.spec);
  const std::vector<int> m_range = cfg.m_range.empty() ? std::vector<int>{cfg.spec->m} : cfg.m_range;
  std::vector<SelectionRow> rows;
  for (int m : m_range) {
    for (int k : cfg.k_range) {
      SelectionRow row;
      row.k = k;
      row.m = m;
      try {
        ModelSpec spec = *cfg.spec;
        spec.k = k;
        spec.m = m;
        const Sample sample = build_sample(data, spec);
        const FitResult result = fit(sample, spec, cfg.options);
        row.g = result.model.size();
        row.loglik = result.loglik;
        const InformationCriteria ic = information_criteria(result.loglik, row.g, sample.subjects);
        row.aic = ic.aic;
        row.bic = ic.bic;
        row.converged = result.converged;
      } catch (const std::exception& ex) {
        row.error = ex.what();
      }
      rows.push_back(row);
    }
  }
  mark_best(rows);
  emit(flags, out, flags.format == "csv" ? selection_csv(rows) : json_text(selection_json(rows)));
  return kExitSuccess;
}

struct FittedSummary {
  ModelSpec spec;
  double loglik = 0.0;
  int g = 0;
  json data;
  json doc;
};

FittedSummary read_report(const std::string& path) {
  FittedSummary s;
  s.doc = read_json_file(path, "fit report");
  for (const char* f : {"spec", "fit", "inference", "data"}) {
    if (!s.doc.contains(f)) throw InputError("fit report '" + path + "' lacks field '" + f + "'");
  }
  s.spec = spec_from_json(s.doc.at("spec"));
  s.loglik = field<double>(s.doc.at("fit"), "loglik", "fit", 0.0);
  s.g = field<int>(s.doc.at("inference"), "g", "inference", 0);
  s.data = s.doc.at("data");
  return s;
}

int cmd_lrtest(const Flags& flags, std::ostream& out, std::ostream&) {
  if (flags.reports.size() != 2) throw InputError("lrtest takes two fit reports: full, constrained");
  const FittedSummary full = read_report(flags.reports[0]);
  const FittedSummary constrained = read_report(flags.reports[1]);
  if (full.data != constrained.data) throw InputError("the two fits were run on different data");
  if (!nested_spec(constrained.spec, full.spec)) {
    throw InputError("the constrained model is not nested in the full model");
  }
  const int df = full.g - constrained.g;
  if (df < 1) throw InputError("the full model must have more free parameters than the constrained one");

  LrNull null;
  null.df = df;
  null.draws = flags.draws;
  null.seed = Flags::given(flags.seed_opt) ? flags.seed : 0;
  if (flags.null_kind == "chi2") {
    null.kind = NullKind::chi_squared;
  } else if (flags.null_kind == "chibar") {
    null.kind = NullKind::chi_bar;
    null.weights = flags.weights;
    if (null.weights.empty()) {
      if (df != 1) throw InputError("chi-bar test with df > 1 needs --weights");
      null.weights = {0.5, 0.5};
    }
  } else {
    null.kind = NullKind::chi_bar_monte_carlo;
    if (flags.cone.empty()) throw InputError("chibar-mc needs --cone with the constrained coordinates");
    const json& coords = full.doc.at("coordinates");
    const json& info = full.doc.at("inference").value("information", json());
    if (!info.is_array()) throw InputError("full report lacks the observed information");
    std::vector<int> idx;
    for (const std::string& name : flags.cone) {
      int found = -1;
      for (size_t c = 0; c < coords.size(); ++c) {
        if (coords[c].at("name") == name) found = static_cast<int>(c);
      }
      if (found < 0) throw InputError("coordinate '" + name + "' not in the full report");
      idx.push_back(found);
    }
    const int d = static_cast<int>(idx.size());
    null.information.resize(d, d);
    for (int a = 0; a < d; ++a) {
      for (int b = 0; b < d; ++b) null.information(a, b) = info.at(idx[a]).at(idx[b]).get<double>();
    }
  }
  const LrTestResult r = lr_test(full.loglik, constrained.loglik, null);
  json doc = {{"statistic", r.statistic},
              {"p_value", r.p_value},
              {"df", r.df},
              {"null", flags.null_kind},
              {"loglik_full", full.loglik},
              {"loglik_constrained", constrained.loglik},
              {"g_full", full.g},
              {"g_constrained", constrained.g}};
  if (!r.weights.empty()) doc["weights"] = r.weights;
  if (!r.weight_se.empty()) doc["weight_se"] = r.weight_se;
  if (flags.format == "csv") {
    emit(flags, out,
         "statistic,p_value,df\n" + format_number(r.statistic) + "," + format_number(r.p_value) +
             "," + std::to_string(r.df) + "\n");
  } else {
    emit(flags, out, json_text(doc));
  }
  return kExitSuccess;
}

int cmd_describe(const Flags& flags, std::ostream& out, std::ostream&) {
  json doc;
  std::optional<Model> model;
  if (!flags.params.empty()) {
    model = load_model(flags);
  } else {
    const RunConfig cfg = load_config(flags, true);
    doc["spec"] = spec_to_json(*cfg.spec);
    if (!cfg.data_path.empty()) {
      const PanelDataset data = load_data(cfg, &*cfg.spec);
      model.emplace(*cfg.spec, build_sample(data, *cfg.spec).dims());
    }
  }
  if (model) {
    doc["spec"] = spec_to_json(model->spec());
    doc["dims"] = dims_to_json(model->dims());
    doc["g"] = model->size();
    doc["coordinates"] = model->coord_names();
  }
  emit(flags, out, json_text(doc));
  return kExitSuccess;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Latent Markov models for categorical panel data"};
  app.require_subcommand(1);
  Flags flags;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", flags.config, "Config document (JSON)");
    sub->add_option("--data", flags.data, "Panel data file (long format)");
    sub->add_option("--out", flags.out, "Output file (default: standard output)");
    flags.seed_opt = sub->add_option("--seed", flags.seed, "Random seed");
    flags.threads_opt = sub->add_option("--threads", flags.threads, "Worker threads");
    sub->add_option("--format", flags.format, "Output format")
        ->check(CLI::IsMember({"report", "csv"}));
  };

  CLI::App* fit_cmd = app.add_subcommand("fit", "Fit a model");
  common(fit_cmd);
  CLI::App* simulate_cmd = app.add_subcommand("simulate", "Simulate a panel from parameters");
  common(simulate_cmd);
  CLI::App* decode_cmd = app.add_subcommand("decode", "Decode latent paths");
  common(decode_cmd);
  CLI::App* select_cmd = app.add_subcommand("select", "Choose k by information criteria");
  common(select_cmd);
  CLI::App* lrtest_cmd = app.add_subcommand("lrtest", "Likelihood ratio test of nested fits");
  common(lrtest_cmd);
  CLI::App* describe_cmd = app.add_subcommand("describe", "Show spec, dimensions and coordinates");
  common(describe_cmd);

  // Options are stored once in `flags`; only one subcommand runs.
  for (CLI::App* sub : {fit_cmd, select_cmd}) {
    sub->add_option("--starts", flags.starts, "Random starts");
    sub->add_option("--k", flags.k, "Number of latent states");
  }
  describe_cmd->add_option("--k", flags.k, "Number of latent states");
  select_cmd->add_option("--k-range", flags.k_range, "Range of k, e.g. 1..4");
  for (CLI::App* sub : {simulate_cmd, decode_cmd, describe_cmd}) {
    sub->add_option("--params", flags.params, "Fit report or parameter document");
  }
  simulate_cmd->add_option("--n", flags.n, "Number of subjects");
  lrtest_cmd->add_option("reports", flags.reports, "Full and constrained fit reports")
      ->expected(2);
  lrtest_cmd->add_option("--null", flags.null_kind, "Null distribution")
      ->check(CLI::IsMember({"chi2", "chibar", "chibar-mc"}));
  lrtest_cmd->add_option("--weights", flags.weights, "Chi-bar mixing weights w_0, w_1, ...")
      ->delimiter(',');
  lrtest_cmd->add_option("--cone", flags.cone, "Coordinates constrained to be non-negative")
      ->delimiter(',');
  lrtest_cmd->add_option("--draws", flags.draws, "Monte Carlo draws for chi-bar weights");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& ex) {
    const int code = app.exit(ex, out, err);
    return code == 0 ? kExitSuccess : kExitInputError;
  }

  // Resolve the flag handles of the subcommand that ran.
  CLI::App* active = app.get_subcommands().front();
  flags.seed_opt = active->get_option_no_throw("--seed");
  flags.threads_opt = active->get_option_no_throw("--threads");
  flags.starts_opt = active->get_option_no_throw("--starts");
  flags.k_opt = active->get_option_no_throw("--k");
  flags.n_opt = active->get_option_no_throw("--n");

  try {
    if (active == fit_cmd) return cmd_fit(flags, out, err);
    if (active == simulate_cmd) return cmd_simulate(flags, out, err);
    if (active == decode_cmd) return cmd_decode(flags, out, err);
    if (active == select_cmd) return cmd_select(flags, out, err);
    if (active == lrtest_cmd) return cmd_lrtest(flags, out, err);
    return cmd_describe(flags, out, err);
  } catch (const std::exception& ex) {
    err << "error: " << ex.what() << "\n";
    return kExitInputError;
  }
}

}  // namespace lmkit
