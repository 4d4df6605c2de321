#include "lmkit/spec.hpp"

#include <algorithm>
#include <set>

namespace lmkit {

using nlohmann::json;

namespace {

template <typename Enum, size_t N>
Enum parse_enum(const json& node, const std::string& field,
                const std::pair<const char*, Enum> (&names)[N]) {
  if (!node.is_string()) throw SpecError("field '" + field + "' must be a string");
  const std::string value = node.get<std::string>();
  for (const auto& [name, e] : names) {
    if (value == name) return e;
  }
  std::string allowed;
  for (const auto& [name, e] : names) allowed += (allowed.empty() ? "" : ", ") + std::string(name);
  throw SpecError("field '" + field + "': unknown value '" + value + "' (expected one of " +
                  allowed + ")");
}

template <typename Enum, size_t N>
std::string enum_name(Enum e, const std::pair<const char*, Enum> (&names)[N]) {
  for (const auto& [name, value] : names) {
    if (value == e) return name;
  }
  return "unknown";
}

const std::pair<const char*, CovariatePlacement> kPlacements[] = {
    {"none", CovariatePlacement::none},
    {"measurement", CovariatePlacement::measurement},
    {"latent", CovariatePlacement::latent}};

const std::pair<const char*, MeasurementType> kMeasurementTypes[] = {
    {"free", MeasurementType::free},
    {"time_invariant", MeasurementType::time_invariant},
    {"link", MeasurementType::link},
    {"bivariate_marginal", MeasurementType::bivariate_marginal}};

const std::pair<const char*, MeasurementDesign> kDesigns[] = {
    {"state_intercepts", MeasurementDesign::state_intercepts},
    {"rasch", MeasurementDesign::rasch}};

const std::pair<const char*, InitialType> kInitialTypes[] = {
    {"free", InitialType::free}, {"uniform", InitialType::uniform}, {"logit", InitialType::logit}};

const std::pair<const char*, TransitionType> kTransitionTypes[] = {
    {"free", TransitionType::free},
    {"homogeneous", TransitionType::homogeneous},
    {"partial", TransitionType::partial},
    {"linear", TransitionType::linear},
    {"logit", TransitionType::logit}};

const std::pair<const char*, LinearPattern> kPatterns[] = {
    {"equal_off_diagonal", LinearPattern::equal_off_diagonal},
    {"symmetric", LinearPattern::symmetric},
    {"upper_triangular", LinearPattern::upper_triangular},
    {"tridiagonal", LinearPattern::tridiagonal},
    {"identity", LinearPattern::identity}};

const std::pair<const char*, MaskPattern> kMasks[] = {
    {"none", MaskPattern::none},
    {"tridiagonal", MaskPattern::tridiagonal},
    {"upper_triangular", MaskPattern::upper_triangular},
    {"custom", MaskPattern::custom}};

std::vector<std::string> string_list(const json& doc, const std::string& field) {
  if (!doc.contains(field)) return {};
  const json& node = doc.at(field);
  if (!node.is_array()) throw SpecError("field '" + field + "' must be a list of names");
  std::vector<std::string> out;
  for (const auto& item : node) {
    if (!item.is_string()) throw SpecError("field '" + field + "' must contain strings");
    out.push_back(item.get<std::string>());
  }
  return out;
}

int integer_field(const json& doc, const std::string& field, int fallback) {
  if (!doc.contains(field)) return fallback;
  const json& node = doc.at(field);
  if (!node.is_number_integer()) throw SpecError("field '" + field + "' must be an integer");
  return node.get<int>();
}

bool bool_field(const json& doc, const std::string& field, bool fallback) {
  if (!doc.contains(field)) return fallback;
  const json& node = doc.at(field);
  if (!node.is_boolean()) throw SpecError("field '" + field + "' must be true or false");
  return node.get<bool>();
}

LinkFamily link_field(const json& doc, const std::string& field, LinkFamily fallback) {
  if (!doc.contains(field)) return fallback;
  if (!doc.at(field).is_string()) throw SpecError("field '" + field + "' must be a string");
  try {
    return link_family_from_string(doc.at(field).get<std::string>());
  } catch (const std::invalid_argument& e) {
    throw SpecError("field '" + field + "': " + e.what());
  }
}

void check_known_keys(const json& doc, const std::string& where,
                      std::initializer_list<const char*> keys) {
  for (auto it = doc.begin(); it != doc.end(); ++it) {
    if (std::none_of(keys.begin(), keys.end(), [&](const char* k) { return it.key() == k; })) {
      throw SpecError("unknown field '" + where + it.key() + "'");
    }
  }
}

}  // namespace

std::string to_string(MeasurementType type) { return enum_name(type, kMeasurementTypes); }
std::string to_string(InitialType type) { return enum_name(type, kInitialTypes); }
std::string to_string(TransitionType type) { return enum_name(type, kTransitionTypes); }
std::string to_string(LinearPattern pattern) { return enum_name(pattern, kPatterns); }
std::string to_string(MaskPattern mask) { return enum_name(mask, kMasks); }

std::vector<std::vector<int>> transition_mask(const TransitionSpec& spec, int k) {
  std::vector<std::vector<int>> mask(k, std::vector<int>(k, 1));
  switch (spec.mask) {
    case MaskPattern::none:
      break;
    case MaskPattern::tridiagonal:
      for (int u = 0; u < k; ++u) {
        for (int v = 0; v < k; ++v) mask[u][v] = std::abs(u - v) <= 1 ? 1 : 0;
      }
      break;
    case MaskPattern::upper_triangular:
      for (int u = 0; u < k; ++u) {
        for (int v = 0; v < k; ++v) mask[u][v] = v >= u ? 1 : 0;
      }
      break;
    case MaskPattern::custom:
      mask = spec.custom_mask;
      break;
  }
  return mask;
}

void check_spec(const ModelSpec& spec, const Dims& dims) {
  const int k = spec.k;
  if (k < 1) throw SpecError("field 'k' must be at least 1");
  if (spec.m < 1) throw SpecError("field 'm' must be at least 1");
  if (dims.T < 1) throw SpecError("data must have at least one occasion");
  if (dims.levels.empty()) throw SpecError("data must have at least one response variable");

  if (spec.placement == CovariatePlacement::none && !spec.covariates.empty()) {
    throw SpecError("field 'covariates' is set but 'covariate_placement' is none");
  }
  if (spec.placement == CovariatePlacement::none && !spec.lags.empty()) {
    throw SpecError("field 'lags' is set but 'covariate_placement' is none");
  }
  if (spec.placement == CovariatePlacement::measurement &&
      spec.measurement.type != MeasurementType::link &&
      spec.measurement.type != MeasurementType::bivariate_marginal) {
    throw SpecError(
        "field 'covariate_placement': covariates in the measurement model need a 'link' or "
        "'bivariate_marginal' measurement");
  }
  if (spec.placement == CovariatePlacement::latent && spec.initial.type != InitialType::logit &&
      spec.transition.type != TransitionType::logit) {
    throw SpecError(
        "field 'covariate_placement': covariates in the latent model need a 'logit' initial or "
        "transition model");
  }

  const auto& ms = spec.measurement;
  if (ms.type == MeasurementType::link) {
    for (int l : dims.levels) check_link_arity(LinkKind{ms.link, 0}, l);
    if (ms.link == LinkFamily::diagonal_reference) {
      throw SpecError("field 'measurement.link': diagonal_reference applies to transitions only");
    }
  }
  if (ms.type == MeasurementType::bivariate_marginal &&
      (dims.levels.size() != 2 || dims.levels[0] != 2 || dims.levels[1] != 3)) {
    throw SpecError(
        "field 'measurement.type': bivariate_marginal needs exactly two responses with 2 and 3 "
        "categories");
  }

  if (spec.initial.type == InitialType::logit && spec.initial.link != LinkFamily::multinomial &&
      spec.initial.link != LinkFamily::global) {
    throw SpecError("field 'initial.link' must be multinomial or global");
  }

  const auto& ts = spec.transition;
  if (ts.type == TransitionType::partial && (ts.change_point < 2 || ts.change_point > dims.T)) {
    throw SpecError("field 'transition.change_point' must lie in [2, T]");
  }
  if (ts.type == TransitionType::linear && ts.pattern != LinearPattern::identity && k < 2) {
    throw SpecError("field 'transition.pattern' needs k >= 2");
  }
  if (ts.type == TransitionType::logit) {
    if (ts.link != LinkFamily::diagonal_reference && ts.link != LinkFamily::global) {
      throw SpecError("field 'transition.link' must be diagonal_reference or global");
    }
    if (ts.link == LinkFamily::global && ts.mask != MaskPattern::none) {
      throw SpecError("field 'transition.mask' is only available with diagonal_reference logits");
    }
  } else if (ts.mask != MaskPattern::none) {
    throw SpecError("field 'transition.mask' is only available with logit transitions");
  }
  if (ts.mask == MaskPattern::custom) {
    if (static_cast<int>(ts.custom_mask.size()) != k) {
      throw SpecError("field 'transition.mask' must be a k x k matrix");
    }
    for (const auto& row : ts.custom_mask) {
      if (static_cast<int>(row.size()) != k) {
        throw SpecError("field 'transition.mask' must be a k x k matrix");
      }
    }
  }
  if (spec.m > 1 && (spec.initial.type != InitialType::logit ||
                     spec.transition.type != TransitionType::logit)) {
    throw SpecError("field 'm': a cluster mixture needs logit initial and transition models");
  }
}

ModelSpec spec_from_json(const json& doc) {
  if (!doc.is_object()) throw SpecError("model spec must be an object");
  check_known_keys(doc, "",
                   {"k", "m", "covariates", "lags", "cluster_covariates", "covariate_placement",
                    "measurement", "initial", "transition"});
  ModelSpec spec;
  spec.k = integer_field(doc, "k", spec.k);
  spec.m = integer_field(doc, "m", spec.m);
  spec.covariates = string_list(doc, "covariates");
  spec.lags = string_list(doc, "lags");
  spec.cluster_covariates = string_list(doc, "cluster_covariates");
  if (doc.contains("covariate_placement")) {
    const json& node = doc.at("covariate_placement");
    if (node.is_array()) {
      std::set<std::string> placements;
      for (const auto& item : node) placements.insert(item.is_string() ? item.get<std::string>() : "");
      placements.erase("none");
      if (placements.size() > 1) {
        throw SpecError(
            "field 'covariate_placement': covariates may enter the measurement model or the "
            "latent model, not both; choose one scheme");
      }
      spec.placement = placements.empty()
                           ? CovariatePlacement::none
                           : parse_enum(json(*placements.begin()), "covariate_placement", kPlacements);
    } else {
      spec.placement = parse_enum(node, "covariate_placement", kPlacements);
    }
  }

  if (doc.contains("measurement")) {
    const json& node = doc.at("measurement");
    if (node.is_string()) {
      const std::string name = node.get<std::string>();
      if (name == "rasch") {
        spec.measurement.type = MeasurementType::link;
        spec.measurement.design = MeasurementDesign::rasch;
      } else {
        spec.measurement.type = parse_enum(node, "measurement", kMeasurementTypes);
      }
    } else {
      check_known_keys(node, "measurement.", {"type", "link", "design"});
      const std::string type = node.value("type", std::string("free"));
      if (type == "rasch") {
        spec.measurement.type = MeasurementType::link;
        spec.measurement.design = MeasurementDesign::rasch;
      } else {
        spec.measurement.type = parse_enum(json(type), "measurement.type", kMeasurementTypes);
      }
      spec.measurement.link = link_field(node, "link", spec.measurement.link);
      if (node.contains("design")) {
        spec.measurement.design = parse_enum(node.at("design"), "measurement.design", kDesigns);
      }
    }
  }

  if (doc.contains("initial")) {
    const json& node = doc.at("initial");
    if (node.is_string()) {
      spec.initial.type = parse_enum(node, "initial", kInitialTypes);
    } else {
      check_known_keys(node, "initial.", {"type", "link"});
      if (node.contains("type")) spec.initial.type = parse_enum(node.at("type"), "initial.type", kInitialTypes);
      spec.initial.link = link_field(node, "link", spec.initial.link);
    }
  }

  if (doc.contains("transition")) {
    const json& node = doc.at("transition");
    auto& ts = spec.transition;
    if (node.is_string()) {
      ts.type = parse_enum(node, "transition", kTransitionTypes);
    } else {
      check_known_keys(node, "transition.",
                       {"type", "change_point", "pattern", "homogeneous", "time_varying", "link",
                        "mask"});
      if (node.contains("type")) ts.type = parse_enum(node.at("type"), "transition.type", kTransitionTypes);
      ts.change_point = integer_field(node, "change_point", ts.change_point);
      if (node.contains("pattern")) ts.pattern = parse_enum(node.at("pattern"), "transition.pattern", kPatterns);
      ts.homogeneous = bool_field(node, "homogeneous", ts.homogeneous);
      if (node.contains("time_varying")) ts.homogeneous = !bool_field(node, "time_varying", false);
      ts.link = link_field(node, "link", ts.link);
      if (node.contains("mask")) {
        const json& mask = node.at("mask");
        if (mask.is_array()) {
          ts.mask = MaskPattern::custom;
          for (const auto& row : mask) {
            if (!row.is_array()) throw SpecError("field 'transition.mask' must be a matrix of 0/1");
            std::vector<int> entries;
            for (const auto& v : row) {
              if (!v.is_number_integer()) throw SpecError("field 'transition.mask' must hold 0/1");
              entries.push_back(v.get<int>() != 0 ? 1 : 0);
            }
            ts.custom_mask.push_back(entries);
          }
        } else {
          ts.mask = parse_enum(mask, "transition.mask", kMasks);
          if (ts.mask == MaskPattern::custom) {
            throw SpecError("field 'transition.mask': a custom mask is given as a matrix");
          }
        }
      }
    }
  }
  return spec;
}

json spec_to_json(const ModelSpec& spec) {
  json doc;
  doc["k"] = spec.k;
  doc["m"] = spec.m;
  doc["covariates"] = spec.covariates;
  doc["lags"] = spec.lags;
  doc["cluster_covariates"] = spec.cluster_covariates;
  doc["covariate_placement"] = enum_name(spec.placement, kPlacements);
  doc["measurement"] = {{"type", to_string(spec.measurement.type)},
                        {"link", std::string(to_string(spec.measurement.link))},
                        {"design", enum_name(spec.measurement.design, kDesigns)}};
  doc["initial"] = {{"type", to_string(spec.initial.type)},
                    {"link", std::string(to_string(spec.initial.link))}};
  json transition = {{"type", to_string(spec.transition.type)},
                     {"change_point", spec.transition.change_point},
                     {"pattern", to_string(spec.transition.pattern)},
                     {"homogeneous", spec.transition.homogeneous},
                     {"link", std::string(to_string(spec.transition.link))}};
  if (spec.transition.mask == MaskPattern::custom) {
    transition["mask"] = spec.transition.custom_mask;
  } else {
    transition["mask"] = to_string(spec.transition.mask);
  }
  doc["transition"] = transition;
  return doc;
}

}  // namespace lmkit
