#include "edasum/json_io.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

#include "edasum/error.hpp"

namespace edasum {

namespace {

bool is_nonnegative_integer(const Json& j) {
  return j.is_number_unsigned() || (j.is_number_integer() && j.get<std::int64_t>() >= 0);
}

}  // namespace

Json action_to_json(const Action& action, const PatternCatalog& catalog) {
  Json j;
  j["itemset"] = action.itemset;
  j["operator"] = std::string(to_string(action.op));
  if (action.attribute) {
    j["attribute"] = catalog.data().attributes().at(*action.attribute).name;
  } else {
    j["attribute"] = nullptr;
  }
  return j;
}

Action action_from_json(const Json& j, const PatternCatalog& catalog) {
  if (!j.is_object()) throw ConfigError("action", "action must be a JSON object");
  Action a;
  if (!j.contains("itemset") || !is_nonnegative_integer(j["itemset"])) {
    throw ConfigError("itemset", "action.itemset must be a nonnegative integer");
  }
  a.itemset = j["itemset"].get<ItemsetId>();
  if (!j.contains("operator") || !j["operator"].is_string()) {
    throw ConfigError("operator", "action.operator must be a string");
  }
  a.op = parse_operator(j["operator"].get<std::string>());
  if (j.contains("attribute") && !j["attribute"].is_null()) {
    const auto& attr = j["attribute"];
    if (is_nonnegative_integer(attr)) {
      a.attribute = attr.get<std::uint32_t>();
    } else if (attr.is_string()) {
      const auto names = catalog.attribute_names();
      const auto name = attr.get<std::string>();
      const auto it = std::find(names.begin(), names.end(), name);
      if (it == names.end()) throw ConfigError("attribute", "unknown attribute '" + name + "'");
      a.attribute = static_cast<std::uint32_t>(it - names.begin());
    } else {
      throw ConfigError("attribute", "action.attribute must be a name, an index or null");
    }
  }
  return a;
}

Json components_to_json(const Components& c) {
  return {{"uniformity", c.uniformity}, {"diversity", c.diversity}, {"novelty", c.novelty}};
}

Components components_from_json(const Json& j) {
  return {j.at("uniformity").get<double>(), j.at("diversity").get<double>(),
          j.at("novelty").get<double>()};
}

Json weights_to_json(const ResolvedWeights& w) {
  return {{"alpha", w.alpha}, {"beta", w.beta}, {"gamma", w.gamma}};
}

Json breakdown_to_json(const UtilityBreakdown& b) {
  return {{"raw", components_to_json(b.raw)},
          {"scaled", components_to_json(b.scaled)},
          {"utility", b.utility}};
}

Json config_to_json(const SessionConfig& c) {
  return {{"k", c.k},
          {"t", c.t_total},
          {"mode", to_string(c.mode)},
          {"strategy", to_string(c.strategy)},
          {"preset", to_string(c.weights.preset)},
          {"scheme", to_string(c.weights.scheme)},
          {"threshold", c.swap_threshold},
          {"operators", c.operators == OperatorSet::all ? "all" : "2op"},
          {"seed", c.seed}};
}

SessionConfig config_from_json(const Json& j, SessionConfig c) {
  auto read_size = [&](const char* key, const char* field, std::size_t& out) {
    if (!j.contains(key)) return;
    if (!is_nonnegative_integer(j[key])) throw ConfigError(field, std::string(key) + " must be a positive integer");
    out = j[key].get<std::size_t>();
  };
  auto read_string = [&](const char* key, const char* field) -> std::optional<std::string> {
    if (!j.contains(key)) return std::nullopt;
    if (!j[key].is_string()) throw ConfigError(field, std::string(key) + " must be a string");
    return j[key].get<std::string>();
  };
  read_size("k", "k", c.k);
  read_size("t", "t", c.t_total);
  if (auto m = read_string("mode", "mode")) c.mode = parse_mode(*m);
  if (auto s = read_string("strategy", "strategy")) c.strategy = parse_strategy(*s);
  const Json* weights = j.contains("weights") ? &j["weights"] : &j;
  if (weights->contains("preset")) c.weights.preset = parse_preset((*weights)["preset"].get<std::string>());
  if (weights->contains("scheme")) c.weights.scheme = parse_scheme((*weights)["scheme"].get<std::string>());
  if (j.contains("threshold")) {
    if (!j["threshold"].is_number()) throw ConfigError("threshold", "threshold must be a number");
    c.swap_threshold = j["threshold"].get<double>();
  }
  if (auto o = read_string("operators", "operators")) c.operators = parse_operator_set(*o);
  if (j.contains("seed")) {
    if (!is_nonnegative_integer(j["seed"])) throw ConfigError("seed", "seed must be a nonnegative integer");
    c.seed = j["seed"].get<std::uint64_t>();
  }
  c.validate();
  return c;
}

Json scales_to_json(const ComponentScales& s) {
  auto stats = [](const ComponentStats& c) { return Json{{"mean", c.mean}, {"sd", c.sd}}; };
  return {{"enabled", s.enabled},
          {"uniformity", stats(s.uniformity)},
          {"diversity", stats(s.diversity)},
          {"novelty", stats(s.novelty)},
          {"sample_size", s.sample_size},
          {"seed", s.seed},
          {"k", s.k}};
}

ComponentScales scales_from_json(const Json& j) {
  auto stats = [](const Json& c) { return ComponentStats{c.at("mean").get<double>(), c.at("sd").get<double>()}; };
  ComponentScales s;
  s.enabled = j.at("enabled").get<bool>();
  s.uniformity = stats(j.at("uniformity"));
  s.diversity = stats(j.at("diversity"));
  s.novelty = stats(j.at("novelty"));
  s.sample_size = j.value("sample_size", std::size_t{0});
  s.seed = j.value("seed", std::uint64_t{0});
  s.k = j.value("k", std::size_t{0});
  return s;
}

Json itemset_card(const PatternCatalog& catalog, ItemsetId id) {
  const auto& it = catalog.itemset(id);
  const auto& attrs = catalog.data().attributes();
  Json desc = Json::object();
  for (const auto& c : it.desc) desc[attrs[c.attribute].name] = attrs[c.attribute].bin_label(c.bin);
  Json vec = Json::array();
  const auto v = catalog.vector(id);
  for (Eigen::Index a = 0; a < v.size(); ++a) vec.push_back(v[a]);
  return {{"id", id},
          {"size", it.size()},
          {"uniformity", catalog.uniformity(id)},
          {"description", desc},
          {"root", catalog.is_root(id)},
          {"vector", vec}};
}

Json step_to_json(const PipelineStep& step, std::size_t index, const PatternCatalog& catalog,
                  std::size_t seen_after, bool include_timing) {
  Json j = {{"type", "step"},
            {"step", index},
            {"action", action_to_json(step.action, catalog)},
            {"result", step.result},
            {"raw", components_to_json(step.breakdown.raw)},
            {"scaled", components_to_json(step.breakdown.scaled)},
            {"weights", weights_to_json(step.weights)},
            {"utility", step.breakdown.utility},
            {"seen", seen_after}};
  if (include_timing) {
    j["wall_time"] = step.wall_ms / 1000.0;
    j["decide_time"] = step.decide_ms / 1000.0;
  }
  return j;
}

void write_pipeline_log(const Session& session, std::ostream& os, LogOptions options) {
  const auto& cat = session.catalog();
  Json header = {{"type", "session"},
                 {"config", config_to_json(session.config())},
                 {"scales", scales_to_json(session.scales())},
                 {"catalog_size", cat.size()}};
  os << header.dump() << '\n';
  Json boot = {{"type", "bootstrap"},
               {"step", 0},
               {"result", session.bootstrap()},
               {"raw", components_to_json(session.bootstrap_breakdown().raw)},
               {"scaled", components_to_json(session.bootstrap_breakdown().scaled)},
               {"weights", weights_to_json(session.bootstrap_weights())},
               {"utility", session.bootstrap_breakdown().utility},
               {"seen", session.bootstrap().size()}};
  os << boot.dump() << '\n';
  SeenSet seen;
  seen.add(session.bootstrap());
  for (std::size_t i = 0; i < session.history().size(); ++i) {
    const auto& step = session.history()[i];
    seen.add(step.result);
    os << step_to_json(step, i + 1, cat, seen.size(), options.include_timing).dump() << '\n';
  }
}

std::string pipeline_log(const Session& session, LogOptions options) {
  std::ostringstream os;
  write_pipeline_log(session, os, options);
  return os.str();
}

namespace {

void compare(ReplayReport& report, const Json& logged, const UtilityBreakdown& b) {
  const auto raw = components_from_json(logged.at("raw"));
  const auto scaled = components_from_json(logged.at("scaled"));
  const double diffs[] = {raw.uniformity - b.raw.uniformity,
                          raw.diversity - b.raw.diversity,
                          raw.novelty - b.raw.novelty,
                          scaled.uniformity - b.scaled.uniformity,
                          scaled.diversity - b.scaled.diversity,
                          scaled.novelty - b.scaled.novelty,
                          logged.at("utility").get<double>() - b.utility};
  for (const double d : diffs) report.max_abs_error = std::max(report.max_abs_error, std::abs(d));
}

}  // namespace

ReplayReport replay_pipeline_log(std::istream& is, std::shared_ptr<const PatternCatalog> catalog) {
  std::string line;
  if (!std::getline(is, line)) throw InputError("empty pipeline log");
  const Json header = Json::parse(line);
  if (header.value("type", "") != "session") throw InputError("pipeline log must start with a session record");
  if (header.at("catalog_size").get<std::size_t>() != catalog->size()) {
    throw InputError("pipeline log was recorded against a different catalog");
  }
  Session session(catalog, scales_from_json(header.at("scales")), config_from_json(header.at("config")));
  ReplayReport report;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const Json rec = Json::parse(line);
    const auto type = rec.value("type", "");
    if (type == "bootstrap") {
      if (rec.at("result").get<Summary>() != session.bootstrap() && report.results_match) {
        report.results_match = false;
        report.first_mismatch = "bootstrap summary differs";
      }
      compare(report, rec, session.bootstrap_breakdown());
      continue;
    }
    if (type != "step") throw InputError("unknown record type '" + type + "' in pipeline log");
    const Action action = action_from_json(rec.at("action"), *catalog);
    std::string why;
    auto step = session.plan(action, &why);
    if (!step) throw InputError("logged action is invalid on replay: " + why);
    if (step->result != rec.at("result").get<Summary>() && report.results_match) {
      report.results_match = false;
      report.first_mismatch = "step " + std::to_string(rec.at("step").get<std::size_t>()) + " result differs";
    }
    compare(report, rec, step->breakdown);
    session.apply(*step);
    ++report.steps;
  }
  return report;
}

}  // namespace edasum
