#include "edasum/service.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include <httplib.h>

#include "edasum/error.hpp"
#include "edasum/evaluation.hpp"

namespace edasum {

Json error_body(const std::string& code, const std::string& detail, const std::string& field) {
  Json j = {{"error", code}, {"detail", detail}};
  if (!field.empty()) j["field"] = field;
  return j;
}

Dataset load_dataset(const DatasetSource& source) {
  Dataset d;
  d.id = source.id;
  std::ifstream cat(source.catalog, std::ios::binary);
  if (!cat) throw InputError("cannot open catalog " + source.catalog.string());
  d.catalog = std::make_shared<const PatternCatalog>(load_catalog(cat));
  if (!source.scales.empty()) {
    std::ifstream in(source.scales);
    if (!in) throw InputError("cannot open scales " + source.scales.string());
    d.scales = load_scales(in);
  }
  if (!source.checkpoint.empty()) {
    std::ifstream in(source.checkpoint, std::ios::binary);
    if (!in) throw InputError("cannot open checkpoint " + source.checkpoint.string());
    d.checkpoint = std::make_shared<const PolicyCheckpoint>(load_checkpoint(in));
  }
  return d;
}

namespace {

HttpResponse error(int status, const std::string& code, const std::string& detail,
                   const std::string& field = "") {
  return {status, error_body(code, detail, field)};
}

HttpResponse session_error(int status, const std::string& code, const std::string& detail,
                           std::size_t step_index, const std::string& field = "") {
  auto r = error(status, code, detail, field);
  r.body["step_index"] = step_index;
  return r;
}

std::vector<std::string> split_path(const std::string& path) {
  std::vector<std::string> parts;
  std::stringstream ss(path.substr(0, path.find('?')));
  for (std::string p; std::getline(ss, p, '/');) {
    if (!p.empty()) parts.push_back(p);
  }
  return parts;
}

std::optional<std::size_t> to_index(const std::string& s) {
  std::size_t v = 0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size() || s.empty()) return std::nullopt;
  return v;
}

Json cards(const PatternCatalog& catalog, const Summary& summary) {
  Json out = Json::array();
  for (const auto id : summary) out.push_back(itemset_card(catalog, id));
  return out;
}

Json bootstrap_json(const Session& s) {
  return {{"result", s.bootstrap()},
          {"raw", components_to_json(s.bootstrap_breakdown().raw)},
          {"scaled", components_to_json(s.bootstrap_breakdown().scaled)},
          {"weights", weights_to_json(s.bootstrap_weights())},
          {"utility", s.bootstrap_breakdown().utility},
          {"seen", s.bootstrap().size()}};
}

Json pipeline_json(const Session& s) {
  Json steps = Json::array();
  SeenSet seen;
  seen.add(s.bootstrap());
  for (std::size_t i = 0; i < s.history().size(); ++i) {
    seen.add(s.history()[i].result);
    steps.push_back(step_to_json(s.history()[i], i + 1, s.catalog(), seen.size(), true));
  }
  return {{"bootstrap", bootstrap_json(s)}, {"steps", steps}, {"cumulated_utility", s.cumulated_utility()}};
}

Json descriptor(const std::string& id, const std::string& dataset, const Session& s) {
  const auto& cfg = s.config();
  Json j = {{"session_id", id},
            {"dataset", dataset},
            {"mode", to_string(cfg.mode)},
            {"strategy", to_string(cfg.strategy)},
            {"config", config_to_json(cfg)},
            {"step_index", s.step_index()},
            {"t", cfg.t_total},
            {"terminal", s.terminal()},
            {"seen", s.seen().size()},
            {"summary", cards(s.catalog(), s.current())},
            {"bootstrap", bootstrap_json(s)},
            {"cumulated_utility", s.cumulated_utility()}};
  j["weights"] = s.terminal() ? weights_to_json(s.history().empty() ? s.bootstrap_weights()
                                                                      : s.history().back().weights)
                              : weights_to_json(s.next_weights());
  return j;
}

Json parse_body(const std::string& body) {
  if (body.empty()) return Json::object();
  return Json::parse(body);
}

}  // namespace

Service::Service(std::vector<Dataset> datasets) : datasets_(std::move(datasets)) {
  for (std::size_t i = 0; i < datasets_.size(); ++i) {
    if (!datasets_[i].catalog) throw PreconditionError("dataset " + datasets_[i].id + " has no catalog");
    for (std::size_t j = 0; j < i; ++j) {
      if (datasets_[j].id == datasets_[i].id) throw ConfigError("serve.datasets[]", "duplicate dataset id " + datasets_[i].id);
    }
  }
}

std::shared_ptr<Service::Slot> Service::find_slot(const std::string& id) const {
  std::shared_lock lock(sessions_mu_);
  const auto it = sessions_.find(id);
  return it == sessions_.end() ? nullptr : it->second;
}

const Dataset* Service::find_dataset(const std::string& id) const {
  for (const auto& d : datasets_) {
    if (d.id == id) return &d;
  }
  return nullptr;
}

std::unique_ptr<Planner> Service::planner_for(const Session& session, const Dataset& dataset) const {
  switch (session.config().strategy) {
    case StrategyKind::top1sum: return std::make_unique<Top1SumPlanner>();
    case StrategyKind::random: return std::make_unique<RandomPlanner>(session.config().seed + session.step_index());
    case StrategyKind::rlsum:
      if (!dataset.checkpoint) throw ConfigError("strategy", "dataset " + dataset.id + " has no policy checkpoint");
      return std::make_unique<RlPlanner>(dataset.checkpoint, SelectMode::greedy, session.config().seed);
  }
  throw PreconditionError("unknown strategy");
}

HttpResponse Service::handle(const std::string& method, const std::string& path,
                             const std::map<std::string, std::string>& query, const std::string& body) {
  const auto parts = split_path(path);
  try {
    if (parts.size() == 1 && parts[0] == "sessions") {
      if (method == "POST") return create_session(body);
    } else if (parts.size() == 2 && parts[0] == "sessions") {
      if (method == "GET") return get_session(parts[1]);
    } else if (parts.size() == 3 && parts[0] == "sessions") {
      if (parts[2] == "steps" && method == "POST") return post_step(parts[1], body);
      if (parts[2] == "suggestions" && method == "GET") return suggestions(parts[1], query);
      if (parts[2] == "pipeline" && method == "GET") return pipeline(parts[1]);
      if (parts[2] != "steps" && parts[2] != "suggestions" && parts[2] != "pipeline") {
        return error(404, "not_found", "no route for " + path);
      }
    } else if (parts.size() == 1 && parts[0] == "datasets") {
      if (method == "GET") return list_datasets();
    } else if (parts.size() == 4 && parts[0] == "datasets" && parts[2] == "itemsets") {
      if (method == "GET") return itemset(parts[1], parts[3]);
    } else {
      return error(404, "not_found", "no route for " + path);
    }
    return error(405, "method_not_allowed", method + " is not allowed on " + path);
  } catch (const Json::exception& e) {
    return error(400, "bad_request", std::string("malformed JSON: ") + e.what());
  } catch (const ConfigError& e) {
    return error(400, "invalid_config", e.what(), e.field());
  } catch (const std::exception& e) {
    return error(500, "internal", e.what());
  }
}

HttpResponse Service::create_session(const std::string& body) {
  const Json req = parse_body(body);
  if (!req.is_object()) return error(400, "bad_request", "request body must be a JSON object");
  if (!req.contains("dataset") || !req["dataset"].is_string()) {
    return error(400, "invalid_config", "dataset id is required", "dataset");
  }
  const auto* dataset = find_dataset(req["dataset"].get<std::string>());
  if (!dataset) return error(404, "unknown_dataset", "no dataset '" + req["dataset"].get<std::string>() + "'", "dataset");
  SessionConfig defaults;
  defaults.mode = GuidanceMode::manual;
  const SessionConfig cfg = config_from_json(req, defaults);
  if (cfg.strategy == StrategyKind::rlsum && !dataset->checkpoint) {
    return error(400, "invalid_config", "dataset " + dataset->id + " has no policy checkpoint", "strategy");
  }
  if (dataset->checkpoint && cfg.strategy == StrategyKind::rlsum &&
      dataset->checkpoint->layout != ActionSpaceLayout(cfg.k, dataset->catalog->attribute_count())) {
    return error(400, "invalid_config", "the dataset's policy was trained for a different k", "k");
  }
  std::shared_ptr<Session> session;
  try {
    session = std::make_shared<Session>(dataset->catalog, dataset->scales, cfg);
  } catch (const PreconditionError& e) {
    return error(400, "invalid_config", e.what(), "threshold");
  }
  Json extra;
  if (cfg.mode == GuidanceMode::full) {
    auto planner = planner_for(*session, *dataset);
    const auto run = run_full_pipeline(*session, *planner);
    extra = pipeline_json(*session);
    extra["stopped_early"] = run.stopped_early;
    if (run.stopped_early) extra["stop_reason"] = run.stop_reason;
  }
  const auto id = "s" + std::to_string(next_id_.fetch_add(1));
  auto slot = std::make_shared<Slot>();
  slot->dataset = dataset->id;
  std::atomic_store(&slot->snapshot, std::shared_ptr<const Session>(session));
  {
    std::unique_lock lock(sessions_mu_);
    sessions_[id] = slot;
  }
  Json out = descriptor(id, dataset->id, *session);
  if (!extra.is_null()) out["pipeline"] = extra;
  return {201, out};
}

HttpResponse Service::get_session(const std::string& id) const {
  const auto slot = find_slot(id);
  if (!slot) return error(404, "unknown_session", "no session '" + id + "'");
  const auto s = std::atomic_load(&slot->snapshot);
  return {200, descriptor(id, slot->dataset, *s)};
}

HttpResponse Service::post_step(const std::string& id, const std::string& body) {
  const auto slot = find_slot(id);
  if (!slot) return error(404, "unknown_session", "no session '" + id + "'");
  const Json req = parse_body(body);
  std::lock_guard lock(slot->step_mu);
  const auto current = std::atomic_load(&slot->snapshot);
  const auto index = current->step_index();
  if (!req.is_object() || !req.contains("seq") || !req["seq"].is_number_integer()) {
    return session_error(400, "invalid_request", "seq (the step index the step applies to) is required", index, "seq");
  }
  if (req["seq"].get<std::int64_t>() != static_cast<std::int64_t>(index)) {
    return session_error(409, "stale_step",
                         "seq " + req["seq"].dump() + " does not match step_index " + std::to_string(index), index,
                         "seq");
  }
  if (current->terminal()) {
    return session_error(409, "terminal_session", "the pipeline already holds t summaries", index);
  }
  if (!req.contains("action")) return session_error(400, "invalid_action", "action is required", index, "action");
  Action action;
  try {
    action = action_from_json(req["action"], current->catalog());
  } catch (const ConfigError& e) {
    return session_error(400, "invalid_action", e.what(), index, e.field());
  }
  std::string why;
  auto step = current->plan(action, &why);
  if (!step) return session_error(422, "invalid_action", why, index, "action");
  auto next = std::make_shared<Session>(*current);
  next->apply(*step);
  std::atomic_store(&slot->snapshot, std::shared_ptr<const Session>(next));
  Json out = {{"step_index", next->step_index()},
              {"step", step_to_json(*step, next->step_index(), next->catalog(), next->seen().size(), true)},
              {"summary", cards(next->catalog(), next->current())},
              {"seen", next->seen().size()},
              {"terminal", next->terminal()}};
  return {200, out};
}

HttpResponse Service::suggestions(const std::string& id, const std::map<std::string, std::string>& query) const {
  const auto slot = find_slot(id);
  if (!slot) return error(404, "unknown_session", "no session '" + id + "'");
  const auto s = std::atomic_load(&slot->snapshot);
  const auto index = s->step_index();
  if (s->config().mode == GuidanceMode::manual) {
    return session_error(409, "wrong_mode", "suggestions need a partial or full guidance session", index, "mode");
  }
  if (s->terminal()) return session_error(409, "terminal_session", "the pipeline is complete", index);
  ActionConstraints c;
  std::size_t n = 5;
  const auto get = [&](const char* key) -> std::optional<std::string> {
    const auto it = query.find(key);
    if (it == query.end() || it->second.empty()) return std::nullopt;
    return it->second;
  };
  if (const auto op = get("operator")) {
    try {
      c.op = parse_operator(*op);
    } catch (const ConfigError& e) {
      return session_error(400, "invalid_request", e.what(), index, "operator");
    }
  }
  if (const auto it = get("itemset")) {
    const auto v = to_index(*it);
    if (!v) return session_error(400, "invalid_request", "itemset must be an integer", index, "itemset");
    c.itemset = static_cast<ItemsetId>(*v);
  }
  if (const auto it = get("attribute")) {
    const auto names = s->catalog().attribute_names();
    const auto pos = std::find(names.begin(), names.end(), *it);
    if (pos != names.end()) {
      c.attribute = static_cast<std::uint32_t>(pos - names.begin());
    } else if (const auto v = to_index(*it)) {
      c.attribute = static_cast<std::uint32_t>(*v);
    } else {
      return session_error(400, "invalid_request", "unknown attribute '" + *it + "'", index, "attribute");
    }
  }
  if (const auto it = get("n")) {
    const auto v = to_index(*it);
    if (!v || *v == 0) return session_error(400, "invalid_request", "n must be a positive integer", index, "n");
    n = *v;
  }
  const auto* dataset = find_dataset(slot->dataset);
  auto planner = planner_for(*s, *dataset);
  std::vector<ScoredAction> ranked;
  try {
    ranked = suggest_actions(*s, *planner, c, n);
  } catch (const PreconditionError& e) {
    return session_error(422, "no_suggestions", e.what(), index);
  }
  Json list = Json::array();
  for (const auto& r : ranked) list.push_back({{"action", action_to_json(r.action, s->catalog())}, {"score", r.score}});
  return {200, {{"step_index", index}, {"strategy", planner->name()}, {"suggestions", list}}};
}

HttpResponse Service::pipeline(const std::string& id) const {
  const auto slot = find_slot(id);
  if (!slot) return error(404, "unknown_session", "no session '" + id + "'");
  const auto s = std::atomic_load(&slot->snapshot);
  Json out = pipeline_json(*s);
  out["step_index"] = s->step_index();
  out["t"] = s->config().t_total;
  return {200, out};
}

std::optional<std::string> Service::pipeline_log_text(const std::string& session_id, bool include_timing) const {
  const auto slot = find_slot(session_id);
  if (!slot) return std::nullopt;
  return pipeline_log(*std::atomic_load(&slot->snapshot), {include_timing});
}

HttpResponse Service::list_datasets() const {
  Json list = Json::array();
  for (const auto& d : datasets_) {
    list.push_back({{"id", d.id},
                    {"itemsets", d.catalog->size()},
                    {"rows", d.catalog->data().rows()},
                    {"attributes", d.catalog->attribute_names()},
                    {"min_support", d.catalog->min_support()},
                    {"scaled", d.scales.enabled},
                    {"policy", d.checkpoint != nullptr}});
  }
  return {200, {{"datasets", list}}};
}

HttpResponse Service::itemset(const std::string& dataset, const std::string& iid) const {
  const auto* d = find_dataset(dataset);
  if (!d) return error(404, "unknown_dataset", "no dataset '" + dataset + "'");
  const auto v = to_index(iid);
  if (!v || *v >= d->catalog->size()) return error(404, "unknown_itemset", "no itemset '" + iid + "'");
  return {200, itemset_card(*d->catalog, static_cast<ItemsetId>(*v))};
}

void serve_http(Service& service, const std::string& addr) {
  const auto colon = addr.rfind(':');
  if (colon == std::string::npos) throw ConfigError("serve.addr", "serve.addr must be host:port");
  const auto port = to_index(addr.substr(colon + 1));
  if (!port || *port > 65535) throw ConfigError("serve.addr", "bad port in '" + addr + "'");
  httplib::Server server;
  auto route = [&service](const httplib::Request& req, httplib::Response& res) {
    std::map<std::string, std::string> query;
    for (const auto& [k, v] : req.params) query[k] = v;
    const auto parts = split_path(req.path);
    if (req.method == "GET" && parts.size() == 3 && parts[0] == "sessions" && parts[2] == "pipeline" &&
        query.contains("format") && query["format"] == "log") {
      if (const auto text = service.pipeline_log_text(parts[1], query["timing"] != "0")) {
        res.set_content(*text, "application/x-ndjson");
        return;
      }
    }
    const auto r = service.handle(req.method, req.path, query, req.body);
    res.status = r.status;
    res.set_content(r.body.dump(), "application/json");
  };
  server.Get(".*", route);
  server.Post(".*", route);
  server.Put(".*", route);
  server.Delete(".*", route);
  if (!server.listen(addr.substr(0, colon), static_cast<int>(*port))) {
    throw InputError("cannot listen on " + addr);
  }
}

}  // namespace edasum
