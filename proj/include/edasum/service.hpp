#pragma once

#include <atomic>
#include <map>
#include <memory>
#include <mutex>
#include <shared_mutex>
#include <string>
#include <vector>

#include "edasum/config.hpp"
#include "edasum/json_io.hpp"
#include "edasum/rl.hpp"

namespace edasum {

struct Dataset {
  std::string id;
  std::shared_ptr<const PatternCatalog> catalog;
  ComponentScales scales;
  std::shared_ptr<const PolicyCheckpoint> checkpoint;  // may be null
};

// Loads the catalog and the optional scales and checkpoint files.
Dataset load_dataset(const DatasetSource& source);

struct HttpResponse {
  int status = 200;
  Json body;
};

// Transport-independent JSON API over in-memory sessions. Thread-safe: steps
// on one session are serialized, reads work on published snapshots.
class Service {
 public:
  explicit Service(std::vector<Dataset> datasets);

  HttpResponse handle(const std::string& method, const std::string& path,
                      const std::map<std::string, std::string>& query, const std::string& body);

  // NDJSON pipeline log of a session, or nullopt for unknown ids.
  std::optional<std::string> pipeline_log_text(const std::string& session_id, bool include_timing) const;

 private:
  struct Slot {
    std::string dataset;
    std::mutex step_mu;
    std::shared_ptr<const Session> snapshot;
  };

  std::shared_ptr<Slot> find_slot(const std::string& id) const;
  const Dataset* find_dataset(const std::string& id) const;
  std::unique_ptr<Planner> planner_for(const Session& session, const Dataset& dataset) const;

  HttpResponse create_session(const std::string& body);
  HttpResponse get_session(const std::string& id) const;
  HttpResponse post_step(const std::string& id, const std::string& body);
  HttpResponse suggestions(const std::string& id, const std::map<std::string, std::string>& query) const;
  HttpResponse pipeline(const std::string& id) const;
  HttpResponse list_datasets() const;
  HttpResponse itemset(const std::string& dataset, const std::string& iid) const;

  std::vector<Dataset> datasets_;
  mutable std::shared_mutex sessions_mu_;
  std::map<std::string, std::shared_ptr<Slot>> sessions_;
  std::atomic<std::size_t> next_id_{1};
};

// Error body: {"error": code, "detail": text, "field": optional}.
Json error_body(const std::string& code, const std::string& detail, const std::string& field = "");

// Blocks serving `service` over HTTP on host:port.
void serve_http(Service& service, const std::string& addr);

}  // namespace edasum
