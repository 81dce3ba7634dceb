#pragma once

// JSON encodings shared by the pipeline log, the HTTP service and the CLI.

#include <iosfwd>
#include <memory>
#include <string>

#include <json.hpp>

#include "edasum/pipeline.hpp"

namespace edasum {

using Json = nlohmann::json;

Json action_to_json(const Action& action, const PatternCatalog& catalog);
// Attribute may be given by name or index. Throws ConfigError naming the field.
Action action_from_json(const Json& j, const PatternCatalog& catalog);

Json components_to_json(const Components& c);
Components components_from_json(const Json& j);
Json weights_to_json(const ResolvedWeights& w);
Json breakdown_to_json(const UtilityBreakdown& b);

Json config_to_json(const SessionConfig& config);
SessionConfig config_from_json(const Json& j, SessionConfig base = {});
Json scales_to_json(const ComponentScales& scales);
ComponentScales scales_from_json(const Json& j);

// Itemset card: id, size, uniformity, description as attribute name -> bin label.
Json itemset_card(const PatternCatalog& catalog, ItemsetId id);

struct LogOptions {
  // Wall-clock fields make logs differ between otherwise identical runs.
  bool include_timing = true;
};

// Line-delimited JSON: one session header, one bootstrap record, then one
// record per step.
void write_pipeline_log(const Session& session, std::ostream& os, LogOptions options = {});
std::string pipeline_log(const Session& session, LogOptions options = {});
Json step_to_json(const PipelineStep& step, std::size_t index, const PatternCatalog& catalog,
                  std::size_t seen_after, bool include_timing);

struct ReplayReport {
  std::size_t steps = 0;
  // Largest absolute difference over every raw/scaled component and utility.
  double max_abs_error = 0.0;
  bool results_match = true;
  std::string first_mismatch;
};

// Rebuilds the session from the log header, re-executes every logged action
// and compares results and breakdowns with the logged values.
ReplayReport replay_pipeline_log(std::istream& is, std::shared_ptr<const PatternCatalog> catalog);

}  // namespace edasum
