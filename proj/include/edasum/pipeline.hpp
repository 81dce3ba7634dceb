#pragma once

#include <chrono>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "edasum/metrics.hpp"
#include "edasum/operators.hpp"
#include "edasum/pattern.hpp"
#include "edasum/random.hpp"

namespace edasum {

enum class GuidanceMode { manual, partial, full };
enum class StrategyKind { top1sum, rlsum, random };

GuidanceMode parse_mode(std::string_view name);
StrategyKind parse_strategy(std::string_view name);
std::string to_string(GuidanceMode mode);
std::string to_string(StrategyKind strategy);

struct SessionConfig {
  std::size_t k = 10;
  // Pipeline length counted in summaries, the bootstrap included.
  std::size_t t_total = 50;
  GuidanceMode mode = GuidanceMode::full;
  StrategyKind strategy = StrategyKind::top1sum;
  UtilityWeights weights;
  double swap_threshold = 2.0;
  OperatorSet operators = OperatorSet::all;
  std::uint64_t seed = 0;
  // Threads used to score candidates; 1 scores sequentially.
  std::size_t workers = 1;

  void validate() const;
};

struct PipelineStep {
  Action action;
  Summary result;
  UtilityBreakdown breakdown;
  ResolvedWeights weights;
  double wall_ms = 0.0;
  // Part of wall_ms spent choosing the action, excluding the execution of the
  // chosen action itself. Equals wall_ms for planners that must execute every
  // candidate to choose.
  double decide_ms = 0.0;
  // History length of the session this step was planned against.
  std::size_t planned_at = 0;
  // Actions enumerated when the step was planned (0 for manual steps).
  std::size_t candidates = 0;
};

class Session {
 public:
  // Runs SWAP to produce the bootstrap summary and marks it seen.
  Session(std::shared_ptr<const PatternCatalog> catalog, ComponentScales scales, SessionConfig config);

  const PatternCatalog& catalog() const { return *catalog_; }
  const std::shared_ptr<const PatternCatalog>& catalog_ptr() const { return catalog_; }
  const ComponentScales& scales() const { return scales_; }
  const SessionConfig& config() const { return config_; }

  const Summary& bootstrap() const { return bootstrap_; }
  const UtilityBreakdown& bootstrap_breakdown() const { return bootstrap_breakdown_; }
  const ResolvedWeights& bootstrap_weights() const { return bootstrap_weights_; }
  const Summary& current() const { return current_; }
  const SeenSet& seen() const { return seen_; }
  const std::vector<PipelineStep>& history() const { return history_; }
  std::size_t step_index() const { return history_.size(); }
  bool terminal() const { return history_.size() + 1 >= config_.t_total; }

  // Weights for the next summary, from the seen count before it is shown.
  ResolvedWeights next_weights() const;
  // Utility the given summary would receive as the next step.
  UtilityBreakdown evaluate(const Summary& candidate) const;
  UtilityBreakdown evaluate(const Summary& candidate, const ResolvedWeights& weights) const;
  std::vector<Action> candidate_actions() const;

  // Executes `action` against the current summary without mutating the
  // session. Returns nullopt with `why` filled when the action is invalid.
  std::optional<PipelineStep> plan(const Action& action, std::string* why = nullptr) const;
  // Throws StateError for stale or out-of-bounds steps.
  void apply(const PipelineStep& step);

  // Sum of utilities over every summary shown, bootstrap included.
  double cumulated_utility() const;

 private:
  std::shared_ptr<const PatternCatalog> catalog_;
  ComponentScales scales_;
  SessionConfig config_;
  Summary bootstrap_;
  UtilityBreakdown bootstrap_breakdown_;
  ResolvedWeights bootstrap_weights_;
  Summary current_;
  SeenSet seen_;
  std::vector<PipelineStep> history_;
};

struct ScoredAction {
  Action action;
  double score = 0.0;
};

// Chooses next steps for a session. Implementations are not shared across
// threads.
class Planner {
 public:
  virtual ~Planner() = default;
  virtual std::string name() const = 0;
  // nullopt when no valid action exists.
  virtual std::optional<PipelineStep> next(const Session& session) = 0;
  // Scores for the valid members of `candidates`, in candidate order.
  virtual std::vector<ScoredAction> score(const Session& session,
                                          const std::vector<Action>& candidates) = 0;
};

// Exhaustive greedy planner: the valid action whose summary has the highest
// utility, earliest in enumeration order on ties.
class Top1SumPlanner : public Planner {
 public:
  std::string name() const override { return "top1sum"; }
  std::optional<PipelineStep> next(const Session& session) override;
  std::vector<ScoredAction> score(const Session& session, const std::vector<Action>& candidates) override;
};

// Uniform choice among valid actions.
class RandomPlanner : public Planner {
 public:
  explicit RandomPlanner(std::uint64_t seed) : rng_(seed) {}
  std::string name() const override { return "random"; }
  std::optional<PipelineStep> next(const Session& session) override;
  std::vector<ScoredAction> score(const Session& session, const std::vector<Action>& candidates) override;

 private:
  Rng rng_;
};

// Top1Sum step without mutating the session. Throws StateError when the
// session is terminal or no action is valid.
PipelineStep top1sum_next(const Session& session);

struct PipelineRun {
  std::vector<PipelineStep> steps;
  bool stopped_early = false;
  std::string stop_reason;
  double cumulated_utility = 0.0;
};

// Plans and applies steps until the session is terminal or no action is valid.
PipelineRun run_full_pipeline(Session& session, Planner& planner);

struct ActionConstraints {
  std::optional<ItemsetId> itemset;
  std::optional<Operator> op;
  std::optional<std::uint32_t> attribute;
};

// Candidates matching `constraints`, ranked by the planner's score (stable in
// enumeration order), at most n. Throws PreconditionError when nothing matches.
std::vector<ScoredAction> suggest_actions(const Session& session, Planner& planner,
                                          const ActionConstraints& constraints, std::size_t n);

}  // namespace edasum
