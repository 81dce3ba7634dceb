#include "edasum/pipeline.hpp"

#include <algorithm>
#include <thread>

#include "edasum/error.hpp"
#include "edasum/swap.hpp"

namespace edasum {

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

}  // namespace

GuidanceMode parse_mode(std::string_view name) {
  if (name == "manual") return GuidanceMode::manual;
  if (name == "partial") return GuidanceMode::partial;
  if (name == "full") return GuidanceMode::full;
  throw ConfigError("mode", "unknown guidance mode '" + std::string(name) + "'");
}

StrategyKind parse_strategy(std::string_view name) {
  if (name == "top1sum") return StrategyKind::top1sum;
  if (name == "rlsum") return StrategyKind::rlsum;
  if (name == "random") return StrategyKind::random;
  throw ConfigError("strategy", "unknown strategy '" + std::string(name) + "'");
}

std::string to_string(GuidanceMode mode) {
  switch (mode) {
    case GuidanceMode::manual: return "manual";
    case GuidanceMode::partial: return "partial";
    case GuidanceMode::full: return "full";
  }
  return "full";
}

std::string to_string(StrategyKind strategy) {
  switch (strategy) {
    case StrategyKind::top1sum: return "top1sum";
    case StrategyKind::rlsum: return "rlsum";
    case StrategyKind::random: return "random";
  }
  return "top1sum";
}

void SessionConfig::validate() const {
  if (k < 1) throw ConfigError("k", "k must be >= 1");
  if (t_total < 1) throw ConfigError("t", "t must be >= 1");
  if (!(swap_threshold >= 0.0)) throw ConfigError("swap.threshold", "threshold must be >= 0");
  if (workers < 1) throw ConfigError("workers", "workers must be >= 1");
}

// --- Session ---------------------------------------------------------------

Session::Session(std::shared_ptr<const PatternCatalog> catalog, ComponentScales scales,
                 SessionConfig config)
    : catalog_(std::move(catalog)), scales_(scales), config_(config) {
  if (!catalog_ || catalog_->empty()) throw PreconditionError("session needs a nonempty catalog");
  config_.validate();
  bootstrap_ = swap_summary(*catalog_, config_.k, config_.swap_threshold);
  bootstrap_weights_ = resolve_weights(config_.weights, 1, 0, config_.k, config_.t_total);
  bootstrap_breakdown_ = utility(bootstrap_, bootstrap_weights_, seen_, scales_, *catalog_);
  current_ = bootstrap_;
  seen_.add(bootstrap_);
}

ResolvedWeights Session::next_weights() const {
  return resolve_weights(config_.weights, history_.size() + 2, seen_.size(), config_.k,
                         config_.t_total);
}

UtilityBreakdown Session::evaluate(const Summary& candidate) const {
  return evaluate(candidate, next_weights());
}

UtilityBreakdown Session::evaluate(const Summary& candidate, const ResolvedWeights& weights) const {
  return utility(candidate, weights, seen_, scales_, *catalog_);
}

std::vector<Action> Session::candidate_actions() const {
  return enumerate_actions(*catalog_, current_, config_.operators);
}

std::optional<PipelineStep> Session::plan(const Action& action, std::string* why) const {
  const auto start = Clock::now();
  auto fail = [&](std::string reason) -> std::optional<PipelineStep> {
    if (why) *why = std::move(reason);
    return std::nullopt;
  };
  if (terminal()) return fail("pipeline is complete");
  if (std::find(current_.begin(), current_.end(), action.itemset) == current_.end()) {
    return fail("itemset " + std::to_string(action.itemset) + " is not in the current summary");
  }
  if (!allows(config_.operators, action.op)) {
    return fail(std::string(to_string(action.op)) + " is disabled by the operator set");
  }
  auto result = explore(*catalog_, action, config_.k);
  if (!result.valid()) return fail(result.reason);
  PipelineStep step;
  step.action = action;
  step.weights = next_weights();
  step.breakdown = evaluate(result.summary, step.weights);
  step.result = std::move(result.summary);
  step.planned_at = history_.size();
  step.wall_ms = elapsed_ms(start);
  return step;
}

void Session::apply(const PipelineStep& step) {
  if (terminal()) throw StateError("pipeline is complete");
  if (step.planned_at != history_.size()) {
    throw StateError("stale step: planned at step " + std::to_string(step.planned_at) +
                     ", session is at step " + std::to_string(history_.size()));
  }
  if (std::find(current_.begin(), current_.end(), step.action.itemset) == current_.end()) {
    throw StateError("stale step: itemset is not in the current summary");
  }
  if (step.result.empty()) throw StateError("step has an empty result");
  current_ = step.result;
  seen_.add(step.result);
  history_.push_back(step);
}

double Session::cumulated_utility() const {
  double total = bootstrap_breakdown_.utility;
  for (const auto& s : history_) total += s.breakdown.utility;
  return total;
}

// --- Planners --------------------------------------------------------------

namespace {

std::vector<std::optional<PipelineStep>> plan_all(const Session& session,
                                                  const std::vector<Action>& actions) {
  std::vector<std::optional<PipelineStep>> planned(actions.size());
  const std::size_t workers = std::min(session.config().workers, std::max<std::size_t>(1, actions.size()));
  if (workers <= 1) {
    for (std::size_t i = 0; i < actions.size(); ++i) planned[i] = session.plan(actions[i]);
    return planned;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      for (std::size_t i = w; i < actions.size(); i += workers) planned[i] = session.plan(actions[i]);
    });
  }
  for (auto& t : pool) t.join();
  return planned;
}

}  // namespace

std::optional<PipelineStep> Top1SumPlanner::next(const Session& session) {
  if (session.terminal()) return std::nullopt;
  const auto start = Clock::now();
  const auto actions = session.candidate_actions();
  auto planned = plan_all(session, actions);
  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < planned.size(); ++i) {
    if (!planned[i]) continue;
    if (!best || planned[i]->breakdown.utility > planned[*best]->breakdown.utility) best = i;
  }
  if (!best) return std::nullopt;
  PipelineStep step = std::move(*planned[*best]);
  step.candidates = actions.size();
  step.wall_ms = elapsed_ms(start);
  step.decide_ms = step.wall_ms;
  return step;
}

std::vector<ScoredAction> Top1SumPlanner::score(const Session& session,
                                                const std::vector<Action>& candidates) {
  const auto planned = plan_all(session, candidates);
  std::vector<ScoredAction> out;
  for (std::size_t i = 0; i < planned.size(); ++i) {
    if (planned[i]) out.push_back({candidates[i], planned[i]->breakdown.utility});
  }
  return out;
}

std::optional<PipelineStep> RandomPlanner::next(const Session& session) {
  if (session.terminal()) return std::nullopt;
  const auto start = Clock::now();
  auto actions = session.candidate_actions();
  const std::size_t enumerated = actions.size();
  while (!actions.empty()) {
    const auto pick = static_cast<std::size_t>(rng_.index(actions.size()));
    if (auto step = session.plan(actions[pick])) {
      const double exec_ms = step->wall_ms;
      step->candidates = enumerated;
      step->wall_ms = elapsed_ms(start);
      step->decide_ms = std::max(0.0, step->wall_ms - exec_ms);
      return step;
    }
    actions.erase(actions.begin() + static_cast<std::ptrdiff_t>(pick));
  }
  return std::nullopt;
}

std::vector<ScoredAction> RandomPlanner::score(const Session& session,
                                               const std::vector<Action>& candidates) {
  std::vector<ScoredAction> out;
  for (const auto& a : candidates) {
    if (session.plan(a)) out.push_back({a, rng_.unit()});
  }
  return out;
}

PipelineStep top1sum_next(const Session& session) {
  if (session.terminal()) throw StateError("pipeline is complete");
  Top1SumPlanner planner;
  auto step = planner.next(session);
  if (!step) throw StateError("no valid action on the current summary");
  return *step;
}

PipelineRun run_full_pipeline(Session& session, Planner& planner) {
  PipelineRun run;
  while (!session.terminal()) {
    auto step = planner.next(session);
    if (!step) {
      run.stopped_early = true;
      run.stop_reason = "no valid action at step " + std::to_string(session.step_index() + 1);
      break;
    }
    session.apply(*step);
  }
  run.steps = session.history();
  run.cumulated_utility = session.cumulated_utility();
  return run;
}

std::vector<ScoredAction> suggest_actions(const Session& session, Planner& planner,
                                          const ActionConstraints& constraints, std::size_t n) {
  if (constraints.itemset &&
      std::find(session.current().begin(), session.current().end(), *constraints.itemset) ==
          session.current().end()) {
    throw PreconditionError("constrained itemset is not in the current summary");
  }
  std::vector<Action> candidates;
  for (const auto& a : session.candidate_actions()) {
    if (constraints.itemset && a.itemset != *constraints.itemset) continue;
    if (constraints.op && a.op != *constraints.op) continue;
    if (constraints.attribute && a.attribute != constraints.attribute) continue;
    candidates.push_back(a);
  }
  auto scored = planner.score(session, candidates);
  if (scored.empty()) throw PreconditionError("constraints eliminate every candidate action");
  std::stable_sort(scored.begin(), scored.end(),
                   [](const ScoredAction& a, const ScoredAction& b) { return a.score > b.score; });
  if (scored.size() > n) scored.resize(n);
  return scored;
}

}  // namespace edasum
