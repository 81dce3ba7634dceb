#pragma once

#include <array>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "edasum/pipeline.hpp"
#include "edasum/rl.hpp"

namespace edasum {

struct GroundTruthSet {
  std::string label;
  MemberSet members;
};

// Labeled, pairwise disjoint item sets.
class GroundTruth {
 public:
  GroundTruth() = default;
  // Throws InputError on duplicate labels, overlapping sets or empty sets.
  explicit GroundTruth(std::vector<GroundTruthSet> sets);

  std::size_t size() const { return sets_.size(); }
  bool empty() const { return sets_.empty(); }
  const std::vector<GroundTruthSet>& sets() const { return sets_; }

 private:
  std::vector<GroundTruthSet> sets_;
};

// One line per set: label<TAB>id,id,...
GroundTruth parse_ground_truth(const std::string& text);
GroundTruth load_ground_truth(const std::filesystem::path& path);
void save_ground_truth(const GroundTruth& gt, std::ostream& os);

struct RelevanceTrace {
  std::size_t discovered = 0;
  // cumulative[j] = sets discovered by summary j; entry 0 is the bootstrap.
  std::vector<std::size_t> cumulative;
};

// A set is discovered the first time a displayed itemset reaches Jaccard
// similarity >= threshold with it.
RelevanceTrace relevance(const PatternCatalog& catalog, const std::vector<Summary>& summaries,
                         const GroundTruth& gt, double threshold = 0.8);
std::vector<Summary> displayed_summaries(const Session& session);

// Fraction of steps per operator, in operator enumeration order.
std::array<double, kOperatorCount> operator_usage(const std::vector<PipelineStep>& steps);

struct Variant {
  std::string name;
  StrategyKind strategy = StrategyKind::top1sum;
  UtilityWeights weights;
  std::shared_ptr<const PolicyCheckpoint> checkpoint;  // rlsum only
};

// "random", "top1sum_HU", "rlsum_BL", "top1sum_DC", ... The suffix is a preset
// or an evolving scheme.
Variant parse_variant(const std::string& name, std::shared_ptr<const PolicyCheckpoint> checkpoint = nullptr);

struct BenchmarkRow {
  std::string variant;
  std::uint64_t seed = 0;
  std::size_t step = 0;  // 0 = bootstrap
  std::string op;        // "swap" for the bootstrap
  Components raw;
  Components scaled;
  double utility = 0.0;
  double cum_utility = 0.0;
  std::size_t cum_relevance = 0;
  double wall_ms = 0.0;
};

struct BenchmarkOptions {
  SessionConfig base;  // k, t, threshold, operators
  std::vector<std::uint64_t> seeds{0};
  double relevance_threshold = 0.8;
  std::size_t workers = 1;
};

// Runs every (variant, seed) pipeline. Rows are ordered by variant (input
// order), seed, step regardless of scheduling.
std::vector<BenchmarkRow> run_benchmark(std::shared_ptr<const PatternCatalog> catalog,
                                        const ComponentScales& scales, const GroundTruth* gt,
                                        const std::vector<Variant>& variants,
                                        const BenchmarkOptions& options);

void write_benchmark_csv(const std::vector<BenchmarkRow>& rows, std::ostream& os);
std::vector<BenchmarkRow> read_benchmark_csv(std::istream& is);

struct RunTotal {
  std::string variant;
  std::uint64_t seed = 0;
  double cum_utility = 0.0;
  std::size_t cum_relevance = 0;
  std::size_t steps = 0;
};

// Totals recomputed from the per-step columns.
std::vector<RunTotal> aggregate(const std::vector<BenchmarkRow>& rows);

}  // namespace edasum
