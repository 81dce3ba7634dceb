#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "edasum/pattern.hpp"

namespace edasum {

// Ordered itemset ids shown at one step; no duplicates.
using Summary = std::vector<ItemsetId>;

// Itemsets displayed so far in a session. Only grows.
class SeenSet {
 public:
  void add(std::span<const ItemsetId> ids) { ids_.insert(ids.begin(), ids.end()); }
  bool contains(ItemsetId id) const { return ids_.contains(id); }
  std::size_t size() const { return ids_.size(); }
  std::size_t count_new(std::span<const ItemsetId> ids) const;
  std::vector<ItemsetId> sorted() const;
  friend bool operator==(const SeenSet&, const SeenSet&) = default;

 private:
  std::unordered_set<ItemsetId> ids_;
};

inline constexpr double kUniformityEpsilon = 1e-6;
inline constexpr double kScaleFloor = 1e-9;

template <typename DerivedA, typename DerivedB>
double manhattan(const Eigen::MatrixBase<DerivedA>& a, const Eigen::MatrixBase<DerivedB>& b) {
  return (a - b).cwiseAbs().sum();
}

struct ItemsetStats {
  Eigen::VectorXd mean;
  Eigen::VectorXd stddev;  // population standard deviation
};

// Per-attribute mean and dispersion of the members' bin values.
ItemsetStats itemset_stats(std::span<const ItemId> members, const BinnedDataset& data);

// |A| / max(eps, sum of per-attribute sd).
inline double uniformity_from_dispersion(std::size_t attribute_count, double sd_sum) {
  return static_cast<double>(attribute_count) / std::max(kUniformityEpsilon, sd_sum);
}

double uniformity_itemset(const Itemset& itemset, const BinnedDataset& data);
double uniformity_summary(const Summary& summary, const PatternCatalog& catalog);
double diversity_summary(const Summary& summary, const PatternCatalog& catalog);
double novelty_summary(const Summary& summary, const SeenSet& seen);

enum class WeightScheme { fixed, increasing_novelty, decreasing_novelty };
enum class WeightPreset { HU, HD, HN, BL };

WeightPreset parse_preset(std::string_view name);
WeightScheme parse_scheme(std::string_view name);
std::string to_string(WeightPreset preset);
std::string to_string(WeightScheme scheme);

struct UtilityWeights {
  WeightScheme scheme = WeightScheme::fixed;
  WeightPreset preset = WeightPreset::BL;
};

struct ResolvedWeights {
  double alpha = 1.0 / 3.0;
  double beta = 1.0 / 3.0;
  double gamma = 1.0 / 3.0;
  friend bool operator==(const ResolvedWeights&, const ResolvedWeights&) = default;
};

// Weights for pipeline position `step` (1-based), given how many itemsets the
// user has seen before it.
ResolvedWeights resolve_weights(const UtilityWeights& weights, std::size_t step,
                                std::size_t seen_count, std::size_t k, std::size_t t_total);

struct Components {
  double uniformity = 0.0;
  double diversity = 0.0;
  double novelty = 0.0;
};

struct ComponentStats {
  double mean = 0.0;
  double sd = 1.0;
  double scale(double x) const { return (x - mean) / sd; }
};

struct ComponentScales {
  ComponentStats uniformity;
  ComponentStats diversity;
  ComponentStats novelty;
  bool enabled = false;
  std::size_t sample_size = 0;
  std::uint64_t seed = 0;
  std::size_t k = 0;

  Components apply(const Components& raw) const;
};

struct UtilityBreakdown {
  Components raw;
  Components scaled;
  double utility = 0.0;
};

Components raw_components(const Summary& summary, const SeenSet& seen, const PatternCatalog& catalog);
UtilityBreakdown combine(const Components& raw, const ResolvedWeights& weights,
                         const ComponentScales& scales);
UtilityBreakdown utility(const Summary& summary, const ResolvedWeights& weights, const SeenSet& seen,
                         const ComponentScales& scales, const PatternCatalog& catalog);

// Z-normalization statistics over `sample_size` uniformly drawn k-summaries.
// Each sample's novelty is measured against a seen-snapshot in which every
// summary member is marked seen with a per-sample probability drawn uniformly
// from [0, 1).
ComponentScales calibrate_scales(const PatternCatalog& catalog, std::size_t k,
                                 std::size_t sample_size, std::uint64_t seed);

// Raw component samples drawn by calibrate_scales, for inspection.
std::vector<Components> calibration_sample(const PatternCatalog& catalog, std::size_t k,
                                           std::size_t sample_size, std::uint64_t seed);

void save_scales(const ComponentScales& scales, std::ostream& os);
ComponentScales load_scales(std::istream& is);

}  // namespace edasum
