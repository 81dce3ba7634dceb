#include "edasum/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

#include "edasum/error.hpp"
#include "edasum/random.hpp"

namespace edasum {

std::size_t SeenSet::count_new(std::span<const ItemsetId> ids) const {
  std::size_t n = 0;
  for (const auto id : ids) n += ids_.contains(id) ? 0 : 1;
  return n;
}

std::vector<ItemsetId> SeenSet::sorted() const {
  std::vector<ItemsetId> out(ids_.begin(), ids_.end());
  std::sort(out.begin(), out.end());
  return out;
}

ItemsetStats itemset_stats(std::span<const ItemId> members, const BinnedDataset& data) {
  const auto attrs = static_cast<Eigen::Index>(data.attribute_count());
  ItemsetStats stats{Eigen::VectorXd::Zero(attrs), Eigen::VectorXd::Zero(attrs)};
  if (members.empty()) return stats;
  for (const ItemId r : members) {
    const auto row = data.row(r);
    for (Eigen::Index a = 0; a < attrs; ++a) stats.mean[a] += row[static_cast<std::size_t>(a)];
  }
  const double n = static_cast<double>(members.size());
  stats.mean /= n;
  for (const ItemId r : members) {
    const auto row = data.row(r);
    for (Eigen::Index a = 0; a < attrs; ++a) {
      const double d = row[static_cast<std::size_t>(a)] - stats.mean[a];
      stats.stddev[a] += d * d;
    }
  }
  stats.stddev = (stats.stddev / n).cwiseSqrt();
  return stats;
}

double uniformity_itemset(const Itemset& itemset, const BinnedDataset& data) {
  if (itemset.members.empty()) throw PreconditionError("uniformity of an empty itemset");
  const auto stats = itemset_stats(itemset.members.ids(), data);
  return uniformity_from_dispersion(data.attribute_count(), stats.stddev.sum());
}

double uniformity_summary(const Summary& summary, const PatternCatalog& catalog) {
  if (summary.empty()) throw PreconditionError("uniformity of an empty summary");
  double lowest = std::numeric_limits<double>::infinity();
  for (const auto id : summary) lowest = std::min(lowest, catalog.uniformity(id));
  return lowest;
}

double diversity_summary(const Summary& summary, const PatternCatalog& catalog) {
  if (summary.size() <= 1) return 0.0;
  double lowest = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < summary.size(); ++i) {
    for (std::size_t j = i + 1; j < summary.size(); ++j) {
      lowest = std::min(lowest, manhattan(catalog.vector(summary[i]), catalog.vector(summary[j])));
    }
  }
  return lowest;
}

double novelty_summary(const Summary& summary, const SeenSet& seen) {
  if (summary.empty()) throw PreconditionError("novelty of an empty summary");
  return static_cast<double>(seen.count_new(summary)) / static_cast<double>(summary.size());
}

WeightPreset parse_preset(std::string_view name) {
  if (name == "HU") return WeightPreset::HU;
  if (name == "HD") return WeightPreset::HD;
  if (name == "HN") return WeightPreset::HN;
  if (name == "BL") return WeightPreset::BL;
  throw ConfigError("weights.preset", "unknown weight preset '" + std::string(name) + "'");
}

WeightScheme parse_scheme(std::string_view name) {
  if (name == "fixed") return WeightScheme::fixed;
  if (name == "increasing-novelty" || name == "IC") return WeightScheme::increasing_novelty;
  if (name == "decreasing-novelty" || name == "DC") return WeightScheme::decreasing_novelty;
  throw ConfigError("weights.scheme", "unknown weight scheme '" + std::string(name) + "'");
}

std::string to_string(WeightPreset preset) {
  switch (preset) {
    case WeightPreset::HU: return "HU";
    case WeightPreset::HD: return "HD";
    case WeightPreset::HN: return "HN";
    case WeightPreset::BL: return "BL";
  }
  return "BL";
}

std::string to_string(WeightScheme scheme) {
  switch (scheme) {
    case WeightScheme::fixed: return "fixed";
    case WeightScheme::increasing_novelty: return "increasing-novelty";
    case WeightScheme::decreasing_novelty: return "decreasing-novelty";
  }
  return "fixed";
}

ResolvedWeights resolve_weights(const UtilityWeights& weights, std::size_t step,
                                std::size_t seen_count, std::size_t k, std::size_t t_total) {
  if (step < 1) throw PreconditionError("step is 1-based");
  if (t_total < 1) throw PreconditionError("t_total must be >= 1");
  if (k < 1) throw PreconditionError("k must be >= 1");
  const double progress = static_cast<double>(seen_count) / static_cast<double>(k * t_total);
  auto split = [](double gamma) {
    const double rest = (1.0 - gamma) / 2.0;
    return ResolvedWeights{rest, rest, gamma};
  };
  switch (weights.scheme) {
    case WeightScheme::decreasing_novelty:
      return split(0.8 * std::max(0.0, 1.0 - progress));
    case WeightScheme::increasing_novelty:
      return split(0.1 + 0.7 * std::min(1.0, progress));
    case WeightScheme::fixed:
      break;
  }
  switch (weights.preset) {
    case WeightPreset::HU: return {0.8, 0.1, 0.1};
    case WeightPreset::HD: return {0.1, 0.8, 0.1};
    case WeightPreset::HN: return {0.1, 0.1, 0.8};
    case WeightPreset::BL: return {1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};
  }
  throw ConfigError("weights.preset", "unknown weight preset");
}

Components ComponentScales::apply(const Components& raw) const {
  if (!enabled) return raw;
  return {uniformity.scale(raw.uniformity), diversity.scale(raw.diversity), novelty.scale(raw.novelty)};
}

Components raw_components(const Summary& summary, const SeenSet& seen, const PatternCatalog& catalog) {
  return {uniformity_summary(summary, catalog), diversity_summary(summary, catalog),
          novelty_summary(summary, seen)};
}

UtilityBreakdown combine(const Components& raw, const ResolvedWeights& weights,
                         const ComponentScales& scales) {
  UtilityBreakdown b;
  b.raw = raw;
  b.scaled = scales.apply(raw);
  b.utility = weights.alpha * b.scaled.uniformity + weights.beta * b.scaled.diversity +
              weights.gamma * b.scaled.novelty;
  return b;
}

UtilityBreakdown utility(const Summary& summary, const ResolvedWeights& weights, const SeenSet& seen,
                         const ComponentScales& scales, const PatternCatalog& catalog) {
  return combine(raw_components(summary, seen, catalog), weights, scales);
}

std::vector<Components> calibration_sample(const PatternCatalog& catalog, std::size_t k,
                                           std::size_t sample_size, std::uint64_t seed) {
  if (sample_size < 30) throw PreconditionError("calibration sample_size must be >= 30");
  if (k == 0) throw PreconditionError("k must be >= 1");
  if (catalog.size() < k) {
    throw PreconditionError("catalog has " + std::to_string(catalog.size()) +
                            " itemsets, fewer than k = " + std::to_string(k));
  }
  Rng rng(seed);
  std::vector<Components> out;
  out.reserve(sample_size);
  Summary summary;
  for (std::size_t s = 0; s < sample_size; ++s) {
    summary.clear();
    while (summary.size() < k) {
      const auto id = static_cast<ItemsetId>(rng.index(catalog.size()));
      if (std::find(summary.begin(), summary.end(), id) == summary.end()) summary.push_back(id);
    }
    const double seen_probability = rng.unit();
    SeenSet seen;
    for (const auto id : summary) {
      if (rng.unit() < seen_probability) seen.add(std::span<const ItemsetId>(&id, 1));
    }
    out.push_back(raw_components(summary, seen, catalog));
  }
  return out;
}

namespace {

ComponentStats stats_of(const std::vector<Components>& sample, double Components::*field) {
  double mean = 0.0;
  for (const auto& c : sample) mean += c.*field;
  mean /= static_cast<double>(sample.size());
  double var = 0.0;
  for (const auto& c : sample) var += (c.*field - mean) * (c.*field - mean);
  var /= static_cast<double>(sample.size());
  return {mean, std::max(kScaleFloor, std::sqrt(var))};
}

}  // namespace

ComponentScales calibrate_scales(const PatternCatalog& catalog, std::size_t k,
                                 std::size_t sample_size, std::uint64_t seed) {
  const auto sample = calibration_sample(catalog, k, sample_size, seed);
  ComponentScales scales;
  scales.uniformity = stats_of(sample, &Components::uniformity);
  scales.diversity = stats_of(sample, &Components::diversity);
  scales.novelty = stats_of(sample, &Components::novelty);
  scales.enabled = true;
  scales.sample_size = sample_size;
  scales.seed = seed;
  scales.k = k;
  return scales;
}

void save_scales(const ComponentScales& scales, std::ostream& os) {
  std::ostringstream body;
  body.precision(17);
  body << "E4SSCALES 1\n";
  body << "enabled " << (scales.enabled ? 1 : 0) << "\n";
  body << "sample_size " << scales.sample_size << "\n";
  body << "seed " << scales.seed << "\n";
  body << "k " << scales.k << "\n";
  body << "uniformity " << scales.uniformity.mean << " " << scales.uniformity.sd << "\n";
  body << "diversity " << scales.diversity.mean << " " << scales.diversity.sd << "\n";
  body << "novelty " << scales.novelty.mean << " " << scales.novelty.sd << "\n";
  os << body.str();
}

ComponentScales load_scales(std::istream& is) {
  std::string magic;
  int version = 0;
  if (!(is >> magic >> version) || magic != "E4SSCALES" || version != 1) {
    throw InputError("not a component-scales record");
  }
  ComponentScales s;
  std::string key;
  while (is >> key) {
    if (key == "enabled") {
      int e = 0;
      is >> e;
      s.enabled = e != 0;
    } else if (key == "sample_size") {
      is >> s.sample_size;
    } else if (key == "seed") {
      is >> s.seed;
    } else if (key == "k") {
      is >> s.k;
    } else if (key == "uniformity") {
      is >> s.uniformity.mean >> s.uniformity.sd;
    } else if (key == "diversity") {
      is >> s.diversity.mean >> s.diversity.sd;
    } else if (key == "novelty") {
      is >> s.novelty.mean >> s.novelty.sd;
    } else {
      throw InputError("unknown key '" + key + "' in scales record");
    }
    if (!is) throw InputError("malformed value for '" + key + "' in scales record");
  }
  return s;
}

}  // namespace edasum
