#include "edasum/swap.hpp"

#include <algorithm>
#include <limits>

#include "edasum/error.hpp"

namespace edasum {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

class SwapState {
 public:
  SwapState(const PatternCatalog& catalog, Summary members)
      : catalog_(catalog), members_(std::move(members)) {
    refresh();
  }

  double diversity() const { return diversity_; }
  const Summary& members() const { return members_; }

  // Div of the summary with position `p` replaced by `candidate`.
  double diversity_with(std::size_t p, ItemsetId candidate) const {
    if (members_.size() <= 1) return 0.0;
    double d = without_[p];
    const auto v = catalog_.vector(candidate);
    for (std::size_t q = 0; q < members_.size(); ++q) {
      if (q == p) continue;
      d = std::min(d, manhattan(v, catalog_.vector(members_[q])));
      if (d <= diversity_) return d;
    }
    return d;
  }

  // Position whose removal leaves the highest diversity; earliest on ties.
  std::size_t cheapest_removal() const {
    std::size_t best = 0;
    for (std::size_t p = 1; p < members_.size(); ++p) {
      if (without_[p] > without_[best]) best = p;
    }
    return best;
  }

  void replace(std::size_t p, ItemsetId candidate) {
    members_[p] = candidate;
    refresh();
  }

 private:
  void refresh() {
    const std::size_t n = members_.size();
    dist_.assign(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        const double d = manhattan(catalog_.vector(members_[i]), catalog_.vector(members_[j]));
        dist_[i * n + j] = dist_[j * n + i] = d;
      }
    }
    without_.assign(n, kInf);
    diversity_ = n <= 1 ? 0.0 : kInf;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        const double d = dist_[i * n + j];
        diversity_ = std::min(diversity_, d);
        for (std::size_t p = 0; p < n; ++p) {
          if (p != i && p != j) without_[p] = std::min(without_[p], d);
        }
      }
    }
  }

  const PatternCatalog& catalog_;
  Summary members_;
  std::vector<double> dist_;
  std::vector<double> without_;  // min pair distance excluding position p
  double diversity_ = 0.0;
};

}  // namespace

std::vector<ItemsetId> swap_pool(const PatternCatalog& catalog, double uniformity_threshold) {
  std::vector<ItemsetId> pool;
  for (ItemsetId id = 0; id < catalog.size(); ++id) {
    if (catalog.uniformity(id) >= uniformity_threshold) pool.push_back(id);
  }
  std::stable_sort(pool.begin(), pool.end(), [&](ItemsetId a, ItemsetId b) {
    return catalog.uniformity(a) > catalog.uniformity(b);
  });
  return pool;
}

Summary swap_summary(const PatternCatalog& catalog, std::size_t k, double uniformity_threshold) {
  if (k == 0) throw PreconditionError("k must be >= 1");
  if (uniformity_threshold < 0.0) throw PreconditionError("uniformity threshold must be >= 0");
  const auto pool = swap_pool(catalog, uniformity_threshold);
  if (pool.empty()) {
    throw PreconditionError("no itemset reaches the uniformity threshold " +
                            std::to_string(uniformity_threshold));
  }
  if (pool.size() <= k) return pool;

  SwapState state(catalog, Summary(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(k)));
  std::vector<char> in_summary(catalog.size(), 0);
  for (const auto id : state.members()) in_summary[id] = 1;

  for (std::size_t c = k; c < pool.size(); ++c) {
    const std::size_t p = state.cheapest_removal();
    if (state.diversity_with(p, pool[c]) > state.diversity()) {
      in_summary[state.members()[p]] = 0;
      in_summary[pool[c]] = 1;
      state.replace(p, pool[c]);
    }
  }

  for (bool improved = true; improved;) {
    improved = false;
    for (const auto candidate : pool) {
      if (in_summary[candidate]) continue;
      for (std::size_t p = 0; p < k; ++p) {
        if (state.diversity_with(p, candidate) > state.diversity()) {
          in_summary[state.members()[p]] = 0;
          in_summary[candidate] = 1;
          state.replace(p, candidate);
          improved = true;
          break;
        }
      }
    }
  }
  return state.members();
}

}  // namespace edasum
