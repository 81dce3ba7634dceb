#pragma once

#include "edasum/metrics.hpp"
#include "edasum/pattern.hpp"

namespace edasum {

// One-shot bootstrap: the k most diverse itemsets among those whose raw
// uniformity is at least `uniformity_threshold`.
//
// The summary starts from the k most uniform candidates. Remaining candidates
// are scanned by descending uniformity; each replaces the member whose removal
// costs the least diversity when that strictly raises Div. A final local
// search then applies any improving single replacement until none is left, so
// the result is 1-swap locally optimal. Pools of at most k candidates are
// returned whole, most uniform first.
Summary swap_summary(const PatternCatalog& catalog, std::size_t k, double uniformity_threshold);

// Candidate pool ordered by uniformity descending, then id.
std::vector<ItemsetId> swap_pool(const PatternCatalog& catalog, double uniformity_threshold);

}  // namespace edasum
