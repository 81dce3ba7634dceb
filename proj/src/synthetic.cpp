#include "edasum/synthetic.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>

#include "edasum/error.hpp"
#include "edasum/random.hpp"

namespace edasum {

SyntheticData make_synthetic(const SyntheticOptions& o) {
  if (o.attributes == 0 || o.core_min == 0 || o.core_min > o.core_max || o.core_max > o.attributes) {
    throw PreconditionError("synthetic: core attribute range must lie within [1, attributes]");
  }
  if (o.cluster_min == 0 || o.cluster_min > o.cluster_max) {
    throw PreconditionError("synthetic: cluster size range is empty");
  }
  if (o.clusters * o.cluster_max > o.rows) throw PreconditionError("synthetic: clusters do not fit in the rows");

  Rng rng(o.seed);
  SyntheticData out;
  out.table.row_count = o.rows;
  for (std::size_t a = 0; a < o.attributes; ++a) {
    out.table.columns.push_back({"x" + std::to_string(a), std::vector<double>(o.rows)});
  }
  for (auto& col : out.table.columns) {
    for (auto& v : col.values) v = rng.unit();
  }

  // Rows are shuffled so clusters are not contiguous id ranges.
  std::vector<ItemId> order(o.rows);
  std::iota(order.begin(), order.end(), ItemId{0});
  for (std::size_t i = o.rows; i > 1; --i) std::swap(order[i - 1], order[rng.index(i)]);

  std::size_t next = 0;
  for (std::size_t c = 0; c < o.clusters; ++c) {
    PlantedCluster cl;
    cl.label = "cluster" + std::to_string(c);
    const std::size_t size = o.cluster_min + rng.index(o.cluster_max - o.cluster_min + 1);
    const std::size_t cores = o.core_min + rng.index(o.core_max - o.core_min + 1);
    std::vector<std::uint32_t> attrs(o.attributes);
    std::iota(attrs.begin(), attrs.end(), 0u);
    for (std::size_t i = 0; i < cores; ++i) std::swap(attrs[i], attrs[i + rng.index(o.attributes - i)]);
    cl.core.assign(attrs.begin(), attrs.begin() + static_cast<std::ptrdiff_t>(cores));
    std::sort(cl.core.begin(), cl.core.end());
    std::vector<double> center(o.attributes);
    for (auto& x : center) x = 0.1 + 0.8 * rng.unit();
    cl.rows.assign(order.begin() + static_cast<std::ptrdiff_t>(next),
                   order.begin() + static_cast<std::ptrdiff_t>(next + size));
    next += size;
    std::sort(cl.rows.begin(), cl.rows.end());
    for (const auto r : cl.rows) {
      for (std::size_t a = 0; a < o.attributes; ++a) {
        const bool core = std::binary_search(cl.core.begin(), cl.core.end(), a);
        out.table.columns[a].values[r] = center[a] + (core ? o.noise : o.spread) * rng.normal();
      }
    }
    out.clusters.push_back(std::move(cl));
  }
  return out;
}

std::string to_csv(const RawDataset& table) {
  std::string s;
  for (std::size_t c = 0; c < table.columns.size(); ++c) {
    if (c) s += ',';
    s += table.columns[c].name;
  }
  s += '\n';
  char buf[32];
  for (std::size_t r = 0; r < table.row_count; ++r) {
    for (std::size_t c = 0; c < table.columns.size(); ++c) {
      if (c) s += ',';
      std::snprintf(buf, sizeof buf, "%.17g", table.columns[c].values[r]);
      s += buf;
    }
    s += '\n';
  }
  return s;
}

}  // namespace edasum
