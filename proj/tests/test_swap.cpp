#include <doctest.h>

#include <algorithm>

#include "edasum/error.hpp"
#include "edasum/swap.hpp"
#include "oracles.hpp"

using namespace edasum;

namespace {

// Catalog of singleton itemsets, one per row.
PatternCatalog singletons(const std::vector<std::vector<int>>& rows, std::size_t bins) {
  auto data = oracle::make_binned(rows, bins);
  std::vector<std::pair<Description, MemberSet>> patterns;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    std::vector<Constraint> desc;
    for (std::size_t a = 0; a < rows[r].size(); ++a) {
      desc.push_back({static_cast<std::uint32_t>(a), static_cast<BinValue>(rows[r][a])});
    }
    patterns.emplace_back(Description(desc), MemberSet({static_cast<ItemId>(r)}));
  }
  return PatternCatalog::build(std::move(data), 1, std::move(patterns));
}

double div_of(const PatternCatalog& cat, const Summary& s) { return oracle::brute_components(cat, s, {}).div; }

}  // namespace

TEST_CASE("swap finds the most distant pair") {
  const auto cat = singletons({{0, 0}, {0, 1}, {10, 0}, {10, 10}}, 11);
  const auto s = swap_summary(cat, 2, 2.0);
  REQUIRE(s.size() == 2);
  CHECK(div_of(cat, s) == doctest::Approx(20.0));
  std::vector<std::vector<BinValue>> picked;
  for (const auto id : s) {
    const auto row = cat.itemset(id).members.ids().front();
    picked.push_back({cat.data().at(row, 0), cat.data().at(row, 1)});
  }
  std::sort(picked.begin(), picked.end());
  CHECK(picked == std::vector<std::vector<BinValue>>{{0, 0}, {10, 10}});
}

TEST_CASE("small pools are returned whole") {
  const auto cat = mine_closed_itemsets(oracle::make_binned({{0, 0}, {0, 0}, {1, 3}}, 4), 1);
  const auto pool = swap_pool(cat, 0.0);
  CHECK(pool.size() == cat.size());
  for (std::size_t i = 1; i < pool.size(); ++i) CHECK(cat.uniformity(pool[i - 1]) >= cat.uniformity(pool[i]));
  const auto s = swap_summary(cat, 10, 0.0);
  CHECK(s == pool);
  CHECK_THROWS_AS(swap_summary(cat, 3, 1e12), PreconditionError);
  CHECK_THROWS_AS(swap_summary(cat, 0, 1.0), PreconditionError);
}

TEST_CASE("swap output is 1-swap locally optimal") {
  Rng rng(2024);
  for (int trial = 0; trial < 40; ++trial) {
    const auto cat = mine_closed_itemsets(oracle::random_binned(rng, 40 + rng.index(80), 2 + rng.index(3), 3 + rng.index(3)), 2);
    const double threshold = rng.unit() * 2.0;
    const std::size_t k = 1 + rng.index(6);
    std::vector<ItemsetId> pool;
    for (ItemsetId id = 0; id < cat.size(); ++id) {
      if (oracle::brute_uniformity(cat, id) >= threshold) pool.push_back(id);
    }
    if (pool.empty()) {
      CHECK_THROWS_AS(swap_summary(cat, k, threshold), PreconditionError);
      continue;
    }
    const auto s = swap_summary(cat, k, threshold);
    CHECK(s == swap_summary(cat, k, threshold));
    CHECK(s.size() == std::min(k, pool.size()));
    for (const auto id : s) CHECK(oracle::brute_uniformity(cat, id) >= threshold);
    auto sorted = s;
    std::sort(sorted.begin(), sorted.end());
    CHECK(std::adjacent_find(sorted.begin(), sorted.end()) == sorted.end());
    const double base = div_of(cat, s);
    for (const auto c : pool) {
      if (std::find(s.begin(), s.end(), c) != s.end()) continue;
      for (std::size_t p = 0; p < s.size(); ++p) {
        auto alt = s;
        alt[p] = c;
        CHECK(div_of(cat, alt) <= base);
      }
    }
  }
}
