#include <doctest.h>

#include <algorithm>

#include "edasum/error.hpp"
#include "edasum/pipeline.hpp"
#include "edasum/swap.hpp"
#include "oracles.hpp"

using namespace edasum;

namespace {

std::shared_ptr<const PatternCatalog> random_catalog(std::uint64_t seed, std::size_t rows = 120) {
  Rng rng(seed);
  return std::make_shared<const PatternCatalog>(
      mine_closed_itemsets(oracle::random_binned(rng, rows, 4, 4), 3));
}

SessionConfig small_config(std::size_t t, WeightPreset preset = WeightPreset::BL) {
  SessionConfig c;
  c.k = 5;
  c.t_total = t;
  c.swap_threshold = 0.5;
  c.weights = {WeightScheme::fixed, preset};
  return c;
}

}  // namespace

TEST_CASE("session bootstrap equals swap") {
  const auto cat = random_catalog(1);
  const auto scales = calibrate_scales(*cat, 5, 100, 7);
  Session s(cat, scales, small_config(1));
  CHECK(s.current() == swap_summary(*cat, 5, 0.5));
  CHECK(s.terminal());
  CHECK(s.seen().size() == s.current().size());
  CHECK(s.bootstrap_breakdown().raw.novelty == 1.0);
  Top1SumPlanner planner;
  const auto run = run_full_pipeline(s, planner);
  CHECK(run.steps.empty());
  CHECK_FALSE(run.stopped_early);
  CHECK(run.cumulated_utility == s.bootstrap_breakdown().utility);
}

TEST_CASE("session configuration is validated") {
  const auto cat = random_catalog(2);
  auto c = small_config(5);
  c.k = 0;
  CHECK_THROWS_AS(Session(cat, {}, c), ConfigError);
  CHECK_THROWS_AS(parse_strategy("greedy"), ConfigError);
  CHECK_THROWS_AS(parse_mode("auto"), ConfigError);
  const SessionConfig defaults;
  CHECK(defaults.k == 10);
  CHECK(defaults.t_total == 50);
  CHECK(defaults.swap_threshold == 2.0);
}

TEST_CASE("apply guards against stale and out-of-bounds steps") {
  const auto cat = random_catalog(3);
  Session s(cat, {}, small_config(3));
  const auto step = top1sum_next(s);
  const auto before = s.seen().size();
  std::size_t fresh = 0;
  for (const auto id : step.result) fresh += !s.seen().contains(id);
  s.apply(step);
  CHECK(s.seen().size() == before + fresh);
  CHECK(s.current() == step.result);
  CHECK_THROWS_AS(s.apply(step), StateError);
  s.apply(top1sum_next(s));
  CHECK(s.terminal());
  CHECK_THROWS_AS(top1sum_next(s), StateError);
  CHECK_FALSE(s.plan(s.candidate_actions().front()).has_value());
}

TEST_CASE("plan reports invalid actions") {
  const auto cat = random_catalog(4);
  Session s(cat, {}, small_config(4));
  std::string why;
  const ItemsetId outsider = [&] {
    for (ItemsetId id = 0; id < cat->size(); ++id) {
      if (std::find(s.current().begin(), s.current().end(), id) == s.current().end()) return id;
    }
    return ItemsetId{0};
  }();
  CHECK_FALSE(s.plan({outsider, Operator::by_distrib, std::nullopt}, &why));
  CHECK(why.find("not in the current summary") != std::string::npos);
  const auto id = s.current().front();
  const auto& desc = cat->itemset(id).desc;
  std::uint32_t free_attr = 0;
  while (desc.constrains(free_attr)) ++free_attr;
  REQUIRE(free_attr < cat->attribute_count());
  CHECK_FALSE(s.plan({id, Operator::by_neighbors, free_attr}, &why));
  CHECK(why.find("not constrained") != std::string::npos);
}

TEST_CASE("top1sum matches an exhaustive re-evaluation") {
  for (std::uint64_t seed = 10; seed < 14; ++seed) {
    const auto cat = random_catalog(seed);
    REQUIRE(cat->size() <= 500);
    const auto scales = calibrate_scales(*cat, 5, 100, seed);
    auto config = small_config(8, seed % 2 ? WeightPreset::HD : WeightPreset::HN);
    config.weights.scheme = seed == 12 ? WeightScheme::decreasing_novelty : WeightScheme::fixed;
    Session s(cat, scales, config);
    while (!s.terminal()) {
      const auto w = s.next_weights();
      const auto expect = oracle::brute_greedy(*cat, s.current(), s.seen().sorted(), w.alpha, w.beta,
                                               w.gamma, scales, config.k);
      const auto step = top1sum_next(s);
      REQUIRE(expect.op >= 0);
      CHECK(step.action.itemset == expect.itemset);
      CHECK(static_cast<int>(step.action.op) == expect.op);
      CHECK(step.action.attribute == expect.attribute);
      CHECK(step.result == expect.result);
      CHECK(std::abs(step.breakdown.utility - expect.utility) < 1e-9);
      for (const auto& a : s.candidate_actions()) {
        if (auto alt = s.plan(a)) CHECK(alt->breakdown.utility <= step.breakdown.utility);
      }
      s.apply(step);
    }
  }
}

TEST_CASE("parallel scoring picks the same step") {
  const auto cat = random_catalog(21, 200);
  const auto scales = calibrate_scales(*cat, 5, 100, 3);
  auto config = small_config(6);
  Session seq(cat, scales, config);
  config.workers = 4;
  Session par(cat, scales, config);
  Top1SumPlanner a, b;
  const auto ra = run_full_pipeline(seq, a);
  const auto rb = run_full_pipeline(par, b);
  REQUIRE(ra.steps.size() == rb.steps.size());
  for (std::size_t i = 0; i < ra.steps.size(); ++i) {
    CHECK(ra.steps[i].action == rb.steps[i].action);
    CHECK(ra.steps[i].breakdown.utility == rb.steps[i].breakdown.utility);
  }
}

TEST_CASE("full pipeline bookkeeping") {
  const auto cat = random_catalog(31);
  const auto scales = calibrate_scales(*cat, 5, 100, 1);
  Session s(cat, scales, small_config(10));
  RandomPlanner planner(99);
  const auto run = run_full_pipeline(s, planner);
  double total = s.bootstrap_breakdown().utility;
  SeenSet rebuilt;
  rebuilt.add(s.bootstrap());
  Summary prev = s.bootstrap();
  std::size_t last_seen = rebuilt.size();
  for (const auto& step : run.steps) {
    total += step.breakdown.utility;
    CHECK(std::find(prev.begin(), prev.end(), step.action.itemset) != prev.end());
    rebuilt.add(step.result);
    CHECK(rebuilt.size() >= last_seen);
    last_seen = rebuilt.size();
    prev = step.result;
  }
  CHECK(std::abs(total - run.cumulated_utility) < 1e-9);
  CHECK(rebuilt.sorted() == s.seen().sorted());
  CHECK(run.steps.size() + 1 == 10);

  Session again(cat, scales, small_config(10));
  RandomPlanner same(99);
  const auto rerun = run_full_pipeline(again, same);
  REQUIRE(rerun.steps.size() == run.steps.size());
  for (std::size_t i = 0; i < run.steps.size(); ++i) CHECK(rerun.steps[i].action == run.steps[i].action);
}

TEST_CASE("evolving weights use the pre-step seen count") {
  const auto cat = random_catalog(41);
  auto config = small_config(5);
  config.weights.scheme = WeightScheme::increasing_novelty;
  Session s(cat, {}, config);
  CHECK(s.bootstrap_weights().gamma == doctest::Approx(0.1));
  const auto step = top1sum_next(s);
  const auto expect = resolve_weights(config.weights, 2, s.seen().size(), config.k, config.t_total);
  CHECK(step.weights == expect);
}

TEST_CASE("suggestions honour constraints and agree with top1sum") {
  const auto cat = random_catalog(51);
  const auto scales = calibrate_scales(*cat, 5, 100, 5);
  Session s(cat, scales, small_config(5));
  Top1SumPlanner planner;
  const auto all = suggest_actions(s, planner, {}, 1000);
  const auto best = top1sum_next(s);
  CHECK(all.front().action == best.action);
  CHECK(all.front().score == best.breakdown.utility);
  for (std::size_t i = 1; i < all.size(); ++i) CHECK(all[i - 1].score >= all[i].score);

  ActionConstraints facet;
  facet.op = Operator::by_facet;
  const auto f = suggest_actions(s, planner, facet, 1000);
  CHECK_FALSE(f.empty());
  for (const auto& sa : f) CHECK(sa.action.op == Operator::by_facet);
  CHECK(suggest_actions(s, planner, facet, 2).size() == std::min<std::size_t>(2, f.size()));

  ActionConstraints outsider;
  outsider.itemset = static_cast<ItemsetId>(cat->size() + 5);
  CHECK_THROWS_AS(suggest_actions(s, planner, outsider, 3), PreconditionError);
}

TEST_CASE("two-operator sessions only drill down and roll up") {
  const auto cat = random_catalog(61);
  auto config = small_config(6);
  config.operators = OperatorSet::two_op;
  Session s(cat, {}, config);
  Top1SumPlanner planner;
  const auto run = run_full_pipeline(s, planner);
  for (const auto& step : run.steps) {
    CHECK((step.action.op == Operator::by_facet || step.action.op == Operator::by_superset));
  }
}
