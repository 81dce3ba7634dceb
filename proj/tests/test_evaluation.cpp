#include <doctest.h>

#include <sstream>

#include "edasum/error.hpp"
#include "edasum/evaluation.hpp"
#include "oracles.hpp"

using namespace edasum;

namespace {

std::shared_ptr<const PatternCatalog> eval_catalog(std::uint64_t seed) {
  Rng rng(seed);
  return std::make_shared<const PatternCatalog>(mine_closed_itemsets(oracle::random_binned(rng, 160, 4, 4), 3));
}

MemberSet ids(std::initializer_list<ItemId> v) { return MemberSet(std::vector<ItemId>(v)); }

SessionConfig bench_config(std::size_t t) {
  SessionConfig c;
  c.k = 5;
  c.t_total = t;
  c.swap_threshold = 0.5;
  return c;
}

}  // namespace

TEST_CASE("jaccard threshold decides discovery") {
  // 8 shared items over a union of 11.
  const auto a = ids({0, 1, 2, 3, 4, 5, 6, 7, 8, 9});
  const auto b = ids({0, 1, 2, 3, 4, 5, 6, 7, 10});
  CHECK(jaccard(a, b) == doctest::Approx(8.0 / 11.0));

  const auto cat = eval_catalog(1);
  Summary s{static_cast<ItemsetId>(cat->size() - 1)};
  const auto& m = cat->itemset(s[0]).members;
  const GroundTruth exact({{"same", m}});
  const auto hit = relevance(*cat, {s}, exact);
  CHECK(hit.discovered == 1);
  CHECK(hit.cumulative == std::vector<std::size_t>{1});

  // Pad the ground-truth set so its Jaccard with the itemset is below 0.8.
  std::vector<ItemId> padded(m.begin(), m.end());
  for (ItemId r = 0; r < cat->data().rows() && padded.size() < m.size() * 13 / 10 + 1; ++r) {
    if (!m.contains(r)) padded.push_back(r);
  }
  std::sort(padded.begin(), padded.end());
  const GroundTruth loose({{"loose", MemberSet(padded)}});
  const double j = jaccard(m, loose.sets()[0].members);
  CHECK(j < 0.8);
  CHECK(relevance(*cat, {s}, loose).discovered == 0);
  CHECK(relevance(*cat, {s}, loose, j).discovered == 1);
  CHECK_THROWS_AS(relevance(*cat, {s}, loose, 0.0), PreconditionError);
}

TEST_CASE("relevance is monotone in the threshold and over steps") {
  const auto cat = eval_catalog(2);
  Session session(cat, {}, bench_config(12));
  Top1SumPlanner planner;
  run_full_pipeline(session, planner);
  const auto shown = displayed_summaries(session);
  REQUIRE(shown.size() == 12);
  std::vector<GroundTruthSet> sets;
  std::vector<char> used(cat->data().rows(), 0);
  for (ItemsetId id = 1; id < cat->size() && sets.size() < 6; id += 3) {
    std::vector<ItemId> free;
    for (const auto r : cat->itemset(id).members) {
      if (!used[r]) free.push_back(r);
    }
    if (free.empty()) continue;
    for (const auto r : free) used[r] = 1;
    sets.push_back({"g" + std::to_string(id), MemberSet(free)});
  }
  const GroundTruth gt(sets);
  std::size_t prev = gt.size() + 1;
  for (const double th : {0.1, 0.3, 0.5, 0.8, 1.0}) {
    const auto tr = relevance(*cat, shown, gt, th);
    CHECK(tr.discovered <= prev);
    prev = tr.discovered;
    CHECK(tr.cumulative.size() == shown.size());
    CHECK(std::is_sorted(tr.cumulative.begin(), tr.cumulative.end()));
    CHECK(tr.cumulative.back() == tr.discovered);
  }
}

TEST_CASE("operator usage fractions") {
  PipelineStep s;
  s.action.op = Operator::by_facet;
  CHECK(operator_usage({s, s}) == std::array<double, 4>{1, 0, 0, 0});
  auto t = s;
  t.action.op = Operator::by_superset;
  CHECK(operator_usage({s, t}) == std::array<double, 4>{0.5, 0.5, 0, 0});
  CHECK_THROWS_AS(operator_usage({}), PreconditionError);
}

TEST_CASE("ground truth parsing") {
  const auto gt = parse_ground_truth("spiral\t3,1,2\r\n\nelliptical\t7\n");
  REQUIRE(gt.size() == 2);
  CHECK(gt.sets()[0].label == "spiral");
  CHECK(gt.sets()[0].members == ids({1, 2, 3}));
  std::ostringstream os;
  save_ground_truth(gt, os);
  CHECK(os.str() == "spiral\t1,2,3\nelliptical\t7\n");
  CHECK(parse_ground_truth(os.str()).sets()[1].members == gt.sets()[1].members);
  CHECK_THROWS_AS(parse_ground_truth("nolabel 1,2\n"), InputError);
  CHECK_THROWS_AS(parse_ground_truth("a\t1,x\n"), InputError);
  CHECK_THROWS_AS(parse_ground_truth("a\t1\na\t2\n"), InputError);
  CHECK_THROWS_AS(parse_ground_truth("a\t1,2\nb\t2\n"), InputError);
  CHECK_THROWS_AS(parse_ground_truth("a\t\n"), InputError);
}

TEST_CASE("variant names") {
  CHECK(parse_variant("random").strategy == StrategyKind::random);
  const auto hu = parse_variant("top1sum_HU");
  CHECK(hu.strategy == StrategyKind::top1sum);
  CHECK(hu.weights.preset == WeightPreset::HU);
  CHECK(parse_variant("top1sum_DC").weights.scheme == WeightScheme::decreasing_novelty);
  CHECK_THROWS_AS(parse_variant("rlsum_BL"), ConfigError);
  CHECK_THROWS(parse_variant("top1sum_XX"));
  CHECK_THROWS(parse_variant("bogus_HU"));
}

TEST_CASE("benchmark rows, determinism and csv round trip") {
  const auto cat = eval_catalog(3);
  const auto scales = calibrate_scales(*cat, 5, 80, 4);
  const std::vector<Variant> variants{parse_variant("top1sum_HU"), parse_variant("random")};
  BenchmarkOptions opt;
  opt.base = bench_config(10);
  opt.seeds = {0, 1};
  const GroundTruth gt({{"a", cat->itemset(1).members}});
  const auto rows = run_benchmark(cat, scales, &gt, variants, opt);
  REQUIRE(rows.size() == 2 * 2 * 10);
  CHECK(rows[0].op == "swap");
  CHECK(rows[0].step == 0);
  CHECK(rows[9].step == 9);
  CHECK(rows[10].seed == 1);
  CHECK(rows[20].variant == "random");

  auto par = opt;
  par.workers = 4;
  const auto again = run_benchmark(cat, scales, &gt, variants, par);
  REQUIRE(again.size() == rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    CHECK(again[i].utility == rows[i].utility);
    CHECK(again[i].op == rows[i].op);
    CHECK(again[i].cum_relevance == rows[i].cum_relevance);
  }

  std::stringstream csv;
  write_benchmark_csv(rows, csv);
  CHECK(csv.str().rfind(
            "variant,seed,step,operator,uni_raw,div_raw,nov_raw,uni_scaled,div_scaled,nov_scaled,utility,"
            "cum_utility,cum_relevance,wall_ms\n",
            0) == 0);
  const auto back = read_benchmark_csv(csv);
  REQUIRE(back.size() == rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    CHECK(back[i].utility == rows[i].utility);
    CHECK(back[i].cum_utility == rows[i].cum_utility);
    CHECK(back[i].raw.diversity == rows[i].raw.diversity);
  }
  const auto totals = aggregate(back);
  REQUIRE(totals.size() == 4);
  for (const auto& t : totals) {
    CHECK(t.steps == 10);
    double sum = 0.0;
    for (const auto& r : rows) {
      if (r.variant == t.variant && r.seed == t.seed) sum += r.utility;
    }
    CHECK(t.cum_utility == sum);
  }
  CHECK(totals[0].cum_utility >= totals[2].cum_utility);
  CHECK(totals[1].cum_utility >= totals[3].cum_utility);

  std::stringstream bad("variant,seed\n");
  CHECK_THROWS_AS(read_benchmark_csv(bad), InputError);
}
