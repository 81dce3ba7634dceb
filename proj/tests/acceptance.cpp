// Acceptance suite: one PASS/FAIL line per criterion. Exit status is nonzero
// when any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numeric>
#include <sstream>
#include <string>
#include <unistd.h>
#include <vector>

#include "edasum/cli.hpp"
#include "edasum/config.hpp"
#include "edasum/evaluation.hpp"
#include "edasum/json_io.hpp"
#include "edasum/rl.hpp"
#include "edasum/swap.hpp"
#include "edasum/synthetic.hpp"
#include "oracles.hpp"

using namespace edasum;
namespace fs = std::filesystem;

namespace {

// Pinned tolerances and limits.
constexpr double kMiningLimitS = 60.0;
constexpr double kGreedyUtilityTol = 1e-9;
constexpr std::size_t kPropertyCases = 1000;
constexpr double kUtilityIdentityTol = 1e-12;
constexpr double kSimplexTol = 1e-12;
constexpr double kGradTol = 1e-4;
constexpr double kGradLimitS = 60.0;
constexpr double kLearningRatio = 1.2;   // trained >= random + 0.2 |random|
constexpr double kLearningLimitS = 1800.0;
constexpr std::size_t kMinTrainingEpisodes = 300;
constexpr double kDominanceMargin = 0.10;
constexpr std::size_t kLatencyMinItemsets = 100000;
constexpr double kLatencySpeedup = 5.0;
constexpr double kTopMinCorrelation = 0.5;
constexpr double kRlMaxCorrelation = 0.3;
constexpr double kReplayTol = 1e-9;

using Clock = std::chrono::steady_clock;
double seconds_since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// Shared benchmark setting: the bundled synthetic table.
struct Bench {
  std::shared_ptr<const PatternCatalog> catalog;
  ComponentScales scales;
  SessionConfig env;
};

Bench load_bench() {
  Settings s;
  Bench b;
  const auto table = load_table(fs::path(EDASUM_DATA_DIR) / "synthetic.csv");
  b.catalog = std::make_shared<const PatternCatalog>(mine_closed_itemsets(equi_depth_bin(table, s.bins), s.support));
  b.scales = calibrate_scales(*b.catalog, s.session.k, s.scaling_sample_size, s.scaling_seed);
  b.env = s.session;
  b.env.weights.preset = WeightPreset::HU;
  return b;
}

// 1 -------------------------------------------------------------------------
Outcome mining_oracle() {
  const auto start = Clock::now();
  Rng rng(2024);
  std::size_t equal = 0, itemsets = 0;
  constexpr std::size_t kDatasets = 50;
  for (std::size_t d = 0; d < kDatasets; ++d) {
    const std::size_t rows = 1 + rng.index(200);
    const std::size_t attrs = 1 + rng.index(4);
    const std::size_t bins = 1 + rng.index(3);
    const std::size_t support = 1 + rng.index(3);
    const auto data = oracle::random_binned(rng, rows, attrs, bins);
    const auto cat = mine_closed_itemsets(data, support);
    const auto expected = oracle::brute_closed(data, support);
    bool same = cat.size() == expected.size();
    for (const auto& it : cat.itemsets()) {
      if (!same) break;
      const auto found = expected.find(std::vector<Constraint>(it.desc.begin(), it.desc.end()));
      same = found != expected.end() && found->second == it.members.ids();
    }
    equal += same;
    itemsets += cat.size();
  }
  const double t = seconds_since(start);
  return {equal == kDatasets && t < kMiningLimitS,
          fmt("%zu/%zu catalogs equal brute-force enumeration (%zu itemsets), %.2f s (limit %.0f s)", equal,
              kDatasets, itemsets, t, kMiningLimitS)};
}

// 2 -------------------------------------------------------------------------
Outcome one_shot_equivalence() {
  const auto dir = fs::temp_directory_path() / ("edasum_accept_" + std::to_string(::getpid()));
  fs::create_directories(dir);
  std::size_t equal = 0;
  constexpr std::size_t kCatalogs = 10;
  std::string why;
  for (std::size_t seed = 0; seed < kCatalogs; ++seed) {
    SyntheticOptions opt;
    opt.rows = 400 + 60 * seed;
    opt.attributes = 3 + seed % 4;
    opt.clusters = 2 + seed % 5;
    opt.seed = 100 + seed;
    const auto csv = (dir / ("d" + std::to_string(seed) + ".csv")).string();
    const auto cat = (dir / ("d" + std::to_string(seed) + ".cat")).string();
    std::ofstream(csv) << to_csv(make_synthetic(opt).table);
    std::ostringstream out, err;
    if (run_command({"mine", "--input", csv, "--bins", "10", "--support", "5", "--out", cat}, out, err) != 0) {
      why = err.str();
      continue;
    }
    std::ostringstream swap_out, pipe_out;
    const int a = run_command({"swap", "--input", cat}, swap_out, err);
    const int b = run_command({"pipeline", "--input", cat, "--t", "1", "--seed", std::to_string(seed)}, pipe_out, err);
    if (a != 0 || b != 0) {
      why = err.str();
      continue;
    }
    std::istringstream log(pipe_out.str());
    std::string line;
    std::getline(log, line);
    std::getline(log, line);
    std::size_t extra = 0;
    for (std::string rest; std::getline(log, rest);) extra += !rest.empty();
    equal += extra == 0 && Json::parse(swap_out.str())["summary"] == Json::parse(line)["result"];
  }
  fs::remove_all(dir);
  return {equal == kCatalogs,
          fmt("%zu/%zu seeded catalogs: pipeline --t 1 summary identical to swap%s%s", equal, kCatalogs,
              why.empty() ? "" : "; error: ", why.c_str())};
}

// 3 -------------------------------------------------------------------------
Outcome greedy_oracle() {
  constexpr std::size_t kSeeds = 5, kSteps = 20;
  std::size_t matched = 0, total = 0, max_catalog = 0;
  double max_err = 0.0;
  for (std::size_t seed = 0; seed < kSeeds; ++seed) {
    Rng rng(500 + seed);
    const auto cat = std::make_shared<const PatternCatalog>(
        mine_closed_itemsets(oracle::random_binned(rng, 160, 4, 4), 3));
    max_catalog = std::max(max_catalog, cat->size());
    if (cat->size() > 500) return {false, fmt("catalog of seed %zu has %zu > 500 itemsets", seed, cat->size())};
    SessionConfig cfg;
    cfg.k = 5;
    cfg.t_total = kSteps + 1;
    cfg.swap_threshold = 0.5;
    cfg.weights.preset = std::array{WeightPreset::HU, WeightPreset::HD, WeightPreset::HN, WeightPreset::BL,
                                    WeightPreset::BL}[seed];
    if (seed == 4) cfg.weights.scheme = WeightScheme::decreasing_novelty;
    Session s(cat, calibrate_scales(*cat, cfg.k, 200, seed), cfg);
    while (!s.terminal()) {
      const auto w = s.next_weights();
      const auto expect = oracle::brute_greedy(*cat, s.current(), s.seen().sorted(), w.alpha, w.beta, w.gamma,
                                               s.scales(), cfg.k);
      const auto step = top1sum_next(s);
      ++total;
      const double err = std::abs(step.breakdown.utility - expect.utility);
      max_err = std::max(max_err, err);
      matched += step.action.itemset == expect.itemset && static_cast<int>(step.action.op) == expect.op &&
                 step.action.attribute == expect.attribute && step.result == expect.result &&
                 err <= kGreedyUtilityTol;
      s.apply(step);
    }
  }
  return {matched == kSeeds * kSteps && total == kSeeds * kSteps,
          fmt("%zu/%zu steps match exhaustive re-evaluation, max |dU| %.2e (tol %.0e), catalogs <= %zu itemsets",
              matched, kSeeds * kSteps, max_err, kGreedyUtilityTol, max_catalog)};
}

// 4 -------------------------------------------------------------------------
struct PropertyCounter {
  std::vector<std::pair<std::string, std::pair<std::size_t, std::size_t>>> rows;  // name -> (cases, failures)
  void add(const std::string& name, std::size_t cases, std::size_t failures) { rows.push_back({name, {cases, failures}}); }
};

Summary random_summary(Rng& rng, const PatternCatalog& cat, std::size_t max_size) {
  const std::size_t n = 1 + rng.index(std::min(max_size, cat.size()));
  Summary s;
  while (s.size() < n) {
    const auto id = static_cast<ItemsetId>(rng.index(cat.size()));
    if (std::find(s.begin(), s.end(), id) == s.end()) s.push_back(id);
  }
  return s;
}

// Two attributes whose mirrored rows give {a=1} and {b=1} the same mean vector;
// constant attributes and row multiplicities vary per case.
std::optional<std::pair<ItemsetId, ItemsetId>> twin_vectors(Rng& rng, std::shared_ptr<const PatternCatalog>& out) {
  const std::size_t consts = rng.index(3);
  const std::size_t mult = 1 + rng.index(3);
  std::vector<std::vector<int>> rows;
  std::vector<int> fill(consts);
  for (auto& f : fill) f = static_cast<int>(rng.index(3));
  for (const auto& [a, b] : std::vector<std::pair<int, int>>{{0, 1}, {2, 1}, {1, 0}, {1, 2}}) {
    for (std::size_t m = 0; m < mult; ++m) {
      std::vector<int> r{a, b};
      r.insert(r.end(), fill.begin(), fill.end());
      rows.push_back(r);
    }
  }
  out = std::make_shared<const PatternCatalog>(mine_closed_itemsets(oracle::make_binned(rows, 3), 1));
  std::optional<ItemsetId> x, y;
  for (const auto& it : out->itemsets()) {
    if (it.desc.size() == consts + 1 && it.desc.constrains(0) && *it.desc.value(0) == 1) x = it.id;
    if (it.desc.size() == consts + 1 && it.desc.constrains(1) && *it.desc.value(1) == 1) y = it.id;
  }
  if (!x || !y) return std::nullopt;
  return std::pair{*x, *y};
}

Outcome metric_properties() {
  PropertyCounter pc;
  Rng rng(77);
  std::vector<std::shared_ptr<const PatternCatalog>> cats;
  for (int i = 0; i < 12; ++i) {
    cats.push_back(std::make_shared<const PatternCatalog>(
        mine_closed_itemsets(oracle::random_binned(rng, 40 + rng.index(160), 2 + rng.index(4), 2 + rng.index(4)), 1 + rng.index(3))));
  }
  auto pick_cat = [&]() -> const PatternCatalog& { return *cats[rng.index(cats.size())]; };

  {  // novelty bounds and iff conditions
    std::size_t bad = 0;
    for (std::size_t c = 0; c < kPropertyCases; ++c) {
      const auto& cat = pick_cat();
      const auto summary = random_summary(rng, cat, 10);
      SeenSet seen;
      const double p = rng.unit();
      for (ItemsetId id = 0; id < cat.size(); ++id) {
        if (rng.unit() < p) seen.add(std::vector<ItemsetId>{id});
      }
      const double nov = novelty_summary(summary, seen);
      const bool none = std::none_of(summary.begin(), summary.end(), [&](auto id) { return seen.contains(id); });
      const bool all = std::all_of(summary.begin(), summary.end(), [&](auto id) { return seen.contains(id); });
      bad += !(nov >= 0.0 && nov <= 1.0) || ((nov == 1.0) != none) || ((nov == 0.0) != all);
    }
    pc.add("novelty bounds/iff", kPropertyCases, bad);
  }
  {  // diversity non-negative and permutation invariant
    std::size_t bad = 0;
    for (std::size_t c = 0; c < kPropertyCases; ++c) {
      const auto& cat = pick_cat();
      auto summary = random_summary(rng, cat, 10);
      const double d = diversity_summary(summary, cat);
      rng.shuffle(summary);
      bad += !(d >= 0.0) || diversity_summary(summary, cat) != d;
    }
    pc.add("diversity >= 0, permutation invariant", kPropertyCases, bad);
  }
  {  // diversity zero on shared vectors
    std::size_t bad = 0, cases = 0;
    while (cases < kPropertyCases) {
      std::shared_ptr<const PatternCatalog> cat;
      const auto twins = twin_vectors(rng, cat);
      if (!twins || cat->vector(twins->first) != cat->vector(twins->second)) {
        ++bad;
        ++cases;
        continue;
      }
      Summary s{twins->first, twins->second};
      for (std::size_t extra = rng.index(3); extra > 0; --extra) {
        const auto id = static_cast<ItemsetId>(rng.index(cat->size()));
        if (std::find(s.begin(), s.end(), id) == s.end()) s.push_back(id);
      }
      rng.shuffle(s);
      bad += diversity_summary(s, *cat) != 0.0;
      ++cases;
    }
    pc.add("diversity zero on shared vectors", cases, bad);
  }
  {  // uniformity strictly decreasing in summed dispersion above the floor
    std::size_t bad = 0;
    for (std::size_t c = 0; c < kPropertyCases; ++c) {
      const std::size_t attrs = 1 + rng.index(12);
      const double lo = kUniformityEpsilon + rng.unit() * 5.0;
      const double hi = lo * (1.0 + 1e-9 + rng.unit());
      bad += !(uniformity_from_dispersion(attrs, lo) > uniformity_from_dispersion(attrs, hi));
      // and on mined itemsets: catalog value equals |A| / max(eps, sum sd)
      const auto& cat = pick_cat();
      const auto id = static_cast<ItemsetId>(rng.index(cat.size()));
      bad += std::abs(cat.uniformity(id) - oracle::brute_uniformity(cat, id)) > 1e-9 * std::max(1.0, cat.uniformity(id));
    }
    pc.add("uniformity decreasing in dispersion", kPropertyCases, bad);
  }
  {  // summary uniformity monotone under supersets
    std::size_t bad = 0;
    for (std::size_t c = 0; c < kPropertyCases; ++c) {
      const auto& cat = pick_cat();
      const auto small = random_summary(rng, cat, 5);
      auto big = small;
      for (std::size_t extra = 1 + rng.index(5); extra > 0; --extra) {
        const auto id = static_cast<ItemsetId>(rng.index(cat.size()));
        if (std::find(big.begin(), big.end(), id) == big.end()) big.push_back(id);
      }
      bad += uniformity_summary(big, cat) > uniformity_summary(small, cat);
    }
    pc.add("Uni(superset) <= Uni(subset)", kPropertyCases, bad);
  }
  {  // utility equals the weighted sum of scaled components
    std::size_t bad = 0;
    for (std::size_t c = 0; c < kPropertyCases; ++c) {
      const auto& cat = pick_cat();
      const auto summary = random_summary(rng, cat, 10);
      SeenSet seen;
      for (ItemsetId id = 0; id < cat.size(); ++id) {
        if (rng.unit() < 0.3) seen.add(std::vector<ItemsetId>{id});
      }
      ComponentScales scales;
      scales.enabled = rng.unit() < 0.7;
      scales.uniformity = {rng.normal() * 3, 0.01 + rng.unit() * 4};
      scales.diversity = {rng.normal() * 3, 0.01 + rng.unit() * 4};
      scales.novelty = {rng.normal(), 0.01 + rng.unit()};
      double a = rng.unit(), b = rng.unit(), g = rng.unit();
      const double z = a + b + g;
      const ResolvedWeights w{a / z, b / z, g / z};
      const auto u = utility(summary, w, seen, scales, cat);
      const auto raw = oracle::brute_components(cat, summary, seen.sorted());
      const auto sc = [&](double x, const ComponentStats& st) { return oracle::brute_scaled(x, st.mean, st.sd, scales.enabled); };
      const double expect = w.alpha * sc(raw.uni, scales.uniformity) + w.beta * sc(raw.div, scales.diversity) +
                            w.gamma * sc(raw.nov, scales.novelty);
      const double ident = w.alpha * u.scaled.uniformity + w.beta * u.scaled.diversity + w.gamma * u.scaled.novelty;
      bad += std::abs(u.utility - ident) > kUtilityIdentityTol * std::max(1.0, std::abs(ident)) ||
             std::abs(u.utility - expect) > 1e-9 * std::max(1.0, std::abs(expect));
    }
    pc.add("utility weighted-sum identity", kPropertyCases, bad);
  }
  {  // weights on the simplex
    std::size_t bad = 0;
    const WeightPreset presets[] = {WeightPreset::HU, WeightPreset::HD, WeightPreset::HN, WeightPreset::BL};
    const WeightScheme schemes[] = {WeightScheme::fixed, WeightScheme::decreasing_novelty, WeightScheme::increasing_novelty};
    for (std::size_t c = 0; c < kPropertyCases; ++c) {
      const UtilityWeights uw{schemes[rng.index(3)], presets[rng.index(4)]};
      const std::size_t k = 1 + rng.index(20), t = 1 + rng.index(80);
      const auto w = resolve_weights(uw, 1 + rng.index(t), rng.index(3 * k * t), k, t);
      bad += !(w.alpha >= 0 && w.beta >= 0 && w.gamma >= 0) || std::abs(w.alpha + w.beta + w.gamma - 1.0) > kSimplexTol;
    }
    pc.add("resolved weights on the simplex", kPropertyCases, bad);
  }
  {  // argmax invariant to candidate order
    std::size_t bad = 0;
    for (std::size_t c = 0; c < kPropertyCases; ++c) {
      const auto cat = cats[rng.index(cats.size())];
      SessionConfig cfg;
      cfg.k = 2 + rng.index(5);
      cfg.t_total = 4;
      cfg.swap_threshold = 0.0;
      cfg.weights.preset = static_cast<WeightPreset>(rng.index(4));
      Session s(cat, {}, cfg);
      auto cands = s.candidate_actions();
      Top1SumPlanner p;
      auto best_of = [](const std::vector<ScoredAction>& v) {
        std::size_t b = 0;
        for (std::size_t i = 1; i < v.size(); ++i) {
          if (v[i].score > v[b].score) b = i;
        }
        return v.empty() ? std::optional<ScoredAction>{} : std::optional<ScoredAction>{v[b]};
      };
      const auto a = best_of(p.score(s, cands));
      rng.shuffle(cands);
      const auto shuffled = p.score(s, cands);
      const auto b = best_of(shuffled);
      if (!a || !b) {
        bad += a.has_value() != b.has_value();
        continue;
      }
      bool still_max = false;
      for (const auto& x : shuffled) still_max = still_max || (x.action == a->action && x.score == b->score);
      bad += a->score != b->score || !still_max;
    }
    pc.add("argmax invariant to candidate order", kPropertyCases, bad);
  }
  bool pass = true;
  std::string detail;
  for (const auto& [name, cf] : pc.rows) {
    pass = pass && cf.first >= kPropertyCases && cf.second == 0;
    detail += fmt("%s%s %zu/%zu", detail.empty() ? "" : "; ", name.c_str(), cf.first - cf.second, cf.first);
  }
  return {pass, detail};
}

// 5 -------------------------------------------------------------------------
Outcome gradient_check() {
  const auto start = Clock::now();
  Rng rng(5);
  double worst = 0.0, worst_value = 0.0;
  std::size_t ok = 0, checked = 0;
  constexpr std::size_t kNets = 20;
  for (std::size_t n = 0; n < kNets; ++n) {
    std::vector<std::size_t> dims{2 + rng.index(14)};
    for (std::size_t l = 1 + rng.index(2); l > 0; --l) dims.push_back(3 + rng.index(14));
    const auto rep = grad_check(dims, 2 + rng.index(12), 1 + rng.index(6), 1000 + n);
    worst = std::max(worst, rep.max_relative_error);
    worst_value = std::max(worst_value, rep.value_head_error);
    checked += rep.checked;
    ok += rep.max_relative_error <= kGradTol && rep.value_head_error <= kGradTol;
  }
  const double t = seconds_since(start);
  return {ok == kNets && t < kGradLimitS,
          fmt("%zu/%zu networks within %.0e (max relative error %.2e, value head %.2e, %zu coordinates), %.2f s "
              "(limit %.0f s)",
              ok, kNets, kGradTol, worst, worst_value, checked, t, kGradLimitS)};
}

// 6 -------------------------------------------------------------------------
struct Learned {
  std::shared_ptr<const PolicyCheckpoint> checkpoint;
  Outcome outcome;
};

Learned rl_learning(const Bench& bench) {
  const auto start = Clock::now();
  RlTrainConfig train;  // defaults
  train.workers = 1;    // bit-reproducible for the fixed seed
  train.steps_per_episode = bench.env.t_total;
  auto env = bench.env;
  env.strategy = StrategyKind::rlsum;
  const auto result = train_policy(bench.catalog, bench.scales, env, train);
  auto ck = std::make_shared<const PolicyCheckpoint>(result.checkpoint);
  constexpr std::size_t kEpisodes = 20;
  const auto trained = evaluate_policy(*ck, bench.catalog, bench.scales, env, kEpisodes, 0);
  auto random_env = bench.env;
  random_env.strategy = StrategyKind::random;
  const auto random = evaluate_random(bench.catalog, bench.scales, random_env, kEpisodes, 0);
  const double t = seconds_since(start);
  const auto& r = result.episode_rewards;
  const std::size_t w = std::min<std::size_t>(100, r.size());
  const double first = std::accumulate(r.begin(), r.begin() + static_cast<std::ptrdiff_t>(w), 0.0) / static_cast<double>(w);
  const double last = std::accumulate(r.end() - static_cast<std::ptrdiff_t>(w), r.end(), 0.0) / static_cast<double>(w);
  const double bar = random.mean + (kLearningRatio - 1.0) * std::abs(random.mean);
  return {ck,
          {trained.mean >= bar && ck->episodes_trained >= kMinTrainingEpisodes && t < kLearningLimitS,
           fmt("%zu itemsets; after %zu episodes greedy policy mean %.1f vs random %.1f (ratio %.2f, need >= %.1f); "
               "training reward first/last %zu episodes %.1f -> %.1f; %.0f s (limit %.0f s)",
               bench.catalog->size(), ck->episodes_trained, trained.mean, random.mean, trained.mean / random.mean,
               kLearningRatio, w, first, last, t, kLearningLimitS)}};
}

// 7 -------------------------------------------------------------------------
Outcome utility_dominance(const Bench& bench, std::shared_ptr<const PolicyCheckpoint> ck) {
  BenchmarkOptions opt;
  opt.base = bench.env;
  opt.seeds = {0, 1, 2, 3, 4};
  opt.workers = 5;
  const std::vector<Variant> variants{parse_variant("top1sum_HU"), parse_variant("random"),
                                      parse_variant("rlsum_HU", ck)};
  const auto totals = aggregate(run_benchmark(bench.catalog, bench.scales, nullptr, variants, opt));
  std::size_t beats_random = 0, beats_rl = 0;
  std::string detail;
  for (std::size_t i = 0; i < opt.seeds.size(); ++i) {
    const auto& top = totals[i];
    const auto& rnd = totals[opt.seeds.size() + i];
    const auto& rl = totals[2 * opt.seeds.size() + i];
    const bool vs_random = top.cum_utility >= rnd.cum_utility + kDominanceMargin * std::abs(rnd.cum_utility);
    const bool vs_rl = top.cum_utility >= rl.cum_utility;
    beats_random += vs_random;
    beats_rl += vs_rl;
    detail += fmt("%sseed %llu: top1sum %.1f, random %.1f, rlsum %.1f", i ? "; " : "",
                  static_cast<unsigned long long>(top.seed), top.cum_utility, rnd.cum_utility, rl.cum_utility);
  }
  const std::size_t n = opt.seeds.size();
  return {beats_random == n && beats_rl == n,
          fmt("t=%zu; Top1Sum-HU >= random+10%% on %zu/%zu seeds, >= RLSum on %zu/%zu seeds (", bench.env.t_total,
              beats_random, n, beats_rl, n) +
              detail + ")"};
}

// 8 -------------------------------------------------------------------------
double pearson(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  return sxx > 0 && syy > 0 ? sxy / std::sqrt(sxx * syy) : 0.0;
}

Outcome latency_asymmetry() {
  SyntheticOptions opt;
  opt.rows = 20000;
  opt.attributes = 8;
  opt.clusters = 0;
  opt.seed = 3;
  const auto table = make_synthetic(opt).table;
  struct Series {
    std::vector<double> candidates, decide, wall;
  } top, rl;
  std::size_t smallest = SIZE_MAX;
  std::string sizes;
  RlTrainConfig init;
  for (const std::size_t bins : {5, 10, 20}) {
    const auto cat = std::make_shared<const PatternCatalog>(mine_closed_itemsets(equi_depth_bin(table, bins), 3));
    smallest = std::min(smallest, cat->size());
    sizes += fmt("%sbins %zu: %zu", sizes.empty() ? "" : ", ", bins, cat->size());
    SessionConfig cfg;
    cfg.t_total = 31;
    cfg.swap_threshold = 0.5;
    const auto scales = calibrate_scales(*cat, cfg.k, 200, 0);
    const auto ck = std::make_shared<const PolicyCheckpoint>(initial_checkpoint(cfg.k, cat->attribute_count(), init));
    auto record = [&](Planner& p, Series& out, StrategyKind kind) {
      auto c = cfg;
      c.strategy = kind;
      Session s(cat, scales, c);
      for (const auto& st : run_full_pipeline(s, p).steps) {
        out.candidates.push_back(static_cast<double>(st.candidates));
        out.decide.push_back(st.decide_ms);
        out.wall.push_back(st.wall_ms);
      }
    };
    Top1SumPlanner tp;
    RlPlanner rp(ck);
    record(tp, top, StrategyKind::top1sum);
    record(rp, rl, StrategyKind::rlsum);
  }
  auto mean = [](const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size()); };
  const double speedup = mean(top.decide) / mean(rl.decide);
  const double r_top = pearson(top.candidates, top.decide);
  const double r_rl = pearson(rl.candidates, rl.decide);
  const bool pass = smallest >= kLatencyMinItemsets && speedup >= kLatencySpeedup && r_top >= kTopMinCorrelation &&
                    r_rl <= kRlMaxCorrelation;
  return {pass,
          fmt("catalogs %s itemsets; mean decision time Top1Sum %.3f ms vs RLSum %.4f ms (speedup %.1fx, need >= "
              "%.0fx); corr(candidates, time) Top1Sum %.2f (need >= %.1f), RLSum %.2f (need <= %.1f); wall-clock "
              "incl. executing the chosen action: %.3f vs %.3f ms, RLSum corr %.2f; %zu steps each",
              sizes.c_str(), mean(top.decide), mean(rl.decide), speedup, kLatencySpeedup, r_top, kTopMinCorrelation,
              r_rl, kRlMaxCorrelation, mean(top.wall), mean(rl.wall), pearson(rl.candidates, rl.wall),
              top.decide.size())};
}

// 9 -------------------------------------------------------------------------
Outcome replay_determinism(const Bench& bench, std::shared_ptr<const PolicyCheckpoint> ck) {
  struct Case {
    const char* name;
    StrategyKind strategy;
    UtilityWeights weights;
    OperatorSet ops;
  };
  const Case cases[] = {
      {"top1sum_HU", StrategyKind::top1sum, {WeightScheme::fixed, WeightPreset::HU}, OperatorSet::all},
      {"top1sum_DC", StrategyKind::top1sum, {WeightScheme::decreasing_novelty, WeightPreset::BL}, OperatorSet::all},
      {"top1sum_IC_2op", StrategyKind::top1sum, {WeightScheme::increasing_novelty, WeightPreset::BL}, OperatorSet::two_op},
      {"random_BL", StrategyKind::random, {WeightScheme::fixed, WeightPreset::BL}, OperatorSet::all},
      {"rlsum_HU", StrategyKind::rlsum, {WeightScheme::fixed, WeightPreset::HU}, OperatorSet::all},
  };
  double worst = 0.0;
  std::size_t ok = 0, steps = 0;
  for (const auto& c : cases) {
    auto cfg = bench.env;
    cfg.strategy = c.strategy;
    cfg.weights = c.weights;
    cfg.operators = c.ops;
    cfg.seed = 9;
    Session s(bench.catalog, bench.scales, cfg);
    std::unique_ptr<Planner> p;
    if (c.strategy == StrategyKind::top1sum) p = std::make_unique<Top1SumPlanner>();
    if (c.strategy == StrategyKind::random) p = std::make_unique<RandomPlanner>(cfg.seed);
    if (c.strategy == StrategyKind::rlsum) p = std::make_unique<RlPlanner>(ck, SelectMode::sample, cfg.seed);
    run_full_pipeline(s, *p);
    std::istringstream log(pipeline_log(s));
    const auto rep = replay_pipeline_log(log, bench.catalog);
    worst = std::max(worst, rep.max_abs_error);
    steps += rep.steps;
    ok += rep.results_match && rep.max_abs_error <= kReplayTol && rep.steps == s.history().size();
  }
  const std::size_t n = std::size(cases);
  return {ok == n, fmt("%zu/%zu logged pipelines (%zu steps) replay with identical results, max |d| %.2e (tol %.0e)",
                       ok, n, steps, worst, kReplayTol)};
}

}  // namespace

int main() {
  bool all = true;
  auto report = [&](int id, const char* name, const Outcome& o) {
    all = all && o.pass;
    std::printf("criterion %d %s %s: %s\n", id, o.pass ? "PASS" : "FAIL", name, o.detail.c_str());
    std::fflush(stdout);
  };
  report(1, "mining oracle", mining_oracle());
  report(2, "one-shot equivalence", one_shot_equivalence());
  report(3, "greedy oracle", greedy_oracle());
  report(4, "metric properties", metric_properties());
  report(5, "gradient check", gradient_check());
  const auto bench = load_bench();
  const auto learned = rl_learning(bench);
  report(6, "RL learning", learned.outcome);
  report(7, "utility dominance", utility_dominance(bench, learned.checkpoint));
  report(8, "latency asymmetry", latency_asymmetry());
  report(9, "replay determinism", replay_determinism(bench, learned.checkpoint));
  std::printf("acceptance %s\n", all ? "PASS" : "FAIL");
  return all ? 0 : 1;
}
