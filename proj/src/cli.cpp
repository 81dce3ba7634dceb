#include "edasum/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "edasum/config.hpp"
#include "edasum/error.hpp"
#include "edasum/evaluation.hpp"
#include "edasum/ingest.hpp"
#include "edasum/json_io.hpp"
#include "edasum/service.hpp"
#include "edasum/swap.hpp"
#include "edasum/synthetic.hpp"

namespace edasum {

namespace {

// Flags that map onto configuration keys; given flags override the config file.
struct SettingFlag {
  const char* flag;
  const char* key;
  const char* help;
};

constexpr SettingFlag kMineFlags[] = {
    {"--bins", "bins", "Bins per attribute"},
    {"--support", "support", "Minimum support"},
};
constexpr SettingFlag kSessionFlags[] = {
    {"--k", "k", "Summary size"},
    {"--t", "t", "Pipeline length in summaries, bootstrap included"},
    {"--preset", "weights.preset", "Weight preset: HU, HD, HN or BL"},
    {"--scheme", "weights.scheme", "Evolving weights: DC, IC or none"},
    {"--threshold", "swap.threshold", "SWAP uniformity threshold"},
    {"--strategy", "strategy", "Planner: top1sum, rlsum or random"},
    {"--operators", "operators", "Operator set: all or 2op"},
};
constexpr SettingFlag kSeedFlag[] = {{"--seed", "seed", "Seed for every random choice"}};
constexpr SettingFlag kWorkerFlag[] = {{"--workers", "workers", "Thread cap"}};
constexpr SettingFlag kTrainFlags[] = {
    {"--episodes", "rl.episodes", "Training episodes"},
    {"--lr", "rl.lr", "Learning rate"},
};
constexpr SettingFlag kCalibrateFlags[] = {{"--sample-size", "scaling.sample_size", "Calibration samples"}};

struct Invocation {
  std::string config;
  std::map<std::string, std::string> values;
  std::vector<std::pair<std::string, CLI::Option*>> given;
  std::string input, out, scales, checkpoint, ground_truth, log, variants, columns, addr;
  std::size_t runs = 5;
  bool no_timing = false;
  std::size_t synth_rows = SyntheticOptions{}.rows;
  std::size_t synth_clusters = SyntheticOptions{}.clusters;

  Settings settings() const {
    Settings s;
    if (!config.empty()) s.apply(KeyValueConfig::load(config));
    for (const auto& [key, opt] : given) {
      if (opt->count() > 0) s.apply(key, values.at(key));
    }
    s.validate();
    return s;
  }

  bool flag_given(const std::string& key) const {
    return std::any_of(given.begin(), given.end(), [&](const auto& g) { return g.first == key && g.second->count() > 0; });
  }
};

template <std::size_t N>
void add_settings(CLI::App* app, Invocation& inv, const SettingFlag (&flags)[N]) {
  for (const auto& f : flags) inv.given.emplace_back(f.key, app->add_option(f.flag, inv.values[f.key], f.help));
}

std::ofstream open_out(const std::string& path, bool binary = false) {
  std::ofstream os(path, binary ? std::ios::binary : std::ios::out);
  if (!os) throw InputError("cannot write " + path);
  return os;
}

std::shared_ptr<const PatternCatalog> read_catalog(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open catalog " + path);
  return std::make_shared<const PatternCatalog>(load_catalog(in));
}

ComponentScales scales_for(const Invocation& inv, const Settings& s, const PatternCatalog& catalog) {
  if (!inv.scales.empty()) {
    std::ifstream in(inv.scales);
    if (!in) throw InputError("cannot open scales " + inv.scales);
    return load_scales(in);
  }
  if (!s.scaling_enabled) return {};
  return calibrate_scales(catalog, s.session.k, s.scaling_sample_size, s.scaling_seed);
}

std::shared_ptr<const PolicyCheckpoint> read_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open checkpoint " + path);
  return std::make_shared<const PolicyCheckpoint>(load_checkpoint(in));
}

// Writes to --out when given, else to stdout.
void emit(const Invocation& inv, std::ostream& out, const std::string& text) {
  if (inv.out.empty()) {
    out << text;
  } else {
    open_out(inv.out) << text;
  }
}

void run_mine(const Invocation& inv, std::ostream& out) {
  const auto s = inv.settings();
  std::optional<std::vector<std::string>> schema;
  if (!inv.columns.empty()) {
    schema.emplace();
    std::stringstream ss(inv.columns);
    for (std::string c; std::getline(ss, c, ',');) schema->push_back(c);
  }
  const auto binned = equi_depth_bin(load_table(inv.input, schema), s.bins);
  const auto catalog = mine_closed_itemsets(binned, MiningOptions{s.support, s.max_itemsets, true});
  auto os = open_out(inv.out, true);
  save_catalog(catalog, os);
  out << "mined " << catalog.size() << " closed itemsets from " << binned.rows() << " rows into " << inv.out << '\n';
}

void run_calibrate(const Invocation& inv, std::ostream& out) {
  const auto s = inv.settings();
  const auto catalog = read_catalog(inv.input);
  const auto scales = calibrate_scales(*catalog, s.session.k, s.scaling_sample_size, s.scaling_seed);
  std::ostringstream text;
  save_scales(scales, text);
  emit(inv, out, text.str());
}

void run_swap(const Invocation& inv, std::ostream& out) {
  const auto s = inv.settings();
  const auto catalog = read_catalog(inv.input);
  const auto summary = swap_summary(*catalog, s.session.k, s.session.swap_threshold);
  Json cards = Json::array();
  for (const auto id : summary) cards.push_back(itemset_card(*catalog, id));
  const Json j = {{"summary", summary},
                  {"uniformity", uniformity_summary(summary, *catalog)},
                  {"diversity", diversity_summary(summary, *catalog)},
                  {"itemsets", cards}};
  emit(inv, out, j.dump() + "\n");
}

std::unique_ptr<Planner> make_planner(const Invocation& inv, const SessionConfig& cfg) {
  switch (cfg.strategy) {
    case StrategyKind::top1sum: return std::make_unique<Top1SumPlanner>();
    case StrategyKind::random: return std::make_unique<RandomPlanner>(cfg.seed);
    case StrategyKind::rlsum:
      if (inv.checkpoint.empty()) throw ConfigError("checkpoint", "strategy rlsum needs --checkpoint");
      return std::make_unique<RlPlanner>(read_checkpoint(inv.checkpoint), SelectMode::greedy, cfg.seed);
  }
  throw PreconditionError("unknown strategy");
}

void run_pipeline(const Invocation& inv, std::ostream& out, std::ostream& err) {
  auto s = inv.settings();
  s.session.mode = GuidanceMode::full;
  const auto catalog = read_catalog(inv.input);
  Session session(catalog, scales_for(inv, s, *catalog), s.session);
  auto planner = make_planner(inv, s.session);
  const auto run = run_full_pipeline(session, *planner);
  if (run.stopped_early) err << "pipeline stopped early: " << run.stop_reason << '\n';
  emit(inv, out, pipeline_log(session, {!inv.no_timing}));
}

void run_train(const Invocation& inv, std::ostream& out) {
  auto s = inv.settings();
  if (inv.flag_given("t")) s.rl.steps_per_episode = s.session.t_total;
  s.rl.validate();
  const auto catalog = read_catalog(inv.input);
  const auto scales = scales_for(inv, s, *catalog);
  auto env = s.session;
  env.strategy = StrategyKind::rlsum;
  const auto result = inv.checkpoint.empty()
                          ? train_policy(catalog, scales, env, s.rl)
                          : [&] {
                              auto start = *read_checkpoint(inv.checkpoint);
                              start.train.episodes = s.rl.episodes;
                              start.train.workers = s.rl.workers;
                              return train_policy(std::move(start), catalog, scales, env);
                            }();
  auto os = open_out(inv.out, true);
  save_checkpoint(result.checkpoint, os);
  const auto log_path = inv.log.empty() ? inv.out + ".rewards.csv" : inv.log;
  auto log = open_out(log_path);
  log << "episode,reward\n";
  char buf[32];
  for (std::size_t i = 0; i < result.episode_rewards.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g", result.episode_rewards[i]);
    log << i << ',' << buf << '\n';
  }
  out << "trained " << result.episode_rewards.size() << " episodes into " << inv.out << "; rewards in " << log_path
      << '\n';
}

void run_evaluate(const Invocation& inv, std::ostream& out) {
  const auto s = inv.settings();
  const auto catalog = read_catalog(inv.input);
  const auto scales = scales_for(inv, s, *catalog);
  std::shared_ptr<const PolicyCheckpoint> ck;
  if (!inv.checkpoint.empty()) ck = read_checkpoint(inv.checkpoint);
  std::string names = inv.variants;
  if (names.empty()) names = ck ? "top1sum_HU,rlsum_HU,random" : "top1sum_HU,random";
  std::vector<Variant> variants;
  std::stringstream ss(names);
  for (std::string v; std::getline(ss, v, ',');) variants.push_back(parse_variant(v, ck));
  std::optional<GroundTruth> gt;
  if (!inv.ground_truth.empty()) gt = load_ground_truth(inv.ground_truth);
  BenchmarkOptions opt;
  opt.base = s.session;
  opt.workers = s.session.workers;
  opt.seeds.clear();
  if (inv.runs == 0) throw ConfigError("runs", "--runs must be at least 1");
  for (std::size_t i = 0; i < inv.runs; ++i) opt.seeds.push_back(s.session.seed + i);
  const auto rows = run_benchmark(catalog, scales, gt ? &*gt : nullptr, variants, opt);
  std::ostringstream csv;
  write_benchmark_csv(rows, csv);
  if (inv.out.empty()) {
    out << csv.str();
    return;
  }
  open_out(inv.out) << csv.str();
  for (const auto& t : aggregate(rows)) {
    out << t.variant << " seed " << t.seed << ": cum_utility " << t.cum_utility << ", relevance " << t.cum_relevance
        << '\n';
  }
}

void run_serve(const Invocation& inv, std::ostream& out) {
  const auto s = inv.settings();
  std::vector<Dataset> datasets;
  for (const auto& src : s.datasets) datasets.push_back(load_dataset(src));
  if (!inv.input.empty()) {
    datasets.push_back(load_dataset({"default", inv.input, inv.scales, inv.checkpoint}));
  }
  if (datasets.empty()) throw ConfigError("serve.datasets[]", "serve needs --input or serve.datasets[] entries");
  Service service(std::move(datasets));
  const auto addr = inv.addr.empty() ? s.serve_addr : inv.addr;
  out << "serving on " << addr << std::endl;
  serve_http(service, addr);
}

void run_synth(const Invocation& inv, std::ostream& out) {
  const auto s = inv.settings();
  SyntheticOptions opt;
  opt.rows = inv.synth_rows;
  opt.clusters = inv.synth_clusters;
  if (inv.flag_given("seed")) opt.seed = s.session.seed;
  const auto data = make_synthetic(opt);
  open_out(inv.out) << to_csv(data.table);
  if (!inv.ground_truth.empty()) {
    std::vector<GroundTruthSet> sets;
    for (const auto& c : data.clusters) sets.push_back({c.label, MemberSet(c.rows)});
    auto os = open_out(inv.ground_truth);
    save_ground_truth(GroundTruth(std::move(sets)), os);
  }
  out << "wrote " << opt.rows << " rows and " << data.clusters.size() << " planted clusters to " << inv.out << '\n';
}

}  // namespace

int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Guided data summarization: mine itemsets, plan summarization pipelines, train and evaluate planners.",
               "edasum"};
  app.require_subcommand(1);
  Invocation inv;

  auto common = [&](CLI::App* sub) { sub->add_option("--config", inv.config, "Key-value configuration file"); };

  auto* mine = app.add_subcommand("mine", "CSV -> closed itemset catalog");
  common(mine);
  mine->add_option("--input", inv.input, "CSV file with a header row")->required();
  mine->add_option("--out", inv.out, "Catalog file")->required();
  mine->add_option("--columns", inv.columns, "Comma-separated columns to keep");
  add_settings(mine, inv, kMineFlags);

  auto* calibrate = app.add_subcommand("calibrate", "catalog -> component scales");
  common(calibrate);
  calibrate->add_option("--input", inv.input, "Catalog file")->required();
  calibrate->add_option("--out", inv.out, "Scales file (stdout when omitted)");
  inv.given.emplace_back("k", calibrate->add_option("--k", inv.values["k"], "Summary size"));
  add_settings(calibrate, inv, kCalibrateFlags);
  add_settings(calibrate, inv, kSeedFlag);

  auto* swap = app.add_subcommand("swap", "one-shot SWAP summary");
  common(swap);
  swap->add_option("--input", inv.input, "Catalog file")->required();
  swap->add_option("--out", inv.out, "Output JSON (stdout when omitted)");
  inv.given.emplace_back("k", swap->add_option("--k", inv.values["k"], "Summary size"));
  inv.given.emplace_back("swap.threshold",
                         swap->add_option("--threshold", inv.values["swap.threshold"], "SWAP uniformity threshold"));

  auto* pipeline = app.add_subcommand("pipeline", "full-guidance run -> pipeline log");
  auto* train = app.add_subcommand("train", "actor-critic training -> checkpoint and reward log");
  auto* evaluate = app.add_subcommand("evaluate", "benchmark variants -> benchmark CSV");
  for (auto* sub : {pipeline, train, evaluate}) {
    common(sub);
    sub->add_option("--input", inv.input, "Catalog file")->required();
    sub->add_option("--scales", inv.scales, "Scales file (calibrated on the fly when omitted)");
    sub->add_option("--checkpoint", inv.checkpoint, "Policy checkpoint");
    add_settings(sub, inv, kSessionFlags);
    add_settings(sub, inv, kSeedFlag);
    add_settings(sub, inv, kWorkerFlag);
  }
  pipeline->add_option("--out", inv.out, "Pipeline log (stdout when omitted)");
  pipeline->add_flag("--no-timing", inv.no_timing, "Omit wall-clock fields from the log");
  train->add_option("--out", inv.out, "Checkpoint file")->required();
  train->add_option("--log", inv.log, "Reward log CSV (default: <out>.rewards.csv)");
  add_settings(train, inv, kTrainFlags);
  evaluate->add_option("--out", inv.out, "Benchmark CSV (stdout when omitted)");
  evaluate->add_option("--ground-truth", inv.ground_truth, "Ground-truth sets for relevance");
  evaluate->add_option("--variants", inv.variants, "Comma-separated variants, e.g. top1sum_HU,random");
  evaluate->add_option("--runs", inv.runs, "Seeds per variant, starting at --seed");

  auto* serve = app.add_subcommand("serve", "start the HTTP JSON API");
  common(serve);
  serve->add_option("--input", inv.input, "Catalog served as dataset 'default'");
  serve->add_option("--scales", inv.scales, "Scales for --input");
  serve->add_option("--checkpoint", inv.checkpoint, "Policy checkpoint for --input");
  serve->add_option("--addr", inv.addr, "host:port (overrides serve.addr)");

  auto* synth = app.add_subcommand("synth", "generate the synthetic benchmark table and its ground truth");
  common(synth);
  synth->add_option("--out", inv.out, "CSV file")->required();
  synth->add_option("--ground-truth", inv.ground_truth, "Ground-truth file of the planted clusters");
  synth->add_option("--rows", inv.synth_rows, "Rows");
  synth->add_option("--clusters", inv.synth_clusters, "Planted clusters");
  add_settings(synth, inv, kSeedFlag);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "edasum: " << e.what() << "\n\n" << app.help();
    return 2;
  }
  try {
    if (mine->parsed()) run_mine(inv, out);
    if (calibrate->parsed()) run_calibrate(inv, out);
    if (swap->parsed()) run_swap(inv, out);
    if (pipeline->parsed()) run_pipeline(inv, out, err);
    if (train->parsed()) run_train(inv, out);
    if (evaluate->parsed()) run_evaluate(inv, out);
    if (serve->parsed()) run_serve(inv, out);
    if (synth->parsed()) run_synth(inv, out);
  } catch (const ConfigError& e) {
    err << "edasum: configuration error" << (e.field().empty() ? "" : " (" + e.field() + ")") << ": " << e.what()
        << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "edasum: error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

}  // namespace edasum
