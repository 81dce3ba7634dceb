#include "edasum/evaluation.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <mutex>
#include <ostream>
#include <set>
#include <sstream>
#include <thread>

#include "edasum/error.hpp"

namespace edasum {

GroundTruth::GroundTruth(std::vector<GroundTruthSet> sets) : sets_(std::move(sets)) {
  std::set<std::string> labels;
  std::set<ItemId> used;
  for (const auto& s : sets_) {
    if (!labels.insert(s.label).second) throw InputError("ground truth: duplicate label '" + s.label + "'");
    if (s.members.empty()) throw InputError("ground truth: set '" + s.label + "' is empty");
    for (const auto id : s.members) {
      if (!used.insert(id).second) {
        throw InputError("ground truth: item " + std::to_string(id) + " appears in more than one set");
      }
    }
  }
}

GroundTruth parse_ground_truth(const std::string& text) {
  std::vector<GroundTruthSet> sets;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos || tab == 0) {
      throw InputError("ground truth line " + std::to_string(lineno) + ": expected label<TAB>ids");
    }
    std::vector<ItemId> ids;
    std::string_view rest(line);
    rest.remove_prefix(tab + 1);
    while (!rest.empty()) {
      const auto comma = rest.find(',');
      const auto tok = rest.substr(0, comma);
      ItemId id = 0;
      const auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), id);
      if (ec != std::errc() || p != tok.data() + tok.size()) {
        throw InputError("ground truth line " + std::to_string(lineno) + ": bad item id '" + std::string(tok) + "'");
      }
      ids.push_back(id);
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    sets.push_back({line.substr(0, tab), MemberSet(std::move(ids))});
  }
  return GroundTruth(std::move(sets));
}

GroundTruth load_ground_truth(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open ground truth file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_ground_truth(buf.str());
}

void save_ground_truth(const GroundTruth& gt, std::ostream& os) {
  for (const auto& s : gt.sets()) {
    os << s.label << '\t';
    bool first = true;
    for (const auto id : s.members) {
      if (!first) os << ',';
      os << id;
      first = false;
    }
    os << '\n';
  }
}

RelevanceTrace relevance(const PatternCatalog& catalog, const std::vector<Summary>& summaries,
                         const GroundTruth& gt, double threshold) {
  if (!(threshold > 0.0 && threshold <= 1.0)) throw PreconditionError("relevance threshold must be in (0, 1]");
  if (gt.empty()) throw PreconditionError("ground truth is empty");
  RelevanceTrace trace;
  std::vector<char> found(gt.size(), 0);
  for (const auto& summary : summaries) {
    for (const auto id : summary) {
      const auto& members = catalog.itemset(id).members;
      for (std::size_t g = 0; g < gt.size(); ++g) {
        if (!found[g] && jaccard(members, gt.sets()[g].members) >= threshold) {
          found[g] = 1;
          ++trace.discovered;
        }
      }
    }
    trace.cumulative.push_back(trace.discovered);
  }
  return trace;
}

std::vector<Summary> displayed_summaries(const Session& session) {
  std::vector<Summary> out{session.bootstrap()};
  for (const auto& s : session.history()) out.push_back(s.result);
  return out;
}

std::array<double, kOperatorCount> operator_usage(const std::vector<PipelineStep>& steps) {
  if (steps.empty()) throw PreconditionError("operator usage of an empty pipeline");
  std::array<double, kOperatorCount> usage{};
  for (const auto& s : steps) usage[static_cast<std::size_t>(s.action.op)] += 1.0;
  for (auto& u : usage) u /= static_cast<double>(steps.size());
  return usage;
}

Variant parse_variant(const std::string& name, std::shared_ptr<const PolicyCheckpoint> checkpoint) {
  Variant v;
  v.name = name;
  const auto us = name.find('_');
  v.strategy = parse_strategy(name.substr(0, us));
  if (us != std::string::npos) {
    const auto suffix = name.substr(us + 1);
    if (suffix == "IC" || suffix == "DC") {
      v.weights.scheme = parse_scheme(suffix);
    } else {
      v.weights.preset = parse_preset(suffix);
    }
  }
  if (v.strategy == StrategyKind::rlsum) {
    if (!checkpoint) throw ConfigError("checkpoint", "variant " + name + " needs a policy checkpoint");
    v.checkpoint = std::move(checkpoint);
  }
  return v;
}

namespace {

std::vector<BenchmarkRow> run_one(std::shared_ptr<const PatternCatalog> catalog, const ComponentScales& scales,
                                  const GroundTruth* gt, const Variant& variant, std::uint64_t seed,
                                  const BenchmarkOptions& options) {
  SessionConfig cfg = options.base;
  cfg.strategy = variant.strategy;
  cfg.weights = variant.weights;
  cfg.seed = seed;
  Session session(catalog, scales, cfg);
  std::unique_ptr<Planner> planner;
  switch (variant.strategy) {
    case StrategyKind::top1sum: planner = std::make_unique<Top1SumPlanner>(); break;
    case StrategyKind::random: planner = std::make_unique<RandomPlanner>(seed); break;
    case StrategyKind::rlsum: planner = std::make_unique<RlPlanner>(variant.checkpoint, SelectMode::greedy, seed); break;
  }
  run_full_pipeline(session, *planner);

  std::vector<std::size_t> rel;
  if (gt) rel = relevance(*catalog, displayed_summaries(session), *gt, options.relevance_threshold).cumulative;
  std::vector<BenchmarkRow> rows;
  double cum = 0.0;
  auto push = [&](std::size_t step, std::string op, const UtilityBreakdown& b, double ms) {
    cum += b.utility;
    rows.push_back({variant.name, seed, step, std::move(op), b.raw, b.scaled, b.utility, cum,
                    gt ? rel[step] : 0, ms});
  };
  push(0, "swap", session.bootstrap_breakdown(), 0.0);
  const auto& h = session.history();
  for (std::size_t i = 0; i < h.size(); ++i) {
    push(i + 1, std::string(to_string(h[i].action.op)), h[i].breakdown, h[i].wall_ms);
  }
  return rows;
}

}  // namespace

std::vector<BenchmarkRow> run_benchmark(std::shared_ptr<const PatternCatalog> catalog,
                                        const ComponentScales& scales, const GroundTruth* gt,
                                        const std::vector<Variant>& variants,
                                        const BenchmarkOptions& options) {
  if (variants.empty()) throw PreconditionError("benchmark needs at least one variant");
  if (options.seeds.empty()) throw PreconditionError("benchmark needs at least one seed");
  const std::size_t jobs = variants.size() * options.seeds.size();
  std::vector<std::vector<BenchmarkRow>> results(jobs);
  std::atomic<std::size_t> next{0};
  std::mutex err_mu;
  std::exception_ptr error;
  auto work = [&] {
    for (std::size_t j; (j = next.fetch_add(1)) < jobs;) {
      try {
        results[j] = run_one(catalog, scales, gt, variants[j / options.seeds.size()],
                             options.seeds[j % options.seeds.size()], options);
      } catch (...) {
        std::lock_guard lock(err_mu);
        if (!error) error = std::current_exception();
      }
    }
  };
  const std::size_t workers = std::clamp<std::size_t>(options.workers, 1, jobs);
  if (workers == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  if (error) std::rethrow_exception(error);
  std::vector<BenchmarkRow> rows;
  for (auto& r : results) rows.insert(rows.end(), r.begin(), r.end());
  return rows;
}

namespace {

constexpr const char* kCsvHeader =
    "variant,seed,step,operator,uni_raw,div_raw,nov_raw,uni_scaled,div_scaled,nov_scaled,utility,"
    "cum_utility,cum_relevance,wall_ms";

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double parse_double(const std::string& s, std::size_t line) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw InputError("benchmark csv line " + std::to_string(line) + ": bad number '" + s + "'");
  }
}

}  // namespace

void write_benchmark_csv(const std::vector<BenchmarkRow>& rows, std::ostream& os) {
  os << kCsvHeader << '\n';
  for (const auto& r : rows) {
    os << r.variant << ',' << r.seed << ',' << r.step << ',' << r.op << ',' << fmt(r.raw.uniformity) << ','
       << fmt(r.raw.diversity) << ',' << fmt(r.raw.novelty) << ',' << fmt(r.scaled.uniformity) << ','
       << fmt(r.scaled.diversity) << ',' << fmt(r.scaled.novelty) << ',' << fmt(r.utility) << ','
       << fmt(r.cum_utility) << ',' << r.cum_relevance << ',' << fmt(r.wall_ms) << '\n';
  }
}

std::vector<BenchmarkRow> read_benchmark_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line != kCsvHeader) throw InputError("benchmark csv: unexpected header");
  std::vector<BenchmarkRow> rows;
  for (std::size_t n = 2; std::getline(is, line); ++n) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) f.push_back(cell);
    if (f.size() != 14) throw InputError("benchmark csv line " + std::to_string(n) + ": expected 14 fields");
    BenchmarkRow r;
    r.variant = f[0];
    r.seed = static_cast<std::uint64_t>(parse_double(f[1], n));
    r.step = static_cast<std::size_t>(parse_double(f[2], n));
    r.op = f[3];
    r.raw = {parse_double(f[4], n), parse_double(f[5], n), parse_double(f[6], n)};
    r.scaled = {parse_double(f[7], n), parse_double(f[8], n), parse_double(f[9], n)};
    r.utility = parse_double(f[10], n);
    r.cum_utility = parse_double(f[11], n);
    r.cum_relevance = static_cast<std::size_t>(parse_double(f[12], n));
    r.wall_ms = parse_double(f[13], n);
    rows.push_back(std::move(r));
  }
  return rows;
}

std::vector<RunTotal> aggregate(const std::vector<BenchmarkRow>& rows) {
  std::vector<RunTotal> out;
  for (const auto& r : rows) {
    if (out.empty() || out.back().variant != r.variant || out.back().seed != r.seed) {
      out.push_back({r.variant, r.seed, 0.0, 0, 0});
    }
    auto& t = out.back();
    t.cum_utility += r.utility;
    t.cum_relevance = std::max(t.cum_relevance, r.cum_relevance);
    ++t.steps;
  }
  return out;
}

}  // namespace edasum
