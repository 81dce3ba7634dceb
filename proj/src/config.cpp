#include "edasum/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "edasum/error.hpp"

namespace edasum {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::size_t to_size(const std::string& key, const std::string& v) {
  std::size_t out = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) {
    throw ConfigError(key, key + " must be a nonnegative integer, got '" + v + "'");
  }
  return out;
}

double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used == v.size()) return d;
  } catch (const std::exception&) {
  }
  throw ConfigError(key, key + " must be a number, got '" + v + "'");
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError(key, key + " must be true or false, got '" + v + "'");
}

// The enum parsers throw ConfigError with their own field; rename it to the key.
template <typename F>
auto keyed(const std::string& key, F&& f) {
  try {
    return f();
  } catch (const ConfigError& e) {
    throw ConfigError(key, e.what());
  } catch (const std::invalid_argument& e) {
    throw ConfigError(key, e.what());
  }
}

}  // namespace

KeyValueConfig KeyValueConfig::parse(const std::string& text) {
  KeyValueConfig c;
  std::istringstream in(text);
  std::string line;
  for (std::size_t n = 1; std::getline(in, line); ++n) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    const auto body = trim(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("", "config line " + std::to_string(n) + ": expected key = value");
    }
    const auto key = trim(std::string_view(body).substr(0, eq));
    if (key.empty()) throw ConfigError("", "config line " + std::to_string(n) + ": empty key");
    c.set(key, trim(std::string_view(body).substr(eq + 1)));
  }
  return c;
}

KeyValueConfig KeyValueConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open config file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse(buf.str());
}

void KeyValueConfig::set(const std::string& key, const std::string& value) {
  auto [it, fresh] = values_.try_emplace(key);
  if (fresh) order_.push_back(key);
  if (key.ends_with("[]")) {
    it->second.push_back(value);
  } else {
    it->second = {value};
  }
}

std::optional<std::string> KeyValueConfig::get(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end() || it->second.empty()) return std::nullopt;
  return it->second.back();
}

std::vector<std::string> KeyValueConfig::get_all(const std::string& key) const {
  const auto it = values_.find(key);
  return it == values_.end() ? std::vector<std::string>{} : it->second;
}

DatasetSource parse_dataset_source(const std::string& text) {
  DatasetSource d;
  std::stringstream ss(text);
  for (std::string part; std::getline(ss, part, ',');) {
    const auto eq = part.find('=');
    if (eq == std::string::npos) throw ConfigError("serve.datasets[]", "expected name=value in '" + part + "'");
    const auto k = trim(std::string_view(part).substr(0, eq));
    const auto v = trim(std::string_view(part).substr(eq + 1));
    if (k == "id") {
      d.id = v;
    } else if (k == "catalog") {
      d.catalog = v;
    } else if (k == "scales") {
      d.scales = v;
    } else if (k == "checkpoint") {
      d.checkpoint = v;
    } else {
      throw ConfigError("serve.datasets[]", "unknown dataset field '" + k + "'");
    }
  }
  if (d.id.empty() || d.catalog.empty()) {
    throw ConfigError("serve.datasets[]", "a dataset needs id= and catalog=");
  }
  return d;
}

void Settings::apply(const std::string& key, const std::string& v) {
  auto& s = session;
  if (key == "bins") {
    bins = to_size(key, v);
  } else if (key == "support") {
    support = to_size(key, v);
  } else if (key == "max_itemsets") {
    max_itemsets = to_size(key, v);
  } else if (key == "k") {
    s.k = to_size(key, v);
  } else if (key == "t") {
    s.t_total = to_size(key, v);
  } else if (key == "mode") {
    s.mode = keyed(key, [&] { return parse_mode(v); });
  } else if (key == "strategy") {
    s.strategy = keyed(key, [&] { return parse_strategy(v); });
  } else if (key == "weights.preset") {
    s.weights.preset = keyed(key, [&] { return parse_preset(v); });
  } else if (key == "weights.scheme") {
    s.weights.scheme = keyed(key, [&] { return parse_scheme(v); });
  } else if (key == "swap.threshold") {
    s.swap_threshold = to_double(key, v);
  } else if (key == "operators") {
    s.operators = keyed(key, [&] { return parse_operator_set(v); });
  } else if (key == "seed") {
    const auto seed = static_cast<std::uint64_t>(to_size(key, v));
    s.seed = seed;
    scaling_seed = seed;
    rl.seed = seed;
  } else if (key == "workers") {
    const auto w = to_size(key, v);
    s.workers = w;
    rl.workers = w;
  } else if (key == "scaling.enabled") {
    scaling_enabled = to_bool(key, v);
  } else if (key == "scaling.sample_size") {
    scaling_sample_size = to_size(key, v);
  } else if (key == "scaling.seed") {
    scaling_seed = to_size(key, v);
  } else if (key == "rl.workers") {
    rl.workers = to_size(key, v);
  } else if (key == "rl.update_interval") {
    rl.update_interval = to_size(key, v);
  } else if (key == "rl.episodes") {
    rl.episodes = to_size(key, v);
  } else if (key == "rl.steps_per_episode") {
    rl.steps_per_episode = to_size(key, v);
  } else if (key == "rl.discount") {
    rl.discount = to_double(key, v);
  } else if (key == "rl.lr") {
    rl.lr = to_double(key, v);
  } else if (key == "rl.entropy") {
    rl.entropy = to_double(key, v);
  } else if (key == "rl.value_coeff") {
    rl.value_coeff = to_double(key, v);
  } else if (key == "rl.hidden") {
    rl.hidden = to_size(key, v);
  } else if (key == "rl.seed") {
    rl.seed = to_size(key, v);
  } else if (key == "serve.addr") {
    serve_addr = v;
  } else if (key == "serve.datasets[]") {
    datasets.push_back(parse_dataset_source(v));
  } else {
    throw ConfigError(key, "unknown configuration key '" + key + "'");
  }
}

void Settings::apply(const KeyValueConfig& config) {
  for (const auto& key : config.keys()) {
    for (const auto& v : config.get_all(key)) apply(key, v);
  }
}

void Settings::validate() const {
  if (bins < 1 || bins > 65535) throw ConfigError("bins", "bins must be in [1, 65535]");
  if (support < 1) throw ConfigError("support", "support must be at least 1");
  if (scaling_enabled && scaling_sample_size < 2) {
    throw ConfigError("scaling.sample_size", "scaling.sample_size must be at least 2");
  }
  session.validate();
  rl.validate();
}

}  // namespace edasum
