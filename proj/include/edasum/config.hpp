#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "edasum/pipeline.hpp"
#include "edasum/rl.hpp"

namespace edasum {

// `key = value` lines; `#` starts a comment. Keys ending in `[]` collect
// every occurrence, other keys keep the last one.
class KeyValueConfig {
 public:
  static KeyValueConfig parse(const std::string& text);
  static KeyValueConfig load(const std::filesystem::path& path);

  void set(const std::string& key, const std::string& value);
  std::optional<std::string> get(const std::string& key) const;
  std::vector<std::string> get_all(const std::string& key) const;
  // Keys in first-seen order.
  const std::vector<std::string>& keys() const { return order_; }

 private:
  std::map<std::string, std::vector<std::string>> values_;
  std::vector<std::string> order_;
};

struct DatasetSource {
  std::string id;
  std::filesystem::path catalog;
  std::filesystem::path scales;      // optional
  std::filesystem::path checkpoint;  // optional
};

// `id=NAME,catalog=PATH[,scales=PATH][,checkpoint=PATH]`
DatasetSource parse_dataset_source(const std::string& text);

struct Settings {
  std::size_t bins = 10;
  std::size_t support = 10;
  std::size_t max_itemsets = 0;  // 0 = no cap
  bool scaling_enabled = true;
  std::size_t scaling_sample_size = 1000;
  std::uint64_t scaling_seed = 0;
  SessionConfig session;
  RlTrainConfig rl;
  std::string serve_addr = "127.0.0.1:8080";
  std::vector<DatasetSource> datasets;

  // Throws ConfigError naming the key for unknown keys or malformed values.
  void apply(const std::string& key, const std::string& value);
  void apply(const KeyValueConfig& config);
  void validate() const;
};

}  // namespace edasum
