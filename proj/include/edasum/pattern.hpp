#pragma once

#include <Eigen/Dense>

#include <compare>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "edasum/ingest.hpp"

namespace edasum {

using ItemsetId = std::uint32_t;
using ItemId = std::uint32_t;

struct Constraint {
  std::uint32_t attribute = 0;
  BinValue bin = 0;
  friend auto operator<=>(const Constraint&, const Constraint&) = default;
};

// Attribute -> bin constraints, kept sorted by attribute index.
class Description {
 public:
  Description() = default;
  explicit Description(std::vector<Constraint> constraints);

  std::size_t size() const { return constraints_.size(); }
  bool empty() const { return constraints_.empty(); }
  auto begin() const { return constraints_.begin(); }
  auto end() const { return constraints_.end(); }
  std::span<const Constraint> constraints() const { return constraints_; }

  bool constrains(std::uint32_t attribute) const { return value(attribute).has_value(); }
  std::optional<BinValue> value(std::uint32_t attribute) const;

  Description with(std::uint32_t attribute, BinValue bin) const;
  Description without(std::uint32_t attribute) const;
  bool is_subset_of(const Description& other) const;

  std::string to_string() const;

  friend bool operator==(const Description&, const Description&) = default;

 private:
  std::vector<Constraint> constraints_;
};

std::uint64_t hash_constraints(std::span<const Constraint> constraints);

struct DescriptionHash {
  std::size_t operator()(const Description& d) const {
    return static_cast<std::size_t>(hash_constraints(d.constraints()));
  }
};

// Sorted, duplicate-free list of item ids.
class MemberSet {
 public:
  MemberSet() = default;
  explicit MemberSet(std::vector<ItemId> sorted_ids);

  std::size_t size() const { return ids_.size(); }
  bool empty() const { return ids_.empty(); }
  auto begin() const { return ids_.begin(); }
  auto end() const { return ids_.end(); }
  const std::vector<ItemId>& ids() const { return ids_; }

  bool contains(ItemId id) const;
  bool is_subset_of(const MemberSet& other) const;
  std::size_t intersection_size(const MemberSet& other) const;

  friend bool operator==(const MemberSet&, const MemberSet&) = default;

 private:
  std::vector<ItemId> ids_;
};

double jaccard(const MemberSet& a, const MemberSet& b);

struct Itemset {
  ItemsetId id = 0;
  Description desc;
  MemberSet members;
  std::size_t size() const { return members.size(); }
};

struct MiningOptions {
  std::size_t min_support = 10;
  // 0 disables the cap.
  std::size_t max_itemsets = 0;
  bool build_lattice = true;
};

class ResourceLimitError : public std::runtime_error {
 public:
  ResourceLimitError(std::size_t count, const std::string& what)
      : std::runtime_error(what), count_(count) {}
  std::size_t count() const { return count_; }

 private:
  std::size_t count_;
};

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Immutable set of closed frequent itemsets over a binned dataset.
//
// Ids are assigned in canonical order (size descending, then description)
// so that two catalogs with the same content have the same ids. When the
// catalog is nonempty, id 0 is the root (closure of the empty description).
class PatternCatalog {
 public:
  PatternCatalog() = default;

  // Builds indices, vectors and uniformity caches from mined patterns.
  static PatternCatalog build(BinnedDataset data, std::size_t min_support,
                              std::vector<std::pair<Description, MemberSet>> patterns,
                              bool build_lattice = true);

  std::size_t size() const { return itemsets_.size(); }
  bool empty() const { return itemsets_.empty(); }
  const Itemset& itemset(ItemsetId id) const { return itemsets_.at(id); }
  const std::vector<Itemset>& itemsets() const { return itemsets_; }
  const BinnedDataset& data() const { return data_; }
  std::size_t min_support() const { return min_support_; }
  std::size_t bin_count() const { return data_.bin_count(); }
  std::size_t attribute_count() const { return data_.attribute_count(); }
  std::vector<std::string> attribute_names() const;

  std::optional<ItemsetId> root() const {
    return empty() ? std::nullopt : std::optional<ItemsetId>(0);
  }
  bool is_root(ItemsetId id) const { return !empty() && id == 0; }

  // Exact description match.
  std::optional<ItemsetId> find(std::span<const Constraint> desc) const;
  std::optional<ItemsetId> find(const Description& desc) const { return find(desc.constraints()); }

  // Items satisfying every constraint in `desc`, ascending.
  std::vector<ItemId> matching_items(const Description& desc) const;
  // The closed itemset whose members are exactly the items matching `desc`,
  // if frequent. Throws PreconditionError on an out-of-range attribute or bin.
  std::optional<ItemsetId> closure_lookup(const Description& desc) const;
  // Closure of an explicit item set (all constraints shared by every item).
  Description closure_of(std::span<const ItemId> items) const;

  // Itemsets whose members strictly contain those of `id`, by size then id.
  std::vector<ItemsetId> minimal_supersets(ItemsetId id, std::size_t limit) const;

  bool has_lattice() const { return !parents_.empty() || itemsets_.empty(); }
  const std::vector<ItemsetId>& parents(ItemsetId id) const { return parents_.at(id); }
  const std::vector<ItemsetId>& children(ItemsetId id) const { return children_.at(id); }

  const RowMatrix& vectors() const { return vectors_; }
  auto vector(ItemsetId id) const { return vectors_.row(id); }
  double uniformity(ItemsetId id) const { return uniformity_[id]; }
  const Eigen::VectorXd& uniformities() const { return uniformity_; }

 private:
  void index();
  void compute_aggregates();
  void compute_lattice();

  BinnedDataset data_;
  std::size_t min_support_ = 1;
  std::vector<Itemset> itemsets_;
  std::unordered_multimap<std::uint64_t, ItemsetId> by_description_;
  std::vector<std::vector<ItemsetId>> parents_;
  std::vector<std::vector<ItemsetId>> children_;
  // postings_[attribute * bin_count + bin] = items with that bin on that attribute.
  std::vector<std::vector<ItemId>> postings_;
  RowMatrix vectors_;
  Eigen::VectorXd uniformity_;
};

// Closure-based depth-first enumeration with prefix-preserving extension.
PatternCatalog mine_closed_itemsets(const BinnedDataset& data, const MiningOptions& options);
inline PatternCatalog mine_closed_itemsets(const BinnedDataset& data, std::size_t min_support) {
  return mine_closed_itemsets(data, MiningOptions{min_support, 0, true});
}

void save_catalog(const PatternCatalog& catalog, std::ostream& os);
PatternCatalog load_catalog(std::istream& is);

}  // namespace edasum
