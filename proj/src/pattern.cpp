#include "edasum/pattern.hpp"

#include <algorithm>
#include <istream>
#include <ostream>
#include <sstream>

#include "edasum/binary_io.hpp"
#include "edasum/error.hpp"
#include "edasum/metrics.hpp"

namespace edasum {

namespace {

constexpr const char* kCatalogMagic = "E4SCAT";
constexpr std::uint32_t kCatalogVersion = 1;

std::uint64_t mix(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

}  // namespace

// --- Description -----------------------------------------------------------

Description::Description(std::vector<Constraint> constraints) : constraints_(std::move(constraints)) {
  std::sort(constraints_.begin(), constraints_.end());
  for (std::size_t i = 1; i < constraints_.size(); ++i) {
    if (constraints_[i].attribute == constraints_[i - 1].attribute) {
      throw PreconditionError("description constrains attribute " +
                              std::to_string(constraints_[i].attribute) + " twice");
    }
  }
}

std::optional<BinValue> Description::value(std::uint32_t attribute) const {
  auto it = std::lower_bound(constraints_.begin(), constraints_.end(), attribute,
                             [](const Constraint& c, std::uint32_t a) { return c.attribute < a; });
  if (it != constraints_.end() && it->attribute == attribute) return it->bin;
  return std::nullopt;
}

Description Description::with(std::uint32_t attribute, BinValue bin) const {
  std::vector<Constraint> next;
  next.reserve(constraints_.size() + 1);
  for (const auto& c : constraints_) {
    if (c.attribute != attribute) next.push_back(c);
  }
  next.push_back({attribute, bin});
  return Description(std::move(next));
}

Description Description::without(std::uint32_t attribute) const {
  std::vector<Constraint> next;
  for (const auto& c : constraints_) {
    if (c.attribute != attribute) next.push_back(c);
  }
  Description d;
  d.constraints_ = std::move(next);
  return d;
}

bool Description::is_subset_of(const Description& other) const {
  return std::includes(other.constraints_.begin(), other.constraints_.end(), constraints_.begin(),
                       constraints_.end());
}

std::string Description::to_string() const {
  std::ostringstream os;
  os << '{';
  for (std::size_t i = 0; i < constraints_.size(); ++i) {
    if (i) os << ',';
    os << constraints_[i].attribute << '=' << constraints_[i].bin;
  }
  os << '}';
  return os.str();
}

std::uint64_t hash_constraints(std::span<const Constraint> constraints) {
  std::uint64_t h = 0x51ED27u;
  for (const auto& c : constraints) {
    h = mix(h ^ ((static_cast<std::uint64_t>(c.attribute) << 16) | c.bin));
  }
  return h;
}

// --- MemberSet -------------------------------------------------------------

MemberSet::MemberSet(std::vector<ItemId> sorted_ids) : ids_(std::move(sorted_ids)) {
  for (std::size_t i = 1; i < ids_.size(); ++i) {
    if (ids_[i] <= ids_[i - 1]) throw PreconditionError("member ids must be strictly increasing");
  }
}

bool MemberSet::contains(ItemId id) const { return std::binary_search(ids_.begin(), ids_.end(), id); }

bool MemberSet::is_subset_of(const MemberSet& other) const {
  return ids_.size() <= other.ids_.size() &&
         std::includes(other.ids_.begin(), other.ids_.end(), ids_.begin(), ids_.end());
}

std::size_t MemberSet::intersection_size(const MemberSet& other) const {
  std::size_t n = 0;
  auto a = ids_.begin();
  auto b = other.ids_.begin();
  while (a != ids_.end() && b != other.ids_.end()) {
    if (*a < *b) {
      ++a;
    } else if (*b < *a) {
      ++b;
    } else {
      ++n;
      ++a;
      ++b;
    }
  }
  return n;
}

double jaccard(const MemberSet& a, const MemberSet& b) {
  const std::size_t inter = a.intersection_size(b);
  const std::size_t uni = a.size() + b.size() - inter;
  return uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

// --- PatternCatalog --------------------------------------------------------

PatternCatalog PatternCatalog::build(BinnedDataset data, std::size_t min_support,
                                     std::vector<std::pair<Description, MemberSet>> patterns,
                                     bool build_lattice) {
  if (min_support == 0) throw PreconditionError("min_support must be >= 1");
  std::sort(patterns.begin(), patterns.end(), [](const auto& a, const auto& b) {
    if (a.second.size() != b.second.size()) return a.second.size() > b.second.size();
    return std::lexicographical_compare(a.first.begin(), a.first.end(), b.first.begin(),
                                        b.first.end());
  });
  PatternCatalog cat;
  cat.data_ = std::move(data);
  cat.min_support_ = min_support;
  cat.itemsets_.reserve(patterns.size());
  for (auto& [desc, members] : patterns) {
    const auto id = static_cast<ItemsetId>(cat.itemsets_.size());
    cat.itemsets_.push_back(Itemset{id, std::move(desc), std::move(members)});
  }
  cat.index();
  cat.compute_aggregates();
  if (build_lattice) cat.compute_lattice();
  return cat;
}

void PatternCatalog::index() {
  const std::size_t bins = data_.bin_count();
  const std::size_t attrs = data_.attribute_count();
  postings_.assign(attrs * bins, {});
  for (std::size_t r = 0; r < data_.rows(); ++r) {
    for (std::size_t a = 0; a < attrs; ++a) {
      postings_[a * bins + data_.at(r, a)].push_back(static_cast<ItemId>(r));
    }
  }
  by_description_.clear();
  by_description_.reserve(itemsets_.size());
  for (const auto& it : itemsets_) {
    const auto h = hash_constraints(it.desc.constraints());
    for (auto [lo, hi] = by_description_.equal_range(h); lo != hi; ++lo) {
      if (itemsets_[lo->second].desc == it.desc) {
        throw InputError("duplicate description " + it.desc.to_string() + " in catalog");
      }
    }
    by_description_.emplace(h, it.id);
  }
}

void PatternCatalog::compute_aggregates() {
  const std::size_t attrs = data_.attribute_count();
  vectors_ = RowMatrix::Zero(static_cast<Eigen::Index>(itemsets_.size()),
                             static_cast<Eigen::Index>(attrs));
  uniformity_ = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(itemsets_.size()));
  for (const auto& it : itemsets_) {
    const auto stats = itemset_stats(it.members.ids(), data_);
    vectors_.row(it.id) = stats.mean.transpose();
    uniformity_[it.id] = uniformity_from_dispersion(attrs, stats.stddev.sum());
  }
}

void PatternCatalog::compute_lattice() {
  parents_.assign(itemsets_.size(), {});
  children_.assign(itemsets_.size(), {});
  std::vector<Constraint> buf;
  std::vector<std::pair<std::uint32_t, ItemsetId>> found;
  for (const auto& it : itemsets_) {
    const auto cs = it.desc.constraints();
    const std::size_t d = cs.size();
    if (d >= 31) throw ResourceLimitError(d, "description too long for lattice construction");
    found.clear();
    const std::uint32_t full = (1u << d) - 1;
    for (std::uint32_t mask = 0; mask < full; ++mask) {
      buf.clear();
      for (std::size_t b = 0; b < d; ++b) {
        if (mask & (1u << b)) buf.push_back(cs[b]);
      }
      if (auto id = find(buf)) found.emplace_back(mask, *id);
    }
    for (const auto& [mask, id] : found) {
      bool immediate = true;
      for (const auto& [other, oid] : found) {
        if (other != mask && (other & mask) == mask) {
          immediate = false;
          break;
        }
      }
      if (immediate) parents_[it.id].push_back(id);
    }
    std::sort(parents_[it.id].begin(), parents_[it.id].end());
    for (const auto p : parents_[it.id]) children_[p].push_back(it.id);
  }
  for (auto& c : children_) std::sort(c.begin(), c.end());
}

std::vector<std::string> PatternCatalog::attribute_names() const {
  std::vector<std::string> names;
  for (const auto& a : data_.attributes()) names.push_back(a.name);
  return names;
}

std::optional<ItemsetId> PatternCatalog::find(std::span<const Constraint> desc) const {
  const auto h = hash_constraints(desc);
  for (auto [lo, hi] = by_description_.equal_range(h); lo != hi; ++lo) {
    const auto stored = itemsets_[lo->second].desc.constraints();
    if (std::equal(stored.begin(), stored.end(), desc.begin(), desc.end())) return lo->second;
  }
  return std::nullopt;
}

std::vector<ItemId> PatternCatalog::matching_items(const Description& desc) const {
  const std::size_t bins = data_.bin_count();
  for (const auto& c : desc) {
    if (c.attribute >= data_.attribute_count()) {
      throw PreconditionError("attribute index " + std::to_string(c.attribute) + " out of range");
    }
    if (c.bin >= bins) throw PreconditionError("bin value " + std::to_string(c.bin) + " out of range");
  }
  std::vector<ItemId> out;
  if (desc.empty()) {
    out.resize(data_.rows());
    for (std::size_t r = 0; r < out.size(); ++r) out[r] = static_cast<ItemId>(r);
    return out;
  }
  const std::vector<ItemId>* smallest = nullptr;
  for (const auto& c : desc) {
    const auto& p = postings_[c.attribute * bins + c.bin];
    if (!smallest || p.size() < smallest->size()) smallest = &p;
  }
  for (const ItemId r : *smallest) {
    bool ok = true;
    for (const auto& c : desc) {
      if (data_.at(r, c.attribute) != c.bin) {
        ok = false;
        break;
      }
    }
    if (ok) out.push_back(r);
  }
  return out;
}

Description PatternCatalog::closure_of(std::span<const ItemId> items) const {
  std::vector<Constraint> cs;
  if (items.empty()) return Description{};
  for (std::size_t a = 0; a < data_.attribute_count(); ++a) {
    const BinValue v = data_.at(items.front(), a);
    bool shared = true;
    for (const ItemId r : items) {
      if (data_.at(r, a) != v) {
        shared = false;
        break;
      }
    }
    if (shared) cs.push_back({static_cast<std::uint32_t>(a), v});
  }
  return Description(std::move(cs));
}

std::optional<ItemsetId> PatternCatalog::closure_lookup(const Description& desc) const {
  const auto items = matching_items(desc);
  if (items.empty() || items.size() < min_support_) return std::nullopt;
  return find(closure_of(items));
}

std::vector<ItemsetId> PatternCatalog::minimal_supersets(ItemsetId id, std::size_t limit) const {
  const auto cs = itemset(id).desc.constraints();
  const std::size_t d = cs.size();
  if (d >= 31) throw ResourceLimitError(d, "description too long for superset enumeration");
  std::vector<ItemsetId> out;
  std::vector<Constraint> buf;
  const std::uint32_t full = (1u << d) - 1;
  for (std::uint32_t mask = 0; mask < full; ++mask) {
    buf.clear();
    for (std::size_t b = 0; b < d; ++b) {
      if (mask & (1u << b)) buf.push_back(cs[b]);
    }
    if (auto sup = find(buf)) out.push_back(*sup);
  }
  std::sort(out.begin(), out.end(), [this](ItemsetId a, ItemsetId b) {
    const auto sa = itemsets_[a].size();
    const auto sb = itemsets_[b].size();
    return sa != sb ? sa < sb : a < b;
  });
  if (out.size() > limit) out.resize(limit);
  return out;
}

// --- Mining ----------------------------------------------------------------

namespace {

class ClosedMiner {
 public:
  ClosedMiner(const BinnedDataset& data, const MiningOptions& options)
      : data_(data),
        options_(options),
        attrs_(data.attribute_count()),
        bins_(data.bin_count()) {}

  std::vector<std::pair<Description, MemberSet>> run() {
    if (data_.rows() < options_.min_support || data_.rows() == 0) return {};
    std::vector<ItemId> all(data_.rows());
    for (std::size_t r = 0; r < all.size(); ++r) all[r] = static_cast<ItemId>(r);
    buckets_.resize(attrs_ + 2);
    std::vector<int> fixed(attrs_, -1);
    close(all, fixed);
    expand(fixed, all, -1, 0);
    return std::move(out_);
  }

 private:
  // Adds every attribute shared by all `occ` to `fixed`; returns the lowest
  // newly added attribute index, or attrs_ if none.
  std::size_t close(const std::vector<ItemId>& occ, std::vector<int>& fixed) const {
    std::size_t lowest = attrs_;
    for (std::size_t a = 0; a < attrs_; ++a) {
      if (fixed[a] >= 0) continue;
      const BinValue v = data_.at(occ.front(), a);
      bool shared = true;
      for (const ItemId r : occ) {
        if (data_.at(r, a) != v) {
          shared = false;
          break;
        }
      }
      if (shared) {
        fixed[a] = v;
        lowest = std::min(lowest, a);
      }
    }
    return lowest;
  }

  void emit(const std::vector<int>& fixed, const std::vector<ItemId>& occ) {
    if (options_.max_itemsets != 0 && out_.size() >= options_.max_itemsets) {
      throw ResourceLimitError(out_.size() + 1, "closed itemset count exceeds cap of " +
                                                    std::to_string(options_.max_itemsets));
    }
    std::vector<Constraint> cs;
    for (std::size_t a = 0; a < attrs_; ++a) {
      if (fixed[a] >= 0) cs.push_back({static_cast<std::uint32_t>(a), static_cast<BinValue>(fixed[a])});
    }
    out_.emplace_back(Description(std::move(cs)), MemberSet(occ));
  }

  // `core` is the item (attribute * bins + bin) that generated this pattern.
  void expand(const std::vector<int>& fixed, const std::vector<ItemId>& occ, long core,
              std::size_t depth) {
    emit(fixed, occ);
    auto& buckets = buckets_.at(depth);
    buckets.assign(attrs_ * bins_, {});
    for (const ItemId r : occ) {
      for (std::size_t a = 0; a < attrs_; ++a) {
        if (fixed[a] >= 0) continue;
        const long e = static_cast<long>(a * bins_ + data_.at(r, a));
        if (e > core) buckets[static_cast<std::size_t>(e)].push_back(r);
      }
    }
    for (std::size_t e = 0; e < buckets.size(); ++e) {
      std::vector<ItemId> next_occ = std::move(buckets[e]);
      if (next_occ.size() < options_.min_support) continue;
      const std::size_t attr = e / bins_;
      std::vector<int> next = fixed;
      next[attr] = static_cast<int>(e % bins_);
      const std::size_t lowest_added = close(next_occ, next);
      // Prefix-preserving check: the closure may not add an item below e.
      if (lowest_added < attr) continue;
      expand(next, next_occ, static_cast<long>(e), depth + 1);
    }
  }

  const BinnedDataset& data_;
  const MiningOptions& options_;
  std::size_t attrs_;
  std::size_t bins_;
  std::vector<std::vector<std::vector<ItemId>>> buckets_;
  std::vector<std::pair<Description, MemberSet>> out_;
};

}  // namespace

PatternCatalog mine_closed_itemsets(const BinnedDataset& data, const MiningOptions& options) {
  if (options.min_support == 0) throw PreconditionError("min_support must be >= 1");
  ClosedMiner miner(data, options);
  auto patterns = miner.run();
  return PatternCatalog::build(data, options.min_support, std::move(patterns),
                               options.build_lattice);
}

// --- Persistence -----------------------------------------------------------

void save_catalog(const PatternCatalog& catalog, std::ostream& os) {
  bin::put_magic(os, kCatalogMagic);
  bin::put<std::uint32_t>(os, kCatalogVersion);
  bin::put<std::uint64_t>(os, catalog.size());
  bin::put<std::uint64_t>(os, catalog.min_support());
  bin::put<std::uint32_t>(os, static_cast<std::uint32_t>(catalog.bin_count()));
  bin::put<std::uint32_t>(os, static_cast<std::uint32_t>(catalog.attribute_count()));
  for (const auto& name : catalog.attribute_names()) bin::put_str(os, name);
  bin::put<std::uint8_t>(os, catalog.has_lattice() ? 1 : 0);
  save_binned(catalog.data(), os);
  for (const auto& it : catalog.itemsets()) {
    bin::put<std::uint32_t>(os, it.id);
    bin::put<std::uint32_t>(os, static_cast<std::uint32_t>(it.desc.size()));
    for (const auto& c : it.desc) {
      bin::put<std::uint32_t>(os, c.attribute);
      bin::put<std::uint16_t>(os, c.bin);
    }
    bin::put<std::uint64_t>(os, it.size());
    const auto v = catalog.vector(it.id);
    for (Eigen::Index a = 0; a < v.size(); ++a) bin::put_f64(os, v[a]);
    for (const ItemId m : it.members) bin::put<std::uint32_t>(os, m);
  }
}

PatternCatalog load_catalog(std::istream& is) {
  bin::expect_magic(is, kCatalogMagic);
  if (bin::get<std::uint32_t>(is) != kCatalogVersion) throw InputError("unsupported catalog version");
  const auto count = bin::get<std::uint64_t>(is);
  const auto min_support = bin::get<std::uint64_t>(is);
  const auto bins = bin::get<std::uint32_t>(is);
  const auto attrs = bin::get<std::uint32_t>(is);
  std::vector<std::string> names(attrs);
  for (auto& n : names) n = bin::get_str(is);
  const bool lattice = bin::get<std::uint8_t>(is) != 0;
  BinnedDataset data = load_binned(is);
  if (data.bin_count() != bins || data.attribute_count() != attrs) {
    throw InputError("catalog header does not match embedded dataset");
  }
  std::vector<std::pair<Description, MemberSet>> patterns;
  RowMatrix stored(static_cast<Eigen::Index>(count), static_cast<Eigen::Index>(attrs));
  patterns.reserve(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    if (bin::get<std::uint32_t>(is) != i) throw InputError("catalog ids out of order");
    const auto nc = bin::get<std::uint32_t>(is);
    if (nc > attrs) throw InputError("description longer than attribute count");
    std::vector<Constraint> cs(nc);
    for (auto& c : cs) {
      c.attribute = bin::get<std::uint32_t>(is);
      c.bin = bin::get<std::uint16_t>(is);
    }
    const auto size = bin::get<std::uint64_t>(is);
    if (size > data.rows()) throw InputError("itemset larger than dataset");
    for (std::uint32_t a = 0; a < attrs; ++a) stored(static_cast<Eigen::Index>(i), a) = bin::get_f64(is);
    std::vector<ItemId> members(size);
    for (auto& m : members) m = bin::get<std::uint32_t>(is);
    patterns.emplace_back(Description(std::move(cs)), MemberSet(std::move(members)));
  }
  auto cat = PatternCatalog::build(std::move(data), min_support, std::move(patterns), lattice);
  if (cat.vectors() != stored) throw InputError("stored itemset vectors do not match members");
  return cat;
}

}  // namespace edasum
