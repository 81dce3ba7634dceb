#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace edasum {

using BinValue = std::uint16_t;

struct Column {
  std::string name;
  std::vector<double> values;
};

struct RawDataset {
  std::vector<Column> columns;
  std::size_t row_count = 0;

  const Column& column(const std::string& name) const;
};

struct AttributeSpec {
  std::string name;
  // bin_count - 1 non-decreasing cut values. A value v lands in the bin equal
  // to the number of boundaries strictly below v.
  std::vector<double> boundaries;
  std::size_t source_index = 0;

  BinValue bin_of(double value) const;
  // Human label for a bin, e.g. "(2.5, 4]".
  std::string bin_label(BinValue bin) const;

  friend bool operator==(const AttributeSpec&, const AttributeSpec&) = default;
};

// Row-major matrix of bin indices. Row r is the item vector of item r.
class BinnedDataset {
 public:
  BinnedDataset() = default;
  BinnedDataset(std::vector<AttributeSpec> attributes, std::vector<BinValue> cells,
                std::size_t bin_count);

  std::size_t rows() const { return attributes_.empty() ? 0 : cells_.size() / attributes_.size(); }
  std::size_t attribute_count() const { return attributes_.size(); }
  std::size_t bin_count() const { return bin_count_; }
  const std::vector<AttributeSpec>& attributes() const { return attributes_; }

  BinValue at(std::size_t row, std::size_t attribute) const {
    return cells_[row * attributes_.size() + attribute];
  }
  std::span<const BinValue> row(std::size_t r) const {
    return {cells_.data() + r * attributes_.size(), attributes_.size()};
  }
  const std::vector<BinValue>& cells() const { return cells_; }

  // Non-fatal notes produced while binning (degenerate columns).
  std::vector<std::string> warnings;

  friend bool operator==(const BinnedDataset& a, const BinnedDataset& b) {
    return a.bin_count_ == b.bin_count_ && a.cells_ == b.cells_ &&
           a.attributes_ == b.attributes_;
  }

 private:
  std::vector<AttributeSpec> attributes_;
  std::vector<BinValue> cells_;
  std::size_t bin_count_ = 0;
};

// Reads a comma-separated file with a header row. When `schema` is given only
// those columns are kept, in file order.
RawDataset load_table(const std::filesystem::path& path,
                      const std::optional<std::vector<std::string>>& schema = std::nullopt);
RawDataset parse_table(const std::string& text,
                       const std::optional<std::vector<std::string>>& schema = std::nullopt);

// Equi-depth discretization. Boundary j (1-based) is the sorted value at index
// ceil(n*j/b)-1. Columns with fewer distinct values than `bin_count` get one
// bin per distinct value and a warning.
BinnedDataset equi_depth_bin(const RawDataset& data, std::size_t bin_count = 10);

std::vector<double> equi_depth_boundaries(std::span<const double> values, std::size_t bin_count,
                                          bool* degenerate = nullptr);

void save_binned(const BinnedDataset& data, std::ostream& os);
BinnedDataset load_binned(std::istream& is);

}  // namespace edasum
