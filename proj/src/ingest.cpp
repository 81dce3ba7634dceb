#include "edasum/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include "edasum/binary_io.hpp"
#include "edasum/error.hpp"

namespace edasum {

namespace {

constexpr const char* kBinnedMagic = "E4SBIN";
constexpr std::uint32_t kBinnedVersion = 1;

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        field += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        field += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(field));
      field.clear();
    } else {
      field += c;
    }
  }
  fields.push_back(std::move(field));
  return fields;
}

std::string trim(std::string s) {
  const auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

bool parse_double(const std::string& text, double& out) {
  if (text.empty()) return false;
  const char* first = text.data();
  const char* last = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last && std::isfinite(out);
}

}  // namespace

const Column& RawDataset::column(const std::string& name) const {
  for (const auto& c : columns) {
    if (c.name == name) return c;
  }
  throw InputError("no column named '" + name + "'");
}

BinValue AttributeSpec::bin_of(double value) const {
  const auto it = std::lower_bound(boundaries.begin(), boundaries.end(), value);
  return static_cast<BinValue>(it - boundaries.begin());
}

std::string AttributeSpec::bin_label(BinValue bin) const {
  std::ostringstream os;
  os.precision(6);
  if (boundaries.empty()) return "(-inf, inf)";
  if (bin == 0) {
    os << "(-inf, " << boundaries.front() << "]";
  } else if (bin >= boundaries.size()) {
    os << "(" << boundaries.back() << ", inf)";
  } else {
    os << "(" << boundaries[bin - 1] << ", " << boundaries[bin] << "]";
  }
  return os.str();
}

BinnedDataset::BinnedDataset(std::vector<AttributeSpec> attributes, std::vector<BinValue> cells,
                             std::size_t bin_count)
    : attributes_(std::move(attributes)), cells_(std::move(cells)), bin_count_(bin_count) {
  if (bin_count_ == 0) throw InputError("bin_count must be positive");
  if (!attributes_.empty() && cells_.size() % attributes_.size() != 0) {
    throw InputError("cell count is not a multiple of the attribute count");
  }
  for (const BinValue b : cells_) {
    if (b >= bin_count_) throw InputError("bin index out of range");
  }
}

RawDataset parse_table(const std::string& text,
                       const std::optional<std::vector<std::string>>& schema) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw InputError("missing header row");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  // UTF-8 byte order mark.
  if (line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
  auto header = split_csv_line(line);
  for (auto& h : header) h = trim(h);

  std::unordered_set<std::string> names;
  for (const auto& h : header) {
    if (h.empty()) throw InputError("empty column name in header");
    if (!names.insert(h).second) throw InputError("duplicate column name '" + h + "'");
  }

  std::vector<std::size_t> selected;
  if (schema) {
    for (std::size_t c = 0; c < header.size(); ++c) {
      if (std::find(schema->begin(), schema->end(), header[c]) != schema->end()) {
        selected.push_back(c);
      }
    }
    for (const auto& want : *schema) {
      if (!names.contains(want)) throw InputError("selected column '" + want + "' not in header");
    }
  } else {
    for (std::size_t c = 0; c < header.size(); ++c) selected.push_back(c);
  }
  if (selected.empty()) throw InputError("empty column selection");

  RawDataset data;
  for (const auto c : selected) data.columns.push_back({header[c], {}});

  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    ++row;
    const auto fields = split_csv_line(line);
    if (fields.size() != header.size()) {
      throw InputError("row " + std::to_string(row) + ": expected " +
                       std::to_string(header.size()) + " fields, got " +
                       std::to_string(fields.size()));
    }
    for (std::size_t s = 0; s < selected.size(); ++s) {
      double value = 0.0;
      if (!parse_double(trim(fields[selected[s]]), value)) {
        throw InputError("row " + std::to_string(row) + ", column \"" + header[selected[s]] +
                         "\": non-numeric cell '" + fields[selected[s]] + "'");
      }
      data.columns[s].values.push_back(value);
    }
  }
  data.row_count = row;
  return data;
}

RawDataset load_table(const std::filesystem::path& path,
                      const std::optional<std::vector<std::string>>& schema) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_table(buf.str(), schema);
}

std::vector<double> equi_depth_boundaries(std::span<const double> values, std::size_t bin_count,
                                          bool* degenerate) {
  if (bin_count == 0) throw PreconditionError("bin_count must be >= 1");
  if (values.empty()) throw PreconditionError("cannot bin an empty column");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  std::vector<double> distinct = sorted;
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());

  std::vector<double> boundaries;
  boundaries.reserve(bin_count - 1);
  if (distinct.size() < bin_count) {
    if (degenerate) *degenerate = true;
    // One bin per distinct value; unused trailing bins stay empty.
    for (std::size_t j = 0; j + 1 < bin_count; ++j) {
      boundaries.push_back(distinct[std::min(j, distinct.size() - 1)]);
    }
    return boundaries;
  }
  if (degenerate) *degenerate = false;
  const std::size_t n = sorted.size();
  for (std::size_t j = 1; j < bin_count; ++j) {
    // ceil(n*j/b) - 1
    const std::size_t idx = (n * j + bin_count - 1) / bin_count - 1;
    boundaries.push_back(sorted[idx]);
  }
  return boundaries;
}

BinnedDataset equi_depth_bin(const RawDataset& data, std::size_t bin_count) {
  if (bin_count == 0) throw PreconditionError("bin_count must be >= 1");
  if (bin_count > 65536) throw PreconditionError("bin_count exceeds 16-bit bin range");
  const std::size_t cols = data.columns.size();
  std::vector<AttributeSpec> specs(cols);
  std::vector<std::string> warnings;
  for (std::size_t c = 0; c < cols; ++c) {
    const auto& col = data.columns[c];
    if (col.values.size() != data.row_count) {
      throw InputError("column '" + col.name + "' length differs from row_count");
    }
    bool degenerate = false;
    specs[c].name = col.name;
    specs[c].source_index = c;
    specs[c].boundaries = equi_depth_boundaries(col.values, bin_count, &degenerate);
    if (degenerate) {
      warnings.push_back("column '" + col.name +
                         "' has fewer distinct values than bins; using one bin per value");
    }
  }
  std::vector<BinValue> cells(data.row_count * cols);
  for (std::size_t c = 0; c < cols; ++c) {
    const auto& values = data.columns[c].values;
    for (std::size_t r = 0; r < data.row_count; ++r) {
      cells[r * cols + c] = specs[c].bin_of(values[r]);
    }
  }
  BinnedDataset out(std::move(specs), std::move(cells), bin_count);
  out.warnings = std::move(warnings);
  return out;
}

void save_binned(const BinnedDataset& data, std::ostream& os) {
  bin::put_magic(os, kBinnedMagic);
  bin::put<std::uint32_t>(os, kBinnedVersion);
  bin::put<std::uint64_t>(os, data.rows());
  bin::put<std::uint32_t>(os, static_cast<std::uint32_t>(data.attribute_count()));
  bin::put<std::uint32_t>(os, static_cast<std::uint32_t>(data.bin_count()));
  for (const auto& a : data.attributes()) {
    bin::put_str(os, a.name);
    bin::put<std::uint32_t>(os, static_cast<std::uint32_t>(a.source_index));
    bin::put<std::uint32_t>(os, static_cast<std::uint32_t>(a.boundaries.size()));
    for (const double b : a.boundaries) bin::put_f64(os, b);
  }
  for (const BinValue v : data.cells()) bin::put<std::uint16_t>(os, v);
}

BinnedDataset load_binned(std::istream& is) {
  bin::expect_magic(is, kBinnedMagic);
  const auto version = bin::get<std::uint32_t>(is);
  if (version != kBinnedVersion) throw InputError("unsupported binned-matrix version");
  const auto rows = bin::get<std::uint64_t>(is);
  const auto cols = bin::get<std::uint32_t>(is);
  const auto bins = bin::get<std::uint32_t>(is);
  std::vector<AttributeSpec> specs(cols);
  for (auto& a : specs) {
    a.name = bin::get_str(is);
    a.source_index = bin::get<std::uint32_t>(is);
    const auto nb = bin::get<std::uint32_t>(is);
    if (nb + 1 != bins) throw InputError("boundary count does not match bin count");
    a.boundaries.resize(nb);
    for (auto& b : a.boundaries) b = bin::get_f64(is);
  }
  std::vector<BinValue> cells(rows * cols);
  for (auto& v : cells) v = bin::get<std::uint16_t>(is);
  return BinnedDataset(std::move(specs), std::move(cells), bins);
}

}  // namespace edasum
