#pragma once

// Little-endian primitive encoding for the versioned binary formats.

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>
#include <type_traits>

#include "edasum/error.hpp"

namespace edasum::bin {

template <typename T>
  requires std::is_integral_v<T>
void put(std::ostream& os, T value) {
  using U = std::make_unsigned_t<T>;
  U u = static_cast<U>(value);
  char bytes[sizeof(T)];
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    bytes[i] = static_cast<char>((u >> (8 * i)) & 0xFFu);
  }
  os.write(bytes, sizeof(T));
}

inline void put_f64(std::ostream& os, double value) {
  put<std::uint64_t>(os, std::bit_cast<std::uint64_t>(value));
}

inline void put_str(std::ostream& os, const std::string& s) {
  put<std::uint32_t>(os, static_cast<std::uint32_t>(s.size()));
  os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

inline void put_magic(std::ostream& os, const char* magic) {
  os.write(magic, static_cast<std::streamsize>(std::strlen(magic)));
}

template <typename T>
  requires std::is_integral_v<T>
T get(std::istream& is) {
  unsigned char bytes[sizeof(T)];
  if (!is.read(reinterpret_cast<char*>(bytes), sizeof(T))) {
    throw InputError("truncated binary record");
  }
  using U = std::make_unsigned_t<T>;
  U u = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    u |= static_cast<U>(static_cast<U>(bytes[i]) << (8 * i));
  }
  return static_cast<T>(u);
}

inline double get_f64(std::istream& is) {
  return std::bit_cast<double>(get<std::uint64_t>(is));
}

inline std::string get_str(std::istream& is, std::size_t max_len = 1u << 20) {
  const auto n = get<std::uint32_t>(is);
  if (n > max_len) throw InputError("string field too long in binary record");
  std::string s(n, '\0');
  if (n > 0 && !is.read(s.data(), n)) throw InputError("truncated binary record");
  return s;
}

inline void expect_magic(std::istream& is, const char* magic) {
  const std::size_t n = std::strlen(magic);
  std::string got(n, '\0');
  if (!is.read(got.data(), static_cast<std::streamsize>(n)) || got != magic) {
    throw InputError(std::string("bad magic, expected ") + magic);
  }
}

}  // namespace edasum::bin
