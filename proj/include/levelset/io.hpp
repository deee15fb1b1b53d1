#pragma once

// Flat-file persistence: binary grid dumps, text spectral dumps and CSV tables.

#include <bit>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <sstream>
#include <string>
#include <vector>

#include "levelset/spectral.hpp"

namespace levelset::io {

/// Shortest stable text form used in every CSV.
inline std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}
inline std::string num(long long v) { return std::to_string(v); }
inline std::string num(int v) { return std::to_string(v); }
inline std::string num(unsigned v) { return std::to_string(v); }
inline std::string num(std::size_t v) { return std::to_string(v); }
inline std::string num(const std::string& s) { return s; }
inline std::string num(const char* s) { return s; }

class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, std::initializer_list<const char*> header) : out_(path) {
    if (!out_) throw FormatError("cannot open " + path.string() + " for writing");
    bool first = true;
    for (const char* h : header) {
      out_ << (first ? "" : ",") << h;
      first = false;
    }
    out_ << '\n';
  }

  template <class... Ts>
  void row(const Ts&... cells) {
    bool first = true;
    ((out_ << (first ? "" : ",") << num(cells), first = false), ...);
    out_ << '\n';
  }

 private:
  std::ofstream out_;
};

// ---------------------------------------------------------------------------
// Grid files: one header line, then N*N little-endian float64 values.

inline void write_grid(const std::filesystem::path& path, const GridField& g) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot open " + path.string() + " for writing");
  out << "levelset-lab grid v1 N_g=" << g.size() << '\n';
  for (double v : g.values()) {
    std::uint64_t bits = std::bit_cast<std::uint64_t>(v);
    if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap64(bits);
    char b[8];
    std::memcpy(b, &bits, 8);
    out.write(b, 8);
  }
}

inline GridField read_grid(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  std::string header;
  std::getline(in, header);
  int n = 0;
  if (std::sscanf(header.c_str(), "levelset-lab grid v1 N_g=%d", &n) != 1 || n < 2) {
    throw FormatError(path.string() + ": bad grid header '" + header + "'");
  }
  std::vector<double> values(static_cast<size_t>(n) * n);
  for (double& v : values) {
    char b[8];
    if (!in.read(b, 8)) throw FormatError(path.string() + ": truncated grid data");
    std::uint64_t bits;
    std::memcpy(&bits, b, 8);
    if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap64(bits);
    v = std::bit_cast<double>(bits);
  }
  if (in.peek() != std::char_traits<char>::eof()) throw FormatError(path.string() + ": trailing bytes after grid data");
  return GridField(n, std::move(values));
}

// ---------------------------------------------------------------------------
// Spectral files: header line, then "k1 k2 coeff" per mode in index order.

inline void write_spectral(const std::filesystem::path& path, const SpectralField& f) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot open " + path.string() + " for writing");
  out << "levelset-lab spectral v1 N=" << f.modes().radius() << " shape=" << to_string(f.modes().shape()) << '\n';
  char buf[64];
  for (size_t i = 0; i < f.size(); ++i) {
    const WaveVector k = f.modes()[i];
    std::snprintf(buf, sizeof buf, "%d %d %.17g\n", k.k1, k.k2, f.coeffs()[i]);
    out << buf;
  }
}

inline SpectralField read_spectral(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path.string());
  std::string header;
  std::getline(in, header);
  int n = 0;
  char shape[16] = {};
  if (std::sscanf(header.c_str(), "levelset-lab spectral v1 N=%d shape=%15s", &n, shape) != 2) {
    throw FormatError(path.string() + ": bad spectral header '" + header + "'");
  }
  SpectralField f(ModeSet::make(n, parse_truncation(shape)));
  std::string line;
  size_t count = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    int k1, k2;
    double c;
    if (!(ls >> k1 >> k2 >> c)) throw FormatError(path.string() + ": bad line '" + line + "'");
    const WaveVector k{k1, k2};
    if (k.is_zero() || !f.modes().contains(k)) {
      throw FormatError(path.string() + ": mode (" + std::to_string(k1) + "," + std::to_string(k2) +
                        ") outside the declared truncation");
    }
    if (count >= f.size() || !(f.modes()[count] == k)) {
      throw FormatError(path.string() + ": modes not in canonical order at line " + std::to_string(count + 2));
    }
    f.set(k, c);
    ++count;
  }
  if (count != f.size()) throw FormatError(path.string() + ": expected " + std::to_string(f.size()) + " modes");
  return f;
}

}  // namespace levelset::io
