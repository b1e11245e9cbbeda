#pragma once

// File formats: signal CSV and binary, filter CSV, estimate directories, Volterra CSV.
//
// Binary signal layout (little endian):
//   bytes 0-3   "WHSG"
//   bytes 4-7   u32 version (1)
//   bytes 8-15  u64 sample count
//   then        f64 samples

#include <algorithm>
#include <array>
#include <bit>
#include <charconv>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "whid/error.hpp"
#include "whid/estimator.hpp"
#include "whid/filter.hpp"
#include "whid/metrics.hpp"
#include "whid/signal.hpp"
#include "whid/volterra.hpp"

namespace whid::io {

namespace fs = std::filesystem;

/// Shortest decimal text that parses back to exactly `v`.
inline std::string format_double(double v) {
  std::array<char, 32> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), res.ptr);
}

inline double parse_double(std::string_view text, const std::string& where) {
  while (!text.empty() && (text.front() == ' ' || text.front() == '\t')) text.remove_prefix(1);
  while (!text.empty() && (text.back() == ' ' || text.back() == '\t' || text.back() == '\r')) text.remove_suffix(1);
  double v = 0.0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc{} || res.ptr != text.data() + text.size())
    throw IoError(where + ": cannot parse number '" + std::string(text) + "'");
  return v;
}

inline std::vector<std::string> split(std::string_view line, char sep = ',') {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(sep, start);
    out.emplace_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

inline std::ifstream open_in(const fs::path& path, std::ios::openmode mode = std::ios::in) {
  std::ifstream in(path, mode);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  return in;
}

inline std::ofstream open_out(const fs::path& path, std::ios::openmode mode = std::ios::out) {
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, mode | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  return out;
}

inline std::vector<std::string> read_lines(const fs::path& path) {
  auto in = open_in(path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(std::move(line));
  }
  return lines;
}

// -- signals ----------------------------------------------------------------

inline void write_signal_csv(const fs::path& path, const Signal& x) {
  auto out = open_out(path);
  out << "sample\n";
  for (double v : x) out << format_double(v) << '\n';
  if (!out) throw IoError("write failed: " + path.string());
}

inline Signal read_signal_csv(const fs::path& path, double sample_rate = 1.0) {
  const auto lines = read_lines(path);
  if (lines.empty() || lines.front() != "sample")
    throw IoError(path.string() + ": expected header 'sample'");
  std::vector<double> samples;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    samples.push_back(parse_double(lines[i], path.string() + ":" + std::to_string(i + 1)));
  }
  if (samples.empty()) throw IoError(path.string() + ": no samples");
  return Signal(std::move(samples), sample_rate);
}

namespace detail {

template <typename T>
void put_le(std::ostream& out, T value) {
  std::array<char, sizeof(T)> bytes{};
  std::memcpy(bytes.data(), &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
  out.write(bytes.data(), bytes.size());
}

template <typename T>
T get_le(std::istream& in, const std::string& where) {
  std::array<char, sizeof(T)> bytes{};
  if (!in.read(bytes.data(), bytes.size())) throw IoError(where + ": truncated file");
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
  T value;
  std::memcpy(&value, bytes.data(), sizeof(T));
  return value;
}

}  // namespace detail

inline constexpr std::array<char, 4> kSignalMagic = {'W', 'H', 'S', 'G'};
inline constexpr std::uint32_t kSignalVersion = 1;

inline void write_signal_binary(const fs::path& path, const Signal& x) {
  auto out = open_out(path, std::ios::binary);
  out.write(kSignalMagic.data(), kSignalMagic.size());
  detail::put_le<std::uint32_t>(out, kSignalVersion);
  detail::put_le<std::uint64_t>(out, x.size());
  for (double v : x) detail::put_le<double>(out, v);
  if (!out) throw IoError("write failed: " + path.string());
}

inline Signal read_signal_binary(const fs::path& path, double sample_rate = 1.0) {
  auto in = open_in(path, std::ios::binary);
  const std::string where = path.string();
  std::array<char, 4> magic{};
  if (!in.read(magic.data(), magic.size()) || magic != kSignalMagic) throw IoError(where + ": bad magic");
  const auto version = detail::get_le<std::uint32_t>(in, where);
  if (version != kSignalVersion) throw IoError(where + ": unsupported version " + std::to_string(version));
  const auto count = detail::get_le<std::uint64_t>(in, where);
  if (count == 0) throw IoError(where + ": empty signal");
  std::vector<double> samples;
  samples.reserve(static_cast<std::size_t>(std::min<std::uint64_t>(count, 1u << 24)));
  for (std::uint64_t i = 0; i < count; ++i) samples.push_back(detail::get_le<double>(in, where));
  return Signal(std::move(samples), sample_rate);
}

/// Picks the binary reader for `.whsg` / `.bin`, CSV otherwise.
inline Signal read_signal(const fs::path& path) {
  const auto ext = path.extension().string();
  if (ext == ".whsg" || ext == ".bin") return read_signal_binary(path);
  return read_signal_csv(path);
}

// -- filters ----------------------------------------------------------------

inline void write_filter_csv(const fs::path& path, const FirFilter& f) {
  auto out = open_out(path);
  for (double t : f.taps()) out << format_double(t) << '\n';
  if (!out) throw IoError("write failed: " + path.string());
}

/// One tap per line; blank lines and lines starting with '#' are ignored.
inline FirFilter read_filter_csv(const fs::path& path) {
  std::vector<double> taps;
  const auto lines = read_lines(path);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (lines[i].empty() || lines[i].front() == '#') continue;
    taps.push_back(parse_double(lines[i], path.string() + ":" + std::to_string(i + 1)));
  }
  if (taps.empty()) throw IoError(path.string() + ": no taps");
  return FirFilter(std::move(taps));
}

// -- estimates --------------------------------------------------------------

inline void write_estimate(const fs::path& dir, const WhEstimate& est) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory '" + dir.string() + "': " + ec.message());
  write_filter_csv(dir / "r_hat.csv", est.r_hat);
  write_filter_csv(dir / "g_hat.csv", est.g);
  write_filter_csv(dir / "h_hat.csv", est.h);

  auto gamma = open_out(dir / "gamma.csv");
  gamma << "order,value\n";
  for (const auto& [k, v] : est.amplifier.coefficients()) gamma << k << ',' << format_double(v) << '\n';

  auto diag = open_out(dir / "diagnostics.csv");
  diag << "step,metric,value_db\n";
  for (const auto& row : est.diagnostics)
    diag << row.step << ',' << row.metric << ',' << format_double(finite_db(row.value_db)) << '\n';

  if (!est.warnings.empty()) {
    auto warn = open_out(dir / "warnings.txt");
    for (const auto& w : est.warnings) warn << w << '\n';
  }
}

inline PolynomialAmplifier read_gamma_csv(const fs::path& path) {
  const auto lines = read_lines(path);
  if (lines.empty() || lines.front() != "order,value") throw IoError(path.string() + ": expected header 'order,value'");
  std::map<int, double> coeffs;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    const auto cells = split(lines[i]);
    if (cells.size() != 2) throw IoError(path.string() + ":" + std::to_string(i + 1) + ": expected 2 fields");
    const std::string where = path.string() + ":" + std::to_string(i + 1);
    coeffs[static_cast<int>(parse_double(cells[0], where))] = parse_double(cells[1], where);
  }
  return PolynomialAmplifier(std::move(coeffs));
}

// -- Volterra ---------------------------------------------------------------

inline void write_volterra_csv(const fs::path& path, const VolterraModel& model) {
  auto out = open_out(path);
  out << "k,a,b,c,value\n";
  for (std::size_t j = 0; j < model.size(); ++j) {
    const auto& idx = model.indices()[j];
    out << idx.order << ',' << idx.lags[0] << ',';
    if (idx.order == 3) out << idx.lags[1] << ',' << idx.lags[2];
    else out << ',';
    out << ',' << format_double(model.kernels()[j]) << '\n';
  }
  if (!out) throw IoError("write failed: " + path.string());
}

inline VolterraModel read_volterra_csv(const fs::path& path) {
  const auto lines = read_lines(path);
  if (lines.empty() || lines.front() != "k,a,b,c,value") throw IoError(path.string() + ": expected header 'k,a,b,c,value'");
  std::vector<ReducedKernelIndex> indices;
  std::vector<double> kernels;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    const std::string where = path.string() + ":" + std::to_string(i + 1);
    const auto cells = split(lines[i]);
    if (cells.size() != 5) throw IoError(where + ": expected 5 fields");
    ReducedKernelIndex idx;
    idx.order = static_cast<int>(parse_double(cells[0], where));
    if (idx.order != 1 && idx.order != 3) throw IoError(where + ": order must be 1 or 3");
    for (int t = 0; t < idx.order; ++t)
      idx.lags[static_cast<std::size_t>(t)] = static_cast<std::size_t>(parse_double(cells[static_cast<std::size_t>(1 + t)], where));
    indices.push_back(idx);
    kernels.push_back(parse_double(cells[4], where));
  }
  return {std::move(indices), std::move(kernels)};
}

}  // namespace whid::io
