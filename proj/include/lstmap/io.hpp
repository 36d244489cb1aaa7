/**
 * Copyright (C) The lstmap Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *   http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#ifndef LSTMAP_IO_HPP
#define LSTMAP_IO_HPP

#include <algorithm>
#include <array>
#include <bit>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <limits>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "lstmap/core.hpp"
#include "lstmap/eval.hpp"

namespace lstmap::io {

class FormatError : public Error {
 public:
  using Error::Error;
};
class BadMagic : public FormatError {
 public:
  using FormatError::FormatError;
};
class TruncatedFile : public FormatError {
 public:
  using FormatError::FormatError;
};
class LabelOutOfRange : public FormatError {
 public:
  using FormatError::FormatError;
};
class NonFiniteValue : public FormatError {
 public:
  using FormatError::FormatError;
};
class ValueOverflow : public Error {
 public:
  using Error::Error;
};
class IoError : public Error {
 public:
  using Error::Error;
};

// Binary feature file, little-endian throughout:
//
//   "FSF1" | n u32 | d u32 | class_count u32 | dtype u8 (0 = f32)
//   n records of: label u32 | d x f32
inline constexpr std::array<char, 4> kMagic{'F', 'S', 'F', '1'};
inline constexpr std::size_t kHeaderBytes = 17;
inline constexpr std::uint8_t kDtypeF32 = 0;

struct FeatureFileHeader {
  std::uint32_t n = 0;
  std::uint32_t d = 0;
  std::uint32_t class_count = 0;
  std::uint8_t dtype_code = kDtypeF32;
};

/// Byte size of a binary file holding n records of dimension d.
inline std::uint64_t binary_file_size(std::uint64_t n, std::uint64_t d) {
  return kHeaderBytes + n * (4 + 4 * d);
}

namespace detail {

inline void put_u32(std::vector<unsigned char>& out, std::uint32_t v) {
  for (int k = 0; k < 4; ++k) out.push_back(static_cast<unsigned char>(v >> (8 * k)));
}

inline std::uint32_t get_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | static_cast<std::uint32_t>(p[1]) << 8 |
         static_cast<std::uint32_t>(p[2]) << 16 | static_cast<std::uint32_t>(p[3]) << 24;
}

inline bool is_csv(const std::filesystem::path& path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return ext == ".csv";
}

inline std::vector<unsigned char> slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

/// Narrows to f32, rejecting values a float cannot hold.
inline float narrow(double v) {
  if (!std::isfinite(v)) throw NonFiniteValue("cannot store non-finite value");
  if (std::abs(v) > static_cast<double>(std::numeric_limits<float>::max())) {
    throw ValueOverflow("value " + std::to_string(v) + " overflows 32-bit float");
  }
  return static_cast<float>(v);
}

inline FeatureSet read_binary(const std::filesystem::path& path) {
  const std::vector<unsigned char> bytes = slurp(path);
  if (bytes.size() < kMagic.size() || !std::equal(kMagic.begin(), kMagic.end(), bytes.begin())) {
    throw BadMagic(path.string() + ": not a feature file (bad magic)");
  }
  if (bytes.size() < kHeaderBytes) throw TruncatedFile(path.string() + ": truncated header");
  FeatureFileHeader h;
  h.n = get_u32(&bytes[4]);
  h.d = get_u32(&bytes[8]);
  h.class_count = get_u32(&bytes[12]);
  h.dtype_code = bytes[16];
  if (h.dtype_code != kDtypeF32) {
    throw FormatError(path.string() + ": unsupported dtype code " + std::to_string(h.dtype_code));
  }
  if (h.n == 0 || h.d == 0 || h.class_count == 0) {
    throw FormatError(path.string() + ": header has zero n, d or class_count");
  }
  const std::uint64_t expected = binary_file_size(h.n, h.d);
  if (bytes.size() < expected) {
    throw TruncatedFile(path.string() + ": expected " + std::to_string(expected) + " bytes, found " +
                        std::to_string(bytes.size()));
  }
  if (bytes.size() > expected) {
    throw FormatError(path.string() + ": " + std::to_string(bytes.size() - expected) +
                      " trailing bytes");
  }

  Matrix data(h.n, h.d);
  std::vector<int> labels(h.n);
  const unsigned char* p = bytes.data() + kHeaderBytes;
  for (std::uint32_t i = 0; i < h.n; ++i) {
    const std::uint32_t label = get_u32(p);
    p += 4;
    if (label >= h.class_count) {
      throw LabelOutOfRange(path.string() + ": record " + std::to_string(i) + " has label " +
                            std::to_string(label) + " >= class_count " +
                            std::to_string(h.class_count));
    }
    labels[i] = static_cast<int>(label);
    for (std::uint32_t k = 0; k < h.d; ++k) {
      const float v = std::bit_cast<float>(get_u32(p));
      p += 4;
      if (!std::isfinite(v)) {
        throw NonFiniteValue(path.string() + ": non-finite value in record " + std::to_string(i));
      }
      data(i, k) = static_cast<double>(v);
    }
  }
  return FeatureSet(std::move(data), std::move(labels), static_cast<int>(h.class_count));
}

inline void write_binary(const FeatureSet& fs, const std::filesystem::path& path) {
  const auto n = static_cast<std::uint64_t>(fs.rows());
  const auto d = static_cast<std::uint64_t>(fs.dim());
  if (n > std::numeric_limits<std::uint32_t>::max() || d > std::numeric_limits<std::uint32_t>::max()) {
    throw ValueOverflow("feature set too large for the 32-bit header");
  }
  std::vector<unsigned char> out;
  out.reserve(static_cast<std::size_t>(binary_file_size(n, d)));
  out.insert(out.end(), kMagic.begin(), kMagic.end());
  put_u32(out, static_cast<std::uint32_t>(n));
  put_u32(out, static_cast<std::uint32_t>(d));
  put_u32(out, static_cast<std::uint32_t>(fs.class_count()));
  out.push_back(kDtypeF32);
  for (Eigen::Index i = 0; i < fs.rows(); ++i) {
    put_u32(out, static_cast<std::uint32_t>(fs.labels()[static_cast<std::size_t>(i)]));
    for (Eigen::Index k = 0; k < fs.dim(); ++k) {
      put_u32(out, std::bit_cast<std::uint32_t>(narrow(fs.data()(i, k))));
    }
  }
  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  if (!file) throw IoError("cannot open " + path.string() + " for writing");
  file.write(reinterpret_cast<const char*>(out.data()), static_cast<std::streamsize>(out.size()));
  if (!file) throw IoError("write failed for " + path.string());
}

inline FeatureSet read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw TruncatedFile(path.string() + ": empty CSV");
  const auto columns = static_cast<std::size_t>(std::count(line.begin(), line.end(), ',')) + 1;
  if (line.rfind("label", 0) != 0 || columns < 2) {
    throw BadMagic(path.string() + ": CSV header must be label,f0,...");
  }
  const std::size_t d = columns - 1;

  std::vector<double> values;
  std::vector<int> labels;
  int max_label = -1;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    ++row;
    std::stringstream ss(line);
    std::string cell;
    std::size_t col = 0;
    while (std::getline(ss, cell, ',')) {
      char* end = nullptr;
      const double v = std::strtod(cell.c_str(), &end);
      if (end == cell.c_str()) {
        throw FormatError(path.string() + ": unparsable value on row " + std::to_string(row));
      }
      if (col == 0) {
        if (v < 0 || v != std::floor(v) || v > std::numeric_limits<int>::max()) {
          throw LabelOutOfRange(path.string() + ": bad label on row " + std::to_string(row));
        }
        labels.push_back(static_cast<int>(v));
        max_label = std::max(max_label, labels.back());
      } else {
        if (!std::isfinite(v)) {
          throw NonFiniteValue(path.string() + ": non-finite value on row " + std::to_string(row));
        }
        values.push_back(v);
      }
      ++col;
    }
    if (col != columns) {
      throw TruncatedFile(path.string() + ": row " + std::to_string(row) + " has " +
                          std::to_string(col) + " of " + std::to_string(columns) + " columns");
    }
  }
  if (labels.empty()) throw TruncatedFile(path.string() + ": CSV has no rows");
  Matrix data = Eigen::Map<const Matrix>(values.data(), static_cast<Eigen::Index>(labels.size()),
                                         static_cast<Eigen::Index>(d));
  return FeatureSet(std::move(data), std::move(labels), max_label + 1);
}

inline void write_csv(const FeatureSet& fs, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << "label";
  for (Eigen::Index k = 0; k < fs.dim(); ++k) out << ",f" << k;
  out << '\n';
  char buf[32];
  for (Eigen::Index i = 0; i < fs.rows(); ++i) {
    out << fs.labels()[static_cast<std::size_t>(i)];
    for (Eigen::Index k = 0; k < fs.dim(); ++k) {
      std::snprintf(buf, sizeof buf, "%.9g", static_cast<double>(narrow(fs.data()(i, k))));
      out << ',' << buf;
    }
    out << '\n';
  }
  if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace detail

/// Reads a feature file; `.csv` paths are parsed as text, anything else as binary.
inline FeatureSet read_features(const std::filesystem::path& path) {
  return detail::is_csv(path) ? detail::read_csv(path) : detail::read_binary(path);
}

/// Writes the binary layout (or CSV for `.csv` paths). Values are stored as f32.
inline void write_features(const FeatureSet& fs, const std::filesystem::path& path) {
  if (detail::is_csv(path)) detail::write_csv(fs, path);
  else detail::write_binary(fs, path);
}

/// Run metadata echoed next to every report.
struct ReportContext {
  std::string method;
  std::string dataset;
  EpisodeSpec spec;
  LstParams lst;
  MapParams map;
};

namespace detail {

inline std::string fmt(const char* pattern, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, pattern, v);
  return buf;
}

}  // namespace detail

/// One line of space-separated key=value pairs.
inline std::string format_report(const EvalReport& r, const ReportContext& ctx) {
  std::ostringstream out;
  out << "method=" << ctx.method << " dataset=" << ctx.dataset << " w=" << ctx.spec.w
      << " s=" << ctx.spec.s << " q=" << ctx.spec.q << " n_episodes=" << r.n_episodes
      << " mean_acc=" << detail::fmt("%.6f", r.mean_acc)
      << " ci95=" << detail::fmt("%.6f", r.ci95_half_width) << " skipped=" << r.skipped
      << " seed=" << ctx.spec.seed << " beta=" << detail::fmt("%g", ctx.lst.beta)
      << " delta=" << detail::fmt("%g", ctx.lst.delta) << " gamma=" << detail::fmt("%g", ctx.lst.gamma)
      << " lambda=" << detail::fmt("%g", ctx.map.lambda) << " alpha=" << detail::fmt("%g", ctx.map.alpha)
      << " steps=" << ctx.map.n_steps;
  return out.str();
}

inline std::string format_comparison(const CompareReport& r, std::string_view method_a,
                                     std::string_view method_b) {
  std::ostringstream out;
  out << "compare method_a=" << method_a << " method_b=" << method_b << " n_pairs=" << r.test.n
      << " t_stat=" << detail::fmt("%.6g", r.test.t_stat)
      << " p_value=" << detail::fmt("%.6e", r.test.p_value)
      << " zero_variance=" << (r.test.zero_variance ? 1 : 0);
  return out.str();
}

}  // namespace lstmap::io

#endif  // LSTMAP_IO_HPP
