#include "gam/io.hpp"

#include <bit>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>

namespace gam::io {
namespace {

std::uint32_t load_u32_le(const char* p) {
  std::uint32_t v = 0;
  for (int i = 3; i >= 0; --i) v = (v << 8) | static_cast<unsigned char>(p[i]);
  return v;
}

void store_u32_le(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

float load_f32_le(const char* p) { return std::bit_cast<float>(load_u32_le(p)); }

void store_f32_le(std::string& out, float f) { store_u32_le(out, std::bit_cast<std::uint32_t>(f)); }

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\v' || c == '\f'; }

}  // namespace

PointCloud parse_xyz(std::string_view text) {
  std::vector<double> values;
  std::size_t columns = 0;
  std::size_t rows = 0;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t eol = std::min(text.find('\n', pos), text.size());
    std::string_view line = text.substr(pos, eol - pos);
    pos = eol + 1;
    ++line_no;

    std::size_t i = 0;
    while (i < line.size() && is_space(line[i])) ++i;
    if (i == line.size() || line[i] == '#') {
      if (eol == text.size()) break;
      continue;
    }
    std::size_t fields = 0;
    while (i < line.size()) {
      std::size_t j = i;
      while (j < line.size() && !is_space(line[j])) ++j;
      const char* first = line.data() + i;
      const char* last = line.data() + j;
      if (*first == '+') ++first;
      double v = 0.0;
      const auto [ptr, ec] = std::from_chars(first, last, v);
      if (ec != std::errc() || ptr != last) {
        throw Error(Errc::kParseError,
                    "line " + std::to_string(line_no) + ": bad number '" + std::string(line.substr(i, j - i)) + "'");
      }
      values.push_back(v);
      ++fields;
      i = j;
      while (i < line.size() && is_space(line[i])) ++i;
    }
    if (fields < 3) {
      throw Error(Errc::kParseError,
                  "line " + std::to_string(line_no) + ": expected at least 3 fields, got " + std::to_string(fields));
    }
    if (rows == 0) {
      columns = fields;
    } else if (fields != columns) {
      throw Error(Errc::kInconsistentColumns, "line " + std::to_string(line_no) + ": " + std::to_string(fields) +
                                                  " fields, expected " + std::to_string(columns));
    }
    ++rows;
    if (eol == text.size()) break;
  }
  if (rows == 0) throw Error(Errc::kInvalidInput, "file contains no points");

  Matrix coords(rows, 3);
  std::optional<Matrix> features;
  if (columns > 3) features.emplace(rows, columns - 3);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < columns; ++c) {
      const double v = values[r * columns + c];
      if (c < 3) {
        coords(r, c) = v;
      } else {
        (*features)(r, c - 3) = v;
      }
    }
  }
  return validate_cloud(std::move(coords), std::move(features));
}

PointCloud parse_pcf(std::string_view bytes) {
  if (bytes.size() < 12 || bytes.substr(0, 4) != kPcfMagic) {
    throw Error(Errc::kParseError, "missing PCF1 header");
  }
  const std::uint64_t n = load_u32_le(bytes.data() + 4);
  const std::uint64_t c = load_u32_le(bytes.data() + 8);
  const std::uint64_t body_floats = (bytes.size() - 12) / 4;
  if (n > 0 && (3 + c) > body_floats / n) {
    throw Error(Errc::kParseError, "truncated pcf body for N=" + std::to_string(n) + ", C=" + std::to_string(c));
  }
  const std::uint64_t expected = 12 + n * (3 + c) * 4;
  if (bytes.size() < expected) {
    throw Error(Errc::kParseError, "truncated pcf body: " + std::to_string(bytes.size()) + " bytes, expected " +
                                       std::to_string(expected));
  }
  if (bytes.size() > expected) throw Error(Errc::kParseError, "trailing bytes after pcf body");
  if (n == 0) throw Error(Errc::kInvalidInput, "file contains no points");

  Matrix coords(n, 3);
  std::optional<Matrix> features;
  if (c > 0) features.emplace(n, c);
  const char* p = bytes.data() + 12;
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t k = 0; k < 3 + c; ++k, p += 4) {
      const double v = load_f32_le(p);
      if (k < 3) {
        coords(r, k) = v;
      } else {
        (*features)(r, k - 3) = v;
      }
    }
  }
  return validate_cloud(std::move(coords), std::move(features));
}

PointCloud read_cloud(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::kIoError, "cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  const std::string bytes = buf.str();
  if (bytes.size() >= 4 && std::string_view(bytes).substr(0, 4) == kPcfMagic) return parse_pcf(bytes);
  return parse_xyz(bytes);
}

std::string format_xyz(const PointCloud& cloud) {
  std::string out;
  char buf[32];
  const std::size_t c = cloud.channels();
  for (std::size_t r = 0; r < cloud.size(); ++r) {
    for (std::size_t k = 0; k < 3 + c; ++k) {
      const double v = k < 3 ? cloud.coords()(r, k) : (*cloud.features())(r, k - 3);
      const int len = std::snprintf(buf, sizeof buf, "%.9g", v);
      if (k > 0) out.push_back(' ');
      out.append(buf, static_cast<std::size_t>(len));
    }
    out.push_back('\n');
  }
  return out;
}

std::string format_pcf(const PointCloud& cloud) {
  const std::size_t c = cloud.channels();
  if (cloud.size() > std::numeric_limits<std::uint32_t>::max() || c > std::numeric_limits<std::uint32_t>::max()) {
    throw Error(Errc::kInvalidInput, "cloud too large for pcf");
  }
  std::string out(kPcfMagic);
  out.reserve(12 + cloud.size() * (3 + c) * 4);
  store_u32_le(out, static_cast<std::uint32_t>(cloud.size()));
  store_u32_le(out, static_cast<std::uint32_t>(c));
  for (std::size_t r = 0; r < cloud.size(); ++r) {
    for (std::size_t k = 0; k < 3 + c; ++k) {
      const double v = k < 3 ? cloud.coords()(r, k) : (*cloud.features())(r, k - 3);
      const float f = static_cast<float>(v);
      if (!std::isfinite(f)) throw Error(Errc::kInvalidInput, "value out of 32-bit float range");
      store_f32_le(out, f);
    }
  }
  return out;
}

CloudFormat format_for_path(const std::filesystem::path& path) {
  return path.extension() == ".pcf" ? CloudFormat::kPcfBinary : CloudFormat::kXyzAscii;
}

void write_cloud(const PointCloud& cloud, const std::filesystem::path& path, CloudFormat format) {
  const std::string bytes = format == CloudFormat::kPcfBinary ? format_pcf(cloud) : format_xyz(cloud);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::kIoError, "cannot open " + path.string() + " for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(Errc::kIoError, "write failed for " + path.string());
}

}  // namespace gam::io
