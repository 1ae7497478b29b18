#pragma once

#include <filesystem>
#include <string_view>

#include "gam/core.hpp"

namespace gam::io {

enum class CloudFormat {
  kXyzAscii,   // whitespace separated decimals, '#' comment lines
  kPcfBinary,  // "PCF1", u32 N, u32 C, N*(3+C) f32, all little-endian
};

inline constexpr std::string_view kPcfMagic = "PCF1";

/// Reads a cloud, choosing the format from the magic bytes.
PointCloud read_cloud(const std::filesystem::path& path);

PointCloud parse_xyz(std::string_view text);
PointCloud parse_pcf(std::string_view bytes);

void write_cloud(const PointCloud& cloud, const std::filesystem::path& path, CloudFormat format);

/// xyz-ascii text, 9 significant digits per value.
std::string format_xyz(const PointCloud& cloud);
std::string format_pcf(const PointCloud& cloud);

/// Format implied by the file extension: ".pcf" is binary, anything else ascii.
CloudFormat format_for_path(const std::filesystem::path& path);

}  // namespace gam::io
