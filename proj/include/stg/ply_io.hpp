#pragma once

#include "stg/point_cloud.hpp"

#include <filesystem>

namespace stg {

/// Reads the "vertex" element of an ASCII or binary little-endian PLY file.
/// x, y, z are required; nx, ny, nz are read (and renormalized) when all three
/// are present. Any other vertex properties are kept as opaque attributes.
/// Other elements (faces, ...) are skipped. Throws ParseError with the line
/// number (ASCII) or byte offset (binary) of the offending data.
PointCloud load_ply(const std::filesystem::path& path);

/// Writes coordinates (and normals, attributes when present) as 32-bit floats.
void save_ply(const PointCloud& cloud, const std::filesystem::path& path, bool binary = false);

}  // namespace stg
