#pragma once

#include "stg/types.hpp"

#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

namespace stg {

/// Scalar storage types understood by the PLY reader/writer.
enum class PlyScalar : std::uint8_t { int8, uint8, int16, uint16, int32, uint32, float32, float64 };

/// Per-vertex properties other than position and normal (e.g. colors). They
/// are carried through I/O untouched and never enter the denoiser.
struct VertexAttributes {
    std::vector<std::string> names;
    std::vector<PlyScalar> types;
    std::vector<double> values;  // row-major, names.size() values per vertex

    std::size_t width() const { return names.size(); }
    bool empty() const { return names.empty(); }
    /// Attribute rows for the given vertex indices, in that order.
    VertexAttributes select(std::span<const std::size_t> rows) const;
};

/// One frame: n points with optional unit normals.
struct PointCloud {
    std::vector<Vec3> coords;
    std::vector<Vec3> normals;  // empty, or one unit vector per point
    VertexAttributes attributes;

    std::size_t size() const { return coords.size(); }
    bool empty() const { return coords.empty(); }
    bool has_normals() const { return !normals.empty(); }

    /// Throws std::invalid_argument if coordinates are non-finite or normals
    /// are present but miscounted or not unit length.
    void validate() const;
};

/// An ordered list of frames; point counts may differ between frames.
struct Sequence {
    std::vector<PointCloud> frames;
    std::size_t size() const { return frames.size(); }
};

struct BoundingBox {
    Vec3 min = Vec3::Constant(std::numeric_limits<double>::infinity());
    Vec3 max = Vec3::Constant(-std::numeric_limits<double>::infinity());
    void extend(const Vec3& p) {
        min = min.cwiseMin(p);
        max = max.cwiseMax(p);
    }
    double diagonal() const { return (max - min).norm(); }
    Vec3 center() const { return 0.5 * (min + max); }
};

BoundingBox bounding_box(std::span<const PointCloud> frames);

/// Uniform similarity transform: p -> (p - center) * scale.
struct Normalization {
    Vec3 center = Vec3::Zero();
    double scale = 1.0;
};

/// Transform that maps the joint bounding box of all frames to diagonal 1,
/// centered at the origin. One transform for the whole sequence keeps
/// inter-frame motion intact.
Normalization unit_diagonal_normalization(std::span<const PointCloud> frames);
PointCloud apply(const Normalization& t, const PointCloud& cloud);

}  // namespace stg
