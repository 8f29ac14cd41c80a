#include "stg/point_cloud.hpp"

#include <cmath>
#include <stdexcept>

namespace stg {

VertexAttributes VertexAttributes::select(std::span<const std::size_t> rows) const {
    VertexAttributes out;
    out.names = names;
    out.types = types;
    const std::size_t w = width();
    out.values.reserve(rows.size() * w);
    for (std::size_t r : rows) {
        out.values.insert(out.values.end(), values.begin() + r * w, values.begin() + (r + 1) * w);
    }
    return out;
}

void PointCloud::validate() const {
    for (std::size_t i = 0; i < coords.size(); ++i) {
        if (!coords[i].allFinite()) {
            throw std::invalid_argument("point " + std::to_string(i) + " has a non-finite coordinate");
        }
    }
    if (!normals.empty()) {
        if (normals.size() != coords.size()) {
            throw std::invalid_argument("normal count " + std::to_string(normals.size()) + " != point count " +
                                        std::to_string(coords.size()));
        }
        for (std::size_t i = 0; i < normals.size(); ++i) {
            if (!normals[i].allFinite() || std::abs(normals[i].norm() - 1.0) > 1e-6) {
                throw std::invalid_argument("normal " + std::to_string(i) + " is not unit length");
            }
        }
    }
    if (!attributes.empty() && attributes.values.size() != attributes.width() * coords.size()) {
        throw std::invalid_argument("vertex attribute table does not match the point count");
    }
}

BoundingBox bounding_box(std::span<const PointCloud> frames) {
    BoundingBox box;
    for (const auto& f : frames) {
        for (const auto& p : f.coords) box.extend(p);
    }
    return box;
}

Normalization unit_diagonal_normalization(std::span<const PointCloud> frames) {
    const BoundingBox box = bounding_box(frames);
    Normalization t;
    if (!(box.diagonal() > 0.0)) return t;
    t.center = box.center();
    t.scale = 1.0 / box.diagonal();
    return t;
}

PointCloud apply(const Normalization& t, const PointCloud& cloud) {
    PointCloud out = cloud;
    for (auto& p : out.coords) p = (p - t.center) * t.scale;
    return out;
}

}  // namespace stg
