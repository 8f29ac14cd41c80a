#include "stg/ply_io.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <optional>
#include <sstream>

namespace stg {
namespace {

struct PlyProperty {
    std::string name;
    PlyScalar type = PlyScalar::float32;
    bool is_list = false;
    PlyScalar count_type = PlyScalar::uint8;
};

struct PlyElement {
    std::string name;
    std::size_t count = 0;
    std::vector<PlyProperty> properties;
};

enum class PlyFormat { ascii, binary_le };

std::optional<PlyScalar> scalar_from_name(const std::string& s) {
    if (s == "char" || s == "int8") return PlyScalar::int8;
    if (s == "uchar" || s == "uint8") return PlyScalar::uint8;
    if (s == "short" || s == "int16") return PlyScalar::int16;
    if (s == "ushort" || s == "uint16") return PlyScalar::uint16;
    if (s == "int" || s == "int32") return PlyScalar::int32;
    if (s == "uint" || s == "uint32") return PlyScalar::uint32;
    if (s == "float" || s == "float32") return PlyScalar::float32;
    if (s == "double" || s == "float64") return PlyScalar::float64;
    return std::nullopt;
}

const char* scalar_name(PlyScalar t) {
    switch (t) {
        case PlyScalar::int8: return "char";
        case PlyScalar::uint8: return "uchar";
        case PlyScalar::int16: return "short";
        case PlyScalar::uint16: return "ushort";
        case PlyScalar::int32: return "int";
        case PlyScalar::uint32: return "uint";
        case PlyScalar::float32: return "float";
        case PlyScalar::float64: return "double";
    }
    return "float";
}

std::size_t scalar_size(PlyScalar t) {
    switch (t) {
        case PlyScalar::int8:
        case PlyScalar::uint8: return 1;
        case PlyScalar::int16:
        case PlyScalar::uint16: return 2;
        case PlyScalar::int32:
        case PlyScalar::uint32:
        case PlyScalar::float32: return 4;
        case PlyScalar::float64: return 8;
    }
    return 4;
}

template <typename T>
T read_le(const char* p) {
    T v;
    std::memcpy(&v, p, sizeof(T));
    if constexpr (std::endian::native == std::endian::big && sizeof(T) > 1) {
        auto* b = reinterpret_cast<unsigned char*>(&v);
        std::reverse(b, b + sizeof(T));
    }
    return v;
}

template <typename T>
void write_le(std::ostream& out, T v) {
    if constexpr (std::endian::native == std::endian::big && sizeof(T) > 1) {
        auto* b = reinterpret_cast<unsigned char*>(&v);
        std::reverse(b, b + sizeof(T));
    }
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

double read_binary_scalar(const char* p, PlyScalar t) {
    switch (t) {
        case PlyScalar::int8: return read_le<std::int8_t>(p);
        case PlyScalar::uint8: return read_le<std::uint8_t>(p);
        case PlyScalar::int16: return read_le<std::int16_t>(p);
        case PlyScalar::uint16: return read_le<std::uint16_t>(p);
        case PlyScalar::int32: return read_le<std::int32_t>(p);
        case PlyScalar::uint32: return read_le<std::uint32_t>(p);
        case PlyScalar::float32: return read_le<float>(p);
        case PlyScalar::float64: return read_le<double>(p);
    }
    return 0.0;
}

void write_binary_scalar(std::ostream& out, double v, PlyScalar t) {
    switch (t) {
        case PlyScalar::int8: write_le(out, static_cast<std::int8_t>(v)); break;
        case PlyScalar::uint8: write_le(out, static_cast<std::uint8_t>(v)); break;
        case PlyScalar::int16: write_le(out, static_cast<std::int16_t>(v)); break;
        case PlyScalar::uint16: write_le(out, static_cast<std::uint16_t>(v)); break;
        case PlyScalar::int32: write_le(out, static_cast<std::int32_t>(v)); break;
        case PlyScalar::uint32: write_le(out, static_cast<std::uint32_t>(v)); break;
        case PlyScalar::float32: write_le(out, static_cast<float>(v)); break;
        case PlyScalar::float64: write_le(out, v); break;
    }
}

// Exact text form: shortest representation that parses back to the same value
// of the property's type.
void write_ascii_scalar(std::ostream& out, double v, PlyScalar t) {
    char buf[64];
    std::to_chars_result res{};
    switch (t) {
        case PlyScalar::float32: res = std::to_chars(buf, buf + sizeof buf, static_cast<float>(v)); break;
        case PlyScalar::float64: res = std::to_chars(buf, buf + sizeof buf, v); break;
        default: res = std::to_chars(buf, buf + sizeof buf, static_cast<long long>(std::llround(v))); break;
    }
    out.write(buf, res.ptr - buf);
}

bool parse_ascii_scalar(const std::string& tok, PlyScalar t, double& out) {
    const char* b = tok.data();
    const char* e = tok.data() + tok.size();
    if (t == PlyScalar::float32) {
        float f = 0.0f;
        auto r = std::from_chars(b, e, f);
        if (r.ec != std::errc() || r.ptr != e) return false;
        out = f;
        return true;
    }
    if (t == PlyScalar::float64) {
        double d = 0.0;
        auto r = std::from_chars(b, e, d);
        if (r.ec != std::errc() || r.ptr != e) return false;
        out = d;
        return true;
    }
    long long v = 0;
    auto r = std::from_chars(b, e, v);
    if (r.ec != std::errc() || r.ptr != e) return false;
    out = static_cast<double>(v);
    return true;
}

struct Header {
    PlyFormat format = PlyFormat::ascii;
    std::vector<PlyElement> elements;
    std::size_t data_offset = 0;  // byte offset of the first body byte
    std::size_t line_count = 0;   // number of header lines
};

Header parse_header(const std::string& data, const std::string& where) {
    Header h;
    std::size_t pos = 0;
    auto next_line = [&](std::string& line) -> bool {
        if (pos >= data.size()) return false;
        std::size_t end = data.find('\n', pos);
        if (end == std::string::npos) end = data.size();
        line.assign(data, pos, end - pos);
        if (!line.empty() && line.back() == '\r') line.pop_back();
        pos = end + 1;
        ++h.line_count;
        return true;
    };
    auto fail = [&](const std::string& msg) -> ParseError {
        return ParseError(where + ":" + std::to_string(h.line_count) + ": " + msg);
    };

    std::string line;
    if (!next_line(line) || line != "ply") throw fail("malformed header: missing 'ply' magic");
    bool have_format = false;
    while (true) {
        if (!next_line(line)) throw fail("malformed header: missing end_header");
        std::istringstream ls(line);
        std::string kw;
        ls >> kw;
        if (kw.empty() || kw == "comment" || kw == "obj_info") continue;
        if (kw == "end_header") break;
        if (kw == "format") {
            std::string fmt, ver;
            ls >> fmt >> ver;
            if (fmt == "ascii") {
                h.format = PlyFormat::ascii;
            } else if (fmt == "binary_little_endian") {
                h.format = PlyFormat::binary_le;
            } else {
                throw fail("malformed header: unsupported format '" + fmt + "'");
            }
            have_format = true;
        } else if (kw == "element") {
            PlyElement e;
            long long count = -1;
            ls >> e.name >> count;
            if (e.name.empty() || count < 0) throw fail("malformed header: bad element line");
            e.count = static_cast<std::size_t>(count);
            h.elements.push_back(std::move(e));
        } else if (kw == "property") {
            if (h.elements.empty()) throw fail("malformed header: property before element");
            PlyProperty p;
            std::string t;
            ls >> t;
            if (t == "list") {
                std::string ct, it;
                ls >> ct >> it >> p.name;
                auto c = scalar_from_name(ct);
                auto i = scalar_from_name(it);
                if (!c || !i) throw fail("malformed header: unknown list type");
                p.is_list = true;
                p.count_type = *c;
                p.type = *i;
            } else {
                auto s = scalar_from_name(t);
                if (!s) throw fail("malformed header: unknown property type '" + t + "'");
                p.type = *s;
                ls >> p.name;
            }
            if (p.name.empty()) throw fail("malformed header: unnamed property");
            h.elements.back().properties.push_back(std::move(p));
        } else {
            throw fail("malformed header: unexpected keyword '" + kw + "'");
        }
    }
    if (!have_format) throw fail("malformed header: missing format line");
    h.data_offset = pos;
    return h;
}

struct VertexLayout {
    int x = -1, y = -1, z = -1, nx = -1, ny = -1, nz = -1;
    std::vector<int> extra;  // property positions kept as attributes
};

VertexLayout vertex_layout(const PlyElement& v) {
    VertexLayout l;
    for (int i = 0; i < static_cast<int>(v.properties.size()); ++i) {
        const auto& p = v.properties[static_cast<std::size_t>(i)];
        if (p.is_list) continue;
        if (p.name == "x") l.x = i;
        else if (p.name == "y") l.y = i;
        else if (p.name == "z") l.z = i;
        else if (p.name == "nx") l.nx = i;
        else if (p.name == "ny") l.ny = i;
        else if (p.name == "nz") l.nz = i;
        else l.extra.push_back(i);
    }
    return l;
}

void store_vertex(PointCloud& cloud, const VertexLayout& l, bool with_normals, const std::vector<double>& row) {
    cloud.coords.emplace_back(row[l.x], row[l.y], row[l.z]);
    if (with_normals) cloud.normals.emplace_back(row[l.nx], row[l.ny], row[l.nz]);
    for (int e : l.extra) cloud.attributes.values.push_back(row[static_cast<std::size_t>(e)]);
}

bool row_finite(const VertexLayout& l, bool with_normals, const std::vector<double>& row) {
    auto ok = [&](int i) { return std::isfinite(row[static_cast<std::size_t>(i)]); };
    if (!ok(l.x) || !ok(l.y) || !ok(l.z)) return false;
    return !with_normals || (ok(l.nx) && ok(l.ny) && ok(l.nz));
}

}  // namespace

PointCloud load_ply(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open '" + path.string() + "': missing file");
    const std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    const std::string where = path.string();
    const Header h = parse_header(data, where);

    auto vit = std::find_if(h.elements.begin(), h.elements.end(), [](const PlyElement& e) { return e.name == "vertex"; });
    if (vit == h.elements.end()) throw ParseError(where + ": missing vertex element");
    const VertexLayout layout = vertex_layout(*vit);
    if (layout.x < 0 || layout.y < 0 || layout.z < 0) {
        throw ParseError(where + ": missing vertex property (x, y and z are required)");
    }
    const bool with_normals = layout.nx >= 0 && layout.ny >= 0 && layout.nz >= 0;

    PointCloud cloud;
    for (int e : layout.extra) {
        cloud.attributes.names.push_back(vit->properties[static_cast<std::size_t>(e)].name);
        cloud.attributes.types.push_back(vit->properties[static_cast<std::size_t>(e)].type);
    }
    cloud.coords.reserve(vit->count);

    std::vector<double> row;
    if (h.format == PlyFormat::ascii) {
        std::size_t pos = h.data_offset;
        std::size_t line_no = h.line_count;
        std::string line;
        for (const auto& el : h.elements) {
            const bool is_vertex = &el == &*vit;
            for (std::size_t n = 0; n < el.count; ++n) {
                // Next non-empty line.
                do {
                    if (pos >= data.size()) {
                        throw ParseError(where + ":" + std::to_string(line_no + 1) + ": unexpected end of file in element '" +
                                         el.name + "'");
                    }
                    std::size_t end = data.find('\n', pos);
                    if (end == std::string::npos) end = data.size();
                    line.assign(data, pos, end - pos);
                    pos = end + 1;
                    ++line_no;
                } while (line.find_first_not_of(" \t\r") == std::string::npos);
                if (!is_vertex) continue;

                std::istringstream ls(line);
                row.assign(el.properties.size(), 0.0);
                std::string tok;
                for (std::size_t p = 0; p < el.properties.size(); ++p) {
                    const auto& prop = el.properties[p];
                    auto bad = [&] {
                        return ParseError(where + ":" + std::to_string(line_no) + ": bad value for property '" +
                                          prop.name + "'");
                    };
                    if (prop.is_list) {
                        long long cnt = 0;
                        if (!(ls >> cnt) || cnt < 0) throw bad();
                        for (long long c = 0; c < cnt; ++c) {
                            if (!(ls >> tok)) throw bad();
                        }
                        continue;
                    }
                    if (!(ls >> tok) || !parse_ascii_scalar(tok, prop.type, row[p])) throw bad();
                }
                if (!row_finite(layout, with_normals, row)) {
                    throw ParseError(where + ":" + std::to_string(line_no) + ": non-finite vertex value");
                }
                store_vertex(cloud, layout, with_normals, row);
            }
        }
    } else {
        std::size_t off = h.data_offset;
        auto need = [&](std::size_t bytes) {
            if (off + bytes > data.size()) {
                throw ParseError(where + ": byte offset " + std::to_string(off) + ": unexpected end of file");
            }
        };
        for (const auto& el : h.elements) {
            const bool is_vertex = &el == &*vit;
            for (std::size_t n = 0; n < el.count; ++n) {
                const std::size_t row_offset = off;
                if (is_vertex) row.assign(el.properties.size(), 0.0);
                for (std::size_t p = 0; p < el.properties.size(); ++p) {
                    const auto& prop = el.properties[p];
                    if (prop.is_list) {
                        need(scalar_size(prop.count_type));
                        const double cnt = read_binary_scalar(data.data() + off, prop.count_type);
                        off += scalar_size(prop.count_type);
                        if (cnt < 0) throw ParseError(where + ": byte offset " + std::to_string(off) + ": negative list length");
                        const std::size_t bytes = static_cast<std::size_t>(cnt) * scalar_size(prop.type);
                        need(bytes);
                        off += bytes;
                        continue;
                    }
                    need(scalar_size(prop.type));
                    if (is_vertex) row[p] = read_binary_scalar(data.data() + off, prop.type);
                    off += scalar_size(prop.type);
                }
                if (!is_vertex) continue;
                if (!row_finite(layout, with_normals, row)) {
                    throw ParseError(where + ": byte offset " + std::to_string(row_offset) + ": non-finite vertex value");
                }
                store_vertex(cloud, layout, with_normals, row);
            }
        }
    }

    for (auto& nrm : cloud.normals) {
        const double len = nrm.norm();
        nrm = len > 0.0 ? Vec3(nrm / len) : Vec3::UnitZ();
    }
    return cloud;
}

void save_ply(const PointCloud& cloud, const std::filesystem::path& path, bool binary) {
    cloud.validate();
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");

    const bool normals = cloud.has_normals();
    const auto& attr = cloud.attributes;
    out << "ply\n" << (binary ? "format binary_little_endian 1.0\n" : "format ascii 1.0\n");
    out << "element vertex " << cloud.size() << "\n";
    out << "property float x\nproperty float y\nproperty float z\n";
    if (normals) out << "property float nx\nproperty float ny\nproperty float nz\n";
    for (std::size_t a = 0; a < attr.width(); ++a) {
        out << "property " << scalar_name(attr.types[a]) << " " << attr.names[a] << "\n";
    }
    out << "end_header\n";

    const std::size_t w = attr.width();
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        if (binary) {
            for (int c = 0; c < 3; ++c) write_le(out, static_cast<float>(cloud.coords[i][c]));
            if (normals) {
                for (int c = 0; c < 3; ++c) write_le(out, static_cast<float>(cloud.normals[i][c]));
            }
            for (std::size_t a = 0; a < w; ++a) write_binary_scalar(out, attr.values[i * w + a], attr.types[a]);
        } else {
            for (int c = 0; c < 3; ++c) {
                if (c) out << ' ';
                write_ascii_scalar(out, cloud.coords[i][c], PlyScalar::float32);
            }
            if (normals) {
                for (int c = 0; c < 3; ++c) {
                    out << ' ';
                    write_ascii_scalar(out, cloud.normals[i][c], PlyScalar::float32);
                }
            }
            for (std::size_t a = 0; a < w; ++a) {
                out << ' ';
                write_ascii_scalar(out, attr.values[i * w + a], attr.types[a]);
            }
            out << '\n';
        }
    }
    if (!out) throw std::runtime_error("failed writing '" + path.string() + "'");
}

}  // namespace stg
