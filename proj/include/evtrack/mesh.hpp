#pragma once

#include <array>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "evtrack/errors.hpp"
#include "evtrack/geom.hpp"
#include "evtrack/image.hpp"
#include "evtrack/rng.hpp"

namespace evtrack {

// Textured triangle mesh in model coordinates (meters). Vertices carry one uv
// each; the texture is an RGB float image.
struct TriangleMesh {
    std::vector<Vec3> vertices;
    std::vector<std::array<int, 3>> triangles;
    std::vector<Vec2> uv;
    ImageF texture;
    Vec3 center_of_mass = Vec3::Zero();

    void validate() const {
        const int n = int(vertices.size());
        if (uv.size() != vertices.size()) throw Error("mesh uv count must match vertex count");
        for (const auto& t : triangles) {
            for (int i : t)
                if (i < 0 || i >= n) throw Error("mesh triangle index out of range");
            const Vec3 ab = vertices[t[1]] - vertices[t[0]];
            const Vec3 ac = vertices[t[2]] - vertices[t[0]];
            if (ab.cross(ac).norm() <= 0.0) throw Error("mesh has a degenerate triangle");
        }
    }

    Vec3 vertex_centroid() const {
        Vec3 c = Vec3::Zero();
        for (const auto& v : vertices) c += v;
        return vertices.empty() ? c : Vec3(c / double(vertices.size()));
    }
};

// Checkerboard-style texture with per-cell brightness variation; strong edges
// everywhere so simulated motion produces plenty of events.
inline ImageF make_checker_texture(int size = 128, int cells = 8) {
    ImageF tex(size, size, 3);
    for (int y = 0; y < size; ++y)
        for (int x = 0; x < size; ++x) {
            const int cx = x * cells / size, cy = y * cells / size;
            const std::uint64_t h = detail::splitmix64(std::uint64_t(cy) * 8191 + cx);
            const float base = ((cx + cy) % 2 == 0) ? 0.85f : 0.2f;
            const float wobble = float((h & 0xff) / 255.0) * 0.15f;
            const float r = std::clamp(base + wobble, 0.0f, 1.0f);
            const float g = std::clamp(base + float(((h >> 8) & 0xff) / 255.0) * 0.15f, 0.0f, 1.0f);
            const float b = std::clamp(base + float(((h >> 16) & 0xff) / 255.0) * 0.15f, 0.0f, 1.0f);
            tex.at(x, y, 0) = r;
            tex.at(x, y, 1) = g;
            tex.at(x, y, 2) = b;
        }
    return tex;
}

// Sphere with a fixed smooth radial modulation. The bumps kill the rotational
// symmetry, which both ICP and the pose networks need to observe orientation.
inline TriangleMesh make_bumpy_sphere(double radius = 0.08, int rings = 24, int segments = 48,
                                      double bump = 0.18) {
    TriangleMesh m;
    const auto radial = [&](double theta, double phi) {
        return radius * (1.0 + bump * (0.5 * std::sin(3.0 * theta) * std::sin(2.0 * phi) +
                                       0.3 * std::cos(5.0 * theta + 1.0) * std::sin(4.0 * phi) +
                                       0.2 * std::sin(2.0 * theta - 0.7) * std::cos(3.0 * phi)));
    };
    for (int i = 0; i <= rings; ++i) {
        const double phi = M_PI * i / rings;  // 0 at +z pole
        for (int j = 0; j <= segments; ++j) {
            const double theta = 2.0 * M_PI * j / segments - M_PI;
            const double r = radial(theta, phi);
            m.vertices.emplace_back(r * std::sin(phi) * std::cos(theta),
                                    r * std::sin(phi) * std::sin(theta), r * std::cos(phi));
            m.uv.emplace_back(double(j) / segments, double(i) / rings);
        }
    }
    const int stride = segments + 1;
    for (int i = 0; i < rings; ++i)
        for (int j = 0; j < segments; ++j) {
            const int a = i * stride + j, b = a + 1, c = a + stride, d = c + 1;
            if (i != 0) m.triangles.push_back({a, c, b});
            if (i != rings - 1) m.triangles.push_back({b, c, d});
        }
    m.texture = make_checker_texture(256, 12);
    m.center_of_mass = Vec3::Zero();
    return m;
}

inline TriangleMesh make_textured_cube(double side = 0.1) {
    TriangleMesh m;
    const double s = side / 2.0;
    // 6 faces, 4 unique vertices each so uv seams are clean
    const Vec3 corners[8] = {{-s, -s, -s}, {s, -s, -s}, {s, s, -s}, {-s, s, -s},
                             {-s, -s, s},  {s, -s, s},  {s, s, s},  {-s, s, s}};
    const int faces[6][4] = {{0, 1, 2, 3}, {5, 4, 7, 6}, {4, 0, 3, 7},
                             {1, 5, 6, 2}, {4, 5, 1, 0}, {3, 2, 6, 7}};
    for (const auto& f : faces) {
        const int base = int(m.vertices.size());
        const Vec2 uvs[4] = {{0, 0}, {1, 0}, {1, 1}, {0, 1}};
        for (int k = 0; k < 4; ++k) {
            m.vertices.push_back(corners[f[k]]);
            m.uv.push_back(uvs[k]);
        }
        m.triangles.push_back({base, base + 1, base + 2});
        m.triangles.push_back({base, base + 2, base + 3});
    }
    m.texture = make_checker_texture(128, 6);
    m.center_of_mass = Vec3::Zero();
    return m;
}

// Minimal Wavefront OBJ support: v / vt / f records, faces triangulated as
// fans. Positions are interpreted in meters.
inline TriangleMesh load_obj(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open mesh: " + path);

    std::vector<Vec3> positions;
    std::vector<Vec2> texcoords;
    struct Corner {
        int v, vt;
    };
    std::vector<std::array<Corner, 3>> faces;

    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::istringstream ss(line);
        std::string tag;
        if (!(ss >> tag) || tag[0] == '#') continue;
        if (tag == "v") {
            Vec3 p;
            if (!(ss >> p.x() >> p.y() >> p.z())) throw ParseError(path, lineno, "bad vertex");
            positions.push_back(p);
        } else if (tag == "vt") {
            Vec2 t;
            if (!(ss >> t.x() >> t.y())) throw ParseError(path, lineno, "bad texcoord");
            texcoords.push_back(t);
        } else if (tag == "f") {
            std::vector<Corner> poly;
            std::string tok;
            while (ss >> tok) {
                Corner c{0, -1};
                const auto slash = tok.find('/');
                c.v = std::stoi(tok.substr(0, slash)) - 1;
                if (slash != std::string::npos) {
                    const auto rest = tok.substr(slash + 1);
                    const auto slash2 = rest.find('/');
                    const auto vt = rest.substr(0, slash2);
                    if (!vt.empty()) c.vt = std::stoi(vt) - 1;
                }
                poly.push_back(c);
            }
            if (poly.size() < 3) throw ParseError(path, lineno, "face needs at least 3 corners");
            for (std::size_t k = 2; k < poly.size(); ++k)
                faces.push_back({poly[0], poly[k - 1], poly[k]});
        }
    }

    // split corners so each output vertex carries one uv
    TriangleMesh m;
    for (const auto& f : faces) {
        std::array<int, 3> tri;
        for (int k = 0; k < 3; ++k) {
            const Corner& c = f[k];
            if (c.v < 0 || c.v >= int(positions.size())) throw IoError("OBJ vertex index out of range: " + path);
            m.vertices.push_back(positions[c.v]);
            m.uv.push_back(c.vt >= 0 && c.vt < int(texcoords.size()) ? texcoords[c.vt] : Vec2(0, 0));
            tri[k] = int(m.vertices.size()) - 1;
        }
        m.triangles.push_back(tri);
    }
    m.center_of_mass = m.vertex_centroid();
    return m;
}

// Resolves "builtin:sphere" / "builtin:cube" or an .obj path (with optional
// texture PNG next to it or given explicitly).
inline TriangleMesh load_mesh(const std::string& spec, const std::string& texture_path = "") {
    TriangleMesh m;
    if (spec == "builtin:sphere") {
        m = make_bumpy_sphere();
    } else if (spec == "builtin:cube") {
        m = make_textured_cube();
    } else {
        m = load_obj(spec);
        if (!texture_path.empty())
            m.texture = to_float(load_png_rgb8(texture_path));
        else
            m.texture = make_checker_texture();
    }
    m.validate();
    return m;
}

}  // namespace evtrack
