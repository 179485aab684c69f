#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "evtrack/camera.hpp"
#include "evtrack/geom.hpp"
#include "evtrack/image.hpp"
#include "evtrack/mesh.hpp"

// Z-buffered software rasterizer. Projection is the pinhole part of the
// intrinsics (distortion coefficients are not applied to rendered geometry);
// coverage is sampled at pixel centers with a top-left fill rule, and
// vertex attributes are interpolated perspective-correct.

namespace evtrack {

struct Framebuffer {
    ImageF color;  // w x h x {3 or 1}
    ImageF depth;  // meters

    int width() const { return color.width; }
    int height() const { return color.height; }
};

// Shading model: ambient_ratio * albedo + (1 - ambient_ratio) * albedo * max(0, n.l)
// with a fixed headlight pointing from the scene toward the camera.
struct RenderOptions {
    double ambient_ratio = 1.0;
    double near_clip = 0.01;  // meters
};

// Background plane orthogonal to the optical axis: the texture is stretched
// over the full view at the given depth.
inline Framebuffer make_background(int width, int height, int channels, const ImageF& texture,
                                   double depth_m) {
    Framebuffer fb;
    fb.color = ImageF(width, height, channels);
    fb.depth = ImageF(width, height, 1, float(depth_m));
    float px[4] = {0.5f, 0.5f, 0.5f, 0.5f};
    for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x) {
            if (!texture.empty()) sample_bilinear(texture, (x + 0.5) / width, (y + 0.5) / height, px);
            if (channels == 1) {
                fb.color.at(x, y) = texture.channels >= 3 ? luminance(px[0], px[1], px[2]) : px[0];
            } else {
                for (int c = 0; c < channels; ++c)
                    fb.color.at(x, y, c) = texture.channels >= 3 ? px[c] : px[0];
            }
        }
    return fb;
}

namespace rasterdetail {

struct ScreenVertex {
    double x, y;   // pixel coordinates
    double z;      // camera depth, meters
    double u, v;   // texture coordinates
};

inline double edge(double ax, double ay, double bx, double by, double px, double py) {
    return (bx - ax) * (py - ay) - (by - ay) * (px - ax);
}

// y grows downward; a "top" edge is horizontal heading left, a "left" edge
// heads downward.
inline bool top_left(const ScreenVertex& a, const ScreenVertex& b) {
    if (a.y == b.y) return b.x < a.x;
    return b.y > a.y;
}

}  // namespace rasterdetail

// Draws the mesh at `pose` over whatever the framebuffer already holds,
// depth-testing against fb.depth.
inline void rasterize_mesh(Framebuffer& fb, const TriangleMesh& mesh, const RigidTransform& pose,
                           const Intrinsics& k, const RenderOptions& opt = {}) {
    using rasterdetail::ScreenVertex;
    using rasterdetail::edge;
    using rasterdetail::top_left;

    const int w = fb.width(), h = fb.height();
    const int channels = fb.color.channels;
    std::vector<Vec3> cam(mesh.vertices.size());
    for (std::size_t i = 0; i < mesh.vertices.size(); ++i) cam[i] = pose * mesh.vertices[i];

    float texel[4] = {0.7f, 0.7f, 0.7f, 0.7f};
    for (const auto& tri : mesh.triangles) {
        const Vec3& c0 = cam[tri[0]];
        const Vec3& c1 = cam[tri[1]];
        const Vec3& c2 = cam[tri[2]];
        if (c0.z() < opt.near_clip || c1.z() < opt.near_clip || c2.z() < opt.near_clip) continue;

        // face normal in camera frame, oriented toward the camera
        Vec3 n = (c1 - c0).cross(c2 - c0);
        const double nn = n.norm();
        if (nn <= 0.0) continue;
        n /= nn;
        if (n.z() > 0) n = -n;
        const double lambert = std::max(0.0, -n.z());  // headlight along -z
        const double shade = opt.ambient_ratio + (1.0 - opt.ambient_ratio) * lambert;

        ScreenVertex sv[3];
        const Vec3* cs[3] = {&c0, &c1, &c2};
        for (int i = 0; i < 3; ++i) {
            sv[i].x = k.fx * cs[i]->x() / cs[i]->z() + k.cx;
            sv[i].y = k.fy * cs[i]->y() / cs[i]->z() + k.cy;
            sv[i].z = cs[i]->z();
            sv[i].u = mesh.uv[tri[i]].x();
            sv[i].v = mesh.uv[tri[i]].y();
        }

        double area2 = edge(sv[0].x, sv[0].y, sv[1].x, sv[1].y, sv[2].x, sv[2].y);
        if (area2 == 0.0) continue;
        if (area2 < 0.0) {
            std::swap(sv[1], sv[2]);
            area2 = -area2;
        }

        const int x0 = std::max(0, int(std::floor(std::min({sv[0].x, sv[1].x, sv[2].x}) - 0.5)));
        const int x1 = std::min(w - 1, int(std::ceil(std::max({sv[0].x, sv[1].x, sv[2].x}) - 0.5)));
        const int y0 = std::max(0, int(std::floor(std::min({sv[0].y, sv[1].y, sv[2].y}) - 0.5)));
        const int y1 = std::min(h - 1, int(std::ceil(std::max({sv[0].y, sv[1].y, sv[2].y}) - 0.5)));
        if (x0 > x1 || y0 > y1) continue;

        const bool tl0 = top_left(sv[1], sv[2]);
        const bool tl1 = top_left(sv[2], sv[0]);
        const bool tl2 = top_left(sv[0], sv[1]);

        for (int py = y0; py <= y1; ++py) {
            const double cyp = py + 0.5;
            for (int px = x0; px <= x1; ++px) {
                const double cxp = px + 0.5;
                const double w0 = edge(sv[1].x, sv[1].y, sv[2].x, sv[2].y, cxp, cyp);
                const double w1 = edge(sv[2].x, sv[2].y, sv[0].x, sv[0].y, cxp, cyp);
                const double w2 = edge(sv[0].x, sv[0].y, sv[1].x, sv[1].y, cxp, cyp);
                const bool inside = (w0 > 0 || (w0 == 0 && tl0)) && (w1 > 0 || (w1 == 0 && tl1)) &&
                                    (w2 > 0 || (w2 == 0 && tl2));
                if (!inside) continue;

                const double l0 = w0 / area2, l1 = w1 / area2, l2 = w2 / area2;
                const double inv_z = l0 / sv[0].z + l1 / sv[1].z + l2 / sv[2].z;
                const double z = 1.0 / inv_z;
                if (!(z < fb.depth.at(px, py))) continue;

                const double u = (l0 * sv[0].u / sv[0].z + l1 * sv[1].u / sv[1].z + l2 * sv[2].u / sv[2].z) * z;
                const double v = (l0 * sv[0].v / sv[0].z + l1 * sv[1].v / sv[1].z + l2 * sv[2].v / sv[2].z) * z;
                if (!mesh.texture.empty())
                    sample_bilinear(mesh.texture, std::clamp(u, 0.0, 1.0), std::clamp(v, 0.0, 1.0), texel);

                fb.depth.at(px, py) = float(z);
                if (channels == 1) {
                    const float albedo = mesh.texture.channels >= 3
                                             ? luminance(texel[0], texel[1], texel[2])
                                             : texel[0];
                    fb.color.at(px, py) = float(albedo * shade);
                } else {
                    for (int c = 0; c < channels; ++c) {
                        const float albedo = mesh.texture.channels >= 3 ? texel[c] : texel[0];
                        fb.color.at(px, py, c) = float(albedo * shade);
                    }
                }
            }
        }
    }
}

struct Scene {
    const TriangleMesh* mesh = nullptr;
    RigidTransform pose;
    ImageF background;        // texture for the backdrop plane
    double background_depth = 2.0;  // meters
    double ambient_ratio = 1.0;
};

// Full render: background plane plus the posed mesh. channels = 3 for RGB,
// 1 for luminance-only output.
inline Framebuffer render(const Scene& scene, const Intrinsics& k, int channels = 3) {
    Framebuffer fb = make_background(k.width, k.height, channels, scene.background, scene.background_depth);
    if (scene.mesh) {
        RenderOptions opt;
        opt.ambient_ratio = scene.ambient_ratio;
        rasterize_mesh(fb, *scene.mesh, scene.pose, k, opt);
    }
    return fb;
}

inline ImageF framebuffer_luminance(const Framebuffer& fb) {
    if (fb.color.channels == 1) return fb.color;
    return to_luminance(fb.color);
}

// Projected wireframe overlay, used by the CLI to visualize estimated poses.
inline void draw_mesh_outline(ImageU8& img, const TriangleMesh& mesh, const RigidTransform& pose,
                              const Intrinsics& k, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
    const auto draw_line = [&](Vec2 a, Vec2 c) {
        const int steps = int(std::ceil((c - a).norm())) + 1;
        for (int s = 0; s <= steps; ++s) {
            const Vec2 p = a + (c - a) * (double(s) / steps);
            const int x = int(std::lround(p.x())), y = int(std::lround(p.y()));
            if (x < 0 || y < 0 || x >= img.width || y >= img.height) continue;
            img.at(x, y, 0) = r;
            img.at(x, y, 1) = g;
            img.at(x, y, 2) = b;
        }
    };
    for (const auto& tri : mesh.triangles) {
        Vec3 c[3];
        Vec2 p[3];
        bool ok = true;
        for (int i = 0; i < 3; ++i) {
            c[i] = pose * mesh.vertices[tri[i]];
            if (c[i].z() <= 0.01) {
                ok = false;
                break;
            }
            p[i] = Vec2(k.fx * c[i].x() / c[i].z() + k.cx, k.fy * c[i].y() / c[i].z() + k.cy);
        }
        if (!ok) continue;
        draw_line(p[0], p[1]);
        draw_line(p[1], p[2]);
        draw_line(p[2], p[0]);
    }
}

}  // namespace evtrack
