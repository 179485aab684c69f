#pragma once

#include <Eigen/Core>
#include <Eigen/LU>

#include <array>
#include <cmath>
#include <cstdint>
#include <vector>

#include "evtrack/errors.hpp"
#include "evtrack/geom.hpp"

// Camera projection models, lens distortion, depth-map correction and the
// RGB-D / event temporal pairing.

namespace evtrack {

// Pinhole model with the 8-parameter rational distortion: three radial
// numerator terms k1..k3, three radial denominator terms k4..k6 and two
// tangential terms p1, p2, applied in normalized coordinates.
struct Intrinsics {
    double fx = 0, fy = 0;
    double cx = 0, cy = 0;
    std::array<double, 6> radial{};      // k1..k6
    std::array<double, 2> tangential{};  // p1, p2
    int width = 0, height = 0;

    bool has_distortion() const {
        for (double k : radial)
            if (k != 0.0) return true;
        return tangential[0] != 0.0 || tangential[1] != 0.0;
    }

    bool is_valid() const {
        return fx > 0 && fy > 0 && cx >= 0 && cx < width && cy >= 0 && cy < height;
    }
};

// Applies the distortion model to a normalized image point.
inline Vec2 distort_normalized(const Vec2& xy, const Intrinsics& k) {
    const double x = xy.x(), y = xy.y();
    const double r2 = x * x + y * y;
    const double r4 = r2 * r2;
    const double r6 = r4 * r2;
    const double num = 1.0 + k.radial[0] * r2 + k.radial[1] * r4 + k.radial[2] * r6;
    const double den = 1.0 + k.radial[3] * r2 + k.radial[4] * r4 + k.radial[5] * r6;
    const double s = num / den;
    const double p1 = k.tangential[0], p2 = k.tangential[1];
    return {x * s + 2.0 * p1 * x * y + p2 * (r2 + 2.0 * x * x),
            y * s + p1 * (r2 + 2.0 * y * y) + 2.0 * p2 * x * y};
}

inline Vec2 project_normalized(const Vec3& point) {
    if (point.z() <= 0.0) throw NonPositiveDepth();
    return {point.x() / point.z(), point.y() / point.z()};
}

// 3D camera-frame point (meters) to pixel coordinates.
inline Vec2 project(const Vec3& point, const Intrinsics& k) {
    const Vec2 d = distort_normalized(project_normalized(point), k);
    return {k.fx * d.x() + k.cx, k.fy * d.y() + k.cy};
}

// Pixel to normalized coordinates, inverting the distortion model by Newton
// iteration on the 2D residual.
inline Vec2 undistort(const Vec2& pixel, const Intrinsics& k, int max_iterations = 50) {
    const Vec2 target{(pixel.x() - k.cx) / k.fx, (pixel.y() - k.cy) / k.fy};
    if (!k.has_distortion()) return target;
    Vec2 x = target;
    for (int it = 0; it < max_iterations; ++it) {
        const Vec2 f = distort_normalized(x, k) - target;
        if (f.norm() < 1e-12) return x;
        // numeric Jacobian of the distortion map
        const double h = 1e-7;
        Eigen::Matrix2d jac;
        for (int c = 0; c < 2; ++c) {
            Vec2 xp = x, xm = x;
            xp[c] += h;
            xm[c] -= h;
            jac.col(c) = (distort_normalized(xp, k) - distort_normalized(xm, k)) / (2.0 * h);
        }
        x -= jac.inverse() * f;
    }
    if ((distort_normalized(x, k) - target).norm() > 1e-9) throw NoConvergence("undistort");
    return x;
}

// Pixel plus depth (millimeters) to a camera-frame point in meters.
inline Vec3 backproject(const Vec2& pixel, double z_mm, const Intrinsics& k) {
    if (z_mm <= 0.0) throw NonPositiveDepth();
    const Vec2 n = undistort(pixel, k);
    const double z = z_mm * 1e-3;
    return {n.x() * z, n.y() * z, z};
}

// --- depth correction -----------------------------------------------------------

// Fitted depth-error polynomial e(z) = a z^2 + b z + c, z and e in millimeters.
struct DepthCorrection {
    std::array<double, 3> coeffs{};  // a, b, c

    double error_at(double z_mm) const {
        return coeffs[0] * z_mm * z_mm + coeffs[1] * z_mm + coeffs[2];
    }
};

// Subtracts the fitted error from a raw depth reading.
inline double correct_depth(double z_raw_mm, const DepthCorrection& c) {
    return z_raw_mm - c.error_at(z_raw_mm);
}

// --- temporal synchronization -----------------------------------------------------

// Integer pulse offset between the RGB-D stream and the event camera trigger:
// delta = floor(t0 * fps), with t0 the first RGB-D frame timestamp in seconds.
inline long temporal_offset(double t0_seconds, double fps) {
    return long(std::floor(t0_seconds * fps));
}

struct RGBDEFramePair {
    int rgbd_index = 0;
    std::uint64_t window_start_us = 0;  // [start, end)
    std::uint64_t window_end_us = 0;
};

// Pairs RGB-D frame i with event pulse i + delta; each pair's event window is
// the interval between consecutive pulses.
inline std::vector<RGBDEFramePair> pair_frames(const std::vector<double>& rgbd_timestamps_s,
                                               const std::vector<std::uint64_t>& pulse_timestamps_us,
                                               double fps) {
    std::vector<RGBDEFramePair> pairs;
    if (rgbd_timestamps_s.empty()) return pairs;
    const long delta = temporal_offset(rgbd_timestamps_s.front(), fps);
    const std::uint64_t window_us = std::uint64_t(std::llround(1e6 / fps));
    for (std::size_t i = 0; i < rgbd_timestamps_s.size(); ++i) {
        const std::size_t j = i + std::size_t(delta);
        if (j + 1 > pulse_timestamps_us.size())
            throw InsufficientPulses("frame " + std::to_string(i) + " needs pulse " + std::to_string(j));
        RGBDEFramePair p;
        p.rgbd_index = int(i);
        p.window_start_us = pulse_timestamps_us[j];
        p.window_end_us = (j + 1 < pulse_timestamps_us.size()) ? pulse_timestamps_us[j + 1]
                                                               : pulse_timestamps_us[j] + window_us;
        pairs.push_back(p);
    }
    return pairs;
}

}  // namespace evtrack
