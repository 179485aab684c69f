#pragma once

#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include "evtrack/camera.hpp"
#include "evtrack/errors.hpp"
#include "evtrack/geom.hpp"

namespace evtrack {

enum class CameraId { RGB, DEPTH, EVENT };

inline const char* to_string(CameraId id) {
    switch (id) {
        case CameraId::RGB: return "RGB";
        case CameraId::DEPTH: return "DEPTH";
        default: return "EVENT";
    }
}

inline CameraId camera_id_from_string(const std::string& s) {
    if (s == "RGB") return CameraId::RGB;
    if (s == "DEPTH") return CameraId::DEPTH;
    if (s == "EVENT") return CameraId::EVENT;
    throw IoError("unknown camera id: " + s);
}

// Calibration state of the three-camera capture rig. Extrinsics follow the
// frame-to-frame convention: t_rgb_depth maps RGB-frame coordinates into the
// depth camera frame.
struct Rig {
    Intrinsics rgb, depth, event;
    RigidTransform t_rgb_depth, t_event_depth;
    DepthCorrection depth_correction;

    const Intrinsics& intrinsics(CameraId id) const {
        switch (id) {
            case CameraId::RGB: return rgb;
            case CameraId::DEPTH: return depth;
            default: return event;
        }
    }
    Intrinsics& intrinsics(CameraId id) {
        switch (id) {
            case CameraId::RGB: return rgb;
            case CameraId::DEPTH: return depth;
            default: return event;
        }
    }

    // x_b = transform_between(a, b) * x_a
    RigidTransform transform_between(CameraId a, CameraId b) const {
        const auto to_depth = [&](CameraId id) -> RigidTransform {
            switch (id) {
                case CameraId::RGB: return t_rgb_depth;
                case CameraId::DEPTH: return RigidTransform::identity();
                default: return t_event_depth;
            }
        };
        return to_depth(b).inverse() * to_depth(a);
    }
};

// --- rig file ------------------------------------------------------------------
// Human-readable document with named sections RGB, DEPTH, EVENT, EXTRINSICS
// and DEPTH_CORRECTION.

namespace rigio {

inline void write_intrinsics(std::ostream& out, const Intrinsics& k) {
    char buf[512];
    std::snprintf(buf, sizeof buf, "resolution %d %d\n", k.width, k.height);
    out << buf;
    std::snprintf(buf, sizeof buf, "focal %.17g %.17g\n", k.fx, k.fy);
    out << buf;
    std::snprintf(buf, sizeof buf, "center %.17g %.17g\n", k.cx, k.cy);
    out << buf;
    std::snprintf(buf, sizeof buf, "radial %.17g %.17g %.17g %.17g %.17g %.17g\n", k.radial[0],
                  k.radial[1], k.radial[2], k.radial[3], k.radial[4], k.radial[5]);
    out << buf;
    std::snprintf(buf, sizeof buf, "tangential %.17g %.17g\n", k.tangential[0], k.tangential[1]);
    out << buf;
}

inline void write_transform(std::ostream& out, const RigidTransform& t) {
    char buf[256];
    const Eigen::Matrix4d m = t.matrix();
    for (int r = 0; r < 4; ++r) {
        std::snprintf(buf, sizeof buf, "%.17g %.17g %.17g %.17g\n", m(r, 0), m(r, 1), m(r, 2), m(r, 3));
        out << buf;
    }
}

}  // namespace rigio

inline void save_rig(const std::string& path, const Rig& rig) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open rig file for writing: " + path);
    out << "EVTRACK_RIG schema_version 1\n";
    out << "[RGB]\n";
    rigio::write_intrinsics(out, rig.rgb);
    out << "[DEPTH]\n";
    rigio::write_intrinsics(out, rig.depth);
    out << "[EVENT]\n";
    rigio::write_intrinsics(out, rig.event);
    out << "[EXTRINSICS]\n";
    out << "T_RGB_DEPTH\n";
    rigio::write_transform(out, rig.t_rgb_depth);
    out << "T_EVENT_DEPTH\n";
    rigio::write_transform(out, rig.t_event_depth);
    out << "[DEPTH_CORRECTION]\n";
    char buf[256];
    std::snprintf(buf, sizeof buf, "coeffs %.17g %.17g %.17g\n", rig.depth_correction.coeffs[0],
                  rig.depth_correction.coeffs[1], rig.depth_correction.coeffs[2]);
    out << buf;
    if (!out) throw IoError("failed writing rig file: " + path);
}

inline Rig load_rig(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open rig file: " + path);

    Rig rig;
    std::string line, section;
    int lineno = 0;
    Intrinsics* cur = nullptr;
    RigidTransform* cur_t = nullptr;
    int t_row = 0;
    Eigen::Matrix4d tmat = Eigen::Matrix4d::Identity();

    if (!std::getline(in, line)) throw IoError("empty rig file: " + path);
    ++lineno;
    if (line.rfind("EVTRACK_RIG", 0) != 0) throw ParseError(path, lineno, "missing EVTRACK_RIG header");

    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        if (line[0] == '[') {
            const auto end = line.find(']');
            if (end == std::string::npos) throw ParseError(path, lineno, "unterminated section name");
            section = line.substr(1, end - 1);
            if (section == "RGB") cur = &rig.rgb;
            else if (section == "DEPTH") cur = &rig.depth;
            else if (section == "EVENT") cur = &rig.event;
            else if (section == "EXTRINSICS" || section == "DEPTH_CORRECTION") cur = nullptr;
            else throw ParseError(path, lineno, "unknown section " + section);
            cur_t = nullptr;
            continue;
        }
        std::istringstream ss(line);
        std::string key;
        ss >> key;
        if (cur_t != nullptr && t_row < 4) {
            std::istringstream row(line);
            for (int c = 0; c < 4; ++c)
                if (!(row >> tmat(t_row, c))) throw ParseError(path, lineno, "bad transform row");
            if (++t_row == 4) {
                *cur_t = RigidTransform::from_matrix(tmat);
                cur_t = nullptr;
            }
            continue;
        }
        if (section == "EXTRINSICS") {
            if (key == "T_RGB_DEPTH") cur_t = &rig.t_rgb_depth;
            else if (key == "T_EVENT_DEPTH") cur_t = &rig.t_event_depth;
            else throw ParseError(path, lineno, "unknown extrinsics entry " + key);
            t_row = 0;
        } else if (section == "DEPTH_CORRECTION") {
            if (key != "coeffs") throw ParseError(path, lineno, "expected coeffs");
            for (double& c : rig.depth_correction.coeffs)
                if (!(ss >> c)) throw ParseError(path, lineno, "bad coeffs");
        } else if (cur != nullptr) {
            if (key == "resolution") ss >> cur->width >> cur->height;
            else if (key == "focal") ss >> cur->fx >> cur->fy;
            else if (key == "center") ss >> cur->cx >> cur->cy;
            else if (key == "radial")
                for (double& k : cur->radial) ss >> k;
            else if (key == "tangential")
                for (double& k : cur->tangential) ss >> k;
            else throw ParseError(path, lineno, "unknown intrinsics entry " + key);
            if (!ss) throw ParseError(path, lineno, "bad " + key + " values");
        } else {
            throw ParseError(path, lineno, "entry outside of a section");
        }
    }
    return rig;
}

}  // namespace evtrack
