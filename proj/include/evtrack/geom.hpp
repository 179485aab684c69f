#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>
#include <Eigen/SVD>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "evtrack/errors.hpp"

// SE(3) pose algebra: rigid transforms, pose-error metrics and the random
// pose-perturbation sampling used for training-data generation. A pose maps
// model coordinates into camera coordinates; composition a*b applies b first.

namespace evtrack {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Vec6 = Eigen::Matrix<double, 6, 1>;

struct RigidTransform {
    Mat3 rotation = Mat3::Identity();
    Vec3 translation = Vec3::Zero();

    static RigidTransform identity() { return {}; }

    static RigidTransform from_parts(const Mat3& r, const Vec3& t) { return {r, t}; }

    Vec3 operator*(const Vec3& p) const { return rotation * p + translation; }

    // b first, then a: (a*b)(x) = a(b(x))
    RigidTransform operator*(const RigidTransform& b) const {
        return {rotation * b.rotation, rotation * b.translation + translation};
    }

    RigidTransform inverse() const {
        Mat3 rt = rotation.transpose();
        return {rt, -(rt * translation)};
    }

    Eigen::Matrix4d matrix() const {
        Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
        m.topLeftCorner<3, 3>() = rotation;
        m.topRightCorner<3, 1>() = translation;
        return m;
    }

    static RigidTransform from_matrix(const Eigen::Matrix4d& m) {
        return {m.topLeftCorner<3, 3>(), m.topRightCorner<3, 1>()};
    }

    // Projects the rotation block back onto SO(3); use after long chains of
    // compositions to shed accumulated round-off.
    RigidTransform orthonormalized() const {
        Eigen::JacobiSVD<Mat3> svd(rotation, Eigen::ComputeFullU | Eigen::ComputeFullV);
        Mat3 r = svd.matrixU() * svd.matrixV().transpose();
        if (r.determinant() < 0) {
            Mat3 flip = Mat3::Identity();
            flip(2, 2) = -1;
            r = svd.matrixU() * flip * svd.matrixV().transpose();
        }
        return {r, translation};
    }

    bool is_valid(double tol = 1e-9) const {
        return (rotation.transpose() * rotation - Mat3::Identity()).norm() <= tol &&
               rotation.determinant() > 0 && translation.allFinite();
    }
};

inline RigidTransform compose(const RigidTransform& a, const RigidTransform& b) { return a * b; }
inline RigidTransform invert(const RigidTransform& a) { return a.inverse(); }

// --- error metrics -----------------------------------------------------------

inline double translation_error(const Vec3& t_star, const Vec3& t) { return (t_star - t).norm(); }

// arccos((Tr(R^T R*) - 1) / 2), trace argument clamped against round-off.
inline double rotation_error(const Mat3& r_star, const Mat3& r) {
    const double c = ((r.transpose() * r_star).trace() - 1.0) / 2.0;
    return std::acos(std::clamp(c, -1.0, 1.0));
}

inline double translation_error(const RigidTransform& a, const RigidTransform& b) {
    return translation_error(a.translation, b.translation);
}
inline double rotation_error(const RigidTransform& a, const RigidTransform& b) {
    return rotation_error(a.rotation, b.rotation);
}

// --- rotation parameterizations ----------------------------------------------

inline Mat3 axis_angle_to_matrix(const Vec3& axis, double angle) {
    return Eigen::AngleAxisd(angle, axis.normalized()).toRotationMatrix();
}

inline void matrix_to_axis_angle(const Mat3& r, Vec3& axis, double& angle) {
    Eigen::AngleAxisd aa(r);
    axis = aa.axis();
    angle = aa.angle();
}

// Intrinsic XYZ convention: R = Rx(a) * Ry(b) * Rz(c).
inline Mat3 euler_xyz_to_matrix(const Vec3& abc) {
    return (Eigen::AngleAxisd(abc.x(), Vec3::UnitX()) *
            Eigen::AngleAxisd(abc.y(), Vec3::UnitY()) *
            Eigen::AngleAxisd(abc.z(), Vec3::UnitZ()))
        .toRotationMatrix();
}

inline Vec3 matrix_to_euler_xyz(const Mat3& r) {
    // R = Rx*Ry*Rz gives r02 = sin(b), r01 = -cos(b) sin(c), r12 = -sin(a) cos(b)
    const double b = std::asin(std::clamp(r(0, 2), -1.0, 1.0));
    double a, c;
    if (std::abs(std::cos(b)) > 1e-9) {
        a = std::atan2(-r(1, 2), r(2, 2));
        c = std::atan2(-r(0, 1), r(0, 0));
    } else {
        a = std::atan2(r(2, 1), r(1, 1));
        c = 0.0;
    }
    return {a, b, c};
}

// --- pose deltas --------------------------------------------------------------

// The sampled inter-frame perturbation: a translation along `direction` and a
// rotation about `rotation_axis` applied at the object's center of mass.
struct PoseDelta {
    Vec3 direction = Vec3::UnitZ();
    double translation_magnitude = 0.0;  // meters
    Vec3 rotation_axis = Vec3::UnitZ();
    double rotation_magnitude = 0.0;  // radians

    Vec3 translation_vector() const { return direction * translation_magnitude; }
    Mat3 rotation_matrix() const { return axis_angle_to_matrix(rotation_axis, rotation_magnitude); }
};

inline constexpr double kDeltaTranslationMax = 0.04;               // meters
inline constexpr double kDeltaRotationMax = 35.0 * M_PI / 180.0;   // radians

// theta ~ U(-pi, pi), phi = acos(2x - 1) with x ~ U(0, 1);
// direction = (sin phi cos theta, sin phi sin theta, cos phi).
template <class R>
Vec3 sample_sphere_direction(R& rng) {
    const double theta = rng.uniform(-M_PI, M_PI);
    const double x = rng.uniform(0.0, 1.0);
    const double phi = std::acos(std::clamp(2.0 * x - 1.0, -1.0, 1.0));
    const double sp = std::sin(phi);
    return {sp * std::cos(theta), sp * std::sin(theta), std::cos(phi)};
}

template <class R>
PoseDelta sample_pose_delta(R& rng) {
    PoseDelta d;
    d.direction = sample_sphere_direction(rng);
    d.rotation_axis = sample_sphere_direction(rng);
    d.translation_magnitude = rng.uniform(0.0, kDeltaTranslationMax);
    d.rotation_magnitude = rng.uniform(0.0, kDeltaRotationMax);
    return d;
}

// Rotates the posed object about its center of mass (com given in model
// coordinates), then translates it. The center of mass moves by exactly the
// delta's translation vector.
inline RigidTransform apply_delta(const PoseDelta& delta, const RigidTransform& pose,
                                  const Vec3& com = Vec3::Zero()) {
    const Vec3 c = pose * com;
    const Mat3 rd = delta.rotation_matrix();
    RigidTransform out;
    out.rotation = rd * pose.rotation;
    out.translation = rd * (pose.translation - c) + c + delta.translation_vector();
    return out;
}

// Same motion as apply_delta, but from an explicit (rotation, translation
// vector) pair instead of axis/magnitude form.
inline RigidTransform apply_delta_rt(const Mat3& rd, const Vec3& tv, const RigidTransform& pose,
                                     const Vec3& com = Vec3::Zero()) {
    const Vec3 c = pose * com;
    RigidTransform out;
    out.rotation = rd * pose.rotation;
    out.translation = rd * (pose.translation - c) + c + tv;
    return out;
}

// Inverse of apply_delta: the (rd, tv) pair carrying pose0 to pose1 about com.
inline void delta_between(const RigidTransform& pose0, const RigidTransform& pose1,
                          const Vec3& com, Mat3& rd, Vec3& tv) {
    rd = pose1.rotation * pose0.rotation.transpose();
    tv = pose1 * com - pose0 * com;
}

// --- 6-vector pose-delta encoding ---------------------------------------------
// Network label layout: [tx, ty, tz, ex, ey, ez] with translation in meters
// and rotation as intrinsic XYZ Euler angles in radians. Normalization to
// [-1, 1] divides by the sampling bounds (0.04 m, 35 deg).

inline Vec6 encode_delta(const Mat3& rd, const Vec3& tv) {
    Vec6 v;
    v.head<3>() = tv;
    v.tail<3>() = matrix_to_euler_xyz(rd);
    return v;
}

inline Vec6 encode_delta(const PoseDelta& d) {
    return encode_delta(d.rotation_matrix(), d.translation_vector());
}

inline void decode_delta(const Vec6& v, Mat3& rd, Vec3& tv) {
    tv = v.head<3>();
    rd = euler_xyz_to_matrix(v.tail<3>());
}

inline Vec6 normalize_label(const Vec6& v) {
    Vec6 out;
    out.head<3>() = v.head<3>() / kDeltaTranslationMax;
    out.tail<3>() = v.tail<3>() / kDeltaRotationMax;
    return out;
}

inline Vec6 denormalize_label(const Vec6& v) {
    Vec6 out;
    out.head<3>() = v.head<3>() * kDeltaTranslationMax;
    out.tail<3>() = v.tail<3>() * kDeltaRotationMax;
    return out;
}

// --- pose file format ----------------------------------------------------------
// One 4x4 row-major homogeneous matrix per frame, whitespace-separated text,
// translations in meters.

inline void save_pose_trace(const std::string& path, const std::vector<RigidTransform>& poses) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open pose file for writing: " + path);
    char buf[32];
    for (const auto& p : poses) {
        const Eigen::Matrix4d m = p.matrix();
        for (int r = 0; r < 4; ++r) {
            for (int c = 0; c < 4; ++c) {
                std::snprintf(buf, sizeof buf, "%.17g", m(r, c));
                out << buf << (r == 3 && c == 3 ? "\n" : " ");
            }
        }
    }
    if (!out) throw IoError("failed writing pose file: " + path);
}

inline std::vector<RigidTransform> load_pose_trace(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open pose file: " + path);
    std::vector<RigidTransform> poses;
    std::vector<double> vals;
    double v;
    while (in >> v) vals.push_back(v);
    if (vals.size() % 16 != 0) throw IoError("pose file is not a whole number of 4x4 matrices: " + path);
    for (std::size_t i = 0; i < vals.size(); i += 16) {
        Eigen::Matrix4d m;
        for (int r = 0; r < 4; ++r)
            for (int c = 0; c < 4; ++c) m(r, c) = vals[i + 4 * r + c];
        poses.push_back(RigidTransform::from_matrix(m));
    }
    return poses;
}

}  // namespace evtrack
