#pragma once

#include <Eigen/Core>
#include <Eigen/Eigenvalues>
#include <Eigen/Geometry>
#include <Eigen/QR>
#include <Eigen/SVD>

#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "evtrack/camera.hpp"
#include "evtrack/errors.hpp"
#include "evtrack/geom.hpp"
#include "evtrack/lm.hpp"
#include "evtrack/rig.hpp"

// Checkerboard calibration: homography estimation, closed-form intrinsics,
// bundle refinement of the distortion model, PnP extrinsics and the
// depth-error polynomial fit.

namespace evtrack {
namespace calib {

struct BoardSpec {
    int rows = 9;
    int cols = 14;
    double square_size = 0.054;  // meters

    int corner_count() const { return rows * cols; }

    // Inner-corner grid on the board plane, row-major, z = 0.
    std::vector<Vec3> world_points() const {
        std::vector<Vec3> pts;
        pts.reserve(std::size_t(rows) * cols);
        for (int r = 0; r < rows; ++r)
            for (int c = 0; c < cols; ++c) pts.emplace_back(c * square_size, r * square_size, 0.0);
        return pts;
    }
};

struct CheckerboardObservation {
    CameraId camera_id = CameraId::RGB;
    int image_id = 0;
    BoardSpec board;
    std::vector<Vec2> image_points;  // pixel corners, row-major board order

    void validate() const {
        if (int(image_points.size()) != board.corner_count())
            throw Error("observation corner count does not match board spec");
        if (board.square_size <= 0) throw Error("board square size must be positive");
    }
};

namespace detail {

// Hartley similarity normalization: centroid to origin, mean distance sqrt(2).
inline Eigen::Matrix3d normalizing_similarity(const std::vector<Vec2>& pts) {
    Vec2 centroid = Vec2::Zero();
    for (const auto& p : pts) centroid += p;
    centroid /= double(pts.size());
    double mean_dist = 0;
    for (const auto& p : pts) mean_dist += (p - centroid).norm();
    mean_dist /= double(pts.size());
    const double s = mean_dist > 1e-15 ? std::sqrt(2.0) / mean_dist : 1.0;
    Eigen::Matrix3d t = Eigen::Matrix3d::Identity();
    t(0, 0) = t(1, 1) = s;
    t(0, 2) = -s * centroid.x();
    t(1, 2) = -s * centroid.y();
    return t;
}

inline bool collinear(const std::vector<Vec2>& pts, double tol = 1e-9) {
    Vec2 centroid = Vec2::Zero();
    for (const auto& p : pts) centroid += p;
    centroid /= double(pts.size());
    Eigen::Matrix2d cov = Eigen::Matrix2d::Zero();
    double scale = 0;
    for (const auto& p : pts) {
        const Vec2 d = p - centroid;
        cov += d * d.transpose();
        scale += d.squaredNorm();
    }
    if (scale <= 0) return true;
    const Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(cov);
    return es.eigenvalues()(0) <= tol * es.eigenvalues()(1);
}

}  // namespace detail

// Normalized DLT homography mapping plane coordinates to image coordinates.
inline Eigen::Matrix3d estimate_homography(const std::vector<Vec2>& world_xy,
                                           const std::vector<Vec2>& image) {
    if (world_xy.size() != image.size()) throw LengthMismatch("homography correspondence counts differ");
    if (world_xy.size() < 4) throw DegenerateConfiguration("homography needs at least 4 points");
    if (detail::collinear(world_xy) || detail::collinear(image))
        throw DegenerateConfiguration("homography points are collinear");

    const Eigen::Matrix3d tw = detail::normalizing_similarity(world_xy);
    const Eigen::Matrix3d ti = detail::normalizing_similarity(image);

    const std::size_t n = world_xy.size();
    Eigen::MatrixXd a(2 * n, 9);
    for (std::size_t i = 0; i < n; ++i) {
        const Eigen::Vector3d w = tw * Eigen::Vector3d(world_xy[i].x(), world_xy[i].y(), 1.0);
        const Eigen::Vector3d m = ti * Eigen::Vector3d(image[i].x(), image[i].y(), 1.0);
        const double X = w.x() / w.z(), Y = w.y() / w.z();
        const double u = m.x() / m.z(), v = m.y() / m.z();
        a.row(2 * i) << X, Y, 1, 0, 0, 0, -u * X, -u * Y, -u;
        a.row(2 * i + 1) << 0, 0, 0, X, Y, 1, -v * X, -v * Y, -v;
    }
    const Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeThinV);
    const Eigen::VectorXd h = svd.matrixV().col(8);
    Eigen::Matrix3d hn;
    hn << h(0), h(1), h(2), h(3), h(4), h(5), h(6), h(7), h(8);

    Eigen::Matrix3d out = ti.inverse() * hn * tw;
    if (std::abs(out(2, 2)) > 1e-12) out /= out(2, 2);
    return out;
}

// Closed-form intrinsics from >= 3 board homographies (Zhang's linear system
// on B = K^-T K^-1). Distortion is left at zero.
inline Intrinsics zhang_intrinsics(const std::vector<Eigen::Matrix3d>& homographies) {
    if (homographies.size() < 3)
        throw IllConditioned("intrinsics need at least 3 board orientations");

    const auto v_ij = [](const Eigen::Matrix3d& h, int i, int j) {
        Eigen::Matrix<double, 6, 1> v;
        v << h(0, i) * h(0, j), h(0, i) * h(1, j) + h(1, i) * h(0, j), h(1, i) * h(1, j),
            h(2, i) * h(0, j) + h(0, i) * h(2, j), h(2, i) * h(1, j) + h(1, i) * h(2, j),
            h(2, i) * h(2, j);
        return v;
    };

    Eigen::MatrixXd a(2 * homographies.size(), 6);
    for (std::size_t k = 0; k < homographies.size(); ++k) {
        const Eigen::Matrix3d& h = homographies[k];
        a.row(2 * k) = v_ij(h, 0, 1).transpose();
        a.row(2 * k + 1) = (v_ij(h, 0, 0) - v_ij(h, 1, 1)).transpose();
    }
    const Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeThinV);
    const auto& sv = svd.singularValues();
    if (sv(4) <= 0 || sv(0) / sv(4) > 1e12)
        throw IllConditioned("board orientations do not constrain the intrinsics");

    Eigen::Matrix<double, 6, 1> b = svd.matrixV().col(5);
    // B must be sign-definite; flip so B11 > 0
    if (b(0) < 0) b = -b;

    const double b11 = b(0), b12 = b(1), b22 = b(2), b13 = b(3), b23 = b(4), b33 = b(5);
    const double denom = b11 * b22 - b12 * b12;
    if (denom <= 0 || b11 <= 0) throw IllConditioned("recovered conic is not positive definite");
    const double v0 = (b12 * b13 - b11 * b23) / denom;
    const double lambda = b33 - (b13 * b13 + v0 * (b12 * b13 - b11 * b23)) / b11;
    if (lambda <= 0) throw IllConditioned("recovered conic is not positive definite");
    const double alpha = std::sqrt(lambda / b11);
    const double beta = std::sqrt(lambda * b11 / denom);
    const double gamma = -b12 * alpha * alpha * beta / lambda;
    const double u0 = gamma * v0 / beta - b13 * alpha * alpha / lambda;

    Intrinsics k;
    k.fx = alpha;
    k.fy = beta;
    k.cx = u0;
    k.cy = v0;
    return k;
}

// Board pose from a pixel-space homography and intrinsics (distortion ignored,
// points assumed pre-undistorted when it matters).
inline RigidTransform pose_from_homography(const Eigen::Matrix3d& h, const Intrinsics& k) {
    Eigen::Matrix3d km;
    km << k.fx, 0, k.cx, 0, k.fy, k.cy, 0, 0, 1;
    Eigen::Matrix3d g = km.inverse() * h;
    if (g.col(2).z() < 0) g = -g;  // board in front of the camera
    const double scale = 2.0 / (g.col(0).norm() + g.col(1).norm());
    const Vec3 r1 = g.col(0) * scale;
    const Vec3 r2 = g.col(1) * scale;
    Mat3 r;
    r.col(0) = r1;
    r.col(1) = r2;
    r.col(2) = r1.cross(r2);
    RigidTransform pose;
    pose.rotation = r;
    pose.translation = g.col(2) * scale;
    return pose.orthonormalized();
}

struct RefineResult {
    Intrinsics intrinsics;
    std::vector<RigidTransform> board_poses;
    double initial_rms = 0.0;
    double final_rms = 0.0;
    bool converged = true;
    std::vector<double> cost_trace;
};

// Joint Levenberg-Marquardt over {fx, fy, cx, cy, k1..k6, p1, p2} and the
// per-view board poses, minimizing pixel reprojection error. Returns the best
// iterate with a converged flag rather than throwing on the iteration cap.
//
// The rational model's denominator terms trade off against the numerator
// along a near-flat valley, so the solve is staged: numerator-only first
// (which is fully identifiable), then all eight coefficients.
inline RefineResult refine_intrinsics(const Intrinsics& initial,
                                      const std::vector<CheckerboardObservation>& observations,
                                      const LmOptions& lm_options = {}) {
    if (observations.empty()) throw Error("refine_intrinsics needs observations");
    for (const auto& o : observations) o.validate();

    const int views = int(observations.size());
    std::vector<std::vector<Vec3>> world(views);
    std::size_t total = 0;
    for (int v = 0; v < views; ++v) {
        world[v] = observations[v].board.world_points();
        total += world[v].size();
    }

    // initial poses from per-view homographies
    std::vector<RigidTransform> poses(views);
    for (int v = 0; v < views; ++v) {
        std::vector<Vec2> plane;
        plane.reserve(world[v].size());
        for (const auto& p : world[v]) plane.emplace_back(p.x(), p.y());
        poses[v] = pose_from_homography(estimate_homography(plane, observations[v].image_points), initial);
    }

    Eigen::VectorXd x(12 + 6 * views);
    x.head<12>() << initial.fx, initial.fy, initial.cx, initial.cy, initial.radial[0],
        initial.radial[1], initial.radial[2], initial.radial[3], initial.radial[4],
        initial.radial[5], initial.tangential[0], initial.tangential[1];
    for (int v = 0; v < views; ++v) {
        Vec3 axis;
        double angle;
        matrix_to_axis_angle(poses[v].rotation, axis, angle);
        x.segment<3>(12 + 6 * v) = axis * angle;
        x.segment<3>(12 + 6 * v + 3) = poses[v].translation;
    }

    const auto unpack_k = [&](const Eigen::VectorXd& p) {
        Intrinsics k = initial;
        k.fx = p(0);
        k.fy = p(1);
        k.cx = p(2);
        k.cy = p(3);
        for (int i = 0; i < 6; ++i) k.radial[i] = p(4 + i);
        k.tangential[0] = p(10);
        k.tangential[1] = p(11);
        return k;
    };

    const auto residual = [&](const Eigen::VectorXd& p) {
        const Intrinsics k = unpack_k(p);
        Eigen::VectorXd r(2 * total);
        std::size_t at = 0;
        for (int v = 0; v < views; ++v) {
            const Vec3 w = p.segment<3>(12 + 6 * v);
            const double angle = w.norm();
            const Mat3 rot = angle > 1e-14 ? axis_angle_to_matrix(w / angle, angle) : Mat3::Identity();
            const Vec3 t = p.segment<3>(12 + 6 * v + 3);
            for (std::size_t i = 0; i < world[v].size(); ++i) {
                const Vec3 pc = rot * world[v][i] + t;
                Vec2 proj;
                if (pc.z() <= 0) {
                    proj = Vec2(1e6, 1e6);  // force the optimizer away
                } else {
                    proj = project(pc, k);
                }
                r(2 * at) = proj.x() - observations[v].image_points[i].x();
                r(2 * at + 1) = proj.y() - observations[v].image_points[i].y();
                ++at;
            }
        }
        return r;
    };

    // stage 1: freeze k4..k6 (parameter slots 7..9)
    const auto masked_residual = [&](const Eigen::VectorXd& reduced) {
        Eigen::VectorXd full(x.size());
        full.head<7>() = reduced.head<7>();
        full.segment<3>(7) = x.segment<3>(7);
        full.tail(x.size() - 10) = reduced.tail(reduced.size() - 7);
        return residual(full);
    };
    Eigen::VectorXd x_reduced(x.size() - 3);
    x_reduced.head<7>() = x.head<7>();
    x_reduced.tail(x.size() - 10) = x.tail(x.size() - 10);
    const LmResult stage1 = levenberg_marquardt(masked_residual, x_reduced, lm_options);
    Eigen::VectorXd x1(x.size());
    x1.head<7>() = stage1.params.head<7>();
    x1.segment<3>(7) = x.segment<3>(7);
    x1.tail(x.size() - 10) = stage1.params.tail(stage1.params.size() - 7);

    // stage 2: release the full model
    const LmResult lm = levenberg_marquardt(residual, x1, lm_options);

    RefineResult out;
    out.intrinsics = unpack_k(lm.params);
    out.intrinsics.width = initial.width;
    out.intrinsics.height = initial.height;
    for (int v = 0; v < views; ++v) {
        const Vec3 w = lm.params.segment<3>(12 + 6 * v);
        const double angle = w.norm();
        RigidTransform pose;
        pose.rotation = angle > 1e-14 ? axis_angle_to_matrix(w / angle, angle) : Mat3::Identity();
        pose.translation = lm.params.segment<3>(12 + 6 * v + 3);
        out.board_poses.push_back(pose);
    }
    out.initial_rms = std::sqrt(stage1.initial_cost / double(total));
    out.final_rms = std::sqrt(lm.final_cost / double(total));
    out.converged = lm.converged;
    out.cost_trace = stage1.cost_trace;
    out.cost_trace.insert(out.cost_trace.end(), lm.cost_trace.begin() + 1, lm.cost_trace.end());
    return out;
}

// --- PnP ------------------------------------------------------------------------

namespace detail {

inline void scatter_singular_values(const std::vector<Vec3>& pts, Eigen::Vector3d& sv,
                                    Vec3& centroid, Mat3& axes) {
    centroid = Vec3::Zero();
    for (const auto& p : pts) centroid += p;
    centroid /= double(pts.size());
    Eigen::MatrixXd d(pts.size(), 3);
    for (std::size_t i = 0; i < pts.size(); ++i) d.row(i) = (pts[i] - centroid).transpose();
    const Eigen::JacobiSVD<Eigen::MatrixXd> svd(d, Eigen::ComputeThinV);
    sv = svd.singularValues();
    axes = svd.matrixV();
}

// 12-parameter projection-matrix DLT for non-coplanar points, normalized
// image coordinates.
inline RigidTransform dlt_pose(const std::vector<Vec3>& object, const std::vector<Vec2>& norm_img) {
    const std::size_t n = object.size();
    Eigen::MatrixXd a(2 * n, 12);
    for (std::size_t i = 0; i < n; ++i) {
        const Vec3& p = object[i];
        const double u = norm_img[i].x(), v = norm_img[i].y();
        a.row(2 * i) << p.x(), p.y(), p.z(), 1, 0, 0, 0, 0, -u * p.x(), -u * p.y(), -u * p.z(), -u;
        a.row(2 * i + 1) << 0, 0, 0, 0, p.x(), p.y(), p.z(), 1, -v * p.x(), -v * p.y(), -v * p.z(), -v;
    }
    const Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeThinV);
    const Eigen::VectorXd h = svd.matrixV().col(11);
    Eigen::Matrix<double, 3, 4> pm;
    pm << h(0), h(1), h(2), h(3), h(4), h(5), h(6), h(7), h(8), h(9), h(10), h(11);

    // fix the overall sign so points have positive depth
    int pos = 0, neg = 0;
    for (const auto& p : object) {
        const double z = pm.row(2).head<3>().dot(p) + pm(2, 3);
        (z > 0 ? pos : neg)++;
    }
    if (neg > pos) pm = -pm;

    const Mat3 m = pm.leftCols<3>();
    const Eigen::JacobiSVD<Mat3> msvd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const double scale = msvd.singularValues().mean();
    Mat3 r = msvd.matrixU() * msvd.matrixV().transpose();
    if (r.determinant() < 0) {
        Mat3 flip = Mat3::Identity();
        flip(2, 2) = -1;
        r = msvd.matrixU() * flip * msvd.matrixV().transpose();
    }
    RigidTransform pose;
    pose.rotation = r;
    pose.translation = pm.col(3) / scale;
    return pose;
}

}  // namespace detail

// Camera pose from 3D-2D correspondences: DLT (projection matrix for general
// points, plane homography for coplanar targets) followed by LM refinement of
// the pixel reprojection error.
inline RigidTransform solve_pnp(const std::vector<Vec3>& object_points,
                                const std::vector<Vec2>& image_points, const Intrinsics& k) {
    if (object_points.size() != image_points.size())
        throw LengthMismatch("PnP correspondence counts differ");
    if (object_points.size() < 6) throw DegenerateConfiguration("PnP needs at least 6 points");

    Eigen::Vector3d sv;
    Vec3 centroid;
    Mat3 axes;
    detail::scatter_singular_values(object_points, sv, centroid, axes);
    if (sv(1) <= 1e-9 * sv(0)) throw DegenerateConfiguration("PnP points are collinear");
    const bool planar = sv(2) <= 1e-7 * sv(0);

    std::vector<Vec2> norm_img(image_points.size());
    for (std::size_t i = 0; i < image_points.size(); ++i) norm_img[i] = undistort(image_points[i], k);

    RigidTransform pose;
    if (planar) {
        // homography from plane coordinates to normalized image coordinates
        std::vector<Vec2> plane(object_points.size());
        for (std::size_t i = 0; i < object_points.size(); ++i) {
            const Vec3 d = object_points[i] - centroid;
            plane[i] = Vec2(axes.col(0).dot(d), axes.col(1).dot(d));
        }
        Intrinsics unit;
        unit.fx = unit.fy = 1.0;
        unit.cx = unit.cy = 0.0;
        unit.width = unit.height = 1;
        const Eigen::Matrix3d h = estimate_homography(plane, norm_img);
        const RigidTransform plane_pose = pose_from_homography(h, unit);
        Mat3 basis;
        basis.col(0) = axes.col(0);
        basis.col(1) = axes.col(1);
        basis.col(2) = axes.col(0).cross(axes.col(1));
        pose.rotation = plane_pose.rotation * basis.transpose();
        pose.translation = plane_pose.translation - pose.rotation * centroid;
        pose = pose.orthonormalized();
    } else {
        pose = detail::dlt_pose(object_points, norm_img);
    }

    // LM refinement on pixel reprojection
    Eigen::VectorXd x(6);
    Vec3 axis;
    double angle;
    matrix_to_axis_angle(pose.rotation, axis, angle);
    x.head<3>() = axis * angle;
    x.tail<3>() = pose.translation;

    const auto residual = [&](const Eigen::VectorXd& p) {
        const Vec3 w = p.head<3>();
        const double a = w.norm();
        const Mat3 rot = a > 1e-14 ? axis_angle_to_matrix(w / a, a) : Mat3::Identity();
        const Vec3 t = p.tail<3>();
        Eigen::VectorXd r(2 * object_points.size());
        for (std::size_t i = 0; i < object_points.size(); ++i) {
            const Vec3 pc = rot * object_points[i] + t;
            const Vec2 proj = pc.z() > 0 ? project(pc, k) : Vec2(1e6, 1e6);
            r(2 * i) = proj.x() - image_points[i].x();
            r(2 * i + 1) = proj.y() - image_points[i].y();
        }
        return r;
    };
    const LmResult lm = levenberg_marquardt(residual, x);
    if (!std::isfinite(lm.final_cost)) throw NoConvergence("PnP refinement diverged");

    const Vec3 w = lm.params.head<3>();
    const double a2 = w.norm();
    RigidTransform out;
    out.rotation = a2 > 1e-14 ? axis_angle_to_matrix(w / a2, a2) : Mat3::Identity();
    out.translation = lm.params.tail<3>();
    return out;
}

// T_RGB^Event = (T_Event^Depth)^-1 T_RGB^Depth, and its inverse.
inline std::pair<RigidTransform, RigidTransform> chain_extrinsics(const RigidTransform& t_rgb_depth,
                                                                  const RigidTransform& t_event_depth) {
    const RigidTransform t_rgb_event = t_event_depth.inverse() * t_rgb_depth;
    return {t_rgb_event, t_rgb_event.inverse()};
}

// --- depth polynomial -------------------------------------------------------------

struct DepthFit {
    DepthCorrection correction;
    double residual_rms = 0.0;  // millimeters
};

// Least-squares fit of e = z_measured - z_expected against z_measured.
inline DepthFit fit_depth_polynomial(const std::vector<std::pair<double, double>>& samples) {
    std::set<double> distinct;
    for (const auto& s : samples) distinct.insert(s.first);
    if (distinct.size() < 3) throw RankDeficient("depth fit needs at least 3 distinct depths");

    Eigen::MatrixXd a(samples.size(), 3);
    Eigen::VectorXd e(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const double z = samples[i].first;
        a.row(i) << z * z, z, 1.0;
        e(i) = samples[i].first - samples[i].second;
    }
    const Eigen::VectorXd c = a.colPivHouseholderQr().solve(e);
    DepthFit fit;
    fit.correction.coeffs = {c(0), c(1), c(2)};
    fit.residual_rms = std::sqrt((a * c - e).squaredNorm() / double(samples.size()));
    return fit;
}

// --- cross-camera reprojection report ------------------------------------------------

struct ReprojectionEntry {
    int image_id = 0;
    CameraId from = CameraId::RGB;
    CameraId to = CameraId::DEPTH;
    double rms_px = 0.0;
};

struct ReprojectionReport {
    std::vector<ReprojectionEntry> entries;
    double aggregate_rms_px = 0.0;
};

// For every image seen by two cameras: solve the board pose in the source
// camera, map the corners through the calibrated extrinsics and measure the
// pixel RMS against the target camera's corners.
inline ReprojectionReport reprojection_report(const std::vector<CheckerboardObservation>& observations,
                                              const Rig& rig) {
    std::map<int, std::map<CameraId, const CheckerboardObservation*>> by_image;
    for (const auto& o : observations) by_image[o.image_id][o.camera_id] = &o;

    ReprojectionReport report;
    double total_sq = 0.0;
    std::size_t total_n = 0;
    for (const auto& [image_id, cams] : by_image) {
        for (const auto& [from_id, from_obs] : cams) {
            for (const auto& [to_id, to_obs] : cams) {
                if (from_id == to_id) continue;
                const RigidTransform pose =
                    solve_pnp(from_obs->board.world_points(), from_obs->image_points, rig.intrinsics(from_id));
                const RigidTransform t = rig.transform_between(from_id, to_id);
                const auto world = from_obs->board.world_points();
                double sq = 0.0;
                for (std::size_t i = 0; i < world.size(); ++i) {
                    const Vec3 in_to = t * (pose * world[i]);
                    const Vec2 proj = project(in_to, rig.intrinsics(to_id));
                    sq += (proj - to_obs->image_points[i]).squaredNorm();
                }
                ReprojectionEntry entry;
                entry.image_id = image_id;
                entry.from = from_id;
                entry.to = to_id;
                entry.rms_px = std::sqrt(sq / double(world.size()));
                report.entries.push_back(entry);
                total_sq += sq;
                total_n += world.size();
            }
        }
    }
    report.aggregate_rms_px = total_n > 0 ? std::sqrt(total_sq / double(total_n)) : 0.0;
    return report;
}

// --- full rig calibration ---------------------------------------------------------------

struct CalibrationSummary {
    Rig rig;
    double rgb_rms = 0.0, depth_rms = 0.0, event_rms = 0.0;
    bool converged = true;
    ReprojectionReport cross_report;
};

namespace detail {

// chordal mean of a set of rotations
inline Mat3 average_rotations(const std::vector<Mat3>& rs) {
    Mat3 sum = Mat3::Zero();
    for (const auto& r : rs) sum += r;
    const Eigen::JacobiSVD<Mat3> svd(sum, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Mat3 r = svd.matrixU() * svd.matrixV().transpose();
    if (r.determinant() < 0) {
        Mat3 flip = Mat3::Identity();
        flip(2, 2) = -1;
        r = svd.matrixU() * flip * svd.matrixV().transpose();
    }
    return r;
}

}  // namespace detail

// Intrinsics per camera (homographies -> closed form -> LM bundle), then
// extrinsics from PnP on views shared between camera pairs, then the depth
// polynomial. Observations sharing an image_id are assumed simultaneous.
inline CalibrationSummary calibrate_rig(const std::vector<CheckerboardObservation>& observations,
                                        const std::vector<std::pair<double, double>>& depth_samples = {},
                                        const LmOptions& lm_options = {}) {
    CalibrationSummary out;

    std::map<CameraId, std::vector<CheckerboardObservation>> per_camera;
    for (const auto& o : observations) per_camera[o.camera_id].push_back(o);

    std::map<CameraId, std::map<int, RigidTransform>> poses;  // board -> camera per image
    for (auto& [cam, obs_list] : per_camera) {
        std::vector<Eigen::Matrix3d> hs;
        for (const auto& o : obs_list) {
            std::vector<Vec2> plane;
            for (const auto& p : o.board.world_points()) plane.emplace_back(p.x(), p.y());
            hs.push_back(estimate_homography(plane, o.image_points));
        }
        Intrinsics init = zhang_intrinsics(hs);
        int w = 0, h = 0;
        for (const auto& o : obs_list)
            for (const auto& p : o.image_points) {
                w = std::max(w, int(p.x()) + 1);
                h = std::max(h, int(p.y()) + 1);
            }
        init.width = w;
        init.height = h;
        const RefineResult refined = refine_intrinsics(init, obs_list, lm_options);
        out.rig.intrinsics(cam) = refined.intrinsics;
        out.converged = out.converged && refined.converged;
        (cam == CameraId::RGB ? out.rgb_rms : cam == CameraId::DEPTH ? out.depth_rms : out.event_rms) =
            refined.final_rms;
        for (std::size_t i = 0; i < obs_list.size(); ++i)
            poses[cam][obs_list[i].image_id] =
                solve_pnp(obs_list[i].board.world_points(), obs_list[i].image_points, refined.intrinsics);
    }

    // extrinsics from images shared with the depth camera
    const auto pair_transform = [&](CameraId a, CameraId b, RigidTransform& t_ab) {
        std::vector<Mat3> rots;
        Vec3 tsum = Vec3::Zero();
        int n = 0;
        for (const auto& [image_id, pose_a] : poses[a]) {
            const auto it = poses[b].find(image_id);
            if (it == poses[b].end()) continue;
            const RigidTransform t = it->second * pose_a.inverse();
            rots.push_back(t.rotation);
            tsum += t.translation;
            ++n;
        }
        if (n == 0) return false;
        t_ab.rotation = detail::average_rotations(rots);
        t_ab.translation = tsum / double(n);
        return true;
    };
    pair_transform(CameraId::RGB, CameraId::DEPTH, out.rig.t_rgb_depth);
    pair_transform(CameraId::EVENT, CameraId::DEPTH, out.rig.t_event_depth);

    if (!depth_samples.empty()) out.rig.depth_correction = fit_depth_polynomial(depth_samples).correction;

    out.cross_report = reprojection_report(observations, out.rig);
    return out;
}

// --- observation file -----------------------------------------------------------------
// Text records:
//   obs <camera> <image_id> <rows> <cols> <square_m> <n_corners>
// followed by n_corners "u v" lines.

inline void save_observations(const std::string& path,
                              const std::vector<CheckerboardObservation>& observations) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open observation file for writing: " + path);
    out << "EVTRACK_OBSERVATIONS schema_version 1\n";
    char buf[256];
    for (const auto& o : observations) {
        std::snprintf(buf, sizeof buf, "obs %s %d %d %d %.17g %zu\n", to_string(o.camera_id),
                      o.image_id, o.board.rows, o.board.cols, o.board.square_size,
                      o.image_points.size());
        out << buf;
        for (const auto& p : o.image_points) {
            std::snprintf(buf, sizeof buf, "%.17g %.17g\n", p.x(), p.y());
            out << buf;
        }
    }
}

inline std::vector<CheckerboardObservation> load_observations(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open observation file: " + path);
    std::vector<CheckerboardObservation> out;
    std::string line;
    int lineno = 0;
    if (!std::getline(in, line) || line.rfind("EVTRACK_OBSERVATIONS", 0) != 0)
        throw ParseError(path, 1, "missing EVTRACK_OBSERVATIONS header");
    ++lineno;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ss(line);
        std::string tag, cam;
        std::size_t n = 0;
        CheckerboardObservation o;
        if (!(ss >> tag) || tag != "obs") throw ParseError(path, lineno, "expected obs record");
        if (!(ss >> cam >> o.image_id >> o.board.rows >> o.board.cols >> o.board.square_size >> n))
            throw ParseError(path, lineno, "malformed obs record");
        o.camera_id = camera_id_from_string(cam);
        o.image_points.reserve(n);
        for (std::size_t i = 0; i < n; ++i) {
            if (!std::getline(in, line)) throw ParseError(path, lineno, "unexpected end of corner list");
            ++lineno;
            std::istringstream cs(line);
            Vec2 p;
            if (!(cs >> p.x() >> p.y())) throw ParseError(path, lineno, "malformed corner");
            o.image_points.push_back(p);
        }
        o.validate();
        out.push_back(std::move(o));
    }
    return out;
}

}  // namespace calib
}  // namespace evtrack
