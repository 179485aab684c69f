#include <catch_amalgamated.hpp>

#include <cmath>
#include <filesystem>

#include "evtrack/calib.hpp"
#include "evtrack/rig.hpp"
#include "evtrack/rng.hpp"
#include "support/synthetic_rig.hpp"

using namespace evtrack;
using namespace evtrack::calib;
using Catch::Approx;

TEST_CASE("homography basics") {
    std::vector<Vec2> world, image;
    for (double y = 0; y < 4; ++y)
        for (double x = 0; x < 5; ++x) {
            world.emplace_back(x * 0.1, y * 0.1);
            image.emplace_back(x * 0.1, y * 0.1);
        }

    SECTION("identity correspondences") {
        const Eigen::Matrix3d h = estimate_homography(world, image);
        CHECK((h - Eigen::Matrix3d::Identity()).norm() < 1e-9);
    }

    SECTION("pure translation") {
        for (auto& p : image) p += Vec2(2.5, -1.0);
        const Eigen::Matrix3d h = estimate_homography(world, image);
        Eigen::Matrix3d expected = Eigen::Matrix3d::Identity();
        expected(0, 2) = 2.5;
        expected(1, 2) = -1.0;
        CHECK((h - expected).norm() < 1e-9);
    }

    SECTION("collinear points are degenerate") {
        std::vector<Vec2> line_w, line_i;
        for (double x = 0; x < 8; ++x) {
            line_w.emplace_back(x, 2.0 * x + 1.0);
            line_i.emplace_back(x + 1.0, 2.0 * x);
        }
        CHECK_THROWS_AS(estimate_homography(line_w, line_i), DegenerateConfiguration);
    }
}

TEST_CASE("homography reprojects a synthetic camera view") {
    Intrinsics k = evtest::make_intrinsics(500, 500, 320, 240, 640, 480, false);
    Rng rng(31);
    const auto poses = evtest::board_poses(1, 1.0, rng);
    BoardSpec spec;
    std::vector<Vec2> world, image;
    for (const auto& p : spec.world_points()) {
        world.emplace_back(p.x(), p.y());
        image.push_back(project(poses[0] * p, k));
    }
    const Eigen::Matrix3d h = estimate_homography(world, image);
    for (std::size_t i = 0; i < world.size(); ++i) {
        const Eigen::Vector3d m = h * Eigen::Vector3d(world[i].x(), world[i].y(), 1.0);
        const Vec2 proj(m.x() / m.z(), m.y() / m.z());
        CHECK((proj - image[i]).norm() < 1e-6);
    }
}

TEST_CASE("zhang closed-form intrinsics") {
    const Intrinsics k = evtest::make_intrinsics(500, 500, 320, 240, 640, 480, false);
    Rng rng(77);
    BoardSpec spec;

    std::vector<Eigen::Matrix3d> hs;
    while (hs.size() < 5) {
        const auto poses = evtest::board_poses(1, 1.1, rng);
        std::vector<Vec2> world, image;
        if (!evtest::project_board(spec, poses[0], k, image)) continue;
        for (const auto& p : spec.world_points()) world.emplace_back(p.x(), p.y());
        hs.push_back(estimate_homography(world, image));
    }

    const Intrinsics got = zhang_intrinsics(hs);
    CHECK(got.fx == Approx(500).margin(1e-3));
    CHECK(got.fy == Approx(500).margin(1e-3));
    CHECK(got.cx == Approx(320).margin(1e-3));
    CHECK(got.cy == Approx(240).margin(1e-3));

    CHECK_THROWS_AS(zhang_intrinsics({hs[0], hs[1]}), IllConditioned);
    CHECK_THROWS_AS(zhang_intrinsics({hs[0], hs[0], hs[0]}), IllConditioned);
}

TEST_CASE("refine_intrinsics recovers distortion") {
    Intrinsics truth = evtest::make_intrinsics(500, 500, 320, 240, 640, 480, false);
    truth.radial[0] = -0.2;
    truth.tangential[0] = 0.001;

    Rng rng(13);
    BoardSpec spec;
    std::vector<CheckerboardObservation> obs;
    int image_id = 0;
    while (obs.size() < 8) {
        const auto poses = evtest::board_poses(1, 1.0, rng);
        std::vector<Vec2> image;
        if (!evtest::project_board(spec, poses[0], truth, image)) continue;
        CheckerboardObservation o;
        o.camera_id = CameraId::RGB;
        o.image_id = image_id++;
        o.board = spec;
        o.image_points = image;
        obs.push_back(o);
    }

    Intrinsics init = truth;
    init.radial = {};
    init.tangential = {};
    init.fx = init.fy = 510;  // slightly off, as a closed-form estimate would be
    init.cx = 318;
    init.cy = 243;

    const RefineResult r = refine_intrinsics(init, obs);
    CHECK(r.final_rms <= r.initial_rms);
    CHECK(r.final_rms < 1e-6);
    CHECK(r.intrinsics.fx == Approx(500).margin(1e-3));
    CHECK(r.intrinsics.fy == Approx(500).margin(1e-3));
    CHECK(r.intrinsics.radial[0] == Approx(-0.2).margin(1e-4));
    CHECK(r.intrinsics.tangential[0] == Approx(0.001).margin(1e-4));
    for (int i = 1; i < 6; ++i) CHECK(std::abs(r.intrinsics.radial[i]) < 1e-4);

    // cost trace is monotone non-increasing
    for (std::size_t i = 1; i < r.cost_trace.size(); ++i)
        CHECK(r.cost_trace[i] <= r.cost_trace[i - 1] + 1e-18);
}

TEST_CASE("refine_intrinsics leaves distortion near zero for a pinhole camera") {
    const Intrinsics truth = evtest::make_intrinsics(450, 455, 310, 245, 640, 480, false);
    Rng rng(14);
    BoardSpec spec;
    std::vector<CheckerboardObservation> obs;
    int image_id = 0;
    while (obs.size() < 6) {
        const auto poses = evtest::board_poses(1, 1.0, rng);
        std::vector<Vec2> image;
        if (!evtest::project_board(spec, poses[0], truth, image)) continue;
        CheckerboardObservation o;
        o.camera_id = CameraId::RGB;
        o.image_id = image_id++;
        o.board = spec;
        o.image_points = image;
        obs.push_back(o);
    }
    const RefineResult r = refine_intrinsics(truth, obs);
    for (double k : r.intrinsics.radial) CHECK(std::abs(k) < 1e-6);
    for (double p : r.intrinsics.tangential) CHECK(std::abs(p) < 1e-6);
}

TEST_CASE("solve_pnp exact recovery") {
    const Intrinsics k = evtest::make_intrinsics(540, 540, 320, 240, 640, 480, false);
    Rng rng(5);

    SECTION("identity pose on a 3D cloud") {
        std::vector<Vec3> object;
        std::vector<Vec2> image;
        for (int i = 0; i < 20; ++i) {
            const Vec3 p(rng.uniform(-0.3, 0.3), rng.uniform(-0.2, 0.2), rng.uniform(0.8, 1.6));
            object.push_back(p);
            image.push_back(project(p, k));
        }
        const RigidTransform pose = solve_pnp(object, image, k);
        CHECK(pose.translation.norm() < 1e-6);
        CHECK(rotation_error(pose.rotation, Mat3::Identity()) < 1e-6);
    }

    SECTION("known pose on a planar board") {
        RigidTransform truth;
        truth.rotation = axis_angle_to_matrix(Vec3::UnitY(), 15.0 * M_PI / 180.0);
        truth.translation = Vec3(0.1, -0.05, 0.8);
        BoardSpec spec;
        const Vec3 center(0.5 * (spec.cols - 1) * spec.square_size,
                          0.5 * (spec.rows - 1) * spec.square_size, 0);
        truth.translation -= truth.rotation * center;

        std::vector<Vec3> object = spec.world_points();
        std::vector<Vec2> image;
        for (const auto& p : object) image.push_back(project(truth * p, k));

        const RigidTransform pose = solve_pnp(object, image, k);
        CHECK(translation_error(pose, truth) < 1e-6);
        CHECK(rotation_error(pose, truth) < 1e-6);
    }

    SECTION("distorted camera") {
        const Intrinsics kd = evtest::make_intrinsics(540, 540, 320, 240, 640, 480, true);
        RigidTransform truth;
        truth.rotation = axis_angle_to_matrix(Vec3(0.3, 1.0, -0.1).normalized(), 0.3);
        truth.translation = Vec3(0.02, 0.01, 1.1);
        std::vector<Vec3> object;
        std::vector<Vec2> image;
        while (object.size() < 30) {
            const Vec3 p(rng.uniform(-0.25, 0.25), rng.uniform(-0.2, 0.2), rng.uniform(-0.15, 0.15));
            const Vec3 pc = truth * p;
            const Vec2 px = project(pc, kd);
            if (px.x() < 5 || px.y() < 5 || px.x() > kd.width - 6 || px.y() > kd.height - 6) continue;
            object.push_back(p);
            image.push_back(px);
        }
        const RigidTransform pose = solve_pnp(object, image, kd);
        CHECK(translation_error(pose, truth) < 1e-6);
        CHECK(rotation_error(pose, truth) < 1e-6);
    }
}

TEST_CASE("solve_pnp noise and degeneracy") {
    const Intrinsics k = evtest::make_intrinsics(540, 540, 320, 240, 640, 480, false);
    BoardSpec spec;  // 9 x 14 = 126 corners
    Rng rng(99);

    SECTION("1 px noise keeps translation within 5 mm") {
        int ok = 0;
        const int trials = 20;
        for (int t = 0; t < trials; ++t) {
            std::vector<Vec2> image;
            RigidTransform truth;
            for (;;) {
                const auto poses = evtest::board_poses(1, 0.9, rng);
                if (evtest::project_board(spec, poses[0], k, image)) {
                    truth = poses[0];
                    break;
                }
            }
            for (auto& p : image) p += Vec2(rng.normal(0, 1.0), rng.normal(0, 1.0));
            const RigidTransform pose = solve_pnp(spec.world_points(), image, k);
            if (translation_error(pose, truth) < 0.005) ++ok;
        }
        CHECK(ok >= trials * 9 / 10);
    }

    SECTION("collinear points rejected") {
        std::vector<Vec3> object;
        std::vector<Vec2> image;
        for (int i = 0; i < 10; ++i) {
            const Vec3 p(0.01 * i, 0.02 * i, 1.0 + 0.05 * i);
            object.push_back(p);
            image.push_back(project(p, k));
        }
        CHECK_THROWS_AS(solve_pnp(object, image, k), DegenerateConfiguration);
    }

    SECTION("too few points rejected") {
        std::vector<Vec3> object(5, Vec3(0, 0, 1));
        std::vector<Vec2> image(5, Vec2(320, 240));
        CHECK_THROWS_AS(solve_pnp(object, image, k), DegenerateConfiguration);
    }
}

TEST_CASE("solve_pnp equivariance under object-frame rotation") {
    const Intrinsics k = evtest::make_intrinsics(540, 540, 320, 240, 640, 480, false);
    Rng rng(123);
    std::vector<Vec3> object;
    std::vector<Vec2> image;
    RigidTransform truth;
    truth.rotation = axis_angle_to_matrix(Vec3(1, 2, 0.5).normalized(), 0.4);
    truth.translation = Vec3(0.05, -0.02, 1.2);
    for (int i = 0; i < 25; ++i) {
        const Vec3 p(rng.uniform(-0.2, 0.2), rng.uniform(-0.2, 0.2), rng.uniform(-0.2, 0.2));
        object.push_back(p);
        image.push_back(project(truth * p, k));
    }
    RigidTransform q;
    q.rotation = axis_angle_to_matrix(Vec3(0.2, -1, 0.7).normalized(), 0.9);
    q.translation = Vec3(0.03, 0.04, -0.05);

    std::vector<Vec3> rotated;
    for (const auto& p : object) rotated.push_back(q * p);

    const RigidTransform pose = solve_pnp(object, image, k);
    const RigidTransform pose_rot = solve_pnp(rotated, image, k);
    const RigidTransform expected = pose * q.inverse();
    CHECK(translation_error(pose_rot, expected) < 1e-6);
    CHECK(rotation_error(pose_rot, expected) < 1e-6);
}

TEST_CASE("chain_extrinsics") {
    const RigidTransform i = RigidTransform::identity();
    auto [ab, ba] = chain_extrinsics(i, i);
    CHECK((ab.matrix() - Eigen::Matrix4d::Identity()).norm() < 1e-15);

    Rng rng(1);
    RigidTransform t1, t2;
    t1.rotation = axis_angle_to_matrix(sample_sphere_direction(rng), 0.5);
    t1.translation = Vec3(0.1, 0.2, -0.1);
    auto [same, same_inv] = chain_extrinsics(t1, t1);
    CHECK((same.matrix() - Eigen::Matrix4d::Identity()).norm() < 1e-12);

    t2.rotation = axis_angle_to_matrix(sample_sphere_direction(rng), -0.8);
    t2.translation = Vec3(-0.05, 0.03, 0.2);
    auto [fw, bw] = chain_extrinsics(t1, t2);
    CHECK((compose(bw, fw).matrix() - Eigen::Matrix4d::Identity()).norm() < 1e-12);
    CHECK((fw.matrix() - (t2.inverse() * t1).matrix()).norm() < 1e-15);
}

TEST_CASE("fit_depth_polynomial") {
    SECTION("exact quadratic recovered to machine precision") {
        const double a = 3e-6, b = -0.006, c = 4.1;
        std::vector<std::pair<double, double>> samples;
        Rng rng(2);
        for (int i = 0; i < 40; ++i) {
            const double z = rng.uniform(300, 4000);
            const double e = a * z * z + b * z + c;
            samples.emplace_back(z, z - e);
        }
        const DepthFit fit = fit_depth_polynomial(samples);
        CHECK(fit.correction.coeffs[0] == Approx(a).margin(1e-12));
        CHECK(fit.correction.coeffs[1] == Approx(b).margin(1e-9));
        CHECK(fit.correction.coeffs[2] == Approx(c).margin(1e-6));
        CHECK(fit.residual_rms < 1e-9);

        // the corrected depth reproduces ground truth
        for (const auto& [z_meas, z_true] : samples)
            CHECK(correct_depth(z_meas, fit.correction) == Approx(z_true).margin(1e-9));
    }

    SECTION("zero-error data gives the zero polynomial") {
        std::vector<std::pair<double, double>> samples;
        for (double z : {500.0, 1000.0, 1500.0, 2000.0}) samples.emplace_back(z, z);
        const DepthFit fit = fit_depth_polynomial(samples);
        for (double c : fit.correction.coeffs) CHECK(std::abs(c) < 1e-12);
    }

    SECTION("two distinct depths are rank deficient") {
        std::vector<std::pair<double, double>> samples = {{500, 498}, {500, 499}, {900, 897}};
        CHECK_THROWS_AS(fit_depth_polynomial(samples), RankDeficient);
    }

    SECTION("residuals orthogonal to design columns") {
        Rng rng(3);
        std::vector<std::pair<double, double>> samples;
        for (int i = 0; i < 60; ++i) {
            const double z = rng.uniform(300, 4000);
            samples.emplace_back(z, z - (1e-6 * z * z - 0.002 * z + 1.0) + rng.normal(0, 0.5));
        }
        const DepthFit fit = fit_depth_polynomial(samples);
        double dot_z2 = 0, dot_z = 0, dot_1 = 0;
        for (const auto& [z, ze] : samples) {
            const double r = (z - ze) - fit.correction.error_at(z);
            dot_z2 += r * z * z;
            dot_z += r * z;
            dot_1 += r;
        }
        // normalized by the sample count and design-column scale
        CHECK(std::abs(dot_z2) / (samples.size() * 4000.0 * 4000.0) < 1e-9);
        CHECK(std::abs(dot_z) / (samples.size() * 4000.0) < 1e-9);
        CHECK(std::abs(dot_1) / samples.size() < 1e-9);
    }
}

TEST_CASE("reprojection report") {
    SECTION("noiseless rig reports zero") {
        const evtest::SyntheticRig rig = evtest::make_synthetic_rig(0, 3, 21, false);
        const ReprojectionReport report = reprojection_report(rig.observations, rig.truth);
        REQUIRE(!report.entries.empty());
        for (const auto& e : report.entries) CHECK(e.rms_px < 1e-6);
        CHECK(report.aggregate_rms_px < 1e-6);
    }

    SECTION("constant offset gives a hand-computed RMS") {
        evtest::SyntheticRig rig = evtest::make_synthetic_rig(0, 1, 22, false);
        // shift every DEPTH corner by (3, 4) px: all A->DEPTH entries get RMS 5
        for (auto& o : rig.observations)
            if (o.camera_id == CameraId::DEPTH)
                for (auto& p : o.image_points) p += Vec2(3, 4);
        const ReprojectionReport report = reprojection_report(rig.observations, rig.truth);
        int checked = 0;
        for (const auto& e : report.entries) {
            // pose solved in an unshifted camera, reprojected onto the
            // shifted corners: every corner is off by exactly (3, 4) px
            if (e.to == CameraId::DEPTH && e.from != CameraId::DEPTH) {
                CHECK(e.rms_px == Approx(5.0).margin(1e-6));
                ++checked;
            } else if (e.from != CameraId::DEPTH) {
                CHECK(e.rms_px < 1e-6);
            }
        }
        CHECK(checked == 2);
    }
}

TEST_CASE("full synthetic rig closure") {
    const evtest::SyntheticRig rig = evtest::make_synthetic_rig(8, 4, 42, true);
    Rng rng(7);
    const auto depth_samples = evtest::make_depth_samples(rig.truth, 30, rng);
    const CalibrationSummary summary = calibrate_rig(rig.observations, depth_samples);

    for (const CameraId cam : {CameraId::RGB, CameraId::DEPTH, CameraId::EVENT}) {
        const Intrinsics& got = summary.rig.intrinsics(cam);
        const Intrinsics& want = rig.truth.intrinsics(cam);
        INFO("camera " << to_string(cam));
        CHECK(got.fx == Approx(want.fx).margin(1e-3));
        CHECK(got.fy == Approx(want.fy).margin(1e-3));
        CHECK(got.cx == Approx(want.cx).margin(1e-3));
        CHECK(got.cy == Approx(want.cy).margin(1e-3));
        for (int i = 0; i < 6; ++i) CHECK(got.radial[i] == Approx(want.radial[i]).margin(1e-4));
        for (int i = 0; i < 2; ++i) CHECK(got.tangential[i] == Approx(want.tangential[i]).margin(1e-4));
    }
    CHECK(translation_error(summary.rig.t_rgb_depth, rig.truth.t_rgb_depth) < 1e-6);
    CHECK(rotation_error(summary.rig.t_rgb_depth, rig.truth.t_rgb_depth) < 1e-6);
    CHECK(translation_error(summary.rig.t_event_depth, rig.truth.t_event_depth) < 1e-6);
    CHECK(rotation_error(summary.rig.t_event_depth, rig.truth.t_event_depth) < 1e-6);
    for (int i = 0; i < 3; ++i)
        CHECK(summary.rig.depth_correction.coeffs[i] ==
              Approx(rig.truth.depth_correction.coeffs[i]).margin(1e-9));
}

TEST_CASE("rig file round-trip") {
    const evtest::SyntheticRig rig = evtest::make_synthetic_rig(0, 0, 5, true);
    const std::string path = (std::filesystem::temp_directory_path() / "evtrack_rig.txt").string();
    save_rig(path, rig.truth);
    const Rig loaded = load_rig(path);
    CHECK(loaded.rgb.fx == rig.truth.rgb.fx);
    CHECK(loaded.event.radial == rig.truth.event.radial);
    CHECK((loaded.t_event_depth.matrix() - rig.truth.t_event_depth.matrix()).norm() == 0.0);
    CHECK(loaded.depth_correction.coeffs == rig.truth.depth_correction.coeffs);
    std::filesystem::remove(path);
}

TEST_CASE("observation file round-trip and parse errors") {
    const evtest::SyntheticRig rig = evtest::make_synthetic_rig(2, 1, 6, false);
    const auto dir = std::filesystem::temp_directory_path();
    const std::string path = (dir / "evtrack_obs.txt").string();
    save_observations(path, rig.observations);
    const auto loaded = load_observations(path);
    REQUIRE(loaded.size() == rig.observations.size());
    for (std::size_t i = 0; i < loaded.size(); ++i) {
        CHECK(loaded[i].camera_id == rig.observations[i].camera_id);
        CHECK(loaded[i].image_id == rig.observations[i].image_id);
        REQUIRE(loaded[i].image_points.size() == rig.observations[i].image_points.size());
        CHECK((loaded[i].image_points[3] - rig.observations[i].image_points[3]).norm() == 0.0);
    }

    const std::string bad = (dir / "evtrack_obs_bad.txt").string();
    {
        std::ofstream out(bad);
        out << "EVTRACK_OBSERVATIONS schema_version 1\n";
        out << "obs RGB 0 9 14 0.054 2\n";
        out << "1.0 2.0\n";
        out << "oops not-a-number\n";
    }
    try {
        load_observations(bad);
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(e.line_number == 4);
    }
    std::filesystem::remove(path);
    std::filesystem::remove(bad);
}
