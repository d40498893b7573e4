#include <Eigen/Geometry>
#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "doctest.h"
#include "driftkill/error.hpp"
#include "driftkill/kinematics.hpp"

using namespace driftkill;
using namespace driftkill::kinematics;

namespace {

// Independent composition of elementary rotations, yaw-pitch-roll order.
Eigen::Matrix3d composed_rotation(double roll, double pitch, double yaw) {
    return (Eigen::AngleAxisd(yaw, Eigen::Vector3d::UnitZ()) * Eigen::AngleAxisd(pitch, Eigen::Vector3d::UnitY()) *
            Eigen::AngleAxisd(roll, Eigen::Vector3d::UnitX()))
        .toRotationMatrix();
}

std::vector<ImuWindow> constant_windows(std::size_t count, double accel, double rate) {
    return std::vector<ImuWindow>(count, ImuWindow{std::vector<double>(10, accel), std::vector<double>(10, rate)});
}

}  // namespace

TEST_CASE("rotation_body_to_nav") {
    CHECK(rotation_body_to_nav(Attitude::level(0.0)).isApprox(Eigen::Matrix3d::Identity(), 0.0));

    Eigen::Matrix3d quarter;
    quarter << 0, -1, 0, 1, 0, 0, 0, 0, 1;
    CHECK((rotation_body_to_nav(Attitude::level(std::numbers::pi / 2)) - quarter).cwiseAbs().maxCoeff() < 1e-15);

    const Eigen::Matrix3d r = rotation_body_to_nav({0.1, 0.2, 0.3});
    CHECK((r - composed_rotation(0.1, 0.2, 0.3)).cwiseAbs().maxCoeff() < 1e-12);

    // Level attitude reduces to a planar rotation.
    const double y = 1.234;
    const Eigen::Matrix3d level = rotation_body_to_nav(Attitude::level(y));
    CHECK(level(0, 0) == std::cos(y));
    CHECK(level(0, 1) == -std::sin(y));
    CHECK(level(1, 0) == std::sin(y));
    CHECK(level(1, 1) == std::cos(y));
    CHECK(level(2, 2) == 1.0);
    CHECK(level(0, 2) == 0.0);
    CHECK(level(2, 0) == 0.0);
}

TEST_CASE("rotation_body_to_nav is orthonormal") {
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> ang(-std::numbers::pi, std::numbers::pi);
    for (int i = 0; i < 1000; ++i) {
        const Eigen::Matrix3d r = rotation_body_to_nav({ang(rng), ang(rng), ang(rng)});
        CHECK((r.transpose() * r - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() < 1e-12);
        CHECK(std::abs(r.determinant() - 1.0) < 1e-12);
    }
}

TEST_CASE("integrate_yaw") {
    const std::vector<double> constant(10, 0.1);
    CHECK(integrate_yaw(0.0, constant, 1.0) == doctest::Approx(1.0));
    CHECK(integrate_yaw(0.5, {}, 0.1) == 0.5);
    std::vector<double> ramp;
    for (int k = 1; k <= 10; ++k) ramp.push_back(0.1 * k);
    CHECK(integrate_yaw(0.0, ramp, 0.1) == doctest::Approx(0.55).epsilon(1e-12));
    CHECK_THROWS_AS(integrate_yaw(0.0, ramp, 0.0), Error);
    // Unwrapped output.
    CHECK(integrate_yaw(3.0, constant, 1.0) == doctest::Approx(4.0));
}

TEST_CASE("correct_accel") {
    CHECK(correct_accel(1.0, 0.0) == 1.0);
    CHECK(correct_accel(0.05, 0.05) == 0.0);
    CHECK(correct_accel(-4.4145, 0.02) == doctest::Approx(-4.4345).epsilon(1e-12));
}

TEST_CASE("integrate_window") {
    const auto ramp = integrate_window(std::vector<double>(10, 1.0), 0.0, 0.1);
    CHECK(ramp.v_end == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(ramp.displacement_x == doctest::Approx(0.45).epsilon(1e-12));

    const auto cruise = integrate_window(std::vector<double>(10, 0.0), 20.0, 0.1);
    CHECK(cruise.v_end == 20.0);
    CHECK(cruise.displacement_x == doctest::Approx(20.0).epsilon(1e-12));

    const auto rest = integrate_window(std::vector<double>(10, 0.0), 0.0, 0.1);
    CHECK(rest.displacement_x == 0.0);

    const auto reverse = integrate_window(std::vector<double>(10, 0.0), -3.0, 0.1);
    CHECK(reverse.displacement_x < 0.0);

    CHECK_THROWS_AS(integrate_window({}, 0.0, 0.1), Error);
    try {
        integrate_window({}, 0.0, 0.1);
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::EmptyWindow);
    }
}

TEST_CASE("integrate_window is linear in accelerations and affine in v0") {
    std::mt19937_64 rng(4);
    std::normal_distribution<double> n(0.0, 2.0);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> a(10), b(10), mix(10);
        const double alpha = n(rng), beta = n(rng), va = n(rng), vb = n(rng);
        for (int k = 0; k < 10; ++k) {
            a[k] = n(rng);
            b[k] = n(rng);
            mix[k] = alpha * a[k] + beta * b[k];
        }
        for (auto rule : {IntegrationRule::Rectangular, IntegrationRule::Trapezoidal}) {
            const auto wa = integrate_window(a, va, 0.1, rule);
            const auto wb = integrate_window(b, vb, 0.1, rule);
            const auto wm = integrate_window(mix, alpha * va + beta * vb, 0.1, rule);
            CHECK(wm.displacement_x == doctest::Approx(alpha * wa.displacement_x + beta * wb.displacement_x));
            CHECK(wm.v_end == doctest::Approx(alpha * wa.v_end + beta * wb.v_end));
        }
    }
}

TEST_CASE("integrate_window converges at first order") {
    // a(t) = cos t over 1 s from v0 = 1: x(1) = 1 + (1 - cos 1).
    const double exact = 1.0 + (1.0 - std::cos(1.0));
    auto error_at = [&](int n) {
        const double dt = 1.0 / n;
        std::vector<double> a(n);
        for (int k = 0; k < n; ++k) a[k] = std::cos(k * dt);
        return std::abs(integrate_window(a, 1.0, dt).displacement_x - exact);
    };
    for (int n : {10, 20, 40, 80}) CHECK(error_at(n) / error_at(2 * n) >= 1.8);
}

TEST_CASE("body_to_nav") {
    const auto north = body_to_nav(10, 0);
    CHECK(north.north == 10.0);
    CHECK(north.east == 0.0);
    const auto east = body_to_nav(10, std::numbers::pi / 2);
    CHECK(std::abs(east.north) < 1e-9);
    CHECK(std::abs(east.east - 10.0) < 1e-9);
    const auto diag = body_to_nav(5, std::numbers::pi / 4);
    CHECK(std::abs(diag.north - 3.5355) < 1e-4);
    CHECK(std::abs(diag.east - 3.5355) < 1e-4);

    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> x(-50, 50), psi(-10, 10);
    for (int i = 0; i < 1000; ++i) {
        const double xb = x(rng);
        CHECK(std::abs(body_to_nav(xb, psi(rng)).norm() - std::abs(xb)) < 1e-9);
    }
}

TEST_CASE("dead_reckon straight line") {
    const auto windows = constant_windows(10, 0.0, 0.0);
    const auto steps = dead_reckon(0.0, 20.0, 0.0, windows);
    REQUIRE(steps.size() == 10);
    CHECK(std::abs(steps.back().position.north - 200.0) < 1e-9);
    CHECK(std::abs(steps.back().position.east) < 1e-9);
}

TEST_CASE("dead_reckon circular arc stays near the closed-form circle") {
    const auto windows = constant_windows(10, 0.0, 0.2);
    const auto steps = dead_reckon(0.0, 10.0, 0.0, windows);
    const double r = 50.0, theta = 2.0;
    const double dn = steps.back().position.north - r * std::sin(theta);
    const double de = steps.back().position.east - r * (1.0 - std::cos(theta));
    CHECK(std::hypot(dn, de) < 1.5);
    CHECK(steps.back().psi == doctest::Approx(2.0));
}

TEST_CASE("dead_reckon replays an uncorrected accelerometer bias") {
    const double bias = 0.1;
    const auto windows = constant_windows(10, bias, 0.0);
    const auto steps = dead_reckon(0.0, 0.0, 0.0, windows);

    // Brute-force replay: left-rectangle double integration per window, summed.
    double v = 0.0, x = 0.0;
    std::vector<double> expected;
    for (int w = 0; w < 10; ++w) {
        double window = 0.0;
        for (int k = 0; k < 10; ++k) {
            window += v * 0.1;
            v += bias * 0.1;
        }
        x += window;
        expected.push_back(x);
    }
    for (std::size_t k = 0; k < steps.size(); ++k) {
        CHECK(steps[k].position.north == expected[k]);
        CHECK(steps[k].position.east == 0.0);
    }

    // Superlinear drift: the per-window increments keep growing.
    for (std::size_t k = 1; k < steps.size(); ++k) {
        const double prev = k >= 2 ? steps[k - 1].position.north - steps[k - 2].position.north
                                   : steps[0].position.north;
        CHECK(steps[k].position.north - steps[k - 1].position.north > prev);
    }

    // Calibrating the bias removes the drift entirely.
    const auto corrected = dead_reckon(0.0, 0.0, bias, windows);
    CHECK(corrected.back().position.north == 0.0);
}

TEST_CASE("dead_reckon carries velocity across windows and validates input") {
    const auto steps = dead_reckon(0.0, 5.0, 0.0, constant_windows(3, 1.0, 0.0));
    CHECK(steps[1].body.v_start == doctest::Approx(steps[0].body.v_end));
    CHECK(steps[2].body.v_end == doctest::Approx(8.0));

    std::vector<ImuWindow> empty{ImuWindow{}};
    CHECK_THROWS_AS(dead_reckon(0.0, 0.0, 0.0, empty), Error);
    std::vector<ImuWindow> ragged{ImuWindow{{1.0, 2.0}, {0.0}}};
    CHECK_THROWS_AS(dead_reckon(0.0, 0.0, 0.0, ragged), Error);
}
