#pragma once

#include <Eigen/Core>
#include <span>
#include <vector>

namespace driftkill::kinematics {

/// Roll, pitch and yaw in radians (NED convention, yaw clockwise from north).
struct Attitude {
    double roll_phi = 0.0;
    double pitch_theta = 0.0;
    double yaw_psi = 0.0;

    /// 1-D body tracking: the vehicle is level, only yaw varies.
    static Attitude level(double yaw) noexcept { return {0.0, 0.0, yaw}; }
};

/// Body-to-navigation rotation. Rows are North, East, Down.
using RotationMatrix = Eigen::Matrix3d;

RotationMatrix rotation_body_to_nav(const Attitude& att);

enum class IntegrationRule {
    Rectangular,  // left endpoint
    Trapezoidal,  // last sample held to the window end
};

double integrate_yaw(double psi0, std::span<const double> yaw_rates, double dt,
                     IntegrationRule rule = IntegrationRule::Rectangular);

/// Removes the estimated accelerometer bias from a raw reading.
constexpr double correct_accel(double measured, double bias) noexcept { return measured - bias; }

struct WindowKinematics {
    double v_start = 0.0;
    double v_end = 0.0;
    double displacement_x = 0.0;  // body frame, signed
};

/// Single and double integration of bias-corrected longitudinal acceleration over one window.
/// Throws Error(EmptyWindow) for an empty sequence and Error(ZeroDt) for dt <= 0.
WindowKinematics integrate_window(std::span<const double> accels, double v0, double dt,
                                  IntegrationRule rule = IntegrationRule::Rectangular);

struct NavDisplacement {
    double north = 0.0;
    double east = 0.0;

    double norm() const noexcept;
    NavDisplacement& operator+=(const NavDisplacement& o) noexcept {
        north += o.north;
        east += o.east;
        return *this;
    }
};

NavDisplacement body_to_nav(double x_body, double psi) noexcept;

/// Raw 10 Hz channels for one window.
struct ImuWindow {
    std::vector<double> accels;     // m/s^2, uncorrected
    std::vector<double> yaw_rates;  // rad/s
};

struct DeadReckonStep {
    double psi = 0.0;  // unwrapped yaw at the end of the window
    WindowKinematics body;
    NavDisplacement delta;
    NavDisplacement position;  // cumulative from the start of the run
};

struct DeadReckonOptions {
    double dt = 0.1;
    IntegrationRule rule = IntegrationRule::Rectangular;
};

/// INS dead reckoning from an initial yaw and speed.
///
/// Within each window yaw and velocity are advanced sample by sample; each sample's
/// body displacement is projected with the yaw reached at the end of that sample.
/// Velocity carries over between windows.
std::vector<DeadReckonStep> dead_reckon(double psi0, double v0, double accel_bias,
                                        std::span<const ImuWindow> windows, const DeadReckonOptions& options = {});

}  // namespace driftkill::kinematics
