#include "driftkill/kinematics.hpp"

#include <cmath>

#include "driftkill/error.hpp"

namespace driftkill::kinematics {

namespace {

void require_dt(double dt) {
    if (!(dt > 0.0)) throw Error(ErrorKind::ZeroDt, "integration step must be positive");
}

// Sample value used on the interval [k, k+1): left endpoint, or the mean with the
// next sample for the trapezoid (the last sample is held).
double interval_value(std::span<const double> xs, std::size_t k, IntegrationRule rule) {
    if (rule == IntegrationRule::Rectangular) return xs[k];
    const double next = k + 1 < xs.size() ? xs[k + 1] : xs[k];
    return 0.5 * (xs[k] + next);
}

}  // namespace

RotationMatrix rotation_body_to_nav(const Attitude& att) {
    const double cr = std::cos(att.roll_phi), sr = std::sin(att.roll_phi);
    const double cp = std::cos(att.pitch_theta), sp = std::sin(att.pitch_theta);
    const double cy = std::cos(att.yaw_psi), sy = std::sin(att.yaw_psi);
    RotationMatrix r;
    r << cp * cy, -cr * sy + sr * sp * cy, sr * sy + cr * sp * cy,  //
        cp * sy, cr * cy + sr * sp * sy, -sr * cy + cr * sp * sy,   //
        -sp, sr * cp, cr * cp;
    return r;
}

double integrate_yaw(double psi0, std::span<const double> yaw_rates, double dt, IntegrationRule rule) {
    require_dt(dt);
    double psi = psi0;
    for (std::size_t k = 0; k < yaw_rates.size(); ++k) psi += interval_value(yaw_rates, k, rule) * dt;
    return psi;
}

WindowKinematics integrate_window(std::span<const double> accels, double v0, double dt, IntegrationRule rule) {
    if (accels.empty()) throw Error(ErrorKind::EmptyWindow, "window has no acceleration samples");
    require_dt(dt);
    WindowKinematics out{v0, v0, 0.0};
    for (std::size_t k = 0; k < accels.size(); ++k) {
        const double v_next = out.v_end + interval_value(accels, k, rule) * dt;
        out.displacement_x += (rule == IntegrationRule::Rectangular ? out.v_end : 0.5 * (out.v_end + v_next)) * dt;
        out.v_end = v_next;
    }
    return out;
}

double NavDisplacement::norm() const noexcept { return std::hypot(north, east); }

NavDisplacement body_to_nav(double x_body, double psi) noexcept {
    return {x_body * std::cos(psi), x_body * std::sin(psi)};
}

std::vector<DeadReckonStep> dead_reckon(double psi0, double v0, double accel_bias,
                                        std::span<const ImuWindow> windows, const DeadReckonOptions& options) {
    require_dt(options.dt);
    std::vector<DeadReckonStep> steps;
    steps.reserve(windows.size());

    double psi = psi0;
    double v = v0;
    NavDisplacement position;
    std::vector<double> corrected;
    for (const ImuWindow& w : windows) {
        if (w.accels.empty()) throw Error(ErrorKind::EmptyWindow, "dead reckoning window has no samples");
        if (w.yaw_rates.size() != w.accels.size())
            throw Error(ErrorKind::LengthMismatch, "accel and yaw-rate channels differ in length");

        corrected.resize(w.accels.size());
        for (std::size_t k = 0; k < w.accels.size(); ++k) corrected[k] = correct_accel(w.accels[k], accel_bias);

        DeadReckonStep step;
        step.body.v_start = v;
        for (std::size_t k = 0; k < corrected.size(); ++k) {
            // Yaw first, then the sample's displacement under the updated heading
            // (the mid-sample heading for the trapezoid).
            const double psi_prev = psi;
            psi += interval_value(w.yaw_rates, k, options.rule) * options.dt;
            const double v_next = v + interval_value(corrected, k, options.rule) * options.dt;
            const bool rect = options.rule == IntegrationRule::Rectangular;
            const double dx = (rect ? v : 0.5 * (v + v_next)) * options.dt;
            step.delta += body_to_nav(dx, rect ? psi : 0.5 * (psi_prev + psi));
            step.body.displacement_x += dx;
            v = v_next;
        }
        step.body.v_end = v;
        step.psi = psi;
        position += step.delta;
        step.position = position;
        steps.push_back(step);
    }
    return steps;
}

}  // namespace driftkill::kinematics
