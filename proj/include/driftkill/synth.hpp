#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string_view>
#include <vector>

#include "driftkill/dataset.hpp"
#include "driftkill/geodesy.hpp"

namespace driftkill::synth {

enum class ScenarioKind { Straight, HardBrake, Roundabout, Jerk, Slalom };

std::string_view to_string(ScenarioKind kind) noexcept;
/// Throws Error(InvalidSpec) for unknown names.
ScenarioKind parse_scenario_kind(std::string_view name);

inline constexpr double kHardBrakeThreshold = -0.45 * dataset::kStandardGravity;

/// Parameters of one synthetic drive. Only the fields relevant to `kind` are read.
struct ScenarioSpec {
    ScenarioKind kind = ScenarioKind::Straight;
    double duration = 10.0;  // s
    double v0 = 20.0;        // m/s

    double accel = 0.0;  // straight: constant longitudinal acceleration

    // hard_brake: cruise for `brake_start`, brake at `decel` to a stop. With
    // `restart_after`, wait that long, accelerate back to v0 and repeat.
    double decel = -5.0;
    double brake_start = 0.0;
    std::optional<double> restart_after;
    double recover_accel = 2.0;

    // roundabout: constant speed on a circle; +1 turns clockwise (right).
    double radius = 50.0;
    int turn_direction = 1;

    // jerk: square-wave acceleration, +amplitude for the first half period.
    double jerk_amplitude = 2.0;
    double jerk_period = 4.0;

    // slalom: yaw rate amplitude * sin(2 pi t / period) at constant speed.
    double turn_amplitude = 0.3;
    double turn_period = 6.0;

    geodesy::GeoPoint origin{52.0, -1.5};
    double heading0_deg = 0.0;
};

/// Throws Error(InvalidSpec) naming the offending field.
void validate(const ScenarioSpec& spec);

struct TrueState {
    double t = 0.0;
    double north = 0.0;  // m from the origin
    double east = 0.0;
    double speed = 0.0;
    double yaw = 0.0;  // rad, unwrapped, clockwise from north
    double yaw_rate = 0.0;
    double accel = 0.0;  // longitudinal
};

struct SyntheticTrace {
    ScenarioSpec spec;
    double dt = 0.1;
    std::vector<TrueState> states;  // t = k * dt for k in [0, duration / dt)
    TrueState final_state;          // at t = duration
};

SyntheticTrace gen_scenario(const ScenarioSpec& spec, double dt = 0.1);

/// Clean sensor stream: true acceleration and yaw rate, GPS position from a local
/// tangent projection at the origin using the ellipsoid's radii of curvature.
std::vector<dataset::ImuRecord> to_records(const SyntheticTrace& trace);

struct Corruption {
    double accel_bias = 0.0;  // m/s^2
    double gyro_bias = 0.0;   // rad/s
    double sigma_a = 0.0;
    double sigma_w = 0.0;
    std::uint64_t seed = 0;

    /// "none" or "consumer-imu"; throws Error(InvalidSpec) otherwise.
    static Corruption preset(std::string_view name, std::uint64_t seed = 0);
};

/// Adds bias and white Gaussian noise to the accel and gyro channels. GPS columns
/// are left untouched. Deterministic per seed.
std::vector<dataset::ImuRecord> corrupt_imu(const SyntheticTrace& trace, const Corruption& corruption);
std::vector<dataset::ImuRecord> corrupt_imu(std::span<const dataset::ImuRecord> clean, const Corruption& corruption);

/// Draws scenario parameters from ranges typical of urban and motorway driving.
ScenarioSpec random_spec(ScenarioKind kind, double duration, std::mt19937_64& rng);

/// `drives` independent random drives of one kind, each corrupted with its own
/// seed and laid end to end with `gap` seconds between them so that loading
/// splits them into separate segments. Deterministic per seed.
std::vector<dataset::ImuRecord> random_drives(ScenarioKind kind, std::size_t drives, double duration,
                                              std::string_view corruption, std::uint64_t seed, double gap = 1.0);

}  // namespace driftkill::synth
