#include "driftkill/synth.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <string>

#include "driftkill/error.hpp"

namespace driftkill::synth {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kRadToDeg = 180.0 / std::numbers::pi;

[[noreturn]] void invalid(const std::string& what) { throw Error(ErrorKind::InvalidSpec, what); }

// Constant-acceleration stretch of the speed profile.
struct Piece {
    double t0 = 0.0;
    double t1 = 0.0;
    double a = 0.0;
    double v0 = 0.0;
    double s0 = 0.0;  // path length at t0
};

class SpeedProfile {
public:
    explicit SpeedProfile(double v0) : v_(v0) {}

    // Holds `a` for `dur` seconds; a vehicle braking to zero stops and rests.
    void push(double a, double dur) {
        if (dur <= 0.0) return;
        if (a < 0.0 && v_ + a * dur < 0.0) {
            const double stop = -v_ / a;
            push_exact(a, stop);
            v_ = 0.0;
            push_exact(0.0, dur - stop);
            return;
        }
        push_exact(a, dur);
        v_ += a * dur;
    }

    double now() const { return t_; }
    double speed() const { return v_; }

    const Piece& at(double t) const {
        auto it = std::upper_bound(pieces_.begin(), pieces_.end(), t, [](double x, const Piece& p) { return x < p.t1; });
        if (it == pieces_.end()) return pieces_.back();
        return *it;
    }

    double speed_at(double t) const {
        const Piece& p = at(t);
        return std::max(0.0, p.v0 + p.a * (t - p.t0));
    }
    double accel_at(double t) const { return at(t).a; }
    double path_at(double t) const {
        const Piece& p = at(t);
        const double tau = t - p.t0;
        return p.s0 + p.v0 * tau + 0.5 * p.a * tau * tau;
    }

private:
    void push_exact(double a, double dur) {
        if (dur <= 0.0) return;
        const double s0 = pieces_.empty() ? 0.0 : path_end();
        pieces_.push_back({t_, t_ + dur, a, v_, s0});
        t_ += dur;
    }
    double path_end() const {
        const Piece& p = pieces_.back();
        const double tau = p.t1 - p.t0;
        return p.s0 + p.v0 * tau + 0.5 * p.a * tau * tau;
    }

    std::vector<Piece> pieces_;
    double t_ = 0.0;
    double v_ = 0.0;
};

SpeedProfile build_speed(const ScenarioSpec& spec) {
    SpeedProfile prof(spec.v0);
    // Run a little past the end so lookups at t = duration stay inside a piece.
    const double horizon = spec.duration + 1.0;
    switch (spec.kind) {
        case ScenarioKind::Straight: prof.push(spec.accel, horizon); break;
        case ScenarioKind::Roundabout:
        case ScenarioKind::Slalom: prof.push(0.0, horizon); break;
        case ScenarioKind::HardBrake:
            while (prof.now() < horizon) {
                prof.push(0.0, spec.brake_start);
                const double stop = prof.speed() / -spec.decel;
                prof.push(spec.decel, stop);
                if (!spec.restart_after) {
                    prof.push(0.0, horizon - prof.now());
                    break;
                }
                prof.push(0.0, *spec.restart_after);
                prof.push(spec.recover_accel, spec.v0 / spec.recover_accel);
            }
            break;
        case ScenarioKind::Jerk:
            while (prof.now() < horizon) {
                prof.push(spec.jerk_amplitude, 0.5 * spec.jerk_period);
                prof.push(-spec.jerk_amplitude, 0.5 * spec.jerk_period);
            }
            break;
    }
    return prof;
}

struct YawProfile {
    ScenarioKind kind;
    double psi0;
    double rate;  // roundabout
    double amplitude;
    double period;

    double yaw(double t) const {
        switch (kind) {
            case ScenarioKind::Roundabout: return psi0 + rate * t;
            case ScenarioKind::Slalom: return psi0 + amplitude * period / kTwoPi * (1.0 - std::cos(kTwoPi * t / period));
            default: return psi0;
        }
    }
    double yaw_rate(double t) const {
        switch (kind) {
            case ScenarioKind::Roundabout: return rate;
            case ScenarioKind::Slalom: return amplitude * std::sin(kTwoPi * t / period);
            default: return 0.0;
        }
    }
};

// 8-point Gauss-Legendre nodes and weights on [-1, 1].
constexpr std::array<double, 8> kGlNodes{-0.9602898564975363, -0.7966664774136267, -0.5255324099163290,
                                         -0.1834346424956498, 0.1834346424956498,  0.5255324099163290,
                                         0.7966664774136267,  0.9602898564975363};
constexpr std::array<double, 8> kGlWeights{0.1012285362903763, 0.2223810344533745, 0.3137066458778873,
                                           0.3626837833783620, 0.3626837833783620, 0.3137066458778873,
                                           0.2223810344533745, 0.1012285362903763};

}  // namespace

std::string_view to_string(ScenarioKind kind) noexcept {
    switch (kind) {
        case ScenarioKind::Straight: return "straight";
        case ScenarioKind::HardBrake: return "hard_brake";
        case ScenarioKind::Roundabout: return "roundabout";
        case ScenarioKind::Jerk: return "jerk";
        case ScenarioKind::Slalom: return "slalom";
    }
    return "unknown";
}

ScenarioKind parse_scenario_kind(std::string_view name) {
    for (ScenarioKind k : {ScenarioKind::Straight, ScenarioKind::HardBrake, ScenarioKind::Roundabout,
                           ScenarioKind::Jerk, ScenarioKind::Slalom}) {
        if (to_string(k) == name) return k;
    }
    invalid("unknown scenario kind `" + std::string(name) + "`");
}

void validate(const ScenarioSpec& spec) {
    if (!(spec.duration > 0.0)) invalid("duration must be positive");
    if (!(spec.v0 >= 0.0)) invalid("v0 must be non-negative");
    switch (spec.kind) {
        case ScenarioKind::Straight:
            if (!std::isfinite(spec.accel)) invalid("accel must be finite");
            break;
        case ScenarioKind::HardBrake:
            if (!(spec.decel <= kHardBrakeThreshold)) invalid("hard_brake decel must be <= -0.45 g");
            if (!(spec.brake_start >= 0.0)) invalid("brake_start must be non-negative");
            if (spec.restart_after) {
                if (!(*spec.restart_after >= 0.0)) invalid("restart_after must be non-negative");
                if (!(spec.recover_accel > 0.0)) invalid("recover_accel must be positive");
                if (!(spec.v0 > 0.0) || (spec.brake_start == 0.0 && *spec.restart_after == 0.0))
                    invalid("a repeating hard_brake needs v0 > 0 and a non-zero cycle");
            }
            break;
        case ScenarioKind::Roundabout:
            if (!(spec.radius > 0.0)) invalid("roundabout radius must be positive");
            if (spec.turn_direction != 1 && spec.turn_direction != -1) invalid("turn_direction must be +1 or -1");
            break;
        case ScenarioKind::Jerk:
            if (!(spec.jerk_amplitude >= 0.0)) invalid("jerk_amplitude must be non-negative");
            if (!(spec.jerk_period > 0.0)) invalid("jerk_period must be positive");
            break;
        case ScenarioKind::Slalom:
            if (!std::isfinite(spec.turn_amplitude)) invalid("turn_amplitude must be finite");
            if (!(spec.turn_period > 0.0)) invalid("turn_period must be positive");
            break;
    }
}

SyntheticTrace gen_scenario(const ScenarioSpec& spec, double dt) {
    validate(spec);
    if (!(dt > 0.0)) invalid("dt must be positive");

    const SpeedProfile speed = build_speed(spec);
    const double psi0 = spec.heading0_deg / kRadToDeg;
    const YawProfile yaw{spec.kind, psi0, spec.turn_direction * spec.v0 / spec.radius, spec.turn_amplitude,
                         spec.turn_period};

    auto state_at = [&](double t, double north, double east) {
        return TrueState{t, north, east, speed.speed_at(t), yaw.yaw(t), yaw.yaw_rate(t), speed.accel_at(t)};
    };

    // Closed forms where the path has one; quadrature of v(t)(cos, sin)(yaw(t)) otherwise.
    auto position = [&](double t, double prev_t, double& north, double& east) {
        switch (spec.kind) {
            case ScenarioKind::Roundabout: {
                const double r = spec.v0 / yaw.rate;
                north = r * (std::sin(yaw.yaw(t)) - std::sin(psi0));
                east = r * (std::cos(psi0) - std::cos(yaw.yaw(t)));
                return;
            }
            case ScenarioKind::Slalom: {
                const double half = 0.5 * (t - prev_t), mid = 0.5 * (t + prev_t);
                for (std::size_t i = 0; i < kGlNodes.size(); ++i) {
                    const double tau = mid + half * kGlNodes[i];
                    const double w = kGlWeights[i] * half * spec.v0;
                    north += w * std::cos(yaw.yaw(tau));
                    east += w * std::sin(yaw.yaw(tau));
                }
                return;
            }
            default: {
                const double s = speed.path_at(t);
                north = s * std::cos(psi0);
                east = s * std::sin(psi0);
                return;
            }
        }
    };

    SyntheticTrace trace;
    trace.spec = spec;
    trace.dt = dt;
    const auto n = static_cast<std::size_t>(std::llround(spec.duration / dt));
    trace.states.reserve(n);
    double north = 0.0, east = 0.0, prev_t = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        const double t = static_cast<double>(k) * dt;
        position(t, prev_t, north, east);
        trace.states.push_back(state_at(t, north, east));
        prev_t = t;
    }
    position(spec.duration, prev_t, north, east);
    trace.final_state = state_at(spec.duration, north, east);
    return trace;
}

std::vector<dataset::ImuRecord> to_records(const SyntheticTrace& trace) {
    const auto& origin = trace.spec.origin;
    const double m = geodesy::kWgs84.meridional_radius(origin.lat());
    const double nr = geodesy::kWgs84.prime_vertical_radius(origin.lat());
    const double cos_lat = std::cos(origin.lat() / kRadToDeg);

    std::vector<dataset::ImuRecord> out;
    out.reserve(trace.states.size());
    for (const TrueState& s : trace.states) {
        dataset::ImuRecord r;
        r.t = s.t;
        r.accel_long = s.accel;
        r.yaw_rate = s.yaw_rate;
        double heading = std::fmod(s.yaw * kRadToDeg, 360.0);
        if (heading < 0.0) heading += 360.0;
        r.heading = heading;
        r.lat = origin.lat() + s.north / m * kRadToDeg;
        r.lon = origin.lon() + s.east / (nr * cos_lat) * kRadToDeg;
        out.push_back(r);
    }
    return out;
}

Corruption Corruption::preset(std::string_view name, std::uint64_t seed) {
    if (name == "none") return Corruption{0.0, 0.0, 0.0, 0.0, seed};
    if (name == "consumer-imu") return Corruption{0.05, 0.01, 0.03, 0.005, seed};
    invalid("unknown corruption preset `" + std::string(name) + "`");
}

std::vector<dataset::ImuRecord> corrupt_imu(std::span<const dataset::ImuRecord> clean, const Corruption& c) {
    if (!(c.sigma_a >= 0.0) || !(c.sigma_w >= 0.0)) invalid("noise sigmas must be non-negative");
    std::mt19937_64 rng(c.seed);
    std::normal_distribution<double> unit(0.0, 1.0);
    std::vector<dataset::ImuRecord> out(clean.begin(), clean.end());
    for (dataset::ImuRecord& r : out) {
        const double na = unit(rng);
        const double nw = unit(rng);
        // Zero terms are skipped so a null corruption is an exact identity.
        if (c.accel_bias != 0.0) r.accel_long += c.accel_bias;
        if (c.sigma_a != 0.0) r.accel_long += c.sigma_a * na;
        if (c.gyro_bias != 0.0) r.yaw_rate += c.gyro_bias;
        if (c.sigma_w != 0.0) r.yaw_rate += c.sigma_w * nw;
    }
    return out;
}

std::vector<dataset::ImuRecord> corrupt_imu(const SyntheticTrace& trace, const Corruption& corruption) {
    const auto clean = to_records(trace);
    return corrupt_imu(clean, corruption);
}

ScenarioSpec random_spec(ScenarioKind kind, double duration, std::mt19937_64& rng) {
    auto uniform = [&](double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); };
    ScenarioSpec s;
    s.kind = kind;
    s.duration = duration;
    s.origin = geodesy::GeoPoint(uniform(51.0, 53.5), uniform(-3.0, 0.0));
    s.heading0_deg = uniform(0.0, 360.0);
    switch (kind) {
        case ScenarioKind::Straight:
            s.v0 = uniform(5.0, 30.0);
            // Gentle drift that keeps the final speed within 3..35 m/s.
            s.accel = uniform(std::max(-0.1, (3.0 - s.v0) / duration), std::min(0.2, (35.0 - s.v0) / duration));
            break;
        case ScenarioKind::HardBrake:
            s.v0 = uniform(10.0, 25.0);
            s.decel = uniform(-7.5, -4.5);
            s.brake_start = uniform(5.0, 15.0);
            s.restart_after = uniform(2.0, 5.0);
            s.recover_accel = uniform(1.5, 3.0);
            break;
        case ScenarioKind::Roundabout:
            s.v0 = uniform(6.0, 12.0);
            s.radius = uniform(15.0, 60.0);
            s.turn_direction = uniform(0.0, 1.0) < 0.5 ? -1 : 1;
            break;
        case ScenarioKind::Jerk:
            s.v0 = uniform(8.0, 20.0);
            s.jerk_amplitude = uniform(1.0, 3.0);
            s.jerk_period = uniform(2.0, 6.0);
            break;
        case ScenarioKind::Slalom:
            s.v0 = uniform(5.0, 15.0);
            s.turn_amplitude = uniform(0.15, 0.5);
            s.turn_period = uniform(4.0, 10.0);
            break;
    }
    return s;
}

std::vector<dataset::ImuRecord> random_drives(ScenarioKind kind, std::size_t drives, double duration,
                                              std::string_view corruption, std::uint64_t seed, double gap) {
    if (!(gap > dataset::kSegmentGap)) throw Error(ErrorKind::InvalidSpec, "gap between drives must exceed the segment gap");
    std::mt19937_64 rng(seed);
    std::vector<dataset::ImuRecord> out;
    double offset = 0.0;
    for (std::size_t d = 0; d < drives; ++d) {
        const ScenarioSpec spec = random_spec(kind, duration, rng);
        auto records = corrupt_imu(gen_scenario(spec), Corruption::preset(corruption, rng()));
        for (auto& r : records) {
            r.t += offset;
            out.push_back(r);
        }
        offset = out.back().t + gap;
    }
    return out;
}

}  // namespace driftkill::synth
