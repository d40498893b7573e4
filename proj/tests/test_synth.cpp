#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "doctest.h"
#include "driftkill/dataset.hpp"
#include "driftkill/error.hpp"
#include "driftkill/geodesy.hpp"
#include "driftkill/kinematics.hpp"
#include "driftkill/synth.hpp"

using namespace driftkill;
using namespace driftkill::synth;

namespace {

ScenarioSpec spec_of(ScenarioKind kind) {
    ScenarioSpec s;
    s.kind = kind;
    return s;
}

std::vector<kinematics::ImuWindow> imu_windows(const std::vector<dataset::ImuRecord>& records) {
    std::vector<kinematics::ImuWindow> out;
    for (std::size_t begin = 0; begin + 10 <= records.size(); begin += 10) {
        kinematics::ImuWindow w;
        for (std::size_t k = begin; k < begin + 10; ++k) {
            w.accels.push_back(records[k].accel_long);
            w.yaw_rates.push_back(records[k].yaw_rate);
        }
        out.push_back(std::move(w));
    }
    return out;
}

double path_length(const SyntheticTrace& trace) {
    double len = 0.0;
    auto prev = trace.states.front();
    for (std::size_t k = 1; k <= trace.states.size(); ++k) {
        const auto& s = k < trace.states.size() ? trace.states[k] : trace.final_state;
        len += std::hypot(s.north - prev.north, s.east - prev.east);
        prev = s;
    }
    return len;
}

}  // namespace

TEST_CASE("scenario names round-trip") {
    for (auto k : {ScenarioKind::Straight, ScenarioKind::HardBrake, ScenarioKind::Roundabout, ScenarioKind::Jerk,
                   ScenarioKind::Slalom})
        CHECK(parse_scenario_kind(to_string(k)) == k);
    CHECK_THROWS_AS(parse_scenario_kind("drift"), Error);
}

TEST_CASE("straight scenario") {
    const auto trace = gen_scenario(spec_of(ScenarioKind::Straight));
    CHECK(trace.states.size() == 100);
    CHECK(trace.final_state.north == doctest::Approx(200.0));
    CHECK(std::abs(trace.final_state.east) < 1e-9);
    for (const auto& s : trace.states) CHECK(s.yaw_rate == 0.0);

    auto accel = spec_of(ScenarioKind::Straight);
    accel.v0 = 5.0;
    accel.accel = 1.0;
    CHECK(gen_scenario(accel).final_state.north == doctest::Approx(5.0 * 10 + 0.5 * 100));
}

TEST_CASE("roundabout scenario") {
    auto spec = spec_of(ScenarioKind::Roundabout);
    spec.v0 = 10.0;
    spec.radius = 50.0;
    const auto trace = gen_scenario(spec);
    for (const auto& s : trace.states) CHECK(s.yaw_rate == doctest::Approx(0.2));
    CHECK(trace.final_state.north == doctest::Approx(50.0 * std::sin(2.0)));
    CHECK(trace.final_state.east == doctest::Approx(50.0 * (1.0 - std::cos(2.0))));

    spec.turn_direction = -1;
    CHECK(gen_scenario(spec).final_state.east == doctest::Approx(-50.0 * (1.0 - std::cos(2.0))));
}

TEST_CASE("hard brake scenario") {
    auto spec = spec_of(ScenarioKind::HardBrake);
    spec.v0 = 20.0;
    spec.decel = -5.0;
    const auto trace = gen_scenario(spec);
    CHECK(trace.states[39].speed > 0.0);
    for (std::size_t k = 40; k < trace.states.size(); ++k) {
        CHECK(trace.states[k].speed == doctest::Approx(0.0));
        CHECK(trace.states[k].accel == 0.0);
    }
    CHECK(trace.states[10].accel == -5.0);
    CHECK(trace.final_state.north == doctest::Approx(40.0));

    spec.decel = -3.0;
    CHECK_THROWS_AS(validate(spec), Error);
    CHECK(-0.45 * 9.81 == kHardBrakeThreshold);
}

TEST_CASE("hard brake with restart returns to cruise speed") {
    auto spec = spec_of(ScenarioKind::HardBrake);
    spec.v0 = 10.0;
    spec.decel = -5.0;
    spec.brake_start = 1.0;
    spec.restart_after = 1.0;
    spec.recover_accel = 2.5;
    spec.duration = 12.0;
    const auto trace = gen_scenario(spec);
    // cruise 1 s, brake 2 s, rest 1 s, recover 4 s, then cruise until t = 9 s brake again.
    CHECK(trace.states[35].speed == doctest::Approx(0.0));
    CHECK(trace.states[60].speed == doctest::Approx(5.0));
    CHECK(trace.states[85].speed == doctest::Approx(10.0));
    CHECK(trace.states[95].accel == -5.0);
}

TEST_CASE("jerk and slalom scenarios are consistent") {
    auto jerk = spec_of(ScenarioKind::Jerk);
    jerk.v0 = 10.0;
    jerk.jerk_amplitude = 2.0;
    jerk.jerk_period = 4.0;
    const auto jt = gen_scenario(jerk);
    CHECK(jt.states[5].accel == 2.0);
    CHECK(jt.states[25].accel == -2.0);
    // Two full periods return to v0.
    CHECK(jt.states[80].speed == doctest::Approx(10.0));

    auto slalom = spec_of(ScenarioKind::Slalom);
    slalom.v0 = 10.0;
    const auto st = gen_scenario(slalom);
    for (const auto& s : st.states) {
        const double expect = slalom.turn_amplitude * std::sin(2.0 * std::numbers::pi * s.t / slalom.turn_period);
        CHECK(s.yaw_rate == doctest::Approx(expect).epsilon(1e-12));
    }
}

TEST_CASE("true kinematics are internally consistent") {
    for (auto kind : {ScenarioKind::Straight, ScenarioKind::HardBrake, ScenarioKind::Roundabout, ScenarioKind::Jerk,
                      ScenarioKind::Slalom}) {
        CAPTURE(to_string(kind));
        auto spec = spec_of(kind);
        spec.v0 = 12.0;
        spec.brake_start = 3.0;
        const auto trace = gen_scenario(spec, 0.01);
        for (std::size_t k = 1; k + 1 < trace.states.size(); ++k) {
            const auto& a = trace.states[k - 1];
            const auto& b = trace.states[k + 1];
            const double speed = std::hypot(b.north - a.north, b.east - a.east) / (b.t - a.t);
            CHECK(std::abs(speed - trace.states[k].speed) < 0.05);
        }
    }
}

TEST_CASE("validate rejects bad specs") {
    auto round = spec_of(ScenarioKind::Roundabout);
    round.radius = 0.0;
    CHECK_THROWS_AS(validate(round), Error);
    auto neg = spec_of(ScenarioKind::Straight);
    neg.duration = -1.0;
    CHECK_THROWS_AS(gen_scenario(neg), Error);
    try {
        validate(round);
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::InvalidSpec);
        CHECK(std::string(e.what()).find("radius") != std::string::npos);
    }
}

TEST_CASE("to_records") {
    const auto trace = gen_scenario(spec_of(ScenarioKind::Straight));
    const auto records = to_records(trace);
    CHECK(records.size() == 100);

    std::stringstream buf;
    dataset::write_records(buf, records);
    CHECK(dataset::load_records(buf, dataset::ColumnMap::native()).records == records);

    // 200 m due north: records stop at t = 9.9, so extend the trace by one sample.
    auto spec = spec_of(ScenarioKind::Straight);
    spec.duration = 10.1;
    const auto longer = to_records(gen_scenario(spec));
    const auto& last = longer.back();
    CHECK(last.t == doctest::Approx(10.0));
    CHECK(std::abs(last.lat - (52.0 + 200.0 / geodesy::kWgs84.meridional_radius(52.0) * 180.0 / std::numbers::pi)) <
          1e-12);
    CHECK(std::abs(last.lat - (52.0 + 200.0 / 111320.0)) < 2e-5);
    CHECK(std::abs(last.lon - (-1.5)) < 1e-9);
}

TEST_CASE("corrupt_imu") {
    const auto trace = gen_scenario(spec_of(ScenarioKind::Jerk));
    const auto clean = to_records(trace);
    CHECK(corrupt_imu(trace, Corruption{}) == clean);

    auto parked = spec_of(ScenarioKind::Straight);
    parked.v0 = 0.0;
    Corruption bias_only;
    bias_only.accel_bias = 0.1;
    for (const auto& r : corrupt_imu(gen_scenario(parked), bias_only)) CHECK(r.accel_long == 0.1);

    auto longrun = spec_of(ScenarioKind::Straight);
    longrun.duration = 1000.0;
    const auto lt = gen_scenario(longrun);
    const auto base = to_records(lt);
    Corruption noisy;
    noisy.accel_bias = 0.2;
    noisy.sigma_a = 0.05;
    noisy.sigma_w = 0.01;
    noisy.seed = 17;
    const auto out = corrupt_imu(lt, noisy);
    REQUIRE(out.size() == 10000);
    double sum = 0.0, sq = 0.0;
    for (std::size_t k = 0; k < out.size(); ++k) {
        const double r = out[k].accel_long - base[k].accel_long - 0.2;
        sum += r;
        sq += r * r;
        CHECK(out[k].lat == base[k].lat);
        CHECK(out[k].heading == base[k].heading);
    }
    const double mean = sum / 1e4;
    const double sd = std::sqrt(sq / 1e4 - mean * mean);
    CHECK(std::abs(sd - 0.05) < 0.05 * 0.05);
    CHECK(corrupt_imu(lt, noisy) == out);
    noisy.seed = 18;
    CHECK(corrupt_imu(lt, noisy) != out);
}

TEST_CASE("dead reckoning a clean trace recovers the true path") {
    auto final_error = [](const SyntheticTrace& trace, kinematics::IntegrationRule rule) {
        const auto steps = kinematics::dead_reckon(trace.states[0].yaw, trace.states[0].speed, 0.0,
                                                   imu_windows(to_records(trace)), {0.1, rule});
        return std::hypot(steps.back().position.north - trace.final_state.north,
                          steps.back().position.east - trace.final_state.east);
    };
    for (auto kind : {ScenarioKind::Straight, ScenarioKind::Roundabout, ScenarioKind::Jerk, ScenarioKind::Slalom}) {
        CAPTURE(to_string(kind));
        auto spec = spec_of(kind);
        spec.v0 = 10.0;
        const auto trace = gen_scenario(spec);
        const double length = path_length(trace);
        CHECK(final_error(trace, kinematics::IntegrationRule::Trapezoidal) < 0.005 * length);
        // The end-of-sample heading leads by half a sample on a constant turn.
        const double bound = kind == ScenarioKind::Roundabout ? 1.5 : 0.005 * length;
        CHECK(final_error(trace, kinematics::IntegrationRule::Rectangular) < bound);
    }
}

TEST_CASE("window ground truth matches true chord displacement") {
    std::mt19937_64 rng(12);
    for (auto kind : {ScenarioKind::Straight, ScenarioKind::HardBrake, ScenarioKind::Roundabout, ScenarioKind::Jerk,
                      ScenarioKind::Slalom}) {
        auto spec = random_spec(kind, 20.1, rng);
        const auto trace = gen_scenario(spec);
        dataset::RecordLog log;
        log.records = to_records(trace);
        log.segment_starts = {0};
        const auto set = dataset::build_windows(log, 0.0);
        REQUIRE(set.windows.size() == 20);
        for (std::size_t i = 0; i < set.windows.size(); ++i) {
            const auto& a = trace.states[10 * i];
            const auto& b = trace.states[10 * (i + 1)];
            const double chord = std::hypot(b.north - a.north, b.east - a.east);
            if (chord > 30.0) continue;
            CHECK(std::abs(set.windows[i].gt_displacement - chord) <= 1e-3 * chord + 1e-3);
        }
    }
}

TEST_CASE("random_spec draws valid specs deterministically") {
    std::mt19937_64 a(1), b(1);
    for (int i = 0; i < 200; ++i) {
        for (auto kind : {ScenarioKind::Straight, ScenarioKind::HardBrake, ScenarioKind::Roundabout,
                          ScenarioKind::Jerk, ScenarioKind::Slalom}) {
            const auto s = random_spec(kind, 30.0, a);
            CHECK_NOTHROW(validate(s));
            const auto t = random_spec(kind, 30.0, b);
            CHECK(gen_scenario(s).final_state.north == gen_scenario(t).final_state.north);
        }
    }
}

TEST_CASE("random_drives lays drives out as separate segments") {
    const auto a = random_drives(ScenarioKind::Jerk, 3, 20.0, "consumer-imu", 5);
    const auto b = random_drives(ScenarioKind::Jerk, 3, 20.0, "consumer-imu", 5);
    CHECK(a == b);
    CHECK(a.size() == 600);
    const auto log = dataset::segment_records(a);
    CHECK(log.segment_starts == std::vector<std::size_t>{0, 200, 400});
    CHECK(a != random_drives(ScenarioKind::Jerk, 3, 20.0, "consumer-imu", 6));
    CHECK_THROWS_AS(random_drives(ScenarioKind::Jerk, 1, 20.0, "bogus", 5), Error);
}
