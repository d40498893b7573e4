#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "driftkill/error.hpp"
#include "driftkill/estimators.hpp"

using namespace driftkill;
using namespace driftkill::estimators;
using dataset::SecondWindow;

namespace {

SecondWindow window(std::size_t segment, std::size_t index, double accel, double disp, double ins_rate = 0.0,
                    double gt_rate = 0.0) {
    SecondWindow w;
    w.segment = segment;
    w.index = index;
    w.t_start = static_cast<double>(index);
    w.ins_accel_feature = accel;
    w.gt_displacement = disp;
    w.v_start = disp;
    w.ins_yaw_rate = ins_rate;
    w.gt_yaw_rate = gt_rate;
    return w;
}

// Constant-speed segments with accel readings that carry no information.
std::vector<SecondWindow> cruise_segments(std::span<const double> speeds, std::size_t length, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> accel(0.0, 0.2);
    std::vector<SecondWindow> out;
    for (std::size_t s = 0; s < speeds.size(); ++s)
        for (std::size_t i = 0; i < length; ++i) out.push_back(window(s, i, accel(rng), speeds[s]));
    return out;
}

// Smoothly varying yaw rate; the gyro reads truth plus `bias`.
std::vector<SecondWindow> turning_segments(std::size_t segments, std::size_t length, double bias, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<SecondWindow> out;
    for (std::size_t s = 0; s < segments; ++s) {
        const double amp = 0.4 * u(rng), period = 10.0 + 30.0 * u(rng), phase = 6.0 * u(rng);
        for (std::size_t i = 0; i < length; ++i) {
            const double rate = amp * std::sin(2.0 * std::numbers::pi * static_cast<double>(i) / period + phase);
            out.push_back(window(s, i, 0.0, 10.0, rate + bias, rate));
        }
    }
    return out;
}

nn::TrainConfig quick_displacement_config(std::size_t n = 4) {
    auto c = paper_displacement_config();
    c.time_steps = n;
    c.dropout = 0.0;
    c.batch_size = 32;
    c.activation = nn::Activation::Relu;
    return c;
}

nn::TrainConfig quick_orientation_config() {
    auto c = paper_orientation_config();
    c.dropout = 0.0;
    c.batch_size = 32;
    c.activation = nn::Activation::Relu;
    return c;
}

double mean_abs(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
    return s / static_cast<double>(a.size());
}

}  // namespace

TEST_CASE("paper configs") {
    const auto d = paper_displacement_config();
    CHECK(d.learning_rate == 0.004);
    CHECK(d.epochs == 40);
    CHECK(d.time_steps == 10);
    CHECK(d.dropout == 0.1);
    CHECK(d.batch_size == 256);
    CHECK(d.hidden == std::vector<std::size_t>{32, 32});
    CHECK(d.activation == nn::Activation::Tanh);
    const auto o = paper_orientation_config();
    CHECK(o.learning_rate == 0.001);
    CHECK(o.epochs == 60);
    CHECK(o.time_steps == 2);
}

TEST_CASE("displacement samples layout") {
    std::vector<SecondWindow> ws;
    for (std::size_t i = 0; i < 5; ++i) ws.push_back(window(0, i, 0.1 * i, 10.0 + i));
    ws.push_back(window(1, 0, 9.0, 99.0));
    const auto s = displacement_samples(ws, 2, NoiseConfig{0.0, 1});
    REQUIRE(s.targets.size() == 3);
    CHECK(s.inputs[0] == std::vector<double>{0.1, 0.2, 10.0, 11.0});
    CHECK(s.targets[0] == 12.0);
    CHECK(s.targets[2] == 14.0);

    const auto o = orientation_samples(ws, 2);
    CHECK(o.targets.size() == 4);
}

TEST_CASE("noise injection statistics") {
    const std::vector<double> speeds{8.0, 12.0, 17.0, 25.0};
    const auto ws = cruise_segments(speeds, 3000, 3);
    const std::size_t n = 3;
    const auto s = displacement_samples(ws, n, NoiseConfig{0.5, 11});
    double sum = 0.0, sq = 0.0;
    std::size_t count = 0;
    std::size_t sample = 0;
    for (std::size_t seg = 0; seg < speeds.size(); ++seg) {
        for (std::size_t t = n; t < 3000; ++t, ++sample) {
            for (std::size_t k = 0; k < n; ++k) {
                const double e = s.inputs[sample][n + k] - speeds[seg];
                sum += e;
                sq += e * e;
                ++count;
            }
            CHECK(s.targets[sample] == speeds[seg]);
        }
    }
    REQUIRE(count >= 10000);
    const double mean = sum / static_cast<double>(count);
    const double sd = std::sqrt(sq / static_cast<double>(count) - mean * mean);
    CHECK(sd == doctest::Approx(0.5).epsilon(0.1));
    // accel slots stay clean
    CHECK(s.inputs[0][0] == ws[1].ins_accel_feature);
}

TEST_CASE("constant velocity is learned") {
    const std::vector<double> speeds{20.0, 20.0, 20.0};
    const auto train = cruise_segments(speeds, 80, 1);
    const auto est = train_displacement(train, quick_displacement_config(), NoiseConfig{0.0, 0});
    const auto held_out = cruise_segments(std::vector<double>{20.0}, 30, 99);
    for (const auto& seq : dataset::extract_outage_sequences(held_out, 5, 4)) {
        for (double x : predict_displacement(est, seq).displacements) CHECK(x == doctest::Approx(20.0).epsilon(0.025));
    }
}

TEST_CASE("training is deterministic") {
    const std::vector<double> speeds{6.0, 14.0, 21.0, 27.0};
    const auto train = cruise_segments(speeds, 60, 5);
    const auto cfg = quick_displacement_config();
    const auto a = train_displacement(train, cfg);
    const auto b = train_displacement(train, cfg);
    CHECK(io::dump(to_json(a)) == io::dump(to_json(b)));

    const auto turns = turning_segments(4, 100, 0.05, 2);
    const auto oa = train_orientation(turns, quick_orientation_config());
    const auto ob = train_orientation(turns, quick_orientation_config());
    CHECK(io::dump(to_json(oa)) == io::dump(to_json(ob)));
}

TEST_CASE("serialized estimators round-trip") {
    const std::vector<double> speeds{6.0, 14.0, 21.0};
    const auto est = train_displacement(cruise_segments(speeds, 40, 8), quick_displacement_config(3));
    CHECK(displacement_from_json(io::parse(io::dump(to_json(est)))) == est);

    const auto orient = train_orientation(turning_segments(3, 50, 0.0, 4), quick_orientation_config());
    CHECK(orientation_from_json(io::parse(io::dump(to_json(orient)))) == orient);

    CHECK_THROWS_AS(orientation_from_json(to_json(est)), Error);
    auto broken = to_json(est);
    broken["time_steps"] = 7;
    CHECK_THROWS_AS(displacement_from_json(broken), Error);
}

TEST_CASE("identity feedback settles on the seed") {
    std::vector<double> speeds;
    for (int i = 0; i < 26; ++i) speeds.push_back(5.0 + i);
    const auto est =
        train_displacement(cruise_segments(speeds, 40, 21), quick_displacement_config(), NoiseConfig{0.0, 0});

    auto held_out = cruise_segments(std::vector<double>{15.0}, 20, 77);
    auto seqs = dataset::extract_outage_sequences(held_out, 3, 4);
    REQUIRE(!seqs.empty());
    for (const auto& seq : seqs) {
        REQUIRE(seq.seed_displacement);
        CHECK(*seq.seed_displacement == 15.0);
        const auto pred = predict_displacement(est, seq);
        CHECK(pred.displacements.size() == 10);
        for (double x : pred.displacements) CHECK(x == doctest::Approx(15.0).epsilon(0.05));
    }
}

TEST_CASE("feedback wiring") {
    std::vector<double> speeds{7.0, 13.0, 19.0, 24.0};
    const std::size_t n = 3;
    const auto est = train_displacement(cruise_segments(speeds, 50, 4), quick_displacement_config(n));
    std::vector<SecondWindow> drive;
    std::mt19937_64 rng(6);
    std::normal_distribution<double> g(0.0, 0.5);
    for (std::size_t i = 0; i < 20; ++i) drive.push_back(window(0, i, g(rng), 15.0 + g(rng)));
    const auto seqs = dataset::extract_outage_sequences(drive, 1, n);
    REQUIRE(!seqs.empty());

    for (const auto& seq : seqs) {
        const auto pred = predict_displacement(est, seq);
        REQUIRE(pred.steps.size() == 10);
        // first step: GPS history then the seed
        CHECK(pred.steps[0].input.back() == *seq.seed_displacement);
        CHECK(pred.steps[0].input[n] == seq.history[seq.history.size() - n].gt_displacement);
        for (std::size_t k = 1; k < pred.steps.size(); ++k) {
            const auto& in = pred.steps[k].input;
            CHECK(in.back() == pred.steps[k - 1].output);
            CHECK(in.back() == pred.displacements[k - 1]);
            CHECK(in[0 + n - 1] == seq.windows[k].ins_accel_feature);

            // Rebuild step k from step k-1's record.
            std::vector<double> manual(pred.steps[k - 1].input.begin(), pred.steps[k - 1].input.begin() + n);
            manual.erase(manual.begin());
            manual.push_back(seq.windows[k].ins_accel_feature);
            manual.insert(manual.end(), pred.steps[k - 1].input.begin() + n + 1, pred.steps[k - 1].input.end());
            manual.push_back(pred.steps[k - 1].output);
            CHECK(manual == in);
            nn::Matrix col(2 * n, 1);
            for (std::size_t i = 0; i < 2 * n; ++i)
                col(static_cast<Eigen::Index>(i), 0) = dataset::apply_scaler(est.scaler, i < n ? 0 : 1, manual[i]);
            const double out = dataset::invert_scaler(est.scaler, 1, nn::predict(est.net, col)(0));
            CHECK(out == pred.steps[k].output);
        }
    }
}

TEST_CASE("prediction preconditions") {
    const std::vector<double> speeds{7.0, 13.0};
    const auto est = train_displacement(cruise_segments(speeds, 30, 4), quick_displacement_config(3));
    const auto drive = cruise_segments(std::vector<double>{10.0}, 20, 1);
    auto seq = dataset::extract_outage_sequences(drive, 1, 3).front();

    auto no_seed = seq;
    no_seed.seed_displacement.reset();
    CHECK_THROWS_WITH_AS(predict_displacement(est, no_seed), doctest::Contains("seed"), Error);
    try {
        predict_displacement(est, no_seed);
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::MissingSeed);
    }

    auto short_history = seq;
    short_history.history.erase(short_history.history.begin());
    try {
        predict_displacement(est, short_history);
        FAIL("expected TooShort");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::TooShort);
    }
}

TEST_CASE("training errors") {
    const std::vector<SecondWindow> none;
    try {
        train_displacement(none, quick_displacement_config());
        FAIL("expected EmptyDataset");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::EmptyDataset);
    }
    // n_steps windows are not enough: one more is needed for a target
    const auto few = cruise_segments(std::vector<double>{5.0, 9.0}, 4, 1);
    try {
        train_displacement(few, quick_displacement_config(4));
        FAIL("expected TooShort");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::TooShort);
    }
    try {
        train_orientation(none, quick_orientation_config());
        FAIL("expected EmptyDataset");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::EmptyDataset);
    }
}

TEST_CASE("orientation learns a gyro bias") {
    const auto train = turning_segments(30, 200, 0.05, 1);
    const auto test = turning_segments(6, 200, 0.05, 2);
    const auto est = train_orientation(train, quick_orientation_config());

    std::vector<double> pred, raw, truth;
    for (const auto& seq : dataset::extract_outage_sequences(test, 10, 1)) {
        const auto p = predict_orientation(est, seq);
        REQUIRE(p.size() == 10);
        for (std::size_t k = 0; k < 10; ++k) {
            pred.push_back(p[k]);
            raw.push_back(seq.windows[k].ins_yaw_rate);
            truth.push_back(seq.windows[k].gt_yaw_rate);
        }
    }
    const double before = mean_abs(raw, truth);
    const double after = mean_abs(pred, truth);
    CHECK(before == doctest::Approx(0.05));
    CHECK(after <= 0.2 * before);
}

TEST_CASE("orientation identity") {
    const auto est = train_orientation(turning_segments(30, 200, 0.0, 3), quick_orientation_config());
    const auto test = turning_segments(6, 200, 0.0, 4);
    std::vector<double> pred, truth;
    for (const auto& seq : dataset::extract_outage_sequences(test, 10, 1)) {
        const auto p = predict_orientation(est, seq);
        for (std::size_t k = 0; k < 10; ++k) {
            pred.push_back(p[k]);
            truth.push_back(seq.windows[k].gt_yaw_rate);
        }
    }
    CHECK(mean_abs(pred, truth) < 0.01);

    std::vector<SecondWindow> steady;
    for (std::size_t i = 0; i < 12; ++i) steady.push_back(window(0, i, 0.0, 10.0, 0.2, 0.2));
    const auto seq = dataset::extract_outage_sequences(steady, 1, 1).front();
    for (double w : predict_orientation(est, seq)) CHECK(w == doctest::Approx(0.2).epsilon(0.05));

    std::vector<SecondWindow> straight;
    for (std::size_t i = 0; i < 12; ++i) straight.push_back(window(0, i, 0.0, 10.0, 0.0, 0.0));
    for (double w : predict_orientation(est, dataset::extract_outage_sequences(straight, 1, 1).front()))
        CHECK(std::abs(w) < 0.01);

    auto bare = seq;
    bare.history.clear();
    try {
        predict_orientation(est, bare);
        FAIL("expected TooShort");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::TooShort);
    }
}

TEST_CASE("compose_track") {
    const std::vector<double> ten(10, 10.0), still(10, 0.0);
    auto north = compose_track(ten, still, 0.0);
    REQUIRE(north.size() == 10);
    CHECK(north.back().position.north == 100.0);
    CHECK(north.back().position.east == 0.0);

    auto east = compose_track(ten, still, std::numbers::pi / 2);
    CHECK(std::abs(east.back().position.north) < 1e-9);
    CHECK(std::abs(east.back().position.east - 100.0) < 1e-9);

    const std::vector<double> turning(10, 0.1);
    const auto track = compose_track(ten, turning, 0.0);
    double psi = 0.0, n = 0.0, e = 0.0;
    for (int k = 0; k < 10; ++k) {
        psi += 0.1;
        n += 10.0 * std::cos(psi);
        e += 10.0 * std::sin(psi);
        CHECK(track[k].psi == psi);
        CHECK(track[k].position.north == n);
        CHECK(track[k].position.east == e);
    }

    const std::vector<double> nine(9, 0.0);
    try {
        compose_track(ten, nine, 0.0);
        FAIL("expected LengthMismatch");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::LengthMismatch);
    }
}
