#include "driftkill/estimators.hpp"

#include <random>
#include <string>

#include "driftkill/error.hpp"

namespace driftkill::estimators {

using dataset::SecondWindow;

namespace {

constexpr std::uint64_t kNoiseStream = 0x9e3779b97f4a7c15ull;

// [begin, end) index ranges of contiguous windows.
std::vector<std::pair<std::size_t, std::size_t>> runs(std::span<const SecondWindow> windows) {
    std::vector<std::pair<std::size_t, std::size_t>> out;
    std::size_t begin = 0;
    for (std::size_t i = 1; i <= windows.size(); ++i) {
        if (i == windows.size() || !dataset::contiguous(windows[i - 1], windows[i])) {
            if (i > begin) out.emplace_back(begin, i);
            begin = i;
        }
    }
    return out;
}

nn::Matrix scaled_matrix(const std::vector<std::vector<double>>& rows, const dataset::ScalerParams& scaler,
                         const std::vector<std::size_t>& column_feature) {
    const auto d = static_cast<Eigen::Index>(column_feature.size());
    nn::Matrix m(d, static_cast<Eigen::Index>(rows.size()));
    for (std::size_t j = 0; j < rows.size(); ++j)
        for (Eigen::Index i = 0; i < d; ++i)
            m(i, static_cast<Eigen::Index>(j)) = dataset::apply_scaler(scaler, column_feature[i], rows[j][i]);
    return m;
}

std::vector<double> scaled(std::span<const double> values, const dataset::ScalerParams& scaler, std::size_t f) {
    std::vector<double> out;
    out.reserve(values.size());
    for (double v : values) out.push_back(dataset::apply_scaler(scaler, f, v));
    return out;
}

// Column -> scaler entry for a displacement input row.
std::vector<std::size_t> displacement_layout(std::size_t n) {
    std::vector<std::size_t> layout(n, 0);
    layout.resize(2 * n, 1);
    return layout;
}

void require_windows(std::span<const SecondWindow> windows) {
    if (windows.empty()) throw Error(ErrorKind::EmptyDataset, "no training windows");
}

void require_samples(const SampleSet& s, std::size_t needed) {
    if (s.targets.empty()) {
        throw Error(ErrorKind::TooShort,
                    "no run of " + std::to_string(needed) + " contiguous windows in the training data");
    }
}

double scalar_output(const nn::DenseNet& net, const std::vector<double>& x) {
    const nn::Matrix col = Eigen::Map<const nn::Vector>(x.data(), static_cast<Eigen::Index>(x.size()));
    return nn::predict(net, col)(0);
}

}  // namespace

nn::TrainConfig paper_displacement_config() {
    nn::TrainConfig c;
    c.learning_rate = 0.004;
    c.epochs = 40;
    c.time_steps = 10;
    c.activation = nn::Activation::Tanh;
    return c;
}

nn::TrainConfig paper_orientation_config() {
    nn::TrainConfig c;
    c.learning_rate = 0.001;
    c.epochs = 60;
    c.time_steps = 2;
    c.activation = nn::Activation::Tanh;
    return c;
}

SampleSet displacement_samples(std::span<const SecondWindow> windows, std::size_t n, const NoiseConfig& noise) {
    if (n == 0) throw Error(ErrorKind::InvalidInput, "time_steps must be at least 1");
    if (!(noise.sigma >= 0.0)) throw Error(ErrorKind::InvalidInput, "noise sigma must be non-negative");
    std::mt19937_64 rng(noise.seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    SampleSet out;
    for (const auto& [begin, end] : runs(windows)) {
        for (std::size_t t = begin + n; t < end; ++t) {
            std::vector<double> row;
            row.reserve(2 * n);
            for (std::size_t k = t + 1 - n; k <= t; ++k) row.push_back(windows[k].ins_accel_feature);
            for (std::size_t k = t - n; k < t; ++k) {
                const double e = noise.sigma > 0.0 ? noise.sigma * gauss(rng) : 0.0;
                row.push_back(windows[k].gt_displacement + e);
            }
            out.inputs.push_back(std::move(row));
            out.targets.push_back(windows[t].gt_displacement);
        }
    }
    return out;
}

SampleSet orientation_samples(std::span<const SecondWindow> windows, std::size_t n) {
    if (n == 0) throw Error(ErrorKind::InvalidInput, "time_steps must be at least 1");
    SampleSet out;
    for (const auto& [begin, end] : runs(windows)) {
        for (std::size_t t = begin + n - 1; t < end; ++t) {
            std::vector<double> row;
            for (std::size_t k = t + 1 - n; k <= t; ++k) row.push_back(windows[k].ins_yaw_rate);
            out.inputs.push_back(std::move(row));
            out.targets.push_back(windows[t].gt_yaw_rate);
        }
    }
    return out;
}

DisplacementEstimator train_displacement(std::span<const SecondWindow> train, const nn::TrainConfig& config,
                                         const NoiseConfig& noise) {
    config.validate();
    require_windows(train);
    const std::size_t n = config.time_steps;
    const SampleSet samples = displacement_samples(train, n, noise);
    require_samples(samples, n + 1);

    std::vector<double> accel, disp;
    for (const auto& w : train) {
        accel.push_back(w.ins_accel_feature);
        disp.push_back(w.gt_displacement);
    }
    const std::vector<std::string> names{kAccel, kDisplacement};
    const std::vector<std::vector<double>> columns{accel, disp};

    DisplacementEstimator est;
    est.scaler = dataset::fit_scaler_columns(names, columns, dataset::DegeneratePolicy::Flag);
    est.time_steps = n;
    est.noise_sigma = noise.sigma;
    est.config = config;

    const nn::Matrix x = scaled_matrix(samples.inputs, est.scaler, displacement_layout(n));
    const auto y = scaled(samples.targets, est.scaler, 1);
    auto result = nn::train(nn::DenseNet::glorot(2 * n, config.hidden, config.activation, config.rng_seed), x, y,
                            config);
    est.net = std::move(result.net);
    est.loss_history = std::move(result.loss_history);
    return est;
}

DisplacementEstimator train_displacement(std::span<const SecondWindow> train, const nn::TrainConfig& config) {
    return train_displacement(train, config, NoiseConfig{config.noise_sigma, config.rng_seed ^ kNoiseStream});
}

OrientationRateEstimator train_orientation(std::span<const SecondWindow> train, const nn::TrainConfig& config) {
    config.validate();
    require_windows(train);
    const std::size_t n = config.time_steps;
    const SampleSet samples = orientation_samples(train, n);
    require_samples(samples, n);

    std::vector<double> ins, gps;
    for (const auto& w : train) {
        ins.push_back(w.ins_yaw_rate);
        gps.push_back(w.gt_yaw_rate);
    }
    const std::vector<std::string> names{kInsYawRate, kGpsYawRate};
    const std::vector<std::vector<double>> columns{ins, gps};

    OrientationRateEstimator est;
    est.scaler = dataset::fit_scaler_columns(names, columns, dataset::DegeneratePolicy::Flag);
    est.time_steps = n;
    est.config = config;

    const nn::Matrix x = scaled_matrix(samples.inputs, est.scaler, std::vector<std::size_t>(n, 0));
    const auto y = scaled(samples.targets, est.scaler, 1);
    auto result = nn::train(nn::DenseNet::glorot(n, config.hidden, config.activation, config.rng_seed), x, y,
                            config);
    est.net = std::move(result.net);
    est.loss_history = std::move(result.loss_history);
    return est;
}

DisplacementPrediction predict_displacement(const DisplacementEstimator& est, const dataset::OutageSequence& seq) {
    if (!seq.seed_displacement) throw Error(ErrorKind::MissingSeed, "outage sequence has no GPS seed displacement");
    const std::size_t n = est.time_steps;
    if (seq.history.size() < n) {
        throw Error(ErrorKind::TooShort, "displacement model needs " + std::to_string(n) +
                                             " pre-outage windows, sequence has " +
                                             std::to_string(seq.history.size()));
    }

    // Accel stream: history then outage. Displacement slots start from GPS truth.
    std::vector<double> accel;
    for (std::size_t k = seq.history.size() - (n - 1); k < seq.history.size(); ++k)
        accel.push_back(seq.history[k].ins_accel_feature);
    std::vector<double> slots;
    for (std::size_t k = seq.history.size() - n; k + 1 < seq.history.size(); ++k)
        slots.push_back(seq.history[k].gt_displacement);
    slots.push_back(*seq.seed_displacement);

    const auto layout = displacement_layout(n);
    DisplacementPrediction out;
    std::vector<double> scaled_row(2 * n);
    for (const auto& w : seq.windows) {
        accel.push_back(w.ins_accel_feature);
        FeedbackStep step;
        step.input.assign(accel.end() - static_cast<std::ptrdiff_t>(n), accel.end());
        step.input.insert(step.input.end(), slots.begin(), slots.end());
        for (std::size_t i = 0; i < step.input.size(); ++i)
            scaled_row[i] = dataset::apply_scaler(est.scaler, layout[i], step.input[i]);
        step.output = dataset::invert_scaler(est.scaler, 1, scalar_output(est.net, scaled_row));

        slots.erase(slots.begin());
        slots.push_back(step.output);
        out.displacements.push_back(step.output);
        out.steps.push_back(std::move(step));
    }
    return out;
}

std::vector<double> predict_orientation(const OrientationRateEstimator& est, const dataset::OutageSequence& seq) {
    const std::size_t n = est.time_steps;
    if (seq.history.size() + 1 < n) {
        throw Error(ErrorKind::TooShort, "orientation model needs " + std::to_string(n - 1) +
                                             " pre-outage windows, sequence has " +
                                             std::to_string(seq.history.size()));
    }
    std::vector<double> rates;
    for (std::size_t k = seq.history.size() + 1 - n; k < seq.history.size(); ++k)
        rates.push_back(seq.history[k].ins_yaw_rate);
    std::vector<double> out;
    std::vector<double> row(n);
    for (const auto& w : seq.windows) {
        rates.push_back(w.ins_yaw_rate);
        for (std::size_t i = 0; i < n; ++i)
            row[i] = dataset::apply_scaler(est.scaler, 0, rates[rates.size() - n + i]);
        out.push_back(dataset::invert_scaler(est.scaler, 1, scalar_output(est.net, row)));
    }
    return out;
}

std::vector<TrackPoint> compose_track(std::span<const double> displacements, std::span<const double> yaw_rates,
                                      double psi0, double window_seconds) {
    if (displacements.size() != yaw_rates.size())
        throw Error(ErrorKind::LengthMismatch, "one yaw rate per displacement");
    std::vector<TrackPoint> track;
    track.reserve(displacements.size());
    double psi = psi0;
    kinematics::NavDisplacement position;
    for (std::size_t k = 0; k < displacements.size(); ++k) {
        psi += yaw_rates[k] * window_seconds;
        TrackPoint p;
        p.psi = psi;
        p.delta = kinematics::body_to_nav(displacements[k], psi);
        position += p.delta;
        p.position = position;
        track.push_back(p);
    }
    return track;
}

namespace {

constexpr int kEstimatorVersion = 1;

io::Json common_json(const char* kind, const nn::DenseNet& net, const dataset::ScalerParams& scaler,
                     std::size_t time_steps, const nn::TrainConfig& config, const std::vector<double>& losses) {
    return io::Json{{"format", "driftkill-estimator"},
                    {"version", kEstimatorVersion},
                    {"kind", kind},
                    {"time_steps", time_steps},
                    {"config", io::to_json(config)},
                    {"scaler", io::to_json(scaler)},
                    {"loss_history", losses},
                    {"network", io::to_json(net)}};
}

const io::Json& checked(const io::Json& doc, const char* kind) {
    try {
        if (doc.at("format") != "driftkill-estimator") throw Error(ErrorKind::Format, "not a driftkill estimator");
        if (doc.at("version") != kEstimatorVersion) throw Error(ErrorKind::Format, "unsupported estimator version");
        if (doc.at("kind") != kind) {
            throw Error(ErrorKind::Format,
                        "expected a " + std::string(kind) + " estimator, found " + doc.at("kind").dump());
        }
    } catch (const io::Json::exception& e) {
        throw Error(ErrorKind::Format, e.what());
    }
    return doc;
}

template <typename T>
T get(const io::Json& doc, const char* name) {
    try {
        return doc.at(name).get<T>();
    } catch (const io::Json::exception&) {
        throw Error(ErrorKind::Format, std::string("estimator field `") + name + "` is missing or malformed");
    }
}

}  // namespace

io::Json to_json(const DisplacementEstimator& est) {
    auto doc = common_json("displacement", est.net, est.scaler, est.time_steps, est.config, est.loss_history);
    doc["noise_sigma"] = est.noise_sigma;
    return doc;
}

io::Json to_json(const OrientationRateEstimator& est) {
    return common_json("orientation", est.net, est.scaler, est.time_steps, est.config, est.loss_history);
}

DisplacementEstimator displacement_from_json(const io::Json& doc) {
    checked(doc, "displacement");
    DisplacementEstimator est;
    est.net = io::dense_net_from_json(get<io::Json>(doc, "network"));
    est.scaler = io::scaler_from_json(get<io::Json>(doc, "scaler"));
    est.time_steps = get<std::size_t>(doc, "time_steps");
    est.noise_sigma = get<double>(doc, "noise_sigma");
    est.config = io::train_config_from_json(get<io::Json>(doc, "config"));
    est.loss_history = get<std::vector<double>>(doc, "loss_history");
    if (est.net.input_dim() != 2 * est.time_steps || est.scaler.entries.size() != 2)
        throw Error(ErrorKind::Format, "displacement estimator layout does not match its time steps");
    return est;
}

OrientationRateEstimator orientation_from_json(const io::Json& doc) {
    checked(doc, "orientation");
    OrientationRateEstimator est;
    est.net = io::dense_net_from_json(get<io::Json>(doc, "network"));
    est.scaler = io::scaler_from_json(get<io::Json>(doc, "scaler"));
    est.time_steps = get<std::size_t>(doc, "time_steps");
    est.config = io::train_config_from_json(get<io::Json>(doc, "config"));
    est.loss_history = get<std::vector<double>>(doc, "loss_history");
    if (est.net.input_dim() != est.time_steps || est.scaler.entries.size() != 2)
        throw Error(ErrorKind::Format, "orientation estimator layout does not match its time steps");
    return est;
}

}  // namespace driftkill::estimators
