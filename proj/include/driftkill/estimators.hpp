#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "driftkill/dataset.hpp"
#include "driftkill/kinematics.hpp"
#include "driftkill/model_io.hpp"
#include "driftkill/neuralnet.hpp"

namespace driftkill::estimators {

/// Gaussian perturbation of the displacement inputs during training, in meters.
struct NoiseConfig {
    double sigma = 0.5;
    std::uint64_t seed = 0;
};

/// Published training defaults: lr 0.004, 40 epochs, 10 time steps, dropout 0.1, 2x32
/// hidden units, batch 256. Hidden units use tanh: under 10% dropout a ReLU net
/// shows a large shift between its training and inference outputs on this task.
nn::TrainConfig paper_displacement_config();
/// As above with lr 0.001, 60 epochs, 2 time steps.
nn::TrainConfig paper_orientation_config();

/// Delay-embedded samples in physical units. Each row is feature-major, newest last.
struct SampleSet {
    std::vector<std::vector<double>> inputs;
    std::vector<double> targets;
};

/// Rows [a(t-n+1) .. a(t), x(t-n) + noise .. x(t-1) + noise] with target x(t), where
/// a is the window accel feature and x the GPS displacement. Samples never span a
/// gap between windows.
SampleSet displacement_samples(std::span<const dataset::SecondWindow> windows, std::size_t n_steps,
                               const NoiseConfig& noise);
/// Rows [w(t-n+1) .. w(t)] of INS yaw rate with target the GPS yaw rate at t.
SampleSet orientation_samples(std::span<const dataset::SecondWindow> windows, std::size_t n_steps);

/// Scaler entry names.
inline constexpr const char* kAccel = "accel";
inline constexpr const char* kDisplacement = "displacement";
inline constexpr const char* kInsYawRate = "ins_yaw_rate";
inline constexpr const char* kGpsYawRate = "gps_yaw_rate";

struct DisplacementEstimator {
    nn::DenseNet net;
    dataset::ScalerParams scaler;  // kAccel, kDisplacement (inputs and target)
    std::size_t time_steps = 10;
    double noise_sigma = 0.5;
    nn::TrainConfig config;
    std::vector<double> loss_history;

    friend bool operator==(const DisplacementEstimator&, const DisplacementEstimator&) = default;
};

struct OrientationRateEstimator {
    nn::DenseNet net;
    dataset::ScalerParams scaler;  // kInsYawRate, kGpsYawRate
    std::size_t time_steps = 2;
    nn::TrainConfig config;
    std::vector<double> loss_history;

    friend bool operator==(const OrientationRateEstimator&, const OrientationRateEstimator&) = default;
};

/// Scaler is fitted on the clean training columns; noise is added in meters before
/// scaling and only to the displacement inputs. Throws Error(EmptyDataset) for no
/// windows and Error(TooShort) when no run holds n_steps + 1 contiguous windows.
DisplacementEstimator train_displacement(std::span<const dataset::SecondWindow> train, const nn::TrainConfig& config,
                                         const NoiseConfig& noise);
/// Noise from config.noise_sigma, seeded from config.rng_seed.
DisplacementEstimator train_displacement(std::span<const dataset::SecondWindow> train, const nn::TrainConfig& config);

OrientationRateEstimator train_orientation(std::span<const dataset::SecondWindow> train,
                                           const nn::TrainConfig& config);

/// Record of one closed-loop prediction step.
struct FeedbackStep {
    std::vector<double> input;  // physical units, same layout as displacement_samples rows
    double output = 0.0;        // meters
};

struct DisplacementPrediction {
    std::vector<double> displacements;  // one per outage window, meters
    std::vector<FeedbackStep> steps;
};

/// Closed-loop prediction over the outage. The first step's displacement slots are
/// the pre-outage GPS displacements ending with the seed; each later step drops the
/// oldest slot and appends the previous output. Throws Error(MissingSeed) and
/// Error(TooShort) when the sequence carries fewer than n_steps history windows.
DisplacementPrediction predict_displacement(const DisplacementEstimator& est, const dataset::OutageSequence& seq);

/// Open-loop yaw-rate predictions in rad/s, one per outage window. The gyro keeps
/// running during the outage, so inputs come from history and outage windows alike.
std::vector<double> predict_orientation(const OrientationRateEstimator& est, const dataset::OutageSequence& seq);

struct TrackPoint {
    double psi = 0.0;
    kinematics::NavDisplacement delta;
    kinematics::NavDisplacement position;
};

/// Yaw advanced by rate * window_seconds first, then the window's displacement is
/// projected with that end-of-window yaw and accumulated.
std::vector<TrackPoint> compose_track(std::span<const double> displacements, std::span<const double> yaw_rates,
                                      double psi0, double window_seconds = 1.0);

io::Json to_json(const DisplacementEstimator& est);
io::Json to_json(const OrientationRateEstimator& est);
DisplacementEstimator displacement_from_json(const io::Json& doc);
OrientationRateEstimator orientation_from_json(const io::Json& doc);

}  // namespace driftkill::estimators
