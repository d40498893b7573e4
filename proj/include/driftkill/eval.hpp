#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "driftkill/dataset.hpp"
#include "driftkill/estimators.hpp"
#include "driftkill/neuralnet.hpp"

namespace driftkill::eval {

inline constexpr std::size_t kOutageLength = dataset::kOutageWindows;

/// Sum of |e_t| over the outage. Throws Error(WrongLength) unless e has 10 entries.
double crse(std::span<const double> e);
/// Signed sum of e_t.
double cae(std::span<const double> e);
/// crse(e) / 10.
double aeps(std::span<const double> e);

struct Summary {
    double max = 0.0;
    double min = 0.0;
    double mean = 0.0;
    double stddev = 0.0;  // population

    friend bool operator==(const Summary&, const Summary&) = default;
};

/// Throws Error(Empty) for no values.
Summary summarize(std::span<const double> values);

/// 100 (ins - nn) / ins. Throws Error(DivZero) for ins == 0.
double improvement_pct(double nn_value, double ins_value);

/// Per-second truth and prediction of one outage. Errors are truth - prediction.
struct SequenceResult {
    std::vector<double> truth_displacement;      // m
    std::vector<double> predicted_displacement;  // m
    std::vector<double> truth_yaw_rate;          // rad/s
    std::vector<double> predicted_yaw_rate;      // rad/s

    std::vector<double> displacement_error() const;
    std::vector<double> yaw_rate_error() const;
    double distance() const;  // sum of the true displacements
};

/// NN and INS-DR results over the same outages.
struct OutageResults {
    std::vector<SequenceResult> nn;
    std::vector<SequenceResult> ins;
};

/// Runs both estimators on every sequence. The INS-DR baseline re-integrates each
/// window's accelerations from the sequence's initial speed, chaining end speeds,
/// and takes the window-mean gyro rate as its yaw-rate estimate.
OutageResults evaluate_outages(const estimators::DisplacementEstimator& displacement,
                               const estimators::OrientationRateEstimator& orientation,
                               std::span<const dataset::OutageSequence> sequences);

/// INS-DR results alone.
std::vector<SequenceResult> ins_baseline(std::span<const dataset::OutageSequence> sequences);

struct MetricBlock {
    Summary crse;
    Summary cae;
    Summary aeps;

    friend bool operator==(const MetricBlock&, const MetricBlock&) = default;
};

struct ScenarioReport {
    std::string scenario_tag;
    std::size_t sequences = 0;
    MetricBlock nn_displacement;
    MetricBlock ins_displacement;
    MetricBlock nn_orientation;
    MetricBlock ins_orientation;
    Summary distance;

    // Per-sequence error evolution, in input order.
    std::vector<std::vector<double>> nn_displacement_errors;
    std::vector<std::vector<double>> ins_displacement_errors;
    std::vector<std::vector<double>> nn_yaw_rate_errors;
    std::vector<std::vector<double>> ins_yaw_rate_errors;

    /// Aligned plain-text table: metric rows against NN / INS DR columns for
    /// displacement (m) and orientation rate (rad/s), the distance block, N_s and
    /// the improvement of the mean CRSE.
    std::string to_text() const;
    std::string to_csv() const;
    /// Two-column "t,error" series for one sequence. `series` is one of
    /// nn_displacement, ins_displacement, nn_yaw_rate, ins_yaw_rate.
    std::string plot_csv(std::string_view series, std::size_t sequence) const;
};

inline constexpr std::string_view kPlotSeries[] = {"nn_displacement", "ins_displacement", "nn_yaw_rate",
                                                   "ins_yaw_rate"};

/// Throws Error(SequenceMismatch) when the two sets differ in count or ground truth,
/// and Error(Empty) when both are empty. Metric cells do not depend on sequence order.
ScenarioReport scenario_report(std::span<const SequenceResult> ins, std::span<const SequenceResult> nn,
                               std::string_view scenario_tag);

struct SweepScenario {
    std::string tag;
    std::vector<dataset::SecondWindow> train;
    std::vector<dataset::OutageSequence> test;  // need at least max(n_steps) history windows
};

struct SweepCell {
    std::optional<double> value;  // max CRSE over the test sequences
    std::string error;            // set when the cell failed
};

enum class SweepModel { Displacement, Orientation };

struct SweepTable {
    std::vector<std::size_t> n_steps;
    std::vector<std::string> scenarios;
    std::vector<std::vector<SweepCell>> displacement;  // [row][scenario]
    std::vector<std::vector<SweepCell>> orientation;

    /// Rows per n_steps, one column per scenario; failed cells read ERR.
    std::string to_text(SweepModel model) const;
    std::string to_csv(SweepModel model) const;
};

/// Trains and evaluates both models for every (n_steps, scenario) pair with the
/// given configs (time_steps overridden by the row). Cell failures are recorded,
/// not thrown.
SweepTable timestep_sweep(std::span<const std::size_t> n_steps, std::span<const SweepScenario> scenarios,
                          const nn::TrainConfig& displacement_config, const nn::TrainConfig& orientation_config);

}  // namespace driftkill::eval
