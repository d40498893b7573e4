#include "driftkill/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "driftkill/error.hpp"
#include "text.hpp"

namespace driftkill::eval {

namespace {

void require_outage_length(std::span<const double> e) {
    if (e.size() != kOutageLength) {
        throw Error(ErrorKind::WrongLength, "expected " + std::to_string(kOutageLength) + " per-second errors, got " +
                                                std::to_string(e.size()));
    }
}

std::vector<double> difference(const std::vector<double>& truth, const std::vector<double>& pred) {
    if (truth.size() != pred.size()) throw Error(ErrorKind::LengthMismatch, "truth and prediction lengths differ");
    std::vector<double> e(truth.size());
    for (std::size_t i = 0; i < e.size(); ++i) e[i] = truth[i] - pred[i];
    return e;
}

Summary sorted_summary(std::vector<double> values) {
    std::sort(values.begin(), values.end());
    return summarize(values);
}

MetricBlock block_of(const std::vector<std::vector<double>>& errors) {
    std::vector<double> c, a, p;
    for (const auto& e : errors) {
        c.push_back(crse(e));
        a.push_back(cae(e));
        p.push_back(aeps(e));
    }
    return {sorted_summary(c), sorted_summary(a), sorted_summary(p)};
}

std::string cell(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4f", v);
    return buf;
}

std::string pad(std::string s, std::size_t width, bool left = false) {
    if (s.size() >= width) return s;
    return left ? s + std::string(width - s.size(), ' ') : std::string(width - s.size(), ' ') + s;
}

double summary_field(const Summary& s, std::size_t i) {
    switch (i) {
        case 0: return s.max;
        case 1: return s.min;
        case 2: return s.mean;
        default: return s.stddev;
    }
}

constexpr const char* kStatNames[] = {"max", "min", "mean", "std"};
constexpr const char* kMetricNames[] = {"CRSE", "CAE", "AEPS"};

const Summary& metric_of(const MetricBlock& b, std::size_t m) { return m == 0 ? b.crse : (m == 1 ? b.cae : b.aeps); }

std::string improvement_text(double nn, double ins) {
    if (ins == 0.0) return "n/a";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f%%", improvement_pct(nn, ins));
    return buf;
}

}  // namespace

double crse(std::span<const double> e) {
    require_outage_length(e);
    double sum = 0.0;
    for (double v : e) sum += std::abs(v);
    return sum;
}

double cae(std::span<const double> e) {
    require_outage_length(e);
    double sum = 0.0;
    for (double v : e) sum += v;
    return sum;
}

double aeps(std::span<const double> e) { return crse(e) / static_cast<double>(kOutageLength); }

Summary summarize(std::span<const double> values) {
    if (values.empty()) throw Error(ErrorKind::Empty, "cannot summarize zero sequences");
    Summary s;
    s.max = *std::max_element(values.begin(), values.end());
    s.min = *std::min_element(values.begin(), values.end());
    if (s.max == s.min) {
        s.mean = s.min;
        return s;
    }
    const auto n = static_cast<double>(values.size());
    double sum = 0.0;
    for (double v : values) sum += v;
    s.mean = std::clamp(sum / n, s.min, s.max);
    double sq = 0.0;
    for (double v : values) sq += (v - s.mean) * (v - s.mean);
    s.stddev = std::sqrt(sq / n);
    return s;
}

double improvement_pct(double nn_value, double ins_value) {
    if (ins_value == 0.0) throw Error(ErrorKind::DivZero, "INS reference value is zero");
    return 100.0 * (ins_value - nn_value) / ins_value;
}

std::vector<double> SequenceResult::displacement_error() const {
    return difference(truth_displacement, predicted_displacement);
}

std::vector<double> SequenceResult::yaw_rate_error() const { return difference(truth_yaw_rate, predicted_yaw_rate); }

double SequenceResult::distance() const {
    double d = 0.0;
    for (double x : truth_displacement) d += x;
    return d;
}

namespace {

SequenceResult truth_of(const dataset::OutageSequence& seq) {
    SequenceResult r;
    for (const auto& w : seq.windows) {
        r.truth_displacement.push_back(w.gt_displacement);
        r.truth_yaw_rate.push_back(w.gt_yaw_rate);
    }
    return r;
}

}  // namespace

std::vector<SequenceResult> ins_baseline(std::span<const dataset::OutageSequence> sequences) {
    std::vector<SequenceResult> out;
    for (const auto& seq : sequences) {
        SequenceResult r = truth_of(seq);
        double v = seq.initial_v;
        for (const auto& w : seq.windows) {
            r.predicted_displacement.push_back(dataset::rechained_displacement(w, v));
            r.predicted_yaw_rate.push_back(w.ins_yaw_rate);
            v = dataset::rechained_v_end(w, v);
        }
        out.push_back(std::move(r));
    }
    return out;
}

OutageResults evaluate_outages(const estimators::DisplacementEstimator& displacement,
                               const estimators::OrientationRateEstimator& orientation,
                               std::span<const dataset::OutageSequence> sequences) {
    OutageResults results;
    results.ins = ins_baseline(sequences);
    for (const auto& seq : sequences) {
        SequenceResult r = truth_of(seq);
        r.predicted_displacement = estimators::predict_displacement(displacement, seq).displacements;
        r.predicted_yaw_rate = estimators::predict_orientation(orientation, seq);
        results.nn.push_back(std::move(r));
    }
    return results;
}

ScenarioReport scenario_report(std::span<const SequenceResult> ins, std::span<const SequenceResult> nn,
                               std::string_view scenario_tag) {
    if (ins.size() != nn.size()) {
        throw Error(ErrorKind::SequenceMismatch, std::to_string(nn.size()) + " NN results against " +
                                                     std::to_string(ins.size()) + " INS results");
    }
    if (ins.empty()) throw Error(ErrorKind::Empty, "no sequences to report");
    ScenarioReport report;
    report.scenario_tag = std::string(scenario_tag);
    report.sequences = ins.size();
    std::vector<double> distances;
    for (std::size_t i = 0; i < ins.size(); ++i) {
        if (ins[i].truth_displacement != nn[i].truth_displacement || ins[i].truth_yaw_rate != nn[i].truth_yaw_rate) {
            throw Error(ErrorKind::SequenceMismatch,
                        "sequence " + std::to_string(i) + " has different ground truth in the two result sets");
        }
        report.nn_displacement_errors.push_back(nn[i].displacement_error());
        report.ins_displacement_errors.push_back(ins[i].displacement_error());
        report.nn_yaw_rate_errors.push_back(nn[i].yaw_rate_error());
        report.ins_yaw_rate_errors.push_back(ins[i].yaw_rate_error());
        distances.push_back(ins[i].distance());
    }
    report.nn_displacement = block_of(report.nn_displacement_errors);
    report.ins_displacement = block_of(report.ins_displacement_errors);
    report.nn_orientation = block_of(report.nn_yaw_rate_errors);
    report.ins_orientation = block_of(report.ins_yaw_rate_errors);
    report.distance = sorted_summary(distances);
    return report;
}

std::string ScenarioReport::to_text() const {
    std::ostringstream out;
    out << "Scenario: " << scenario_tag << "\n\n";
    constexpr std::size_t kLabel = 12, kCol = 14;
    out << pad("", kLabel, true) << pad("NN (m)", kCol) << pad("INS DR (m)", kCol) << pad("NN (rad/s)", kCol)
        << pad("INS DR (rad/s)", kCol + 2) << "\n";
    const MetricBlock* blocks[] = {&nn_displacement, &ins_displacement, &nn_orientation, &ins_orientation};
    for (std::size_t m = 0; m < 3; ++m) {
        for (std::size_t s = 0; s < 4; ++s) {
            out << pad(std::string(kMetricNames[m]) + " " + kStatNames[s], kLabel, true);
            for (std::size_t b = 0; b < 4; ++b)
                out << pad(cell(summary_field(metric_of(*blocks[b], m), s)), b == 3 ? kCol + 2 : kCol);
            out << "\n";
        }
    }
    out << "\nDistance covered (m)\n";
    for (std::size_t s = 0; s < 3; ++s)
        out << pad(kStatNames[s], kLabel, true) << pad(cell(summary_field(distance, s)), kCol) << "\n";
    out << "\nNumber of sequences evaluated: " << sequences << "\n";
    out << "Improvement in mean CRSE: displacement "
        << improvement_text(nn_displacement.crse.mean, ins_displacement.crse.mean) << ", orientation rate "
        << improvement_text(nn_orientation.crse.mean, ins_orientation.crse.mean) << "\n";
    return out.str();
}

std::string ScenarioReport::to_csv() const {
    std::ostringstream out;
    out << "scenario,metric,statistic,nn_m,ins_m,nn_rad_s,ins_rad_s\n";
    const MetricBlock* blocks[] = {&nn_displacement, &ins_displacement, &nn_orientation, &ins_orientation};
    for (std::size_t m = 0; m < 3; ++m) {
        for (std::size_t s = 0; s < 4; ++s) {
            out << scenario_tag << ',' << kMetricNames[m] << ',' << kStatNames[s];
            for (const auto* b : blocks) out << ',' << detail::format_double(summary_field(metric_of(*b, m), s));
            out << "\n";
        }
    }
    for (std::size_t s = 0; s < 3; ++s)
        out << scenario_tag << ",distance," << kStatNames[s] << ',' << detail::format_double(summary_field(distance, s))
            << ",,,\n";
    out << scenario_tag << ",sequences,count," << sequences << ",,,\n";
    return out.str();
}

std::string ScenarioReport::plot_csv(std::string_view series, std::size_t sequence) const {
    const std::vector<std::vector<double>>* source = nullptr;
    if (series == "nn_displacement") source = &nn_displacement_errors;
    if (series == "ins_displacement") source = &ins_displacement_errors;
    if (series == "nn_yaw_rate") source = &nn_yaw_rate_errors;
    if (series == "ins_yaw_rate") source = &ins_yaw_rate_errors;
    if (source == nullptr) throw Error(ErrorKind::InvalidInput, "unknown plot series `" + std::string(series) + "`");
    const auto& e = source->at(sequence);
    std::ostringstream out;
    out << "t,error\n";
    for (std::size_t k = 0; k < e.size(); ++k) out << k + 1 << ',' << detail::format_double(e[k]) << "\n";
    return out.str();
}

namespace {

double max_crse(const std::vector<SequenceResult>& results, bool displacement) {
    double worst = 0.0;
    for (const auto& r : results) worst = std::max(worst, crse(displacement ? r.displacement_error() : r.yaw_rate_error()));
    return worst;
}

template <typename Fn>
SweepCell run_cell(Fn&& fn) {
    SweepCell c;
    try {
        c.value = fn();
    } catch (const std::exception& e) {
        c.error = e.what();
    }
    return c;
}

std::string cell_text(const SweepCell& c) { return c.value ? cell(*c.value) : "ERR"; }

}  // namespace

SweepTable timestep_sweep(std::span<const std::size_t> n_steps, std::span<const SweepScenario> scenarios,
                          const nn::TrainConfig& displacement_config, const nn::TrainConfig& orientation_config) {
    if (n_steps.empty()) throw Error(ErrorKind::InvalidInput, "sweep needs at least one n_steps value");
    SweepTable table;
    table.n_steps.assign(n_steps.begin(), n_steps.end());
    for (const auto& s : scenarios) table.scenarios.push_back(s.tag);
    for (std::size_t n : n_steps) {
        auto& drow = table.displacement.emplace_back();
        auto& orow = table.orientation.emplace_back();
        for (const auto& s : scenarios) {
            drow.push_back(run_cell([&] {
                auto cfg = displacement_config;
                cfg.time_steps = n;
                const auto est = estimators::train_displacement(s.train, cfg);
                std::vector<SequenceResult> results;
                for (const auto& seq : s.test) {
                    SequenceResult r;
                    for (const auto& w : seq.windows) r.truth_displacement.push_back(w.gt_displacement);
                    r.predicted_displacement = estimators::predict_displacement(est, seq).displacements;
                    results.push_back(std::move(r));
                }
                if (results.empty()) throw Error(ErrorKind::Empty, "no test sequences");
                return max_crse(results, true);
            }));
            orow.push_back(run_cell([&] {
                auto cfg = orientation_config;
                cfg.time_steps = n;
                const auto est = estimators::train_orientation(s.train, cfg);
                std::vector<SequenceResult> results;
                for (const auto& seq : s.test) {
                    SequenceResult r;
                    for (const auto& w : seq.windows) r.truth_yaw_rate.push_back(w.gt_yaw_rate);
                    r.predicted_yaw_rate = estimators::predict_orientation(est, seq);
                    results.push_back(std::move(r));
                }
                if (results.empty()) throw Error(ErrorKind::Empty, "no test sequences");
                return max_crse(results, false);
            }));
        }
    }
    return table;
}

std::string SweepTable::to_text(SweepModel model) const {
    const auto& cells = model == SweepModel::Displacement ? displacement : orientation;
    std::ostringstream out;
    out << (model == SweepModel::Displacement ? "Max CRSE, displacement (m)\n" : "Max CRSE, orientation rate (rad/s)\n");
    constexpr std::size_t kCol = 14;
    out << pad("Time steps", 12, true);
    for (const auto& s : scenarios) out << pad(s, kCol);
    out << "\n";
    for (std::size_t r = 0; r < n_steps.size(); ++r) {
        out << pad(std::to_string(n_steps[r]), 12, true);
        for (const auto& c : cells[r]) out << pad(cell_text(c), kCol);
        out << "\n";
    }
    return out.str();
}

std::string SweepTable::to_csv(SweepModel model) const {
    const auto& cells = model == SweepModel::Displacement ? displacement : orientation;
    std::ostringstream out;
    out << "n_steps";
    for (const auto& s : scenarios) out << ',' << s;
    out << "\n";
    for (std::size_t r = 0; r < n_steps.size(); ++r) {
        out << n_steps[r];
        for (const auto& c : cells[r]) out << ',' << (c.value ? detail::format_double(*c.value) : std::string("ERR"));
        out << "\n";
    }
    return out.str();
}

}  // namespace driftkill::eval
