#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <fstream>
#include <vector>

#include "driftkill/dataset.hpp"
#include "driftkill/error.hpp"
#include "driftkill/estimators.hpp"
#include "driftkill/eval.hpp"
#include "driftkill/geodesy.hpp"
#include "driftkill/kinematics.hpp"
#include "driftkill/model_io.hpp"
#include "driftkill/synth.hpp"

namespace py = pybind11;
using namespace driftkill;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

// Records travel as (N, 6) arrays: t, accel_long, yaw_rate, heading, lat, lon.
Array to_array(const std::vector<dataset::ImuRecord>& records) {
    Array out({static_cast<py::ssize_t>(records.size()), py::ssize_t{6}});
    auto a = out.mutable_unchecked<2>();
    for (std::size_t i = 0; i < records.size(); ++i) {
        const auto& r = records[i];
        const auto k = static_cast<py::ssize_t>(i);
        a(k, 0) = r.t;
        a(k, 1) = r.accel_long;
        a(k, 2) = r.yaw_rate;
        a(k, 3) = r.heading;
        a(k, 4) = r.lat;
        a(k, 5) = r.lon;
    }
    return out;
}

std::vector<dataset::ImuRecord> from_array(const Array& arr) {
    if (arr.ndim() != 2 || arr.shape(1) != 6)
        throw Error(ErrorKind::DimensionMismatch, "records must be an (N, 6) array");
    const auto a = arr.unchecked<2>();
    std::vector<dataset::ImuRecord> out(static_cast<std::size_t>(arr.shape(0)));
    for (py::ssize_t i = 0; i < arr.shape(0); ++i) out[static_cast<std::size_t>(i)] = {a(i, 0), a(i, 1), a(i, 2), a(i, 3), a(i, 4), a(i, 5)};
    return out;
}

std::vector<double> to_vector(const Array& arr) {
    if (arr.ndim() != 1) throw Error(ErrorKind::DimensionMismatch, "expected a 1-D array");
    return {arr.data(), arr.data() + arr.size()};
}

py::dict summary_dict(const eval::Summary& s) {
    py::dict d;
    d["max"] = s.max;
    d["min"] = s.min;
    d["mean"] = s.mean;
    d["std"] = s.stddev;
    return d;
}

py::dict block_dict(const eval::MetricBlock& b) {
    py::dict d;
    d["crse"] = summary_dict(b.crse);
    d["cae"] = summary_dict(b.cae);
    d["aeps"] = summary_dict(b.aeps);
    return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "INS dead reckoning, neural displacement correction and outage metrics.";

    PYBIND11_CONSTINIT static py::gil_safe_call_once_and_store<py::object> error_type;
    error_type.call_once_and_store_result([&]() { return py::object(py::exception<Error>(m, "DriftkillError")); });
    // The instance carries the error kind so callers can branch without parsing messages.
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const Error& e) {
            const py::object& type = error_type.get_stored();
            py::object exc = type(py::str(e.what()));
            exc.attr("kind") = std::string(to_string(e.kind()));
            PyErr_SetObject(type.ptr(), exc.ptr());
        }
    });

    // geodesy / kinematics
    m.def(
        "vincenty_inverse",
        [](double lat1, double lon1, double lat2, double lon2) {
            return geodesy::vincenty_inverse({lat1, lon1}, {lat2, lon2});
        },
        py::arg("lat1"), py::arg("lon1"), py::arg("lat2"), py::arg("lon2"), "WGS-84 distance in meters.");
    m.def("heading_delta", &geodesy::heading_delta, py::arg("h_prev_deg"), py::arg("h_curr_deg"));

    m.def(
        "dead_reckon",
        [](double psi0, double v0, double accel_bias, const Array& accels, const Array& yaw_rates,
           std::size_t samples_per_window, double dt) {
            const auto acc = to_vector(accels);
            const auto rate = to_vector(yaw_rates);
            if (acc.size() != rate.size()) throw Error(ErrorKind::LengthMismatch, "accels and yaw_rates differ in length");
            if (samples_per_window == 0) throw Error(ErrorKind::InvalidInput, "samples_per_window must be positive");
            std::vector<kinematics::ImuWindow> windows;
            for (std::size_t i = 0; i < acc.size(); i += samples_per_window) {
                const std::size_t j = std::min(acc.size(), i + samples_per_window);
                windows.push_back({{acc.begin() + i, acc.begin() + j}, {rate.begin() + i, rate.begin() + j}});
            }
            const auto steps = kinematics::dead_reckon(psi0, v0, accel_bias, windows, {dt});
            Array out({static_cast<py::ssize_t>(steps.size()), py::ssize_t{3}});
            auto a = out.mutable_unchecked<2>();
            for (std::size_t i = 0; i < steps.size(); ++i) {
                const auto k = static_cast<py::ssize_t>(i);
                a(k, 0) = steps[i].psi;
                a(k, 1) = steps[i].position.north;
                a(k, 2) = steps[i].position.east;
            }
            return out;
        },
        py::arg("psi0"), py::arg("v0"), py::arg("accel_bias"), py::arg("accels"), py::arg("yaw_rates"),
        py::arg("samples_per_window") = 10, py::arg("dt") = 0.1,
        "Per-window [psi, north, east] rows, positions cumulative from the start.");

    // metrics
    m.def("crse", [](const Array& e) { return eval::crse(to_vector(e)); });
    m.def("cae", [](const Array& e) { return eval::cae(to_vector(e)); });
    m.def("aeps", [](const Array& e) { return eval::aeps(to_vector(e)); });
    m.def("summarize", [](const Array& v) { return summary_dict(eval::summarize(to_vector(v))); });
    m.def("improvement_pct", &eval::improvement_pct, py::arg("nn"), py::arg("ins"));

    // synthetic data and files
    py::class_<synth::ScenarioSpec>(m, "ScenarioSpec")
        .def(py::init([](const std::string& kind, double duration, double v0) {
                 synth::ScenarioSpec s;
                 s.kind = synth::parse_scenario_kind(kind);
                 s.duration = duration;
                 s.v0 = v0;
                 return s;
             }),
             py::arg("kind") = "straight", py::arg("duration") = 10.0, py::arg("v0") = 20.0)
        .def_property(
            "kind", [](const synth::ScenarioSpec& s) { return std::string(synth::to_string(s.kind)); },
            [](synth::ScenarioSpec& s, const std::string& k) { s.kind = synth::parse_scenario_kind(k); })
        .def_readwrite("duration", &synth::ScenarioSpec::duration)
        .def_readwrite("v0", &synth::ScenarioSpec::v0)
        .def_readwrite("accel", &synth::ScenarioSpec::accel)
        .def_readwrite("decel", &synth::ScenarioSpec::decel)
        .def_readwrite("brake_start", &synth::ScenarioSpec::brake_start)
        .def_readwrite("restart_after", &synth::ScenarioSpec::restart_after)
        .def_readwrite("recover_accel", &synth::ScenarioSpec::recover_accel)
        .def_readwrite("radius", &synth::ScenarioSpec::radius)
        .def_readwrite("turn_direction", &synth::ScenarioSpec::turn_direction)
        .def_readwrite("jerk_amplitude", &synth::ScenarioSpec::jerk_amplitude)
        .def_readwrite("jerk_period", &synth::ScenarioSpec::jerk_period)
        .def_readwrite("turn_amplitude", &synth::ScenarioSpec::turn_amplitude)
        .def_readwrite("turn_period", &synth::ScenarioSpec::turn_period)
        .def_readwrite("heading0_deg", &synth::ScenarioSpec::heading0_deg)
        .def_property(
            "origin", [](const synth::ScenarioSpec& s) { return std::pair(s.origin.lat(), s.origin.lon()); },
            [](synth::ScenarioSpec& s, std::pair<double, double> p) { s.origin = geodesy::GeoPoint(p.first, p.second); });

    m.def(
        "gen_records",
        [](const synth::ScenarioSpec& spec, const std::string& corruption, std::uint64_t seed) {
            return to_array(synth::corrupt_imu(synth::gen_scenario(spec), synth::Corruption::preset(corruption, seed)));
        },
        py::arg("spec"), py::arg("corruption") = "none", py::arg("seed") = 0);
    m.def(
        "random_drives",
        [](const std::string& kind, std::size_t drives, double duration, const std::string& corruption,
           std::uint64_t seed) {
            return to_array(synth::random_drives(synth::parse_scenario_kind(kind), drives, duration, corruption, seed));
        },
        py::arg("kind"), py::arg("drives"), py::arg("duration"), py::arg("corruption") = "consumer-imu",
        py::arg("seed") = 0);
    m.def(
        "load_records",
        [](const std::string& path, const std::string& columns) {
            return to_array(dataset::load_records(path, dataset::ColumnMap::preset(columns)).records);
        },
        py::arg("path"), py::arg("columns") = "native");
    m.def(
        "write_records",
        [](const std::string& path, const Array& records) {
            std::ofstream out(path, std::ios::binary);
            if (!out) throw Error(ErrorKind::InvalidInput, "cannot open " + path);
            dataset::write_records(out, from_array(records));
        },
        py::arg("path"), py::arg("records"));

    // windows and sequences
    py::class_<dataset::SecondWindow>(m, "SecondWindow")
        .def_readonly("segment", &dataset::SecondWindow::segment)
        .def_readonly("index", &dataset::SecondWindow::index)
        .def_readonly("t_start", &dataset::SecondWindow::t_start)
        .def_readonly("ins_displacement", &dataset::SecondWindow::ins_displacement)
        .def_readonly("ins_accel_feature", &dataset::SecondWindow::ins_accel_feature)
        .def_readonly("ins_yaw_rate", &dataset::SecondWindow::ins_yaw_rate)
        .def_readonly("v_start", &dataset::SecondWindow::v_start)
        .def_readonly("gt_displacement", &dataset::SecondWindow::gt_displacement)
        .def_readonly("gt_yaw_rate", &dataset::SecondWindow::gt_yaw_rate);

    py::class_<dataset::OutageSequence>(m, "OutageSequence")
        .def_readonly("scenario_tag", &dataset::OutageSequence::scenario_tag)
        .def_readonly("initial_psi", &dataset::OutageSequence::initial_psi)
        .def_readonly("initial_v", &dataset::OutageSequence::initial_v)
        .def_readonly("seed_displacement", &dataset::OutageSequence::seed_displacement)
        .def_readonly("history", &dataset::OutageSequence::history)
        .def_readonly("windows", &dataset::OutageSequence::windows);

    m.def(
        "build_windows",
        [](const Array& records, double accel_bias) {
            return dataset::build_windows(dataset::segment_records(from_array(records)), accel_bias).windows;
        },
        py::arg("records"), py::arg("accel_bias") = 0.0, "1 s windows; segments split at time gaps.");
    m.def(
        "extract_outage_sequences",
        [](const std::vector<dataset::SecondWindow>& w, std::size_t stride, std::size_t history, const std::string& tag) {
            return dataset::extract_outage_sequences(w, stride, history, tag);
        },
        py::arg("windows"), py::arg("stride"),
          py::arg("history") = 1, py::arg("tag") = "");

    // estimators
    py::class_<nn::TrainConfig>(m, "TrainConfig")
        .def(py::init<>())
        .def_readwrite("learning_rate", &nn::TrainConfig::learning_rate)
        .def_readwrite("dropout", &nn::TrainConfig::dropout)
        .def_readwrite("epochs", &nn::TrainConfig::epochs)
        .def_readwrite("batch_size", &nn::TrainConfig::batch_size)
        .def_readwrite("time_steps", &nn::TrainConfig::time_steps)
        .def_readwrite("rng_seed", &nn::TrainConfig::rng_seed)
        .def_readwrite("noise_sigma", &nn::TrainConfig::noise_sigma)
        .def_readwrite("hidden", &nn::TrainConfig::hidden)
        .def_property(
            "activation", [](const nn::TrainConfig& c) { return std::string(nn::to_string(c.activation)); },
            [](nn::TrainConfig& c, const std::string& a) { c.activation = nn::parse_activation(a); });
    m.def("paper_displacement_config", &estimators::paper_displacement_config);
    m.def("paper_orientation_config", &estimators::paper_orientation_config);

    py::class_<estimators::DisplacementEstimator>(m, "DisplacementEstimator")
        .def_readonly("time_steps", &estimators::DisplacementEstimator::time_steps)
        .def_readonly("loss_history", &estimators::DisplacementEstimator::loss_history)
        .def("predict",
             [](const estimators::DisplacementEstimator& e, const dataset::OutageSequence& s) {
                 return estimators::predict_displacement(e, s).displacements;
             })
        .def("to_json", [](const estimators::DisplacementEstimator& e) { return io::dump(estimators::to_json(e)); })
        .def_static("from_json", [](const std::string& text) {
            return estimators::displacement_from_json(io::parse(text));
        });
    py::class_<estimators::OrientationRateEstimator>(m, "OrientationRateEstimator")
        .def_readonly("time_steps", &estimators::OrientationRateEstimator::time_steps)
        .def_readonly("loss_history", &estimators::OrientationRateEstimator::loss_history)
        .def("predict", [](const estimators::OrientationRateEstimator& e,
                           const dataset::OutageSequence& s) { return estimators::predict_orientation(e, s); })
        .def("to_json", [](const estimators::OrientationRateEstimator& e) { return io::dump(estimators::to_json(e)); })
        .def_static("from_json", [](const std::string& text) {
            return estimators::orientation_from_json(io::parse(text));
        });

    m.def(
        "train_displacement",
        [](const std::vector<dataset::SecondWindow>& w, const nn::TrainConfig& c) {
            py::gil_scoped_release release;
            return estimators::train_displacement(w, c);
        },
        py::arg("windows"), py::arg("config"));
    m.def(
        "train_orientation",
        [](const std::vector<dataset::SecondWindow>& w, const nn::TrainConfig& c) {
            py::gil_scoped_release release;
            return estimators::train_orientation(w, c);
        },
        py::arg("windows"), py::arg("config"));

    // reports
    py::class_<eval::ScenarioReport>(m, "ScenarioReport")
        .def_readonly("scenario_tag", &eval::ScenarioReport::scenario_tag)
        .def_readonly("sequences", &eval::ScenarioReport::sequences)
        .def_property_readonly("nn_displacement", [](const eval::ScenarioReport& r) { return block_dict(r.nn_displacement); })
        .def_property_readonly("ins_displacement", [](const eval::ScenarioReport& r) { return block_dict(r.ins_displacement); })
        .def_property_readonly("nn_orientation", [](const eval::ScenarioReport& r) { return block_dict(r.nn_orientation); })
        .def_property_readonly("ins_orientation", [](const eval::ScenarioReport& r) { return block_dict(r.ins_orientation); })
        .def_property_readonly("distance", [](const eval::ScenarioReport& r) { return summary_dict(r.distance); })
        .def("to_text", &eval::ScenarioReport::to_text)
        .def("to_csv", &eval::ScenarioReport::to_csv)
        .def("plot_csv", &eval::ScenarioReport::plot_csv, py::arg("series"), py::arg("sequence"));

    m.def(
        "evaluate",
        [](const estimators::DisplacementEstimator& d, const estimators::OrientationRateEstimator& o,
           const std::vector<dataset::OutageSequence>& seqs, const std::string& tag) {
            const auto r = eval::evaluate_outages(d, o, seqs);
            return eval::scenario_report(r.ins, r.nn, tag);
        },
        py::arg("displacement"), py::arg("orientation"), py::arg("sequences"), py::arg("tag") = "");
}
