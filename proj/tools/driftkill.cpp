// driftkill command line: synth -> train -> eval / sweep, every artifact indexed
// in <out>/manifest.json with the hash of the effective config.

#include <openssl/evp.h>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <CLI11.hpp>
#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "driftkill/dataset.hpp"
#include "driftkill/error.hpp"
#include "driftkill/estimators.hpp"
#include "driftkill/eval.hpp"
#include "driftkill/model_io.hpp"
#include "driftkill/synth.hpp"
#include "run_config.hpp"

namespace fs = std::filesystem;
using namespace driftkill;
using cli::ConfigError;
using cli::RunConfig;
using cli::Split;

namespace {

enum Exit { kOk = 0, kConfig = 2, kData = 3, kDivergence = 4 };

// Missing or unusable inputs discovered after the config was accepted.
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct Options {
    std::optional<std::string> config;
    std::optional<std::string> out;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> preset;
    std::optional<std::string> models;
    bool force = false;
};

std::string sha256_hex(std::string_view data) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr);
    static constexpr char hex[] = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
        out += hex[digest[i] >> 4];
        out += hex[digest[i] & 15];
    }
    return out;
}

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw DataError("cannot read " + p.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const fs::path& p, const std::string& content) {
    fs::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    out << content;
    if (!out) throw DataError("cannot write " + p.string());
}

// Collects every output of a command so nothing is written until all targets
// have been checked.
class Staging {
public:
    Staging(fs::path root, std::string command, const RunConfig& config)
        : root_(std::move(root)), command_(std::move(command)), config_json_(config.canonical()),
          config_hash_(sha256_hex(config_json_)) {}

    void add(const std::string& rel, std::string content) { files_[rel] = std::move(content); }
    io::Json& run_info() { return info_; }

    void commit(bool force) {
        const fs::path manifest_path = root_ / "manifest.json";
        if (!force) {
            for (const auto& [rel, _] : files_) {
                if (fs::exists(root_ / rel))
                    throw ConfigError((root_ / rel).string() + " already exists; pass --force to overwrite");
            }
        }
        io::Json manifest = {{"artifacts", io::Json::object()}, {"runs", io::Json::object()}};
        if (fs::exists(manifest_path)) {
            try {
                manifest = io::parse(read_file(manifest_path));
            } catch (const Error& e) {
                if (!force) throw DataError(manifest_path.string() + " is not a valid manifest: " + e.what());
            }
        }
        for (const auto& [rel, content] : files_) {
            write_file(root_ / rel, content);
            manifest["artifacts"][rel] = {{"command", command_},
                                          {"config_sha256", config_hash_},
                                          {"sha256", sha256_hex(content)},
                                          {"bytes", content.size()}};
        }
        info_["config_sha256"] = config_hash_;
        info_["config"] = io::Json::parse(config_json_);
        manifest["runs"][command_] = info_;
        write_file(manifest_path, io::dump(manifest));
        spdlog::info("{}: wrote {} artifacts under {}", command_, files_.size(), root_.string());
    }

private:
    fs::path root_;
    std::string command_;
    std::string config_json_;
    std::string config_hash_;
    std::map<std::string, std::string> files_;
    io::Json info_ = io::Json::object();
};

fs::path output_root(const Options& opt, const RunConfig& config) {
    if (opt.out) return fs::path(*opt.out);
    if (config.out) return *config.out;
    throw ConfigError("no output directory: pass --out DIR or set `out` in the config");
}

void check_plain_name(const std::string& name) {
    if (name.empty() || name.find_first_of("/\\") != std::string::npos || name.front() == '.')
        throw ConfigError("scenario name `" + name + "` must be a plain file name");
}

// ---------------------------------------------------------------- data access

std::string records_csv(const std::vector<dataset::ImuRecord>& records) {
    std::ostringstream os;
    dataset::write_records(os, records);
    return os.str();
}

std::vector<dataset::ImuRecord> synth_records(const cli::SynthEntry& e) {
    if (e.spec) return synth::corrupt_imu(synth::gen_scenario(*e.spec), synth::Corruption::preset(e.corruption, e.seed));
    return synth::random_drives(e.kind, e.drives, e.duration, e.corruption, e.seed);
}

// Windows of one split and scenario, files in config order, segment ids kept
// distinct across files.
std::vector<dataset::SecondWindow> load_windows(const RunConfig& config, const fs::path& root, Split split,
                                                const std::string& scenario) {
    std::vector<dataset::SecondWindow> out;
    std::size_t segment_offset = 0;
    auto append = [&](const dataset::RecordLog& log, const std::string& what) {
        auto set = dataset::build_windows(log, config.windows.accel_bias);
        if (set.dropped_nonconvergent > 0)
            spdlog::warn("{}: dropped {} windows where Vincenty did not converge", what, set.dropped_nonconvergent);
        std::size_t max_segment = 0;
        for (auto& w : set.windows) {
            max_segment = std::max(max_segment, w.segment);
            w.segment += segment_offset;
            out.push_back(w);
        }
        segment_offset += max_segment + 1;
        spdlog::debug("{}: {} records, {} windows", what, log.records.size(), set.windows.size());
    };
    for (const auto& e : config.synth) {
        if (e.split != split || e.scenario != scenario) continue;
        const fs::path p = root / "data" / (e.tag + ".csv");
        if (!fs::exists(p)) throw DataError(p.string() + " is missing; run `driftkill synth` first");
        append(dataset::load_records(p, dataset::ColumnMap::native()), p.string());
    }
    for (const auto& d : config.data) {
        if (d.split != split || d.scenario != scenario) continue;
        append(dataset::load_records(d.path, dataset::ColumnMap::preset(d.columns)), d.path.string());
    }
    return out;
}

std::string loss_csv(const std::vector<double>& losses) {
    std::ostringstream os;
    os << "epoch,loss\n";
    char buf[64];
    for (std::size_t i = 0; i < losses.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%.17g", losses[i]);
        os << i + 1 << ',' << buf << '\n';
    }
    return os.str();
}

// ---------------------------------------------------------------- commands

int cmd_synth(const Options& opt, const RunConfig& config) {
    if (config.synth.empty()) throw ConfigError("the config has no `synth` entries");
    Staging stage(output_root(opt, config), "synth", config);
    auto entries = io::Json::array();
    for (const auto& e : config.synth) {
        const auto records = synth_records(e);
        stage.add("data/" + e.tag + ".csv", records_csv(records));
        entries.push_back({{"file", "data/" + e.tag + ".csv"},
                           {"scenario", e.scenario},
                           {"kind", std::string(synth::to_string(e.kind))},
                           {"split", std::string(cli::to_string(e.split))},
                           {"corruption", e.corruption},
                           {"seed", e.seed},
                           {"rows", records.size()}});
        spdlog::info("synth {}: {} rows", e.tag, records.size());
    }
    stage.run_info()["scenarios"] = std::move(entries);
    stage.commit(opt.force);
    return kOk;
}

int cmd_train(const Options& opt, const RunConfig& config) {
    const fs::path root = output_root(opt, config);
    std::vector<dataset::SecondWindow> train;
    for (const auto& scenario : config.scenarios(Split::Train)) {
        auto w = load_windows(config, root, Split::Train, scenario);
        // Segment ids restart per scenario; shift them so runs never merge.
        std::size_t offset = 0;
        for (const auto& x : train) offset = std::max(offset, x.segment + 1);
        for (auto& x : w) x.segment += offset;
        train.insert(train.end(), w.begin(), w.end());
    }
    if (train.empty()) throw DataError("no training windows: the config has no train split data");
    spdlog::info("training on {} windows", train.size());
    if (config.displacement.epochs == 0 || config.orientation.epochs == 0)
        spdlog::warn("epochs = 0: models are written at their initialization");

    const auto disp = estimators::train_displacement(train, config.displacement);
    const auto orient = estimators::train_orientation(train, config.orientation);

    Staging stage(root, "train", config);
    stage.add("models/displacement.json", io::dump(estimators::to_json(disp)));
    stage.add("models/orientation.json", io::dump(estimators::to_json(orient)));
    stage.add("models/displacement_loss.csv", loss_csv(disp.loss_history));
    stage.add("models/orientation_loss.csv", loss_csv(orient.loss_history));
    stage.run_info()["training_windows"] = train.size();
    if (!disp.loss_history.empty()) stage.run_info()["final_loss"]["displacement"] = disp.loss_history.back();
    if (!orient.loss_history.empty()) stage.run_info()["final_loss"]["orientation"] = orient.loss_history.back();
    stage.commit(opt.force);
    return kOk;
}

template <class Model, class Parse>
Model load_model(const fs::path& p, Parse parse) {
    if (!fs::exists(p)) throw DataError(p.string() + " is missing; run `driftkill train` first");
    return parse(io::parse(read_file(p)));
}

int cmd_eval(const Options& opt, const RunConfig& config) {
    const fs::path root = output_root(opt, config);
    const fs::path models = opt.models ? fs::path(*opt.models) : root / "models";
    const auto disp = load_model<estimators::DisplacementEstimator>(models / "displacement.json",
                                                                    estimators::displacement_from_json);
    const auto orient = load_model<estimators::OrientationRateEstimator>(models / "orientation.json",
                                                                        estimators::orientation_from_json);
    const std::size_t history =
        std::max({config.windows.history, disp.time_steps, orient.time_steps > 0 ? orient.time_steps - 1 : 0});

    const auto scenarios = config.scenarios(Split::Test);
    if (scenarios.empty()) throw DataError("empty test set: the config has no test split data");
    Staging stage(root, "eval", config);
    auto summary = io::Json::object();
    for (const auto& scenario : scenarios) {
        check_plain_name(scenario);
        const auto windows = load_windows(config, root, Split::Test, scenario);
        const auto seqs = dataset::extract_outage_sequences(windows, config.windows.stride, history, scenario);
        if (seqs.empty()) throw DataError("scenario " + scenario + ": no complete outage sequences in the test data");
        const auto results = eval::evaluate_outages(disp, orient, seqs);
        const auto report = eval::scenario_report(results.ins, results.nn, scenario);
        stage.add("reports/" + scenario + ".txt", report.to_text());
        stage.add("reports/" + scenario + ".csv", report.to_csv());
        for (const auto series : eval::kPlotSeries) {
            for (std::size_t k = 0; k < report.sequences; ++k) {
                stage.add("reports/plots/" + scenario + "/" + std::string(series) + "_" + std::to_string(k) + ".csv",
                          report.plot_csv(series, k));
            }
        }
        summary[scenario] = {{"sequences", report.sequences},
                             {"nn_displacement_crse_mean", report.nn_displacement.crse.mean},
                             {"ins_displacement_crse_mean", report.ins_displacement.crse.mean},
                             {"nn_orientation_crse_mean", report.nn_orientation.crse.mean},
                             {"ins_orientation_crse_mean", report.ins_orientation.crse.mean}};
        spdlog::info("eval {}: {} sequences, displacement CRSE mean NN {:.3f} m vs INS {:.3f} m", scenario,
                     report.sequences, report.nn_displacement.crse.mean, report.ins_displacement.crse.mean);
    }
    stage.run_info()["models"] = {{"displacement_sha256", sha256_hex(read_file(models / "displacement.json"))},
                                  {"orientation_sha256", sha256_hex(read_file(models / "orientation.json"))}};
    stage.run_info()["scenarios"] = std::move(summary);
    stage.commit(opt.force);
    return kOk;
}

int cmd_sweep(const Options& opt, const RunConfig& config) {
    const fs::path root = output_root(opt, config);
    std::vector<std::size_t> steps;
    for (std::size_t n = config.sweep_min_steps; n <= config.sweep_max_steps; ++n) steps.push_back(n);
    const std::size_t history = std::max(config.windows.history, config.sweep_max_steps);

    std::vector<eval::SweepScenario> scenarios;
    const auto test_names = config.scenarios(Split::Test);
    for (const auto& name : config.scenarios(Split::Train)) {
        if (std::find(test_names.begin(), test_names.end(), name) == test_names.end()) continue;
        eval::SweepScenario s;
        s.tag = name;
        s.train = load_windows(config, root, Split::Train, name);
        s.test = dataset::extract_outage_sequences(load_windows(config, root, Split::Test, name), config.windows.stride,
                                                   history, name);
        scenarios.push_back(std::move(s));
    }
    if (scenarios.empty()) throw DataError("sweep needs at least one scenario with both train and test data");
    spdlog::info("sweep: n_steps {}..{} over {} scenarios", steps.front(), steps.back(), scenarios.size());

    const auto table = eval::timestep_sweep(steps, scenarios, config.displacement, config.orientation);
    std::size_t failed = 0;
    for (const auto* grid : {&table.displacement, &table.orientation}) {
        for (const auto& row : *grid) {
            for (const auto& cell : row) {
                if (!cell.value) {
                    ++failed;
                    spdlog::warn("sweep cell failed: {}", cell.error);
                }
            }
        }
    }
    Staging stage(root, "sweep", config);
    stage.add("sweep/displacement.txt", table.to_text(eval::SweepModel::Displacement));
    stage.add("sweep/displacement.csv", table.to_csv(eval::SweepModel::Displacement));
    stage.add("sweep/orientation.txt", table.to_text(eval::SweepModel::Orientation));
    stage.add("sweep/orientation.csv", table.to_csv(eval::SweepModel::Orientation));
    stage.run_info()["failed_cells"] = failed;
    stage.commit(opt.force);
    return kOk;
}

int cmd_template(const Options& opt) {
    if (!opt.preset) throw ConfigError("template needs --preset NAME (paper-defaults or desk-scale)");
    const auto text = cli::preset_text(*opt.preset);
    if (!opt.out) {
        std::cout << text;
        return kOk;
    }
    const fs::path p(*opt.out);
    if (fs::exists(p) && !opt.force) throw ConfigError(p.string() + " already exists; pass --force to overwrite");
    write_file(p.has_parent_path() ? p : fs::current_path() / p, std::string(text));
    return kOk;
}

int exit_code(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::Divergence: return kDivergence;
        case ErrorKind::InvalidSpec:
        case ErrorKind::InvalidInput: return kConfig;
        default: return kData;
    }
}

void setup_logging() {
    auto logger = spdlog::stderr_color_mt("driftkill");
    logger->set_pattern("[%l] %v");
    spdlog::set_default_logger(logger);
    spdlog::set_level(spdlog::level::info);
    if (const char* env = std::getenv("DRIFTKILL_LOG")) {
        const auto level = spdlog::level::from_str(env);
        // from_str maps unknown names to off; only accept it when asked for.
        if (level != spdlog::level::off || std::string_view(env) == "off") spdlog::set_level(level);
        else spdlog::warn("DRIFTKILL_LOG={} is not a log level; using info", env);
    }
}

}  // namespace

int main(int argc, char** argv) {
    setup_logging();
    CLI::App app{"driftkill: INS dead reckoning, neural correction and outage metrics"};
    app.require_subcommand(1);
    Options opt;

    auto add_common = [&](CLI::App* sub, bool with_config) {
        if (with_config) {
            sub->add_option("--config", opt.config, "YAML run config");
            sub->add_option("--seed", opt.seed, "Overrides the config seed");
        }
        sub->add_option("--out", opt.out, "Output directory (template: output file)");
        sub->add_option("--preset", opt.preset, "paper-defaults or desk-scale")
            ->check(CLI::IsMember({"paper-defaults", "desk-scale"}));
        sub->add_flag("--force", opt.force, "Overwrite existing outputs");
    };
    auto* synth_cmd = app.add_subcommand("synth", "Generate synthetic drive logs");
    auto* train_cmd = app.add_subcommand("train", "Train the displacement and orientation estimators");
    auto* eval_cmd = app.add_subcommand("eval", "Evaluate trained models on the test scenarios");
    auto* sweep_cmd = app.add_subcommand("sweep", "Train and evaluate across time steps");
    auto* template_cmd = app.add_subcommand("template", "Print a shipped config template");
    for (auto* sub : {synth_cmd, train_cmd, eval_cmd, sweep_cmd}) add_common(sub, true);
    add_common(template_cmd, false);
    eval_cmd->add_option("--models", opt.models, "Model directory (default <out>/models)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kOk : kConfig;
    }

    try {
        if (template_cmd->parsed()) return cmd_template(opt);
        std::optional<fs::path> config_path;
        if (opt.config) config_path = fs::path(*opt.config);
        const RunConfig config = cli::load_config(opt.preset, config_path, opt.seed);
        if (synth_cmd->parsed()) return cmd_synth(opt, config);
        if (train_cmd->parsed()) return cmd_train(opt, config);
        if (eval_cmd->parsed()) return cmd_eval(opt, config);
        return cmd_sweep(opt, config);
    } catch (const ConfigError& e) {
        spdlog::error("{}", e.what());
        return kConfig;
    } catch (const DataError& e) {
        spdlog::error("{}", e.what());
        return kData;
    } catch (const Error& e) {
        spdlog::error("{}", e.what());
        return exit_code(e.kind());
    } catch (const fs::filesystem_error& e) {
        spdlog::error("{}", e.what());
        return kData;
    }
}
