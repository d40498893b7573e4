#include "run_config.hpp"

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <fstream>
#include <initializer_list>
#include <set>
#include <sstream>

#include "driftkill/dataset.hpp"
#include "driftkill/error.hpp"
#include "driftkill/model_io.hpp"

namespace driftkill::cli {
namespace {

constexpr std::string_view kPaperDefaults = R"(# paper-defaults: the published training parameters (learning rate, epochs,
# time steps, dropout, network size, batch) on a mixed synthetic corpus.
# Expect several minutes end to end.
seed: 1
corruption: consumer-imu

synth:
  - {scenario: straight, kind: straight, split: train, drives: 60, duration: 300}
  - {scenario: hard_brake, kind: hard_brake, split: train, drives: 60, duration: 300}
  - {scenario: roundabout, kind: roundabout, split: train, drives: 60, duration: 300}
  - {scenario: jerk, kind: jerk, split: train, drives: 60, duration: 300}
  - {scenario: straight, kind: straight, split: test, drives: 6, duration: 120}
  - {scenario: hard_brake, kind: hard_brake, split: test, drives: 6, duration: 120}
  - {scenario: roundabout, kind: roundabout, split: test, drives: 6, duration: 120}
  - {scenario: jerk, kind: jerk, split: test, drives: 6, duration: 120}

windows:
  accel_bias: 0.0   # raw INS: no stationary bias calibration
  stride: 10
  history: 10

train:
  displacement:
    learning_rate: 0.004
    epochs: 40
    time_steps: 10
    dropout: 0.1
    hidden: [32, 32]
    batch_size: 256
    activation: tanh
    noise_sigma: 1.0
  orientation:
    learning_rate: 0.001
    epochs: 60
    time_steps: 2
    dropout: 0.1
    hidden: [32, 32]
    batch_size: 256
    activation: tanh

sweep:
  min_steps: 2
  max_steps: 14
)";

constexpr std::string_view kDeskScale = R"(# desk-scale: a small synthetic run, about ten seconds end to end.
# Dropout is off; see the README for why.
seed: 7
corruption: consumer-imu

synth:
  - {scenario: straight, kind: straight, split: train, drives: 60, duration: 300}
  - {scenario: hard_brake, kind: hard_brake, split: train, drives: 60, duration: 300}
  - {scenario: roundabout, kind: roundabout, split: train, drives: 60, duration: 300}
  - {scenario: jerk, kind: jerk, split: train, drives: 60, duration: 300}
  - {scenario: straight, kind: straight, split: test, drives: 4, duration: 120}
  - {scenario: hard_brake, kind: hard_brake, split: test, drives: 4, duration: 120}
  - {scenario: roundabout, kind: roundabout, split: test, drives: 4, duration: 120}
  - {scenario: jerk, kind: jerk, split: test, drives: 4, duration: 120}

windows:
  accel_bias: 0.0
  stride: 10
  history: 10

train:
  displacement:
    learning_rate: 0.004
    epochs: 40
    time_steps: 10
    dropout: 0.0
    hidden: [32, 32]
    batch_size: 256
    activation: relu
    noise_sigma: 0.5
  orientation:
    learning_rate: 0.001
    epochs: 60
    time_steps: 2
    dropout: 0.0
    hidden: [32, 32]
    batch_size: 256
    activation: relu

sweep:
  min_steps: 2
  max_steps: 4
)";

struct Ctx {
    std::string_view source;
    std::filesystem::path base_dir;
};

[[noreturn]] void fail(const Ctx& ctx, const YAML::Node& node, const std::string& msg) {
    std::ostringstream os;
    os << ctx.source;
    const YAML::Mark m = node.Mark();
    if (!m.is_null()) os << ':' << m.line + 1 << ':' << m.column + 1;
    os << ": " << msg;
    throw ConfigError(os.str());
}

void require_map(const Ctx& ctx, const YAML::Node& node, const std::string& what) {
    if (!node.IsMap()) fail(ctx, node, what + " must be a mapping");
}

void check_keys(const Ctx& ctx, const YAML::Node& node, std::initializer_list<std::string_view> allowed) {
    for (const auto& kv : node) {
        const auto key = kv.first.as<std::string>();
        if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) fail(ctx, kv.first, "unknown key `" + key + "`");
    }
}

std::string scalar(const Ctx& ctx, const YAML::Node& node, const std::string& key) {
    if (!node.IsScalar()) fail(ctx, node, "`" + key + "` must be a scalar");
    return node.Scalar();
}

double as_double(const Ctx& ctx, const YAML::Node& node, const std::string& key) {
    scalar(ctx, node, key);
    try {
        return node.as<double>();
    } catch (const YAML::BadConversion&) {
        fail(ctx, node, "`" + key + "` must be a number");
    }
}

std::uint64_t as_uint(const Ctx& ctx, const YAML::Node& node, const std::string& key) {
    const auto text = scalar(ctx, node, key);
    if (!text.empty() && text.front() == '-') fail(ctx, node, "`" + key + "` must be a non-negative integer");
    try {
        return node.as<std::uint64_t>();
    } catch (const YAML::BadConversion&) {
        fail(ctx, node, "`" + key + "` must be a non-negative integer");
    }
}

int as_int(const Ctx& ctx, const YAML::Node& node, const std::string& key) {
    scalar(ctx, node, key);
    try {
        return node.as<int>();
    } catch (const YAML::BadConversion&) {
        fail(ctx, node, "`" + key + "` must be an integer");
    }
}

Split as_split(const Ctx& ctx, const YAML::Node& node) {
    const auto s = scalar(ctx, node, "split");
    if (s == "train") return Split::Train;
    if (s == "test") return Split::Test;
    fail(ctx, node, "`split` must be train or test, got `" + s + "`");
}

synth::ScenarioKind as_kind(const Ctx& ctx, const YAML::Node& node) {
    const auto s = scalar(ctx, node, "kind");
    try {
        return synth::parse_scenario_kind(s);
    } catch (const Error&) {
        fail(ctx, node, "unknown scenario kind `" + s + "`");
    }
}

void set_double(const Ctx& ctx, const YAML::Node& map, const char* key, double& out) {
    if (const auto n = map[key]) out = as_double(ctx, n, key);
}

void set_size(const Ctx& ctx, const YAML::Node& map, const char* key, std::size_t& out) {
    if (const auto n = map[key]) out = static_cast<std::size_t>(as_uint(ctx, n, key));
}

synth::ScenarioSpec parse_spec(const Ctx& ctx, const YAML::Node& node) {
    require_map(ctx, node, "`spec`");
    check_keys(ctx, node,
               {"kind", "duration", "v0", "accel", "decel", "brake_start", "restart_after", "recover_accel", "radius",
                "turn_direction", "jerk_amplitude", "jerk_period", "turn_amplitude", "turn_period", "origin",
                "heading"});
    synth::ScenarioSpec s;
    if (!node["kind"]) fail(ctx, node, "`spec` needs a `kind`");
    s.kind = as_kind(ctx, node["kind"]);
    set_double(ctx, node, "duration", s.duration);
    set_double(ctx, node, "v0", s.v0);
    set_double(ctx, node, "accel", s.accel);
    set_double(ctx, node, "decel", s.decel);
    set_double(ctx, node, "brake_start", s.brake_start);
    if (const auto n = node["restart_after"]) s.restart_after = as_double(ctx, n, "restart_after");
    set_double(ctx, node, "recover_accel", s.recover_accel);
    set_double(ctx, node, "radius", s.radius);
    if (const auto n = node["turn_direction"]) s.turn_direction = as_int(ctx, n, "turn_direction");
    set_double(ctx, node, "jerk_amplitude", s.jerk_amplitude);
    set_double(ctx, node, "jerk_period", s.jerk_period);
    set_double(ctx, node, "turn_amplitude", s.turn_amplitude);
    set_double(ctx, node, "turn_period", s.turn_period);
    set_double(ctx, node, "heading", s.heading0_deg);
    if (const auto n = node["origin"]) {
        if (!n.IsSequence() || n.size() != 2) fail(ctx, n, "`origin` must be [lat, lon]");
        try {
            s.origin = geodesy::GeoPoint(as_double(ctx, n[0], "origin"), as_double(ctx, n[1], "origin"));
        } catch (const Error& e) {
            fail(ctx, n, e.what());
        }
    }
    try {
        synth::validate(s);
    } catch (const Error& e) {
        fail(ctx, node, e.what());
    }
    return s;
}

SynthEntry parse_synth_entry(const Ctx& ctx, const YAML::Node& node) {
    require_map(ctx, node, "synth entry");
    check_keys(ctx, node, {"tag", "scenario", "kind", "split", "drives", "duration", "spec", "corruption"});
    SynthEntry e;
    if (const auto n = node["spec"]) {
        if (node["kind"] || node["drives"] || node["duration"])
            fail(ctx, node, "an entry takes either `spec` or `kind`/`drives`/`duration`, not both");
        e.spec = parse_spec(ctx, n);
        e.kind = e.spec->kind;
        e.duration = e.spec->duration;
    } else {
        if (!node["kind"]) fail(ctx, node, "synth entry needs `kind` or `spec`");
        e.kind = as_kind(ctx, node["kind"]);
        set_size(ctx, node, "drives", e.drives);
        set_double(ctx, node, "duration", e.duration);
        if (e.drives == 0) fail(ctx, node["drives"], "`drives` must be at least 1");
        if (!(e.duration > 0.0)) fail(ctx, node["duration"], "`duration` must be positive");
    }
    if (const auto n = node["split"]) e.split = as_split(ctx, n);
    if (const auto n = node["scenario"]) e.scenario = scalar(ctx, n, "scenario");
    if (const auto n = node["tag"]) e.tag = scalar(ctx, n, "tag");
    if (const auto n = node["corruption"]) {
        e.corruption = scalar(ctx, n, "corruption");
        try {
            synth::Corruption::preset(e.corruption);
        } catch (const Error& err) {
            fail(ctx, n, err.what());
        }
    }
    if (!e.tag.empty() && (e.tag.find_first_of("/\\") != std::string::npos || e.tag.front() == '.'))
        fail(ctx, node["tag"], "`tag` must be a plain file name");
    return e;
}

DataEntry parse_data_entry(const Ctx& ctx, const YAML::Node& node) {
    require_map(ctx, node, "data entry");
    check_keys(ctx, node, {"path", "scenario", "split", "columns"});
    DataEntry d;
    if (!node["path"] || !node["scenario"]) fail(ctx, node, "data entry needs `path` and `scenario`");
    d.path = scalar(ctx, node["path"], "path");
    if (d.path.is_relative()) d.path = ctx.base_dir / d.path;
    d.path = d.path.lexically_normal();
    if (!std::filesystem::is_regular_file(d.path)) fail(ctx, node["path"], "no such file: " + d.path.string());
    d.scenario = scalar(ctx, node["scenario"], "scenario");
    if (const auto n = node["split"]) d.split = as_split(ctx, n);
    if (const auto n = node["columns"]) {
        d.columns = scalar(ctx, n, "columns");
        try {
            dataset::ColumnMap::preset(d.columns);
        } catch (const Error& err) {
            fail(ctx, n, err.what());
        }
    }
    return d;
}

void parse_train(const Ctx& ctx, const YAML::Node& node, nn::TrainConfig& c, bool displacement) {
    require_map(ctx, node, "train section");
    if (displacement)
        check_keys(ctx, node, {"learning_rate", "epochs", "time_steps", "dropout", "hidden", "batch_size",
                               "activation", "noise_sigma"});
    else
        check_keys(ctx, node,
                   {"learning_rate", "epochs", "time_steps", "dropout", "hidden", "batch_size", "activation"});
    set_double(ctx, node, "learning_rate", c.learning_rate);
    set_size(ctx, node, "epochs", c.epochs);
    set_size(ctx, node, "time_steps", c.time_steps);
    set_double(ctx, node, "dropout", c.dropout);
    set_size(ctx, node, "batch_size", c.batch_size);
    set_double(ctx, node, "noise_sigma", c.noise_sigma);
    if (const auto n = node["activation"]) {
        const auto s = scalar(ctx, n, "activation");
        try {
            c.activation = nn::parse_activation(s);
        } catch (const Error& e) {
            fail(ctx, n, e.what());
        }
    }
    if (const auto n = node["hidden"]) {
        if (!n.IsSequence() || n.size() == 0) fail(ctx, n, "`hidden` must be a non-empty list of layer sizes");
        c.hidden.clear();
        for (const auto& h : n) c.hidden.push_back(static_cast<std::size_t>(as_uint(ctx, h, "hidden")));
    }
    try {
        c.validate();
    } catch (const Error& e) {
        fail(ctx, node, e.what());
    }
}

std::uint64_t splitmix(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

}  // namespace

std::string_view to_string(Split s) noexcept { return s == Split::Train ? "train" : "test"; }

std::string_view preset_text(std::string_view name) {
    if (name == "paper-defaults") return kPaperDefaults;
    if (name == "desk-scale") return kDeskScale;
    throw ConfigError("unknown preset `" + std::string(name) + "` (expected paper-defaults or desk-scale)");
}

void apply_document(RunConfig& c, std::string_view text, std::string_view source, const std::filesystem::path& base_dir) {
    const Ctx ctx{source, base_dir};
    YAML::Node root;
    try {
        root = YAML::Load(std::string(text));
    } catch (const YAML::ParserException& e) {
        std::ostringstream os;
        os << source << ':' << e.mark.line + 1 << ':' << e.mark.column + 1 << ": " << e.msg;
        throw ConfigError(os.str());
    }
    if (root.IsNull()) return;
    require_map(ctx, root, "the config document");
    check_keys(ctx, root, {"seed", "out", "corruption", "synth", "data", "windows", "train", "sweep"});

    if (const auto n = root["seed"]) c.seed = as_uint(ctx, n, "seed");
    if (const auto n = root["out"]) {
        std::filesystem::path p = scalar(ctx, n, "out");
        c.out = p.is_relative() ? base_dir / p : p;
    }
    if (const auto n = root["corruption"]) {
        c.corruption = scalar(ctx, n, "corruption");
        try {
            synth::Corruption::preset(c.corruption);
        } catch (const Error& e) {
            fail(ctx, n, e.what());
        }
    }
    if (const auto n = root["synth"]) {
        if (!n.IsSequence()) fail(ctx, n, "`synth` must be a list of entries");
        c.synth.clear();
        for (const auto& e : n) c.synth.push_back(parse_synth_entry(ctx, e));
    }
    if (const auto n = root["data"]) {
        if (!n.IsSequence()) fail(ctx, n, "`data` must be a list of entries");
        c.data.clear();
        for (const auto& e : n) c.data.push_back(parse_data_entry(ctx, e));
    }
    if (const auto n = root["windows"]) {
        require_map(ctx, n, "`windows`");
        check_keys(ctx, n, {"accel_bias", "stride", "history"});
        set_double(ctx, n, "accel_bias", c.windows.accel_bias);
        set_size(ctx, n, "stride", c.windows.stride);
        set_size(ctx, n, "history", c.windows.history);
        if (c.windows.stride == 0) fail(ctx, n, "`stride` must be at least 1");
        if (c.windows.history == 0) fail(ctx, n, "`history` must be at least 1");
    }
    if (const auto n = root["train"]) {
        require_map(ctx, n, "`train`");
        check_keys(ctx, n, {"displacement", "orientation"});
        if (const auto d = n["displacement"]) parse_train(ctx, d, c.displacement, true);
        if (const auto o = n["orientation"]) parse_train(ctx, o, c.orientation, false);
    }
    if (const auto n = root["sweep"]) {
        require_map(ctx, n, "`sweep`");
        check_keys(ctx, n, {"min_steps", "max_steps"});
        set_size(ctx, n, "min_steps", c.sweep_min_steps);
        set_size(ctx, n, "max_steps", c.sweep_max_steps);
        if (c.sweep_min_steps == 0 || c.sweep_min_steps > c.sweep_max_steps)
            fail(ctx, n, "`sweep` needs 1 <= min_steps <= max_steps");
    }
}

void finalize(RunConfig& c) {
    std::set<std::string> tags;
    for (std::size_t i = 0; i < c.synth.size(); ++i) {
        auto& e = c.synth[i];
        if (e.scenario.empty()) e.scenario = std::string(synth::to_string(e.kind));
        if (e.tag.empty()) e.tag = e.scenario + "_" + std::string(to_string(e.split));
        if (e.corruption.empty()) e.corruption = c.corruption;
        if (!tags.insert(e.tag).second)
            throw ConfigError("synth entry " + std::to_string(i + 1) + ": duplicate output path data/" + e.tag + ".csv");
        e.seed = splitmix(c.seed ^ splitmix(i + 1));
    }
    c.displacement.rng_seed = splitmix(c.seed ^ 0xd15b1acedULL);
    c.orientation.rng_seed = splitmix(c.seed ^ 0x0a1e47a7e5ULL);
}

RunConfig load_config(const std::optional<std::string>& preset, const std::optional<std::filesystem::path>& file,
                      std::optional<std::uint64_t> seed_override) {
    if (!preset && !file) throw ConfigError("give --config FILE, --preset NAME or both");
    RunConfig c;
    c.displacement = nn::TrainConfig{};
    c.orientation = nn::TrainConfig{};
    c.orientation.learning_rate = 0.001;
    c.orientation.epochs = 60;
    c.orientation.time_steps = 2;
    if (preset) apply_document(c, preset_text(*preset), "preset " + *preset, std::filesystem::current_path());
    if (file) {
        std::ifstream in(*file, std::ios::binary);
        if (!in) throw ConfigError(file->string() + ": cannot open config file");
        std::stringstream ss;
        ss << in.rdbuf();
        const auto dir = std::filesystem::absolute(*file).parent_path();
        apply_document(c, ss.str(), file->string(), dir);
    }
    if (seed_override) c.seed = *seed_override;
    finalize(c);
    return c;
}

std::vector<std::string> RunConfig::scenarios(std::optional<Split> split) const {
    std::vector<std::string> out;
    auto add = [&](const std::string& s, Split sp) {
        if (split && *split != sp) return;
        if (std::find(out.begin(), out.end(), s) == out.end()) out.push_back(s);
    };
    for (const auto& e : synth) add(e.scenario, e.split);
    for (const auto& d : data) add(d.scenario, d.split);
    return out;
}

std::string RunConfig::canonical() const {
    io::Json doc;
    doc["seed"] = seed;
    doc["corruption"] = corruption;
    auto synth_list = io::Json::array();
    for (const auto& e : synth) {
        io::Json j{{"tag", e.tag},
                   {"scenario", e.scenario},
                   {"split", std::string(to_string(e.split))},
                   {"kind", std::string(synth::to_string(e.kind))},
                   {"corruption", e.corruption},
                   {"seed", e.seed}};
        if (e.spec) {
            const auto& s = *e.spec;
            j["spec"] = {{"duration", s.duration},           {"v0", s.v0},
                         {"accel", s.accel},                 {"decel", s.decel},
                         {"brake_start", s.brake_start},     {"recover_accel", s.recover_accel},
                         {"radius", s.radius},               {"turn_direction", s.turn_direction},
                         {"jerk_amplitude", s.jerk_amplitude}, {"jerk_period", s.jerk_period},
                         {"turn_amplitude", s.turn_amplitude}, {"turn_period", s.turn_period},
                         {"origin", {s.origin.lat(), s.origin.lon()}}, {"heading", s.heading0_deg}};
            if (s.restart_after) j["spec"]["restart_after"] = *s.restart_after;
        } else {
            j["drives"] = e.drives;
            j["duration"] = e.duration;
        }
        synth_list.push_back(std::move(j));
    }
    doc["synth"] = std::move(synth_list);
    auto data_list = io::Json::array();
    for (const auto& d : data)
        data_list.push_back({{"path", d.path.generic_string()},
                             {"scenario", d.scenario},
                             {"split", std::string(to_string(d.split))},
                             {"columns", d.columns}});
    doc["data"] = std::move(data_list);
    doc["windows"] = {{"accel_bias", windows.accel_bias}, {"stride", windows.stride}, {"history", windows.history}};
    doc["train"] = {{"displacement", io::to_json(displacement)}, {"orientation", io::to_json(orientation)}};
    doc["sweep"] = {{"min_steps", sweep_min_steps}, {"max_steps", sweep_max_steps}};
    return doc.dump();
}

}  // namespace driftkill::cli
