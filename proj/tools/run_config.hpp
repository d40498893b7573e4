#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "driftkill/neuralnet.hpp"
#include "driftkill/synth.hpp"

namespace driftkill::cli {

/// Invalid configuration; the message already carries `source:line:column`.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class Split { Train, Test };

std::string_view to_string(Split s) noexcept;

/// One synthetic CSV. Either `drives` random drives of `kind`, or one explicit spec.
struct SynthEntry {
    std::string tag;       // output file stem, unique
    std::string scenario;  // report / sweep column name
    Split split = Split::Train;
    synth::ScenarioKind kind = synth::ScenarioKind::Straight;
    std::size_t drives = 1;
    double duration = 10.0;
    std::optional<synth::ScenarioSpec> spec;
    std::string corruption;
    std::uint64_t seed = 0;  // derived from the run seed and the entry position
};

/// A user-supplied drive log.
struct DataEntry {
    std::filesystem::path path;  // resolved against the config file's directory
    std::string scenario;
    Split split = Split::Train;
    std::string columns = "native";
};

struct WindowConfig {
    double accel_bias = 0.0;  // raw INS by default
    std::size_t stride = 10;
    std::size_t history = 10;
};

struct RunConfig {
    std::uint64_t seed = 0;
    std::optional<std::filesystem::path> out;
    std::string corruption = "consumer-imu";
    std::vector<SynthEntry> synth;
    std::vector<DataEntry> data;
    WindowConfig windows;
    nn::TrainConfig displacement;
    nn::TrainConfig orientation;
    std::size_t sweep_min_steps = 2;
    std::size_t sweep_max_steps = 14;

    /// Compact JSON of every effective value with sorted keys; hashed into the manifest.
    std::string canonical() const;
    /// Scenario names in first-appearance order, optionally restricted to a split.
    std::vector<std::string> scenarios(std::optional<Split> split = std::nullopt) const;
};

inline constexpr std::string_view kPresets[] = {"paper-defaults", "desk-scale"};

/// Shipped template text. Throws ConfigError for unknown names.
std::string_view preset_text(std::string_view name);

/// Layers the preset (if any) and then the config file (if any). Keys absent from
/// the file keep the preset's values; lists are replaced whole. `seed_override`
/// replaces the document seed before any derived seed is computed.
RunConfig load_config(const std::optional<std::string>& preset, const std::optional<std::filesystem::path>& file,
                      std::optional<std::uint64_t> seed_override);

/// Parses one document onto `base`. `source` names it in error messages and
/// `base_dir` resolves relative data paths.
void apply_document(RunConfig& base, std::string_view text, std::string_view source,
                    const std::filesystem::path& base_dir);

/// Derives entry seeds, fills default tags and checks cross-entry constraints.
void finalize(RunConfig& config);

}  // namespace driftkill::cli
