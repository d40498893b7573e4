#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "driftkill/kinematics.hpp"

namespace driftkill::dataset {

/// One 10 Hz sample in SI units: accel in m/s^2, yaw rate in rad/s, heading in
/// compass degrees, position in degrees.
struct ImuRecord {
    double t = 0.0;
    double accel_long = 0.0;
    double yaw_rate = 0.0;
    double heading = 0.0;
    double lat = 0.0;
    double lon = 0.0;

    friend bool operator==(const ImuRecord&, const ImuRecord&) = default;
};

inline constexpr double kStandardGravity = 9.81;
inline constexpr double kSegmentGap = 0.15;  // seconds
inline constexpr std::size_t kOutageWindows = 10;

enum class AccelUnit { MetersPerSecond2, G };
enum class RateUnit { RadPerSecond, DegPerSecond };

/// Maps CSV header names onto record fields and declares the source units.
struct ColumnMap {
    std::string time = "t";
    std::string accel_long = "accel_long";
    std::string yaw_rate = "yaw_rate";
    std::string heading = "heading";
    std::string lat = "lat";
    std::string lon = "lon";
    AccelUnit accel_unit = AccelUnit::MetersPerSecond2;
    RateUnit rate_unit = RateUnit::RadPerSecond;

    /// The schema written by `write_records` (SI units).
    static ColumnMap native();
    /// IO-VNBD drive logs: acceleration in g, yaw rate in deg/s.
    static ColumnMap io_vnbd();
    /// "native" or "io-vnbd"; throws Error(InvalidInput) otherwise.
    static ColumnMap preset(std::string_view name);
};

struct RecordLog {
    std::vector<ImuRecord> records;
    /// Index of the first record of every segment; a new segment starts after each gap > kSegmentGap.
    std::vector<std::size_t> segment_starts;

    std::size_t segment_breaks() const noexcept { return segment_starts.empty() ? 0 : segment_starts.size() - 1; }
    std::vector<std::span<const ImuRecord>> segments() const;
};

/// Splits in-memory records into segments at gaps > max_gap. Throws Error(NonMonotonicTime).
RecordLog segment_records(std::vector<ImuRecord> records, double max_gap = kSegmentGap);

/// Parses a CSV stream with a header row. Errors: SchemaMismatch (names the missing column),
/// ParseError (names the 1-based line), NonMonotonicTime.
RecordLog load_records(std::istream& in, const ColumnMap& schema, double max_gap = kSegmentGap);
RecordLog load_records(const std::filesystem::path& path, const ColumnMap& schema, double max_gap = kSegmentGap);

/// Writes records in the native schema with shortest round-trip decimals.
void write_records(std::ostream& out, std::span<const ImuRecord> records);

/// Mean longitudinal reading of a stationary log. Throws Error(EmptyInput).
double estimate_accel_bias(std::span<const ImuRecord> stationary);

/// One second of driving: INS-derived features and GPS-derived ground truth.
struct SecondWindow {
    std::size_t segment = 0;
    std::size_t index = 0;  // position within the segment; gaps mark dropped windows
    double t_start = 0.0;
    double duration = 1.0;      // elapsed time between the boundary fixes
    double ins_duration = 1.0;  // samples * dt used by the INS integration

    double ins_displacement = 0.0;   // m, body frame
    double ins_accel_feature = 0.0;  // m/s^2, window mean of corrected accel
    double ins_yaw_rate = 0.0;       // rad/s, window mean
    double v_start = 0.0;            // m/s
    double ins_v_end = 0.0;          // m/s

    double gt_displacement = 0.0;  // m, Vincenty between boundary fixes
    double gt_yaw_rate = 0.0;      // rad/s, from boundary headings
    double heading_start = 0.0;    // deg
    double heading_end = 0.0;      // deg

    friend bool operator==(const SecondWindow&, const SecondWindow&) = default;
};

/// True when `next` directly follows `prev` in the same segment.
bool contiguous(const SecondWindow& prev, const SecondWindow& next) noexcept;

/// INS displacement of `w` re-integrated from a different start speed (the
/// integration is affine in the start speed).
double rechained_displacement(const SecondWindow& w, double v_start) noexcept;
double rechained_v_end(const SecondWindow& w, double v_start) noexcept;

struct WindowOptions {
    std::size_t samples_per_window = 10;
    double dt = 0.1;
    kinematics::IntegrationRule rule = kinematics::IntegrationRule::Rectangular;
};

struct WindowSet {
    std::vector<SecondWindow> windows;
    std::size_t dropped_nonconvergent = 0;
    std::size_t discarded_records = 0;
};

/// Cuts every segment into non-overlapping windows. A window of n samples also
/// needs the fix that closes it (the first sample of the next window), so a
/// segment of m records yields floor((m - 1) / n) windows.
WindowSet build_windows(const RecordLog& log, double accel_bias, const WindowOptions& options = {});

enum class Feature { InsDisplacement, InsAccel, InsYawRate, GtDisplacement, GtYawRate, VStart };

std::string_view feature_name(Feature f) noexcept;
double feature_value(const SecondWindow& w, Feature f) noexcept;

struct ScalerParams {
    struct Entry {
        std::string name;
        double min = 0.0;
        double max = 1.0;
        bool degenerate = false;  // max == min; scales to 0

        friend bool operator==(const Entry&, const Entry&) = default;
    };
    std::vector<Entry> entries;

    /// Throws Error(InvalidInput) for unknown names.
    std::size_t index_of(std::string_view name) const;

    friend bool operator==(const ScalerParams&, const ScalerParams&) = default;
};

enum class DegeneratePolicy { Throw, Flag };

ScalerParams fit_scaler(std::span<const SecondWindow> train, std::span<const Feature> features,
                        DegeneratePolicy policy = DegeneratePolicy::Throw);
/// Min/max per named column; every column needs at least two values.
ScalerParams fit_scaler_columns(std::span<const std::string> names, std::span<const std::vector<double>> columns,
                                DegeneratePolicy policy = DegeneratePolicy::Throw);

/// (v - min) / (max - min); not clamped, so out-of-range inputs leave [0, 1].
double apply_scaler(const ScalerParams& params, std::size_t feature, double value);
double invert_scaler(const ScalerParams& params, std::size_t feature, double scaled);

/// Ten contiguous windows under a simulated GNSS outage plus the windows before it.
struct OutageSequence {
    std::string scenario_tag;
    double initial_psi = 0.0;  // rad, GPS heading at outage start
    double initial_v = 0.0;    // m/s, seed displacement over the seed window duration
    std::optional<double> seed_displacement;
    std::vector<SecondWindow> history;  // pre-outage windows, oldest first; back() is the seed window
    std::vector<SecondWindow> windows;  // the outage, always kOutageWindows long

    friend bool operator==(const OutageSequence&, const OutageSequence&) = default;
};

/// Slides over runs of contiguous windows. An outage may start at run offset s
/// once `history` windows precede it; starts advance by `stride`.
std::vector<OutageSequence> extract_outage_sequences(std::span<const SecondWindow> windows, std::size_t stride,
                                                     std::size_t history = 1, std::string_view tag = {});

// Line-delimited cache files. Values are written with shortest round-trip
// decimals, so reading back is bit-exact.
void write_windows(std::ostream& out, std::span<const SecondWindow> windows);
std::vector<SecondWindow> read_windows(std::istream& in);
void write_sequences(std::ostream& out, std::span<const OutageSequence> sequences);
std::vector<OutageSequence> read_sequences(std::istream& in);

}  // namespace driftkill::dataset
