#include "driftkill/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <numbers>
#include <ostream>
#include <sstream>

#include "driftkill/error.hpp"
#include "driftkill/geodesy.hpp"
#include "text.hpp"

namespace driftkill::dataset {

namespace {

using detail::format_double;
using detail::parse_double;
using detail::split;
using detail::trim;

constexpr double kDegToRad = std::numbers::pi / 180.0;

// Header matching ignores case, whitespace and punctuation.
std::string header_key(std::string_view s) {
    std::string out;
    for (char c : s) {
        if (std::isalnum(static_cast<unsigned char>(c))) out += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    }
    return out;
}

std::string_view unquote(std::string_view s) {
    s = trim(s);
    if (s.size() >= 2 && s.front() == '"' && s.back() == '"') s = s.substr(1, s.size() - 2);
    return s;
}

// `spec` may list alternatives separated by '|'.
std::size_t resolve_column(const std::vector<std::string>& header_keys, std::string_view field, std::string_view spec) {
    for (std::string_view alt : split(spec, '|')) {
        const std::string key = header_key(alt);
        const auto it = std::find(header_keys.begin(), header_keys.end(), key);
        if (!key.empty() && it != header_keys.end()) return static_cast<std::size_t>(it - header_keys.begin());
    }
    throw Error(ErrorKind::SchemaMismatch,
                "missing column `" + std::string(field) + "` (looked for: " + std::string(spec) + ")");
}

}  // namespace

ColumnMap ColumnMap::native() { return ColumnMap{}; }

ColumnMap ColumnMap::io_vnbd() {
    ColumnMap m;
    m.time = "time|timestamp|time_s";
    m.accel_long = "longitudinal acceleration|longitudinal_acceleration|long_acc|acc_x|accel_long";
    m.yaw_rate = "yaw rate|yaw_rate|yawrate|gyro_z";
    m.heading = "heading|gps heading|course";
    m.lat = "latitude|lat";
    m.lon = "longitude|lon|long";
    m.accel_unit = AccelUnit::G;
    m.rate_unit = RateUnit::DegPerSecond;
    return m;
}

ColumnMap ColumnMap::preset(std::string_view name) {
    if (name == "native") return native();
    if (name == "io-vnbd") return io_vnbd();
    throw Error(ErrorKind::InvalidInput, "unknown column preset `" + std::string(name) + "`");
}

std::vector<std::span<const ImuRecord>> RecordLog::segments() const {
    std::vector<std::span<const ImuRecord>> out;
    for (std::size_t i = 0; i < segment_starts.size(); ++i) {
        const std::size_t begin = segment_starts[i];
        const std::size_t end = i + 1 < segment_starts.size() ? segment_starts[i + 1] : records.size();
        out.emplace_back(records.data() + begin, end - begin);
    }
    return out;
}

RecordLog load_records(std::istream& in, const ColumnMap& schema, double max_gap) {
    std::string line;
    std::size_t line_no = 0;
    std::vector<std::string> header_keys;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        for (std::string_view name : split(line, ',')) header_keys.push_back(header_key(unquote(name)));
        break;
    }
    if (header_keys.empty()) throw Error(ErrorKind::SchemaMismatch, "input has no header row");

    const std::size_t col_t = resolve_column(header_keys, "time", schema.time);
    const std::size_t col_a = resolve_column(header_keys, "accel_long", schema.accel_long);
    const std::size_t col_w = resolve_column(header_keys, "yaw_rate", schema.yaw_rate);
    const std::size_t col_h = resolve_column(header_keys, "heading", schema.heading);
    const std::size_t col_lat = resolve_column(header_keys, "lat", schema.lat);
    const std::size_t col_lon = resolve_column(header_keys, "lon", schema.lon);

    const double accel_scale = schema.accel_unit == AccelUnit::G ? kStandardGravity : 1.0;
    const double rate_scale = schema.rate_unit == RateUnit::DegPerSecond ? kDegToRad : 1.0;

    RecordLog log;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const auto cells = split(line, ',');
        auto cell = [&](std::size_t col, std::string_view field) {
            if (col >= cells.size()) {
                throw Error(ErrorKind::ParseError,
                            "line " + std::to_string(line_no) + ": missing value for `" + std::string(field) + "`");
            }
            const auto v = parse_double(unquote(cells[col]));
            if (!v) {
                throw Error(ErrorKind::ParseError, "line " + std::to_string(line_no) + ": cannot parse `" +
                                                       std::string(trim(cells[col])) + "` as " + std::string(field));
            }
            return *v;
        };
        ImuRecord r;
        r.t = cell(col_t, "time");
        r.accel_long = cell(col_a, "accel_long") * accel_scale;
        r.yaw_rate = cell(col_w, "yaw_rate") * rate_scale;
        r.heading = cell(col_h, "heading");
        r.lat = cell(col_lat, "lat");
        r.lon = cell(col_lon, "lon");

        if (log.records.empty()) {
            log.segment_starts.push_back(0);
        } else {
            const double gap = r.t - log.records.back().t;
            if (!(gap > 0.0)) {
                throw Error(ErrorKind::NonMonotonicTime,
                            "line " + std::to_string(line_no) + ": timestamp " + format_double(r.t) +
                                " does not increase");
            }
            if (gap > max_gap) log.segment_starts.push_back(log.records.size());
        }
        log.records.push_back(r);
    }
    return log;
}

RecordLog segment_records(std::vector<ImuRecord> records, double max_gap) {
    RecordLog log;
    for (std::size_t i = 0; i < records.size(); ++i) {
        if (i == 0) {
            log.segment_starts.push_back(0);
            continue;
        }
        const double gap = records[i].t - records[i - 1].t;
        if (!(gap > 0.0)) {
            throw Error(ErrorKind::NonMonotonicTime,
                        "record " + std::to_string(i) + ": timestamp " + format_double(records[i].t) +
                            " does not increase");
        }
        if (gap > max_gap) log.segment_starts.push_back(i);
    }
    log.records = std::move(records);
    return log;
}

RecordLog load_records(const std::filesystem::path& path, const ColumnMap& schema, double max_gap) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::InvalidInput, "cannot open " + path.string());
    return load_records(in, schema, max_gap);
}

void write_records(std::ostream& out, std::span<const ImuRecord> records) {
    out << "t,accel_long,yaw_rate,heading,lat,lon\n";
    for (const ImuRecord& r : records) {
        out << format_double(r.t) << ',' << format_double(r.accel_long) << ',' << format_double(r.yaw_rate) << ','
            << format_double(r.heading) << ',' << format_double(r.lat) << ',' << format_double(r.lon) << '\n';
    }
}

double estimate_accel_bias(std::span<const ImuRecord> stationary) {
    if (stationary.empty()) throw Error(ErrorKind::EmptyInput, "bias estimation needs stationary samples");
    double sum = 0.0;
    for (const ImuRecord& r : stationary) sum += r.accel_long;
    return sum / static_cast<double>(stationary.size());
}

bool contiguous(const SecondWindow& prev, const SecondWindow& next) noexcept {
    return prev.segment == next.segment && next.index == prev.index + 1;
}

double rechained_displacement(const SecondWindow& w, double v_start) noexcept {
    return w.ins_displacement + (v_start - w.v_start) * w.ins_duration;
}

double rechained_v_end(const SecondWindow& w, double v_start) noexcept { return w.ins_v_end + (v_start - w.v_start); }

WindowSet build_windows(const RecordLog& log, double accel_bias, const WindowOptions& options) {
    const std::size_t n = options.samples_per_window;
    if (n == 0) throw Error(ErrorKind::InvalidInput, "samples_per_window must be positive");
    const double nominal = static_cast<double>(n) * options.dt;

    WindowSet out;
    std::vector<double> accels(n), rates(n);
    const auto segments = log.segments();
    for (std::size_t seg = 0; seg < segments.size(); ++seg) {
        const auto recs = segments[seg];
        const std::size_t count = recs.size() > n ? (recs.size() - 1) / n : 0;
        std::size_t emitted = 0;
        bool chained = false;
        double v_chain = 0.0;
        for (std::size_t k = 0; k < count; ++k) {
            const ImuRecord& open = recs[k * n];
            const ImuRecord& close = recs[(k + 1) * n];
            double gt = 0.0;
            try {
                gt = geodesy::vincenty_inverse(geodesy::GeoPoint(open.lat, open.lon),
                                               geodesy::GeoPoint(close.lat, close.lon));
            } catch (const Error& e) {
                if (e.kind() != ErrorKind::NonConvergence) throw;
                ++out.dropped_nonconvergent;
                chained = false;
                continue;
            }
            for (std::size_t i = 0; i < n; ++i) {
                accels[i] = kinematics::correct_accel(recs[k * n + i].accel_long, accel_bias);
                rates[i] = recs[k * n + i].yaw_rate;
            }

            SecondWindow w;
            w.segment = seg;
            w.index = k;
            w.t_start = open.t;
            w.duration = close.t - open.t;
            w.ins_duration = nominal;
            w.gt_displacement = gt;
            w.gt_yaw_rate = geodesy::gps_yaw_rate(open.heading, close.heading, w.duration);
            w.heading_start = open.heading;
            w.heading_end = close.heading;

            // GPS speed seeds the chain; afterwards INS velocity carries over.
            const double v0 = chained ? v_chain : gt / w.duration;
            const auto kin = kinematics::integrate_window(accels, v0, options.dt, options.rule);
            w.v_start = kin.v_start;
            w.ins_v_end = kin.v_end;
            w.ins_displacement = kin.displacement_x;
            w.ins_yaw_rate = kinematics::integrate_yaw(0.0, rates, options.dt, options.rule) / nominal;
            double accel_sum = 0.0;
            for (double a : accels) accel_sum += a;
            w.ins_accel_feature = accel_sum / static_cast<double>(n);

            v_chain = kin.v_end;
            chained = true;
            out.windows.push_back(w);
            ++emitted;
        }
        out.discarded_records += recs.size() - emitted * n;
    }
    return out;
}

std::string_view feature_name(Feature f) noexcept {
    switch (f) {
        case Feature::InsDisplacement: return "ins_displacement";
        case Feature::InsAccel: return "ins_accel";
        case Feature::InsYawRate: return "ins_yaw_rate";
        case Feature::GtDisplacement: return "gt_displacement";
        case Feature::GtYawRate: return "gt_yaw_rate";
        case Feature::VStart: return "v_start";
    }
    return "unknown";
}

double feature_value(const SecondWindow& w, Feature f) noexcept {
    switch (f) {
        case Feature::InsDisplacement: return w.ins_displacement;
        case Feature::InsAccel: return w.ins_accel_feature;
        case Feature::InsYawRate: return w.ins_yaw_rate;
        case Feature::GtDisplacement: return w.gt_displacement;
        case Feature::GtYawRate: return w.gt_yaw_rate;
        case Feature::VStart: return w.v_start;
    }
    return 0.0;
}

std::size_t ScalerParams::index_of(std::string_view name) const {
    for (std::size_t i = 0; i < entries.size(); ++i) {
        if (entries[i].name == name) return i;
    }
    throw Error(ErrorKind::InvalidInput, "scaler has no feature `" + std::string(name) + "`");
}

ScalerParams fit_scaler_columns(std::span<const std::string> names, std::span<const std::vector<double>> columns,
                                DegeneratePolicy policy) {
    if (names.size() != columns.size()) throw Error(ErrorKind::LengthMismatch, "one name per scaler column");
    ScalerParams params;
    for (std::size_t i = 0; i < columns.size(); ++i) {
        const auto& col = columns[i];
        if (col.size() < 2) throw Error(ErrorKind::EmptyInput, "scaler fit needs at least two values");
        const auto [lo, hi] = std::minmax_element(col.begin(), col.end());
        ScalerParams::Entry e{names[i], *lo, *hi, false};
        if (!(e.max > e.min)) {
            if (policy == DegeneratePolicy::Throw)
                throw Error(ErrorKind::DegenerateFeature, "feature `" + names[i] + "` is constant");
            e.degenerate = true;
        }
        params.entries.push_back(std::move(e));
    }
    return params;
}

ScalerParams fit_scaler(std::span<const SecondWindow> train, std::span<const Feature> features,
                        DegeneratePolicy policy) {
    std::vector<std::string> names;
    std::vector<std::vector<double>> columns;
    for (Feature f : features) {
        names.emplace_back(feature_name(f));
        auto& col = columns.emplace_back();
        col.reserve(train.size());
        for (const SecondWindow& w : train) col.push_back(feature_value(w, f));
    }
    return fit_scaler_columns(names, columns, policy);
}

double apply_scaler(const ScalerParams& params, std::size_t feature, double value) {
    const auto& e = params.entries.at(feature);
    if (e.degenerate) return 0.0;
    return (value - e.min) / (e.max - e.min);
}

double invert_scaler(const ScalerParams& params, std::size_t feature, double scaled) {
    const auto& e = params.entries.at(feature);
    if (e.degenerate) return e.min;
    return scaled * (e.max - e.min) + e.min;
}

std::vector<OutageSequence> extract_outage_sequences(std::span<const SecondWindow> windows, std::size_t stride,
                                                     std::size_t history, std::string_view tag) {
    if (stride == 0) throw Error(ErrorKind::InvalidInput, "outage stride must be positive");
    if (history == 0) throw Error(ErrorKind::InvalidInput, "an outage needs at least the seed window before it");

    std::vector<OutageSequence> out;
    std::size_t run_begin = 0;
    while (run_begin < windows.size()) {
        std::size_t run_end = run_begin + 1;
        while (run_end < windows.size() && contiguous(windows[run_end - 1], windows[run_end])) ++run_end;

        for (std::size_t s = run_begin + history; s + kOutageWindows <= run_end; s += stride) {
            OutageSequence seq;
            seq.scenario_tag = std::string(tag);
            seq.history.assign(windows.begin() + static_cast<std::ptrdiff_t>(s - history),
                               windows.begin() + static_cast<std::ptrdiff_t>(s));
            seq.windows.assign(windows.begin() + static_cast<std::ptrdiff_t>(s),
                               windows.begin() + static_cast<std::ptrdiff_t>(s + kOutageWindows));
            const SecondWindow& seed = seq.history.back();
            seq.seed_displacement = seed.gt_displacement;
            seq.initial_v = seed.gt_displacement / seed.duration;
            seq.initial_psi = seq.windows.front().heading_start * kDegToRad;
            out.push_back(std::move(seq));
        }
        run_begin = run_end;
    }
    return out;
}

namespace {

constexpr std::string_view kWindowsHeader = "# driftkill-windows v1";
constexpr std::string_view kSequencesHeader = "# driftkill-sequences v1";
constexpr std::size_t kWindowFields = 14;

void write_window_fields(std::ostream& out, const SecondWindow& w) {
    out << w.segment << ',' << w.index << ',' << format_double(w.t_start) << ',' << format_double(w.duration) << ','
        << format_double(w.ins_duration) << ',' << format_double(w.ins_displacement) << ',' << format_double(w.ins_accel_feature) << ','
        << format_double(w.ins_yaw_rate) << ',' << format_double(w.v_start) << ',' << format_double(w.ins_v_end)
        << ',' << format_double(w.gt_displacement) << ',' << format_double(w.gt_yaw_rate) << ','
        << format_double(w.heading_start) << ',' << format_double(w.heading_end);
}

[[noreturn]] void format_error(std::size_t line_no, std::string_view what) {
    throw Error(ErrorKind::Format, "line " + std::to_string(line_no) + ": " + std::string(what));
}

SecondWindow parse_window_fields(std::span<const std::string_view> f, std::size_t line_no) {
    if (f.size() != kWindowFields) format_error(line_no, "wrong number of window fields");
    auto num = [&](std::size_t i) {
        const auto v = parse_double(f[i]);
        if (!v) format_error(line_no, "bad number");
        return *v;
    };
    auto idx = [&](std::size_t i) {
        const auto v = detail::parse_uint(f[i]);
        if (!v) format_error(line_no, "bad index");
        return static_cast<std::size_t>(*v);
    };
    SecondWindow w;
    w.segment = idx(0);
    w.index = idx(1);
    w.t_start = num(2);
    w.duration = num(3);
    w.ins_duration = num(4);
    w.ins_displacement = num(5);
    w.ins_accel_feature = num(6);
    w.ins_yaw_rate = num(7);
    w.v_start = num(8);
    w.ins_v_end = num(9);
    w.gt_displacement = num(10);
    w.gt_yaw_rate = num(11);
    w.heading_start = num(12);
    w.heading_end = num(13);
    return w;
}

}  // namespace

void write_windows(std::ostream& out, std::span<const SecondWindow> windows) {
    out << kWindowsHeader << '\n';
    for (const SecondWindow& w : windows) {
        write_window_fields(out, w);
        out << '\n';
    }
}

std::vector<SecondWindow> read_windows(std::istream& in) {
    std::string line;
    std::size_t line_no = 0;
    if (!std::getline(in, line) || trim(line) != kWindowsHeader) format_error(1, "not a driftkill windows file");
    ++line_no;
    std::vector<SecondWindow> out;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const auto fields = split(trim(line), ',');
        out.push_back(parse_window_fields(fields, line_no));
    }
    return out;
}

// Sequence file layout: an `S` line (tag, psi, v, seed or empty, history count)
// followed by `H` history lines and `W` outage lines.
void write_sequences(std::ostream& out, std::span<const OutageSequence> sequences) {
    out << kSequencesHeader << '\n';
    for (const OutageSequence& s : sequences) {
        if (s.scenario_tag.find_first_of(",\n") != std::string::npos)
            throw Error(ErrorKind::Format, "scenario tag may not contain commas or newlines");
        out << "S," << s.scenario_tag << ',' << format_double(s.initial_psi) << ',' << format_double(s.initial_v)
            << ',' << (s.seed_displacement ? format_double(*s.seed_displacement) : std::string()) << ','
            << s.history.size() << ',' << s.windows.size() << '\n';
        for (const SecondWindow& w : s.history) {
            out << "H,";
            write_window_fields(out, w);
            out << '\n';
        }
        for (const SecondWindow& w : s.windows) {
            out << "W,";
            write_window_fields(out, w);
            out << '\n';
        }
    }
}

std::vector<OutageSequence> read_sequences(std::istream& in) {
    std::string line;
    std::size_t line_no = 1;
    if (!std::getline(in, line) || trim(line) != kSequencesHeader) format_error(1, "not a driftkill sequences file");
    std::vector<OutageSequence> out;
    std::size_t expect_history = 0, expect_windows = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string_view body = trim(line);
        if (body.empty()) continue;
        const auto fields = split(body, ',');
        const std::string_view kind = fields.front();
        const auto rest = std::span<const std::string_view>(fields).subspan(1);
        if (kind == "S") {
            if (expect_history != 0 || expect_windows != 0) format_error(line_no, "truncated sequence");
            if (rest.size() != 6) format_error(line_no, "wrong number of sequence fields");
            OutageSequence s;
            s.scenario_tag = std::string(rest[0]);
            const auto psi = parse_double(rest[1]);
            const auto v = parse_double(rest[2]);
            const auto nh = detail::parse_uint(rest[4]);
            const auto nw = detail::parse_uint(rest[5]);
            if (!psi || !v || !nh || !nw) format_error(line_no, "bad sequence header");
            s.initial_psi = *psi;
            s.initial_v = *v;
            if (!trim(rest[3]).empty()) {
                const auto seed = parse_double(rest[3]);
                if (!seed) format_error(line_no, "bad seed displacement");
                s.seed_displacement = *seed;
            }
            expect_history = *nh;
            expect_windows = *nw;
            out.push_back(std::move(s));
        } else if (kind == "H" || kind == "W") {
            if (out.empty()) format_error(line_no, "window line before any sequence header");
            auto& s = out.back();
            if (kind == "H") {
                if (expect_history == 0) format_error(line_no, "unexpected history line");
                s.history.push_back(parse_window_fields(rest, line_no));
                --expect_history;
            } else {
                if (expect_history != 0 || expect_windows == 0) format_error(line_no, "unexpected outage line");
                s.windows.push_back(parse_window_fields(rest, line_no));
                --expect_windows;
            }
        } else {
            format_error(line_no, "unknown record type");
        }
    }
    if (expect_history != 0 || expect_windows != 0) format_error(line_no, "truncated sequence");
    return out;
}

}  // namespace driftkill::dataset
