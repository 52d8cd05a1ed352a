#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <numbers>
#include <optional>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "ssgp/kalman.hpp"
#include "ssgp/kernel_expr.hpp"

namespace ssgp {

/// Timestamps, a D×T observation matrix (NaN = missing) and optional 0/1 labels.
struct LabeledSeries {
    std::string name;
    std::vector<double> timestamps;
    std::vector<std::string> timestamp_text;  // original spelling, empty when generated
    MatrixXd values;
    std::vector<int> labels;
    std::string timestamp_column = "timestamp";
    std::string label_column = "is_anomaly";
    std::vector<std::string> columns;

    Index dims() const { return values.rows(); }
    Index length() const { return values.cols(); }
    bool has_labels() const { return !labels.empty(); }

    LabeledSeries slice(Index begin, Index end) const {
        LabeledSeries out;
        out.name = name;
        out.timestamp_column = timestamp_column;
        out.label_column = label_column;
        out.columns = columns;
        out.values = values.middleCols(begin, end - begin);
        out.timestamps.assign(timestamps.begin() + begin, timestamps.begin() + end);
        if (!timestamp_text.empty()) out.timestamp_text.assign(timestamp_text.begin() + begin, timestamp_text.begin() + end);
        if (!labels.empty()) out.labels.assign(labels.begin() + begin, labels.begin() + end);
        return out;
    }
};

inline std::string format_number(double v) {
    if (std::isnan(v)) return "";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

namespace detail {

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    if (s.size() >= 2 && s.front() == '"' && s.back() == '"') s = s.substr(1, s.size() - 2);
    return s;
}

inline std::vector<std::string_view> split_fields(std::string_view line, char sep = ',') {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t pos = line.find(sep, start);
        out.push_back(trim(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

inline std::optional<double> parse_double(std::string_view s) {
    if (s.empty()) return std::nullopt;
    if (s.front() == '+') s.remove_prefix(1);
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size()) return std::nullopt;
    return v;
}

// Days since 1970-01-01 in the proleptic Gregorian calendar.
inline long days_from_civil(long y, unsigned m, unsigned d) {
    y -= m <= 2;
    const long era = (y >= 0 ? y : y - 399) / 400;
    const auto yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + static_cast<long>(doe) - 719468;
}

inline std::optional<double> parse_iso8601(std::string_view s) {
    auto digits = [&](std::size_t pos, std::size_t n) -> std::optional<long> {
        if (pos + n > s.size()) return std::nullopt;
        long v = 0;
        for (std::size_t i = pos; i < pos + n; ++i) {
            if (s[i] < '0' || s[i] > '9') return std::nullopt;
            v = v * 10 + (s[i] - '0');
        }
        return v;
    };
    const auto year = digits(0, 4), month = digits(5, 2), day = digits(8, 2);
    if (!year || !month || !day || s[4] != '-' || s[7] != '-') return std::nullopt;
    if (*month < 1 || *month > 12 || *day < 1 || *day > 31) return std::nullopt;
    double seconds = 86400.0 * static_cast<double>(days_from_civil(*year, static_cast<unsigned>(*month),
                                                                    static_cast<unsigned>(*day)));
    std::size_t pos = 10;
    if (pos == s.size()) return seconds;
    if (s[pos] != 'T' && s[pos] != ' ') return std::nullopt;
    const auto hour = digits(pos + 1, 2), minute = digits(pos + 4, 2);
    if (!hour || !minute || s[pos + 3] != ':' || *hour > 23 || *minute > 59) return std::nullopt;
    seconds += 3600.0 * static_cast<double>(*hour) + 60.0 * static_cast<double>(*minute);
    pos += 6;
    if (pos < s.size() && s[pos] == ':') {
        const auto sec = digits(pos + 1, 2);
        if (!sec || *sec > 60) return std::nullopt;
        seconds += static_cast<double>(*sec);
        pos += 3;
        if (pos < s.size() && s[pos] == '.') {
            std::size_t end = pos + 1;
            while (end < s.size() && s[end] >= '0' && s[end] <= '9') ++end;
            if (end == pos + 1) return std::nullopt;
            const auto frac = parse_double(std::string("0") + std::string(s.substr(pos, end - pos)));
            seconds += frac.value_or(0.0);
            pos = end;
        }
    }
    if (pos == s.size()) return seconds;
    if (s[pos] == 'Z' && pos + 1 == s.size()) return seconds;
    if ((s[pos] == '+' || s[pos] == '-') && pos + 6 == s.size() && s[pos + 3] == ':') {
        const auto oh = digits(pos + 1, 2), om = digits(pos + 4, 2);
        if (!oh || !om) return std::nullopt;
        const double offset = 3600.0 * static_cast<double>(*oh) + 60.0 * static_cast<double>(*om);
        return s[pos] == '+' ? seconds - offset : seconds + offset;
    }
    return std::nullopt;
}

inline bool is_label_column(std::string_view name) {
    return name == "is_anomaly" || name == "label" || name == "anomaly";
}

}  // namespace detail

/// Timestamp cell as a number: plain numbers are taken as-is, ISO-8601 dates become
/// seconds since the Unix epoch (UTC).
inline std::optional<double> parse_timestamp(std::string_view text) {
    if (auto v = detail::parse_double(text)) return v;
    return detail::parse_iso8601(text);
}

struct CsvRow {
    double timestamp = kNaN;
    std::string timestamp_text;
    VectorXd values;
    int label = -1;  // -1 when the file has no label column
};

/// Streaming reader for `timestamp,<dim>...[,is_anomaly]` files. Holds one row at a time.
class CsvReader {
public:
    explicit CsvReader(std::istream& in, std::string source = "<stream>") : in_(in), source_(std::move(source)) {
        std::string header;
        if (!std::getline(in_, header)) throw InputError(source_ + ": empty file, expected a header row");
        ++line_;
        auto fields = detail::split_fields(header);
        if (fields.size() < 2) throw InputError(source_ + ":1: header needs a timestamp and at least one value column");
        timestamp_column_ = std::string(fields.front());
        if (detail::is_label_column(fields.back())) {
            label_column_ = std::string(fields.back());
            fields.pop_back();
        }
        for (std::size_t i = 1; i < fields.size(); ++i) columns_.emplace_back(fields[i]);
        if (columns_.empty()) throw InputError(source_ + ":1: no value columns");
    }

    const std::vector<std::string>& columns() const { return columns_; }
    const std::string& timestamp_column() const { return timestamp_column_; }
    bool has_labels() const { return !label_column_.empty(); }
    const std::string& label_column() const { return label_column_; }
    Index dims() const { return static_cast<Index>(columns_.size()); }
    long line() const { return line_; }

    /// Reads the next data row; returns false at end of input. Blank lines are skipped.
    bool next(CsvRow& row) {
        std::string text;
        while (std::getline(in_, text)) {
            ++line_;
            if (detail::trim(text).empty()) continue;
            parse(text, row);
            return true;
        }
        return false;
    }

private:
    [[noreturn]] void fail(const std::string& what) const {
        throw InputError(source_ + ":" + std::to_string(line_) + ": " + what);
    }

    void parse(std::string_view text, CsvRow& row) {
        const auto fields = detail::split_fields(text);
        const std::size_t expected = columns_.size() + 1 + (has_labels() ? 1 : 0);
        if (fields.size() != expected)
            fail("expected " + std::to_string(expected) + " fields, found " + std::to_string(fields.size()));
        const auto t = parse_timestamp(fields[0]);
        if (!t) fail("unparseable timestamp '" + std::string(fields[0]) + "'");
        if (rows_ > 0 && !(*t > last_time_)) fail("timestamps must be strictly increasing");
        last_time_ = *t;
        ++rows_;
        row.timestamp = *t;
        row.timestamp_text = std::string(fields[0]);
        row.values.resize(dims());
        for (Index i = 0; i < dims(); ++i) {
            const auto cell = fields[static_cast<std::size_t>(i) + 1];
            if (cell.empty() || cell == "nan" || cell == "NaN" || cell == "NA") {
                row.values(i) = kNaN;
                continue;
            }
            const auto v = detail::parse_double(cell);
            if (!v) fail("column '" + columns_[static_cast<std::size_t>(i)] + "': not a number '" + std::string(cell) + "'");
            row.values(i) = *v;
        }
        row.label = -1;
        if (has_labels()) {
            const auto cell = fields.back();
            if (cell == "0" || cell == "0.0" || cell == "false") row.label = 0;
            else if (cell == "1" || cell == "1.0" || cell == "true") row.label = 1;
            else fail("label must be 0 or 1, found '" + std::string(cell) + "'");
        }
    }

    std::istream& in_;
    std::string source_;
    std::string timestamp_column_;
    std::string label_column_;
    std::vector<std::string> columns_;
    long line_ = 0;
    long rows_ = 0;
    double last_time_ = kNaN;
};

inline LabeledSeries read_csv(std::istream& in, const std::string& source = "<stream>") {
    CsvReader reader(in, source);
    LabeledSeries s;
    s.name = source;
    s.timestamp_column = reader.timestamp_column();
    s.columns = reader.columns();
    if (reader.has_labels()) s.label_column = reader.label_column();
    std::vector<double> flat;
    CsvRow row;
    while (reader.next(row)) {
        s.timestamps.push_back(row.timestamp);
        s.timestamp_text.push_back(std::move(row.timestamp_text));
        flat.insert(flat.end(), row.values.data(), row.values.data() + row.values.size());
        if (reader.has_labels()) s.labels.push_back(row.label);
    }
    s.values = Eigen::Map<const MatrixXd>(flat.data(), reader.dims(), static_cast<Index>(s.timestamps.size()));
    return s;
}

inline LabeledSeries load_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open '" + path.string() + "'");
    LabeledSeries s = read_csv(in, path.string());
    s.name = path.stem().string();
    return s;
}

/// Canonical CSV: shortest round-trip numbers, empty cells for missing values.
inline void write_csv(std::ostream& out, const LabeledSeries& s) {
    out << s.timestamp_column;
    for (Index i = 0; i < s.dims(); ++i)
        out << ',' << (static_cast<std::size_t>(i) < s.columns.size() ? s.columns[static_cast<std::size_t>(i)]
                                                                        : "dim_" + std::to_string(i));
    if (s.has_labels()) out << ',' << s.label_column;
    out << '\n';
    for (Index t = 0; t < s.length(); ++t) {
        const auto ut = static_cast<std::size_t>(t);
        out << (s.timestamp_text.empty() ? format_number(s.timestamps[ut]) : s.timestamp_text[ut]);
        for (Index i = 0; i < s.dims(); ++i) out << ',' << format_number(s.values(i, t));
        if (s.has_labels()) out << ',' << s.labels[ut];
        out << '\n';
    }
}

inline void write_csv(const std::filesystem::path& path, const LabeledSeries& s) {
    std::ofstream out(path);
    if (!out) throw InputError("cannot write '" + path.string() + "'");
    write_csv(out, s);
}

inline std::vector<std::string> default_columns(Index d) {
    std::vector<std::string> out;
    for (Index i = 0; i < d; ++i) out.push_back("dim_" + std::to_string(i));
    return out;
}

/// Platform-independent random numbers: the engine sequence of std::mt19937_64 is fixed by
/// the standard, while the standard distributions are not, so uniforms take the top 53 bits
/// and normals use the Box–Muller transform.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        spare_ = r * std::sin(2.0 * std::numbers::pi * u2);
        has_spare_ = true;
        return r * std::cos(2.0 * std::numbers::pi * u2);
    }

    VectorXd normal_vector(Index n) {
        VectorXd v(n);
        for (Index i = 0; i < n; ++i) v(i) = normal();
        return v;
    }

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

enum class NoiseScale { variance, stddev };

/// f(t) = cos(0.04 t + 0.33 π) sin(0.2 t) + 5t/300 + ε at t = 0..T−1. The noise parameter 0.15
/// is a variance by default and a standard deviation with NoiseScale::stddev.
inline LabeledSeries gen_univariate(Index length, std::uint64_t seed, bool noiseless = false,
                                    NoiseScale scale = NoiseScale::variance) {
    if (length < 1) throw ParameterError("gen_univariate: length must be at least 1");
    const double sd = scale == NoiseScale::variance ? std::sqrt(0.15) : 0.15;
    Rng rng(seed);
    LabeledSeries s;
    s.name = "univariate";
    s.columns = default_columns(1);
    s.values.resize(1, length);
    s.labels.assign(static_cast<std::size_t>(length), 0);
    for (Index t = 0; t < length; ++t) {
        const double x = static_cast<double>(t);
        const double eps = noiseless ? 0.0 : sd * rng.normal();
        s.timestamps.push_back(x);
        s.values(0, t) = std::cos(0.04 * x + 0.33 * std::numbers::pi) * std::sin(0.2 * x) + eps + 5.0 / 300.0 * x;
    }
    return s;
}

enum class InjectionKind { spike, amplitude_scale, damping, sensor_offset, change_point };

inline InjectionKind parse_injection_kind(std::string_view s) {
    if (s == "spike") return InjectionKind::spike;
    if (s == "amplitude-scale") return InjectionKind::amplitude_scale;
    if (s == "damping") return InjectionKind::damping;
    if (s == "sensor-offset") return InjectionKind::sensor_offset;
    if (s == "change-point") return InjectionKind::change_point;
    throw ConfigError("unknown injection kind '" + std::string(s) + "'");
}

/// An anomaly applied on [start, start + duration). Latent-targeted injections modify the latent
/// path before mixing (latent >= 0); otherwise they act on the listed observed dimensions.
/// spike and sensor-offset add `magnitude`; amplitude-scale and damping multiply by it;
/// change-point adds it from `start` to the end of the series (only the window is labeled).
struct Injection {
    InjectionKind kind = InjectionKind::spike;
    Index start = 0;
    Index duration = 1;
    double magnitude = 0.0;
    Index latent = -1;
    std::vector<Index> dims;
};

struct SyntheticSpec {
    Index length = 1000;
    std::uint64_t seed = 0;
    Index dims = 10;
    std::vector<KernelSpec> latents;
    double noise_variance = 0.01;
    double offset_scale = 1.0;
    std::vector<Injection> injections;
    std::optional<MatrixXd> loading;  // drawn at random when absent
    std::optional<VectorXd> offset;
};

struct SyntheticData {
    LabeledSeries series;
    MatrixXd latents;  // K×T, after latent injections
    MatrixXd clean;    // C z + d (+ observed-dimension injections), before noise
    MatrixXd loading;
    VectorXd offset;
};

/// Exact sample path of a state-space GP at unit-spaced times.
inline VectorXd sample_latent(const StateSpaceKernel& kernel, Index length, Rng& rng) {
    VectorXd path(length);
    if (length == 0) return path;
    const auto tr = discretize(kernel, 1.0);
    const MatrixXd q_root = psd_sqrt_factor(tr.Q);
    VectorXd x = psd_sqrt_factor(kernel.initial_cov) * rng.normal_vector(kernel.state_dim());
    for (Index t = 0; t < length; ++t) {
        if (t > 0) x = tr.A * x + q_root * rng.normal_vector(kernel.state_dim());
        path(t) = kernel.emission.dot(x);
    }
    return path;
}

/// Random D×K matrix with orthonormal columns.
inline MatrixXd random_orthonormal(Index rows, Index cols, Rng& rng) {
    MatrixXd g(rows, cols);
    for (Index j = 0; j < cols; ++j)
        for (Index i = 0; i < rows; ++i) g(i, j) = rng.normal();
    Eigen::HouseholderQR<MatrixXd> qr(g);
    MatrixXd q = qr.householderQ() * MatrixXd::Identity(rows, cols);
    // Fix the sign convention so that R has a positive diagonal.
    for (Index j = 0; j < cols; ++j)
        if (qr.matrixQR()(j, j) < 0.0) q.col(j) *= -1.0;
    return q;
}

inline SyntheticData gen_multivariate(const SyntheticSpec& spec) {
    const Index k_count = static_cast<Index>(spec.latents.size());
    const Index d_count = spec.dims, t_count = spec.length;
    if (k_count < 1) throw ConfigError("gen_multivariate: at least one latent kernel required");
    if (d_count < k_count) throw ConfigError("gen_multivariate: D must be at least K");
    if (t_count < 1) throw ParameterError("gen_multivariate: length must be at least 1");
    if (!(spec.noise_variance >= 0.0)) throw ParameterError("gen_multivariate: noise variance must be nonnegative");
    for (const auto& inj : spec.injections) {
        if (inj.duration < 1 || inj.start < 0 || inj.start + inj.duration > t_count)
            throw ConfigError("gen_multivariate: injection window outside [0, T)");
        if (inj.latent >= k_count) throw ConfigError("gen_multivariate: injection targets latent " +
                                                     std::to_string(inj.latent) + " but K=" + std::to_string(k_count));
        if (inj.latent < 0) {
            if (inj.dims.empty()) throw ConfigError("gen_multivariate: injection needs a latent or observed dimensions");
            for (Index d : inj.dims)
                if (d < 0 || d >= d_count) throw ConfigError("gen_multivariate: injection dimension out of range");
        }
    }

    Rng rng(spec.seed);
    SyntheticData out;
    out.latents.resize(k_count, t_count);
    for (Index k = 0; k < k_count; ++k)
        out.latents.row(k) = sample_latent(build(spec.latents[static_cast<std::size_t>(k)]), t_count, rng).transpose();
    if (spec.loading && (spec.loading->rows() != d_count || spec.loading->cols() != k_count))
        throw ShapeError("gen_multivariate: loading must be D×K");
    if (spec.offset && spec.offset->size() != d_count) throw ShapeError("gen_multivariate: offset must have D entries");
    out.loading = spec.loading ? *spec.loading : random_orthonormal(d_count, k_count, rng);
    out.offset = spec.offset ? *spec.offset : VectorXd(spec.offset_scale * rng.normal_vector(d_count));

    auto apply = [](auto&& row, const Injection& inj, Index t_end) {
        switch (inj.kind) {
            case InjectionKind::spike:
            case InjectionKind::sensor_offset:
                row.segment(inj.start, inj.duration).array() += inj.magnitude;
                break;
            case InjectionKind::amplitude_scale:
            case InjectionKind::damping:
                row.segment(inj.start, inj.duration) *= inj.magnitude;
                break;
            case InjectionKind::change_point:
                row.segment(inj.start, t_end - inj.start).array() += inj.magnitude;
                break;
        }
    };
    for (const auto& inj : spec.injections)
        if (inj.latent >= 0) apply(out.latents.row(inj.latent), inj, t_count);

    out.clean = (out.loading * out.latents).colwise() + out.offset;
    for (const auto& inj : spec.injections)
        if (inj.latent < 0)
            for (Index d : inj.dims) apply(out.clean.row(d), inj, t_count);

    const double sd = std::sqrt(spec.noise_variance);
    LabeledSeries& s = out.series;
    s.name = "multivariate";
    s.columns = default_columns(d_count);
    s.values.resize(d_count, t_count);
    for (Index t = 0; t < t_count; ++t) {
        s.timestamps.push_back(static_cast<double>(t));
        for (Index i = 0; i < d_count; ++i) s.values(i, t) = out.clean(i, t) + sd * rng.normal();
    }
    s.labels.assign(static_cast<std::size_t>(t_count), 0);
    for (const auto& inj : spec.injections)
        std::fill_n(s.labels.begin() + inj.start, inj.duration, 1);
    return out;
}

/// Adds `magnitude` to dimension `dim` on [start, start + duration) and labels the window.
inline void inject_spike(LabeledSeries& s, Index start, Index duration, double magnitude, Index dim = 0) {
    if (start < 0 || duration < 1 || start + duration > s.length()) throw ConfigError("inject_spike: window outside series");
    if (s.labels.empty()) s.labels.assign(static_cast<std::size_t>(s.length()), 0);
    s.values.row(dim).segment(start, duration).array() += magnitude;
    std::fill_n(s.labels.begin() + start, duration, 1);
}

/// Explainability scenario: Matérn (lengthscale 50), daily (24) and weekly (168) cosine latents
/// mixed into 10 dimensions. Train and test share the loading matrix and offset but have
/// independent latent paths and noise; the test sequence has an amplitude increase on the daily latent, damping of the weekly latent
/// and an offset on 7 observed dimensions.
struct ExplainScenario {
    SyntheticData train;
    SyntheticData test;
    std::vector<Injection> injections;
};

inline std::vector<KernelSpec> explain_scenario_kernels() {
    return {parse_kernel("matern32(lengthscale=50, variance=1)"), parse_kernel("cosine(period=24, variance=1)"),
            parse_kernel("cosine(period=168, variance=1)")};
}

inline ExplainScenario explain_scenario(std::uint64_t seed, Index length = 1200) {
    SyntheticSpec spec;
    spec.length = length;
    spec.seed = seed;
    spec.dims = 10;
    spec.latents = explain_scenario_kernels();
    spec.noise_variance = 0.01;
    ExplainScenario out;
    out.train = gen_multivariate(spec);
    const Index w = length / 12;
    Injection amplitude{InjectionKind::amplitude_scale, length / 4, w, 3.0, 1, {}};
    Injection damping{InjectionKind::damping, length / 2, w, 0.0, 2, {}};
    Injection offset{InjectionKind::sensor_offset, 3 * length / 4, w, 1.5, -1, {0, 1, 2, 3, 4, 5, 6}};
    out.injections = {amplitude, damping, offset};
    spec.injections = out.injections;
    spec.seed = seed + 1;
    spec.loading = out.train.loading;
    spec.offset = out.train.offset;
    out.test = gen_multivariate(spec);
    return out;
}

/// Robustness scenario: the univariate series of length 300 with two spikes and a level shift.
inline LabeledSeries robustness_scenario(std::uint64_t seed, double spike_sigmas = 8.0) {
    LabeledSeries s = gen_univariate(300, seed);
    s.name = "robustness";
    double mean = s.values.row(0).mean();
    const double sd = std::sqrt((s.values.row(0).array() - mean).square().mean());
    inject_spike(s, 100, 5, spike_sigmas * sd);
    inject_spike(s, 160, 5, -spike_sigmas * sd);
    s.values.row(0).segment(220, 80).array() += 3.0 * sd;
    std::fill_n(s.labels.begin() + 220, 5, 1);
    return s;
}

/// One train/test pair from a benchmark corpus; labels live on the test series.
struct BenchmarkSeries {
    std::string name;
    LabeledSeries train;
    LabeledSeries test;
};

enum class DatasetLayout { csv, nab, nasa, smd };

inline DatasetLayout parse_dataset_layout(std::string_view s) {
    if (s == "csv") return DatasetLayout::csv;
    if (s == "nab") return DatasetLayout::nab;
    if (s == "nasa") return DatasetLayout::nasa;
    if (s == "smd") return DatasetLayout::smd;
    throw ConfigError("unknown dataset layout '" + std::string(s) + "' (expected csv, nab, nasa or smd)");
}

namespace detail {

inline std::vector<std::filesystem::path> sorted_files(const std::filesystem::path& dir, std::string_view ext) {
    if (!std::filesystem::is_directory(dir)) throw InputError("missing directory '" + dir.string() + "'");
    std::vector<std::filesystem::path> out;
    for (const auto& e : std::filesystem::directory_iterator(dir))
        if (e.is_regular_file() && e.path().extension() == ext) out.push_back(e.path());
    std::sort(out.begin(), out.end());
    return out;
}

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open '" + path.string() + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Headerless numeric matrix, one time step per line, index timestamps.
inline LabeledSeries load_plain_matrix(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open '" + path.string() + "'");
    std::vector<double> flat;
    Index dims = -1;
    long line_no = 0;
    std::string line;
    LabeledSeries s;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const auto fields = split_fields(line);
        if (dims < 0) dims = static_cast<Index>(fields.size());
        if (static_cast<Index>(fields.size()) != dims)
            throw InputError(path.string() + ":" + std::to_string(line_no) + ": expected " + std::to_string(dims) + " fields");
        for (auto f : fields) {
            const auto v = f.empty() ? std::optional<double>(kNaN) : parse_double(f);
            if (!v) throw InputError(path.string() + ":" + std::to_string(line_no) + ": not a number '" + std::string(f) + "'");
            flat.push_back(*v);
        }
        s.timestamps.push_back(static_cast<double>(s.timestamps.size()));
    }
    if (dims < 1) throw InputError(path.string() + ": no data rows");
    s.name = path.stem().string();
    s.columns = default_columns(dims);
    s.values = Eigen::Map<const MatrixXd>(flat.data(), dims, static_cast<Index>(s.timestamps.size()));
    return s;
}

inline std::vector<BenchmarkSeries> load_nab(const std::filesystem::path& root) {
    const auto label_path = root / "labels" / "combined_windows.json";
    nlohmann::json windows;
    try {
        windows = nlohmann::json::parse(read_file(label_path));
    } catch (const nlohmann::json::exception& e) {
        throw InputError(label_path.string() + ": " + e.what());
    }
    std::vector<std::filesystem::path> categories;
    for (const auto& e : std::filesystem::directory_iterator(root / "data"))
        if (e.is_directory()) categories.push_back(e.path());
    std::sort(categories.begin(), categories.end());

    std::vector<BenchmarkSeries> out;
    for (const auto& cat : categories) {
        for (const auto& file : sorted_files(cat, ".csv")) {
            LabeledSeries s = load_csv(file);
            const std::string key = cat.filename().string() + "/" + file.filename().string();
            s.name = key;
            s.labels.assign(static_cast<std::size_t>(s.length()), 0);
            if (windows.contains(key)) {
                for (const auto& w : windows.at(key)) {
                    const auto begin = parse_timestamp(w.at(0).get<std::string>());
                    const auto end = parse_timestamp(w.at(1).get<std::string>());
                    if (!begin || !end) throw InputError(label_path.string() + ": bad window for " + key);
                    for (std::size_t t = 0; t < s.timestamps.size(); ++t)
                        if (s.timestamps[t] >= *begin && s.timestamps[t] <= *end) s.labels[t] = 1;
                }
            }
            const Index split = s.length() / 5;
            out.push_back({key, s.slice(0, split), s.slice(split, s.length())});
            out.back().train.labels.clear();
        }
    }
    return out;
}

inline std::vector<BenchmarkSeries> load_smd(const std::filesystem::path& root) {
    std::vector<BenchmarkSeries> out;
    for (const auto& file : sorted_files(root / "train", ".txt")) {
        const auto name = file.filename();
        BenchmarkSeries b;
        b.name = file.stem().string();
        b.train = load_plain_matrix(file);
        b.test = load_plain_matrix(root / "test" / name);
        const LabeledSeries labels = load_plain_matrix(root / "test_label" / name);
        if (labels.length() != b.test.length() || labels.dims() != 1)
            throw InputError("smd: label file for " + b.name + " must have one column per test row");
        for (Index t = 0; t < labels.length(); ++t) b.test.labels.push_back(labels.values(0, t) > 0.5 ? 1 : 0);
        out.push_back(std::move(b));
    }
    return out;
}

inline std::vector<BenchmarkSeries> load_nasa(const std::filesystem::path& root) {
    const auto index_path = root / "labeled_anomalies.csv";
    std::ifstream in(index_path);
    if (!in) throw InputError("cannot open '" + index_path.string() + "'");
    std::string line;
    std::getline(in, line);
    long line_no = 1;
    std::vector<BenchmarkSeries> out;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        // chan_id,spacecraft,"[[a, b], ...]",class,num_values; the class column may also hold brackets.
        const auto first_comma = line.find(',');
        std::string sequences;
        if (const auto q = line.find('"'); q != std::string::npos) {
            const auto q_end = line.find('"', q + 1);
            if (q_end != std::string::npos) sequences = line.substr(q + 1, q_end - q - 1);
        } else if (const auto open = line.find("[["); open != std::string::npos) {
            const auto close = line.find("]]", open);
            if (close != std::string::npos) sequences = line.substr(open, close + 2 - open);
        }
        if (sequences.empty() || first_comma == std::string::npos)
            throw InputError(index_path.string() + ":" + std::to_string(line_no) + ": malformed row");
        BenchmarkSeries b;
        b.name = std::string(trim(std::string_view(line).substr(0, first_comma)));
        nlohmann::json ranges;
        try {
            ranges = nlohmann::json::parse(sequences);
        } catch (const nlohmann::json::exception& e) {
            throw InputError(index_path.string() + ":" + std::to_string(line_no) + ": " + e.what());
        }
        b.train = load_plain_matrix(root / "train" / (b.name + ".csv"));
        b.test = load_plain_matrix(root / "test" / (b.name + ".csv"));
        b.test.labels.assign(static_cast<std::size_t>(b.test.length()), 0);
        for (const auto& r : ranges) {
            const auto a = r.at(0).get<Index>(), z = r.at(1).get<Index>();
            if (a < 0 || z >= b.test.length() || a > z)
                throw InputError(index_path.string() + ":" + std::to_string(line_no) + ": anomaly range outside test series");
            std::fill(b.test.labels.begin() + a, b.test.labels.begin() + z + 1, 1);
        }
        out.push_back(std::move(b));
    }
    return out;
}

}  // namespace detail

/// Reads a benchmark corpus from its on-disk layout (see README).
/// csv: <root>/train/*.csv and <root>/test/*.csv with matching names, labels in the test files.
inline std::vector<BenchmarkSeries> load_benchmark_layout(const std::filesystem::path& root, DatasetLayout layout) {
    if (!std::filesystem::is_directory(root)) throw InputError("dataset root '" + root.string() + "' is not a directory");
    switch (layout) {
        case DatasetLayout::nab: return detail::load_nab(root);
        case DatasetLayout::smd: return detail::load_smd(root);
        case DatasetLayout::nasa: return detail::load_nasa(root);
        case DatasetLayout::csv: {
            std::vector<BenchmarkSeries> out;
            for (const auto& file : detail::sorted_files(root / "train", ".csv")) {
                BenchmarkSeries b;
                b.name = file.stem().string();
                b.train = load_csv(file);
                b.test = load_csv(root / "test" / file.filename());
                out.push_back(std::move(b));
            }
            return out;
        }
    }
    return {};
}

}  // namespace ssgp
