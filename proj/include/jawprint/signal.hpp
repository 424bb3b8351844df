#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "jawprint/csv.hpp"
#include "jawprint/error.hpp"

namespace jawprint {

enum class SensorLocation { BelowChin, UpperLeftCheek, LowerRightCheek };

inline constexpr std::array<SensorLocation, 3> kAllLocations{
    SensorLocation::BelowChin, SensorLocation::UpperLeftCheek, SensorLocation::LowerRightCheek};

/// File stem used in the dataset layout.
inline std::string_view file_stem(SensorLocation loc) {
    switch (loc) {
    case SensorLocation::BelowChin: return "chin";
    case SensorLocation::UpperLeftCheek: return "upper_left_cheek";
    case SensorLocation::LowerRightCheek: return "lower_right_cheek";
    }
    return "?";
}

inline std::string_view short_label(SensorLocation loc) {
    switch (loc) {
    case SensorLocation::BelowChin: return "C";
    case SensorLocation::UpperLeftCheek: return "ULC";
    case SensorLocation::LowerRightCheek: return "LRC";
    }
    return "?";
}

inline std::size_t location_index(SensorLocation loc) { return static_cast<std::size_t>(loc); }

/// Accepts file stems ("chin") and short labels ("C").
inline SensorLocation parse_location(std::string_view text) {
    for (auto loc : kAllLocations) {
        if (text == file_stem(loc) || text == short_label(loc)) return loc;
    }
    throw Error(ErrorKind::UnknownLocation, std::string(text));
}

enum class Activity { Seated, WalkFlat, WalkStairs };

inline constexpr std::array<Activity, 3> kAllActivities{Activity::Seated, Activity::WalkFlat, Activity::WalkStairs};

inline std::string_view to_string(Activity a) {
    switch (a) {
    case Activity::Seated: return "Seated";
    case Activity::WalkFlat: return "WalkFlat";
    case Activity::WalkStairs: return "WalkStairs";
    }
    return "?";
}

inline Activity parse_activity(std::string_view text) {
    for (auto a : kAllActivities) {
        if (text == to_string(a)) return a;
    }
    throw Error(ErrorKind::InvalidArgument, "unknown activity '" + std::string(text) + "'");
}

struct SensorSample {
    double t = 0.0;
    double ax = 0.0;
    double ay = 0.0;
    double az = 0.0;

    double axis(int i) const { return i == 0 ? ax : (i == 1 ? ay : az); }
    bool operator==(const SensorSample&) const = default;
};

struct SensorStream {
    SensorLocation location = SensorLocation::BelowChin;
    double rate = 100.0;
    std::vector<SensorSample> samples;

    std::size_t size() const { return samples.size(); }
    /// Span of the stream assuming each sample covers one nominal period.
    double duration() const;
    std::vector<double> axis(int i) const {
        std::vector<double> out(samples.size());
        for (std::size_t k = 0; k < samples.size(); ++k) out[k] = samples[k].axis(i);
        return out;
    }
};

struct WindowOrigin {
    std::string user_id;
    Activity activity = Activity::Seated;
    int session_index = 1;
    std::size_t window_index = 0;

    /// `user/activity/session/window_index`, the first column of feature files.
    std::string tag() const {
        return user_id + "/" + std::string(to_string(activity)) + "/" + std::to_string(session_index) + "/" +
               std::to_string(window_index);
    }
    bool operator==(const WindowOrigin&) const = default;
};

using WindowData = Eigen::Matrix<double, Eigen::Dynamic, 3>;

struct Window {
    SensorLocation location = SensorLocation::BelowChin;
    WindowOrigin origin;
    double rate = 100.0;
    WindowData data;

    std::size_t length() const { return static_cast<std::size_t>(data.rows()); }
};

struct RecordingSession {
    std::string user_id;
    Activity activity = Activity::Seated;
    int session_index = 1;
    std::map<SensorLocation, SensorStream> streams;

    const SensorStream& stream(SensorLocation loc) const {
        auto it = streams.find(loc);
        if (it == streams.end()) throw Error(ErrorKind::MissingLocation, std::string(file_stem(loc)));
        return it->second;
    }
};

namespace detail {

inline double median_gap(const std::vector<SensorSample>& s) {
    if (s.size() < 2) return 0.0;
    std::vector<double> gaps(s.size() - 1);
    for (std::size_t i = 1; i < s.size(); ++i) gaps[i - 1] = s[i].t - s[i - 1].t;
    auto mid = gaps.begin() + static_cast<std::ptrdiff_t>(gaps.size() / 2);
    std::nth_element(gaps.begin(), mid, gaps.end());
    if (gaps.size() % 2 == 1) return *mid;
    double hi = *mid;
    double lo = *std::max_element(gaps.begin(), mid);
    return 0.5 * (lo + hi);
}

} // namespace detail

inline double SensorStream::duration() const {
    if (samples.empty()) return 0.0;
    return static_cast<double>(samples.size()) / rate;
}

/// Checks finiteness, strict timestamp order and the nominal-rate tolerance
/// (median gap within 20% of 1/rate). Row numbers in errors are 1-based.
inline void validate_stream(const SensorStream& stream) {
    if (!(stream.rate > 0.0) || !std::isfinite(stream.rate))
        throw Error(ErrorKind::InvalidArgument, "stream rate must be positive");
    const auto& s = stream.samples;
    for (std::size_t i = 0; i < s.size(); ++i) {
        const auto& v = s[i];
        if (!std::isfinite(v.t) || !std::isfinite(v.ax) || !std::isfinite(v.ay) || !std::isfinite(v.az))
            throw Error(ErrorKind::MalformedRow, "non-finite value", i + 1);
        if (i > 0 && !(v.t > s[i - 1].t)) throw Error(ErrorKind::NonMonotoneTimestamp, "", i + 1);
    }
    if (s.size() >= 2) {
        double expected = 1.0 / stream.rate;
        double gap = detail::median_gap(s);
        if (std::abs(gap - expected) > 0.2 * expected)
            throw Error(ErrorKind::RateMismatch,
                        "median gap " + std::to_string(gap) + " s vs nominal " + std::to_string(expected) + " s");
    }
}

/// Parses sensor CSV text lines (`t,ax,ay,az`, header optional).
inline SensorStream parse_stream(const std::vector<std::string>& lines, SensorLocation location,
                                 double nominal_rate = 100.0) {
    SensorStream stream;
    stream.location = location;
    stream.rate = nominal_rate;
    std::size_t row = 0;
    for (std::size_t li = 0; li < lines.size(); ++li) {
        std::string_view line = csv::trim(lines[li]);
        if (line.empty()) continue;
        if (li == 0 && !line.empty() && line.front() == 't') continue;
        ++row;
        auto fields = csv::split(line);
        if (fields.size() != 4) throw Error(ErrorKind::MalformedRow, "expected 4 fields", row);
        SensorSample sample;
        double* dst[4] = {&sample.t, &sample.ax, &sample.ay, &sample.az};
        for (int f = 0; f < 4; ++f) {
            auto v = csv::parse_double(fields[static_cast<std::size_t>(f)]);
            if (!v || !std::isfinite(*v)) throw Error(ErrorKind::MalformedRow, "bad number", row);
            *dst[f] = *v;
        }
        if (!stream.samples.empty() && !(sample.t > stream.samples.back().t))
            throw Error(ErrorKind::NonMonotoneTimestamp, "", row);
        stream.samples.push_back(sample);
    }
    validate_stream(stream);
    return stream;
}

inline SensorStream load_stream(const std::string& path, SensorLocation location, double nominal_rate = 100.0) {
    return parse_stream(csv::read_lines(path), location, nominal_rate);
}

inline void write_stream(const std::string& path, const SensorStream& stream) {
    std::ofstream out(path);
    if (!out) throw Error(ErrorKind::Io, "cannot write " + path);
    out << "t,ax,ay,az\n";
    for (const auto& s : stream.samples) {
        out << csv::format_fixed(s.t, 6) << ',' << csv::format_double(s.ax) << ',' << csv::format_double(s.ay)
            << ',' << csv::format_double(s.az) << '\n';
    }
}

/// Fixed-length windows; the trailing partial window is dropped.
inline std::vector<Window> segment(const SensorStream& stream, const WindowOrigin& origin, std::size_t length = 250,
                                   std::size_t hop = 250) {
    if (length < 2) throw Error(ErrorKind::InvalidArgument, "window length must be >= 2");
    if (hop < 1) throw Error(ErrorKind::InvalidArgument, "hop must be >= 1");
    const auto n = stream.samples.size();
    if (n < length)
        throw Error(ErrorKind::StreamTooShort,
                    std::to_string(n) + " samples < window length " + std::to_string(length));
    std::vector<Window> windows;
    windows.reserve((n - length) / hop + 1);
    for (std::size_t start = 0, idx = 0; start + length <= n; start += hop, ++idx) {
        Window w;
        w.location = stream.location;
        w.origin = origin;
        w.origin.window_index = idx;
        w.rate = stream.rate;
        w.data.resize(static_cast<Eigen::Index>(length), 3);
        for (std::size_t r = 0; r < length; ++r) {
            const auto& s = stream.samples[start + r];
            w.data.row(static_cast<Eigen::Index>(r)) << s.ax, s.ay, s.az;
        }
        windows.push_back(std::move(w));
    }
    return windows;
}

/// Per-axis linear interpolation onto t_first + k/target_rate. Grid points that
/// land within 1e-9 s of a source timestamp take that sample verbatim, which
/// makes the operation idempotent on streams already at the target rate.
inline SensorStream resample(const SensorStream& stream, double target_rate) {
    if (!(target_rate > 0.0)) throw Error(ErrorKind::InvalidArgument, "target rate must be positive");
    const auto& src = stream.samples;
    if (src.size() < 2) throw Error(ErrorKind::StreamTooShort, "resample needs at least 2 samples");
    constexpr double snap = 1e-9;
    const double t0 = src.front().t;
    const double t1 = src.back().t;
    const auto count = static_cast<std::size_t>(std::floor((t1 - t0) * target_rate + 1e-6)) + 1;

    SensorStream out;
    out.location = stream.location;
    out.rate = target_rate;
    out.samples.reserve(count);
    std::size_t seg = 0;
    for (std::size_t k = 0; k < count; ++k) {
        double t = t0 + static_cast<double>(k) / target_rate;
        if (t > t1) t = t1;
        while (seg + 1 < src.size() - 1 && src[seg + 1].t <= t) ++seg;
        const auto& a = src[seg];
        const auto& b = src[seg + 1];
        if (std::abs(t - a.t) <= snap) {
            out.samples.push_back(a);
            continue;
        }
        if (std::abs(t - b.t) <= snap) {
            out.samples.push_back(b);
            continue;
        }
        double frac = (t - a.t) / (b.t - a.t);
        out.samples.push_back({t, a.ax + (b.ax - a.ax) * frac, a.ay + (b.ay - a.ay) * frac,
                               a.az + (b.az - a.az) * frac});
    }
    return out;
}

struct AxisMeans {
    double ax = 0.0;
    double ay = 0.0;
    double az = 0.0;
};

/// Per-block axis means over consecutive spans of round(span * rate) samples.
inline std::vector<AxisMeans> window_means(const SensorStream& stream, double span = 0.5) {
    if (!(span > 0.0)) throw Error(ErrorKind::InvalidArgument, "span must be positive");
    const auto per_block = static_cast<std::size_t>(std::llround(span * stream.rate));
    if (per_block == 0 || stream.samples.size() < per_block)
        throw Error(ErrorKind::StreamTooShort, "stream shorter than one span");
    const auto blocks = stream.samples.size() / per_block;
    std::vector<AxisMeans> out(blocks);
    for (std::size_t b = 0; b < blocks; ++b) {
        AxisMeans m;
        for (std::size_t i = b * per_block; i < (b + 1) * per_block; ++i) {
            m.ax += stream.samples[i].ax;
            m.ay += stream.samples[i].ay;
            m.az += stream.samples[i].az;
        }
        const auto n = static_cast<double>(per_block);
        out[b] = {m.ax / n, m.ay / n, m.az / n};
    }
    return out;
}

} // namespace jawprint
