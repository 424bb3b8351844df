#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <array>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "jawprint/csv.hpp"
#include "jawprint/error.hpp"
#include "jawprint/signal.hpp"

namespace jawprint {

struct LandmarkPoint {
    long frame = 0;
    double t = 0.0;
    double x = 0.0;  // normalized image coordinates
    double y = 0.0;
    double z = 0.0;  // relative depth
    bool operator==(const LandmarkPoint&) const = default;
};

struct Resolution {
    int width = 1920;
    int height = 1080;

    static Resolution p1080() { return {1920, 1080}; }
    static Resolution p720() { return {1280, 720}; }
    std::string label() const { return std::to_string(height) + "p"; }
    bool operator==(const Resolution&) const = default;
};

inline Resolution parse_resolution(std::string_view text) {
    if (text == "1080p" || text == "1920x1080") return Resolution::p1080();
    if (text == "720p" || text == "1280x720") return Resolution::p720();
    throw Error(ErrorKind::InvalidQuality, "resolution must be 1080p or 720p, got '" + std::string(text) + "'");
}

struct LandmarkTrace {
    SensorLocation location = SensorLocation::BelowChin;
    double fps = 60.0;
    Resolution resolution;
    double scale = 0.20;  // metres per normalized unit, shared by all axes
    std::vector<LandmarkPoint> points;

    std::size_t size() const { return points.size(); }
};

inline std::string meta_path(const std::string& csv_path) {
    std::filesystem::path p(csv_path);
    p.replace_extension(".meta");
    return p.string();
}

/// Master traces must be 1080p at 60 fps. The sidecar `<stem>.meta` holds
/// `key: value` lines for fps, width, height, location and scale.
inline LandmarkTrace load_landmark_trace(const std::string& path, std::optional<SensorLocation> location = std::nullopt) {
    LandmarkTrace trace;
    std::map<std::string, std::string> meta;
    const auto meta_lines = csv::read_lines(meta_path(path));
    for (std::size_t i = 0; i < meta_lines.size(); ++i) {
        const auto line = csv::trim(meta_lines[i]);
        if (line.empty()) continue;
        const auto colon = line.find(':');
        if (colon == std::string_view::npos) throw Error(ErrorKind::MalformedRow, "meta line without ':'", i + 1);
        meta[std::string(csv::trim(line.substr(0, colon)))] = std::string(csv::trim(line.substr(colon + 1)));
    }
    auto number = [&](const std::string& key) {
        auto it = meta.find(key);
        if (it == meta.end()) throw Error(ErrorKind::MalformedRow, "meta missing '" + key + "'");
        auto v = csv::parse_double(it->second);
        if (!v) throw Error(ErrorKind::MalformedRow, "meta '" + key + "' is not a number");
        return *v;
    };
    trace.fps = number("fps");
    trace.resolution = {static_cast<int>(number("width")), static_cast<int>(number("height"))};
    trace.scale = meta.count("scale") ? number("scale") : 0.20;
    trace.location = meta.count("location") ? parse_location(meta["location"]) : location.value_or(SensorLocation::BelowChin);
    if (location && *location != trace.location)
        throw Error(ErrorKind::InvalidArgument, "trace is tagged " + std::string(file_stem(trace.location)));
    if (trace.fps != 60.0 || !(trace.resolution == Resolution::p1080()))
        throw Error(ErrorKind::InvalidQuality, "master traces must be 1920x1080 at 60 fps");

    const auto lines = csv::read_lines(path);
    std::size_t row = 0;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        const auto line = csv::trim(lines[i]);
        if (line.empty()) continue;
        if (i == 0 && line.front() == 'f') continue;
        ++row;
        const auto cells = csv::split(line);
        if (cells.size() != 5) throw Error(ErrorKind::MalformedRow, "expected frame,t,x,y,z", row);
        LandmarkPoint p;
        const auto frame = csv::parse_int(csv::trim(cells[0]));
        std::array<double, 4> v{};
        for (std::size_t c = 0; c < 4; ++c) {
            auto d = csv::parse_double(csv::trim(cells[c + 1]));
            if (!d || !std::isfinite(*d)) throw Error(ErrorKind::MalformedRow, "non-numeric field", row);
            v[c] = *d;
        }
        if (!frame) throw Error(ErrorKind::MalformedRow, "non-integer frame", row);
        p.frame = *frame;
        p.t = v[0];
        p.x = v[1];
        p.y = v[2];
        p.z = v[3];
        if (!trace.points.empty() && !(p.t > trace.points.back().t))
            throw Error(ErrorKind::NonMonotoneTimestamp, "timestamps must increase", row);
        trace.points.push_back(p);
    }
    if (trace.points.size() < 3)
        throw Error(ErrorKind::TooFewFrames, std::to_string(trace.points.size()) + " frames, need at least 3");
    return trace;
}

inline void write_landmark_trace(const std::string& path, const LandmarkTrace& trace) {
    std::ofstream out(path);
    if (!out) throw Error(ErrorKind::Io, "cannot write " + path);
    out << "frame,t,x,y,z\n";
    for (const auto& p : trace.points)
        out << p.frame << ',' << csv::format_fixed(p.t, 6) << ',' << csv::format_double(p.x) << ','
            << csv::format_double(p.y) << ',' << csv::format_double(p.z) << '\n';
    std::ofstream meta(meta_path(path));
    if (!meta) throw Error(ErrorKind::Io, "cannot write " + meta_path(path));
    meta << "fps: " << csv::format_double(trace.fps) << "\nwidth: " << trace.resolution.width
         << "\nheight: " << trace.resolution.height << "\nlocation: " << file_stem(trace.location)
         << "\nscale: " << csv::format_double(trace.scale) << '\n';
}

} // namespace jawprint
