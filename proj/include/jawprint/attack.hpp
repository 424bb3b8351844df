#pragma once

#include <cmath>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "jawprint/dataset.hpp"
#include "jawprint/error.hpp"
#include "jawprint/evaluation.hpp"
#include "jawprint/landmarks.hpp"
#include "jawprint/parallel.hpp"
#include "jawprint/verifier.hpp"

namespace jawprint {

inline constexpr double kStandardGravity = 9.80665;

struct QualityLevel {
    int fps = 60;
    Resolution resolution;

    std::string label() const { return std::to_string(fps) + "fps@" + resolution.label(); }
    bool operator==(const QualityLevel&) const = default;
};

/// The six degradations of a 1080p/60 master, best first.
inline std::vector<QualityLevel> all_quality_levels() {
    std::vector<QualityLevel> out;
    for (auto res : {Resolution::p1080(), Resolution::p720()})
        for (int fps : {60, 30, 15}) out.push_back({fps, res});
    return out;
}

struct SyntheticAccelTrace {
    SensorLocation location = SensorLocation::BelowChin;
    double rate = 60.0;
    std::vector<double> t;  // timestamps of the interior frames
    Eigen::Matrix<double, Eigen::Dynamic, 3> samples;  // m/s²

    std::size_t size() const { return static_cast<std::size_t>(samples.rows()); }
};

/// Keeps frames 0, s, 2s, … with s = fps / target_fps.
inline LandmarkTrace decimate_fps(const LandmarkTrace& trace, double target_fps) {
    if (!(target_fps > 0.0) || target_fps > trace.fps)
        throw Error(ErrorKind::NonIntegerDecimation, "cannot go from " + csv::format_double(trace.fps) + " to " +
                                                         csv::format_double(target_fps) + " fps");
    const double ratio = trace.fps / target_fps;
    const double stride = std::round(ratio);
    if (std::abs(ratio - stride) > 1e-9)
        throw Error(ErrorKind::NonIntegerDecimation,
                    csv::format_double(target_fps) + " does not divide " + csv::format_double(trace.fps));
    LandmarkTrace out = trace;
    out.fps = target_fps;
    out.points.clear();
    const auto step = static_cast<std::size_t>(stride);
    for (std::size_t i = 0; i < trace.points.size(); i += step) out.points.push_back(trace.points[i]);
    return out;
}

/// Snaps x to the 1/width grid and y to the 1/height grid; depth is untouched.
inline LandmarkTrace quantize_resolution(const LandmarkTrace& trace, const Resolution& target) {
    if (target.width > trace.resolution.width || target.height > trace.resolution.height)
        throw Error(ErrorKind::Upscaling, "cannot raise " + trace.resolution.label() + " to " + target.label());
    LandmarkTrace out = trace;
    out.resolution = target;
    const double w = target.width, h = target.height;
    for (auto& p : out.points) {
        p.x = std::round(p.x * w) / w;
        p.y = std::round(p.y * h) / h;
    }
    return out;
}

/// aₜ = scale·(pₜ₊₁ − 2pₜ + pₜ₋₁)·fps² on every axis.
inline SyntheticAccelTrace synthesize_accel(const LandmarkTrace& trace) {
    const auto n = trace.points.size();
    if (n < 3) throw Error(ErrorKind::TooFewFrames, std::to_string(n) + " frames, need at least 3");
    SyntheticAccelTrace out;
    out.location = trace.location;
    out.rate = trace.fps;
    out.samples.resize(static_cast<Eigen::Index>(n - 2), 3);
    out.t.resize(n - 2);
    const double gain = trace.scale * trace.fps * trace.fps;
    for (std::size_t i = 1; i + 1 < n; ++i) {
        const auto& a = trace.points[i - 1];
        const auto& b = trace.points[i];
        const auto& c = trace.points[i + 1];
        const auto r = static_cast<Eigen::Index>(i - 1);
        out.samples(r, 0) = gain * (c.x - 2 * b.x + a.x);
        out.samples(r, 1) = gain * (c.y - 2 * b.y + a.y);
        out.samples(r, 2) = gain * (c.z - 2 * b.z + a.z);
        out.t[i - 1] = b.t;
    }
    return out;
}

/// Sensor stream in g at the trace rate, ready for resampling.
inline SensorStream accel_stream(const SyntheticAccelTrace& accel) {
    SensorStream s;
    s.location = accel.location;
    s.rate = accel.rate;
    s.samples.resize(accel.size());
    for (std::size_t i = 0; i < accel.size(); ++i) {
        const auto r = static_cast<Eigen::Index>(i);
        s.samples[i] = {accel.t[i], accel.samples(r, 0) / kStandardGravity, accel.samples(r, 1) / kStandardGravity,
                        accel.samples(r, 2) / kStandardGravity};
    }
    return s;
}

struct AttackRow {
    std::string user_id;
    ClassifierKind kind = ClassifierKind::Svm;
    std::string plan;
    QualityLevel quality;
    std::size_t windows = 0;
    std::size_t false_accepts = 0;
    double far = 0.0;
    std::vector<double> scores;
};

struct AttackReport {
    std::vector<AttackRow> rows;
};

/// Degrade every location's master trace, differentiate, bring to 100 Hz and
/// score aligned windows with the victim's model at its EER threshold.
inline AttackRow run_attack(const std::map<SensorLocation, LandmarkTrace>& masters, const VerifierModel& victim,
                            const QualityLevel& quality, double target_rate = 100.0, std::size_t window_length = 250) {
    RecordingSession forged;
    forged.user_id = victim.user_id;
    forged.activity = victim.activity;
    forged.session_index = 0;
    for (auto loc : victim.plan.locations) {
        auto it = masters.find(loc);
        if (it == masters.end()) throw Error(ErrorKind::MissingLocation, "no landmark trace for " + std::string(file_stem(loc)));
        const auto degraded = quantize_resolution(decimate_fps(it->second, quality.fps), quality.resolution);
        forged.streams.emplace(loc, resample(accel_stream(synthesize_accel(degraded)), target_rate));
    }
    auto groups = segment_session(forged, window_length);
    if (victim.kind == ClassifierKind::Svm) attach_features(groups, 1);
    AttackRow row;
    row.user_id = victim.user_id;
    row.kind = victim.kind;
    row.plan = victim.plan.label();
    row.quality = quality;
    row.windows = groups.size();
    for (const auto& g : groups) {
        const auto s = score_group(victim, g);
        row.scores.push_back(s.probability);
        if (threshold_decision(s, victim.threshold) == Decision::Accept) ++row.false_accepts;
    }
    row.far = row.windows ? static_cast<double>(row.false_accepts) / static_cast<double>(row.windows) : 0.0;
    return row;
}

struct AttackTarget {
    const VerifierModel* victim = nullptr;
    const std::map<SensorLocation, LandmarkTrace>* masters = nullptr;
};

/// One row per (target, quality), in target-major order.
inline AttackReport run_attack_suite(const std::vector<AttackTarget>& targets,
                                     const std::vector<QualityLevel>& qualities = all_quality_levels(),
                                     unsigned workers = default_workers()) {
    AttackReport report;
    report.rows.resize(targets.size() * qualities.size());
    parallel_for(report.rows.size(), [&](std::size_t j) {
        const auto& target = targets[j / qualities.size()];
        report.rows[j] = run_attack(*target.masters, *target.victim, qualities[j % qualities.size()]);
    }, workers);
    return report;
}

inline void write_attack_csv(std::ostream& out, const AttackReport& report) {
    out << "user,classifier,fps,resolution,windows,false_accepts,far\n";
    for (const auto& r : report.rows)
        out << r.user_id << ',' << to_string(r.kind) << ',' << r.quality.fps << ',' << r.quality.resolution.label() << ','
            << r.windows << ',' << r.false_accepts << ',' << csv::format_fixed(r.far, 4) << '\n';
}

} // namespace jawprint
