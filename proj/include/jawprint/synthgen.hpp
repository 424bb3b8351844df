#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <string>
#include <tuple>
#include <vector>

#include "jawprint/dataset.hpp"
#include "jawprint/error.hpp"
#include "jawprint/landmarks.hpp"
#include "jawprint/parallel.hpp"
#include "jawprint/signal.hpp"

namespace jawprint {

/// Every generator knob in one place. Accelerations are in g.
struct SynthConfig {
    double rate = 100.0;
    double min_base_freq = 1.5;
    double max_base_freq = 4.5;
    double min_freq_gap = 0.05;
    double chin_amplitude = 0.12;
    double cheek_amplitude = 0.05;
    double sensor_noise = 0.02;
    double max_mount_tilt = 0.45;      // radians, per user and location
    double session_tilt = 0.03;        // radians, re-mount between sessions
    double silence_floor = 0.15;       // envelope level between speech bursts
    double flat_gait_amplitude = 0.10;
    double stairs_gait_amplitude = 0.22;
    double native_fraction = 0.7;
    double landmark_depth_noise = 2e-5;  // normalized units
    double integration_leak = 0.995;
    double landmark_scale = 0.20;
};

struct AxisProfile {
    double base_freq = 2.0;
    double amplitude = 0.1;
    std::array<double, 3> harmonics{1.0, 0.3, 0.1};
    std::array<double, 3> phases{};
    double drift = 0.0;  // g per minute
};

struct LocationProfile {
    std::array<AxisProfile, 3> axes;
    std::array<double, 3> gravity{0.0, 0.0, 1.0};  // unit vector in sensor frame
};

struct UserProfile {
    std::string user_id;
    std::uint64_t seed = 0;
    Language language = Language::Native;
    double base_freq = 2.0;
    double freq_jitter = 0.05;
    double amplitude_jitter = 0.1;
    double pause_rate = 8.0;  // silence bursts per minute
    double flat_cadence = 1.9;
    double stairs_cadence = 1.4;
    std::array<LocationProfile, 3> locations;
    double depth_noise = 2e-5;

    const LocationProfile& at(SensorLocation loc) const { return locations[location_index(loc)]; }
};

struct SessionSpec {
    double duration = 900.0;
    Activity activity = Activity::Seated;
    int session_index = 1;
    std::uint64_t session_noise_seed = 0;
};

namespace detail {

inline std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
    std::uint64_t z = a + 0x9E3779B97F4A7C15ull * (b + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

inline std::uint64_t string_seed(std::string_view s) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) h = (h ^ c) * 1099511628211ull;
    return h;
}

inline std::array<double, 3> tilt(std::array<double, 3> v, double ax, double ay) {
    // rotate about x then y
    const double y1 = v[1] * std::cos(ax) - v[2] * std::sin(ax);
    const double z1 = v[1] * std::sin(ax) + v[2] * std::cos(ax);
    const double x2 = v[0] * std::cos(ay) + z1 * std::sin(ay);
    const double z2 = -v[0] * std::sin(ay) + z1 * std::cos(ay);
    return {x2, y1, z2};
}

} // namespace detail

/// Deterministic in (user_id, seed). Frequencies of a location share the
/// user's jaw rhythm with small per-axis offsets; the chin moves most.
inline UserProfile generate_profile(const std::string& user_id, std::uint64_t seed, const SynthConfig& cfg = {}) {
    std::mt19937_64 rng(detail::mix_seed(seed, detail::string_seed(user_id)));
    std::uniform_real_distribution<double> u(0.0, 1.0);
    auto between = [&](double lo, double hi) { return lo + (hi - lo) * u(rng); };
    UserProfile p;
    p.user_id = user_id;
    p.seed = seed;
    p.language = u(rng) < cfg.native_fraction ? Language::Native : Language::NonNative;
    p.base_freq = between(cfg.min_base_freq, cfg.max_base_freq);
    p.freq_jitter = between(0.02, 0.06);
    p.amplitude_jitter = between(0.05, 0.2);
    p.pause_rate = between(4.0, 12.0);
    p.flat_cadence = between(1.8, 2.1);
    p.stairs_cadence = between(1.3, 1.6);
    p.depth_noise = cfg.landmark_depth_noise;
    for (auto loc : kAllLocations) {
        auto& lp = p.locations[location_index(loc)];
        const double gain = loc == SensorLocation::BelowChin ? cfg.chin_amplitude : cfg.cheek_amplitude;
        std::array<double, 3> weights{between(0.2, 1.0), between(0.2, 1.0), between(0.2, 1.0)};
        if (loc == SensorLocation::BelowChin) weights[2] += 0.8;  // vertical jaw travel
        const double norm = std::sqrt(weights[0] * weights[0] + weights[1] * weights[1] + weights[2] * weights[2]);
        for (std::size_t a = 0; a < 3; ++a) {
            auto& ax = lp.axes[a];
            ax.base_freq = p.base_freq * between(0.97, 1.03);
            ax.amplitude = gain * weights[a] / norm;
            ax.harmonics = {1.0, between(0.1, 0.7), between(0.0, 0.35)};
            ax.phases = {between(0, 2 * std::numbers::pi), between(0, 2 * std::numbers::pi), between(0, 2 * std::numbers::pi)};
            ax.drift = between(-0.01, 0.01);
        }
        lp.gravity = detail::tilt({0.0, 0.0, 1.0}, between(-cfg.max_mount_tilt, cfg.max_mount_tilt),
                                  between(-cfg.max_mount_tilt, cfg.max_mount_tilt));
    }
    return p;
}

/// Profiles for user01..userNN with base frequencies at least min_freq_gap
/// apart, enforced by redrawing a user's seed.
inline std::vector<UserProfile> generate_cohort(std::size_t users, std::uint64_t seed, const SynthConfig& cfg = {}) {
    std::vector<UserProfile> out;
    for (std::size_t i = 0; i < users; ++i) {
        const std::string id = (i + 1 < 10 ? "user0" : "user") + std::to_string(i + 1);
        for (std::uint64_t attempt = 0;; ++attempt) {
            auto p = generate_profile(id, detail::mix_seed(seed, attempt), cfg);
            bool ok = true;
            for (const auto& q : out) ok = ok && std::abs(q.base_freq - p.base_freq) >= cfg.min_freq_gap;
            if (ok) {
                out.push_back(std::move(p));
                break;
            }
            if (attempt > 10000) throw Error(ErrorKind::InvalidArgument, "cannot place base frequencies that far apart");
        }
    }
    return out;
}

/// Session-level random draws: speech envelope, jitter and re-mount tilt.
/// Evaluating the articulation signal at any time t is deterministic given
/// these, so sensor streams and landmark traces share one motion.
class Articulation {
public:
    Articulation(const UserProfile& profile, const SessionSpec& spec, const SynthConfig& cfg)
        : profile_(profile), spec_(spec), cfg_(cfg) {
        std::mt19937_64 rng(detail::mix_seed(detail::mix_seed(profile.seed, detail::string_seed(profile.user_id)),
                                             spec.session_noise_seed * 131 + static_cast<std::uint64_t>(spec.session_index)));
        std::uniform_real_distribution<double> u(0.0, 1.0);
        std::exponential_distribution<double> talk(profile.pause_rate / 60.0);
        double t = -u(rng) * 2.0;
        while (t < spec.duration + 2.0) {
            const double on = t, off = t + std::max(0.5, talk(rng));
            bursts_.push_back({on, off});
            t = off + 0.3 + 0.9 * u(rng);
        }
        for (auto& j : fm_) j = {0.05 + 0.4 * u(rng), 2 * std::numbers::pi * u(rng), u(rng)};
        for (auto& j : am_) j = {0.1 + 0.6 * u(rng), 2 * std::numbers::pi * u(rng), u(rng)};
        for (auto loc : kAllLocations) {
            auto& g = gravity_[location_index(loc)];
            g = detail::tilt(profile.at(loc).gravity, cfg.session_tilt * (2 * u(rng) - 1), cfg.session_tilt * (2 * u(rng) - 1));
        }
        gait_phase_ = 2 * std::numbers::pi * u(rng);
    }

    /// Smoothed on/off speech envelope in [silence_floor, 1].
    double envelope(double t) const {
        constexpr double ramp = 0.1;
        double level = 0.0;
        for (const auto& [on, off] : bursts_) {
            if (t < on - ramp || t > off + ramp) continue;
            double w = 1.0;
            if (t < on + ramp) w = 0.5 - 0.5 * std::cos(std::numbers::pi * (t - on + ramp) / (2 * ramp));
            if (t > off - ramp) w = std::min(w, 0.5 - 0.5 * std::cos(std::numbers::pi * (off + ramp - t) / (2 * ramp)));
            level = std::max(level, w);
        }
        return cfg_.silence_floor + (1.0 - cfg_.silence_floor) * level;
    }

    /// Motion acceleration (no gravity, no sensor noise) in g.
    std::array<double, 3> motion(SensorLocation loc, double t) const {
        const auto& lp = profile_.at(loc);
        double fm = 0.0, am = 0.0, fm_norm = 0.0, am_norm = 0.0;
        for (const auto& [nu, psi, w] : fm_) {
            fm += w / nu * std::sin(2 * std::numbers::pi * nu * t + psi);
            fm_norm += w;
        }
        for (const auto& [nu, psi, w] : am_) {
            am += w * std::sin(2 * std::numbers::pi * nu * t + psi);
            am_norm += w;
        }
        fm *= profile_.freq_jitter / (2 * std::numbers::pi * std::max(fm_norm, 1e-9));
        am = 1.0 + profile_.amplitude_jitter * am / std::max(am_norm, 1e-9);
        const double env = envelope(t) * am;
        std::array<double, 3> out{};
        for (std::size_t a = 0; a < 3; ++a) {
            const auto& ax = lp.axes[a];
            // phase of an FM carrier: 2π f (t + jitter integral)
            const double phase = 2 * std::numbers::pi * ax.base_freq * (t + fm);
            double s = 0.0;
            for (std::size_t h = 0; h < 3; ++h) s += ax.harmonics[h] * std::sin(static_cast<double>(h + 1) * phase + ax.phases[h]);
            out[a] = ax.amplitude * env * s;
        }
        if (spec_.activity != Activity::Seated) {
            const bool stairs = spec_.activity == Activity::WalkStairs;
            const double cadence = stairs ? profile_.stairs_cadence : profile_.flat_cadence;
            const double amp = stairs ? cfg_.stairs_gait_amplitude : cfg_.flat_gait_amplitude;
            const double ph = 2 * std::numbers::pi * cadence * t + gait_phase_;
            const double step = std::sin(ph) + 0.35 * std::sin(2 * ph + 0.7);
            const double sway = 0.4 * std::sin(0.5 * ph);
            out[0] += amp * 0.3 * sway;
            out[1] += amp * step;
            out[2] += amp * 0.5 * step;
        }
        return out;
    }

    std::array<double, 3> gravity(SensorLocation loc) const { return gravity_[location_index(loc)]; }

private:
    struct Tone {
        double nu, psi, weight;
    };
    const UserProfile& profile_;
    SessionSpec spec_;
    SynthConfig cfg_;
    std::vector<std::pair<double, double>> bursts_;
    std::array<Tone, 3> fm_{};
    std::array<Tone, 3> am_{};
    std::array<std::array<double, 3>, 3> gravity_{};
    double gait_phase_ = 0.0;
};

/// 100 Hz streams for all three locations: motion + gravity + drift + noise.
inline RecordingSession generate_session(const UserProfile& profile, const SessionSpec& spec,
                                         const SynthConfig& cfg = {}) {
    if (!(spec.duration > 0.0)) throw Error(ErrorKind::InvalidArgument, "session duration must be positive");
    const Articulation art(profile, spec, cfg);
    RecordingSession session;
    session.user_id = profile.user_id;
    session.activity = spec.activity;
    session.session_index = spec.session_index;
    const auto n = static_cast<std::size_t>(std::llround(spec.duration * cfg.rate));
    for (auto loc : kAllLocations) {
        std::mt19937_64 rng(detail::mix_seed(detail::mix_seed(profile.seed, spec.session_noise_seed),
                                             static_cast<std::uint64_t>(spec.session_index) * 7 + location_index(loc)));
        std::normal_distribution<double> noise(0.0, cfg.sensor_noise);
        SensorStream stream;
        stream.location = loc;
        stream.rate = cfg.rate;
        stream.samples.resize(n);
        const auto g = art.gravity(loc);
        const auto& lp = profile.at(loc);
        for (std::size_t k = 0; k < n; ++k) {
            const double t = static_cast<double>(k) / cfg.rate;
            const auto m = art.motion(loc, t);
            std::array<double, 3> v{};
            for (std::size_t a = 0; a < 3; ++a) v[a] = m[a] + g[a] + lp.axes[a].drift * t / 60.0 + noise(rng);
            // round-trip through the 6-decimal timestamp format
            stream.samples[k] = {std::round(t * 1e6) / 1e6, v[0], v[1], v[2]};
        }
        session.streams.emplace(loc, std::move(stream));
    }
    return session;
}

/// Master 1080p/60 landmark trace per location: motion acceleration (m/s²)
/// integrated twice with a leak to keep drift bounded, mapped to normalized
/// coordinates by the shared scale, with estimation noise on depth.
inline std::vector<LandmarkTrace> render_landmark_trace(const UserProfile& profile, const SessionSpec& spec,
                                                        const SynthConfig& cfg = {}) {
    constexpr double fps = 60.0, g0 = 9.80665;
    const Articulation art(profile, spec, cfg);
    const auto frames = static_cast<std::size_t>(std::llround(spec.duration * fps));
    const double dt = 1.0 / fps, leak = cfg.integration_leak;
    const std::array<std::array<double, 2>, 3> anchors{{{0.50, 0.78}, {0.38, 0.55}, {0.60, 0.66}}};
    std::vector<LandmarkTrace> out;
    for (auto loc : kAllLocations) {
        std::mt19937_64 rng(detail::mix_seed(profile.seed ^ 0x5A5A5A5Aull, spec.session_noise_seed * 3 + location_index(loc)));
        std::normal_distribution<double> depth_noise(0.0, 1.0);
        LandmarkTrace trace;
        trace.location = loc;
        trace.fps = fps;
        trace.resolution = Resolution::p1080();
        trace.scale = cfg.landmark_scale;
        std::array<double, 3> vel{}, pos{};
        const auto anchor = anchors[location_index(loc)];
        for (std::size_t k = 0; k < frames; ++k) {
            const double t = static_cast<double>(k) * dt;
            const auto a = art.motion(loc, t);
            for (std::size_t i = 0; i < 3; ++i) {
                vel[i] = leak * vel[i] + a[i] * g0 * dt;
                pos[i] = leak * pos[i] + vel[i] * dt;
            }
            LandmarkPoint p;
            p.frame = static_cast<long>(k);
            p.t = std::round(t * 1e6) / 1e6;
            p.x = anchor[0] + pos[0] / trace.scale;
            p.y = anchor[1] + pos[1] / trace.scale;
            p.z = pos[2] / trace.scale + profile.depth_noise * depth_noise(rng);
            trace.points.push_back(p);
        }
        out.push_back(std::move(trace));
    }
    return out;
}

struct CohortSpec {
    std::size_t users = 10;
    std::size_t sessions = 2;
    std::vector<Activity> activities{Activity::Seated};
    double duration = 900.0;
    std::uint64_t seed = 42;
};

/// Whole dataset in memory: every user × activity × session.
inline Dataset simulate_dataset(const CohortSpec& spec, const SynthConfig& cfg = {},
                                std::vector<UserProfile>* profiles_out = nullptr) {
    const auto profiles = generate_cohort(spec.users, spec.seed, cfg);
    Dataset ds;
    std::vector<std::tuple<std::size_t, Activity, int>> jobs;
    for (std::size_t u = 0; u < profiles.size(); ++u)
        for (auto a : spec.activities)
            for (std::size_t s = 1; s <= spec.sessions; ++s) jobs.emplace_back(u, a, static_cast<int>(s));
    std::vector<RecordingSession> sessions(jobs.size());
    parallel_for(jobs.size(), [&](std::size_t j) {
        auto [u, a, s] = jobs[j];
        SessionSpec ss{spec.duration, a, s, detail::mix_seed(spec.seed, static_cast<std::uint64_t>(s))};
        sessions[j] = generate_session(profiles[u], ss, cfg);
    });
    for (const auto& p : profiles) ds.users[p.user_id] = {p.user_id, p.language, {}};
    for (std::size_t j = 0; j < jobs.size(); ++j) {
        auto& rec = ds.users[sessions[j].user_id];
        rec.sessions.emplace(std::pair{sessions[j].activity, sessions[j].session_index}, std::move(sessions[j]));
    }
    if (profiles_out) *profiles_out = profiles;
    return ds;
}

} // namespace jawprint
