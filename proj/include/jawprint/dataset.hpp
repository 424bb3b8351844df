#pragma once

#include <algorithm>
#include <array>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "jawprint/csv.hpp"
#include "jawprint/error.hpp"
#include "jawprint/features.hpp"
#include "jawprint/parallel.hpp"
#include "jawprint/signal.hpp"

namespace jawprint {

enum class Language { Native, NonNative };

inline std::string_view to_string(Language l) { return l == Language::Native ? "native" : "non-native"; }

inline Language parse_language(std::string_view text) {
    if (text == "native") return Language::Native;
    if (text == "non-native") return Language::NonNative;
    throw Error(ErrorKind::InvalidArgument, "language must be native or non-native, got '" + std::string(text) + "'");
}

struct UserRecord {
    std::string user_id;
    Language language = Language::Native;
    std::map<std::pair<Activity, int>, RecordingSession> sessions;

    const RecordingSession& session(Activity activity, int index) const {
        auto it = sessions.find({activity, index});
        if (it == sessions.end())
            throw Error(ErrorKind::MissingSession,
                        user_id + "/" + std::string(to_string(activity)) + "/session" + std::to_string(index));
        return it->second;
    }
};

struct Dataset {
    std::map<std::string, UserRecord> users;

    std::vector<std::string> user_ids() const {
        std::vector<std::string> ids;
        for (const auto& [id, _] : users) ids.push_back(id);
        return ids;
    }
    const UserRecord& user(const std::string& id) const {
        auto it = users.find(id);
        if (it == users.end()) throw Error(ErrorKind::UnknownUser, id);
        return it->second;
    }
};

inline std::filesystem::path session_dir(const std::filesystem::path& root, const std::string& user, Activity activity,
                                         int session) {
    return root / user / std::string(to_string(activity)) / ("session" + std::to_string(session));
}

/// `<root>/<user>/<Activity>/session<k>/<location>.csv` plus `<root>/users.csv`.
/// Entries whose name starts with '_' are side data and skipped.
inline Dataset load_dataset(const std::filesystem::path& root) {
    namespace fs = std::filesystem;
    if (!fs::is_directory(root)) throw Error(ErrorKind::MissingFile, "dataset root " + root.string());
    Dataset ds;
    std::vector<fs::path> user_dirs;
    for (const auto& e : fs::directory_iterator(root))
        if (e.is_directory() && e.path().filename().string().front() != '_') user_dirs.push_back(e.path());
    std::sort(user_dirs.begin(), user_dirs.end());
    for (const auto& udir : user_dirs) {
        UserRecord rec;
        rec.user_id = udir.filename().string();
        for (auto activity : kAllActivities) {
            const fs::path adir = udir / std::string(to_string(activity));
            if (!fs::is_directory(adir)) continue;
            for (const auto& sdir : fs::directory_iterator(adir)) {
                const std::string name = sdir.path().filename().string();
                if (!sdir.is_directory() || name.rfind("session", 0) != 0) continue;
                const auto index = csv::parse_int(std::string_view(name).substr(7));
                if (!index) continue;
                RecordingSession session;
                session.user_id = rec.user_id;
                session.activity = activity;
                session.session_index = static_cast<int>(*index);
                for (auto loc : kAllLocations) {
                    const fs::path file = sdir.path() / (std::string(file_stem(loc)) + ".csv");
                    if (fs::exists(file)) session.streams.emplace(loc, load_stream(file.string(), loc));
                }
                if (!session.streams.empty()) rec.sessions.emplace(std::pair{activity, session.session_index}, std::move(session));
            }
        }
        ds.users.emplace(rec.user_id, std::move(rec));
    }
    const fs::path users_csv = root / "users.csv";
    if (fs::exists(users_csv)) {
        const auto lines = csv::read_lines(users_csv.string());
        for (std::size_t i = 1; i < lines.size(); ++i) {
            if (csv::trim(lines[i]).empty()) continue;
            const auto cells = csv::split(lines[i]);
            if (cells.size() != 2) throw Error(ErrorKind::MalformedRow, "users.csv expects user_id,language", i);
            auto it = ds.users.find(std::string(csv::trim(cells[0])));
            if (it != ds.users.end()) it->second.language = parse_language(csv::trim(cells[1]));
        }
    }
    if (ds.users.empty()) throw Error(ErrorKind::MissingFile, "no user directories under " + root.string());
    return ds;
}

inline void write_dataset(const std::filesystem::path& root, const Dataset& ds) {
    namespace fs = std::filesystem;
    fs::create_directories(root);
    std::ofstream users(root / "users.csv");
    if (!users) throw Error(ErrorKind::Io, "cannot write " + (root / "users.csv").string());
    users << "user_id,language\n";
    for (const auto& [id, rec] : ds.users) {
        users << id << ',' << to_string(rec.language) << '\n';
        for (const auto& [key, session] : rec.sessions) {
            const auto dir = session_dir(root, id, key.first, key.second);
            fs::create_directories(dir);
            for (const auto& [loc, stream] : session.streams)
                write_stream((dir / (std::string(file_stem(loc)) + ".csv")).string(), stream);
        }
    }
}

/// One aligned window index across locations. Only locations present in the
/// session are filled; features are cached next to the raw samples.
struct WindowGroup {
    WindowOrigin origin;
    std::array<std::optional<Window>, 3> windows;
    std::array<std::optional<FeatureVector>, 3> features;

    const Window& window(SensorLocation loc) const {
        const auto& w = windows[location_index(loc)];
        if (!w) throw Error(ErrorKind::MissingLocation, std::string(file_stem(loc)) + " at " + origin.tag());
        return *w;
    }
    const FeatureVector& feature(SensorLocation loc) const {
        const auto& f = features[location_index(loc)];
        if (!f) throw Error(ErrorKind::MissingLocation, "no features for " + std::string(file_stem(loc)) + " at " + origin.tag());
        return *f;
    }
};

/// Window k of every location covers samples [k·length, (k+1)·length); the
/// count is the minimum over locations so all groups are complete.
inline std::vector<WindowGroup> segment_session(const RecordingSession& session, std::size_t length = 250) {
    std::size_t count = std::numeric_limits<std::size_t>::max();
    for (const auto& [loc, stream] : session.streams) count = std::min(count, stream.size() / length);
    if (session.streams.empty() || count == 0)
        throw Error(ErrorKind::StreamTooShort, session.user_id + "/" + std::string(to_string(session.activity)) +
                                                   "/session" + std::to_string(session.session_index) +
                                                   " has no complete window");
    std::vector<WindowGroup> groups(count);
    for (std::size_t k = 0; k < count; ++k)
        groups[k].origin = {session.user_id, session.activity, session.session_index, k};
    for (const auto& [loc, stream] : session.streams) {
        auto windows = segment(stream, groups.front().origin, length, length);
        for (std::size_t k = 0; k < count; ++k) groups[k].windows[location_index(loc)] = std::move(windows[k]);
    }
    return groups;
}

using SessionKey = std::tuple<std::string, Activity, int>;

/// Every session of a dataset cut into aligned windows with per-location features.
struct WindowBank {
    std::map<SessionKey, std::vector<WindowGroup>> sessions;
    std::map<std::string, Language> languages;

    const std::vector<WindowGroup>& at(const std::string& user, Activity activity, int session) const {
        auto it = sessions.find({user, activity, session});
        if (it == sessions.end())
            throw Error(ErrorKind::MissingSession,
                        user + "/" + std::string(to_string(activity)) + "/session" + std::to_string(session));
        return it->second;
    }
    bool has(const std::string& user, Activity activity, int session) const {
        return sessions.count({user, activity, session}) > 0;
    }
    std::vector<std::string> users() const {
        std::vector<std::string> out;
        for (const auto& [id, _] : languages) out.push_back(id);
        return out;
    }
};

inline void attach_features(std::vector<WindowGroup>& groups, unsigned workers = default_workers()) {
    std::vector<std::pair<std::size_t, std::size_t>> jobs;
    for (std::size_t g = 0; g < groups.size(); ++g)
        for (std::size_t l = 0; l < 3; ++l)
            if (groups[g].windows[l]) jobs.emplace_back(g, l);
    parallel_for(jobs.size(), [&](std::size_t j) {
        auto [g, l] = jobs[j];
        groups[g].features[l] = compute_window_features(*groups[g].windows[l]);
    }, workers);
}

/// Restricts to `activity` when given.
inline WindowBank build_window_bank(const Dataset& ds, std::optional<Activity> activity = std::nullopt,
                                    std::size_t length = 250, unsigned workers = default_workers()) {
    WindowBank bank;
    std::vector<WindowGroup*> all;
    for (const auto& [id, rec] : ds.users) {
        bank.languages[id] = rec.language;
        for (const auto& [key, session] : rec.sessions) {
            if (activity && key.first != *activity) continue;
            bank.sessions[{id, key.first, key.second}] = segment_session(session, length);
        }
    }
    std::vector<std::pair<WindowGroup*, std::size_t>> jobs;
    for (auto& [key, groups] : bank.sessions)
        for (auto& g : groups)
            for (std::size_t l = 0; l < 3; ++l)
                if (g.windows[l]) jobs.emplace_back(&g, l);
    parallel_for(jobs.size(), [&](std::size_t j) {
        auto [g, l] = jobs[j];
        g->features[l] = compute_window_features(*g->windows[l]);
    }, workers);
    return bank;
}

} // namespace jawprint
