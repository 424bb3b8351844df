#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdlib>
#include <deque>
#include <filesystem>
#include <functional>
#include <fstream>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include <json.hpp>

#include "jawprint/dataset.hpp"
#include "jawprint/error.hpp"
#include "jawprint/evaluation.hpp"
#include "jawprint/model_io.hpp"
#include "jawprint/verifier.hpp"

namespace jawprint {

struct WarningPolicy {
    std::size_t consecutive_window_failures = 3;
    double rolling_failure_rate = 0.30;
    std::size_t rolling_window = 20;

    void validate() const {
        if (consecutive_window_failures < 1) throw Error(ErrorKind::InvalidArgument, "consecutive_window_failures must be >= 1");
        if (rolling_window < 1) throw Error(ErrorKind::InvalidArgument, "rolling_window must be >= 1");
        if (!(rolling_failure_rate >= 0.0 && rolling_failure_rate <= 1.0))
            throw Error(ErrorKind::InvalidArgument, "rolling_failure_rate must be in [0, 1]");
    }
};

enum class SessionStatus { Active, Terminated, PendingStepup };

inline std::string_view to_string(SessionStatus s) {
    switch (s) {
    case SessionStatus::Active: return "active";
    case SessionStatus::Terminated: return "terminated";
    case SessionStatus::PendingStepup: return "verified-pending-stepup";
    }
    return "active";
}

enum class EventKind { WindowPassed, WindowFailure, WarningTriggered, StepupRequested, Terminated, Verified, DataGap };

inline std::string_view to_string(EventKind k) {
    switch (k) {
    case EventKind::WindowPassed: return "window_passed";
    case EventKind::WindowFailure: return "window_failure";
    case EventKind::WarningTriggered: return "warning_triggered";
    case EventKind::StepupRequested: return "stepup_requested";
    case EventKind::Terminated: return "terminated";
    case EventKind::Verified: return "verified";
    case EventKind::DataGap: return "data_gap";
    }
    return "window_passed";
}

inline EventKind parse_event_kind(std::string_view text) {
    for (auto k : {EventKind::WindowPassed, EventKind::WindowFailure, EventKind::WarningTriggered,
                   EventKind::StepupRequested, EventKind::Terminated, EventKind::Verified, EventKind::DataGap})
        if (to_string(k) == text) return k;
    throw Error(ErrorKind::InvalidArgument, "unknown event kind '" + std::string(text) + "'");
}

enum class OperatorAction { Terminate, RequestStepup, MarkVerified };

inline OperatorAction parse_action(std::string_view text) {
    if (text == "terminate") return OperatorAction::Terminate;
    if (text == "request_stepup") return OperatorAction::RequestStepup;
    if (text == "mark_verified") return OperatorAction::MarkVerified;
    throw Error(ErrorKind::InvalidArgument, "action must be terminate, request_stepup or mark_verified");
}

struct WarningEvent {
    std::uint64_t seq = 0;  // position in the session log
    std::string session_id;
    std::size_t window_index = 0;
    EventKind kind = EventKind::WindowPassed;
    double score = std::numeric_limits<double>::quiet_NaN();  // window events only
    double threshold = 0.5;
    double timestamp = 0.0;  // seconds since epoch when emitted
    std::string location;    // data_gap only
};

inline nlohmann::json to_json(const WarningEvent& e) {
    nlohmann::json j{{"seq", e.seq},           {"session_id", e.session_id}, {"window_index", e.window_index},
                     {"kind", to_string(e.kind)}, {"threshold", e.threshold},  {"timestamp", e.timestamp}};
    j["score"] = std::isnan(e.score) ? nlohmann::json(nullptr) : nlohmann::json(e.score);
    if (!e.location.empty()) j["location"] = e.location;
    return j;
}

inline WarningEvent event_from_json(const nlohmann::json& j) {
    WarningEvent e;
    e.seq = j.at("seq").get<std::uint64_t>();
    e.session_id = j.at("session_id").get<std::string>();
    e.window_index = j.at("window_index").get<std::size_t>();
    e.kind = parse_event_kind(j.at("kind").get<std::string>());
    e.score = j.at("score").is_null() ? std::numeric_limits<double>::quiet_NaN() : j.at("score").get<double>();
    e.threshold = j.at("threshold").get<double>();
    e.timestamp = j.at("timestamp").get<double>();
    if (j.contains("location")) e.location = j.at("location").get<std::string>();
    return e;
}

inline constexpr std::size_t kRecentScores = 100;

/// Everything a status query reports. The rolling failure rate is advisory
/// and only shown here; warnings come from the consecutive-failure rule.
struct SessionState {
    std::string session_id;
    std::string user_id;
    SessionStatus status = SessionStatus::Active;
    std::size_t window_count = 0;
    std::size_t failure_count = 0;
    std::size_t consecutive_failures = 0;
    std::size_t warning_count = 0;
    std::deque<double> recent_scores;
    std::deque<bool> recent_failures;
    std::size_t event_count = 0;

    double rolling_failure_rate(const WarningPolicy& policy) const {
        const auto n = std::min(policy.rolling_window, recent_failures.size());
        if (n == 0) return 0.0;
        const auto failed = std::count(recent_failures.end() - static_cast<std::ptrdiff_t>(n), recent_failures.end(), true);
        return static_cast<double>(failed) / static_cast<double>(n);
    }
    bool operator==(const SessionState&) const = default;
};

inline nlohmann::json to_json(const SessionState& s, const WarningPolicy& policy) {
    const double rate = s.rolling_failure_rate(policy);
    return {{"session_id", s.session_id},
            {"user_id", s.user_id},
            {"status", to_string(s.status)},
            {"window_count", s.window_count},
            {"failure_count", s.failure_count},
            {"consecutive_failures", s.consecutive_failures},
            {"warning_count", s.warning_count},
            {"recent_scores", std::vector<double>(s.recent_scores.begin(), s.recent_scores.end())},
            {"rolling_failure_rate", rate},
            {"rolling_alert", !s.recent_failures.empty() && rate >= policy.rolling_failure_rate},
            {"event_count", s.event_count}};
}

namespace detail {

inline void record_window(SessionState& s, double score, bool failed) {
    ++s.window_count;
    s.recent_scores.push_back(score);
    if (s.recent_scores.size() > kRecentScores) s.recent_scores.pop_front();
    s.recent_failures.push_back(failed);
    if (s.recent_failures.size() > kRecentScores) s.recent_failures.pop_front();
}

} // namespace detail

/// Rebuilds a snapshot from nothing but the event log.
inline SessionState fold_events(const std::string& session_id, const std::string& user_id,
                                const std::vector<WarningEvent>& log) {
    SessionState s;
    s.session_id = session_id;
    s.user_id = user_id;
    for (const auto& e : log) {
        switch (e.kind) {
        case EventKind::WindowPassed:
            detail::record_window(s, e.score, false);
            s.consecutive_failures = 0;
            break;
        case EventKind::WindowFailure:
            detail::record_window(s, e.score, true);
            ++s.failure_count;
            ++s.consecutive_failures;
            break;
        case EventKind::WarningTriggered: ++s.warning_count; break;
        case EventKind::StepupRequested: s.status = SessionStatus::PendingStepup; break;
        case EventKind::Verified: s.status = SessionStatus::Active; break;
        case EventKind::Terminated: s.status = SessionStatus::Terminated; break;
        case EventKind::DataGap: break;
        }
    }
    s.event_count = log.size();
    return s;
}

/// One subscriber's view of a session's events. Live events go through a
/// bounded queue; a subscriber that falls behind is cut off instead of
/// blocking the publisher.
class Subscription {
public:
    explicit Subscription(std::size_t capacity) : capacity_(capacity) {}

    std::optional<WarningEvent> next(std::chrono::milliseconds wait) {
        std::unique_lock lock(mutex_);
        cv_.wait_for(lock, wait, [&] { return !queue_.empty() || finished_ || dropped_; });
        if (queue_.empty() || dropped_) return std::nullopt;
        auto e = std::move(queue_.front());
        queue_.pop_front();
        return e;
    }
    /// True once nothing more will arrive: dropped, or finished and drained.
    bool done() const {
        std::lock_guard lock(mutex_);
        return dropped_ || (finished_ && queue_.empty());
    }
    bool dropped() const {
        std::lock_guard lock(mutex_);
        return dropped_;
    }
    void cancel() {
        std::lock_guard lock(mutex_);
        dropped_ = true;
        cv_.notify_all();
    }

private:
    friend class LiveSession;
    void preload(const WarningEvent& e) { queue_.push_back(e); }
    bool publish(const WarningEvent& e) {
        std::lock_guard lock(mutex_);
        if (dropped_) return false;
        if (queue_.size() >= capacity_) {
            dropped_ = true;
            queue_.clear();
            cv_.notify_all();
            return false;
        }
        queue_.push_back(e);
        cv_.notify_all();
        return true;
    }
    void finish() {
        std::lock_guard lock(mutex_);
        finished_ = true;
        cv_.notify_all();
    }

    mutable std::mutex mutex_;
    std::condition_variable cv_;
    std::deque<WarningEvent> queue_;
    std::size_t capacity_;
    bool finished_ = false;
    bool dropped_ = false;
};

struct SampleBatch {
    std::string location;
    std::vector<SensorSample> samples;
};

struct ServiceConfig {
    std::string host = "127.0.0.1";
    int port = 8080;
    std::filesystem::path model_dir = "models";
    std::optional<ClassifierKind> classifier;  // preferred when a user has several models
    std::optional<std::string> mode;
    WarningPolicy policy;
    std::size_t window_length = 250;
    double sample_rate = 100.0;
    double straggler_seconds = 2.0;
    std::size_t subscriber_capacity = 1024;
};

using Clock = std::function<double()>;

inline double wall_clock_seconds() {
    return std::chrono::duration<double>(std::chrono::system_clock::now().time_since_epoch()).count();
}

/// One live session. All mutation happens under its own mutex, so events of a
/// session are totally ordered.
class LiveSession {
public:
    LiveSession(std::string id, std::shared_ptr<const VerifierModel> model, const ServiceConfig& cfg, Clock clock)
        : model_(std::move(model)), cfg_(cfg), clock_(std::move(clock)) {
        state_.session_id = std::move(id);
        state_.user_id = model_->user_id;
    }

    std::vector<WarningEvent> ingest(const SampleBatch& batch) {
        std::lock_guard lock(mutex_);
        if (state_.status == SessionStatus::Terminated)
            throw Error(ErrorKind::SessionNotActive, state_.session_id + " is terminated");
        SensorLocation loc;
        try {
            loc = parse_location(batch.location);
        } catch (const Error&) {
            throw Error(ErrorKind::UnknownLocation, "unknown location '" + batch.location + "'");
        }
        const auto& enrolled = model_->plan.locations;
        if (std::find(enrolled.begin(), enrolled.end(), loc) == enrolled.end())
            throw Error(ErrorKind::UnknownLocation, std::string(file_stem(loc)) + " is not enrolled for this model");
        for (const auto& s : batch.samples)
            if (!std::isfinite(s.t) || !std::isfinite(s.ax) || !std::isfinite(s.ay) || !std::isfinite(s.az))
                throw Error(ErrorKind::MalformedRow, "non-finite sample");
        auto& buf = buffers_[location_index(loc)];
        buf.insert(buf.end(), batch.samples.begin(), batch.samples.end());
        if (!batch.samples.empty()) latest_[location_index(loc)] = batch.samples.back().t;
        if (!first_seen_ && !batch.samples.empty()) first_seen_ = batch.samples.front().t;

        std::vector<WarningEvent> emitted;
        check_stragglers(emitted);
        while (window_ready()) close_window(emitted);
        return emitted;
    }

    SessionState act(OperatorAction action) {
        std::lock_guard lock(mutex_);
        const auto status = state_.status;
        auto reject = [&] {
            throw Error(ErrorKind::InvalidTransition, "cannot apply action while " + std::string(to_string(status)));
        };
        switch (action) {
        case OperatorAction::Terminate:
            if (status == SessionStatus::Terminated) reject();
            state_.status = SessionStatus::Terminated;
            emit(EventKind::Terminated, state_.window_count);
            for (auto& sub : subscribers_) sub->finish();
            subscribers_.clear();
            break;
        case OperatorAction::RequestStepup:
            if (status != SessionStatus::Active) reject();
            state_.status = SessionStatus::PendingStepup;
            emit(EventKind::StepupRequested, state_.window_count);
            break;
        case OperatorAction::MarkVerified:
            if (status != SessionStatus::PendingStepup) reject();
            state_.status = SessionStatus::Active;
            emit(EventKind::Verified, state_.window_count);
            break;
        }
        return state_;
    }

    SessionState snapshot() const {
        std::lock_guard lock(mutex_);
        return state_;
    }
    std::vector<WarningEvent> log() const {
        std::lock_guard lock(mutex_);
        return log_;
    }
    const VerifierModel& model() const { return *model_; }

    /// Replays the log from `from_seq`, then follows live events.
    std::shared_ptr<Subscription> subscribe(std::uint64_t from_seq = 0) {
        std::lock_guard lock(mutex_);
        auto sub = std::make_shared<Subscription>(cfg_.subscriber_capacity);
        for (std::size_t i = static_cast<std::size_t>(std::min<std::uint64_t>(from_seq, log_.size())); i < log_.size(); ++i)
            sub->preload(log_[i]);
        if (state_.status == SessionStatus::Terminated)
            sub->finish();
        else
            subscribers_.push_back(sub);
        return sub;
    }
    std::size_t subscriber_count() const {
        std::lock_guard lock(mutex_);
        return subscribers_.size();
    }

private:
    const WarningEvent& emit(EventKind kind, std::size_t window_index,
                             double score = std::numeric_limits<double>::quiet_NaN(), std::string location = {}) {
        WarningEvent e;
        e.seq = log_.size();
        e.session_id = state_.session_id;
        e.window_index = window_index;
        e.kind = kind;
        e.score = score;
        e.threshold = model_->threshold.threshold;
        e.timestamp = clock_();
        e.location = std::move(location);
        log_.push_back(e);
        state_.event_count = log_.size();
        std::erase_if(subscribers_, [&](const auto& sub) { return !sub->publish(log_.back()); });
        return log_.back();
    }

    bool window_ready() const {
        for (auto loc : model_->plan.locations)
            if (buffers_[location_index(loc)].size() < cfg_.window_length) return false;
        return true;
    }

    /// A location whose newest sample trails the newest of any enrolled
    /// location by more than the straggler limit; reported once per episode.
    void check_stragglers(std::vector<WarningEvent>& emitted) {
        std::optional<double> lead;
        for (auto loc : model_->plan.locations)
            if (auto t = latest_[location_index(loc)]) lead = lead ? std::max(*lead, *t) : *t;
        if (!lead) return;
        for (auto loc : model_->plan.locations) {
            const auto i = location_index(loc);
            const double behind = latest_[i] ? *lead - *latest_[i] : *lead - first_seen_.value_or(*lead);
            const bool lagging = behind > cfg_.straggler_seconds;
            if (lagging && !gap_open_[i])
                emitted.push_back(emit(EventKind::DataGap, state_.window_count, std::numeric_limits<double>::quiet_NaN(),
                                       std::string(file_stem(loc))));
            gap_open_[i] = lagging;
        }
    }

    void close_window(std::vector<WarningEvent>& emitted) {
        WindowGroup group;
        group.origin = {state_.user_id, model_->activity, 0, state_.window_count};
        for (auto loc : model_->plan.locations) {
            auto& buf = buffers_[location_index(loc)];
            Window w;
            w.location = loc;
            w.origin = group.origin;
            w.rate = cfg_.sample_rate;
            w.data.resize(static_cast<Eigen::Index>(cfg_.window_length), 3);
            for (std::size_t r = 0; r < cfg_.window_length; ++r)
                w.data.row(static_cast<Eigen::Index>(r)) << buf[r].ax, buf[r].ay, buf[r].az;
            buf.erase(buf.begin(), buf.begin() + static_cast<std::ptrdiff_t>(cfg_.window_length));
            if (model_->kind == ClassifierKind::Svm) group.features[location_index(loc)] = compute_window_features(w);
            group.windows[location_index(loc)] = std::move(w);
        }
        const auto score = score_group(*model_, group);
        const bool failed = threshold_decision(score, model_->threshold) == Decision::Reject;
        const auto index = state_.window_count;
        detail::record_window(state_, score.probability, failed);
        if (failed) {
            ++state_.failure_count;
            ++state_.consecutive_failures;
        } else {
            state_.consecutive_failures = 0;
        }
        emitted.push_back(emit(failed ? EventKind::WindowFailure : EventKind::WindowPassed, index, score.probability));
        if (failed && state_.consecutive_failures == cfg_.policy.consecutive_window_failures) {
            ++state_.warning_count;
            emitted.push_back(emit(EventKind::WarningTriggered, index, score.probability));
        }
    }

    mutable std::mutex mutex_;
    std::shared_ptr<const VerifierModel> model_;
    ServiceConfig cfg_;
    Clock clock_;
    SessionState state_;
    std::vector<WarningEvent> log_;
    std::array<std::deque<SensorSample>, 3> buffers_;
    std::array<std::optional<double>, 3> latest_;
    std::array<bool, 3> gap_open_{};
    std::optional<double> first_seen_;
    std::vector<std::shared_ptr<Subscription>> subscribers_;
};

/// Enrolled models keyed by user, plus every live session.
class SessionManager {
public:
    explicit SessionManager(ServiceConfig cfg, Clock clock = wall_clock_seconds)
        : cfg_(std::move(cfg)), clock_(std::move(clock)) {
        cfg_.policy.validate();
    }

    const ServiceConfig& config() const { return cfg_; }

    void enroll(VerifierModel model) {
        std::unique_lock lock(mutex_);
        auto user = model.user_id;
        models_[user] = std::make_shared<const VerifierModel>(std::move(model));
    }

    /// Loads every `.jwpr` in the model directory; with several models for a
    /// user the configured classifier/mode wins, then file name order.
    std::size_t load_models(const std::filesystem::path& dir) {
        namespace fs = std::filesystem;
        if (!fs::is_directory(dir)) throw Error(ErrorKind::MissingFile, "model directory " + dir.string());
        std::vector<fs::path> files;
        for (const auto& e : fs::directory_iterator(dir))
            if (e.path().extension() == ".jwpr") files.push_back(e.path());
        std::sort(files.begin(), files.end());
        std::map<std::string, std::pair<int, VerifierModel>> best;
        for (const auto& f : files) {
            auto m = load_model(f);
            int rank = 0;
            if (cfg_.classifier && m.kind == *cfg_.classifier) rank += 2;
            if (cfg_.mode && m.plan.label() == *cfg_.mode) rank += 1;
            auto it = best.find(m.user_id);
            if (it == best.end() || rank > it->second.first) best[m.user_id] = {rank, std::move(m)};
        }
        for (auto& [user, entry] : best) enroll(std::move(entry.second));
        return best.size();
    }

    std::vector<std::string> enrolled_users() const {
        std::shared_lock lock(mutex_);
        std::vector<std::string> out;
        for (const auto& [u, _] : models_) out.push_back(u);
        return out;
    }

    std::string create_session(const std::string& user_id) {
        std::unique_lock lock(mutex_);
        auto it = models_.find(user_id);
        if (it == models_.end()) throw Error(ErrorKind::UnknownUser, "no enrolled model for '" + user_id + "'");
        auto id = std::to_string(++next_id_);
        id = "s" + std::string(id.size() < 6 ? 6 - id.size() : 0, '0') + id;
        sessions_.emplace(id, std::make_shared<LiveSession>(id, it->second, cfg_, clock_));
        return id;
    }

    std::shared_ptr<LiveSession> session(const std::string& id) const {
        std::shared_lock lock(mutex_);
        auto it = sessions_.find(id);
        if (it == sessions_.end()) throw Error(ErrorKind::SessionNotFound, "no session '" + id + "'");
        return it->second;
    }

    std::vector<std::string> session_ids() const {
        std::shared_lock lock(mutex_);
        std::vector<std::string> out;
        for (const auto& [id, _] : sessions_) out.push_back(id);
        return out;
    }

    std::vector<WarningEvent> ingest(const std::string& id, const SampleBatch& batch) { return session(id)->ingest(batch); }
    SessionState act(const std::string& id, OperatorAction action) { return session(id)->act(action); }
    SessionState status(const std::string& id) const { return session(id)->snapshot(); }

private:
    ServiceConfig cfg_;
    Clock clock_;
    mutable std::shared_mutex mutex_;
    std::map<std::string, std::shared_ptr<const VerifierModel>> models_;
    std::map<std::string, std::shared_ptr<LiveSession>> sessions_;
    std::uint64_t next_id_ = 0;
};

/// JSON config file (keys as in ServiceConfig / WarningPolicy), then
/// JAWPRINT_* environment overrides.
inline ServiceConfig load_service_config(const std::optional<std::filesystem::path>& file,
                                         const std::function<const char*(const char*)>& getenv = std::getenv) {
    ServiceConfig cfg;
    auto apply = [&](const std::string& key, const std::string& value) {
        auto number = [&] {
            auto v = csv::parse_double(value);
            if (!v) throw Error(ErrorKind::InvalidArgument, key + " must be a number, got '" + value + "'");
            return *v;
        };
        if (key == "host") cfg.host = value;
        else if (key == "port") cfg.port = static_cast<int>(number());
        else if (key == "model_dir") cfg.model_dir = value;
        else if (key == "classifier") cfg.classifier = parse_classifier(value);
        else if (key == "mode") cfg.mode = value;
        else if (key == "consecutive_window_failures") {
            const double w = number();
            if (w < 1) throw Error(ErrorKind::InvalidArgument, "consecutive_window_failures must be >= 1");
            cfg.policy.consecutive_window_failures = static_cast<std::size_t>(w);
        }
        else if (key == "rolling_failure_rate") cfg.policy.rolling_failure_rate = number();
        else if (key == "rolling_window") cfg.policy.rolling_window = static_cast<std::size_t>(number());
        else if (key == "straggler_seconds") cfg.straggler_seconds = number();
        else if (key == "subscriber_capacity") cfg.subscriber_capacity = static_cast<std::size_t>(number());
        else throw Error(ErrorKind::InvalidArgument, "unknown config key '" + key + "'");
    };
    if (file) {
        std::ifstream in(*file);
        if (!in) throw Error(ErrorKind::MissingFile, file->string());
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(in);
        } catch (const nlohmann::json::exception& e) {
            throw Error(ErrorKind::MalformedRow, file->string() + ": " + e.what());
        }
        for (const auto& [key, value] : j.items()) apply(key, value.is_string() ? value.get<std::string>() : value.dump());
    }
    const std::pair<const char*, const char*> env_keys[] = {
        {"JAWPRINT_HOST", "host"},
        {"JAWPRINT_PORT", "port"},
        {"JAWPRINT_MODEL_DIR", "model_dir"},
        {"JAWPRINT_CLASSIFIER", "classifier"},
        {"JAWPRINT_MODE", "mode"},
        {"JAWPRINT_WARNING_WINDOWS", "consecutive_window_failures"},
        {"JAWPRINT_ROLLING_RATE", "rolling_failure_rate"},
        {"JAWPRINT_ROLLING_WINDOW", "rolling_window"},
        {"JAWPRINT_STRAGGLER_SECONDS", "straggler_seconds"},
        {"JAWPRINT_SUBSCRIBER_CAPACITY", "subscriber_capacity"},
    };
    for (const auto& [env, key] : env_keys)
        if (const char* v = getenv(env)) apply(key, v);
    cfg.policy.validate();
    return cfg;
}

} // namespace jawprint
