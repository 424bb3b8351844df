#include <gtest/gtest.h>

#include <filesystem>
#include <random>
#include <thread>

#include "jawprint/http_service.hpp"
#include "jawprint/synthgen.hpp"
#include "support/service_fixtures.hpp"

using namespace jawprint;

using namespace fixtures;

namespace {

std::vector<EventKind> kinds(const std::vector<WarningEvent>& events) {
    std::vector<EventKind> out;
    for (const auto& e : events) out.push_back(e.kind);
    return out;
}

} // namespace

TEST(Service, PartialWindowEmitsNothing) {
    SessionManager mgr(fixed_config(), fixed_clock);
    mgr.enroll(sign_model());
    const auto id = mgr.create_session("alice");
    double t = 0.0;
    EXPECT_TRUE(mgr.ingest(id, constant_batch(SensorLocation::BelowChin, 249, 1.0, t)).empty());
    const auto events = mgr.ingest(id, constant_batch(SensorLocation::BelowChin, 1, 1.0, t));
    ASSERT_EQ(events.size(), 1u);
    EXPECT_EQ(events[0].kind, EventKind::WindowPassed);
    EXPECT_EQ(events[0].window_index, 0u);
}

TEST(Service, WarningAfterConsecutiveFailuresOnce) {
    SessionManager mgr(fixed_config(3), fixed_clock);
    mgr.enroll(sign_model());
    const auto id = mgr.create_session("alice");
    double t = 0.0;
    std::vector<WarningEvent> all;
    for (int i = 0; i < 6; ++i) {
        auto ev = mgr.ingest(id, constant_batch(SensorLocation::BelowChin, 250, -1.0, t));
        all.insert(all.end(), ev.begin(), ev.end());
    }
    EXPECT_EQ(std::count_if(all.begin(), all.end(), [](auto& e) { return e.kind == EventKind::WarningTriggered; }), 1);
    EXPECT_EQ(kinds(all)[3], EventKind::WarningTriggered);
    EXPECT_EQ(all[3].window_index, 2u);
    const auto s = mgr.status(id);
    EXPECT_EQ(s.status, SessionStatus::Active);
    EXPECT_EQ(s.consecutive_failures, 6u);
    EXPECT_EQ(s.failure_count, 6u);
}

TEST(Service, PassResetsConsecutiveCounter) {
    SessionManager mgr(fixed_config(3), fixed_clock);
    mgr.enroll(sign_model());
    const auto id = mgr.create_session("alice");
    double t = 0.0;
    for (double v : {-1.0, -1.0, 1.0, -1.0}) mgr.ingest(id, constant_batch(SensorLocation::BelowChin, 250, v, t));
    const auto s = mgr.status(id);
    EXPECT_EQ(s.consecutive_failures, 1u);
    EXPECT_EQ(s.warning_count, 0u);
    EXPECT_EQ(s.window_count, 4u);
    EXPECT_EQ(s.recent_scores.size(), 4u);
}

TEST(Service, ActionsAndErrors) {
    SessionManager mgr(fixed_config(), fixed_clock);
    mgr.enroll(sign_model());
    const auto a = mgr.create_session("alice"), b = mgr.create_session("alice");
    EXPECT_NE(a, b);
    auto expect_kind = [](auto&& f, ErrorKind kind) {
        try {
            f();
            ADD_FAILURE() << "no error";
        } catch (const Error& e) {
            EXPECT_EQ(e.kind(), kind) << e.what();
        }
    };
    expect_kind([&] { mgr.create_session("mallory"); }, ErrorKind::UnknownUser);
    expect_kind([&] { mgr.status("nope"); }, ErrorKind::SessionNotFound);
    double t = 0.0;
    expect_kind([&] { mgr.ingest(a, constant_batch(SensorLocation::UpperLeftCheek, 5, 1.0, t)); }, ErrorKind::UnknownLocation);
    expect_kind([&] { mgr.ingest(a, {"forehead", {}}); }, ErrorKind::UnknownLocation);
    expect_kind([&] { mgr.act(a, OperatorAction::MarkVerified); }, ErrorKind::InvalidTransition);
    EXPECT_EQ(mgr.act(a, OperatorAction::RequestStepup).status, SessionStatus::PendingStepup);
    expect_kind([&] { mgr.act(a, OperatorAction::RequestStepup); }, ErrorKind::InvalidTransition);
    mgr.ingest(a, constant_batch(SensorLocation::BelowChin, 250, 1.0, t));
    EXPECT_EQ(mgr.act(a, OperatorAction::MarkVerified).status, SessionStatus::Active);
    EXPECT_EQ(mgr.act(a, OperatorAction::Terminate).status, SessionStatus::Terminated);
    expect_kind([&] { mgr.ingest(a, constant_batch(SensorLocation::BelowChin, 1, 1.0, t)); }, ErrorKind::SessionNotActive);
    expect_kind([&] { mgr.act(a, OperatorAction::Terminate); }, ErrorKind::InvalidTransition);
    EXPECT_EQ(mgr.act(b, OperatorAction::RequestStepup).status, SessionStatus::PendingStepup);
    EXPECT_EQ(mgr.act(b, OperatorAction::Terminate).status, SessionStatus::Terminated);
    const auto log = mgr.session(a)->log();
    EXPECT_EQ(kinds(log), (std::vector{EventKind::StepupRequested, EventKind::WindowPassed, EventKind::Verified,
                                       EventKind::Terminated}));
}

TEST(Service, FoldMatchesSnapshotAndNoAutoTermination) {
    std::mt19937_64 rng(2024);
    const std::array<LocationPlan, 2> plans{LocationPlan::single(SensorLocation::BelowChin), LocationPlan::fused()};
    std::size_t windows = 0, warnings = 0, gaps = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t w = 1 + rng() % 4;
        SessionManager mgr(fixed_config(w), fixed_clock);
        const auto& plan = plans[rng() % 2];
        mgr.enroll(sign_model(plan));
        const auto id = mgr.create_session("alice");
        std::array<double, 3> clock{};
        bool terminated = false;
        const int ops = 1 + static_cast<int>(rng() % 12);
        for (int op = 0; op < ops; ++op) {
            const auto r = rng() % 10;
            try {
                if (r < 6) {
                    const double v = rng() % 2 ? 1.0 : -1.0;
                    for (auto loc : plan.locations)
                        mgr.ingest(id, constant_batch(loc, 250, v, clock[location_index(loc)]));
                } else if (r < 8) {
                    const auto loc = plan.locations[rng() % plan.locations.size()];
                    mgr.ingest(id, constant_batch(loc, 1 + rng() % 400, rng() % 2 ? 1.0 : -1.0, clock[location_index(loc)]));
                } else {
                    const auto action = static_cast<OperatorAction>(rng() % 3);
                    mgr.act(id, action);
                    if (action == OperatorAction::Terminate) terminated = true;
                }
            } catch (const Error& e) {
                ASSERT_TRUE(e.kind() == ErrorKind::InvalidTransition || e.kind() == ErrorKind::SessionNotActive) << e.what();
                if (e.kind() == ErrorKind::SessionNotActive) {
                    ASSERT_TRUE(terminated);
                }
            }
            ASSERT_EQ(mgr.status(id).status == SessionStatus::Terminated, terminated);
        }
        const auto log = mgr.session(id)->log();
        ASSERT_EQ(fold_events(id, "alice", log), mgr.status(id));
        ASSERT_EQ(mgr.status(id).warning_count, expected_warnings(log, w));
        for (std::size_t i = 0; i < log.size(); ++i) {
            ASSERT_EQ(log[i].seq, i);
            if (log[i].kind == EventKind::WarningTriggered) {
                ASSERT_GT(i, 0u);
                ASSERT_EQ(log[i - 1].kind, EventKind::WindowFailure);
            }
            if (log[i].kind == EventKind::Terminated) {
                ASSERT_EQ(i + 1, log.size());
            }
        }
        windows += mgr.status(id).window_count;
        warnings += mgr.status(id).warning_count;
        gaps += static_cast<std::size_t>(std::count_if(log.begin(), log.end(), [](auto& e) { return e.kind == EventKind::DataGap; }));
    }
    EXPECT_GT(windows, 1000u);
    EXPECT_GT(warnings, 50u);
    EXPECT_GT(gaps, 10u);
}

TEST(Service, StragglerRaisesOneDataGap) {
    SessionManager mgr(fixed_config(), fixed_clock);
    mgr.enroll(sign_model(LocationPlan::fused()));
    const auto id = mgr.create_session("alice");
    std::array<double, 3> clock{};
    mgr.ingest(id, constant_batch(SensorLocation::BelowChin, 150, 1.0, clock[0]));
    auto events = mgr.ingest(id, constant_batch(SensorLocation::BelowChin, 100, 1.0, clock[0]));
    ASSERT_EQ(events.size(), 2u);  // both cheeks are silent for 2.49 s
    EXPECT_EQ(events[0].kind, EventKind::DataGap);
    EXPECT_EQ(events[1].location, "lower_right_cheek");
    EXPECT_TRUE(mgr.ingest(id, constant_batch(SensorLocation::BelowChin, 10, 1.0, clock[0])).empty());
    mgr.ingest(id, constant_batch(SensorLocation::UpperLeftCheek, 250, 1.0, clock[1]));
    events = mgr.ingest(id, constant_batch(SensorLocation::LowerRightCheek, 250, 1.0, clock[2]));
    ASSERT_EQ(events.size(), 1u);
    EXPECT_EQ(events[0].kind, EventKind::WindowPassed);
}

TEST(Service, SubscribersSeeIdenticalOrderedStreams) {
    SessionManager mgr(fixed_config(), fixed_clock);
    mgr.enroll(sign_model());
    const auto id = mgr.create_session("alice");
    double t = 0.0;
    for (int i = 0; i < 4; ++i) mgr.ingest(id, constant_batch(SensorLocation::BelowChin, 250, i % 2 ? 1.0 : -1.0, t));
    auto late = mgr.session(id)->subscribe(0);
    auto early = mgr.session(id)->subscribe(2);
    std::vector<std::uint64_t> seen_a, seen_b;
    std::thread reader_a([&] {
        while (!late->done())
            if (auto e = late->next(std::chrono::milliseconds(50))) seen_a.push_back(e->seq);
    });
    std::thread reader_b([&] {
        while (!early->done())
            if (auto e = early->next(std::chrono::milliseconds(50))) seen_b.push_back(e->seq);
    });
    for (int i = 0; i < 20; ++i) mgr.ingest(id, constant_batch(SensorLocation::BelowChin, 250, -1.0, t));
    mgr.act(id, OperatorAction::Terminate);
    reader_a.join();
    reader_b.join();
    const auto n = mgr.session(id)->log().size();
    ASSERT_EQ(seen_a.size(), n);
    for (std::size_t i = 0; i < n; ++i) EXPECT_EQ(seen_a[i], i);
    EXPECT_EQ(std::vector(seen_a.begin() + 2, seen_a.end()), seen_b);
}

TEST(Service, SlowSubscriberDroppedWithoutStallingIngest) {
    auto cfg = fixed_config();
    cfg.subscriber_capacity = 3;
    SessionManager mgr(cfg, fixed_clock);
    mgr.enroll(sign_model());
    const auto id = mgr.create_session("alice");
    auto slow = mgr.session(id)->subscribe();
    double t = 0.0;
    for (int i = 0; i < 10; ++i) mgr.ingest(id, constant_batch(SensorLocation::BelowChin, 250, 1.0, t));
    EXPECT_TRUE(slow->dropped());
    EXPECT_EQ(mgr.session(id)->subscriber_count(), 0u);
    EXPECT_EQ(mgr.status(id).window_count, 10u);
}

TEST(Service, ScoresBitEqualToBatchPipeline) {
    CohortSpec spec;
    spec.users = 3;
    spec.duration = 30.0;
    spec.seed = 8;
    const auto ds = simulate_dataset(spec);
    const auto bank = build_window_bank(ds, Activity::Seated);
    EvaluationConfig cfg;
    cfg.verifier.lstm.units_per_layer = 6;
    cfg.verifier.lstm.max_epochs = 2;
    std::mt19937_64 rng(4);
    for (auto kind : {ClassifierKind::Svm, ClassifierKind::Lstm}) {
        auto model = evaluate_user(bank, "user01", Activity::Seated, kind, LocationPlan::fused(), cfg).model;
        const auto& live = ds.user("user01").session(Activity::Seated, 2);
        std::vector<double> batch;
        for (const auto& g : bank.at("user01", Activity::Seated, 2)) batch.push_back(score_group(model, g).probability);

        SessionManager mgr(ServiceConfig{}, fixed_clock);
        mgr.enroll(model);
        const auto streamed = stream_session(mgr, mgr.create_session("user01"), live, rng);
        ASSERT_EQ(streamed.size(), batch.size());
        for (std::size_t i = 0; i < batch.size(); ++i)
            EXPECT_EQ(std::bit_cast<std::uint64_t>(streamed[i]), std::bit_cast<std::uint64_t>(batch[i])) << to_string(kind) << " " << i;
    }
}

TEST(Service, ConfigFileAndEnvironment) {
    const auto path = std::filesystem::temp_directory_path() / "jawprint_service.json";
    std::ofstream(path) << R"({"port": 9123, "consecutive_window_failures": 5, "model_dir": "/srv/models", "classifier": "lstm"})";
    auto cfg = load_service_config(path, [](const char*) -> const char* { return nullptr; });
    EXPECT_EQ(cfg.port, 9123);
    EXPECT_EQ(cfg.policy.consecutive_window_failures, 5u);
    EXPECT_EQ(cfg.model_dir, "/srv/models");
    EXPECT_EQ(cfg.classifier, ClassifierKind::Lstm);
    cfg = load_service_config(path, [](const char* key) -> const char* {
        if (std::string_view(key) == "JAWPRINT_WARNING_WINDOWS") return "2";
        if (std::string_view(key) == "JAWPRINT_PORT") return "7000";
        return nullptr;
    });
    EXPECT_EQ(cfg.port, 7000);
    EXPECT_EQ(cfg.policy.consecutive_window_failures, 2u);
    EXPECT_THROW(load_service_config(path, [](const char* key) -> const char* {
                     return std::string_view(key) == "JAWPRINT_WARNING_WINDOWS" ? "0" : nullptr;
                 }),
                 Error);
    std::ofstream(path) << R"({"colour": "blue"})";
    EXPECT_THROW(load_service_config(path, [](const char*) -> const char* { return nullptr; }), Error);
    std::filesystem::remove(path);
}

TEST(Service, LoadsModelDirectory) {
    const auto dir = std::filesystem::temp_directory_path() / "jawprint_service_models";
    std::filesystem::create_directories(dir);
    auto m = sign_model();
    save_model(m, model_path(dir, "alice", m.kind, m.plan, m.activity));
    SessionManager mgr(ServiceConfig{});
    EXPECT_EQ(mgr.load_models(dir), 1u);
    EXPECT_EQ(mgr.enrolled_users(), std::vector<std::string>{"alice"});
    std::filesystem::remove_all(dir);
}

TEST(Http, EndToEndWithEventStream) {
    SessionManager mgr(fixed_config(2));
    mgr.enroll(sign_model());
    HttpService http(mgr);
    const int port = http.bind("127.0.0.1", 0);
    std::thread server([&] { http.run(); });
    http.wait_until_ready();
    httplib::Client client("127.0.0.1", port);

    auto res = client.Post("/sessions", R"({"user_id": "alice"})", "application/json");
    ASSERT_TRUE(res);
    ASSERT_EQ(res->status, 201);
    const auto id = nlohmann::json::parse(res->body).at("session_id").get<std::string>();
    EXPECT_EQ(client.Post("/sessions", R"({"user_id": "bob"})", "application/json")->status, 404);

    std::vector<std::vector<std::string>> streams(2);
    std::vector<std::thread> listeners;
    for (auto& out : streams)
        listeners.emplace_back([&, port] {
            httplib::Client sse("127.0.0.1", port);
            sse.set_read_timeout(10, 0);
            std::string buffer;
            sse.Get("/sessions/" + id + "/events", [&](const char* data, std::size_t len) {
                buffer.append(data, len);
                for (auto end = buffer.find("\n\n"); end != std::string::npos; end = buffer.find("\n\n")) {
                    const auto frame = buffer.substr(0, end);
                    buffer.erase(0, end + 2);
                    const auto data_at = frame.find("data: ");
                    if (data_at != std::string::npos) out.push_back(frame.substr(data_at + 6));
                }
                return true;
            });
        });

    auto post_window = [&](double v) {
        nlohmann::json body{{"location", "chin"}, {"samples", nlohmann::json::array()}};
        for (int i = 0; i < 250; ++i) body["samples"].push_back({{"t", i * 0.01}, {"ax", v}, {"ay", 0.0}, {"az", 1.0}});
        return client.Post("/sessions/" + id + "/samples", body.dump(), "application/json");
    };
    res = post_window(-1.0);
    EXPECT_EQ(res->status, 200) << res->body;
    EXPECT_EQ(nlohmann::json::parse(res->body)["events"][0]["kind"], "window_failure");
    res = post_window(-1.0);
    const auto events = nlohmann::json::parse(res->body)["events"];
    ASSERT_EQ(events.size(), 2u);
    EXPECT_EQ(events[1]["kind"], "warning_triggered");
    post_window(1.0);

    const auto status = nlohmann::json::parse(client.Get("/sessions/" + id + "/status")->body);
    EXPECT_EQ(status["status"], "active");
    EXPECT_EQ(status["window_count"], 3);
    EXPECT_EQ(status["consecutive_failures"], 0);
    EXPECT_EQ(status["failure_count"], 2);
    EXPECT_EQ(status["recent_scores"].size(), 3u);

    res = client.Post("/sessions/" + id + "/actions", R"({"action": "request_stepup"})", "application/json");
    EXPECT_EQ(nlohmann::json::parse(res->body)["status"], "verified-pending-stepup");
    res = client.Post("/sessions/" + id + "/actions", R"({"action": "request_stepup"})", "application/json");
    EXPECT_EQ(res->status, 409);
    res = client.Post("/sessions/" + id + "/actions", R"({"action": "terminate"})", "application/json");
    EXPECT_EQ(nlohmann::json::parse(res->body)["status"], "terminated");
    EXPECT_EQ(post_window(1.0)->status, 409);
    EXPECT_EQ(client.Get("/sessions/zzz/status")->status, 404);
    EXPECT_EQ(client.Post("/sessions/" + id + "/samples", "{not json", "application/json")->status, 400);

    for (auto& t : listeners) t.join();
    const auto log = mgr.session(id)->log();
    for (const auto& out : streams) {
        ASSERT_EQ(out.size(), log.size());
        for (std::size_t i = 0; i < log.size(); ++i) {
            const auto e = event_from_json(nlohmann::json::parse(out[i]));
            EXPECT_EQ(e.seq, log[i].seq);
            EXPECT_EQ(e.kind, log[i].kind);
            EXPECT_EQ(e.window_index, log[i].window_index);
        }
    }
    http.stop();
    server.join();
}
