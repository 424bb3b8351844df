#pragma once

#include <atomic>
#include <string>

// Eigen must come before httplib: <resolv.h> defines a `_res` macro.
#include "jawprint/service.hpp"

#include <httplib.h>
#include <json.hpp>

namespace jawprint {

inline int http_status(ErrorKind kind) {
    switch (kind) {
    case ErrorKind::UnknownUser:
    case ErrorKind::SessionNotFound: return 404;
    case ErrorKind::SessionNotActive:
    case ErrorKind::InvalidTransition: return 409;
    default: return 400;
    }
}

/// One server-push record: `id`, `event` and a single-line JSON `data` field.
inline std::string sse_frame(const WarningEvent& e) {
    return "id: " + std::to_string(e.seq) + "\nevent: " + std::string(to_string(e.kind)) + "\ndata: " + to_json(e).dump() +
           "\n\n";
}

/// JSON over HTTP in front of a SessionManager.
///   POST /sessions                {user_id}                    -> {session_id}
///   GET  /sessions                                             -> [status, ...]
///   POST /sessions/{id}/samples   {location, samples:[{t,ax,ay,az}]} -> {events:[...]}
///   GET  /sessions/{id}/status                                 -> status
///   GET  /sessions/{id}/events?from=N                          -> text/event-stream
///   POST /sessions/{id}/actions   {action}                     -> status
///   GET  /health, GET /users
class HttpService {
public:
    explicit HttpService(SessionManager& manager) : manager_(manager) { routes(); }
    ~HttpService() { stop(); }

    /// Port 0 picks a free port; returns the bound port.
    int bind(const std::string& host, int port) {
        const int bound = port == 0 ? server_.bind_to_any_port(host) : (server_.bind_to_port(host, port) ? port : -1);
        if (bound < 0) throw Error(ErrorKind::Io, "cannot bind " + host + ":" + std::to_string(port));
        return bound;
    }
    /// Blocks until stop().
    void run() { server_.listen_after_bind(); }
    void wait_until_ready() const { server_.wait_until_ready(); }
    void stop() {
        stopping_ = true;
        if (server_.is_running()) server_.stop();
    }

private:
    using Request = httplib::Request;
    using Response = httplib::Response;

    static void reply(Response& res, int status, const nlohmann::json& body) {
        res.status = status;
        res.set_content(body.dump(), "application/json");
    }

    template <class Handler>
    auto guarded(Handler handler) {
        return [this, handler](const Request& req, Response& res) {
            try {
                handler(req, res);
            } catch (const Error& e) {
                reply(res, http_status(e.kind()), {{"error", to_string(e.kind())}, {"message", e.what()}});
            } catch (const nlohmann::json::exception& e) {
                reply(res, 400, {{"error", "MalformedRow"}, {"message", e.what()}});
            }
        };
    }

    nlohmann::json status_json(const std::string& id) const {
        return to_json(manager_.status(id), manager_.config().policy);
    }

    void routes() {
        server_.Get("/health", guarded([](const Request&, Response& res) { reply(res, 200, {{"status", "ok"}}); }));
        server_.Get("/users", guarded([this](const Request&, Response& res) { reply(res, 200, manager_.enrolled_users()); }));
        server_.Post("/sessions", guarded([this](const Request& req, Response& res) {
            const auto body = nlohmann::json::parse(req.body);
            const auto id = manager_.create_session(body.at("user_id").get<std::string>());
            reply(res, 201, {{"session_id", id}});
        }));
        server_.Get("/sessions", guarded([this](const Request&, Response& res) {
            auto out = nlohmann::json::array();
            for (const auto& id : manager_.session_ids()) out.push_back(status_json(id));
            reply(res, 200, out);
        }));
        server_.Post(R"(/sessions/([^/]+)/samples)", guarded([this](const Request& req, Response& res) {
            const auto body = nlohmann::json::parse(req.body);
            SampleBatch batch;
            batch.location = body.at("location").get<std::string>();
            for (const auto& s : body.at("samples"))
                batch.samples.push_back({s.at("t").get<double>(), s.at("ax").get<double>(), s.at("ay").get<double>(),
                                         s.at("az").get<double>()});
            auto events = nlohmann::json::array();
            for (const auto& e : manager_.ingest(req.matches[1], batch)) events.push_back(to_json(e));
            reply(res, 200, {{"events", events}});
        }));
        server_.Get(R"(/sessions/([^/]+)/status)",
                    guarded([this](const Request& req, Response& res) { reply(res, 200, status_json(req.matches[1])); }));
        server_.Post(R"(/sessions/([^/]+)/actions)", guarded([this](const Request& req, Response& res) {
            const auto body = nlohmann::json::parse(req.body);
            const auto state = manager_.act(req.matches[1], parse_action(body.at("action").get<std::string>()));
            reply(res, 200, to_json(state, manager_.config().policy));
        }));
        server_.Get(R"(/sessions/([^/]+)/events)", guarded([this](const Request& req, Response& res) {
            std::uint64_t from = 0;
            if (req.has_param("from")) from = static_cast<std::uint64_t>(csv::parse_int(req.get_param_value("from")).value_or(0));
            auto sub = manager_.session(req.matches[1])->subscribe(from);
            res.set_header("Cache-Control", "no-cache");
            auto idle = std::make_shared<int>(0);
            res.set_chunked_content_provider("text/event-stream", [this, sub, idle](std::size_t, httplib::DataSink& sink) {
                if (stopping_ || !sink.is_writable()) {
                    sub->cancel();
                    return false;
                }
                if (auto e = sub->next(std::chrono::milliseconds(200))) {
                    *idle = 0;
                    const auto frame = sse_frame(*e);
                    return sink.write(frame.data(), frame.size());
                }
                if (sub->done()) {
                    sink.done();
                    return true;
                }
                if (++*idle < 10) return true;
                *idle = 0;
                static constexpr char keepalive[] = ": keepalive\n\n";
                return sink.write(keepalive, sizeof keepalive - 1);
            }, [sub](bool) { sub->cancel(); });
        }));
    }

    SessionManager& manager_;
    httplib::Server server_;
    std::atomic<bool> stopping_{false};
};

} // namespace jawprint
