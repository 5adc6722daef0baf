#pragma once
// HTTP+JSON front of the annotation sessions.
//
//   GET  /api/session/:id/next?annotator=A   -> task, or {"done": true}
//   POST /api/session/:id/judgments          {pair_id, annotator_id, choice, revise}
//   GET  /api/session/:id/agreement          -> agreement report
//   GET  /api/session/:id/progress
//   POST /api/session/:id/adjudications      {pair_id, choice}
//
// Errors are returned as {"error": <category>, "message": <text>}.

#include "incivility/error.hpp"
#include "incivility/service.hpp"
#include "incivility/util.hpp"

#include <httplib.h>

#include <filesystem>
#include <map>
#include <memory>
#include <string>

namespace incivility {

inline int http_status_for(Errc code) {
    switch (code) {
    case Errc::Session:
    case Errc::UnknownPair: return 404;
    case Errc::Duplicate: return 409;
    case Errc::InsufficientData: return 422;
    case Errc::Io: return 500;
    default: return 400;
    }
}

class AnnotationServer {
public:
    AnnotationServer() { install_routes(); }

    void add_session(std::shared_ptr<AnnotationSession> session) {
        std::string id = session->id();
        sessions_[id] = std::move(session);
    }

    bool mount_static(const std::filesystem::path& dir) { return server_.set_mount_point("/", dir.string()); }

    // Blocks until stop(). Port 0 picks a free port; see bound_port().
    bool listen(const std::string& host, int port) {
        if (port == 0) {
            bound_port_ = server_.bind_to_any_port(host);
            if (bound_port_ < 0) return false;
            return server_.listen_after_bind();
        }
        bound_port_ = port;
        return server_.listen(host, port);
    }

    bool bind(const std::string& host, int port = 0) {
        if (port == 0) {
            bound_port_ = server_.bind_to_any_port(host);
            return bound_port_ > 0;
        }
        bound_port_ = port;
        return server_.bind_to_port(host, port);
    }
    bool listen_after_bind() { return server_.listen_after_bind(); }

    void stop() { server_.stop(); }
    void wait_until_ready() const { server_.wait_until_ready(); }
    int bound_port() const { return bound_port_; }

private:
    AnnotationSession& session_for(const httplib::Request& req) {
        const std::string id = req.matches[1];
        auto it = sessions_.find(id);
        if (it == sessions_.end()) throw Error(Errc::Session, "unknown session '" + id + "'");
        return *it->second;
    }

    static void send(httplib::Response& res, int status, const json& body) {
        res.status = status;
        res.set_content(body.dump(), "application/json");
    }

    template <typename Handler>
    httplib::Server::Handler guarded(Handler handler) {
        return [this, handler](const httplib::Request& req, httplib::Response& res) {
            try {
                handler(req, res);
            } catch (const Error& e) {
                send(res, http_status_for(e.code()), json{{"error", to_string(e.code())}, {"message", e.what()}});
            } catch (const json::exception& e) {
                send(res, 400, json{{"error", "parse error"}, {"message", e.what()}});
            }
        };
    }

    static json parse_body(const httplib::Request& req) {
        json body = json::parse(req.body, nullptr, false);
        if (body.is_discarded() || !body.is_object()) throw Error(Errc::Parse, "request body must be a JSON object");
        return body;
    }

    void install_routes() {
        server_.Get(R"(/api/session/([^/]+)/next)", guarded([this](const httplib::Request& req, httplib::Response& res) {
            auto& session = session_for(req);
            const std::string annotator = req.get_param_value("annotator");
            if (annotator.empty()) throw Error(Errc::Schema, "missing annotator query parameter");
            auto task = session.next_pair(annotator);
            send(res, 200, task ? to_json(*task) : json{{"done", true}, {"total", session.tasks().size()}});
        }));
        server_.Post(R"(/api/session/([^/]+)/judgments)", guarded([this](const httplib::Request& req, httplib::Response& res) {
            auto& session = session_for(req);
            const json body = parse_body(req);
            const auto ack = session.submit_judgment(require_string(body, "pair_id", 0), require_string(body, "annotator_id", 0),
                                                     parse_binary_choice(require_string(body, "choice", 0)), body.value("revise", false));
            send(res, 201, json{{"accepted", true}, {"seq", ack.seq}, {"superseded_previous", ack.superseded_previous}});
        }));
        server_.Get(R"(/api/session/([^/]+)/agreement)", guarded([this](const httplib::Request& req, httplib::Response& res) {
            send(res, 200, to_json(session_for(req).agreement_report()));
        }));
        server_.Get(R"(/api/session/([^/]+)/progress)", guarded([this](const httplib::Request& req, httplib::Response& res) {
            send(res, 200, to_json(session_for(req).progress()));
        }));
        server_.Post(R"(/api/session/([^/]+)/adjudications)", guarded([this](const httplib::Request& req, httplib::Response& res) {
            auto& session = session_for(req);
            const json body = parse_body(req);
            session.adjudicate(require_string(body, "pair_id", 0), parse_binary_choice(require_string(body, "choice", 0)));
            send(res, 201, json{{"accepted", true}});
        }));
    }

    httplib::Server server_;
    std::map<std::string, std::shared_ptr<AnnotationSession>> sessions_;
    int bound_port_ = -1;
};

}  // namespace incivility
