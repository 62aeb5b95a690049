#include "pulselabel/http_api.hpp"

#include "pulselabel/analytics.hpp"
#include "pulselabel/errors.hpp"
#include "pulselabel/json_io.hpp"

#include <httplib.h>

#include <algorithm>

namespace pulselabel::http {

using nlohmann::json;

namespace {

void send(httplib::Response& res, int status, const json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, const std::string& message,
                const std::string& field = {}) {
    json body{{"error", message}};
    if (!field.empty()) body["field"] = field;
    send(res, status, body);
}

// Runs a handler, mapping exceptions onto status codes.
template <typename F>
httplib::Server::Handler guarded(F f) {
    return [f](const httplib::Request& req, httplib::Response& res) {
        try {
            f(req, res);
        } catch (const ValidationError& e) {
            send_error(res, 400, e.what(), e.field());
        } catch (const NotFound& e) {
            send_error(res, 404, e.what());
        } catch (const json::exception& e) {
            send_error(res, 400, e.what(), "(body)");
        } catch (const std::invalid_argument& e) {
            send_error(res, 400, e.what());
        } catch (const std::exception& e) {
            send_error(res, 500, e.what());
        }
    };
}

json parse_body(const httplib::Request& req) {
    try {
        return json::parse(req.body);
    } catch (const json::parse_error& e) {
        throw ValidationError("(body)", std::string("not valid JSON: ") + e.what());
    }
}

json query_json(const store::EmaQuery& q, std::int64_t now) {
    json stress = json::array();
    for (std::size_t i = 0; i < kStressOptions.size(); ++i) {
        stress.push_back({{"value", i}, {"label", kStressOptions[i]}});
    }
    json activities = json::array();
    for (std::size_t c = 0; c < kContextCount; ++c) {
        activities.push_back(to_string(static_cast<Context>(c)));
    }
    return {{"ema_id", q.ema_id},
            {"subject_id", q.subject_id},
            {"sample_id", q.sample_id},
            {"dispatched_at_ms", q.dispatched_at_ms},
            {"expires_at_ms", q.expires_at_ms},
            {"seconds_remaining", std::max<std::int64_t>(0, q.expires_at_ms - now) / 1000.0},
            {"questions",
             {{"stress", stress},
              {"emotion", {"sad", "mad", "neutral", "happy"}},
              {"activity", activities}}}};
}

std::string param(const httplib::Request& req, const char* name, const std::string& fallback) {
    return req.has_param(name) ? req.get_param_value(name) : fallback;
}

double number_param(const httplib::Request& req, const char* name, double fallback) {
    if (!req.has_param(name)) return fallback;
    const auto v = req.get_param_value(name);
    try {
        std::size_t used = 0;
        const double d = std::stod(v, &used);
        if (used != v.size()) throw std::invalid_argument(v);
        return d;
    } catch (const std::exception&) {
        throw ValidationError(name, "expected a number, got '" + v + "'");
    }
}

json analytics_report(service::Service& svc, const httplib::Request& req,
                      const std::string& report) {
    const auto snap = svc.snapshot();
    const auto& cfg = svc.config();
    auto subject = [&] {
        const auto s = param(req, "subject", "");
        if (s.empty()) throw ValidationError("subject", "required for this report");
        return s;
    };
    if (report == "coverage") {
        const auto s = subject();
        const double d = number_param(req, "D", cfg.coverage_d);
        return {{"subject_id", s},
                {"D", d},
                {"curve", analytics::to_json(
                              analytics::coverage_curve(snap, s, d, cfg.engine.n_initial))}};
    }
    if (report == "temporal") {
        const auto s = subject();
        const auto g = analytics::group_by_from_string(param(req, "group_by", "activity"));
        if (!g) throw ValidationError("group_by", "expected all, activity or stress");
        return analytics::to_json(analytics::temporal_profile(
            snap, s, *g, number_param(req, "horizon_min", analytics::kDefaultHorizonMinutes)));
    }
    if (report == "quality") {
        const auto min_count = number_param(req, "min_count", static_cast<double>(cfg.min_group_count));
        return analytics::to_json(
            analytics::quality_by_activity(snap, static_cast<std::size_t>(std::max(0.0, min_count))));
    }
    if (report == "response") return analytics::to_json(analytics::response_stats(snap));
    throw NotFound("unknown report '" + report + "' (coverage, temporal, quality, response)");
}

}  // namespace

void register_routes(httplib::Server& server, service::Service& svc) {
    // The EMA web client may be served from another origin.
    server.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                                {"Access-Control-Allow-Headers", "Content-Type"},
                                {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"}});
    server.Options(R"(/v1/.*)", [](const httplib::Request&, httplib::Response& res) {
        res.status = 204;
    });

    server.Post("/v1/samples", guarded([&svc](const httplib::Request& req, httplib::Response& res) {
        const auto r = svc.ingest_json(parse_body(req));
        json body = store::to_json(r.record);
        body["duplicate"] = r.duplicate;
        body["query"] = r.query ? store::to_json(*r.query) : json(nullptr);
        send(res, r.duplicate ? 200 : 201, body);
    }));

    server.Get("/v1/subjects/:id/ema/pending",
               guarded([&svc](const httplib::Request& req, httplib::Response& res) {
                   const auto& id = req.path_params.at("id");
                   const auto now = svc.now_ms();
                   json list = json::array();
                   for (const auto& q : svc.pending_queries(id)) list.push_back(query_json(q, now));
                   send(res, 200, {{"subject_id", id}, {"now_ms", now}, {"queries", list}});
               }));

    server.Get("/v1/ema/:ema_id", guarded([&svc](const httplib::Request& req, httplib::Response& res) {
        const auto& id = req.path_params.at("ema_id");
        send(res, 200, {{"ema_id", id}, {"status", store::to_string(svc.query_status(id))}});
    }));

    server.Post("/v1/ema/:ema_id/response",
                guarded([&svc](const httplib::Request& req, httplib::Response& res) {
                    const auto& id = req.path_params.at("ema_id");
                    const auto ack =
                        svc.submit_response(service::response_input_from_json(parse_body(req), id));
                    json body = store::to_json(ack.response);
                    body["status"] = ack.status;
                    send(res, 200, body);
                }));

    server.Get("/v1/analytics/:report",
               guarded([&svc](const httplib::Request& req, httplib::Response& res) {
                   send(res, 200, analytics_report(svc, req, req.path_params.at("report")));
               }));

    server.Get("/v1/health", guarded([&svc](const httplib::Request&, httplib::Response& res) {
        send(res, 200, svc.health());
    }));
}

ApiServer::ApiServer(service::Service& svc) : server_(std::make_unique<httplib::Server>()) {
    register_routes(*server_, svc);
}

ApiServer::~ApiServer() { stop(); }

int ApiServer::start(const std::string& host, int port) {
    const int bound = port == 0 ? server_->bind_to_any_port(host) : port;
    if (port != 0 && !server_->bind_to_port(host, port)) {
        throw std::runtime_error("cannot bind " + host + ":" + std::to_string(port));
    }
    if (bound <= 0) throw std::runtime_error("cannot bind " + host);
    thread_ = std::thread([this] { server_->listen_after_bind(); });
    server_->wait_until_ready();
    return bound;
}

void ApiServer::stop() {
    if (server_) server_->stop();
    if (thread_.joinable()) thread_.join();
}

void ApiServer::run(const std::string& host, int port) {
    if (!server_->listen(host, port)) {
        throw std::runtime_error("cannot listen on " + host + ":" + std::to_string(port));
    }
}

}  // namespace pulselabel::http
