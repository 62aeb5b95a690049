#pragma once

#include "pulselabel/service.hpp"

#include <memory>
#include <string>
#include <thread>

namespace httplib {
class Server;
}

namespace pulselabel::http {

// JSON API over a Service:
//   POST /v1/samples                      ingest one window
//   GET  /v1/subjects/{id}/ema/pending    open queries for a subject
//   GET  /v1/ema/{ema_id}                 query status
//   POST /v1/ema/{ema_id}/response        submit answers
//   GET  /v1/analytics/{report}?subject=  coverage | temporal | quality | response
//   GET  /v1/health
// Client errors return 4xx with {"error": ..., "field": ...}.
void register_routes(httplib::Server& server, service::Service& service);

// Owns an httplib server running on a background thread.
class ApiServer {
public:
    explicit ApiServer(service::Service& service);
    ~ApiServer();
    ApiServer(const ApiServer&) = delete;
    ApiServer& operator=(const ApiServer&) = delete;

    // Port 0 binds an ephemeral port. Returns the bound port; throws on failure.
    int start(const std::string& host, int port);
    void stop();
    // Blocks in the calling thread until stop() is called elsewhere.
    void run(const std::string& host, int port);

private:
    std::unique_ptr<httplib::Server> server_;
    std::thread thread_;
};

}  // namespace pulselabel::http
