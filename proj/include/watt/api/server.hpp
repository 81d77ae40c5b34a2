#pragma once

#include "watt/api/service.hpp"

#include <memory>
#include <string>
#include <thread>

namespace watt::api {

// HTTP+JSON front end over a Service. Errors come back as
// {"error": kind, "message": text} with the status from status_for.
class HttpServer {
public:
    explicit HttpServer(Service& service);
    ~HttpServer();

    HttpServer(const HttpServer&) = delete;
    HttpServer& operator=(const HttpServer&) = delete;

    // Port 0 picks a free port. Returns the bound port. Throws Error when the
    // address cannot be bound.
    int bind(const std::string& host, int port);

    // Serves on the bound socket until stop(). Blocking.
    void listen();

    // listen() on a background thread; returns once the server accepts.
    void start();
    void stop();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
    std::thread thread_;
};

// HTTP status and error kind for an exception raised by the library.
struct ErrorStatus {
    int status = 500;
    std::string kind = "internal";
};

ErrorStatus status_for(const std::exception& e);

} // namespace watt::api
