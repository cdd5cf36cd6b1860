#pragma once

#include <atomic>
#include <chrono>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "ptpipe/errors.hpp"

namespace ptpipe::http {

using Headers = std::vector<std::pair<std::string, std::string>>;

struct Request {
    std::string method = "GET"; // GET or POST
    std::string url;
    Headers headers;
    std::string body;
    std::string content_type = "application/json";
    std::chrono::milliseconds timeout = std::chrono::seconds(30);
};

struct Response {
    int status = 0;
    std::string body;
};

/// Raised when no HTTP response was obtained at all (connect/timeout).
struct TransportError : Error { using Error::Error; };

class HttpClient {
public:
    virtual ~HttpClient() = default;
    virtual Response send(const Request& request) = 0;
};

/// Real transport; supports http:// and https:// URLs.
std::unique_ptr<HttpClient> make_httplib_client();

/// Transport that refuses every request. Wired in offline mode so that any
/// accidental network call surfaces as a hard failure, and countable by the
/// offline-guarantee tests.
class DenyingHttpClient final : public HttpClient {
public:
    Response send(const Request& request) override;
    long attempts() const { return attempts_.load(); }

private:
    std::atomic<long> attempts_{0};
};

} // namespace ptpipe::http
