#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include "ptpipe/http.hpp"

namespace ptpipe::http {

namespace {

struct UrlParts {
    std::string origin; // scheme://host[:port]
    std::string path;   // /path?query
};

UrlParts split_url(const std::string& url) {
    auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos)
        throw TransportError("unsupported URL (missing scheme): " + url);
    auto path_start = url.find('/', scheme_end + 3);
    if (path_start == std::string::npos)
        return {url, "/"};
    return {url.substr(0, path_start), url.substr(path_start)};
}

class HttplibClient final : public HttpClient {
public:
    Response send(const Request& request) override {
        UrlParts parts = split_url(request.url);
        httplib::Client client(parts.origin);
        client.set_connection_timeout(std::chrono::duration_cast<std::chrono::seconds>(request.timeout));
        client.set_read_timeout(std::chrono::duration_cast<std::chrono::seconds>(request.timeout));
        client.set_follow_location(true);

        httplib::Headers headers;
        for (const auto& [k, v] : request.headers)
            headers.emplace(k, v);

        httplib::Result result = request.method == "POST"
            ? client.Post(parts.path, headers, request.body, request.content_type)
            : client.Get(parts.path, headers);

        if (!result)
            throw TransportError("request to " + request.url + " failed: " +
                                 httplib::to_string(result.error()));
        return {result->status, result->body};
    }
};

} // namespace

std::unique_ptr<HttpClient> make_httplib_client() {
    return std::make_unique<HttplibClient>();
}

Response DenyingHttpClient::send(const Request& request) {
    attempts_.fetch_add(1);
    throw TransportError("network disabled (offline mode), refused request to " + request.url);
}

} // namespace ptpipe::http
