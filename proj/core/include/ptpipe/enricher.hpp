#pragma once

#include <chrono>
#include <filesystem>
#include <mutex>
#include <string>

#include "ptpipe/assessment.hpp"
#include "ptpipe/cve.hpp"
#include "ptpipe/http.hpp"

namespace ptpipe::enricher {

/// NVD guidance for keyed access: stay under 50 requests per 30 s. The
/// default spacing honors that; going lower needs an explicit override at
/// the configuration layer.
inline constexpr std::chrono::milliseconds kKeyedApiMinimumDelay{600};

struct EnrichmentPolicy {
    std::chrono::milliseconds request_delay = kKeyedApiMinimumDelay;
    int max_retries = 2;
    std::filesystem::path cache_dir;
    bool offline_only = false; // never issue network requests
};

/// Shared pacing gate: grants one slot per request_delay across all callers.
class RateGate {
public:
    explicit RateGate(std::chrono::milliseconds spacing);
    void wait_turn();

private:
    std::mutex mutex_;
    std::chrono::milliseconds spacing_;
    std::chrono::steady_clock::time_point next_slot_;
};

/// CVE-by-id lookups against the NVD REST API with a persistent one-file-per-
/// id cache. A null transport behaves like a permanently unreachable API.
class NvdClient {
public:
    static constexpr const char* kDefaultBaseUrl = "https://services.nvd.nist.gov";
    static constexpr const char* kApiVersion = "2.0";

    NvdClient(EnrichmentPolicy policy, http::HttpClient* transport, std::string api_key = "",
              std::string base_url = kDefaultBaseUrl);

    /// Cache hit -> source=cache. Miss -> API query, stored, source=nvd.
    /// API miss or permanent failure -> source=unresolved, never a throw for
    /// a well-formed id. Throws InvalidCveId / ConfigError.
    CveRecord fetch_cve(const std::string& id);

    const EnrichmentPolicy& policy() const { return policy_; }
    long network_requests() const { return requests_.load(); }

private:
    CveRecord fetch_from_api(const std::string& id);
    std::filesystem::path cache_path(const std::string& id) const;
    void ensure_cache_dir();

    EnrichmentPolicy policy_;
    http::HttpClient* transport_;
    std::string api_key_;
    std::string base_url_;
    RateGate gate_;
    std::atomic<long> requests_{0};
    bool cache_dir_checked_ = false;
    std::mutex cache_mutex_;
};

/// Parses a raw NVD API response body into a record for `id`. Exposed for
/// cache tooling; returns an unresolved record when the body has no match.
CveRecord record_from_nvd_response(const std::string& id, const std::string& body);

/// Builds the cache-file envelope around a verbatim API response body.
std::string make_cache_envelope(const std::string& body, const std::string& fetched_at);

/// Resolves every distinct CVE id in the context exactly once (ids are
/// deduplicated before fetching); unresolved records are kept, not dropped.
void resolve_vulnerabilities(AssessmentContext& ctx, NvdClient& client);

/// Spec-shaped convenience: wraps hosts into a fresh context and resolves it.
AssessmentContext enrich(std::vector<scanner::HostRecon> hosts, NvdClient& client);

} // namespace ptpipe::enricher
