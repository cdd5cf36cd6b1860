#include <doctest.h>

#include <chrono>
#include <thread>

#include "ptpipe/enricher.hpp"
#include "ptpipe/errors.hpp"
#include "test_support.hpp"

using namespace ptpipe;
using namespace ptpipe::enricher;
using testsupport::FixtureNvdTransport;
using testsupport::TempDir;

namespace {

EnrichmentPolicy fast_policy(const TempDir& dir) {
    EnrichmentPolicy policy;
    policy.request_delay = std::chrono::milliseconds(0);
    policy.max_retries = 2;
    policy.cache_dir = dir.path() / "cache";
    return policy;
}

scanner::HostRecon host_with_cves(const std::string& address,
                                  const std::vector<std::string>& ids) {
    scanner::PortService port;
    port.port = 445;
    port.cve_ids = ids;
    scanner::HostRecon host;
    host.address = address;
    host.ports = {port};
    return host;
}

} // namespace

TEST_CASE("fetch_cve: recorded fixture resolves SMBv1 RCE with high-or-critical severity") {
    TempDir tmp;
    FixtureNvdTransport transport;
    NvdClient client(fast_policy(tmp), &transport);

    CveRecord record = client.fetch_cve("CVE-2017-0144");
    CHECK(record.source == CveSource::Nvd);
    CHECK(record.description.find("SMBv1") != std::string::npos);
    REQUIRE(record.cvss_score.has_value());
    CHECK((record.severity == Severity::High || record.severity == Severity::Critical));
    CHECK(record.cvss_vector.value_or("").find("CVSS:3.1") == 0); // v3.x preferred over v2
}

TEST_CASE("fetch_cve: v2-only record falls back to the v2 score") {
    TempDir tmp;
    FixtureNvdTransport transport;
    NvdClient client(fast_policy(tmp), &transport);

    CveRecord record = client.fetch_cve("CVE-2014-3120");
    CHECK(record.source == CveSource::Nvd);
    CHECK(record.cvss_score == 6.8);
    CHECK(record.severity == Severity::Medium);
    CHECK(record.cvss_vector == "AV:N/AC:M/Au:N/C:P/I:P/A:P");
}

TEST_CASE("fetch_cve: offline with empty cache degrades to unresolved") {
    TempDir tmp;
    auto policy = fast_policy(tmp);
    policy.offline_only = true;
    FixtureNvdTransport transport;
    NvdClient client(policy, &transport);

    CveRecord record = client.fetch_cve("CVE-0000-0000");
    CHECK(record.source == CveSource::Unresolved);
    CHECK(record.description.empty());
    CHECK(!record.cvss_score.has_value());
    CHECK(record.severity == Severity::None);
    CHECK(transport.requests.load() == 0); // offline_only never touches the network
}

TEST_CASE("fetch_cve: second call is served from cache with zero network requests") {
    TempDir tmp;
    FixtureNvdTransport transport;
    NvdClient client(fast_policy(tmp), &transport);

    CveRecord first = client.fetch_cve("CVE-2017-0144");
    CHECK(transport.requests.load() == 1);
    CveRecord second = client.fetch_cve("CVE-2017-0144");
    CHECK(transport.requests.load() == 1);
    CHECK(second.source == CveSource::Cache);

    // cache round-trip: field-equal modulo source
    second.source = first.source;
    CHECK(first == second);
}

TEST_CASE("fetch_cve: malformed id throws InvalidCveId") {
    TempDir tmp;
    NvdClient client(fast_policy(tmp), nullptr);
    CHECK_THROWS_AS(client.fetch_cve("EDB-ID:42315"), InvalidCveId);
    CHECK_THROWS_AS(client.fetch_cve("cve-2017-0144"), InvalidCveId);
}

TEST_CASE("fetch_cve: unwritable cache dir raises ConfigError") {
    EnrichmentPolicy policy;
    policy.cache_dir = "/proc/definitely/not/writable";
    policy.request_delay = std::chrono::milliseconds(0);
    NvdClient client(policy, nullptr);
    CHECK_THROWS_AS(client.fetch_cve("CVE-2017-0144"), ConfigError);
}

TEST_CASE("fetch_cve: api miss yields unresolved, not an exception") {
    TempDir tmp;
    FixtureNvdTransport transport;
    NvdClient client(fast_policy(tmp), &transport);
    CveRecord record = client.fetch_cve("CVE-1999-9999");
    CHECK(record.source == CveSource::Unresolved);
}

TEST_CASE("fetch_cve: transient failures retry then succeed") {
    TempDir tmp;
    FixtureNvdTransport transport;
    transport.fail_remaining = 2;
    auto policy = fast_policy(tmp);
    policy.max_retries = 2;
    NvdClient client(policy, &transport);

    CveRecord record = client.fetch_cve("CVE-2017-0144");
    CHECK(record.source == CveSource::Nvd);
    CHECK(transport.requests.load() == 3);
}

TEST_CASE("fetch_cve: permanent failure degrades to unresolved after max retries") {
    TempDir tmp;
    FixtureNvdTransport transport;
    transport.fail_remaining = 100;
    auto policy = fast_policy(tmp);
    policy.max_retries = 1;
    NvdClient client(policy, &transport);

    CveRecord record = client.fetch_cve("CVE-2017-0144");
    CHECK(record.source == CveSource::Unresolved);
    CHECK(transport.requests.load() == 2); // 1 + max_retries
}

TEST_CASE("enrich: shared CVE across hosts is fetched exactly once") {
    TempDir tmp;
    FixtureNvdTransport transport;
    NvdClient client(fast_policy(tmp), &transport);

    std::vector<scanner::HostRecon> hosts = {
        host_with_cves("10.0.0.1", {"CVE-2014-3120"}),
        host_with_cves("10.0.0.2", {"CVE-2014-3120"}),
        host_with_cves("10.0.0.3", {"CVE-2014-3120"}),
    };
    auto ctx = enrich(hosts, client);
    CHECK(transport.requests.load() == 1);
    CHECK(ctx.vulnerabilities.at("CVE-2014-3120").source == CveSource::Nvd);
}

TEST_CASE("enrich: host without CVEs triggers no fetches") {
    TempDir tmp;
    FixtureNvdTransport transport;
    NvdClient client(fast_policy(tmp), &transport);

    auto ctx = enrich({host_with_cves("10.0.0.1", {})}, client);
    CHECK(transport.requests.load() == 0);
    CHECK(ctx.vulnerabilities.empty());
    REQUIRE(ctx.hosts.size() == 1);
}

TEST_CASE("enrich: unresolved records are retained, not dropped") {
    TempDir tmp;
    FixtureNvdTransport transport;
    NvdClient client(fast_policy(tmp), &transport);

    auto ctx = enrich({host_with_cves("10.0.0.1", {"CVE-1999-9999", "CVE-2014-3120"})}, client);
    REQUIRE(ctx.vulnerabilities.size() == 2);
    CHECK(ctx.vulnerabilities.at("CVE-1999-9999").source == CveSource::Unresolved);
    CHECK(ctx.vulnerabilities.at("CVE-2014-3120").source == CveSource::Nvd);
}

TEST_CASE("enrich: request pacing honors the delay across 25 cold fetches") {
    TempDir tmp;
    FixtureNvdTransport transport;
    EnrichmentPolicy policy;
    policy.request_delay = std::chrono::milliseconds(100);
    policy.cache_dir = tmp.path() / "cache";

    // 25 distinct ids; only some exist as fixtures, misses still hit the API
    std::vector<std::string> ids;
    for (int i = 1; i <= 25; ++i) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "CVE-2024-%04d", i);
        ids.emplace_back(buf);
    }
    NvdClient client(policy, &transport);

    auto started = std::chrono::steady_clock::now();
    auto ctx = enrich({host_with_cves("10.0.0.1", ids)}, client);
    auto elapsed = std::chrono::steady_clock::now() - started;

    CHECK(transport.requests.load() == 25);
    CHECK(std::chrono::duration<double>(elapsed).count() >= 2.4);
    CHECK(ctx.vulnerabilities.size() == 25);
}

TEST_CASE("enrich: idempotent on a warm cache") {
    TempDir tmp;
    FixtureNvdTransport transport;
    auto policy = fast_policy(tmp);

    std::vector<scanner::HostRecon> hosts = {
        host_with_cves("10.0.0.1", {"CVE-2017-0144", "CVE-2014-3120"})};

    NvdClient cold(policy, &transport);
    auto first = enrich(hosts, cold);
    long cold_requests = transport.requests.load();
    CHECK(cold_requests == 2);

    NvdClient warm(policy, &transport);
    auto second = enrich(hosts, warm);
    CHECK(transport.requests.load() == cold_requests); // zero new network requests

    // equal AssessmentContext modulo cache provenance
    for (auto& [id, record] : second.vulnerabilities)
        if (record.source == CveSource::Cache)
            record.source = CveSource::Nvd;
    CHECK(first == second);
}

TEST_CASE("dedup property: fetches equal distinct uncached ids") {
    TempDir tmp;
    FixtureNvdTransport transport;
    auto policy = fast_policy(tmp);

    NvdClient client(policy, &transport);
    // warm one id
    client.fetch_cve("CVE-2017-0144");
    long base = transport.requests.load();

    std::vector<scanner::HostRecon> hosts = {
        host_with_cves("10.0.0.1", {"CVE-2017-0144", "CVE-2014-3120", "CVE-2011-2523"}),
        host_with_cves("10.0.0.2", {"CVE-2014-3120", "CVE-2011-2523"}),
    };
    enrich(hosts, client);
    CHECK(transport.requests.load() - base == 2); // only the two uncached ids
}

TEST_CASE("fetch_cve: safe for concurrent callers sharing the cache and gate") {
    TempDir tmp;
    FixtureNvdTransport transport;
    EnrichmentPolicy policy;
    policy.request_delay = std::chrono::milliseconds(5);
    policy.cache_dir = tmp.path() / "cache";
    NvdClient client(policy, &transport);

    const std::vector<std::string> ids = {"CVE-2017-0144", "CVE-2014-3120", "CVE-2011-2523",
                                          "CVE-2007-2447"};
    std::vector<std::thread> threads;
    std::atomic<int> failures{0};
    for (int t = 0; t < 4; ++t) {
        threads.emplace_back([&, t] {
            for (int round = 0; round < 3; ++round) {
                CveRecord record = client.fetch_cve(ids[(t + round) % ids.size()]);
                if (record.source == CveSource::Unresolved)
                    failures.fetch_add(1);
            }
        });
    }
    for (auto& th : threads)
        th.join();

    CHECK(failures.load() == 0);
    // every id resolved over the network at most... duplicates may race the
    // cache before the first write lands, but the rate gate keeps total
    // request pacing, and re-fetches converge on identical cache content
    CHECK(transport.requests.load() >= 4);
    for (const auto& id : ids) {
        CveRecord record = client.fetch_cve(id);
        CHECK(record.source == CveSource::Cache);
    }
}

TEST_CASE("cache files carry the envelope with verbatim response") {
    TempDir tmp;
    FixtureNvdTransport transport;
    NvdClient client(fast_policy(tmp), &transport);
    client.fetch_cve("CVE-2017-0144");

    auto cache_file = tmp.path() / "cache" / "CVE-2017-0144.json";
    REQUIRE(std::filesystem::exists(cache_file));
    std::string envelope = testsupport::read_file(cache_file);
    CHECK(envelope.find("\"api_version\"") != std::string::npos);
    CHECK(envelope.find("\"fetched_at\"") != std::string::npos);
    CHECK(envelope.find("\"response\"") != std::string::npos);
}
