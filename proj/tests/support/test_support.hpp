#pragma once

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>

#include <unistd.h>

#include "ptpipe/assessment.hpp"
#include "ptpipe/enricher.hpp"
#include "ptpipe/exploiter.hpp"
#include "ptpipe/http.hpp"
#include "ptpipe/nlp_agent.hpp"
#include "ptpipe/scanner.hpp"

namespace testsupport {

inline std::filesystem::path fixtures_dir() {
    return std::filesystem::path(PTPIPE_FIXTURES_DIR);
}

inline std::filesystem::path assets_dir() {
    return std::filesystem::path(PTPIPE_ASSETS_DIR);
}

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw std::runtime_error("test fixture missing: " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline std::string read_fixture(const std::string& relative) {
    return read_file(fixtures_dir() / relative);
}

/// Scratch directory removed on destruction.
class TempDir {
public:
    TempDir() {
        std::string tmpl = (std::filesystem::temp_directory_path() / "ptpipe_test_XXXXXX").string();
        if (!mkdtemp(tmpl.data()))
            throw std::runtime_error("mkdtemp failed");
        path_ = tmpl;
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

/// Serves recorded NVD responses from fixtures/nvd/<id>.json; unknown ids get
/// an empty (zero-result) response body. Counts every request.
class FixtureNvdTransport final : public ptpipe::http::HttpClient {
public:
    ptpipe::http::Response send(const ptpipe::http::Request& request) override {
        requests.fetch_add(1);
        if (fail_remaining > 0) {
            --fail_remaining;
            throw ptpipe::http::TransportError("scripted transport failure");
        }
        auto pos = request.url.find("cveId=");
        if (pos == std::string::npos)
            return {404, "no cveId parameter"};
        std::string id = request.url.substr(pos + 6);
        auto file = fixtures_dir() / "nvd" / (id + ".json");
        if (!std::filesystem::exists(file))
            return {200, R"({"resultsPerPage":0,"startIndex":0,"totalResults":0,)"
                         R"("format":"NVD_CVE","version":"2.0","vulnerabilities":[]})"};
        return {200, read_file(file)};
    }

    std::atomic<long> requests{0};
    int fail_remaining = 0;
};

/// Records the last request and replays a scripted response.
class RecordingHttpClient final : public ptpipe::http::HttpClient {
public:
    ptpipe::http::Response send(const ptpipe::http::Request& request) override {
        last = request;
        requests.fetch_add(1);
        if (throw_transport_error)
            throw ptpipe::http::TransportError("scripted transport failure");
        return next_response;
    }

    ptpipe::http::Request last;
    ptpipe::http::Response next_response{200, ""};
    bool throw_transport_error = false;
    std::atomic<long> requests{0};
};

/// Wraps a provider, counting calls; can be scripted to fail first.
class CountingProvider final : public ptpipe::nlp::CompletionProvider {
public:
    explicit CountingProvider(ptpipe::nlp::CompletionProvider& inner) : inner_(inner) {}

    std::string complete(const std::string& context_message, const std::string& user_message,
                         const ptpipe::nlp::ProviderParams& params) override {
        calls.fetch_add(1);
        if (fail_remaining.load() > 0) {
            fail_remaining.fetch_sub(1);
            throw ptpipe::ProviderError("scripted provider failure");
        }
        return inner_.complete(context_message, user_message, params);
    }

    std::atomic<long> calls{0};
    std::atomic<int> fail_remaining{0};

private:
    ptpipe::nlp::CompletionProvider& inner_;
};

/// Small two-host assessment used across nlp/reporter tests.
inline ptpipe::AssessmentContext small_assessment() {
    using namespace ptpipe;
    scanner::PortService smb;
    smb.port = 445;
    smb.state = scanner::PortState::Open;
    smb.service_name = "microsoft-ds";
    smb.product = "Microsoft Windows Server 2008 R2 - 2012 microsoft-ds";
    smb.cve_ids = {"CVE-2017-0144"};

    scanner::PortService es;
    es.port = 9200;
    es.state = scanner::PortState::Open;
    es.service_name = "http";
    es.product = "Elasticsearch REST API";
    es.version = "1.1.1";
    es.cve_ids = {"CVE-2014-3120"};

    scanner::HostRecon host_a;
    host_a.address = "10.0.2.4";
    host_a.os_guess = "Microsoft Windows Server 2008 R2 SP1";
    host_a.ports = {smb, es};
    host_a.scanned_at = 1690400251;

    scanner::PortService ftp;
    ftp.port = 21;
    ftp.state = scanner::PortState::Open;
    ftp.service_name = "ftp";
    ftp.product = "vsftpd";
    ftp.version = "2.3.4";
    ftp.cve_ids = {"CVE-2011-2523"};

    scanner::HostRecon host_b;
    host_b.address = "10.0.2.5";
    host_b.os_guess = "Linux 2.6.9 - 2.6.33";
    host_b.ports = {ftp};
    host_b.scanned_at = 1690400360;

    auto ctx = make_assessment("unit", scanner::TargetSpec::parse("10.0.2.0/27", "1-10000"),
                               {host_a, host_b});

    auto resolve = [&](const std::string& id, double score, std::string vector,
                       std::string description) {
        CveRecord r;
        r.id = id;
        r.description = std::move(description);
        r.cvss_score = score;
        r.cvss_vector = std::move(vector);
        r.severity = severity_from_score(score);
        r.source = CveSource::Nvd;
        ctx.vulnerabilities[id] = std::move(r);
    };
    resolve("CVE-2017-0144", 8.1, "CVSS:3.1/AV:N/AC:H/PR:N/UI:N/S:U/C:H/I:H/A:H",
            "The SMBv1 server allows remote attackers to execute arbitrary code via crafted "
            "packets.");
    resolve("CVE-2014-3120", 6.8, "AV:N/AC:M/Au:N/C:P/I:P/A:P",
            "The default configuration in Elasticsearch before 1.2 enables dynamic scripting, "
            "which allows remote attackers to execute arbitrary code.");
    resolve("CVE-2011-2523", 9.8, "CVSS:3.1/AV:N/AC:L/PR:N/UI:N/S:U/C:H/I:H/A:H",
            "vsftpd 2.3.4 contains a backdoor which opens a shell on port 6200/tcp.");

    ptpipe::exploiter::IndexEntry msf;
    msf.exploit_id = 42030;
    msf.file_path = "exploits/windows/remote/42030.rb";
    msf.title = "EternalBlue SMB Remote Code Execution (Metasploit)";
    msf.date = "2017-05-17";
    msf.author = "Sean Dillon";
    msf.platform = "windows";
    msf.type = "remote";
    msf.verified = true;
    msf.codes = {"CVE-2017-0144", "MS17-010"};

    ptpipe::exploiter::ExploitRef ref;
    ref.entry = msf;
    ref.local_path = "exploits/42030_42030.rb";
    ref.language = ptpipe::exploiter::Language::Metasploit;
    ctx.exploits["CVE-2017-0144"] = {ref};
    ctx.exploits["CVE-2014-3120"] = {};
    ctx.exploits["CVE-2011-2523"] = {};
    return ctx;
}

/// Copies every recorded NVD response into a cache directory in the
/// enricher's envelope format, making offline cache-only runs fully resolved.
inline void seed_nvd_cache(const std::filesystem::path& cache_dir) {
    std::filesystem::create_directories(cache_dir);
    for (const auto& entry : std::filesystem::directory_iterator(fixtures_dir() / "nvd")) {
        std::string body = read_file(entry.path());
        std::ofstream out(cache_dir / entry.path().filename(), std::ios::binary);
        out << ptpipe::enricher::make_cache_envelope(body, "2023-07-30T10:00:00Z");
    }
}

/// Wraps a backend and counts invocations (resume-from oracles).
class CountingScanner final : public ptpipe::scanner::ScannerBackend {
public:
    explicit CountingScanner(ptpipe::scanner::ScannerBackend& inner) : inner_(inner) {}
    std::vector<ptpipe::scanner::HostRecon> run(const ptpipe::scanner::TargetSpec& t) override {
        calls.fetch_add(1);
        return inner_.run(t);
    }
    std::atomic<long> calls{0};

private:
    ptpipe::scanner::ScannerBackend& inner_;
};

class CountingFetcher final : public ptpipe::exploiter::ExploitFetcher {
public:
    explicit CountingFetcher(ptpipe::exploiter::ExploitFetcher& inner) : inner_(inner) {}
    std::string fetch(const ptpipe::exploiter::IndexEntry& entry) override {
        calls.fetch_add(1);
        return inner_.fetch(entry);
    }
    std::atomic<long> calls{0};

private:
    ptpipe::exploiter::ExploitFetcher& inner_;
};

/// Seeded generator of structurally valid assessments for property tests.
inline ptpipe::AssessmentContext random_assessment(std::mt19937& rng) {
    using namespace ptpipe;

    auto pick = [&rng](int lo, int hi) {
        return std::uniform_int_distribution<int>(lo, hi)(rng);
    };
    auto cve = [&] {
        char buf[24];
        std::snprintf(buf, sizeof buf, "CVE-%04d-%04d", pick(1999, 2024), pick(1, 99999));
        return std::string(buf);
    };

    AssessmentContext ctx;
    ctx.project_name = "gen" + std::to_string(pick(0, 9999));
    ctx.targets = scanner::TargetSpec::parse("10.0.0.0/24", "1-10000");

    int n_hosts = pick(0, 4);
    for (int h = 0; h < n_hosts; ++h) {
        scanner::HostRecon host;
        host.address = "10.0." + std::to_string(pick(0, 250)) + "." + std::to_string(h + 1);
        if (pick(0, 1))
            host.os_guess = "Linux " + std::to_string(pick(2, 5)) + ".x";
        host.scanned_at = 1600000000 + pick(0, 1000000);

        int n_ports = pick(0, 5);
        std::set<int> seen_ports;
        for (int p = 0; p < n_ports; ++p) {
            scanner::PortService port;
            int number = pick(1, 65535);
            if (!seen_ports.insert(number).second)
                continue;
            port.port = static_cast<std::uint16_t>(number);
            port.protocol = pick(0, 4) == 0 ? scanner::Protocol::Udp : scanner::Protocol::Tcp;
            port.state = pick(0, 3) == 0 ? scanner::PortState::Filtered : scanner::PortState::Open;
            port.service_name = pick(0, 1) ? "http" : "ssh";
            port.product = pick(0, 1) ? "Apache httpd" : "";
            port.version = pick(0, 1) ? std::to_string(pick(1, 9)) + "." + std::to_string(pick(0, 9)) : "";
            std::set<std::string> ids;
            int n_cves = pick(0, 3);
            for (int c = 0; c < n_cves; ++c)
                ids.insert(cve());
            port.cve_ids.assign(ids.begin(), ids.end());
            host.ports.push_back(std::move(port));
        }
        std::sort(host.ports.begin(), host.ports.end(),
                  [](const scanner::PortService& a, const scanner::PortService& b) {
                      return std::tie(a.port, a.protocol) < std::tie(b.port, b.protocol);
                  });
        ctx.hosts.push_back(std::move(host));
    }

    for (ptpipe::Stage s : kPipelineStages)
        ctx.stage_status[s] = static_cast<StageStatus>(pick(0, 2));

    // resolve a random subset, leave the rest unresolved
    std::set<std::string> all_ids;
    for (const auto& host : ctx.hosts)
        for (const auto& port : host.ports)
            all_ids.insert(port.cve_ids.begin(), port.cve_ids.end());
    for (const auto& id : all_ids) {
        CveRecord record = unresolved_cve(id);
        if (pick(0, 2)) {
            record.source = CveSource::Nvd;
            record.description = "Generated description for " + id + ". Second sentence.";
            double score = pick(0, 100) / 10.0;
            record.cvss_score = score;
            if (pick(0, 1))
                record.cvss_vector = "CVSS:3.1/AV:N/AC:L/PR:N/UI:N/S:U/C:H/I:H/A:H";
            record.severity = severity_from_score(score);
        }
        ctx.vulnerabilities.emplace(id, std::move(record));

        if (pick(0, 2) == 0) {
            exploiter::ExploitRef ref;
            ref.entry.exploit_id = pick(1, 99999);
            ref.entry.file_path = "exploits/gen/" + std::to_string(ref.entry.exploit_id) + ".py";
            ref.entry.title = "Generated exploit for " + id;
            ref.entry.date = "20" + std::to_string(pick(10, 23)) + "-01-01";
            ref.entry.author = "gen";
            ref.entry.platform = pick(0, 1) ? "linux" : "windows";
            ref.entry.type = "remote";
            ref.entry.verified = pick(0, 1) == 1;
            ref.entry.codes = {id};
            if (pick(0, 1))
                ref.local_path = "exploits/" + std::to_string(ref.entry.exploit_id) + "_x.py";
            ref.language = static_cast<exploiter::Language>(pick(0, 10));
            if (ref.language == exploiter::Language::C && pick(0, 1))
                ref.compile_spec = exploiter::CompileSpec{"gcc x.c -o x", "gcc x.c -o x"};
            ctx.exploits[id] = {std::move(ref)};
        }
    }
    return ctx;
}

} // namespace testsupport
