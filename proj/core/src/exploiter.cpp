#include "ptpipe/exploiter.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "process.hpp"
#include "ptpipe/errors.hpp"

namespace ptpipe::exploiter {

namespace fs = std::filesystem;

LocalMirrorFetcher::LocalMirrorFetcher(fs::path root) : root_(std::move(root)) {}

std::string LocalMirrorFetcher::fetch(const IndexEntry& entry) {
    fs::path file = root_ / entry.file_path;
    std::ifstream in(file, std::ios::binary);
    if (!in)
        throw FetchFailed("mirror has no file '" + entry.file_path + "' under " + root_.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

RemoteFetcher::RemoteFetcher(http::HttpClient* transport, std::string base_url)
    : transport_(transport), base_url_(std::move(base_url)) {
    while (!base_url_.empty() && base_url_.back() == '/')
        base_url_.pop_back();
}

std::string RemoteFetcher::fetch(const IndexEntry& entry) {
    if (!transport_)
        throw FetchFailed("no transport configured for remote exploit fetch");
    http::Request request;
    request.url = base_url_ + "/" + entry.file_path;
    try {
        http::Response response = transport_->send(request);
        if (response.status != 200)
            throw FetchFailed("fetch of " + request.url + " returned HTTP " +
                              std::to_string(response.status));
        return response.body;
    } catch (const http::TransportError& e) {
        throw FetchFailed(e.what());
    }
}

std::string exploit_relative_path(const IndexEntry& entry) {
    std::string basename = fs::path(entry.file_path).filename().string();
    if (basename.empty())
        basename = std::to_string(entry.exploit_id);
    return "exploits/" + std::to_string(entry.exploit_id) + "_" + basename;
}

ExploitRef fetch_exploit(const IndexEntry& entry, const fs::path& project_dir,
                         ExploitFetcher& fetcher) {
    ExploitRef ref;
    ref.entry = entry;

    std::string extension = fs::path(entry.file_path).extension().string();
    std::string source;
    try {
        source = fetcher.fetch(entry);
    } catch (const FetchFailed&) {
        ref.language = detect_language("", extension);
        return ref; // degraded, pipeline continues
    }

    std::string relative = exploit_relative_path(entry);
    fs::path target = project_dir / relative;
    std::error_code ec;
    fs::create_directories(target.parent_path(), ec);
    {
        std::ofstream out(target, std::ios::binary | std::ios::trunc);
        if (!out) {
            ref.language = detect_language(source, extension);
            return ref;
        }
        out << source;
    }

    ref.local_path = relative;
    ref.language = detect_language(source, extension);
    if (ref.language == Language::C || ref.language == Language::Cpp)
        ref.compile_spec = extract_compile_spec(source, target.filename().string());
    return ref;
}

ExploitStageOutcome run_exploit_stage(AssessmentContext& ctx, const ExploitIndex& index,
                                      const fs::path& project_dir, ExploitFetcher& fetcher) {
    ExploitStageOutcome outcome;
    for (const auto& id : ctx.distinct_cve_ids()) {
        std::vector<ExploitRef> refs;
        for (const auto& entry : search(index, id)) {
            ExploitRef ref = fetch_exploit(entry, project_dir, fetcher);
            if (ref.local_path)
                ++outcome.refs_fetched;
            else
                ++outcome.fetch_failures;
            refs.push_back(std::move(ref));
        }
        ctx.exploits[id] = std::move(refs);
    }
    return outcome;
}

namespace {

std::string first_line(const std::string& text, size_t max_len) {
    std::string line = text.substr(0, text.find('\n'));
    if (line.size() > max_len)
        line = line.substr(0, max_len - 3) + "...";
    return line;
}

std::string score_tag(const CveRecord& record) {
    std::string tag = to_string(record.severity);
    if (record.cvss_score) {
        std::ostringstream os;
        os << *record.cvss_score;
        tag += ", cvss " + os.str();
    }
    return tag;
}

} // namespace

std::string console_summary(const AssessmentContext& assessment) {
    std::ostringstream out;
    out << "=== assessment summary";
    if (!assessment.project_name.empty())
        out << ": " << assessment.project_name;
    out << " ===\n";

    if (assessment.hosts.empty()) {
        out << "(no hosts)\n";
        return out.str();
    }

    std::vector<const scanner::HostRecon*> hosts;
    for (const auto& h : assessment.hosts)
        hosts.push_back(&h);
    std::sort(hosts.begin(), hosts.end(), [](const auto* a, const auto* b) {
        return scanner::ipv4_less(a->address, b->address);
    });

    for (const auto* host : hosts) {
        out << "host " << host->address;
        if (host->os_guess)
            out << "  os: " << *host->os_guess;
        out << "\n";

        out << "  open ports:";
        if (host->ports.empty())
            out << " (none)";
        for (const auto& p : host->ports)
            out << " " << p.port << "/" << scanner::to_string(p.protocol);
        out << "\n";

        for (const auto& port : host->ports) {
            out << "  " << port.port << "/" << scanner::to_string(port.protocol);
            if (!port.service_name.empty())
                out << " " << port.service_name;
            if (!port.product.empty()) {
                out << " (" << port.product;
                if (!port.version.empty())
                    out << " " << port.version;
                out << ")";
            }
            out << "\n";

            // severity desc, then id asc
            std::vector<std::string> ids = port.cve_ids;
            std::sort(ids.begin(), ids.end(), [&](const std::string& a, const std::string& b) {
                auto ra = assessment.vulnerabilities.count(a)
                              ? severity_rank(assessment.vulnerabilities.at(a).severity)
                              : -1;
                auto rb = assessment.vulnerabilities.count(b)
                              ? severity_rank(assessment.vulnerabilities.at(b).severity)
                              : -1;
                if (ra != rb)
                    return ra > rb;
                return a < b;
            });

            for (const auto& id : ids) {
                auto it = assessment.vulnerabilities.find(id);
                out << "    " << id;
                if (it != assessment.vulnerabilities.end()) {
                    out << "  [" << score_tag(it->second) << "]";
                    if (!it->second.description.empty())
                        out << "  " << first_line(it->second.description, 96);
                }
                out << "\n";

                auto refs = assessment.exploits.find(id);
                if (refs == assessment.exploits.end())
                    continue;
                for (const auto& ref : refs->second) {
                    out << "      - " << ref.entry.exploit_id << "  " << ref.entry.title << " ("
                        << ref.entry.platform << ")";
                    if (ref.entry.verified)
                        out << " [verified]";
                    out << "  " << (ref.local_path ? *ref.local_path : "(not downloaded)");
                    out << "\n";
                }
            }
        }
    }
    return out.str();
}

int run_compile_command(const fs::path& exploit_path, std::string* transcript) {
    std::ifstream in(exploit_path, std::ios::binary);
    if (!in)
        throw FetchFailed("cannot read exploit source: " + exploit_path.string());
    std::stringstream ss;
    ss << in.rdbuf();

    auto spec = extract_compile_spec(ss.str(), exploit_path.filename().string());
    if (!spec) {
        if (transcript)
            *transcript = "no compile command found in comments of " + exploit_path.string();
        return -1;
    }

    auto result = proc::run_process({"/bin/sh", "-c", spec->command_line},
                                    exploit_path.parent_path().string());
    if (transcript) {
        *transcript = "$ " + spec->command_line + "\n" + result.out;
        if (!result.err.empty())
            *transcript += result.err;
    }
    return result.exit_code;
}

} // namespace ptpipe::exploiter
