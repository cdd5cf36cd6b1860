#include "ptpipe/enricher.hpp"

#include <nlohmann/json.hpp>

#include <ctime>
#include <fstream>
#include <sstream>
#include <thread>

#include "ptpipe/errors.hpp"

namespace ptpipe::enricher {

using nlohmann::json;

RateGate::RateGate(std::chrono::milliseconds spacing)
    : spacing_(spacing), next_slot_(std::chrono::steady_clock::now()) {}

void RateGate::wait_turn() {
    std::chrono::steady_clock::time_point my_slot;
    {
        std::lock_guard lock(mutex_);
        auto now = std::chrono::steady_clock::now();
        my_slot = std::max(now, next_slot_);
        next_slot_ = my_slot + spacing_;
    }
    std::this_thread::sleep_until(my_slot);
}

NvdClient::NvdClient(EnrichmentPolicy policy, http::HttpClient* transport, std::string api_key,
                     std::string base_url)
    : policy_(std::move(policy)),
      transport_(transport),
      api_key_(std::move(api_key)),
      base_url_(std::move(base_url)),
      gate_(policy_.request_delay) {}

std::filesystem::path NvdClient::cache_path(const std::string& id) const {
    return policy_.cache_dir / (id + ".json");
}

void NvdClient::ensure_cache_dir() {
    std::lock_guard lock(cache_mutex_);
    if (cache_dir_checked_ || policy_.cache_dir.empty())
        return;
    std::error_code ec;
    std::filesystem::create_directories(policy_.cache_dir, ec);
    if (ec)
        throw ConfigError("cache_dir '" + policy_.cache_dir.string() +
                          "' cannot be created: " + ec.message());
    auto probe = policy_.cache_dir / ".write_probe";
    {
        std::ofstream out(probe);
        if (!out)
            throw ConfigError("cache_dir '" + policy_.cache_dir.string() + "' is not writable");
    }
    std::filesystem::remove(probe, ec);
    cache_dir_checked_ = true;
}

namespace {

std::string utc_now_iso8601() {
    std::time_t now = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::optional<std::string> read_file(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in)
        return std::nullopt;
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// temp-file + rename keeps concurrent writers safe (identical content wins)
void write_file_atomic(const std::filesystem::path& p, const std::string& content) {
    auto tmp = p;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        out << content;
    }
    std::error_code ec;
    std::filesystem::rename(tmp, p, ec);
}

const json* find_metric(const json& metrics, const char* key) {
    auto it = metrics.find(key);
    if (it == metrics.end() || !it->is_array() || it->empty())
        return nullptr;
    return &(*it)[0];
}

} // namespace

CveRecord record_from_nvd_response(const std::string& id, const std::string& body) {
    json doc;
    try {
        doc = json::parse(body);
    } catch (const json::exception&) {
        return unresolved_cve(id);
    }

    auto vulns = doc.find("vulnerabilities");
    if (vulns == doc.end() || !vulns->is_array() || vulns->empty())
        return unresolved_cve(id);

    const json* cve = nullptr;
    for (const auto& item : *vulns) {
        auto c = item.find("cve");
        if (c != item.end() && c->value("id", "") == id) {
            cve = &*c;
            break;
        }
    }
    if (!cve)
        return unresolved_cve(id);

    CveRecord record;
    record.id = id;
    record.source = CveSource::Nvd;

    if (auto descs = cve->find("descriptions"); descs != cve->end() && descs->is_array()) {
        for (const auto& d : *descs) {
            if (d.value("lang", "") == "en") {
                record.description = d.value("value", "");
                break;
            }
        }
        if (record.description.empty() && !descs->empty())
            record.description = (*descs)[0].value("value", "");
    }

    // newest CVSS version available wins
    if (auto metrics = cve->find("metrics"); metrics != cve->end() && metrics->is_object()) {
        static constexpr const char* kPreference[] = {"cvssMetricV40", "cvssMetricV31",
                                                      "cvssMetricV30", "cvssMetricV2"};
        for (const char* key : kPreference) {
            if (const json* m = find_metric(*metrics, key)) {
                auto data = m->find("cvssData");
                if (data != m->end() && data->contains("baseScore")) {
                    record.cvss_score = (*data)["baseScore"].get<double>();
                    if (data->contains("vectorString"))
                        record.cvss_vector = (*data)["vectorString"].get<std::string>();
                    break;
                }
            }
        }
    }

    record.severity = severity_from_score(record.cvss_score);
    return record;
}

std::string make_cache_envelope(const std::string& body, const std::string& fetched_at) {
    json envelope{
        {"api_version", NvdClient::kApiVersion},
        {"fetched_at", fetched_at},
        {"response", body}, // verbatim response bytes
    };
    return envelope.dump(2) + "\n";
}

CveRecord NvdClient::fetch_from_api(const std::string& id) {
    if (!transport_)
        return unresolved_cve(id);

    http::Request request;
    request.url = base_url_ + "/rest/json/cves/2.0?cveId=" + id;
    request.headers.emplace_back("User-Agent", "ptpipe");
    if (!api_key_.empty())
        request.headers.emplace_back("apiKey", api_key_);

    auto backoff = policy_.request_delay;
    for (int attempt = 0; attempt <= policy_.max_retries; ++attempt) {
        if (attempt > 0) {
            std::this_thread::sleep_for(backoff);
            backoff *= 2;
        }
        gate_.wait_turn();
        requests_.fetch_add(1);
        try {
            http::Response response = transport_->send(request);
            if (response.status == 200) {
                CveRecord record = record_from_nvd_response(id, response.body);
                if (record.source == CveSource::Nvd && !policy_.cache_dir.empty()) {
                    std::lock_guard lock(cache_mutex_);
                    write_file_atomic(cache_path(id),
                                      make_cache_envelope(response.body, utc_now_iso8601()));
                }
                return record;
            }
            if (response.status == 404)
                return unresolved_cve(id); // definite miss, no point retrying
            // 403/429/5xx: fall through to retry
        } catch (const http::TransportError&) {
            // retry
        }
    }
    return unresolved_cve(id);
}

CveRecord NvdClient::fetch_cve(const std::string& id) {
    if (!is_cve_id(id))
        throw InvalidCveId("'" + id + "' does not match the CVE id pattern");

    if (!policy_.cache_dir.empty()) {
        ensure_cache_dir();
        if (auto cached = read_file(cache_path(id))) {
            try {
                json envelope = json::parse(*cached);
                CveRecord record =
                    record_from_nvd_response(id, envelope.at("response").get<std::string>());
                if (record.source == CveSource::Nvd) {
                    record.source = CveSource::Cache;
                    return record;
                }
            } catch (const json::exception&) {
                // unreadable cache entry: treat as a miss and refetch
            }
        }
    }

    if (policy_.offline_only)
        return unresolved_cve(id);
    return fetch_from_api(id);
}

void resolve_vulnerabilities(AssessmentContext& ctx, NvdClient& client) {
    for (const auto& id : ctx.distinct_cve_ids()) {
        CveRecord record = client.fetch_cve(id);
        ctx.vulnerabilities[id] = std::move(record);
    }
}

AssessmentContext enrich(std::vector<scanner::HostRecon> hosts, NvdClient& client) {
    AssessmentContext ctx = make_assessment("", {}, std::move(hosts));
    resolve_vulnerabilities(ctx, client);
    return ctx;
}

} // namespace ptpipe::enricher
