#include "ptpipe/assessment.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <set>

#include "ptpipe/errors.hpp"

namespace ptpipe {

using nlohmann::json;

std::string to_string(Stage s) {
    switch (s) {
    case Stage::Scan: return "scan";
    case Stage::Enrich: return "enrich";
    case Stage::Exploit: return "exploit";
    case Stage::Narrate: return "narrate";
    case Stage::Report: return "report";
    }
    return "scan";
}

std::string to_string(StageStatus s) {
    switch (s) {
    case StageStatus::Pending: return "pending";
    case StageStatus::Done: return "done";
    case StageStatus::Degraded: return "degraded";
    }
    return "pending";
}

std::optional<Stage> stage_from_string(const std::string& s) {
    for (Stage stage : kPipelineStages)
        if (to_string(stage) == s)
            return stage;
    return std::nullopt;
}

std::optional<StageStatus> stage_status_from_string(const std::string& s) {
    if (s == "pending") return StageStatus::Pending;
    if (s == "done") return StageStatus::Done;
    if (s == "degraded") return StageStatus::Degraded;
    return std::nullopt;
}

std::vector<std::string> AssessmentContext::distinct_cve_ids() const {
    std::set<std::string> ids;
    for (const auto& host : hosts)
        for (const auto& port : host.ports)
            ids.insert(port.cve_ids.begin(), port.cve_ids.end());
    return {ids.begin(), ids.end()};
}

AssessmentContext make_assessment(std::string project_name, scanner::TargetSpec targets,
                                  std::vector<scanner::HostRecon> hosts) {
    AssessmentContext ctx;
    ctx.project_name = std::move(project_name);
    ctx.targets = std::move(targets);
    ctx.hosts = std::move(hosts);
    for (const auto& id : ctx.distinct_cve_ids())
        ctx.vulnerabilities.emplace(id, unresolved_cve(id));
    for (Stage s : kPipelineStages)
        ctx.stage_status[s] = StageStatus::Pending;
    return ctx;
}

void check_invariants(const AssessmentContext& ctx) {
    for (const auto& host : ctx.hosts) {
        if (!scanner::is_ipv4_address(host.address))
            throw CorruptArtifact("host address '" + host.address + "' is not IPv4");
        for (size_t i = 0; i + 1 < host.ports.size(); ++i) {
            const auto& a = host.ports[i];
            const auto& b = host.ports[i + 1];
            if (std::tie(a.port, a.protocol) >= std::tie(b.port, b.protocol))
                throw CorruptArtifact("ports of host " + host.address +
                                      " are not strictly sorted by (port, protocol)");
        }
        for (const auto& port : host.ports) {
            for (const auto& id : port.cve_ids) {
                if (!is_cve_id(id))
                    throw CorruptArtifact("'" + id + "' is not a CVE id");
                if (!ctx.vulnerabilities.count(id))
                    throw CorruptArtifact(
                        "invariant violated: CVE " + id + " referenced by host " + host.address +
                        " is absent from the vulnerabilities map");
            }
        }
    }
    for (const auto& [id, record] : ctx.vulnerabilities) {
        if (id != record.id)
            throw CorruptArtifact("vulnerabilities key '" + id + "' does not match record id '" +
                                  record.id + "'");
        if (record.severity != severity_from_score(record.cvss_score))
            throw CorruptArtifact("severity of " + id + " inconsistent with its cvss score");
        if (record.source == CveSource::Unresolved &&
            (!record.description.empty() || record.cvss_score || record.severity != Severity::None))
            throw CorruptArtifact("unresolved record " + id + " carries resolved data");
    }
    for (const auto& [id, refs] : ctx.exploits) {
        (void)refs;
        if (!ctx.vulnerabilities.count(id))
            throw CorruptArtifact("invariant violated: exploits map key " + id +
                                  " is absent from the vulnerabilities map");
    }
}

namespace {

json opt_str(const std::optional<std::string>& v) {
    return v ? json(*v) : json(nullptr);
}

json opt_num(const std::optional<double>& v) {
    return v ? json(*v) : json(nullptr);
}

json port_to_json(const scanner::PortService& p) {
    return json{
        {"cve_ids", p.cve_ids},
        {"port", p.port},
        {"product", p.product},
        {"protocol", scanner::to_string(p.protocol)},
        {"service_name", p.service_name},
        {"state", scanner::to_string(p.state)},
        {"version", p.version},
    };
}

json host_to_json(const scanner::HostRecon& h) {
    json ports = json::array();
    for (const auto& p : h.ports)
        ports.push_back(port_to_json(p));
    return json{
        {"address", h.address},
        {"os_guess", opt_str(h.os_guess)},
        {"ports", std::move(ports)},
        {"scanned_at", h.scanned_at},
    };
}

json cve_to_json(const CveRecord& r) {
    return json{
        {"cvss_score", opt_num(r.cvss_score)},
        {"cvss_vector", opt_str(r.cvss_vector)},
        {"description", r.description},
        {"id", r.id},
        {"severity", to_string(r.severity)},
        {"source", to_string(r.source)},
    };
}

json entry_to_json(const exploiter::IndexEntry& e) {
    return json{
        {"author", e.author},
        {"codes", e.codes},
        {"date", e.date},
        {"exploit_id", e.exploit_id},
        {"file_path", e.file_path},
        {"platform", e.platform},
        {"title", e.title},
        {"type", e.type},
        {"verified", e.verified},
    };
}

json exploit_ref_to_json(const exploiter::ExploitRef& ref) {
    json compile = nullptr;
    if (ref.compile_spec)
        compile = json{{"command_line", ref.compile_spec->command_line},
                       {"source_of_truth", ref.compile_spec->source_of_truth}};
    return json{
        {"compile_spec", std::move(compile)},
        {"entry", entry_to_json(ref.entry)},
        {"language", exploiter::to_string(ref.language)},
        {"local_path", opt_str(ref.local_path)},
    };
}

const json& need(const json& obj, const char* key) {
    auto it = obj.find(key);
    if (it == obj.end())
        throw CorruptArtifact(std::string("missing field '") + key + "'");
    return *it;
}

std::optional<std::string> opt_str_from(const json& v) {
    if (v.is_null())
        return std::nullopt;
    return v.get<std::string>();
}

std::optional<double> opt_num_from(const json& v) {
    if (v.is_null())
        return std::nullopt;
    return v.get<double>();
}

scanner::PortService port_from_json(const json& j) {
    scanner::PortService p;
    p.port = static_cast<std::uint16_t>(need(j, "port").get<int>());
    auto proto = scanner::protocol_from_string(need(j, "protocol").get<std::string>());
    auto state = scanner::port_state_from_string(need(j, "state").get<std::string>());
    if (!proto || !state)
        throw CorruptArtifact("unknown protocol/state on port " + std::to_string(p.port));
    p.protocol = *proto;
    p.state = *state;
    p.service_name = need(j, "service_name").get<std::string>();
    p.product = need(j, "product").get<std::string>();
    p.version = need(j, "version").get<std::string>();
    p.cve_ids = need(j, "cve_ids").get<std::vector<std::string>>();
    return p;
}

scanner::HostRecon host_from_json(const json& j) {
    scanner::HostRecon h;
    h.address = need(j, "address").get<std::string>();
    h.os_guess = opt_str_from(need(j, "os_guess"));
    h.scanned_at = need(j, "scanned_at").get<std::int64_t>();
    for (const auto& pj : need(j, "ports"))
        h.ports.push_back(port_from_json(pj));
    return h;
}

CveRecord cve_from_json(const json& j) {
    CveRecord r;
    r.id = need(j, "id").get<std::string>();
    r.description = need(j, "description").get<std::string>();
    r.cvss_score = opt_num_from(need(j, "cvss_score"));
    r.cvss_vector = opt_str_from(need(j, "cvss_vector"));
    auto sev = severity_from_string(need(j, "severity").get<std::string>());
    auto src = cve_source_from_string(need(j, "source").get<std::string>());
    if (!sev || !src)
        throw CorruptArtifact("unknown severity/source on " + r.id);
    r.severity = *sev;
    r.source = *src;
    return r;
}

exploiter::IndexEntry entry_from_json(const json& j) {
    exploiter::IndexEntry e;
    e.exploit_id = need(j, "exploit_id").get<std::int64_t>();
    e.file_path = need(j, "file_path").get<std::string>();
    e.title = need(j, "title").get<std::string>();
    e.date = need(j, "date").get<std::string>();
    e.author = need(j, "author").get<std::string>();
    e.platform = need(j, "platform").get<std::string>();
    e.type = need(j, "type").get<std::string>();
    e.verified = need(j, "verified").get<bool>();
    e.codes = need(j, "codes").get<std::vector<std::string>>();
    return e;
}

exploiter::ExploitRef exploit_ref_from_json(const json& j) {
    exploiter::ExploitRef ref;
    ref.entry = entry_from_json(need(j, "entry"));
    ref.local_path = opt_str_from(need(j, "local_path"));
    auto lang = exploiter::language_from_string(need(j, "language").get<std::string>());
    if (!lang)
        throw CorruptArtifact("unknown language tag on exploit " +
                              std::to_string(ref.entry.exploit_id));
    ref.language = *lang;
    const json& compile = need(j, "compile_spec");
    if (!compile.is_null()) {
        exploiter::CompileSpec spec;
        spec.command_line = need(compile, "command_line").get<std::string>();
        spec.source_of_truth = need(compile, "source_of_truth").get<std::string>();
        ref.compile_spec = std::move(spec);
    }
    return ref;
}

} // namespace

std::string to_canonical_json(const AssessmentContext& ctx) {
    json hosts = json::array();
    for (const auto& h : ctx.hosts)
        hosts.push_back(host_to_json(h));

    json vulns = json::object();
    for (const auto& [id, record] : ctx.vulnerabilities)
        vulns[id] = cve_to_json(record);

    json exploits = json::object();
    for (const auto& [id, refs] : ctx.exploits) {
        json arr = json::array();
        for (const auto& ref : refs)
            arr.push_back(exploit_ref_to_json(ref));
        exploits[id] = std::move(arr);
    }

    json status = json::object();
    for (const auto& [stage, st] : ctx.stage_status)
        status[to_string(stage)] = to_string(st);

    json doc{
        {"exploits", std::move(exploits)},
        {"hosts", std::move(hosts)},
        {"project", ctx.project_name},
        {"schema_version", AssessmentContext::kSchemaVersion},
        {"stage_status", std::move(status)},
        {"targets",
         json{{"addresses", ctx.targets.addresses}, {"ports", ctx.targets.compressed_ports()}}},
        {"vulnerabilities", std::move(vulns)},
    };
    return doc.dump(2) + "\n";
}

AssessmentContext assessment_from_json(std::string_view json_text) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::exception& e) {
        throw CorruptArtifact(std::string("artifact is not valid JSON: ") + e.what());
    }

    try {
        const json& version = need(doc, "schema_version");
        if (!version.is_number_integer() ||
            version.get<int>() != AssessmentContext::kSchemaVersion)
            throw SchemaMismatch("unsupported schema_version " + version.dump() + ", expected " +
                                 std::to_string(AssessmentContext::kSchemaVersion));

        AssessmentContext ctx;
        ctx.project_name = need(doc, "project").get<std::string>();

        const json& targets = need(doc, "targets");
        std::string addresses;
        for (const auto& a : need(targets, "addresses")) {
            if (!addresses.empty())
                addresses += ',';
            addresses += a.get<std::string>();
        }
        ctx.targets = scanner::TargetSpec::parse(addresses, need(targets, "ports").get<std::string>());

        for (const auto& hj : need(doc, "hosts"))
            ctx.hosts.push_back(host_from_json(hj));

        for (const auto& [id, vj] : need(doc, "vulnerabilities").items())
            ctx.vulnerabilities.emplace(id, cve_from_json(vj));

        for (const auto& [id, arr] : need(doc, "exploits").items()) {
            std::vector<exploiter::ExploitRef> refs;
            for (const auto& rj : arr)
                refs.push_back(exploit_ref_from_json(rj));
            ctx.exploits.emplace(id, std::move(refs));
        }

        for (const auto& [name, st] : need(doc, "stage_status").items()) {
            auto stage = stage_from_string(name);
            auto status = stage_status_from_string(st.get<std::string>());
            if (!stage || !status)
                throw CorruptArtifact("unknown stage or status: " + name + "=" + st.dump());
            ctx.stage_status[*stage] = *status;
        }

        check_invariants(ctx);
        return ctx;
    } catch (const SchemaMismatch&) {
        throw;
    } catch (const CorruptArtifact&) {
        throw;
    } catch (const Error& e) {
        throw CorruptArtifact(std::string("artifact rejected: ") + e.what());
    } catch (const json::exception& e) {
        throw CorruptArtifact(std::string("artifact field has wrong type: ") + e.what());
    }
}

} // namespace ptpipe
