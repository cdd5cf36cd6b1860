#include "ptpipe/nlp_agent.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <atomic>
#include <cctype>
#include <fstream>
#include <set>
#include <sstream>
#include <thread>

#include "ptpipe/errors.hpp"

namespace ptpipe::nlp {

using nlohmann::json;

void validate_params(const ProviderParams& params) {
    if (params.temperature < 0.0 || params.temperature > 2.0)
        throw ConfigError("nlp_temperature " + std::to_string(params.temperature) +
                          " outside [0.0, 2.0]");
    if (params.max_output_tokens <= 0)
        throw ConfigError("max_output_tokens must be positive");
    if (params.model_name.empty())
        throw ConfigError("nlp_model must not be empty");
}

namespace {

std::uint32_t fnv1a(std::string_view s) {
    std::uint32_t h = 2166136261u;
    for (unsigned char c : s) {
        h ^= c;
        h *= 16777619u;
    }
    return h;
}

std::string hex32(std::uint32_t v) {
    static const char* digits = "0123456789abcdef";
    std::string out(8, '0');
    for (int i = 7; i >= 0; --i) {
        out[static_cast<size_t>(i)] = digits[v & 0xF];
        v >>= 4;
    }
    return out;
}

} // namespace

std::string DeterministicStubProvider::complete(const std::string& context_message,
                                                const std::string& user_message,
                                                const ProviderParams& params) {
    std::uint32_t h = fnv1a(context_message) ^ (fnv1a(user_message) * 31u);
    return "[" + params.model_name + ":" + hex32(h) + "]\n" + user_message;
}

RemoteChatProvider::RemoteChatProvider(http::HttpClient* transport, std::string api_key,
                                       std::string base_url)
    : transport_(transport), api_key_(std::move(api_key)), base_url_(std::move(base_url)) {
    while (!base_url_.empty() && base_url_.back() == '/')
        base_url_.pop_back();
}

std::string RemoteChatProvider::complete(const std::string& context_message,
                                         const std::string& user_message,
                                         const ProviderParams& params) {
    if (!transport_)
        throw ProviderError("no transport configured for remote completion provider");

    json body{
        {"model", params.model_name},
        {"temperature", params.temperature},
        {"max_tokens", params.max_output_tokens},
        {"messages",
         json::array({json{{"role", "system"}, {"content", context_message}},
                      json{{"role", "user"}, {"content", user_message}}})},
    };

    http::Request request;
    request.method = "POST";
    request.url = base_url_ + "/chat/completions";
    request.body = body.dump();
    request.timeout = params.request_timeout;
    request.headers.emplace_back("Authorization", "Bearer " + api_key_);

    try {
        http::Response response = transport_->send(request);
        if (response.status != 200)
            throw ProviderError("completion endpoint returned HTTP " +
                                std::to_string(response.status));
        json doc = json::parse(response.body);
        return doc.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const http::TransportError& e) {
        throw ProviderError(e.what());
    } catch (const json::exception& e) {
        throw ProviderError(std::string("malformed completion response: ") + e.what());
    }
}

std::string to_string(Section s) {
    switch (s) {
    case Section::ExecutiveSummary: return "executive_summary";
    case Section::FindingRationale: return "finding_rationale";
    case Section::FindingRemediation: return "finding_remediation";
    }
    return "executive_summary";
}

namespace {

std::vector<std::string> extract_placeholders(const std::string& text) {
    std::vector<std::string> names;
    size_t i = 0;
    while ((i = text.find('{', i)) != std::string::npos) {
        size_t close = text.find('}', i + 1);
        if (close == std::string::npos)
            break;
        std::string name = text.substr(i + 1, close - i - 1);
        bool identifier = !name.empty() &&
                          std::all_of(name.begin(), name.end(), [](unsigned char c) {
                              return std::isalnum(c) || c == '_';
                          });
        if (identifier && std::find(names.begin(), names.end(), name) == names.end())
            names.push_back(name);
        i = close + 1;
    }
    return names;
}

} // namespace

std::string PromptTemplate::render(const std::map<std::string, std::string>& bindings) const {
    std::string out;
    out.reserve(context_text.size());
    size_t i = 0;
    while (i < context_text.size()) {
        if (context_text[i] == '{') {
            size_t close = context_text.find('}', i + 1);
            if (close != std::string::npos) {
                std::string name = context_text.substr(i + 1, close - i - 1);
                if (std::find(placeholder_names.begin(), placeholder_names.end(), name) !=
                    placeholder_names.end()) {
                    auto it = bindings.find(name);
                    if (it == bindings.end())
                        throw TemplateError("prompt placeholder '" + name + "' has no binding");
                    out += it->second;
                    i = close + 1;
                    continue;
                }
            }
        }
        out += context_text[i++];
    }
    return out;
}

PromptTemplate make_prompt_template(Section section, std::string context_text) {
    PromptTemplate t;
    t.section = section;
    t.placeholder_names = extract_placeholders(context_text);
    t.context_text = std::move(context_text);
    return t;
}

namespace {

constexpr const char* kExecutiveSummaryPrompt =
    "You are the lead consultant writing the executive summary of a security\n"
    "assessment report for the project \"{project}\". Your audience is\n"
    "non-technical leadership.\n"
    "\n"
    "Use only the facts in the assessment digest supplied as the user message.\n"
    "Do not invent, assume, or extrapolate vulnerabilities, hosts, or services\n"
    "that are not listed there, and never mention a CVE id that does not appear\n"
    "in the digest.\n"
    "\n"
    "Write: (1) a short overview of the hosts and ports involved in the\n"
    "assessment, (2) a plain-language overview of the vulnerabilities found and\n"
    "their business risk, and (3) a prioritised list of mitigations for the\n"
    "vulnerable hosts. Keep it under 400 words.\n";

constexpr const char* kFindingRationalePrompt =
    "You are a penetration tester documenting one finding of a security\n"
    "assessment. The user message contains the record of vulnerability {cve_id}\n"
    "and the public exploits available for it.\n"
    "\n"
    "Explain for a technical reader why this vulnerability carries the severity\n"
    "shown: what an attacker gains, the preconditions, and how the available\n"
    "exploits affect exploitability. Use only the supplied facts and never\n"
    "mention any CVE id other than {cve_id}. Two paragraphs at most.\n";

constexpr const char* kFindingRemediationPrompt =
    "You are a penetration tester writing remediation guidance for\n"
    "vulnerability {cve_id}. The user message contains its record.\n"
    "\n"
    "Respond with an ordered list of concrete remediation steps, one per line,\n"
    "each line starting with its number. Cover patching, configuration changes\n"
    "and compensating controls appropriate to the affected service. Use only\n"
    "the supplied facts and never mention any CVE id other than {cve_id}.\n";

} // namespace

PromptSet default_prompts() {
    return PromptSet{
        make_prompt_template(Section::ExecutiveSummary, kExecutiveSummaryPrompt),
        make_prompt_template(Section::FindingRationale, kFindingRationalePrompt),
        make_prompt_template(Section::FindingRemediation, kFindingRemediationPrompt),
    };
}

PromptSet load_prompts(const std::filesystem::path& dir) {
    PromptSet prompts = default_prompts();
    auto load = [&](Section section, PromptTemplate& slot) {
        std::ifstream in(dir / (to_string(section) + ".txt"), std::ios::binary);
        if (!in)
            return;
        std::stringstream ss;
        ss << in.rdbuf();
        slot = make_prompt_template(section, ss.str());
    };
    load(Section::ExecutiveSummary, prompts.executive_summary);
    load(Section::FindingRationale, prompts.finding_rationale);
    load(Section::FindingRemediation, prompts.finding_remediation);
    return prompts;
}

int estimate_tokens(std::string_view text) {
    return static_cast<int>((text.size() + 3) / 4);
}

namespace {

std::string first_sentence(const std::string& text, size_t cap) {
    std::string s = text.substr(0, text.find('\n'));
    if (auto dot = s.find(". "); dot != std::string::npos)
        s = s.substr(0, dot + 1);
    if (s.size() > cap)
        s = s.substr(0, cap - 3) + "...";
    return s;
}

struct DigestLevel {
    size_t desc_cap;        // 0 = drop descriptions entirely
    size_t titles_per_cve;  // 0 = drop exploit title lines
    size_t cves_per_port;   // 0 = unlimited
};

// reduction ladder: shrink descriptions, then drop exploit titles, then cap
// CVE lines per port (ids survive in the elision line)
constexpr DigestLevel kLevels[] = {
    {240, 3, 0},
    {120, 3, 0},
    {60, 0, 0},
    {0, 0, 0},
    {0, 0, 5},
};

std::string render_digest(const AssessmentContext& ctx, const DigestLevel& level) {
    std::ostringstream out;
    out << "hosts: " << ctx.hosts.size() << "\n";

    std::vector<const scanner::HostRecon*> hosts;
    for (const auto& h : ctx.hosts)
        hosts.push_back(&h);
    std::sort(hosts.begin(), hosts.end(), [](const auto* a, const auto* b) {
        return scanner::ipv4_less(a->address, b->address);
    });

    for (const auto* host : hosts) {
        out << "host " << host->address;
        if (host->os_guess)
            out << " os=" << *host->os_guess;
        out << "\n";
        for (const auto& port : host->ports) {
            out << "  port " << port.port << "/" << scanner::to_string(port.protocol);
            if (!port.service_name.empty())
                out << " service=" << port.service_name;
            if (!port.product.empty())
                out << " product=" << port.product;
            if (!port.version.empty())
                out << " version=" << port.version;
            out << "\n";

            size_t listed = 0;
            std::vector<std::string> overflow;
            for (const auto& id : port.cve_ids) {
                if (level.cves_per_port != 0 && listed >= level.cves_per_port) {
                    overflow.push_back(id);
                    continue;
                }
                ++listed;
                out << "    vuln " << id;
                auto it = ctx.vulnerabilities.find(id);
                if (it != ctx.vulnerabilities.end()) {
                    const CveRecord& rec = it->second;
                    out << " severity=" << to_string(rec.severity);
                    if (rec.cvss_score)
                        out << " cvss=" << *rec.cvss_score;
                    auto ex = ctx.exploits.find(id);
                    size_t n_exploits = ex == ctx.exploits.end() ? 0 : ex->second.size();
                    out << " exploits=" << n_exploits;
                    if (level.desc_cap > 0 && !rec.description.empty())
                        out << " :: " << first_sentence(rec.description, level.desc_cap);
                    out << "\n";
                    if (level.titles_per_cve > 0 && ex != ctx.exploits.end()) {
                        size_t shown = 0;
                        for (const auto& ref : ex->second) {
                            if (shown++ >= level.titles_per_cve)
                                break;
                            out << "      exploit: " << ref.entry.title << "\n";
                        }
                    }
                } else {
                    out << "\n";
                }
            }
            if (!overflow.empty()) {
                out << "    more-cves:";
                for (const auto& id : overflow)
                    out << " " << id;
                out << "\n";
            }
        }
    }
    return out.str();
}

} // namespace

std::string compact_context(const AssessmentContext& assessment, int token_budget) {
    if (token_budget <= 0)
        throw BudgetTooSmall("digest budget must be positive");

    std::string rendered;
    for (const auto& level : kLevels) {
        rendered = render_digest(assessment, level);
        if (estimate_tokens(rendered) <= token_budget)
            return rendered;
    }
    throw BudgetTooSmall("digest skeleton needs " + std::to_string(estimate_tokens(rendered)) +
                         " tokens, budget is " + std::to_string(token_budget));
}

namespace {

std::string complete_with_retries(CompletionProvider& provider, const std::string& context,
                                  const std::string& user, const ProviderParams& params) {
    for (int attempt = 1;; ++attempt) {
        try {
            return provider.complete(context, user, params);
        } catch (const ProviderError&) {
            if (attempt >= kMaxCompletionAttempts)
                throw;
        }
    }
}

std::string cve_digest(const AssessmentContext& ctx, const CveRecord& record) {
    std::ostringstream out;
    out << "cve: " << record.id << "\n";
    out << "severity: " << to_string(record.severity);
    if (record.cvss_score)
        out << " (cvss " << *record.cvss_score << ")";
    out << "\n";
    if (record.cvss_vector)
        out << "vector: " << *record.cvss_vector << "\n";
    if (!record.description.empty())
        out << "description: " << record.description << "\n";

    std::vector<std::string> affected;
    for (const auto& host : ctx.hosts)
        for (const auto& port : host.ports)
            for (const auto& id : port.cve_ids)
                if (id == record.id)
                    affected.push_back(host.address + ":" + std::to_string(port.port) + "/" +
                                       scanner::to_string(port.protocol));
    if (!affected.empty()) {
        out << "affected:";
        for (const auto& a : affected)
            out << " " << a;
        out << "\n";
    }

    auto ex = ctx.exploits.find(record.id);
    if (ex != ctx.exploits.end() && !ex->second.empty()) {
        out << "exploits:\n";
        for (const auto& ref : ex->second) {
            out << "  - " << ref.entry.title << " (" << ref.entry.platform
                << (ref.entry.verified ? ", verified" : "") << ")\n";
        }
    } else {
        out << "exploits: none known\n";
    }
    return out.str();
}

std::vector<std::string> parse_steps(const std::string& text) {
    std::vector<std::string> steps;
    std::stringstream ss(text);
    std::string line;
    while (std::getline(ss, line)) {
        // strip list markers: "1.", "2)", "-", "*"
        size_t i = 0;
        while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i])))
            ++i;
        size_t digits = i;
        while (digits < line.size() && std::isdigit(static_cast<unsigned char>(line[digits])))
            ++digits;
        if (digits > i && digits < line.size() && (line[digits] == '.' || line[digits] == ')'))
            i = digits + 1;
        else if (i < line.size() && (line[i] == '-' || line[i] == '*'))
            ++i;
        while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i])))
            ++i;
        std::string step = line.substr(i);
        while (!step.empty() && std::isspace(static_cast<unsigned char>(step.back())))
            step.pop_back();
        if (!step.empty())
            steps.push_back(std::move(step));
    }
    return steps;
}

} // namespace

std::string generate_executive_summary(const AssessmentContext& assessment,
                                       CompletionProvider& provider, const ProviderParams& params,
                                       const PromptSet& prompts) {
    validate_params(params);
    std::string digest = compact_context(assessment, kSummaryDigestBudget);
    std::string context =
        prompts.executive_summary.render({{"project", assessment.project_name}});
    return complete_with_retries(provider, context, digest, params);
}

std::vector<FindingNarrative> generate_findings(const AssessmentContext& assessment,
                                                CompletionProvider& provider,
                                                const ProviderParams& params,
                                                const PromptSet& prompts, int max_in_flight) {
    validate_params(params);

    // canonical output order: severity desc, then id asc
    std::vector<std::string> ids = assessment.distinct_cve_ids();
    std::sort(ids.begin(), ids.end(), [&](const std::string& a, const std::string& b) {
        int ra = severity_rank(assessment.vulnerabilities.at(a).severity);
        int rb = severity_rank(assessment.vulnerabilities.at(b).severity);
        if (ra != rb)
            return ra > rb;
        return a < b;
    });

    std::vector<FindingNarrative> out(ids.size());
    std::atomic<size_t> next{0};

    auto worker = [&] {
        for (size_t i = next.fetch_add(1); i < ids.size(); i = next.fetch_add(1)) {
            const std::string& id = ids[i];
            const CveRecord& record = assessment.vulnerabilities.at(id);
            std::string digest = cve_digest(assessment, record);

            FindingNarrative narrative;
            narrative.cve_id = id;
            narrative.provider_model = params.model_name;
            try {
                std::string rationale_ctx = prompts.finding_rationale.render({{"cve_id", id}});
                narrative.severity_rationale =
                    complete_with_retries(provider, rationale_ctx, digest, params);

                std::string remediation_ctx =
                    prompts.finding_remediation.render({{"cve_id", id}});
                std::string remediation =
                    complete_with_retries(provider, remediation_ctx, digest, params);
                narrative.remediation_steps = parse_steps(remediation);
                if (narrative.remediation_steps.empty())
                    narrative.remediation_steps = {"Pending analyst review."};
            } catch (const ProviderError&) {
                narrative.severity_rationale =
                    "Automatic analysis unavailable; pending analyst review.";
                narrative.remediation_steps = {"Pending analyst review."};
                narrative.flagged = true;
            }
            out[i] = std::move(narrative);
        }
    };

    int n_threads = std::max(1, std::min<int>(max_in_flight, static_cast<int>(ids.size())));
    if (n_threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<size_t>(n_threads));
        for (int t = 0; t < n_threads; ++t)
            pool.emplace_back(worker);
        for (auto& th : pool)
            th.join();
    }
    return out;
}

ValidationResult validate_narrative(const FindingNarrative& narrative,
                                    const AssessmentContext& assessment) {
    std::string text = narrative.severity_rationale;
    for (const auto& step : narrative.remediation_steps)
        text += "\n" + step;

    ValidationResult result;
    for (const auto& token : extract_cve_tokens(text)) {
        if (!assessment.vulnerabilities.count(token))
            result.unknown_ids.push_back(token);
    }
    result.valid = result.unknown_ids.empty();
    return result;
}

std::string narratives_to_json(const NarrativeSet& set) {
    json findings = json::array();
    for (const auto& n : set.findings) {
        findings.push_back(json{
            {"cve_id", n.cve_id},
            {"flagged", n.flagged},
            {"provider_model", n.provider_model},
            {"remediation_steps", n.remediation_steps},
            {"severity_rationale", n.severity_rationale},
        });
    }
    json doc{
        {"executive_summary", set.executive_summary},
        {"findings", std::move(findings)},
        {"schema_version", AssessmentContext::kSchemaVersion},
        {"summary_flagged", set.summary_flagged},
    };
    return doc.dump(2) + "\n";
}

NarrativeSet narratives_from_json(std::string_view json_text) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::exception& e) {
        throw CorruptArtifact(std::string("narratives artifact is not valid JSON: ") + e.what());
    }
    try {
        if (doc.at("schema_version").get<int>() != AssessmentContext::kSchemaVersion)
            throw SchemaMismatch("unsupported narratives schema_version " +
                                 doc.at("schema_version").dump());
        NarrativeSet set;
        set.executive_summary = doc.at("executive_summary").get<std::string>();
        set.summary_flagged = doc.at("summary_flagged").get<bool>();
        for (const auto& nj : doc.at("findings")) {
            FindingNarrative n;
            n.cve_id = nj.at("cve_id").get<std::string>();
            n.flagged = nj.at("flagged").get<bool>();
            n.provider_model = nj.at("provider_model").get<std::string>();
            n.remediation_steps = nj.at("remediation_steps").get<std::vector<std::string>>();
            n.severity_rationale = nj.at("severity_rationale").get<std::string>();
            set.findings.push_back(std::move(n));
        }
        return set;
    } catch (const SchemaMismatch&) {
        throw;
    } catch (const json::exception& e) {
        throw CorruptArtifact(std::string("narratives artifact field missing or mistyped: ") +
                              e.what());
    }
}

} // namespace ptpipe::nlp
