#include "ptpipe/reporter.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <ctime>
#include <set>
#include <sstream>

#include "ptpipe/errors.hpp"

#ifndef PTPIPE_VERSION
#define PTPIPE_VERSION "0.0.0"
#endif

namespace ptpipe::reporter {

using nlohmann::json;

namespace {

std::string iso8601_utc(std::int64_t epoch_seconds) {
    std::time_t t = static_cast<std::time_t>(epoch_seconds);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::string first_sentence(const std::string& text) {
    std::string s = text.substr(0, text.find('\n'));
    if (auto dot = s.find(". "); dot != std::string::npos)
        s = s.substr(0, dot + 1);
    if (s.size() > 160)
        s = s.substr(0, 157) + "...";
    return s;
}

std::string join(const std::vector<std::string>& parts, const std::string& sep) {
    std::string out;
    for (const auto& p : parts) {
        if (!out.empty())
            out += sep;
        out += p;
    }
    return out;
}

std::string format_score(double score) {
    std::ostringstream os;
    os << score;
    return os.str();
}

} // namespace

ReportModel build_report_model(const AssessmentContext& assessment, const std::string& summary,
                               const std::vector<nlp::FindingNarrative>& narratives) {
    for (const auto& n : narratives)
        if (!assessment.vulnerabilities.count(n.cve_id))
            throw InconsistentInput("narrative for unknown CVE " + n.cve_id);

    ReportModel model;
    model.engagement.project_name = assessment.project_name;
    model.engagement.tool_version = PTPIPE_VERSION;
    std::int64_t latest = 0;
    for (const auto& h : assessment.hosts)
        latest = std::max(latest, h.scanned_at);
    model.engagement.generated_at = iso8601_utc(latest);
    model.executive_summary = summary;

    // overview: one row per host, sorted by address
    std::vector<const scanner::HostRecon*> hosts;
    for (const auto& h : assessment.hosts)
        hosts.push_back(&h);
    std::sort(hosts.begin(), hosts.end(), [](const auto* a, const auto* b) {
        return scanner::ipv4_less(a->address, b->address);
    });
    for (const auto* host : hosts) {
        OverviewRow row;
        row.address = host->address;
        std::set<std::string> ids;
        for (const auto& port : host->ports) {
            row.open_ports.push_back(std::to_string(port.port) + "/" +
                                     scanner::to_string(port.protocol));
            ids.insert(port.cve_ids.begin(), port.cve_ids.end());
        }
        row.cve_ids.assign(ids.begin(), ids.end());
        model.overview_rows.push_back(std::move(row));
    }

    // findings: one per distinct CVE
    for (const auto& id : assessment.distinct_cve_ids()) {
        const CveRecord& record = assessment.vulnerabilities.at(id);
        FindingEntry finding;
        finding.cve_id = id;
        finding.title = record.description.empty() ? id : first_sentence(record.description);
        finding.severity = record.severity;
        finding.cvss_score = record.cvss_score;

        for (const auto* host : hosts)
            for (const auto& port : host->ports)
                if (std::find(port.cve_ids.begin(), port.cve_ids.end(), id) !=
                    port.cve_ids.end())
                    finding.affected.push_back({host->address, port.port, port.protocol});

        if (auto refs = assessment.exploits.find(id); refs != assessment.exploits.end()) {
            for (const auto& ref : refs->second)
                finding.exploits.push_back(
                    {ref.entry.title, ref.entry.platform, ref.entry.verified, ref.local_path});
        }

        auto narrative = std::find_if(narratives.begin(), narratives.end(),
                                      [&](const auto& n) { return n.cve_id == id; });
        if (narrative != narratives.end()) {
            finding.severity_rationale = narrative->severity_rationale;
            finding.remediation_steps = narrative->remediation_steps;
            finding.pending_review = narrative->flagged;
        } else {
            finding.severity_rationale = "Pending analyst review.";
            finding.remediation_steps = {"Pending analyst review."};
            finding.pending_review = true;
        }
        model.findings.push_back(std::move(finding));
    }
    std::sort(model.findings.begin(), model.findings.end(),
              [](const FindingEntry& a, const FindingEntry& b) {
                  int ra = severity_rank(a.severity);
                  int rb = severity_rank(b.severity);
                  if (ra != rb)
                      return ra > rb;
                  return a.cve_id < b.cve_id;
              });

    std::set<std::string> paths;
    for (const auto& [id, refs] : assessment.exploits) {
        (void)id;
        for (const auto& ref : refs)
            if (ref.local_path)
                paths.insert(*ref.local_path);
    }
    model.exploit_paths.assign(paths.begin(), paths.end());
    return model;
}

// ---- template engine -------------------------------------------------------

namespace {

struct TemplateNode {
    enum class Kind { Text, Var, For } kind = Kind::Text;
    std::string text;                    // Text: literal; Var: path
    std::string loop_var;                // For
    std::string loop_path;               // For
    std::vector<TemplateNode> children;  // For body
};

struct TagToken {
    enum class Kind { Var, For, EndFor, Comment } kind;
    std::string a; // Var: path; For: var name
    std::string b; // For: path
    size_t begin = 0;
    size_t end = 0;
};

std::string trim_copy(const std::string& s) {
    size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos)
        return "";
    size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

// Block tags standing alone on a line swallow the surrounding indentation
// and newline so loops do not leave blank lines behind.
void widen_block_tag(const std::string& text, size_t& begin, size_t& end) {
    size_t line_start = begin;
    while (line_start > 0 && (text[line_start - 1] == ' ' || text[line_start - 1] == '\t'))
        --line_start;
    bool at_line_start = line_start == 0 || text[line_start - 1] == '\n';

    size_t line_end = end;
    while (line_end < text.size() && (text[line_end] == ' ' || text[line_end] == '\t'))
        ++line_end;
    bool at_line_end = line_end == text.size() || text[line_end] == '\n';

    if (at_line_start && at_line_end) {
        begin = line_start;
        end = line_end < text.size() ? line_end + 1 : line_end;
    }
}

std::vector<TagToken> scan_tags(const std::string& text) {
    std::vector<TagToken> tags;
    size_t i = 0;
    while (i + 1 < text.size()) {
        if (text[i] != '{' || (text[i + 1] != '{' && text[i + 1] != '%' && text[i + 1] != '#')) {
            ++i;
            continue;
        }
        bool is_var = text[i + 1] == '{';
        bool is_comment = text[i + 1] == '#';
        std::string close = is_var ? "}}" : (is_comment ? "#}" : "%}");
        size_t end = text.find(close, i + 2);
        if (end == std::string::npos)
            throw TemplateError("unterminated template tag at offset " + std::to_string(i));
        std::string inner = trim_copy(text.substr(i + 2, end - i - 2));
        TagToken token;
        token.begin = i;
        token.end = end + 2;
        if (is_comment) {
            token.kind = TagToken::Kind::Comment;
            widen_block_tag(text, token.begin, token.end);
        } else if (is_var) {
            token.kind = TagToken::Kind::Var;
            token.a = inner;
        } else if (inner == "endfor") {
            token.kind = TagToken::Kind::EndFor;
            widen_block_tag(text, token.begin, token.end);
        } else if (inner.rfind("for ", 0) == 0) {
            std::istringstream ss(inner);
            std::string kw, var, in_kw, path;
            ss >> kw >> var >> in_kw >> path;
            if (in_kw != "in" || var.empty() || path.empty())
                throw TemplateError("malformed for tag: '" + inner + "'");
            token.kind = TagToken::Kind::For;
            token.a = var;
            token.b = path;
            widen_block_tag(text, token.begin, token.end);
        } else {
            throw TemplateError("unknown template tag: '" + inner + "'");
        }
        tags.push_back(std::move(token));
        i = tags.back().end;
    }
    return tags;
}

std::vector<TemplateNode> parse_template(const std::string& text) {
    auto tags = scan_tags(text);
    std::vector<std::vector<TemplateNode>> stack;
    std::vector<TemplateNode> root;
    std::vector<TemplateNode>* current = &root;
    std::vector<TemplateNode*> open_loops;

    size_t cursor = 0;
    auto emit_text = [&](size_t until) {
        if (until > cursor) {
            TemplateNode node;
            node.kind = TemplateNode::Kind::Text;
            node.text = text.substr(cursor, until - cursor);
            current->push_back(std::move(node));
        }
    };

    for (const auto& tag : tags) {
        emit_text(tag.begin);
        cursor = tag.end;
        switch (tag.kind) {
        case TagToken::Kind::Comment:
            break; // stripped from the output
        case TagToken::Kind::Var: {
            TemplateNode node;
            node.kind = TemplateNode::Kind::Var;
            node.text = tag.a;
            current->push_back(std::move(node));
            break;
        }
        case TagToken::Kind::For: {
            TemplateNode node;
            node.kind = TemplateNode::Kind::For;
            node.loop_var = tag.a;
            node.loop_path = tag.b;
            current->push_back(std::move(node));
            open_loops.push_back(&current->back());
            current = &current->back().children;
            break;
        }
        case TagToken::Kind::EndFor: {
            if (open_loops.empty())
                throw TemplateError("endfor without open for loop");
            open_loops.pop_back();
            current = open_loops.empty() ? &root : &open_loops.back()->children;
            break;
        }
        }
    }
    if (!open_loops.empty())
        throw TemplateError("for loop over '" + open_loops.back()->loop_path +
                            "' is never closed");
    emit_text(text.size());
    return root;
}

struct Scope {
    std::string name;
    const json* value;
};

const json* navigate(const json& base, const std::vector<std::string>& segments, size_t from) {
    const json* node = &base;
    for (size_t i = from; i < segments.size(); ++i) {
        if (!node->is_object())
            return nullptr;
        auto it = node->find(segments[i]);
        if (it == node->end())
            return nullptr;
        node = &*it;
    }
    return node;
}

std::vector<std::string> split_path(const std::string& path) {
    std::vector<std::string> parts;
    std::stringstream ss(path);
    std::string part;
    while (std::getline(ss, part, '.'))
        parts.push_back(part);
    return parts;
}

const json* resolve(const std::string& path, const json& root, const std::vector<Scope>& scopes) {
    auto segments = split_path(path);
    if (segments.empty())
        return nullptr;
    for (auto it = scopes.rbegin(); it != scopes.rend(); ++it) {
        if (it->name == segments[0])
            return navigate(*it->value, segments, 1);
    }
    return navigate(root, segments, 0);
}

std::string value_to_string(const json& v, const std::string& path) {
    if (v.is_string())
        return v.get<std::string>();
    if (v.is_number_integer())
        return std::to_string(v.get<std::int64_t>());
    if (v.is_number_float()) {
        std::ostringstream os;
        os << v.get<double>();
        return os.str();
    }
    if (v.is_boolean())
        return v.get<bool>() ? "true" : "false";
    if (v.is_null())
        return "";
    throw TemplateError("placeholder '" + path + "' resolves to a non-scalar value");
}

void render_nodes(const std::vector<TemplateNode>& nodes, const json& root,
                  std::vector<Scope>& scopes, std::string& out) {
    for (const auto& node : nodes) {
        switch (node.kind) {
        case TemplateNode::Kind::Text:
            out += node.text;
            break;
        case TemplateNode::Kind::Var: {
            const json* v = resolve(node.text, root, scopes);
            if (!v)
                throw TemplateError("unresolved placeholder '" + node.text + "'");
            out += value_to_string(*v, node.text);
            break;
        }
        case TemplateNode::Kind::For: {
            const json* list = resolve(node.loop_path, root, scopes);
            if (!list)
                throw TemplateError("unresolved placeholder '" + node.loop_path + "'");
            if (!list->is_array())
                throw TemplateError("'" + node.loop_path + "' is not iterable");
            for (const auto& item : *list) {
                scopes.push_back({node.loop_var, &item});
                render_nodes(node.children, root, scopes, out);
                scopes.pop_back();
            }
            break;
        }
        }
    }
}

json model_to_json(const ReportModel& model) {
    json overview = json::array();
    for (const auto& row : model.overview_rows) {
        overview.push_back(json{
            {"address", row.address},
            {"open_ports", row.open_ports.empty() ? "none" : join(row.open_ports, ", ")},
            {"cve_ids", row.cve_ids.empty() ? "none" : join(row.cve_ids, ", ")},
        });
    }

    json findings = json::array();
    for (const auto& f : model.findings) {
        std::string severity_label = to_string(f.severity);
        if (f.cvss_score)
            severity_label += " (CVSS " + format_score(*f.cvss_score) + ")";
        if (f.pending_review)
            severity_label += " — pending analyst review";

        std::vector<std::string> affected;
        for (const auto& a : f.affected)
            affected.push_back(a.address + ":" + std::to_string(a.port) + "/" +
                               scanner::to_string(a.protocol));

        json exploits = json::array();
        for (const auto& e : f.exploits) {
            std::string line = e.title + " — " + e.platform;
            line += e.verified ? ", verified" : ", unverified";
            line += e.local_path ? (", saved to " + *e.local_path) : ", not downloaded";
            exploits.push_back(line);
        }
        if (exploits.empty())
            exploits.push_back("No public exploit found in the indexed snapshot.");

        findings.push_back(json{
            {"cve_id", f.cve_id},
            {"title", f.title},
            {"severity_label", severity_label},
            {"affected", join(affected, ", ")},
            {"severity_rationale", f.severity_rationale},
            {"exploits", std::move(exploits)},
            {"remediation_steps", f.remediation_steps},
        });
    }

    json paths = json::array();
    for (const auto& p : model.exploit_paths)
        paths.push_back("`" + p + "`");
    if (paths.empty())
        paths.push_back("No exploit material was downloaded.");

    return json{
        {"project_name", model.engagement.project_name},
        {"generated_at", model.engagement.generated_at},
        {"tool_version", model.engagement.tool_version},
        {"executive_summary", model.executive_summary},
        {"overview_rows", std::move(overview)},
        {"findings", std::move(findings)},
        {"exploit_paths", std::move(paths)},
    };
}

} // namespace

std::string render_report(const ReportModel& model, const std::string& template_text) {
    auto nodes = parse_template(template_text);
    json root = model_to_json(model);
    std::string out;
    out.reserve(template_text.size() * 2);
    std::vector<Scope> scopes;
    render_nodes(nodes, root, scopes, out);
    return out;
}

std::string default_report_template() {
    return R"({# Template grammar:
     {{path}}                      substitutes a model value; dotted paths walk
                                   nested fields, e.g. {{finding.cve_id}}.
     {% for item in path %} ...    repeats the enclosed block for every element
     {% endfor %}                  of the list at `path`; `item` becomes a name
                                   usable in nested substitution and loop tags.
   Blocks delimited like this whole one are comments, stripped from the output.
   Available model fields: project_name, generated_at, tool_version,
   executive_summary, overview_rows (address, open_ports, cve_ids),
   findings (cve_id, title, severity_label, affected, severity_rationale,
   exploits, remediation_steps), exploit_paths. #}
# Security Assessment Findings Report

- **Project:** {{project_name}}
- **Generated:** {{generated_at}}
- **Tooling:** ptpipe {{tool_version}}

> _[Analyst: add engagement scope, testing window, and rules of engagement.]_

## Executive Summary

{{executive_summary}}

## Methodology

The assessment followed a staged methodology: reconnaissance of the agreed
targets, vulnerability analysis of every discovered service against public
vulnerability data, identification of public exploit material for each
confirmed vulnerability, and consolidation of the results into this report.
Exploit execution is deliberately left to the assessment team; no exploit was
run by the tooling.

> _[Analyst: describe any manual testing performed beyond the automated
> pipeline.]_

## Assessment Overview

| Host | Open Ports | Vulnerabilities |
| --- | --- | --- |
{% for row in overview_rows %}
| {{row.address}} | {{row.open_ports}} | {{row.cve_ids}} |
{% endfor %}

## Findings

{% for finding in findings %}
### {{finding.cve_id}} — {{finding.title}}

- **Severity:** {{finding.severity_label}}
- **Affected:** {{finding.affected}}

{{finding.severity_rationale}}

**Available exploits:**

{% for exploit in finding.exploits %}
- {{exploit}}
{% endfor %}

**Remediation:**

{% for step in finding.remediation_steps %}
1. {{step}}
{% endfor %}

{% endfor %}
## Appendix A — Downloaded Exploit Material

{% for path in exploit_paths %}
- {{path}}
{% endfor %}

> _[Analyst: review all generated content before delivery.]_
)";
}

} // namespace ptpipe::reporter
