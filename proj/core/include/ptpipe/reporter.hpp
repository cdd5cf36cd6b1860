#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ptpipe/assessment.hpp"
#include "ptpipe/nlp_agent.hpp"

namespace ptpipe::reporter {

struct EngagementInfo {
    std::string project_name;
    std::string generated_at; // derived from scan timestamps, keeps output reproducible
    std::string tool_version;

    bool operator==(const EngagementInfo&) const = default;
};

struct OverviewRow {
    std::string address;
    std::vector<std::string> open_ports; // "445/tcp"
    std::vector<std::string> cve_ids;

    bool operator==(const OverviewRow&) const = default;
};

struct AffectedService {
    std::string address;
    std::uint16_t port = 0;
    scanner::Protocol protocol = scanner::Protocol::Tcp;

    bool operator==(const AffectedService&) const = default;
};

struct ExploitDisplay {
    std::string title;
    std::string platform;
    bool verified = false;
    std::optional<std::string> local_path;

    bool operator==(const ExploitDisplay&) const = default;
};

struct FindingEntry {
    std::string cve_id;
    std::string title; // first sentence of the description
    Severity severity = Severity::None;
    std::optional<double> cvss_score;
    std::string severity_rationale;
    std::vector<AffectedService> affected; // non-empty
    std::vector<ExploitDisplay> exploits;
    std::vector<std::string> remediation_steps;
    bool pending_review = false; // no narrative was available

    bool operator==(const FindingEntry&) const = default;
};

struct ReportModel {
    EngagementInfo engagement;
    std::string executive_summary;
    std::vector<OverviewRow> overview_rows;  // sorted by address
    std::vector<FindingEntry> findings;      // severity desc, cve_id asc
    std::vector<std::string> exploit_paths;  // appendix

    bool operator==(const ReportModel&) const = default;
};

/// Deterministic aggregation of assessment + narratives. CVEs without a
/// narrative get "pending analyst review" placeholders. Throws
/// InconsistentInput when a narrative names a CVE outside the assessment.
ReportModel build_report_model(const AssessmentContext& assessment, const std::string& summary,
                               const std::vector<nlp::FindingNarrative>& narratives);

/// Fills the template with the model. Tags: {{path}} substitution and
/// {% for var in path %} ... {% endfor %} iteration (the grammar is
/// documented in the template asset). Byte-deterministic; throws
/// TemplateError naming any unresolved placeholder.
std::string render_report(const ReportModel& model, const std::string& template_text);

/// The built-in Markdown template, identical to the shipped asset.
std::string default_report_template();

} // namespace ptpipe::reporter
