#pragma once

#include <array>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ptpipe/cve.hpp"
#include "ptpipe/exploit_index.hpp"
#include "ptpipe/scanner.hpp"

namespace ptpipe {

enum class Stage { Scan, Enrich, Exploit, Narrate, Report };
enum class StageStatus { Pending, Done, Degraded };

inline constexpr std::array<Stage, 5> kPipelineStages = {
    Stage::Scan, Stage::Enrich, Stage::Exploit, Stage::Narrate, Stage::Report};

std::string to_string(Stage s);
std::string to_string(StageStatus s);
std::optional<Stage> stage_from_string(const std::string& s);
std::optional<StageStatus> stage_status_from_string(const std::string& s);

/// Cumulative pipeline state handed from stage to stage and persisted as
/// JSON after each one. Hosts carry the per-(host, port) CVE membership;
/// the vulnerabilities map carries one record per referenced CVE id.
struct AssessmentContext {
    static constexpr int kSchemaVersion = 1;

    std::string project_name;
    scanner::TargetSpec targets;
    std::vector<scanner::HostRecon> hosts;
    std::map<std::string, CveRecord> vulnerabilities;
    std::map<std::string, std::vector<exploiter::ExploitRef>> exploits;
    std::map<Stage, StageStatus> stage_status;

    /// Union of CVE ids across every host/port, sorted, duplicate-free.
    std::vector<std::string> distinct_cve_ids() const;

    bool operator==(const AssessmentContext&) const = default;
};

/// Seeds a context from scan output: every referenced CVE id gets an
/// unresolved placeholder record so the vulnerabilities-map invariant holds
/// from the first stage on.
AssessmentContext make_assessment(std::string project_name, scanner::TargetSpec targets,
                                  std::vector<scanner::HostRecon> hosts);

/// Throws CorruptArtifact when a structural invariant is violated.
void check_invariants(const AssessmentContext& ctx);

/// Canonical JSON: sorted keys, every field present (null when absent),
/// two-space indent, newline-terminated.
std::string to_canonical_json(const AssessmentContext& ctx);

/// Inverse of to_canonical_json. Throws SchemaMismatch on an unsupported
/// schema_version, CorruptArtifact on parse failures or invariant
/// violations.
AssessmentContext assessment_from_json(std::string_view json_text);

} // namespace ptpipe
