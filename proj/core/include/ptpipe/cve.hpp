#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ptpipe/severity.hpp"

namespace ptpipe {

/// True for an uppercase-normalized id of the form CVE-YYYY-NNNN (4+ digits).
bool is_cve_id(std::string_view token);

/// Uppercases "cve-..." style tokens; returns the input otherwise unchanged.
std::string normalize_cve_id(std::string token);

/// Every CVE-pattern token occurring in free text, uppercased, in order of
/// first appearance, duplicate-free.
std::vector<std::string> extract_cve_tokens(std::string_view text);

enum class CveSource { Nvd, Cache, Unresolved };

std::string to_string(CveSource s);
std::optional<CveSource> cve_source_from_string(const std::string& s);

struct CveRecord {
    std::string id;
    std::string description;
    std::optional<double> cvss_score;
    std::optional<std::string> cvss_vector;
    Severity severity = Severity::None;
    CveSource source = CveSource::Unresolved;

    bool operator==(const CveRecord&) const = default;
};

/// Unresolved placeholder record for an id the database could not answer.
CveRecord unresolved_cve(std::string id);

} // namespace ptpipe
