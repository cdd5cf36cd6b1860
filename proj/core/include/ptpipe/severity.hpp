#pragma once

#include <optional>
#include <string>

namespace ptpipe {

enum class Severity { None, Low, Medium, High, Critical };

/// Maps a CVSS base score onto its qualitative severity band.
/// Absent scores and 0.0 map to None. Throws OutOfRange outside [0, 10].
Severity severity_from_score(std::optional<double> score);

std::string to_string(Severity s);
std::optional<Severity> severity_from_string(const std::string& s);

/// Critical > High > Medium > Low > None.
int severity_rank(Severity s);

} // namespace ptpipe
