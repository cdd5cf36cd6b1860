#include "ptpipe/severity.hpp"

#include "ptpipe/errors.hpp"

namespace ptpipe {

Severity severity_from_score(std::optional<double> score) {
    if (!score)
        return Severity::None;
    double v = *score;
    if (v < 0.0 || v > 10.0)
        throw OutOfRange("cvss score " + std::to_string(v) + " outside [0.0, 10.0]");
    if (v == 0.0)
        return Severity::None;
    if (v < 4.0)
        return Severity::Low;
    if (v < 7.0)
        return Severity::Medium;
    if (v < 9.0)
        return Severity::High;
    return Severity::Critical;
}

std::string to_string(Severity s) {
    switch (s) {
    case Severity::None: return "none";
    case Severity::Low: return "low";
    case Severity::Medium: return "medium";
    case Severity::High: return "high";
    case Severity::Critical: return "critical";
    }
    return "none";
}

std::optional<Severity> severity_from_string(const std::string& s) {
    if (s == "none") return Severity::None;
    if (s == "low") return Severity::Low;
    if (s == "medium") return Severity::Medium;
    if (s == "high") return Severity::High;
    if (s == "critical") return Severity::Critical;
    return std::nullopt;
}

int severity_rank(Severity s) {
    return static_cast<int>(s);
}

} // namespace ptpipe
