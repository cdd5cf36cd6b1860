#include "ptpipe/cve.hpp"

#include <algorithm>
#include <cctype>

namespace ptpipe {

namespace {

bool is_digit_run(std::string_view s, size_t from, size_t count_min, size_t* end) {
    size_t i = from;
    while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i])))
        ++i;
    *end = i;
    return i - from >= count_min;
}

} // namespace

bool is_cve_id(std::string_view token) {
    // CVE-\d{4}-\d{4,}
    if (token.size() < 13 || token.rfind("CVE-", 0) != 0)
        return false;
    size_t end = 0;
    if (!is_digit_run(token, 4, 4, &end) || end != 8)
        return false;
    if (token[8] != '-')
        return false;
    if (!is_digit_run(token, 9, 4, &end))
        return false;
    return end == token.size();
}

std::string normalize_cve_id(std::string token) {
    if (token.size() >= 4) {
        std::string head = token.substr(0, 4);
        std::transform(head.begin(), head.end(), head.begin(),
                       [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
        if (head == "CVE-")
            token.replace(0, 4, head);
    }
    return token;
}

std::vector<std::string> extract_cve_tokens(std::string_view text) {
    auto is_token_char = [](char ch) {
        return std::isalnum(static_cast<unsigned char>(ch)) || ch == '-';
    };
    std::vector<std::string> out;
    size_t i = 0;
    while (i < text.size()) {
        if (!is_token_char(text[i])) {
            ++i;
            continue;
        }
        size_t j = i;
        while (j < text.size() && is_token_char(text[j]))
            ++j;
        std::string token = normalize_cve_id(std::string(text.substr(i, j - i)));
        while (!token.empty() && token.back() == '-')
            token.pop_back();
        if (is_cve_id(token) && std::find(out.begin(), out.end(), token) == out.end())
            out.push_back(token);
        i = j;
    }
    return out;
}

std::string to_string(CveSource s) {
    switch (s) {
    case CveSource::Nvd: return "nvd";
    case CveSource::Cache: return "cache";
    case CveSource::Unresolved: return "unresolved";
    }
    return "unresolved";
}

std::optional<CveSource> cve_source_from_string(const std::string& s) {
    if (s == "nvd") return CveSource::Nvd;
    if (s == "cache") return CveSource::Cache;
    if (s == "unresolved") return CveSource::Unresolved;
    return std::nullopt;
}

CveRecord unresolved_cve(std::string id) {
    CveRecord r;
    r.id = std::move(id);
    return r;
}

} // namespace ptpipe
