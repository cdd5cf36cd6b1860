#include "ptpipe/exploit_index.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <map>
#include <sstream>

#include "ptpipe/cve.hpp"
#include "ptpipe/errors.hpp"

namespace ptpipe::exploiter {

namespace {

// RFC 4180-style: quoted fields may contain commas, escaped quotes and
// newlines.
std::vector<std::vector<std::string>> parse_csv(std::string_view text) {
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> row;
    std::string field;
    bool in_quotes = false;
    bool row_has_data = false;

    auto end_field = [&] {
        row.push_back(std::move(field));
        field.clear();
    };
    auto end_row = [&] {
        end_field();
        rows.push_back(std::move(row));
        row.clear();
        row_has_data = false;
    };

    for (size_t i = 0; i < text.size(); ++i) {
        char c = text[i];
        if (in_quotes) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field += '"';
                    ++i;
                } else {
                    in_quotes = false;
                }
            } else {
                field += c;
            }
            continue;
        }
        switch (c) {
        case '"':
            in_quotes = true;
            row_has_data = true;
            break;
        case ',':
            end_field();
            row_has_data = true;
            break;
        case '\r':
            break;
        case '\n':
            if (row_has_data || !field.empty() || !row.empty())
                end_row();
            break;
        default:
            field += c;
            row_has_data = true;
            break;
        }
    }
    if (row_has_data || !field.empty() || !row.empty())
        end_row();
    return rows;
}

std::string upper(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
    return s;
}

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

std::string trim(std::string s) {
    auto not_space = [](unsigned char c) { return !std::isspace(c); };
    s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
    s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
    return s;
}

} // namespace

const IndexEntry* ExploitIndex::by_id(std::int64_t exploit_id) const {
    for (const auto& e : entries)
        if (e.exploit_id == exploit_id)
            return &e;
    return nullptr;
}

ExploitIndex load_index(std::string_view csv) {
    auto rows = parse_csv(csv);
    if (rows.empty())
        throw MalformedIndex("index CSV is empty");

    static constexpr const char* kRequired[] = {"id",   "file",     "description", "date", "author",
                                                "type", "platform", "verified",    "codes"};
    std::map<std::string, size_t> columns;
    for (size_t i = 0; i < rows[0].size(); ++i)
        columns[lower(trim(rows[0][i]))] = i;

    std::string missing;
    for (const char* col : kRequired) {
        if (!columns.count(col)) {
            if (!missing.empty())
                missing += ", ";
            missing += col;
        }
    }
    if (!missing.empty())
        throw MalformedIndex("index CSV header is missing required columns: " + missing);

    ExploitIndex index;
    auto cell = [&](const std::vector<std::string>& row, const char* name) -> std::string {
        size_t i = columns.at(name);
        return i < row.size() ? row[i] : std::string();
    };

    for (size_t r = 1; r < rows.size(); ++r) {
        const auto& row = rows[r];
        std::string id_str = trim(cell(row, "id"));
        std::int64_t id = 0;
        auto [ptr, ec] = std::from_chars(id_str.data(), id_str.data() + id_str.size(), id);
        if (ec != std::errc() || ptr != id_str.data() + id_str.size() || id <= 0) {
            ++index.skipped_rows;
            continue;
        }

        IndexEntry entry;
        entry.exploit_id = id;
        entry.file_path = trim(cell(row, "file"));
        entry.title = cell(row, "description");
        entry.date = trim(cell(row, "date"));
        entry.author = cell(row, "author");
        entry.type = trim(cell(row, "type"));
        entry.platform = trim(cell(row, "platform"));
        std::string verified = trim(cell(row, "verified"));
        entry.verified = verified == "1" || lower(verified) == "true";

        std::stringstream codes(cell(row, "codes"));
        std::string code;
        while (std::getline(codes, code, ';')) {
            code = upper(trim(code));
            if (!code.empty())
                entry.codes.push_back(code);
        }

        if (entry.file_path.empty()) {
            ++index.skipped_rows;
            continue;
        }
        if (entry.date > index.snapshot_date)
            index.snapshot_date = entry.date;
        index.entries.push_back(std::move(entry));
    }
    return index;
}

ExploitIndex load_index_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw MalformedIndex("cannot read index CSV: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return load_index(ss.str());
}

std::vector<IndexEntry> search(const ExploitIndex& index, const std::string& cve_id) {
    std::string id = normalize_cve_id(cve_id);
    std::string id_upper = upper(id);

    std::vector<IndexEntry> hits;
    for (const auto& entry : index.entries) {
        bool match = std::find(entry.codes.begin(), entry.codes.end(), id_upper) !=
                     entry.codes.end();
        if (!match)
            match = upper(entry.title).find(id_upper) != std::string::npos;
        if (match)
            hits.push_back(entry);
    }

    std::sort(hits.begin(), hits.end(), [](const IndexEntry& a, const IndexEntry& b) {
        if (a.verified != b.verified)
            return a.verified > b.verified;
        if (a.date != b.date)
            return a.date > b.date;
        return a.exploit_id < b.exploit_id;
    });
    hits.erase(std::unique(hits.begin(), hits.end(),
                           [](const IndexEntry& a, const IndexEntry& b) {
                               return a.exploit_id == b.exploit_id;
                           }),
               hits.end());
    return hits;
}

} // namespace ptpipe::exploiter
