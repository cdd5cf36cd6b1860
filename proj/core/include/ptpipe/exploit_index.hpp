#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace ptpipe::exploiter {

/// One row of the offline exploit-archive snapshot.
struct IndexEntry {
    std::int64_t exploit_id = 0; // positive
    std::string file_path;       // relative path inside the archive
    std::string title;
    std::string date; // ISO yyyy-mm-dd as published
    std::string author;
    std::string platform; // windows, linux, multiple, ...
    std::string type;     // remote | local | dos | webapps
    bool verified = false;
    std::vector<std::string> codes; // CVE-... / OSVDB-..., uppercase-normalized

    bool operator==(const IndexEntry&) const = default;
};

struct ExploitIndex {
    std::vector<IndexEntry> entries;
    std::string snapshot_date; // newest row date seen while loading
    std::size_t skipped_rows = 0;

    const IndexEntry* by_id(std::int64_t exploit_id) const;
};

/// Loads the snapshot CSV. Header contract:
///   id,file,description,date,author,type,platform,verified,codes
/// codes are semicolon-separated. Rows whose id does not parse are skipped
/// and counted. Throws MalformedIndex when required header columns are
/// missing.
ExploitIndex load_index(std::string_view csv);
ExploitIndex load_index_file(const std::string& path);

/// Entries whose codes contain the id exactly, plus entries whose title
/// mentions it, sorted by (verified desc, date desc, exploit_id asc).
std::vector<IndexEntry> search(const ExploitIndex& index, const std::string& cve_id);

enum class Language {
    Python,
    Ruby,
    Metasploit,
    C,
    Cpp,
    Java,
    Shell,
    Perl,
    Php,
    Text,
    Unknown,
};

std::string to_string(Language lang);
std::optional<Language> language_from_string(const std::string& s);

/// Classifies exploit source. Decision order: framework-module signature,
/// shebang, extension map, content heuristics, unknown.
Language detect_language(std::string_view source, std::string_view file_extension);

struct CompileSpec {
    std::string command_line;    // references the exploit's stored filename
    std::string source_of_truth; // the comment line the command was lifted from

    bool operator==(const CompileSpec&) const = default;
};

/// Scans C/C++ comment lines for a compiler invocation ("gcc exploit.c -o x").
/// The first match wins; source-file tokens are rewritten to local_filename.
/// Returns nullopt when no comment carries a compile command.
std::optional<CompileSpec> extract_compile_spec(std::string_view source,
                                                std::string_view local_filename);

struct ExploitRef {
    IndexEntry entry;
    std::optional<std::string> local_path; // relative to the project directory
    Language language = Language::Unknown;
    std::optional<CompileSpec> compile_spec; // only for c/cpp sources

    bool operator==(const ExploitRef&) const = default;
};

} // namespace ptpipe::exploiter
