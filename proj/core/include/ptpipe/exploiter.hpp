#pragma once

#include <filesystem>
#include <memory>
#include <string>

#include "ptpipe/assessment.hpp"
#include "ptpipe/exploit_index.hpp"
#include "ptpipe/http.hpp"

namespace ptpipe::exploiter {

/// Supplies exploit source bytes for an index entry. Throws FetchFailed.
class ExploitFetcher {
public:
    virtual ~ExploitFetcher() = default;
    virtual std::string fetch(const IndexEntry& entry) = 0;
};

/// Reads from a directory tree keyed by the index file_path column.
class LocalMirrorFetcher final : public ExploitFetcher {
public:
    explicit LocalMirrorFetcher(std::filesystem::path root);
    std::string fetch(const IndexEntry& entry) override;

private:
    std::filesystem::path root_;
};

/// HTTPS GET of the raw file against a configurable base URL.
class RemoteFetcher final : public ExploitFetcher {
public:
    RemoteFetcher(http::HttpClient* transport, std::string base_url);
    std::string fetch(const IndexEntry& entry) override;

private:
    http::HttpClient* transport_;
    std::string base_url_;
};

/// Download path inside the project: exploits/<exploit_id>_<basename>.
std::string exploit_relative_path(const IndexEntry& entry);

/// Stores the source, detects its language and (for C/C++) the compile
/// command. A failed fetch degrades to a ref without local_path; it never
/// aborts the pipeline.
ExploitRef fetch_exploit(const IndexEntry& entry, const std::filesystem::path& project_dir,
                         ExploitFetcher& fetcher);

struct ExploitStageOutcome {
    std::size_t refs_fetched = 0;
    std::size_t fetch_failures = 0;
};

/// Runs search + fetch for every distinct CVE in the context and records the
/// results in ctx.exploits. Fetch failures are isolated per entry.
ExploitStageOutcome run_exploit_stage(AssessmentContext& ctx, const ExploitIndex& index,
                                      const std::filesystem::path& project_dir,
                                      ExploitFetcher& fetcher);

/// Operator-facing text: per host the open ports, per port the CVEs with
/// severity and a one-line description, per CVE the candidate exploits.
/// Deterministic ordering throughout.
std::string console_summary(const AssessmentContext& assessment);

/// Runs a previously extracted compile command inside the exploit's
/// directory. Explicit opt-in CLI action; the pipeline itself never compiles
/// or executes exploit code. Returns the compiler's exit code.
int run_compile_command(const std::filesystem::path& exploit_path, std::string* transcript);

} // namespace ptpipe::exploiter
