#pragma once

#include <array>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "ptpipe/assessment.hpp"
#include "ptpipe/config.hpp"
#include "ptpipe/enricher.hpp"
#include "ptpipe/exploiter.hpp"
#include "ptpipe/nlp_agent.hpp"
#include "ptpipe/reporter.hpp"

namespace ptpipe::orchestrator {

enum class ScannerKind { Nmap, Fixture };
enum class NlpKind { Remote, Stub };

std::string to_string(ScannerKind k);
std::string to_string(NlpKind k);

struct RunConfig {
    scanner::TargetSpec targets;
    ScannerKind scanner_kind = ScannerKind::Nmap;
    std::string exploiter_kind = "exploitdb";
    NlpKind nlp_kind = NlpKind::Remote;
    std::string reporter_kind = "markdown";
    std::string project_name; // filesystem-safe: alphanumeric, dash, underscore
    std::filesystem::path config_path;
    std::optional<Stage> resume_from;
    bool offline = false;        // forces fixture scanner, stub NLP, cache-only NVD
    bool unsafe_nvd_delay = false; // permits request delays below the API minimum
};

/// Raised for --help; carries the usage text.
struct HelpRequested : Error { using Error::Error; };

/// Parses the pipeline flags. Throws UsageError naming the offending flag,
/// HelpRequested for --help.
RunConfig parse_cli(const std::vector<std::string>& args);

/// Wall seconds per benchmark row label.
struct StageTiming {
    std::string stage;
    double seconds = 0.0;

    bool operator==(const StageTiming&) const = default;
};

/// Fixed timing row labels, one set per full pipeline run.
inline constexpr std::array<const char*, 7> kTimingLabels = {
    "Port Discovery", "Vulnerability Discovery", "OS Discovery",  "Exploiter",
    "Executive Summary", "Finding report",       "Render report",
};

struct RunSummary {
    std::filesystem::path project_dir;
    std::map<Stage, StageStatus> stage_status;
    std::vector<StageTiming> timings;       // rows for executed stages only
    std::vector<std::string> degradations; // human-readable notes
    bool degraded = false;
};

/// Dependency seams for tests and offline runs. Unset fields are built from
/// the run configuration.
struct PipelineServices {
    scanner::ScannerBackend* scanner = nullptr;
    http::HttpClient* nvd_transport = nullptr;
    nlp::CompletionProvider* nlp_provider = nullptr;
    const exploiter::ExploitIndex* exploit_index = nullptr;
    exploiter::ExploitFetcher* exploit_fetcher = nullptr;
    std::ostream* console = nullptr; // defaults to std::cout
};

/// Executes scan -> enrich -> exploit -> narrate -> report, persisting the
/// context after each stage and timing every row of kTimingLabels. Degraded
/// stages complete and are listed in the summary; only unrecoverable setup
/// errors (ScannerNotFound, ConfigError, TemplateError, artifact load
/// failures) throw.
RunSummary run_pipeline(const RunConfig& config, const PipelineServices& services = {});

// stage artifacts ------------------------------------------------------------

std::filesystem::path stage_artifact_path(const std::filesystem::path& project_dir, Stage stage);

/// Canonical JSON, newline-terminated; load(save(ctx)) == ctx.
void save_stage(const std::filesystem::path& project_dir, Stage stage,
                const AssessmentContext& ctx);
AssessmentContext load_stage(const std::filesystem::path& project_dir, Stage stage);

void save_narratives(const std::filesystem::path& project_dir, const nlp::NarrativeSet& set);
nlp::NarrativeSet load_narratives(const std::filesystem::path& project_dir);

void write_timings_json(const std::filesystem::path& project_dir,
                        const std::vector<StageTiming>& timings);

/// The console table printed next to timings.json, same row labels.
std::string format_timing_table(const std::vector<StageTiming>& timings);

/// Exclusive ownership of a project directory for the duration of a run.
class ProjectLock {
public:
    explicit ProjectLock(const std::filesystem::path& project_dir);
    ~ProjectLock();
    ProjectLock(const ProjectLock&) = delete;
    ProjectLock& operator=(const ProjectLock&) = delete;

private:
    std::filesystem::path lock_path_;
    bool held_ = false;
};

} // namespace ptpipe::orchestrator
