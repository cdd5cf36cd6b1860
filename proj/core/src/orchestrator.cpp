#include "ptpipe/orchestrator.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <cctype>
#include <chrono>
#include <fstream>
#include <iostream>
#include <sstream>

#include "ptpipe/errors.hpp"

namespace ptpipe::orchestrator {

namespace fs = std::filesystem;
using nlohmann::json;

std::string to_string(ScannerKind k) {
    return k == ScannerKind::Fixture ? "fixture" : "nmap";
}

std::string to_string(NlpKind k) {
    return k == NlpKind::Stub ? "stub" : "remote";
}

// ---- CLI -------------------------------------------------------------------

RunConfig parse_cli(const std::vector<std::string>& args) {
    CLI::App app{"staged pentest pipeline: scan, enrich, exploit-prep, narrate, report"};
    app.name("ptpipe");

    std::string ip, ports, project, resume;
    std::string scanner_kind = "nmap";
    std::string exploiter_kind = "exploitdb";
    std::string nlp_kind = "remote";
    std::string reporter_kind = "markdown";
    std::string config_path;
    bool offline = false;
    bool unsafe_nvd_delay = false;

    app.add_option("--ip", ip, "target IPv4 address(es) or CIDR range(s), comma-separated")
        ->required();
    app.add_option("--ports", ports, "ports to scan, e.g. 1-1000,8080")->required();
    app.add_option("--scanner", scanner_kind, "scanner backend")
        ->check(CLI::IsMember({"nmap", "fixture"}));
    app.add_option("--exploiter", exploiter_kind, "exploit search backend")
        ->check(CLI::IsMember({"exploitdb"}));
    app.add_option("--nlpagent", nlp_kind, "completion provider")
        ->check(CLI::IsMember({"remote", "stub"}));
    app.add_option("--reporter", reporter_kind, "report renderer")
        ->check(CLI::IsMember({"markdown"}));
    app.add_option("--project", project, "project name; results are stored in this folder")
        ->required();
    app.add_option("--config", config_path, "path to the configuration file");
    app.add_option("--resume-from", resume, "skip earlier stages, loading their artifacts")
        ->check(CLI::IsMember({"scan", "enrich", "exploit", "narrate", "report"}));
    app.add_flag("--offline", offline,
                 "force fixture scanner, stub provider and cache-only enrichment");
    app.add_flag("--unsafe-nvd-delay", unsafe_nvd_delay,
                 "permit nvd_request_delay_ms below the API minimum");

    try {
        std::vector<const char*> argv;
        argv.push_back("ptpipe");
        for (const auto& a : args)
            argv.push_back(a.c_str());
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp&) {
        throw HelpRequested(app.help());
    } catch (const CLI::ParseError& e) {
        throw UsageError(e.what());
    }

    RunConfig config;
    try {
        config.targets = scanner::TargetSpec::parse(ip, ports);
    } catch (const InvalidTarget& e) {
        throw UsageError(std::string("--ip/--ports: ") + e.what());
    }

    if (project.empty() ||
        !std::all_of(project.begin(), project.end(), [](unsigned char c) {
            return std::isalnum(c) || c == '-' || c == '_';
        }))
        throw UsageError("--project must be alphanumeric with dashes/underscores, got '" +
                         project + "'");
    config.project_name = project;

    config.scanner_kind = scanner_kind == "fixture" ? ScannerKind::Fixture : ScannerKind::Nmap;
    config.exploiter_kind = exploiter_kind;
    config.nlp_kind = nlp_kind == "stub" ? NlpKind::Stub : NlpKind::Remote;
    config.reporter_kind = reporter_kind;
    config.config_path = config_path;
    config.offline = offline;
    config.unsafe_nvd_delay = unsafe_nvd_delay;
    if (!resume.empty())
        config.resume_from = stage_from_string(resume);

    if (config.offline) {
        config.scanner_kind = ScannerKind::Fixture;
        config.nlp_kind = NlpKind::Stub;
    }
    return config;
}

// ---- artifacts ---------------------------------------------------------------

fs::path stage_artifact_path(const fs::path& project_dir, Stage stage) {
    switch (stage) {
    case Stage::Scan: return project_dir / "scan.json";
    case Stage::Enrich: return project_dir / "enriched.json";
    case Stage::Exploit: return project_dir / "exploited.json";
    case Stage::Narrate: return project_dir / "narratives.json";
    case Stage::Report: return project_dir / "report.md";
    }
    return project_dir / "scan.json";
}

namespace {

void write_file(const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw ConfigError("cannot write " + path.string());
    out << content;
}

std::string read_file_or_throw(const fs::path& path, const char* what) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw CorruptArtifact(std::string(what) + " not readable: " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

struct Timer {
    std::chrono::steady_clock::time_point started = std::chrono::steady_clock::now();
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    }
};

} // namespace

void save_stage(const fs::path& project_dir, Stage stage, const AssessmentContext& ctx) {
    write_file(stage_artifact_path(project_dir, stage), to_canonical_json(ctx));
}

AssessmentContext load_stage(const fs::path& project_dir, Stage stage) {
    return assessment_from_json(
        read_file_or_throw(stage_artifact_path(project_dir, stage), "stage artifact"));
}

void save_narratives(const fs::path& project_dir, const nlp::NarrativeSet& set) {
    write_file(stage_artifact_path(project_dir, Stage::Narrate), nlp::narratives_to_json(set));
}

nlp::NarrativeSet load_narratives(const fs::path& project_dir) {
    return nlp::narratives_from_json(
        read_file_or_throw(stage_artifact_path(project_dir, Stage::Narrate), "narratives artifact"));
}

void write_timings_json(const fs::path& project_dir, const std::vector<StageTiming>& timings) {
    json rows = json::array();
    for (const auto& t : timings)
        rows.push_back(json{{"seconds", t.seconds}, {"stage", t.stage}});
    write_file(project_dir / "timings.json", rows.dump(2) + "\n");
}

std::string format_timing_table(const std::vector<StageTiming>& timings) {
    size_t width = 0;
    for (const auto& t : timings)
        width = std::max(width, t.stage.size());
    std::ostringstream out;
    out << "stage timings (seconds)\n";
    for (const auto& t : timings) {
        out << "  " << t.stage << std::string(width - t.stage.size() + 2, ' ');
        std::ostringstream secs;
        secs.setf(std::ios::fixed);
        secs.precision(3);
        secs << t.seconds;
        out << secs.str() << "\n";
    }
    return out.str();
}

// ---- project lock ------------------------------------------------------------

ProjectLock::ProjectLock(const fs::path& project_dir) : lock_path_(project_dir / ".lock") {
    int fd = ::open(lock_path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
    if (fd < 0) {
        if (errno == EEXIST)
            throw ConfigError("project directory " + project_dir.string() +
                              " is locked by another run (remove " + lock_path_.string() +
                              " if that run is gone)");
        throw ConfigError("cannot create lock file " + lock_path_.string());
    }
    std::string pid = std::to_string(::getpid()) + "\n";
    [[maybe_unused]] ssize_t n = ::write(fd, pid.data(), pid.size());
    ::close(fd);
    held_ = true;
}

ProjectLock::~ProjectLock() {
    if (held_) {
        std::error_code ec;
        fs::remove(lock_path_, ec);
    }
}

// ---- pipeline -----------------------------------------------------------------

namespace {

class TimingSheet {
public:
    void add(const std::string& label, double seconds) { seconds_[label] += seconds; }
    bool has(const std::string& label) const { return seconds_.count(label) > 0; }

    std::vector<StageTiming> rows() const {
        std::vector<StageTiming> out;
        for (const char* label : kTimingLabels)
            if (auto it = seconds_.find(label); it != seconds_.end())
                out.push_back({label, it->second});
        return out;
    }

private:
    std::map<std::string, double> seconds_;
};

double parse_temperature(const ConfigFile& cfg) {
    auto raw = cfg.get("nlp_temperature");
    if (!raw)
        return 0.2;
    try {
        size_t idx = 0;
        double v = std::stod(*raw, &idx);
        if (idx != raw->size())
            throw std::invalid_argument("trailing characters");
        return v;
    } catch (const std::exception&) {
        throw ConfigError("nlp_temperature is not a number: " + *raw);
    }
}

} // namespace

RunSummary run_pipeline(const RunConfig& config, const PipelineServices& services) {
    ConfigFile cfg;
    if (!config.config_path.empty())
        cfg = ConfigFile::load_file(config.config_path);

    std::ostream& console = services.console ? *services.console : std::cout;

    fs::path project_dir = fs::path(cfg.get_or("projects_dir", ".")) / config.project_name;
    std::error_code ec;
    fs::create_directories(project_dir, ec);
    if (ec)
        throw ConfigError("cannot create project directory " + project_dir.string() + ": " +
                          ec.message());
    ProjectLock lock(project_dir);

    RunSummary summary;
    summary.project_dir = project_dir;
    TimingSheet sheet;

    Stage resume = config.resume_from.value_or(Stage::Scan);
    auto executes = [&](Stage s) {
        return static_cast<int>(s) >= static_cast<int>(resume);
    };
    auto note = [&](StageStatus& status, const std::string& message) {
        status = StageStatus::Degraded;
        summary.degradations.push_back(message);
    };

    AssessmentContext ctx;
    bool have_ctx = false;
    double vuln_script_seconds = 0.0;

    // scan ---------------------------------------------------------------
    if (executes(Stage::Scan)) {
        StageStatus status = StageStatus::Done;
        Timer timer;

        std::unique_ptr<scanner::ScannerBackend> owned;
        scanner::ScannerBackend* backend = services.scanner;
        if (!backend) {
            if (config.scanner_kind == ScannerKind::Fixture) {
                auto fixture = cfg.get("scan_fixture");
                if (!fixture)
                    throw ConfigError(
                        "fixture scanner selected but configuration key scan_fixture is unset");
                owned = std::make_unique<scanner::FixtureBackend>(*fixture);
            } else {
                owned = std::make_unique<scanner::NmapBackend>();
            }
            backend = owned.get();
        }

        std::vector<scanner::HostRecon> hosts;
        try {
            hosts = scanner::scan(config.targets, *backend);
        } catch (const ScanFailed& e) {
            note(status, std::string("scan degraded: ") + e.what());
        } catch (const MalformedXml& e) {
            note(status, std::string("scan degraded: ") + e.what());
        } catch (const UnsupportedSchema& e) {
            note(status, std::string("scan degraded: ") + e.what());
        }
        double wall = timer.seconds();

        ctx = make_assessment(config.project_name, config.targets, std::move(hosts));
        have_ctx = true;

        auto phases = backend->phase_seconds();
        if (phases.empty()) {
            sheet.add("Port Discovery", wall);
            sheet.add("OS Discovery", 0.0);
        } else {
            sheet.add("Port Discovery", phases[scanner::kPhasePortDiscovery] +
                                            phases[scanner::kPhaseServiceVersion]);
            sheet.add("OS Discovery", phases[scanner::kPhaseOsDiscovery]);
            vuln_script_seconds = phases[scanner::kPhaseVulnScript];
        }

        ctx.stage_status[Stage::Scan] = status;
        summary.stage_status[Stage::Scan] = status;
        save_stage(project_dir, Stage::Scan, ctx);
    }

    // enrich -------------------------------------------------------------
    if (executes(Stage::Enrich)) {
        if (!have_ctx) {
            ctx = load_stage(project_dir, Stage::Scan);
            have_ctx = true;
        }
        StageStatus status = StageStatus::Done;
        Timer timer;

        enricher::EnrichmentPolicy policy;
        policy.cache_dir = cfg.get_or("nvd_cache_dir", (project_dir / "nvd_cache").string());
        long delay_ms = cfg.get_int("nvd_request_delay_ms")
                            .value_or(enricher::kKeyedApiMinimumDelay.count());
        if (delay_ms < enricher::kKeyedApiMinimumDelay.count() && !config.unsafe_nvd_delay) {
            summary.degradations.push_back(
                "nvd_request_delay_ms raised to the API minimum (pass --unsafe-nvd-delay to keep " +
                std::to_string(delay_ms) + " ms)");
            delay_ms = enricher::kKeyedApiMinimumDelay.count();
        }
        policy.request_delay = std::chrono::milliseconds(delay_ms);
        policy.offline_only = config.offline;

        std::unique_ptr<http::HttpClient> owned_transport;
        http::HttpClient* transport = services.nvd_transport;
        if (!transport && !config.offline) {
            owned_transport = http::make_httplib_client();
            transport = owned_transport.get();
        }

        enricher::NvdClient client(policy, transport, cfg.get_or("nvd_api_key", ""));
        enricher::resolve_vulnerabilities(ctx, client);

        size_t unresolved = 0;
        for (const auto& [id, record] : ctx.vulnerabilities)
            if (record.source == CveSource::Unresolved)
                ++unresolved;
        if (unresolved > 0)
            note(status, std::to_string(unresolved) + " CVE id(s) stayed unresolved");

        sheet.add("Vulnerability Discovery", timer.seconds() + vuln_script_seconds);
        ctx.stage_status[Stage::Enrich] = status;
        summary.stage_status[Stage::Enrich] = status;
        save_stage(project_dir, Stage::Enrich, ctx);
    }

    // exploit ------------------------------------------------------------
    if (executes(Stage::Exploit)) {
        if (!have_ctx) {
            ctx = load_stage(project_dir, Stage::Enrich);
            have_ctx = true;
        }
        StageStatus status = StageStatus::Done;
        Timer timer;

        exploiter::ExploitIndex owned_index;
        const exploiter::ExploitIndex* index = services.exploit_index;
        if (!index) {
            if (auto path = cfg.get("exploit_index")) {
                try {
                    owned_index = exploiter::load_index_file(*path);
                } catch (const MalformedIndex& e) {
                    note(status, std::string("exploit index unusable: ") + e.what());
                }
            } else {
                note(status, "no exploit_index configured; exploit search skipped");
            }
            index = &owned_index;
        }

        std::unique_ptr<exploiter::ExploitFetcher> owned_fetcher;
        std::unique_ptr<http::HttpClient> owned_transport;
        exploiter::ExploitFetcher* fetcher = services.exploit_fetcher;
        if (!fetcher) {
            if (auto mirror = cfg.get("exploit_mirror_dir")) {
                owned_fetcher = std::make_unique<exploiter::LocalMirrorFetcher>(*mirror);
            } else if (!config.offline) {
                owned_transport = http::make_httplib_client();
                owned_fetcher = std::make_unique<exploiter::RemoteFetcher>(
                    owned_transport.get(),
                    cfg.get_or("exploit_mirror_url",
                               "https://gitlab.com/exploit-database/exploitdb/-/raw/main"));
            } else {
                owned_fetcher = std::make_unique<exploiter::LocalMirrorFetcher>("");
            }
            fetcher = owned_fetcher.get();
        }

        auto outcome = exploiter::run_exploit_stage(ctx, *index, project_dir, *fetcher);
        if (outcome.fetch_failures > 0)
            note(status, std::to_string(outcome.fetch_failures) + " exploit file(s) not fetched");

        console << exploiter::console_summary(ctx);

        sheet.add("Exploiter", timer.seconds());
        ctx.stage_status[Stage::Exploit] = status;
        summary.stage_status[Stage::Exploit] = status;
        save_stage(project_dir, Stage::Exploit, ctx);
    }

    // narrate ------------------------------------------------------------
    nlp::NarrativeSet narratives;
    bool have_narratives = false;
    if (executes(Stage::Narrate)) {
        if (!have_ctx) {
            ctx = load_stage(project_dir, Stage::Exploit);
            have_ctx = true;
        }
        StageStatus status = StageStatus::Done;

        nlp::ProviderParams params;
        params.model_name =
            cfg.get_or("nlp_model", config.nlp_kind == NlpKind::Stub ? "stub" : "gpt-3.5-turbo");
        params.temperature = parse_temperature(cfg);
        params.max_output_tokens =
            static_cast<int>(cfg.get_int("nlp_max_output_tokens").value_or(1024));
        params.request_timeout =
            std::chrono::milliseconds(cfg.get_int("nlp_timeout_ms").value_or(60000));
        nlp::validate_params(params);

        std::unique_ptr<nlp::CompletionProvider> owned_provider;
        std::unique_ptr<http::HttpClient> owned_transport;
        nlp::CompletionProvider* provider = services.nlp_provider;
        if (!provider) {
            if (config.nlp_kind == NlpKind::Stub) {
                owned_provider = std::make_unique<nlp::DeterministicStubProvider>();
            } else {
                auto key = cfg.get("nlp_api_key");
                if (!key)
                    throw ConfigError("remote NLP provider selected but nlp_api_key is unset");
                owned_transport = http::make_httplib_client();
                owned_provider =
                    std::make_unique<nlp::RemoteChatProvider>(owned_transport.get(), *key);
            }
            provider = owned_provider.get();
        }

        nlp::PromptSet prompts = nlp::default_prompts();
        if (auto dir = cfg.get("prompts_dir"))
            prompts = nlp::load_prompts(*dir);

        Timer summary_timer;
        try {
            narratives.executive_summary =
                nlp::generate_executive_summary(ctx, *provider, params, prompts);
        } catch (const ProviderError& e) {
            narratives.executive_summary =
                "Executive summary unavailable; pending analyst review.";
            narratives.summary_flagged = true;
            note(status, std::string("executive summary degraded: ") + e.what());
        }
        sheet.add("Executive Summary", summary_timer.seconds());

        Timer findings_timer;
        narratives.findings = nlp::generate_findings(ctx, *provider, params, prompts);
        for (auto& narrative : narratives.findings) {
            if (narrative.flagged) {
                note(status, "narrative for " + narrative.cve_id + " degraded to placeholder");
                continue;
            }
            auto verdict = nlp::validate_narrative(narrative, ctx);
            if (!verdict.valid) {
                std::string offenders;
                for (const auto& id : verdict.unknown_ids)
                    offenders += (offenders.empty() ? "" : ", ") + id;
                note(status, "narrative for " + narrative.cve_id +
                                 " rejected (mentions unknown " + offenders + ")");
                narrative.severity_rationale =
                    "Generated analysis failed validation; pending analyst review.";
                narrative.remediation_steps = {"Pending analyst review."};
                narrative.flagged = true;
            }
        }
        sheet.add("Finding report", findings_timer.seconds());

        ctx.stage_status[Stage::Narrate] = status;
        summary.stage_status[Stage::Narrate] = status;
        save_narratives(project_dir, narratives);
        have_narratives = true;
    }

    // report -------------------------------------------------------------
    if (executes(Stage::Report)) {
        if (!have_ctx) {
            ctx = load_stage(project_dir, Stage::Exploit);
            have_ctx = true;
        }
        if (!have_narratives) {
            narratives = load_narratives(project_dir);
            have_narratives = true;
            // reflect the loaded artifact's quality in the summary
            bool was_degraded = narratives.summary_flagged;
            for (const auto& n : narratives.findings)
                was_degraded |= n.flagged;
            summary.stage_status[Stage::Narrate] =
                was_degraded ? StageStatus::Degraded : StageStatus::Done;
        }
        StageStatus status = StageStatus::Done;
        Timer timer;

        std::string template_text;
        if (auto path = cfg.get("report_template")) {
            std::ifstream in(*path, std::ios::binary);
            if (!in)
                throw ConfigError("report_template not readable: " + *path);
            std::stringstream ss;
            ss << in.rdbuf();
            template_text = ss.str();
        } else {
            template_text = reporter::default_report_template();
        }

        reporter::ReportModel model =
            reporter::build_report_model(ctx, narratives.executive_summary, narratives.findings);
        std::string document = reporter::render_report(model, template_text);
        write_file(project_dir / "report.md", document);

        sheet.add("Render report", timer.seconds());
        ctx.stage_status[Stage::Report] = status;
        summary.stage_status[Stage::Report] = status;
    }

    // merge statuses of skipped stages from the last loaded artifact
    for (Stage s : kPipelineStages)
        if (!summary.stage_status.count(s))
            summary.stage_status[s] =
                have_ctx && ctx.stage_status.count(s) ? ctx.stage_status.at(s)
                                                      : StageStatus::Pending;

    summary.timings = sheet.rows();
    write_timings_json(project_dir, summary.timings);

    console << format_timing_table(summary.timings);
    console << "run summary\n";
    for (Stage s : kPipelineStages)
        console << "  " << to_string(s) << ": " << to_string(summary.stage_status.at(s)) << "\n";
    for (const auto& d : summary.degradations)
        console << "  degraded: " << d << "\n";

    summary.degraded = !summary.degradations.empty();
    return summary;
}

} // namespace ptpipe::orchestrator
