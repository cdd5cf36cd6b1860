#pragma once

#include <chrono>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "ptpipe/assessment.hpp"
#include "ptpipe/http.hpp"

namespace ptpipe::nlp {

struct ProviderParams {
    std::string model_name = "stub";
    double temperature = 0.2; // [0.0, 2.0]
    int max_output_tokens = 1024;
    std::chrono::milliseconds request_timeout = std::chrono::seconds(60);
};

/// Throws ConfigError when a field is outside its documented range.
void validate_params(const ProviderParams& params);

/// One capability: a fresh conversation made of a context message and a user
/// message. Implementations must be safe for concurrent complete() calls.
class CompletionProvider {
public:
    virtual ~CompletionProvider() = default;
    virtual std::string complete(const std::string& context_message,
                                 const std::string& user_message,
                                 const ProviderParams& params) = 0;
};

/// Pure function of its inputs; suitable for golden tests and offline runs.
class DeterministicStubProvider final : public CompletionProvider {
public:
    std::string complete(const std::string& context_message, const std::string& user_message,
                         const ProviderParams& params) override;
};

/// Chat-completion HTTP provider. Throws ProviderError on failure.
class RemoteChatProvider final : public CompletionProvider {
public:
    static constexpr const char* kDefaultBaseUrl = "https://api.openai.com/v1";

    RemoteChatProvider(http::HttpClient* transport, std::string api_key,
                       std::string base_url = kDefaultBaseUrl);
    std::string complete(const std::string& context_message, const std::string& user_message,
                         const ProviderParams& params) override;

private:
    http::HttpClient* transport_;
    std::string api_key_;
    std::string base_url_;
};

enum class Section { ExecutiveSummary, FindingRationale, FindingRemediation };

std::string to_string(Section s);

/// Context-message template with {name} placeholders.
struct PromptTemplate {
    Section section = Section::ExecutiveSummary;
    std::string context_text;
    std::vector<std::string> placeholder_names;

    /// Throws TemplateError when a placeholder has no binding.
    std::string render(const std::map<std::string, std::string>& bindings) const;
};

PromptTemplate make_prompt_template(Section section, std::string context_text);

struct PromptSet {
    PromptTemplate executive_summary;
    PromptTemplate finding_rationale;
    PromptTemplate finding_remediation;
};

/// Built-in prompt texts, identical to the assets shipped under prompts/.
PromptSet default_prompts();

/// Loads <dir>/<section>.txt for each section; missing files fall back to
/// the built-in text.
PromptSet load_prompts(const std::filesystem::path& dir);

struct FindingNarrative {
    std::string cve_id;
    std::string severity_rationale;
    std::vector<std::string> remediation_steps; // non-empty
    std::string provider_model;
    bool flagged = false; // placeholder content after provider failure/validation

    bool operator==(const FindingNarrative&) const = default;
};

/// Narrate-stage artifact persisted as narratives.json.
struct NarrativeSet {
    std::string executive_summary;
    bool summary_flagged = false;
    std::vector<FindingNarrative> findings;

    bool operator==(const NarrativeSet&) const = default;
};

std::string narratives_to_json(const NarrativeSet& set);
NarrativeSet narratives_from_json(std::string_view json_text);

/// Line-oriented digest of the assessment within a token budget
/// (characters/4 estimate). Reduction order: truncate descriptions, drop
/// exploit titles, cap CVE lines per port with an elision that still lists
/// the ids. Host addresses and CVE ids are never dropped. Throws
/// BudgetTooSmall below the irreducible skeleton size.
std::string compact_context(const AssessmentContext& assessment, int token_budget);

int estimate_tokens(std::string_view text);

inline constexpr int kSummaryDigestBudget = 4096;
inline constexpr int kMaxCompletionAttempts = 3;
inline constexpr int kDefaultFindingConcurrency = 4;

/// Renders the executive-summary prompt, submits the digest, returns the
/// provider output verbatim. Throws ProviderError after
/// kMaxCompletionAttempts failed attempts.
std::string generate_executive_summary(const AssessmentContext& assessment,
                                       CompletionProvider& provider,
                                       const ProviderParams& params,
                                       const PromptSet& prompts = default_prompts());

/// One narrative per distinct CVE (two templated calls each: severity
/// rationale, remediation steps), each in a fresh conversation seeded with
/// only that CVE's record and exploits. Per-item failures degrade to flagged
/// placeholder narratives. Result ordered by (severity desc, cve_id asc).
std::vector<FindingNarrative> generate_findings(const AssessmentContext& assessment,
                                                CompletionProvider& provider,
                                                const ProviderParams& params,
                                                const PromptSet& prompts = default_prompts(),
                                                int max_in_flight = kDefaultFindingConcurrency);

struct ValidationResult {
    bool valid = true;
    std::vector<std::string> unknown_ids;
};

/// Flags any CVE-pattern token in the narrative that does not exist in the
/// assessment.
ValidationResult validate_narrative(const FindingNarrative& narrative,
                                    const AssessmentContext& assessment);

} // namespace ptpipe::nlp
