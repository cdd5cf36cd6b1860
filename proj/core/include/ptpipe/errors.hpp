#pragma once

#include <stdexcept>
#include <string>

namespace ptpipe {

/// Base class for every error raised by the pipeline.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// scanner
struct InvalidTarget : Error { using Error::Error; };
struct MalformedXml : Error { using Error::Error; };
struct UnsupportedSchema : Error { using Error::Error; };
struct ScannerNotFound : Error { using Error::Error; };
struct ScanFailed : Error { using Error::Error; };

// enricher
struct InvalidCveId : Error { using Error::Error; };
struct OutOfRange : Error { using Error::Error; };
struct ConfigError : Error { using Error::Error; };

// exploiter
struct MalformedIndex : Error { using Error::Error; };
struct FetchFailed : Error { using Error::Error; };

// nlp_agent
struct BudgetTooSmall : Error { using Error::Error; };
struct ProviderError : Error { using Error::Error; };

// reporter
struct InconsistentInput : Error { using Error::Error; };
struct TemplateError : Error { using Error::Error; };

// orchestrator
struct UsageError : Error { using Error::Error; };
struct SchemaMismatch : Error { using Error::Error; };
struct CorruptArtifact : Error { using Error::Error; };

} // namespace ptpipe
