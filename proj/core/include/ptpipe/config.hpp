#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>

namespace ptpipe::orchestrator {

/// Flat key-value configuration ("key = value" lines, '#' comments).
/// Environment variables of the upper-cased key name override file values,
/// e.g. nvd_api_key <- NVD_API_KEY.
class ConfigFile {
public:
    ConfigFile() = default;

    /// Throws ConfigError when the file cannot be read.
    static ConfigFile load_file(const std::filesystem::path& path);
    static ConfigFile from_string(std::string_view text);

    std::optional<std::string> get(const std::string& key) const;
    std::string get_or(const std::string& key, std::string fallback) const;

    /// Throws ConfigError when the value is present but not an integer.
    std::optional<long> get_int(const std::string& key) const;

    void set(const std::string& key, std::string value);

private:
    std::map<std::string, std::string> values_;
};

} // namespace ptpipe::orchestrator
