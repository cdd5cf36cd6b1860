#include "ptpipe/config.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "ptpipe/errors.hpp"

namespace ptpipe::orchestrator {

namespace {

std::string trim(std::string s) {
    auto not_space = [](unsigned char c) { return !std::isspace(c); };
    s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
    s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
    return s;
}

std::string upper(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
    return s;
}

} // namespace

ConfigFile ConfigFile::load_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw ConfigError("cannot read configuration file: " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return from_string(ss.str());
}

ConfigFile ConfigFile::from_string(std::string_view text) {
    ConfigFile config;
    std::stringstream ss{std::string(text)};
    std::string line;
    while (std::getline(ss, line)) {
        if (auto hash = line.find('#'); hash != std::string::npos)
            line = line.substr(0, hash);
        line = trim(line);
        if (line.empty())
            continue;
        auto eq = line.find('=');
        if (eq == std::string::npos)
            continue;
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        if (!key.empty())
            config.values_[key] = value;
    }
    return config;
}

std::optional<std::string> ConfigFile::get(const std::string& key) const {
    if (const char* env = std::getenv(upper(key).c_str()); env && *env)
        return std::string(env);
    auto it = values_.find(key);
    if (it == values_.end())
        return std::nullopt;
    return it->second;
}

std::string ConfigFile::get_or(const std::string& key, std::string fallback) const {
    auto v = get(key);
    return v ? *v : std::move(fallback);
}

std::optional<long> ConfigFile::get_int(const std::string& key) const {
    auto v = get(key);
    if (!v)
        return std::nullopt;
    try {
        size_t idx = 0;
        long parsed = std::stol(*v, &idx);
        if (idx != v->size())
            throw std::invalid_argument("trailing characters");
        return parsed;
    } catch (const std::exception&) {
        throw ConfigError("configuration key '" + key + "' is not an integer: " + *v);
    }
}

void ConfigFile::set(const std::string& key, std::string value) {
    values_[key] = std::move(value);
}

} // namespace ptpipe::orchestrator
