#include <algorithm>
#include <array>
#include <cctype>

#include "ptpipe/exploit_index.hpp"

namespace ptpipe::exploiter {

namespace {

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

bool contains(std::string_view haystack, std::string_view needle) {
    return haystack.find(needle) != std::string_view::npos;
}

// rule 1: framework-module signature
bool looks_like_framework_module(std::string_view source) {
    return contains(source, "require 'msf/core'") || contains(source, "require \"msf/core\"") ||
           contains(source, "include Msf::") || contains(source, "Msf::Exploit") ||
           contains(source, "class MetasploitModule") || contains(source, "class Metasploit3") ||
           contains(source, "class Metasploit4");
}

// rule 2: shebang interpreter
std::optional<Language> language_from_shebang(std::string_view source) {
    if (source.size() < 2 || source[0] != '#' || source[1] != '!')
        return std::nullopt;
    auto eol = source.find('\n');
    std::string line = lower(std::string(source.substr(0, eol)));
    if (contains(line, "python")) return Language::Python;
    if (contains(line, "ruby")) return Language::Ruby;
    if (contains(line, "perl")) return Language::Perl;
    if (contains(line, "php")) return Language::Php;
    if (contains(line, "bash") || contains(line, "/sh") || contains(line, " sh"))
        return Language::Shell;
    return std::nullopt;
}

// rule 3: extension map
std::optional<Language> language_from_extension(std::string_view extension) {
    std::string ext = lower(std::string(extension));
    if (!ext.empty() && ext[0] != '.')
        ext.insert(ext.begin(), '.');
    if (ext == ".py") return Language::Python;
    if (ext == ".rb") return Language::Ruby;
    if (ext == ".c") return Language::C;
    if (ext == ".cpp" || ext == ".cc") return Language::Cpp;
    if (ext == ".java") return Language::Java;
    if (ext == ".sh") return Language::Shell;
    if (ext == ".pl") return Language::Perl;
    if (ext == ".php") return Language::Php;
    if (ext == ".txt") return Language::Text;
    return std::nullopt;
}

// rule 4: content heuristics
std::optional<Language> language_from_content(std::string_view source) {
    if (contains(source, "#include <")) return Language::C;
    if (contains(source, "public static void main")) return Language::Java;
    if (contains(source, "<?php")) return Language::Php;
    return std::nullopt;
}

} // namespace

std::string to_string(Language lang) {
    switch (lang) {
    case Language::Python: return "python";
    case Language::Ruby: return "ruby";
    case Language::Metasploit: return "metasploit";
    case Language::C: return "c";
    case Language::Cpp: return "cpp";
    case Language::Java: return "java";
    case Language::Shell: return "shell";
    case Language::Perl: return "perl";
    case Language::Php: return "php";
    case Language::Text: return "text";
    case Language::Unknown: return "unknown";
    }
    return "unknown";
}

std::optional<Language> language_from_string(const std::string& s) {
    static constexpr std::array<Language, 11> kAll = {
        Language::Python, Language::Ruby, Language::Metasploit, Language::C,
        Language::Cpp,    Language::Java, Language::Shell,      Language::Perl,
        Language::Php,    Language::Text, Language::Unknown};
    for (Language lang : kAll)
        if (to_string(lang) == s)
            return lang;
    return std::nullopt;
}

Language detect_language(std::string_view source, std::string_view file_extension) {
    if (looks_like_framework_module(source))
        return Language::Metasploit;
    if (auto lang = language_from_shebang(source))
        return *lang;
    if (auto lang = language_from_extension(file_extension))
        return *lang;
    if (auto lang = language_from_content(source))
        return *lang;
    return Language::Unknown;
}

namespace {

bool is_source_file_token(const std::string& token) {
    if (token.empty() || token[0] == '-')
        return false;
    std::string t = lower(token);
    return t.ends_with(".c") || t.ends_with(".cpp") || t.ends_with(".cc");
}

constexpr std::array<const char*, 10> kCompilerDrivers = {
    "gcc",   "g++",        "cc",        "clang",     "clang++",
    "tcc",   "mingw32-gcc", "musl-gcc", "i686-w64-mingw32-gcc", "x86_64-w64-mingw32-gcc"};

bool is_compiler_token(const std::string& token) {
    std::string t = token;
    if (auto slash = t.rfind('/'); slash != std::string::npos)
        t = t.substr(slash + 1);
    t = lower(t);
    return std::find_if(kCompilerDrivers.begin(), kCompilerDrivers.end(),
                        [&](const char* d) { return t == d; }) != kCompilerDrivers.end();
}

std::string trim(std::string s) {
    auto not_space = [](unsigned char c) { return !std::isspace(c); };
    s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
    s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
    return s;
}

std::vector<std::string> tokenize(const std::string& text) {
    std::vector<std::string> tokens;
    std::string current;
    for (char c : text) {
        if (std::isspace(static_cast<unsigned char>(c))) {
            if (!current.empty()) {
                tokens.push_back(current);
                current.clear();
            }
        } else {
            current += c;
        }
    }
    if (!current.empty())
        tokens.push_back(current);
    return tokens;
}

/// The comment portions of each source line, tracking /* */ state.
std::vector<std::string> comment_lines(std::string_view source) {
    std::vector<std::string> out;
    bool in_block = false;
    size_t pos = 0;
    while (pos <= source.size()) {
        size_t eol = source.find('\n', pos);
        std::string line(source.substr(pos, eol == std::string_view::npos ? std::string_view::npos
                                                                          : eol - pos));
        std::string comment;
        size_t i = 0;
        bool block = in_block;
        while (i < line.size()) {
            if (block) {
                size_t close = line.find("*/", i);
                if (close == std::string::npos) {
                    comment += line.substr(i);
                    i = line.size();
                } else {
                    comment += line.substr(i, close - i);
                    i = close + 2;
                    block = false;
                }
            } else {
                size_t line_c = line.find("//", i);
                size_t block_c = line.find("/*", i);
                if (line_c != std::string::npos && (block_c == std::string::npos || line_c < block_c)) {
                    comment += line.substr(line_c + 2);
                    i = line.size();
                } else if (block_c != std::string::npos) {
                    i = block_c + 2;
                    block = true;
                } else {
                    i = line.size();
                }
            }
        }
        in_block = block;
        comment = trim(comment);
        // strip leading '*' decoration common in block comments
        while (!comment.empty() && comment.front() == '*')
            comment = trim(comment.substr(1));
        if (!comment.empty())
            out.push_back(comment);
        if (eol == std::string_view::npos)
            break;
        pos = eol + 1;
    }
    return out;
}

} // namespace

std::optional<CompileSpec> extract_compile_spec(std::string_view source,
                                                std::string_view local_filename) {
    for (const std::string& comment : comment_lines(source)) {
        auto tokens = tokenize(comment);
        for (size_t i = 0; i < tokens.size(); ++i) {
            if (!is_compiler_token(tokens[i]))
                continue;
            // a real compile command names a source file
            bool has_source = false;
            for (size_t j = i + 1; j < tokens.size(); ++j)
                if (is_source_file_token(tokens[j]))
                    has_source = true;
            if (!has_source)
                continue;

            std::string command;
            for (size_t j = i; j < tokens.size(); ++j) {
                if (!command.empty())
                    command += ' ';
                command += is_source_file_token(tokens[j]) ? std::string(local_filename)
                                                           : tokens[j];
            }
            return CompileSpec{command, comment};
        }
    }
    return std::nullopt;
}

} // namespace ptpipe::exploiter
