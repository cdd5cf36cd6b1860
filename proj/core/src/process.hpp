#pragma once

#include <optional>
#include <string>
#include <vector>

namespace ptpipe::proc {

struct RunResult {
    int exit_code = -1;
    std::string out;
    std::string err;
};

/// Looks for an executable by name on PATH. Absolute/relative paths with a
/// slash are checked directly.
std::optional<std::string> find_executable(const std::string& name);

/// fork/exec with stdout and stderr captured. argv[0] is the binary.
/// A non-empty workdir is entered by the child before exec.
RunResult run_process(const std::vector<std::string>& argv, const std::string& workdir = "");

} // namespace ptpipe::proc
