#include <iostream>
#include <string>
#include <vector>

#include "ptpipe/errors.hpp"
#include "ptpipe/exploiter.hpp"
#include "ptpipe/orchestrator.hpp"

namespace {

// Explicit opt-in action, never part of a pipeline run: runs the compile
// command extracted from an exploit's comments and reports the exit status.
int run_compile(const std::vector<std::string>& args) {
    if (args.size() != 1) {
        std::cerr << "usage: ptpipe compile <exploit-source-file>\n";
        return 2;
    }
    try {
        std::string transcript;
        int code = ptpipe::exploiter::run_compile_command(args[0], &transcript);
        std::cout << transcript;
        if (code < 0) {
            std::cout << "\n";
            return 1;
        }
        std::cout << "compiler exited with code " << code << "\n";
        return code == 0 ? 0 : 1;
    } catch (const ptpipe::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
}

} // namespace

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);

    if (!args.empty() && args[0] == "compile")
        return run_compile({args.begin() + 1, args.end()});

    try {
        ptpipe::orchestrator::RunConfig config = ptpipe::orchestrator::parse_cli(args);
        auto summary = ptpipe::orchestrator::run_pipeline(config);
        std::cout << "report: " << (summary.project_dir / "report.md").string() << "\n";
        return 0; // degraded runs still complete
    } catch (const ptpipe::orchestrator::HelpRequested& help) {
        std::cout << help.what();
        return 0;
    } catch (const ptpipe::UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 2;
    } catch (const ptpipe::Error& e) {
        std::cerr << "fatal: " << e.what() << "\n";
        return 3;
    }
}
