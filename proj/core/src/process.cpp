#include "process.hpp"

#include <fcntl.h>
#include <poll.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <stdexcept>

namespace ptpipe::proc {

namespace fs = std::filesystem;

std::optional<std::string> find_executable(const std::string& name) {
    if (name.find('/') != std::string::npos) {
        if (::access(name.c_str(), X_OK) == 0)
            return name;
        return std::nullopt;
    }
    const char* path_env = std::getenv("PATH");
    if (!path_env)
        return std::nullopt;
    std::string path(path_env);
    size_t start = 0;
    while (start <= path.size()) {
        size_t colon = path.find(':', start);
        std::string dir = path.substr(start, colon == std::string::npos ? std::string::npos
                                                                        : colon - start);
        if (!dir.empty()) {
            fs::path candidate = fs::path(dir) / name;
            std::error_code ec;
            if (fs::exists(candidate, ec) && ::access(candidate.c_str(), X_OK) == 0)
                return candidate.string();
        }
        if (colon == std::string::npos)
            break;
        start = colon + 1;
    }
    return std::nullopt;
}

namespace {

// Drains both pipes concurrently so a chatty stderr cannot deadlock stdout.
void drain_pipes(int out_fd, int err_fd, std::string& out, std::string& err) {
    struct Stream {
        int fd;
        std::string* sink;
        bool open = true;
    };
    Stream streams[2] = {{out_fd, &out}, {err_fd, &err}};
    char buf[4096];
    while (streams[0].open || streams[1].open) {
        struct pollfd fds[2];
        nfds_t n = 0;
        for (auto& s : streams)
            if (s.open)
                fds[n++] = {s.fd, POLLIN, 0};
        if (::poll(fds, n, -1) < 0) {
            if (errno == EINTR)
                continue;
            break;
        }
        nfds_t i = 0;
        for (auto& s : streams) {
            if (!s.open)
                continue;
            const auto& p = fds[i++];
            if (p.revents & (POLLIN | POLLHUP)) {
                ssize_t got = ::read(s.fd, buf, sizeof buf);
                if (got > 0)
                    s.sink->append(buf, static_cast<size_t>(got));
                else
                    s.open = false;
            } else if (p.revents & (POLLERR | POLLNVAL)) {
                s.open = false;
            }
        }
    }
}

} // namespace

RunResult run_process(const std::vector<std::string>& argv, const std::string& workdir) {
    if (argv.empty())
        throw std::invalid_argument("run_process: empty argv");

    int out_pipe[2];
    int err_pipe[2];
    if (::pipe(out_pipe) != 0 || ::pipe(err_pipe) != 0)
        throw std::runtime_error("pipe() failed");

    pid_t pid = ::fork();
    if (pid < 0)
        throw std::runtime_error("fork() failed");

    if (pid == 0) {
        if (!workdir.empty() && ::chdir(workdir.c_str()) != 0)
            ::_exit(126);
        ::dup2(out_pipe[1], STDOUT_FILENO);
        ::dup2(err_pipe[1], STDERR_FILENO);
        ::close(out_pipe[0]);
        ::close(out_pipe[1]);
        ::close(err_pipe[0]);
        ::close(err_pipe[1]);

        std::vector<char*> cargv;
        cargv.reserve(argv.size() + 1);
        for (const auto& a : argv)
            cargv.push_back(const_cast<char*>(a.c_str()));
        cargv.push_back(nullptr);
        ::execvp(cargv[0], cargv.data());
        // exec failed
        ::_exit(127);
    }

    ::close(out_pipe[1]);
    ::close(err_pipe[1]);

    RunResult result;
    drain_pipes(out_pipe[0], err_pipe[0], result.out, result.err);
    ::close(out_pipe[0]);
    ::close(err_pipe[0]);

    int status = 0;
    if (::waitpid(pid, &status, 0) < 0)
        throw std::runtime_error("waitpid() failed");
    if (WIFEXITED(status))
        result.exit_code = WEXITSTATUS(status);
    else if (WIFSIGNALED(status))
        result.exit_code = 128 + WTERMSIG(status);
    return result;
}

} // namespace ptpipe::proc
