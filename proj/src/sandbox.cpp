#include "ledgerone/sandbox.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <fstream>
#include <vector>

#include "ledgerone/errors.hpp"

namespace ledgerone {

namespace {

struct Capture {
    std::string data;
    bool truncated = false;
};

void append_capped(Capture& cap, const char* buf, ssize_t n, std::size_t limit) {
    if (cap.truncated) return;
    const std::size_t room = limit > cap.data.size() ? limit - cap.data.size() : 0;
    if (static_cast<std::size_t>(n) <= room) {
        cap.data.append(buf, static_cast<std::size_t>(n));
    } else {
        cap.data.append(buf, room);
        cap.data += "\n[output truncated]";
        cap.truncated = true;
    }
}

/// Fork/exec with piped stdout/stderr, process-group kill on timeout.
ExecutionResult run_process(const std::vector<std::string>& argv, const std::filesystem::path& cwd,
                            std::chrono::milliseconds timeout, std::size_t output_limit) {
    int out_pipe[2], err_pipe[2];
    if (pipe(out_pipe) != 0 || pipe(err_pipe) != 0) {
        throw SandboxError("pipe() failed");
    }

    const auto start = std::chrono::steady_clock::now();
    const pid_t pid = fork();
    if (pid < 0) throw SandboxError("fork() failed");

    if (pid == 0) {
        setpgid(0, 0);
        dup2(out_pipe[1], STDOUT_FILENO);
        dup2(err_pipe[1], STDERR_FILENO);
        close(out_pipe[0]);
        close(out_pipe[1]);
        close(err_pipe[0]);
        close(err_pipe[1]);
        if (chdir(cwd.c_str()) != 0) _exit(127);
        std::vector<char*> cargv;
        for (const auto& a : argv) cargv.push_back(const_cast<char*>(a.c_str()));
        cargv.push_back(nullptr);
        execvp(cargv[0], cargv.data());
        _exit(127);
    }

    close(out_pipe[1]);
    close(err_pipe[1]);
    fcntl(out_pipe[0], F_SETFL, O_NONBLOCK);
    fcntl(err_pipe[0], F_SETFL, O_NONBLOCK);

    ExecutionResult result;
    Capture out_cap, err_cap;
    bool out_open = true, err_open = true;
    bool killed = false;
    const auto deadline = start + timeout;

    auto drain = [&](int fd, Capture& cap, bool& open_flag) {
        char buf[4096];
        while (open_flag) {
            const ssize_t n = read(fd, buf, sizeof(buf));
            if (n > 0) {
                append_capped(cap, buf, n, output_limit);
            } else if (n == 0) {
                open_flag = false;
            } else {
                break;  // EAGAIN or error; retry on the next poll round
            }
        }
    };

    int status = 0;
    bool exited = false;
    while (!exited) {
        struct pollfd fds[2] = {{out_pipe[0], POLLIN, 0}, {err_pipe[0], POLLIN, 0}};
        poll(fds, 2, 20);
        drain(out_pipe[0], out_cap, out_open);
        drain(err_pipe[0], err_cap, err_open);

        const pid_t w = waitpid(pid, &status, WNOHANG);
        if (w == pid) {
            exited = true;
        } else if (!killed && std::chrono::steady_clock::now() >= deadline) {
            kill(-pid, SIGKILL);
            kill(pid, SIGKILL);
            killed = true;
        }
    }
    // Final drain after exit.
    drain(out_pipe[0], out_cap, out_open);
    drain(err_pipe[0], err_cap, err_open);
    close(out_pipe[0]);
    close(err_pipe[0]);

    result.stdout_text = out_cap.data;
    result.stderr_text = err_cap.data;
    result.timed_out = killed;
    if (killed) {
        result.exit_code = -SIGKILL;
    } else if (WIFEXITED(status)) {
        result.exit_code = WEXITSTATUS(status);
    } else if (WIFSIGNALED(status)) {
        result.exit_code = -WTERMSIG(status);
    }
    result.duration = std::chrono::duration_cast<std::chrono::milliseconds>(
        std::chrono::steady_clock::now() - start);
    return result;
}

std::string shell_quote(const std::string& s) {
    std::string out = "'";
    for (char c : s) {
        if (c == '\'') out += "'\\''";
        else out += c;
    }
    out += "'";
    return out;
}

}  // namespace

std::string ExecutionResult::render() const {
    std::string out = "exit code: " + std::to_string(exit_code);
    if (timed_out) out += " (killed: timeout)";
    out += "\n";
    if (!stdout_text.empty()) out += "stdout:\n" + stdout_text + "\n";
    if (!stderr_text.empty()) out += "stderr:\n" + stderr_text + "\n";
    if (stdout_text.empty() && stderr_text.empty()) out += "(no output)\n";
    return out;
}

SubprocessSandbox::SubprocessSandbox(std::filesystem::path workspace, std::size_t output_limit)
    : workspace_(std::move(workspace)), output_limit_(output_limit) {
    namespace fs = std::filesystem;
    if (!fs::exists(workspace_)) fs::create_directories(workspace_);
    scratch_ = workspace_.parent_path() / (workspace_.filename().string() + ".scratch");
    fs::create_directories(scratch_);
}

ExecutionResult SubprocessSandbox::execute_program(const std::string& code, const std::string& language,
                                                   std::chrono::milliseconds timeout) {
    namespace fs = std::filesystem;
    if (language == "python" || language == "py" || language == "python3") {
        const fs::path file = scratch_ / ("prog_" + std::to_string(program_counter_++) + ".py");
        std::ofstream(file) << code;
        return run_process({"python3", file.string()}, workspace_, timeout, output_limit_);
    }
    if (language == "sh" || language == "bash" || language == "shell") {
        return run_process({"/bin/sh", "-c", code}, workspace_, timeout, output_limit_);
    }
    ExecutionResult r;
    r.exit_code = 1;
    r.stderr_text = "unsupported language: " + language;
    return r;
}

ExecutionResult SubprocessSandbox::execute_command(const std::string& command,
                                                   std::chrono::milliseconds timeout) {
    return run_process({"/bin/sh", "-c", command}, workspace_, timeout, output_limit_);
}

ContainerSandbox::ContainerSandbox(std::filesystem::path workspace, std::string image)
    : workspace_(std::move(workspace)), image_(std::move(image)), host_(workspace_) {
    auto probe = host_.execute_command("docker info >/dev/null 2>&1", std::chrono::seconds(10));
    if (probe.exit_code != 0) {
        throw SandboxError("container runtime unavailable: docker probe failed");
    }
}

ExecutionResult ContainerSandbox::execute_program(const std::string& code, const std::string& language,
                                                  std::chrono::milliseconds timeout) {
    namespace fs = std::filesystem;
    const fs::path file = workspace_ / ".container_prog";
    std::ofstream(file) << code;
    std::string runner = (language == "sh" || language == "bash") ? "sh" : "python3";
    return execute_command(runner + " /work/.container_prog", timeout);
}

ExecutionResult ContainerSandbox::execute_command(const std::string& command,
                                                  std::chrono::milliseconds timeout) {
    const std::string docker_cmd = "docker run --rm --network none -v " +
                                   shell_quote(workspace_.string() + ":/work") + " -w /work " +
                                   shell_quote(image_) + " sh -c " + shell_quote(command);
    return host_.execute_command(docker_cmd, timeout);
}

}  // namespace ledgerone
