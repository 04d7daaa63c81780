#pragma once

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <string>

namespace ledgerone {

struct ExecutionResult {
    std::string stdout_text;
    std::string stderr_text;
    int exit_code = 0;
    std::chrono::milliseconds duration{0};
    bool timed_out = false;

    std::string render() const;
};

/// Execution contract: run a program or shell command with the task
/// workspace as the working directory, under a wall-clock timeout.
class Sandbox {
public:
    virtual ~Sandbox() = default;
    virtual ExecutionResult execute_program(const std::string& code, const std::string& language,
                                            std::chrono::milliseconds timeout) = 0;
    virtual ExecutionResult execute_command(const std::string& command,
                                            std::chrono::milliseconds timeout) = 0;
    virtual std::filesystem::path workspace() const = 0;
};

/// Default backend: a subprocess jailed to the task workspace. Timed-out
/// processes are killed (whole process group); outputs are truncated at a
/// byte limit with an explicit marker.
class SubprocessSandbox : public Sandbox {
public:
    explicit SubprocessSandbox(std::filesystem::path workspace, std::size_t output_limit = 64 * 1024);

    ExecutionResult execute_program(const std::string& code, const std::string& language,
                                    std::chrono::milliseconds timeout) override;
    ExecutionResult execute_command(const std::string& command,
                                    std::chrono::milliseconds timeout) override;
    std::filesystem::path workspace() const override { return workspace_; }

private:
    std::filesystem::path workspace_;
    std::filesystem::path scratch_;  // program files live outside the workspace
    std::size_t output_limit_;
    int program_counter_ = 0;
};

/// Container-runtime backend with the same contract. Requires a working
/// `docker` binary; constructing one where docker is unavailable throws
/// SandboxError (infrastructure error, distinct from program failure).
class ContainerSandbox : public Sandbox {
public:
    ContainerSandbox(std::filesystem::path workspace, std::string image);

    ExecutionResult execute_program(const std::string& code, const std::string& language,
                                    std::chrono::milliseconds timeout) override;
    ExecutionResult execute_command(const std::string& command,
                                    std::chrono::milliseconds timeout) override;
    std::filesystem::path workspace() const override { return workspace_; }

private:
    std::filesystem::path workspace_;
    std::string image_;
    SubprocessSandbox host_;  // docker invocations run on the host
};

}  // namespace ledgerone
