#pragma once

#include <chrono>
#include <filesystem>
#include <map>
#include <string>

namespace ledgerone {

/// Content digest over a directory tree: sorted relative paths plus file
/// bytes. Equal digests mean equal observable workspace state.
std::string fingerprint_directory(const std::filesystem::path& root);

/// In-memory snapshot of a (small) workspace, used to restore task-start
/// state on replan resets.
class WorkspaceSnapshot {
public:
    static WorkspaceSnapshot capture(const std::filesystem::path& root);
    void restore(const std::filesystem::path& root) const;

private:
    std::map<std::string, std::string> files_;  // relpath -> bytes
};

/// Injectable clock so termination logic is testable.
class Clock {
public:
    virtual ~Clock() = default;
    virtual std::chrono::milliseconds now() = 0;
};

class SteadyClock : public Clock {
public:
    std::chrono::milliseconds now() override;
};

/// Test clock: advances only when told, optionally by a fixed step per read.
class ManualClock : public Clock {
public:
    std::chrono::milliseconds now() override {
        auto t = current_;
        current_ += step_per_read_;
        return t;
    }
    void advance(std::chrono::milliseconds d) { current_ += d; }
    void set_step_per_read(std::chrono::milliseconds d) { step_per_read_ = d; }

private:
    std::chrono::milliseconds current_{0};
    std::chrono::milliseconds step_per_read_{0};
};

}  // namespace ledgerone
