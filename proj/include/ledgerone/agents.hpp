#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "ledgerone/markdown.hpp"
#include "ledgerone/message.hpp"
#include "ledgerone/model.hpp"
#include "ledgerone/sandbox.hpp"
#include "ledgerone/simenv.hpp"
#include "ledgerone/workspace.hpp"

namespace ledgerone {

/// Base class of the four worker agents. Each instance is owned by exactly
/// one task loop.
class WorkerAgent {
public:
    virtual ~WorkerAgent() = default;

    const AgentDescription& description() const { return desc_; }
    const std::string& name() const { return desc_.name; }
    std::size_t context_size() const { return context_.size(); }

    /// Receives an instruction as a user message, produces a reply. May
    /// throw; the Orchestrator turns agent failures into observations.
    std::string handle(const std::string& instruction);

    /// Clears context and restores any stateful environment to its
    /// task-start state.
    virtual void reset() { context_.clear(); }

    /// Digest of observable state; equal digests mean equal state.
    virtual std::string state_fingerprint() const = 0;

protected:
    explicit WorkerAgent(AgentDescription desc) : desc_(std::move(desc)) {}
    virtual std::string respond(const std::string& instruction) = 0;

    AgentDescription desc_;
    std::vector<ChatMessage> context_;
};

/// Result of grounding a textual element description against a page's
/// marks: either an element id, or a recommendation to scroll because the
/// description matches only offscreen content.
struct GroundingResult {
    std::optional<int> element_id;
    bool scroll_recommended = false;
    std::string note;
};

/// Set-of-marks grounding. The model sees the mark list plus the offscreen
/// summary so it can choose to scroll instead. One retry on a bad id, then
/// an ungroundable error (element_id empty, note set).
GroundingResult ground_element(const PageReport& report, const std::string& description,
                               CompletionClient& client, CallRecorder* recorder = nullptr);

/// Browser operator: maps each request to exactly one action via a single
/// schema-constrained model call, applies it, and reports the new page
/// state. Reading actions answer over the full document and mutate nothing.
class WebSurfer : public WorkerAgent {
public:
    WebSurfer(CompletionClient& client, const SimSite& site, CallRecorder* recorder = nullptr,
              ViewportConfig vp = {});

    PageReport act(const std::string& request);

    void reset() override;
    std::string state_fingerprint() const override;
    const SiteState& state() const { return state_; }
    PageReport current_report() const;

protected:
    std::string respond(const std::string& instruction) override;

private:
    CompletionClient& client_;
    const SimSite& site_;
    CallRecorder* recorder_;
    ViewportConfig vp_;
    SiteState state_;
    SiteState start_state_;
    std::string last_answer_;  // reading-action output for the current reply
};

struct FileView {
    std::filesystem::path path;
    std::string rendered_markdown;
    int page_index = 0;
    int page_count = 1;
    enum class Kind { file, directory_listing } kind = Kind::file;

    std::string page_text(int lines_per_page = 40) const;
    std::string render(int lines_per_page = 40) const;
};

/// Read-only markdown preview of a path inside the task workspace.
/// Throws on paths outside the workspace (access denied) or missing files.
FileView filesurfer_open(const std::filesystem::path& path, const std::filesystem::path& workspace_root,
                         const ConverterRegistry& registry);

/// Read-only file preview agent: maps requests to open/list/page actions
/// with one schema-constrained model call, never mutating the file system.
class FileSurfer : public WorkerAgent {
public:
    FileSurfer(CompletionClient& client, std::filesystem::path workspace_root,
               CallRecorder* recorder = nullptr);

    void reset() override;
    std::string state_fingerprint() const override;

protected:
    std::string respond(const std::string& instruction) override;

private:
    CompletionClient& client_;
    std::filesystem::path workspace_root_;
    CallRecorder* recorder_;
    ConverterRegistry registry_ = ConverterRegistry::with_defaults();
    std::optional<FileView> current_;
};

/// Authors complete standalone programs and debugs previous ones from
/// console output. Every fix is a full re-listing.
class Coder : public WorkerAgent {
public:
    explicit Coder(CompletionClient& client, CallRecorder* recorder = nullptr);

    void reset() override;
    std::string state_fingerprint() const override;

protected:
    std::string respond(const std::string& instruction) override;

private:
    CompletionClient& client_;
    CallRecorder* recorder_;
};

/// Deterministic executor: runs the fenced code block (or shell command)
/// found in the instruction. No model calls.
class ComputerTerminal : public WorkerAgent {
public:
    ComputerTerminal(Sandbox& sandbox, std::chrono::milliseconds timeout = std::chrono::seconds(30));

    void reset() override;
    std::string state_fingerprint() const override;

protected:
    std::string respond(const std::string& instruction) override;

private:
    Sandbox& sandbox_;
    std::chrono::milliseconds timeout_;
    WorkspaceSnapshot start_snapshot_;
};

/// First fenced code block in a text, as (language, code).
std::optional<std::pair<std::string, std::string>> extract_fenced_block(const std::string& text);

}  // namespace ledgerone
