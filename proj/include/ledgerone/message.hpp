#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace ledgerone {

enum class Role { system, user, assistant, tool };

std::string to_string(Role role);
Role role_from_string(const std::string& s);

/// One element of a message body: either text or a reference to a stored
/// image artifact (opaque identifier plus media type).
struct ContentBlock {
    enum class Kind { text, image_ref };
    Kind kind = Kind::text;
    std::string text;        // text content, or artifact identifier for image_ref
    std::string media_type;  // only for image_ref

    static ContentBlock make_text(std::string t);
    static ContentBlock make_image_ref(std::string artifact_id, std::string media_type);

    nlohmann::json to_json() const;
    static ContentBlock from_json(const nlohmann::json& j);
};

struct ChatMessage {
    Role role = Role::user;
    std::string source;  // agent name
    std::vector<ContentBlock> blocks;
    std::uint64_t tick = 0;      // monotonic per-transcript tick
    std::int64_t wallclock_ms = 0;

    static ChatMessage text(Role role, std::string source, std::string content);

    /// All text blocks joined with newlines. Image refs contribute a placeholder.
    std::string joined_text() const;

    nlohmann::json to_json(bool include_wallclock = true) const;
    static ChatMessage from_json(const nlohmann::json& j);
};

/// Append-only ordered record of all inter-agent and model communication.
/// Operations may add messages or clear-and-restart (recording a reset
/// marker); history is never edited in place.
class Transcript {
public:
    explicit Transcript(std::string task_id = "");

    const std::string& task_id() const { return task_id_; }
    std::uint64_t revision() const { return revision_; }
    std::size_t size() const { return messages_.size(); }
    const std::vector<ChatMessage>& messages() const { return messages_; }

    /// Appends a message, assigning the next tick and the wall clock.
    const ChatMessage& append(Role role, const std::string& source, const std::string& text);
    const ChatMessage& append(ChatMessage msg);

    /// Clears the conversation and records a reset marker. Ticks keep
    /// increasing so timestamps stay non-decreasing across the reset.
    void clear_and_restart(const std::string& marker);

    std::string full_text() const;

    /// One line per message: {seq, role, source, blocks, tick, wallclock}.
    std::string to_jsonl(bool include_wallclock = true) const;
    void write_jsonl(const std::filesystem::path& path) const;

private:
    std::string task_id_;
    std::vector<ChatMessage> messages_;
    std::uint64_t revision_ = 0;
    std::uint64_t next_tick_ = 0;
};

/// Roster entry the Orchestrator plans against.
struct AgentDescription {
    std::string name;
    std::string description;
    std::vector<std::string> capabilities;  // tags: web-browsing, coding, file-handling, execution
};

}  // namespace ledgerone
