#include "ledgerone/message.hpp"

#include <chrono>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <utility>

namespace ledgerone {

std::string to_string(Role role) {
    switch (role) {
        case Role::system: return "system";
        case Role::user: return "user";
        case Role::assistant: return "assistant";
        case Role::tool: return "tool";
    }
    return "user";
}

Role role_from_string(const std::string& s) {
    if (s == "system") return Role::system;
    if (s == "user") return Role::user;
    if (s == "assistant") return Role::assistant;
    if (s == "tool") return Role::tool;
    throw std::invalid_argument("unknown role: " + s);
}

ContentBlock ContentBlock::make_text(std::string t) {
    ContentBlock b;
    b.kind = Kind::text;
    b.text = std::move(t);
    return b;
}

ContentBlock ContentBlock::make_image_ref(std::string artifact_id, std::string media_type) {
    ContentBlock b;
    b.kind = Kind::image_ref;
    b.text = std::move(artifact_id);
    b.media_type = std::move(media_type);
    return b;
}

nlohmann::json ContentBlock::to_json() const {
    if (kind == Kind::text) {
        return {{"type", "text"}, {"text", text}};
    }
    return {{"type", "image_ref"}, {"artifact", text}, {"media_type", media_type}};
}

ContentBlock ContentBlock::from_json(const nlohmann::json& j) {
    ContentBlock b;
    const std::string type = j.at("type").get<std::string>();
    if (type == "text") {
        b.kind = Kind::text;
        b.text = j.at("text").get<std::string>();
    } else if (type == "image_ref") {
        b.kind = Kind::image_ref;
        b.text = j.at("artifact").get<std::string>();
        b.media_type = j.value("media_type", "");
    } else {
        throw std::invalid_argument("unknown content block type: " + type);
    }
    return b;
}

ChatMessage ChatMessage::text(Role role, std::string source, std::string content) {
    ChatMessage m;
    m.role = role;
    m.source = std::move(source);
    m.blocks.push_back(ContentBlock::make_text(std::move(content)));
    return m;
}

std::string ChatMessage::joined_text() const {
    std::string out;
    for (const auto& b : blocks) {
        if (!out.empty()) out += "\n";
        if (b.kind == ContentBlock::Kind::text) {
            out += b.text;
        } else {
            out += "[image: " + b.text + "]";
        }
    }
    return out;
}

nlohmann::json ChatMessage::to_json(bool include_wallclock) const {
    nlohmann::json blocks_json = nlohmann::json::array();
    for (const auto& b : blocks) blocks_json.push_back(b.to_json());
    nlohmann::json j = {
        {"role", to_string(role)},
        {"source", source},
        {"blocks", blocks_json},
        {"tick", tick},
    };
    if (include_wallclock) j["wallclock_ms"] = wallclock_ms;
    return j;
}

ChatMessage ChatMessage::from_json(const nlohmann::json& j) {
    ChatMessage m;
    m.role = role_from_string(j.at("role").get<std::string>());
    m.source = j.at("source").get<std::string>();
    for (const auto& bj : j.at("blocks")) m.blocks.push_back(ContentBlock::from_json(bj));
    m.tick = j.value("tick", std::uint64_t{0});
    m.wallclock_ms = j.value("wallclock_ms", std::int64_t{0});
    return m;
}

Transcript::Transcript(std::string task_id) : task_id_(std::move(task_id)) {}

const ChatMessage& Transcript::append(Role role, const std::string& source, const std::string& text) {
    return append(ChatMessage::text(role, source, text));
}

const ChatMessage& Transcript::append(ChatMessage msg) {
    if (msg.blocks.empty()) {
        throw std::invalid_argument("message content must be non-empty");
    }
    msg.tick = next_tick_++;
    msg.wallclock_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                           std::chrono::system_clock::now().time_since_epoch())
                           .count();
    messages_.push_back(std::move(msg));
    ++revision_;
    return messages_.back();
}

void Transcript::clear_and_restart(const std::string& marker) {
    messages_.clear();
    ++revision_;
    append(Role::system, "transcript", "[reset] " + marker);
}

std::string Transcript::full_text() const {
    std::string out;
    for (const auto& m : messages_) {
        out += "[" + to_string(m.role) + " " + m.source + "] " + m.joined_text() + "\n";
    }
    return out;
}

std::string Transcript::to_jsonl(bool include_wallclock) const {
    std::ostringstream os;
    std::size_t seq = 0;
    for (const auto& m : messages_) {
        nlohmann::json j = m.to_json(include_wallclock);
        j["seq"] = seq++;
        os << j.dump() << "\n";
    }
    return os.str();
}

void Transcript::write_jsonl(const std::filesystem::path& path) const {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open transcript file: " + path.string());
    out << to_jsonl();
}

}  // namespace ledgerone
