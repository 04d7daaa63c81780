#include "ledgerone/agents.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>
#include <sstream>

#include "ledgerone/errors.hpp"
#include "ledgerone/md5.hpp"

namespace ledgerone {

namespace {

bool all_digits(const std::string& s) {
    return !s.empty() && std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isdigit(c); });
}

std::string read_file(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

const ResponseSchema kBrowserActionSchema{
    "browser_action",
    {{"kind", SchemaField::Type::string},
     {"target", SchemaField::Type::string},
     {"argument", SchemaField::Type::string}}};

const ResponseSchema kGroundSchema{
    "ground_element",
    {{"decision", SchemaField::Type::string}, {"element_id", SchemaField::Type::integer}}};

const ResponseSchema kFileActionSchema{
    "file_action",
    {{"action", SchemaField::Type::string},
     {"path", SchemaField::Type::string},
     {"page", SchemaField::Type::integer}}};

}  // namespace

std::string WorkerAgent::handle(const std::string& instruction) {
    context_.push_back(ChatMessage::text(Role::user, "orchestrator", instruction));
    std::string reply = respond(instruction);
    context_.push_back(ChatMessage::text(Role::assistant, desc_.name, reply));
    return reply;
}

GroundingResult ground_element(const PageReport& report, const std::string& description,
                               CompletionClient& client, CallRecorder* recorder) {
    if (report.marks.empty()) {
        return {std::nullopt, false, "ungroundable: page has no interactive elements in view"};
    }

    std::string prompt = "Pick the element matching this description: " + description + "\nMarks:\n";
    for (const auto& m : report.marks) {
        prompt += "[" + std::to_string(m.element_id) + "] " + m.role + " \"" + m.label + "\"\n";
    }
    prompt += "Screenshot: " + report.screenshot_ref + "\n";
    if (!report.offscreen_summary.empty()) {
        prompt += report.offscreen_summary +
                  "\nIf the description matches only offscreen content, answer decision=\"scroll\".\n";
    }

    std::set<int> valid_ids;
    for (const auto& m : report.marks) valid_ids.insert(m.element_id);

    std::vector<ChatMessage> messages{ChatMessage::text(Role::user, "websurfer", prompt)};
    for (int attempt = 0; attempt < 2; ++attempt) {
        nlohmann::json obj;
        try {
            obj = complete_structured(client, messages, kGroundSchema, recorder);
        } catch (const SchemaError& e) {
            return {std::nullopt, false, std::string("ungroundable: ") + e.what()};
        }
        const std::string decision = obj.at("decision").get<std::string>();
        if (decision == "scroll") {
            return {std::nullopt, true, "target appears outside the viewport; scroll to reach it"};
        }
        const int id = obj.at("element_id").get<int>();
        if (valid_ids.count(id)) return {id, false, ""};
        messages.push_back(ChatMessage::text(
            Role::user, "websurfer",
            "Element id " + std::to_string(id) + " does not exist on this page. Pick a listed id."));
    }
    return {std::nullopt, false, "ungroundable: model named a non-existent element twice"};
}

WebSurfer::WebSurfer(CompletionClient& client, const SimSite& site, CallRecorder* recorder,
                     ViewportConfig vp)
    : WorkerAgent({"WebSurfer",
                   "Operates a web browser: visits URLs, searches, scrolls, clicks, types, and reads pages.",
                   {"web-browsing"}}),
      client_(client),
      site_(site),
      recorder_(recorder),
      vp_(vp),
      state_(initial_state(site)),
      start_state_(state_) {}

PageReport WebSurfer::current_report() const { return report_for(site_, state_, vp_); }

PageReport WebSurfer::act(const std::string& request) {
    last_answer_.clear();

    std::vector<ChatMessage> messages;
    messages.push_back(ChatMessage::text(
        Role::system, "websurfer",
        "Map the request to exactly one browser action. Kinds: visit_url, web_search, scroll_up, "
        "scroll_down, click, type_text, summarize_page, answer_question, history_back. Use target for "
        "an element id or description; argument for URL, query, text, or question. Leave unused "
        "fields empty."));
    for (const auto& m : context_) messages.push_back(m);
    messages.push_back(ChatMessage::text(Role::user, "orchestrator", request));

    nlohmann::json obj;
    try {
        obj = complete_structured(client_, std::move(messages), kBrowserActionSchema, recorder_);
    } catch (const SchemaError& e) {
        PageReport report = current_report();
        report.note = std::string("action selection failed: ") + e.what();
        return report;
    }

    const auto kind = browser_action_kind_from_string(obj.at("kind").get<std::string>());
    if (!kind) {
        PageReport report = current_report();
        report.note = "unknown action kind: " + obj.at("kind").get<std::string>();
        return report;
    }

    BrowserAction action;
    action.kind = *kind;
    const std::string target = obj.value("target", "");
    const std::string argument = obj.value("argument", "");
    if (!argument.empty()) action.argument = argument;

    if (action.kind == BrowserActionKind::click || action.kind == BrowserActionKind::type_text) {
        const PageReport before = current_report();
        std::optional<int> element_id;
        if (all_digits(target)) {
            const int id = std::stoi(target);
            const bool in_marks = std::any_of(before.marks.begin(), before.marks.end(),
                                              [&](const Mark& m) { return m.element_id == id; });
            if (in_marks) element_id = id;
        }
        if (!element_id) {
            const GroundingResult g = ground_element(before, target, client_, recorder_);
            if (g.scroll_recommended || !g.element_id) {
                PageReport report = before;
                report.note = g.note;
                return report;
            }
            element_id = g.element_id;
        }
        action.target = element_id;
    }

    auto [next, report] = apply_action(site_, state_, action, vp_);
    state_ = std::move(next);

    if (action.kind == BrowserActionKind::summarize_page ||
        action.kind == BrowserActionKind::answer_question) {
        // Reading actions operate over the full document, not just the viewport.
        std::string question = action.kind == BrowserActionKind::answer_question
                                   ? *action.argument
                                   : std::string("Summarize this page.");
        std::vector<ChatMessage> read_messages{
            ChatMessage::text(Role::user, "websurfer",
                              question + "\nFull document:\n" + full_page_text(site_, state_))};
        ModelRequest read_request;
        read_request.messages = std::move(read_messages);
        ModelResponse resp = complete(client_, read_request, recorder_);
        last_answer_ = resp.message.joined_text();
        report.note = last_answer_;
    }
    return report;
}

std::string WebSurfer::respond(const std::string& instruction) {
    const PageReport report = act(instruction);
    if (!last_answer_.empty()) {
        return last_answer_ + "\n" + report.render();
    }
    return report.render();
}

void WebSurfer::reset() {
    WorkerAgent::reset();
    state_ = start_state_;
    last_answer_.clear();
}

std::string WebSurfer::state_fingerprint() const { return fingerprint(state_); }

std::string FileView::page_text(int lines_per_page) const {
    std::istringstream is(rendered_markdown);
    std::string line;
    std::vector<std::string> lines;
    while (std::getline(is, line)) lines.push_back(line);
    const int start = page_index * lines_per_page;
    std::string out;
    for (int i = start; i < static_cast<int>(lines.size()) && i < start + lines_per_page; ++i) {
        out += lines[i] + "\n";
    }
    return out;
}

std::string FileView::render(int lines_per_page) const {
    std::string out = "Path: " + path.string() + "\n";
    out += kind == Kind::directory_listing ? "(directory listing)\n" : "";
    out += "Page " + std::to_string(page_index + 1) + " of " + std::to_string(page_count) + "\n";
    out += "---\n" + page_text(lines_per_page);
    return out;
}

FileView filesurfer_open(const std::filesystem::path& path, const std::filesystem::path& workspace_root,
                         const ConverterRegistry& registry) {
    namespace fs = std::filesystem;
    const fs::path root = fs::weakly_canonical(workspace_root);
    const fs::path resolved = fs::weakly_canonical(path.is_absolute() ? path : workspace_root / path);

    const std::string root_s = root.generic_string();
    const std::string resolved_s = resolved.generic_string();
    if (resolved_s != root_s && resolved_s.rfind(root_s + "/", 0) != 0) {
        throw std::runtime_error("access denied: " + path.string() + " is outside the workspace");
    }
    if (!fs::exists(resolved)) {
        throw std::runtime_error("not found: " + path.string());
    }

    FileView view;
    view.path = fs::relative(resolved, root);
    if (fs::is_directory(resolved)) {
        view.kind = FileView::Kind::directory_listing;
        std::vector<std::string> entries;
        for (const auto& entry : fs::directory_iterator(resolved)) {
            entries.push_back(entry.path().filename().string() + (entry.is_directory() ? "/" : ""));
        }
        std::sort(entries.begin(), entries.end());
        std::string md = "# " + view.path.string() + "\n";
        for (const auto& e : entries) md += "- " + e + "\n";
        view.rendered_markdown = md;
    } else {
        view.kind = FileView::Kind::file;
        view.rendered_markdown = registry.convert(resolved, read_file(resolved));
    }

    const auto line_count = static_cast<int>(std::count(view.rendered_markdown.begin(),
                                                        view.rendered_markdown.end(), '\n')) +
                            1;
    view.page_count = std::max(1, (line_count + 39) / 40);
    return view;
}

FileSurfer::FileSurfer(CompletionClient& client, std::filesystem::path workspace_root,
                       CallRecorder* recorder)
    : WorkerAgent({"FileSurfer",
                   "Read-only markdown preview of workspace files and directories, with pagination.",
                   {"file-handling"}}),
      client_(client),
      workspace_root_(std::move(workspace_root)),
      recorder_(recorder) {}

std::string FileSurfer::respond(const std::string& instruction) {
    std::vector<ChatMessage> messages;
    messages.push_back(ChatMessage::text(
        Role::system, "filesurfer",
        "Map the request to one file action: open (path), list (path), page_down, page_up. "
        "Paths are relative to the task workspace. Set page to 0 unless paging."));
    for (const auto& m : context_) messages.push_back(m);
    messages.push_back(ChatMessage::text(Role::user, "orchestrator", instruction));

    nlohmann::json obj = complete_structured(client_, std::move(messages), kFileActionSchema, recorder_);
    const std::string action = obj.at("action").get<std::string>();
    const std::string path = obj.value("path", "");

    try {
        if (action == "open" || action == "list") {
            current_ = filesurfer_open(path, workspace_root_, registry_);
        } else if (action == "page_down" && current_) {
            current_->page_index = std::min(current_->page_index + 1, current_->page_count - 1);
        } else if (action == "page_up" && current_) {
            current_->page_index = std::max(current_->page_index - 1, 0);
        } else if (!current_) {
            return "error: no file is open";
        }
    } catch (const std::exception& e) {
        return std::string("error: ") + e.what();
    }
    return current_->render();
}

void FileSurfer::reset() {
    WorkerAgent::reset();
    current_.reset();
}

std::string FileSurfer::state_fingerprint() const {
    if (!current_) return md5_hex("filesurfer:closed");
    return md5_hex("filesurfer:" + current_->path.string() + ":" + std::to_string(current_->page_index));
}

Coder::Coder(CompletionClient& client, CallRecorder* recorder)
    : WorkerAgent({"Coder",
                   "Writes complete standalone programs and debugs previous ones from console output.",
                   {"coding"}}),
      client_(client),
      recorder_(recorder) {}

std::string Coder::respond(const std::string& instruction) {
    ModelRequest request;
    request.messages.push_back(ChatMessage::text(
        Role::system, "coder",
        "You write code or analyze information. When coding, output one complete standalone program "
        "in a fenced code block; each fix must be a full re-listing."));
    for (const auto& m : context_) request.messages.push_back(m);
    ModelResponse resp = complete(client_, request, recorder_);
    return resp.message.joined_text();
}

void Coder::reset() { WorkerAgent::reset(); }

std::string Coder::state_fingerprint() const {
    std::string buf;
    for (const auto& m : context_) buf += m.joined_text() + "\n";
    return md5_hex("coder:" + buf);
}

ComputerTerminal::ComputerTerminal(Sandbox& sandbox, std::chrono::milliseconds timeout)
    : WorkerAgent({"ComputerTerminal",
                   "Executes the Coder's programs and shell commands in the task sandbox.",
                   {"execution"}}),
      sandbox_(sandbox),
      timeout_(timeout),
      start_snapshot_(WorkspaceSnapshot::capture(sandbox.workspace())) {}

std::string ComputerTerminal::respond(const std::string& instruction) {
    const auto block = extract_fenced_block(instruction);
    ExecutionResult result;
    if (block) {
        const std::string lang = block->first.empty() ? "python" : block->first;
        result = sandbox_.execute_program(block->second, lang, timeout_);
    } else {
        return "error: no fenced code block found in the instruction; nothing to execute";
    }
    return result.render();
}

void ComputerTerminal::reset() {
    WorkerAgent::reset();
    start_snapshot_.restore(sandbox_.workspace());
}

std::string ComputerTerminal::state_fingerprint() const {
    return fingerprint_directory(sandbox_.workspace());
}

std::optional<std::pair<std::string, std::string>> extract_fenced_block(const std::string& text) {
    const std::string fence = "```";
    const std::size_t open = text.find(fence);
    if (open == std::string::npos) return std::nullopt;
    const std::size_t lang_end = text.find('\n', open + fence.size());
    if (lang_end == std::string::npos) return std::nullopt;
    std::string lang = text.substr(open + fence.size(), lang_end - open - fence.size());
    while (!lang.empty() && (lang.back() == '\r' || lang.back() == ' ')) lang.pop_back();
    const std::size_t close = text.find(fence, lang_end + 1);
    if (close == std::string::npos) return std::nullopt;
    return std::make_pair(lang, text.substr(lang_end + 1, close - lang_end - 1));
}

}  // namespace ledgerone
