#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace ledgerone {

enum class BrowserActionKind {
    visit_url,
    web_search,
    scroll_up,
    scroll_down,
    click,
    type_text,
    summarize_page,
    answer_question,
    history_back,
};

std::string to_string(BrowserActionKind kind);
std::optional<BrowserActionKind> browser_action_kind_from_string(const std::string& s);

struct BrowserAction {
    BrowserActionKind kind = BrowserActionKind::visit_url;
    std::optional<int> target;        // element id for click / type_text
    std::optional<std::string> argument;  // URL, query, typed text, question

    /// Enforces the per-kind field requirements. Returns an error message
    /// when invalid.
    std::optional<std::string> validate() const;
};

struct Mark {
    int element_id = 0;
    std::string role;   // link | button | textbox
    std::string label;
    bool in_viewport = true;
};

struct PageReport {
    std::string url;
    std::string title;
    std::string screenshot_ref;       // opaque artifact identifier
    std::string viewport_text;        // visible region only
    std::string offscreen_summary;    // present when the page extends beyond the viewport
    std::vector<Mark> marks;          // interactive elements intersecting the viewport
    std::string note;                 // boundary / error notes

    std::string render() const;
};

struct SiteElement {
    int id = 0;
    std::string role;   // link | button | textbox
    std::string label;
    int block = 0;      // anchor: index of the block this element follows
    nlohmann::json effect;  // {"type": "navigate"|"set_field"|"append_record"|"none", ...}
};

struct SitePage {
    std::string url;
    std::string title;
    std::vector<std::string> blocks;
    std::vector<SiteElement> elements;

    /// Deterministic line rendering: block lines interleaved with element
    /// lines like `[3] button: Login`.
    std::vector<std::string> render_lines() const;
};

/// Immutable simulated web site loaded from a manifest. May be shared
/// read-only across tasks.
struct SimSite {
    int version = 1;
    std::string start_url;
    std::map<std::string, SitePage> pages;
    nlohmann::json records;  // machine-readable ground truth for oracles

    const SitePage* find_page(const std::string& url) const;
    nlohmann::json to_json() const;  // normalized serialization
};

/// Mutable per-task browsing state. Reachable only through browser actions.
struct SiteState {
    std::string url;
    int scroll = 0;  // first visible line index
    std::vector<std::string> history;
    std::map<std::string, std::string> fields;  // textbox field values
    nlohmann::json records;                     // mutable copy of site records

    nlohmann::json to_json() const;
};

struct ViewportConfig {
    int height_lines = 20;
    int scroll_overlap = 4;
};

SimSite load_site(const std::filesystem::path& manifest_file);
SimSite load_site_from_json(const nlohmann::json& doc);

SiteState initial_state(const SimSite& site);

/// Deterministic transition per the manifest's effect table. Returns the
/// new state and a fresh page report. Invalid actions produce an error
/// report, never a crash (except programming errors).
std::pair<SiteState, PageReport> apply_action(const SimSite& site, const SiteState& state,
                                              const BrowserAction& action,
                                              const ViewportConfig& vp = {});

/// Report for the current state without mutating anything.
PageReport report_for(const SimSite& site, const SiteState& state, const ViewportConfig& vp = {});

/// Full rendered text of the current page (all lines, not just viewport).
std::string full_page_text(const SimSite& site, const SiteState& state);

/// Stable content digest of observable browsing state.
std::string fingerprint(const SiteState& state);

}  // namespace ledgerone
