#include "ledgerone/simenv.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "ledgerone/errors.hpp"
#include "ledgerone/md5.hpp"

namespace ledgerone {

namespace {

constexpr const char* kBlockedUrl = "about:blocked";

struct Rendered {
    std::vector<std::string> lines;
    std::map<int, int> element_line;  // element id -> line index
};

std::vector<std::string> split_lines(const std::string& text) {
    std::vector<std::string> lines;
    std::istringstream is(text);
    std::string line;
    while (std::getline(is, line)) lines.push_back(line);
    if (lines.empty()) lines.push_back("");
    return lines;
}

Rendered render_page(const SitePage& page) {
    Rendered r;
    const int block_count = static_cast<int>(page.blocks.size());
    for (int i = 0; i <= block_count; ++i) {
        if (i < block_count) {
            for (auto& l : split_lines(page.blocks[i])) r.lines.push_back(std::move(l));
        }
        for (const auto& e : page.elements) {
            const int anchor = std::min(std::max(e.block, 0), block_count);
            if (anchor == i) {
                r.element_line[e.id] = static_cast<int>(r.lines.size());
                r.lines.push_back("[" + std::to_string(e.id) + "] " + e.role + ": " + e.label);
            }
        }
    }
    return r;
}

SitePage blocked_page(const std::string& target) {
    SitePage p;
    p.url = kBlockedUrl;
    p.title = "External access blocked";
    p.blocks = {"Navigation to an external address was blocked by policy.", "Requested: " + target};
    return p;
}

SitePage no_results_page(const std::string& query) {
    SitePage p;
    p.url = "about:search";
    p.title = "Search results";
    p.blocks = {"No results for: " + query};
    return p;
}

/// Resolves the page the state currently shows, synthesizing about: pages.
SitePage resolve_page(const SimSite& site, const SiteState& state) {
    if (const SitePage* p = site.find_page(state.url)) return *p;
    if (state.url.rfind("about:search?q=", 0) == 0) {
        return no_results_page(state.url.substr(std::string("about:search?q=").size()));
    }
    return blocked_page(state.url);
}

bool is_interactive(const std::string& role) {
    return role == "link" || role == "button" || role == "textbox";
}

PageReport build_report(const SimSite& site, const SiteState& state, const ViewportConfig& vp,
                        std::string note) {
    const SitePage page = resolve_page(site, state);
    const Rendered r = render_page(page);

    PageReport report;
    report.url = state.url;
    report.title = page.title;
    report.screenshot_ref = "screenshot:" + md5_hex(state.url + ":" + std::to_string(state.scroll));
    report.note = std::move(note);

    const int total = static_cast<int>(r.lines.size());
    const int top = std::clamp(state.scroll, 0, std::max(0, total - 1));
    const int bottom = std::min(total, top + vp.height_lines);

    std::string viewport;
    for (int i = top; i < bottom; ++i) {
        viewport += r.lines[i];
        viewport += "\n";
    }
    report.viewport_text = viewport;

    std::vector<std::string> offscreen_bits;
    if (top > 0) offscreen_bits.push_back(std::to_string(top) + " lines above the viewport");
    if (bottom < total) offscreen_bits.push_back(std::to_string(total - bottom) + " lines below the viewport");
    for (const auto& e : page.elements) {
        if (!is_interactive(e.role)) continue;
        const int line = r.element_line.at(e.id);
        if (line >= top && line < bottom) {
            report.marks.push_back(Mark{e.id, e.role, e.label, true});
        } else {
            offscreen_bits.push_back((line < top ? "above: " : "below: ") + e.role + " \"" + e.label + "\"");
        }
    }
    if (!offscreen_bits.empty()) {
        std::string summary = "Content outside the viewport:";
        for (const auto& b : offscreen_bits) summary += "\n  - " + b;
        report.offscreen_summary = summary;
    }
    return report;
}

}  // namespace

std::string to_string(BrowserActionKind kind) {
    switch (kind) {
        case BrowserActionKind::visit_url: return "visit_url";
        case BrowserActionKind::web_search: return "web_search";
        case BrowserActionKind::scroll_up: return "scroll_up";
        case BrowserActionKind::scroll_down: return "scroll_down";
        case BrowserActionKind::click: return "click";
        case BrowserActionKind::type_text: return "type_text";
        case BrowserActionKind::summarize_page: return "summarize_page";
        case BrowserActionKind::answer_question: return "answer_question";
        case BrowserActionKind::history_back: return "history_back";
    }
    return "visit_url";
}

std::optional<BrowserActionKind> browser_action_kind_from_string(const std::string& s) {
    static const std::map<std::string, BrowserActionKind> table = {
        {"visit_url", BrowserActionKind::visit_url},
        {"web_search", BrowserActionKind::web_search},
        {"scroll_up", BrowserActionKind::scroll_up},
        {"scroll_down", BrowserActionKind::scroll_down},
        {"click", BrowserActionKind::click},
        {"type_text", BrowserActionKind::type_text},
        {"summarize_page", BrowserActionKind::summarize_page},
        {"answer_question", BrowserActionKind::answer_question},
        {"history_back", BrowserActionKind::history_back},
    };
    auto it = table.find(s);
    if (it == table.end()) return std::nullopt;
    return it->second;
}

std::optional<std::string> BrowserAction::validate() const {
    switch (kind) {
        case BrowserActionKind::click:
            if (!target) return "click requires a target element id";
            break;
        case BrowserActionKind::type_text:
            if (!target) return "type_text requires a target element id";
            if (!argument) return "type_text requires the text to type";
            break;
        case BrowserActionKind::visit_url:
        case BrowserActionKind::web_search:
        case BrowserActionKind::answer_question:
            if (!argument || argument->empty()) return to_string(kind) + " requires an argument";
            break;
        default:
            break;
    }
    return std::nullopt;
}

std::string PageReport::render() const {
    std::string out;
    out += "URL: " + url + "\n";
    out += "Title: " + title + "\n";
    out += "Screenshot: " + screenshot_ref + "\n";
    if (!note.empty()) out += "Note: " + note + "\n";
    out += "--- viewport ---\n" + viewport_text;
    if (!marks.empty()) {
        out += "--- interactive elements in view ---\n";
        for (const auto& m : marks) {
            out += "[" + std::to_string(m.element_id) + "] " + m.role + " \"" + m.label + "\"\n";
        }
    }
    if (!offscreen_summary.empty()) out += offscreen_summary + "\n";
    return out;
}

std::vector<std::string> SitePage::render_lines() const { return render_page(*this).lines; }

const SitePage* SimSite::find_page(const std::string& url) const {
    auto it = pages.find(url);
    return it == pages.end() ? nullptr : &it->second;
}

nlohmann::json SimSite::to_json() const {
    nlohmann::json pages_json = nlohmann::json::object();
    for (const auto& [url, page] : pages) {
        nlohmann::json elements = nlohmann::json::array();
        for (const auto& e : page.elements) {
            elements.push_back({{"id", e.id},
                                {"role", e.role},
                                {"label", e.label},
                                {"block", e.block},
                                {"effect", e.effect}});
        }
        pages_json[url] = {{"title", page.title}, {"blocks", page.blocks}, {"elements", elements}};
    }
    return {{"version", version}, {"start_url", start_url}, {"pages", pages_json}, {"records", records}};
}

nlohmann::json SiteState::to_json() const {
    return {{"url", url}, {"scroll", scroll}, {"history", history}, {"fields", fields}, {"records", records}};
}

SimSite load_site_from_json(const nlohmann::json& doc) {
    SimSite site;
    site.version = doc.value("version", 1);
    site.start_url = doc.at("start_url").get<std::string>();
    site.records = doc.value("records", nlohmann::json::object());

    for (const auto& [url, pj] : doc.at("pages").items()) {
        SitePage page;
        page.url = url;
        page.title = pj.value("title", url);
        for (const auto& b : pj.value("blocks", nlohmann::json::array())) {
            page.blocks.push_back(b.get<std::string>());
        }
        std::map<int, bool> seen_ids;
        for (const auto& ej : pj.value("elements", nlohmann::json::array())) {
            SiteElement e;
            e.id = ej.at("id").get<int>();
            e.role = ej.at("role").get<std::string>();
            e.label = ej.value("label", "");
            e.block = ej.value("block", 0);
            e.effect = ej.value("effect", nlohmann::json{{"type", "none"}});
            if (seen_ids[e.id]) {
                throw ManifestError("duplicate element id " + std::to_string(e.id) + " on page " + url);
            }
            seen_ids[e.id] = true;
            if (!is_interactive(e.role)) {
                throw ManifestError("unknown element role '" + e.role + "' on page " + url);
            }
            page.elements.push_back(std::move(e));
        }
        site.pages.emplace(url, std::move(page));
    }

    if (!site.pages.count(site.start_url)) {
        throw ManifestError("start_url not declared as a page: " + site.start_url);
    }
    // Every navigation effect must land on a declared page or the blocked sink.
    for (const auto& [url, page] : site.pages) {
        for (const auto& e : page.elements) {
            if (e.effect.value("type", "none") == "navigate") {
                const std::string target = e.effect.value("target", "");
                if (target != kBlockedUrl && !site.pages.count(target)) {
                    throw ManifestError("dangling navigation target '" + target + "' from page " + url +
                                        " element " + std::to_string(e.id));
                }
            }
        }
    }
    return site;
}

SimSite load_site(const std::filesystem::path& manifest_file) {
    std::ifstream in(manifest_file);
    if (!in) throw ManifestError("cannot open site manifest: " + manifest_file.string());
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw ManifestError(std::string("site manifest does not parse: ") + e.what());
    }
    return load_site_from_json(doc);
}

SiteState initial_state(const SimSite& site) {
    SiteState state;
    state.url = site.start_url;
    state.records = site.records;
    return state;
}

PageReport report_for(const SimSite& site, const SiteState& state, const ViewportConfig& vp) {
    return build_report(site, state, vp, "");
}

std::string full_page_text(const SimSite& site, const SiteState& state) {
    const SitePage page = resolve_page(site, state);
    std::string out = page.title + "\n";
    for (const auto& l : page.render_lines()) out += l + "\n";
    return out;
}

std::pair<SiteState, PageReport> apply_action(const SimSite& site, const SiteState& state,
                                              const BrowserAction& action, const ViewportConfig& vp) {
    if (auto err = action.validate()) {
        return {state, build_report(site, state, vp, "invalid action: " + *err)};
    }

    SiteState next = state;
    std::string note;

    const SitePage current = resolve_page(site, state);
    const int total_lines = static_cast<int>(render_page(current).lines.size());
    const int step = std::max(1, vp.height_lines - vp.scroll_overlap);

    switch (action.kind) {
        case BrowserActionKind::visit_url: {
            next.history.push_back(state.url);
            if (site.find_page(*action.argument)) {
                next.url = *action.argument;
            } else {
                next.url = kBlockedUrl;
                note = "external URL blocked: " + *action.argument;
            }
            next.scroll = 0;
            break;
        }
        case BrowserActionKind::web_search: {
            next.history.push_back(state.url);
            const std::string search_url = "search://" + *action.argument;
            if (site.find_page(search_url)) {
                next.url = search_url;
            } else {
                next.url = "about:search?q=" + *action.argument;
                note = "no indexed results for query";
            }
            next.scroll = 0;
            break;
        }
        case BrowserActionKind::scroll_down: {
            const int max_scroll = std::max(0, total_lines - vp.height_lines);
            if (state.scroll >= max_scroll) {
                note = "already at bottom";
            } else {
                next.scroll = std::min(max_scroll, state.scroll + step);
            }
            break;
        }
        case BrowserActionKind::scroll_up: {
            if (state.scroll == 0) {
                note = "already at top";
            } else {
                next.scroll = std::max(0, state.scroll - step);
            }
            break;
        }
        case BrowserActionKind::click: {
            const SiteElement* elem = nullptr;
            for (const auto& e : current.elements) {
                if (e.id == *action.target) elem = &e;
            }
            if (!elem) {
                return {state, build_report(site, state, vp,
                                            "no-such-element: id " + std::to_string(*action.target) +
                                                " is not on this page")};
            }
            const std::string type = elem->effect.value("type", "none");
            if (type == "navigate") {
                next.history.push_back(state.url);
                next.url = elem->effect.value("target", kBlockedUrl);
                next.scroll = 0;
            } else if (type == "append_record") {
                const std::string key = elem->effect.value("collection", "events");
                if (!next.records.contains(key) || !next.records[key].is_array()) {
                    next.records[key] = nlohmann::json::array();
                }
                nlohmann::json rec = elem->effect.value("record", nlohmann::json::object());
                // Submitted form fields travel with the record.
                rec["fields"] = next.fields;
                next.records[key].push_back(rec);
                note = "submitted";
            } else {
                note = "clicked \"" + elem->label + "\" (no effect)";
            }
            break;
        }
        case BrowserActionKind::type_text: {
            const SiteElement* elem = nullptr;
            for (const auto& e : current.elements) {
                if (e.id == *action.target) elem = &e;
            }
            if (!elem) {
                return {state, build_report(site, state, vp,
                                            "no-such-element: id " + std::to_string(*action.target) +
                                                " is not on this page")};
            }
            if (elem->role != "textbox") {
                return {state, build_report(site, state, vp, "element " + std::to_string(elem->id) +
                                                                 " is not a textbox")};
            }
            const std::string field = elem->effect.value("field", elem->label);
            next.fields[field] = *action.argument;
            note = "typed into \"" + elem->label + "\"";
            break;
        }
        case BrowserActionKind::history_back: {
            if (next.history.empty()) {
                note = "no earlier page in history";
            } else {
                next.url = next.history.back();
                next.history.pop_back();
                next.scroll = 0;
            }
            break;
        }
        case BrowserActionKind::summarize_page:
        case BrowserActionKind::answer_question:
            // Reading actions never mutate state.
            break;
    }

    return {next, build_report(site, next, vp, note)};
}

std::string fingerprint(const SiteState& state) { return md5_hex(state.to_json().dump()); }

}  // namespace ledgerone
