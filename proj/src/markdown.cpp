#include "ledgerone/markdown.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>
#include <vector>

namespace ledgerone {

namespace {

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
    return s;
}

std::vector<std::string> split_csv_row(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                cell += '"';
                ++i;
            } else if (c == '"') {
                quoted = false;
            } else {
                cell += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            cells.push_back(cell);
            cell.clear();
        } else {
            cell += c;
        }
    }
    cells.push_back(cell);
    return cells;
}

}  // namespace

std::string html_to_markdown(const std::string& html) {
    std::string out;
    bool in_tag = false;
    std::string tag;
    for (char c : html) {
        if (in_tag) {
            if (c == '>') {
                in_tag = false;
                const std::string t = lower(tag);
                if (t == "p" || t == "/p" || t == "br" || t == "br/" || t == "/div" || t == "/h1" ||
                    t == "/h2" || t == "/h3" || t == "/li" || t == "/tr") {
                    out += "\n";
                } else if (t == "h1") {
                    out += "\n# ";
                } else if (t == "h2") {
                    out += "\n## ";
                } else if (t == "h3") {
                    out += "\n### ";
                } else if (t == "li") {
                    out += "\n- ";
                }
                tag.clear();
            } else {
                tag += c;
            }
        } else if (c == '<') {
            in_tag = true;
        } else {
            out += c;
        }
    }
    // Collapse runs of blank lines.
    std::string collapsed;
    int newlines = 0;
    for (char c : out) {
        if (c == '\n') {
            if (++newlines <= 2) collapsed += c;
        } else {
            newlines = 0;
            collapsed += c;
        }
    }
    while (!collapsed.empty() && (collapsed.front() == '\n' || collapsed.front() == ' ')) {
        collapsed.erase(collapsed.begin());
    }
    return collapsed;
}

std::string csv_to_markdown(const std::string& csv) {
    std::istringstream is(csv);
    std::string line;
    std::vector<std::vector<std::string>> rows;
    while (std::getline(is, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        rows.push_back(split_csv_row(line));
    }
    if (rows.empty()) return "";

    std::ostringstream os;
    for (std::size_t r = 0; r < rows.size(); ++r) {
        os << "|";
        for (const auto& cell : rows[r]) os << " " << cell << " |";
        os << "\n";
        if (r == 0) {
            os << "|";
            for (std::size_t c = 0; c < rows[0].size(); ++c) os << " --- |";
            os << "\n";
        }
    }
    return os.str();
}

bool looks_binary(const std::string& bytes) {
    const std::size_t probe = std::min<std::size_t>(bytes.size(), 4096);
    for (std::size_t i = 0; i < probe; ++i) {
        if (bytes[i] == '\0') return true;
    }
    return false;
}

ConverterRegistry ConverterRegistry::with_defaults() {
    ConverterRegistry reg;
    auto passthrough = [](const std::string& bytes) { return bytes; };
    for (const char* ext : {".txt", ".md", ".log", ".json", ".py", ".cpp", ".hpp", ".c", ".h", ".yaml", ".yml"}) {
        reg.register_converter(ext, passthrough);
    }
    reg.register_converter(".html", [](const std::string& b) { return html_to_markdown(b); });
    reg.register_converter(".htm", [](const std::string& b) { return html_to_markdown(b); });
    reg.register_converter(".csv", [](const std::string& b) { return csv_to_markdown(b); });
    return reg;
}

void ConverterRegistry::register_converter(const std::string& extension, Converter fn) {
    by_extension_[lower(extension)] = std::move(fn);
}

bool ConverterRegistry::has(const std::string& extension) const {
    return by_extension_.count(lower(extension)) > 0;
}

std::string ConverterRegistry::convert(const std::filesystem::path& path, const std::string& bytes) const {
    const std::string ext = lower(path.extension().string());
    auto it = by_extension_.find(ext);
    if (it != by_extension_.end()) return it->second(bytes);
    if (!looks_binary(bytes)) return bytes;  // sniffed as text: passthrough
    return "(binary file: " + path.filename().string() + ", " + std::to_string(bytes.size()) +
           " bytes, no converter registered)";
}

}  // namespace ledgerone
