#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <string>

namespace ledgerone {

/// Converts raw file bytes to markdown. Registered per file extension;
/// content sniffing decides between text passthrough and a metadata-only
/// view when no converter matches.
class ConverterRegistry {
public:
    using Converter = std::function<std::string(const std::string& bytes)>;

    /// Registry preloaded with plain text, HTML, and CSV converters.
    static ConverterRegistry with_defaults();

    void register_converter(const std::string& extension, Converter fn);
    bool has(const std::string& extension) const;

    /// Converts file content to markdown. Never touches the file system.
    std::string convert(const std::filesystem::path& path, const std::string& bytes) const;

private:
    std::map<std::string, Converter> by_extension_;
};

std::string html_to_markdown(const std::string& html);
std::string csv_to_markdown(const std::string& csv);
bool looks_binary(const std::string& bytes);

}  // namespace ledgerone
