#include "ledgerone/workspace.hpp"

#include <fstream>
#include <sstream>
#include <vector>

#include "ledgerone/md5.hpp"

namespace ledgerone {

namespace {

std::string read_file(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

std::map<std::string, std::string> collect(const std::filesystem::path& root) {
    namespace fs = std::filesystem;
    std::map<std::string, std::string> files;
    if (!fs::exists(root)) return files;
    for (const auto& entry : fs::recursive_directory_iterator(root)) {
        if (entry.is_regular_file()) {
            files.emplace(fs::relative(entry.path(), root).generic_string(), read_file(entry.path()));
        }
    }
    return files;
}

}  // namespace

std::string fingerprint_directory(const std::filesystem::path& root) {
    std::string buf;
    for (const auto& [rel, bytes] : collect(root)) {
        buf += rel;
        buf += '\0';
        buf += md5_hex(bytes);
        buf += '\n';
    }
    return md5_hex(buf);
}

WorkspaceSnapshot WorkspaceSnapshot::capture(const std::filesystem::path& root) {
    WorkspaceSnapshot snap;
    snap.files_ = collect(root);
    return snap;
}

void WorkspaceSnapshot::restore(const std::filesystem::path& root) const {
    namespace fs = std::filesystem;
    fs::remove_all(root);
    fs::create_directories(root);
    for (const auto& [rel, bytes] : files_) {
        const fs::path dest = root / rel;
        fs::create_directories(dest.parent_path());
        std::ofstream out(dest, std::ios::binary);
        out << bytes;
    }
}

std::chrono::milliseconds SteadyClock::now() {
    return std::chrono::duration_cast<std::chrono::milliseconds>(
        std::chrono::steady_clock::now().time_since_epoch());
}

}  // namespace ledgerone
