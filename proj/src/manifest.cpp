#include "selfheal/manifest.hpp"

#include <chrono>
#include <ctime>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <sstream>

#include "selfheal/checksum.hpp"
#include "selfheal/error.hpp"

namespace selfheal {

std::string to_hex(std::uint64_t value) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(value));
    return buf;
}

std::string utc_timestamp() {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm utc{};
    gmtime_r(&now, &utc);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &utc);
    return buf;
}

std::string file_checksum(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot read '" + path.string() + "' for checksumming");
    std::uint64_t hash = fnv1a64({});
    char buf[1 << 16];
    while (in.read(buf, sizeof buf) || in.gcount() > 0) {
        hash = fnv1a64(std::string_view(buf, static_cast<std::size_t>(in.gcount())), hash);
        if (!in) break;
    }
    return to_hex(hash);
}

void RunManifest::add_file(const std::filesystem::path& dir, const std::string& relative) {
    const auto full = dir / relative;
    files.push_back({relative, std::filesystem::file_size(full), file_checksum(full)});
}

Json RunManifest::to_json() const {
    Json j;
    j["tool"] = "selfheal";
    j["version"] = kToolVersion;
    j["command"] = command;
    j["seed"] = seed;
    j["workers"] = workers;
    j["started"] = started;
    j["finished"] = finished;
    j["config"] = config;
    Json list = Json::array();
    for (const auto& f : files) list.push_back({{"path", f.path}, {"bytes", f.bytes}, {"fnv1a64", f.checksum}});
    j["files"] = list;
    return j;
}

void RunManifest::write(const std::filesystem::path& path) const {
    std::ofstream out(path);
    if (!out) throw Error("cannot write '" + path.string() + "'");
    out << to_json().dump(2) << '\n';
}

}  // namespace selfheal
