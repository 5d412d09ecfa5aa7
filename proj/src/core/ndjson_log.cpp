#include "core/ndjson_log.hpp"

#include <fstream>

namespace droidpot {

bool NdjsonLog::open(const std::string& path, std::string* error) {
    std::lock_guard<std::mutex> lock(mu_);
    std::ofstream probe(path, std::ios::app);
    if (!probe) {
        if (error) *error = path + ": cannot open log";
        return false;
    }
    path_ = path;
    return true;
}

void NdjsonLog::append(const std::string& json_line) {
    std::lock_guard<std::mutex> lock(mu_);
    if (path_.empty()) return;
    std::ofstream out(path_, std::ios::app | std::ios::binary);
    out << json_line << "\n";
}

bool NdjsonLog::is_open() const {
    std::lock_guard<std::mutex> lock(mu_);
    return !path_.empty();
}

} // namespace droidpot
