#pragma once

#include <mutex>
#include <string>

namespace droidpot {

// Append-only NDJSON side log (request records, payload captures, ...).
class NdjsonLog {
  public:
    bool open(const std::string& path, std::string* error);
    void append(const std::string& json_line);
    bool is_open() const;

  private:
    mutable std::mutex mu_;
    std::string path_;
};

} // namespace droidpot
