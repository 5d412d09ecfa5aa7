#include "exporter/exporter.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "core/sha256.hpp"

namespace droidpot::exporter {

namespace fs = std::filesystem;

std::string payload_checksum(const std::string& payload) { return Sha256::of(payload); }

std::string encode_frame(const ExportBatch& batch) {
    nlohmann::ordered_json header;
    header["batch_id"] = batch.batch_id;
    header["vantage"] = batch.vantage;
    header["count"] = batch.count;
    header["checksum"] = batch.checksum;
    std::string body = header.dump() + "\n" + batch.payload;

    std::string out;
    uint32_t len = static_cast<uint32_t>(body.size());
    out.push_back(static_cast<char>(len >> 24));
    out.push_back(static_cast<char>(len >> 16));
    out.push_back(static_cast<char>(len >> 8));
    out.push_back(static_cast<char>(len));
    out += body;
    return out;
}

FrameResult read_frame(net::ByteStream& stream, int timeout_ms, size_t max_frame) {
    FrameResult out;
    std::string buf;
    auto read_exact = [&](size_t want) -> FrameResult::Status {
        while (buf.size() < want) {
            char chunk[8192];
            size_t cap = std::min(sizeof chunk, want - buf.size());
            int n = stream.read_some(chunk, cap, timeout_ms);
            if (n == 0) return FrameResult::Status::closed;
            if (n == net::ByteStream::kTimeout) return FrameResult::Status::timeout;
            if (n < 0) return FrameResult::Status::closed;
            buf.append(chunk, static_cast<size_t>(n));
        }
        return FrameResult::Status::ok;
    };

    out.status = read_exact(4);
    if (out.status != FrameResult::Status::ok) return out;
    uint32_t len = (static_cast<uint8_t>(buf[0]) << 24) | (static_cast<uint8_t>(buf[1]) << 16) |
                   (static_cast<uint8_t>(buf[2]) << 8) | static_cast<uint8_t>(buf[3]);
    if (len > max_frame) {
        out.status = FrameResult::Status::malformed;
        out.error = "frame too large";
        return out;
    }
    buf.clear();
    out.status = read_exact(len);
    if (out.status != FrameResult::Status::ok) {
        if (out.status == FrameResult::Status::closed) {
            out.status = FrameResult::Status::malformed;
            out.error = "truncated frame";
        }
        return out;
    }

    auto nl = buf.find('\n');
    if (nl == std::string::npos) {
        out.status = FrameResult::Status::malformed;
        out.error = "missing header line";
        return out;
    }
    nlohmann::json header = nlohmann::json::parse(buf.substr(0, nl), nullptr, false);
    if (header.is_discarded() || !header.is_object() || !header.contains("batch_id") ||
        !header.contains("vantage") || !header.contains("count") ||
        !header.contains("checksum")) {
        out.status = FrameResult::Status::malformed;
        out.error = "bad header";
        return out;
    }
    try {
        out.batch.batch_id = header["batch_id"].get<uint64_t>();
        out.batch.vantage = header["vantage"].get<std::string>();
        out.batch.count = header["count"].get<uint64_t>();
        out.batch.checksum = header["checksum"].get<std::string>();
    } catch (const nlohmann::json::exception&) {
        out.status = FrameResult::Status::malformed;
        out.error = "bad header";
        return out;
    }
    out.batch.payload = buf.substr(nl + 1);
    out.status = FrameResult::Status::ok;
    return out;
}

std::string encode_ack(uint64_t batch_id, bool ok, const std::string& reason) {
    nlohmann::ordered_json j;
    if (ok) {
        j["ack"] = batch_id;
    } else {
        j["nack"] = batch_id;
        j["reason"] = reason;
    }
    return j.dump() + "\n";
}

std::optional<Ack> parse_ack(const std::string& line) {
    nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) return std::nullopt;
    Ack out;
    if (j.contains("ack") && j["ack"].is_number_unsigned()) {
        out.ok = true;
        out.batch_id = j["ack"].get<uint64_t>();
        return out;
    }
    if (j.contains("nack") && j["nack"].is_number_unsigned()) {
        out.ok = false;
        out.batch_id = j["nack"].get<uint64_t>();
        if (j.contains("reason") && j["reason"].is_string())
            out.reason = j["reason"].get<std::string>();
        return out;
    }
    return std::nullopt;
}

namespace {

// Spool file name carries id and end offset so recovery never re-seals
// events that already made it into a batch: batch-<id>-<end_offset>.spool
bool parse_spool_name(const std::string& name, uint64_t* id, uint64_t* end_offset) {
    unsigned long long pid = 0, poff = 0;
    if (std::sscanf(name.c_str(), "batch-%llu-%llu.spool", &pid, &poff) != 2) return false;
    *id = pid;
    *end_offset = poff;
    return true;
}

std::string spool_name(uint64_t id, uint64_t end_offset) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "batch-%012llu-%016llu.spool",
                  static_cast<unsigned long long>(id),
                  static_cast<unsigned long long>(end_offset));
    return buf;
}

} // namespace

Exporter::Exporter(ExporterConfig config, Clock& clock)
    : config_(std::move(config)), clock_(clock) {}

Exporter::~Exporter() { stop(); }

bool Exporter::open(std::string* error) {
    std::error_code ec;
    fs::create_directories(config_.spool_dir, ec);
    if (ec) {
        if (error) *error = config_.spool_dir + ": " + ec.message();
        return false;
    }
    opened_ = true;
    // Cursor recovery: the cursor file is authoritative unless a spooled
    // batch (sealed but not yet recorded) reaches further.
    std::ifstream cursor(fs::path(config_.spool_dir) / "cursor.json");
    if (cursor) {
        std::string text((std::istreambuf_iterator<char>(cursor)),
                         std::istreambuf_iterator<char>());
        nlohmann::json j = nlohmann::json::parse(text, nullptr, false);
        if (!j.is_discarded() && j.is_object()) {
            if (j.contains("offset")) log_offset_ = j["offset"].get<uint64_t>();
            if (j.contains("next_batch_id")) next_batch_id_ = j["next_batch_id"].get<uint64_t>();
        }
    }
    for (const auto& entry : list_spool()) {
        if (entry.end_offset > log_offset_) log_offset_ = entry.end_offset;
        if (entry.batch_id >= next_batch_id_) next_batch_id_ = entry.batch_id + 1;
    }
    return true;
}

void Exporter::persist_cursor() {
    nlohmann::ordered_json j;
    j["offset"] = log_offset_;
    j["next_batch_id"] = next_batch_id_;
    std::string tmp = (fs::path(config_.spool_dir) / "cursor.json.tmp").string();
    std::string final_path = (fs::path(config_.spool_dir) / "cursor.json").string();
    std::ofstream out(tmp, std::ios::trunc | std::ios::binary);
    out << j.dump() << "\n";
    out.close();
    std::rename(tmp.c_str(), final_path.c_str());
}

std::vector<Exporter::SpoolEntry> Exporter::list_spool() const {
    std::vector<SpoolEntry> out;
    std::error_code ec;
    for (const auto& de : fs::directory_iterator(config_.spool_dir, ec)) {
        if (!de.is_regular_file()) continue;
        uint64_t id = 0, off = 0;
        if (!parse_spool_name(de.path().filename().string(), &id, &off)) continue;
        out.push_back({id, off, de.path().string()});
    }
    std::sort(out.begin(), out.end(),
              [](const SpoolEntry& a, const SpoolEntry& b) { return a.batch_id < b.batch_id; });
    return out;
}

Exporter::CycleStats Exporter::run_cycle() {
    std::lock_guard<std::mutex> lock(mu_);
    CycleStats stats;

    // Seal: take complete lines appended since the last cycle. An empty
    // interval still produces a batch (heartbeat).
    std::string payload;
    uint64_t count = 0;
    uint64_t new_offset = log_offset_;
    {
        std::ifstream log(config_.log_path, std::ios::binary);
        if (log) {
            log.seekg(0, std::ios::end);
            uint64_t size = static_cast<uint64_t>(log.tellg());
            if (size > log_offset_) {
                log.seekg(static_cast<std::streamoff>(log_offset_));
                std::string chunk(size - log_offset_, '\0');
                log.read(chunk.data(), static_cast<std::streamsize>(chunk.size()));
                chunk.resize(static_cast<size_t>(log.gcount()));
                auto last_nl = chunk.rfind('\n');
                if (last_nl != std::string::npos) {
                    payload = chunk.substr(0, last_nl + 1);
                    new_offset = log_offset_ + last_nl + 1;
                    count = static_cast<uint64_t>(
                        std::count(payload.begin(), payload.end(), '\n'));
                }
            }
        }
    }

    ExportBatch batch;
    batch.batch_id = next_batch_id_;
    batch.vantage = config_.vantage;
    batch.count = count;
    batch.payload = payload;
    batch.checksum = payload_checksum(payload);

    std::string name = spool_name(batch.batch_id, new_offset);
    std::string tmp = (fs::path(config_.spool_dir) / (name + ".tmp")).string();
    std::string final_path = (fs::path(config_.spool_dir) / name).string();
    {
        std::ofstream out(tmp, std::ios::trunc | std::ios::binary);
        nlohmann::ordered_json header;
        header["batch_id"] = batch.batch_id;
        header["vantage"] = batch.vantage;
        header["count"] = batch.count;
        header["checksum"] = batch.checksum;
        out << header.dump() << "\n" << batch.payload;
    }
    std::rename(tmp.c_str(), final_path.c_str());

    next_batch_id_++;
    log_offset_ = new_offset;
    persist_cursor();
    enforce_spool_cap();

    stats.sealed_batch_id = batch.batch_id;
    stats.sealed_events = count;
    stats.delivered = deliver_pending();
    stats.pending = list_spool().size();
    return stats;
}

size_t Exporter::deliver_pending() {
    auto entries = list_spool();
    if (entries.empty()) return 0;

    auto conn = net::TcpConn::connect(config_.collector_host, config_.collector_port, 5'000);
    if (!conn) return 0;

    size_t delivered = 0;
    net::LineReader reader(*conn, 4096);
    for (const auto& entry : entries) {
        std::ifstream in(entry.path, std::ios::binary);
        if (!in) continue;
        std::string content((std::istreambuf_iterator<char>(in)),
                            std::istreambuf_iterator<char>());
        in.close();

        auto nl = content.find('\n');
        if (nl == std::string::npos) {
            std::remove(entry.path.c_str());
            continue;
        }
        nlohmann::json header = nlohmann::json::parse(content.substr(0, nl), nullptr, false);
        if (header.is_discarded()) {
            std::remove(entry.path.c_str());
            continue;
        }
        ExportBatch batch;
        batch.batch_id = header.value("batch_id", 0ull);
        batch.vantage = header.value("vantage", std::string());
        batch.count = header.value("count", 0ull);
        batch.checksum = header.value("checksum", std::string());
        batch.payload = content.substr(nl + 1);

        if (!conn->write_all(encode_frame(batch))) break;
        std::string ack_line;
        auto st = reader.read_line(&ack_line, 10'000);
        if (st != net::LineReader::Status::ok) break;
        auto ack = parse_ack(ack_line);
        if (!ack || !ack->ok || ack->batch_id != batch.batch_id) break;
        std::remove(entry.path.c_str());
        delivered++;
    }
    return delivered;
}

void Exporter::enforce_spool_cap() {
    auto entries = list_spool();
    uint64_t total = 0;
    std::error_code ec;
    for (const auto& e : entries) total += fs::file_size(e.path, ec);
    size_t idx = 0;
    while (total > config_.spool_cap_bytes && idx < entries.size()) {
        uint64_t sz = fs::file_size(entries[idx].path, ec);
        std::remove(entries[idx].path.c_str());
        overflow_drops_++;
        total -= std::min(total, sz);
        idx++;
    }
}

size_t Exporter::pending_batches() const {
    std::lock_guard<std::mutex> lock(mu_);
    return list_spool().size();
}

void Exporter::start() {
    stopping_ = false;
    timer_ = std::thread([this] {
        int64_t waited_ms = 0;
        const int64_t interval_ms = static_cast<int64_t>(config_.interval_s) * 1000;
        while (!stopping_) {
            std::this_thread::sleep_for(std::chrono::milliseconds(100));
            waited_ms += 100;
            if (waited_ms >= interval_ms) {
                waited_ms = 0;
                run_cycle();
            }
        }
    });
}

void Exporter::stop() {
    if (stopping_.exchange(true)) {
        if (timer_.joinable()) timer_.join();
        return;
    }
    if (timer_.joinable()) timer_.join();
    // Final batch so shutdown never strands events in the log.
    if (opened_) run_cycle();
}

} // namespace droidpot::exporter
