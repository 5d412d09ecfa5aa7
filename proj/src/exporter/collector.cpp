#include "exporter/collector.hpp"

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "core/model.hpp"

namespace droidpot::exporter {

namespace fs = std::filesystem;

Collector::Collector(CollectorConfig config) : config_(std::move(config)) {}

Collector::~Collector() { stop(); }

bool Collector::start(std::string* error) {
    std::error_code ec;
    fs::create_directories(config_.out_dir, ec);
    if (ec) {
        if (error) *error = config_.out_dir + ": " + ec.message();
        return false;
    }
    if (!load_seen(error)) return false;
    if (!listener_.open(config_.bind_addr, config_.port, error)) return false;
    stopping_ = false;
    accept_thread_ = std::thread([this] { accept_loop(); });
    return true;
}

void Collector::stop() {
    stopping_ = true;
    if (accept_thread_.joinable()) accept_thread_.join();
    listener_.close();
    workers_.wait_idle(5'000);
}

bool Collector::load_seen(std::string* error) {
    std::error_code ec;
    for (const auto& de : fs::directory_iterator(config_.out_dir, ec)) {
        if (!de.is_regular_file()) continue;
        std::string name = de.path().filename().string();
        auto dot = name.rfind(".batches");
        if (dot == std::string::npos || dot + 8 != name.size()) continue;
        std::string vantage = name.substr(0, dot);
        std::ifstream in(de.path());
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            seen_.emplace(vantage, std::strtoull(line.c_str(), nullptr, 10));
        }
    }
    (void)error;
    return true;
}

bool Collector::seen(const std::string& vantage, uint64_t batch_id) {
    std::lock_guard<std::mutex> lock(mu_);
    return seen_.count({vantage, batch_id}) > 0;
}

void Collector::mark_seen(const std::string& vantage, uint64_t batch_id) {
    std::lock_guard<std::mutex> lock(mu_);
    seen_.emplace(vantage, batch_id);
    std::ofstream out(fs::path(config_.out_dir) / (vantage + ".batches"),
                      std::ios::app | std::ios::binary);
    out << batch_id << "\n";
}

void Collector::accept_loop() {
    while (!stopping_) {
        auto conn = listener_.accept(250);
        if (!conn) continue;
        workers_.launch([this, c = std::make_shared<net::TcpConn>(std::move(*conn))] {
            handle_connection(*c);
        });
    }
}

void Collector::handle_connection(net::TcpConn& conn) {
    while (!stopping_) {
        FrameResult frame = read_frame(conn, 1'000);
        if (frame.status == FrameResult::Status::timeout) continue;
        if (frame.status == FrameResult::Status::closed) break;
        if (frame.status == FrameResult::Status::malformed) {
            nacked_++;
            conn.write_all(encode_ack(0, false, frame.error));
            break;
        }

        const ExportBatch& batch = frame.batch;
        if (payload_checksum(batch.payload) != batch.checksum) {
            nacked_++;
            conn.write_all(encode_ack(batch.batch_id, false, "checksum"));
            continue;
        }
        uint64_t lines = static_cast<uint64_t>(
            std::count(batch.payload.begin(), batch.payload.end(), '\n'));
        if (lines != batch.count) {
            nacked_++;
            conn.write_all(encode_ack(batch.batch_id, false, "count"));
            continue;
        }
        auto vantage = Vantage::parse(batch.vantage);
        if (!vantage) {
            nacked_++;
            conn.write_all(encode_ack(batch.batch_id, false, "vantage"));
            continue;
        }

        if (!seen(batch.vantage, batch.batch_id)) {
            std::ofstream out(fs::path(config_.out_dir) / (batch.vantage + ".ndjson"),
                              std::ios::app | std::ios::binary);
            out << batch.payload;
            out.close();
            mark_seen(batch.vantage, batch.batch_id);
        }
        acked_++;
        conn.write_all(encode_ack(batch.batch_id, true));
    }
}

} // namespace droidpot::exporter
