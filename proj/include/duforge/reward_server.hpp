#pragma once

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <atomic>
#include <filesystem>
#include <istream>
#include <map>
#include <memory>
#include <mutex>
#include <ostream>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "duforge/dataset.hpp"
#include "duforge/estimate.hpp"
#include "duforge/resize.hpp"
#include "duforge/reward.hpp"
#include "duforge/spec_io.hpp"

namespace duforge {

struct ServerError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Shared state for one serving session. Truth and images come from the
// manifest; scoring runs at a fixed square resolution unless resolution is
// zero, in which case frames are compared at native size.
struct ServerContext {
    std::string base_dir;
    std::vector<ManifestRecord> records;
    std::map<std::string, size_t> by_id;
    int resolution = 256;
    RestorerFn restorer;  // optional override of the analytic inverses

    struct Cache {
        std::map<std::string, std::pair<Image, Image>> images;  // id -> (clean, degraded)
        std::mutex mutex;
    };
    std::shared_ptr<Cache> cache = std::make_shared<Cache>();
};

inline ServerContext make_server_context(const std::string& manifest_path, int resolution = 256) {
    ServerContext ctx;
    ctx.records = load_manifest(manifest_path);
    ctx.base_dir = std::filesystem::path(manifest_path).parent_path().string();
    ctx.resolution = resolution;
    for (size_t i = 0; i < ctx.records.size(); ++i) ctx.by_id[ctx.records[i].id] = i;
    return ctx;
}

inline Json breakdown_to_json(const RewardBreakdown& rb) {
    Json j;
    j["total"] = rb.total;
    j["r_type"] = rb.r_type;
    j["r_key"] = rb.r_key;
    if (rb.r_rec) j["r_rec"] = *rb.r_rec;
    j["gated"] = rb.gated;
    return j;
}

namespace detail {

inline const std::pair<Image, Image>& cached_images(ServerContext& ctx,
                                                    const ManifestRecord& rec) {
    std::lock_guard<std::mutex> lock(ctx.cache->mutex);
    auto it = ctx.cache->images.find(rec.id);
    if (it == ctx.cache->images.end()) {
        namespace fs = std::filesystem;
        Image clean = load_png((fs::path(ctx.base_dir) / rec.clean_path).string());
        Image deg = load_png((fs::path(ctx.base_dir) / rec.degraded_path).string());
        it = ctx.cache->images.emplace(rec.id, std::make_pair(std::move(clean), std::move(deg)))
                 .first;
    }
    return it->second;
}

// A prediction that does not even parse as a spec document is still policy
// output, so it earns the gate penalty rather than a protocol error.
inline RewardBreakdown score_one(ServerContext& ctx, const std::string& sample_id,
                                 const Json& prediction) {
    auto idx = ctx.by_id.find(sample_id);
    if (idx == ctx.by_id.end()) throw ServerError("unknown sample_id: " + sample_id);
    const ManifestRecord& rec = ctx.records[idx->second];

    Prediction pred;
    try {
        pred.spec = spec_from_json(prediction);
    } catch (const std::exception&) {
        return RewardBreakdown{};  // gated: r_type = r_key = 0, total = -1
    }

    const auto& [clean, deg] = cached_images(ctx, rec);
    int r = ctx.resolution;
    RestorerFn base = ctx.restorer;
    RestorerFn effective = [r, base](const Image& d, const DegradationSpec& s) {
        Image out = base ? base(d, s) : restore(d, s);
        return r > 0 ? resize_bicubic(out, r, r) : out;
    };
    Image clean_ref = r > 0 ? resize_bicubic(clean, r, r) : clean;
    return compute_reward(deg, pred, rec.spec, clean_ref, effective);
}

inline Json error_response(const Json& request_id, const std::string& message) {
    Json j;
    if (!request_id.is_null()) j["request_id"] = request_id;
    j["error"] = message;
    return j;
}

} // namespace detail

// One request object in, one response object out. Never throws: every
// failure maps to a response with an error field so the connection
// survives bad input.
inline Json handle_request(ServerContext& ctx, const Json& request) {
    if (!request.is_object())
        return detail::error_response(nullptr, "request must be an object");
    Json request_id = request.contains("request_id") ? request["request_id"] : Json(nullptr);
    if (request_id.is_null())
        return detail::error_response(nullptr, "missing request_id");

    try {
        if (request.contains("group")) {
            const Json& group = request["group"];
            if (!group.is_array() || group.size() < 2)
                return detail::error_response(request_id, "group needs at least 2 entries");
            Json rewards = Json::array();
            std::vector<double> totals;
            for (const auto& item : group) {
                if (!item.is_object() || !item.contains("sample_id") ||
                    !item.contains("prediction"))
                    return detail::error_response(request_id,
                                                  "group entries need sample_id and prediction");
                RewardBreakdown rb = detail::score_one(
                    ctx, item["sample_id"].get<std::string>(), item["prediction"]);
                rewards.push_back(breakdown_to_json(rb));
                totals.push_back(rb.total);
            }
            Json resp;
            resp["request_id"] = request_id;
            resp["rewards"] = rewards;
            resp["advantages"] = group_advantages(totals);
            return resp;
        }

        if (!request.contains("sample_id") || !request.contains("prediction"))
            return detail::error_response(request_id, "missing sample_id or prediction");
        if (!request["sample_id"].is_string())
            return detail::error_response(request_id, "sample_id must be a string");
        RewardBreakdown rb =
            detail::score_one(ctx, request["sample_id"].get<std::string>(), request["prediction"]);
        Json resp = breakdown_to_json(rb);
        resp["request_id"] = request_id;
        return resp;
    } catch (const std::exception& e) {
        return detail::error_response(request_id, e.what());
    }
}

inline std::string handle_request_line(ServerContext& ctx, const std::string& line) {
    Json request = Json::parse(line, nullptr, false);
    if (request.is_discarded())
        return detail::error_response(nullptr, "malformed request line").dump();
    return handle_request(ctx, request).dump();
}

// Standard-stream mode: one request per input line, one response per output
// line, strict FIFO.
inline void serve_stream(ServerContext& ctx, std::istream& in, std::ostream& out) {
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        out << handle_request_line(ctx, line) << "\n" << std::flush;
    }
}

// TCP mode. Each connection gets its own thread with FIFO request handling;
// nothing is ordered across connections.
class TcpRewardServer {
  public:
    TcpRewardServer(ServerContext& ctx, const std::string& host, int port) : ctx_(ctx) {
        listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
        if (listen_fd_ < 0) throw ServerError("socket creation failed");
        int one = 1;
        ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);

        sockaddr_in addr{};
        addr.sin_family = AF_INET;
        addr.sin_port = htons(static_cast<uint16_t>(port));
        if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1) {
            ::close(listen_fd_);
            throw ServerError("bad listen address: " + host);
        }
        if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) < 0) {
            ::close(listen_fd_);
            throw ServerError("bind failed on " + host);
        }
        if (::listen(listen_fd_, 16) < 0) {
            ::close(listen_fd_);
            throw ServerError("listen failed");
        }
        sockaddr_in bound{};
        socklen_t len = sizeof bound;
        ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&bound), &len);
        port_ = ntohs(bound.sin_port);
    }

    ~TcpRewardServer() { stop(); }

    int port() const { return port_; }

    void run() {
        for (;;) {
            int fd = ::accept(listen_fd_, nullptr, nullptr);
            if (fd < 0) break;  // listen socket closed by stop()
            {
                std::lock_guard<std::mutex> lock(conn_mutex_);
                if (stopping_) {
                    ::close(fd);
                    break;
                }
                conn_fds_.push_back(fd);
            }
            workers_.emplace_back([this, fd]() { serve_connection(fd); });
        }
        for (auto& t : workers_)
            if (t.joinable()) t.join();
        workers_.clear();
    }

    void stop() {
        bool expected = false;
        if (!stopping_.compare_exchange_strong(expected, true)) return;
        ::shutdown(listen_fd_, SHUT_RDWR);
        ::close(listen_fd_);
        std::lock_guard<std::mutex> lock(conn_mutex_);
        for (int fd : conn_fds_) ::shutdown(fd, SHUT_RDWR);
    }

  private:
    void serve_connection(int fd) {
        std::string acc;
        char buf[4096];
        for (;;) {
            ssize_t got = ::recv(fd, buf, sizeof buf, 0);
            if (got <= 0) break;
            acc.append(buf, static_cast<size_t>(got));
            size_t pos;
            while ((pos = acc.find('\n')) != std::string::npos) {
                std::string line = acc.substr(0, pos);
                acc.erase(0, pos + 1);
                if (!line.empty() && line.back() == '\r') line.pop_back();
                if (line.empty()) continue;
                std::string resp = handle_request_line(ctx_, line) + "\n";
                size_t sent = 0;
                while (sent < resp.size()) {
                    ssize_t n = ::send(fd, resp.data() + sent, resp.size() - sent, 0);
                    if (n <= 0) { ::close(fd); return; }
                    sent += static_cast<size_t>(n);
                }
            }
        }
        ::close(fd);
    }

    ServerContext& ctx_;
    int listen_fd_ = -1;
    int port_ = 0;
    std::atomic<bool> stopping_{false};
    std::mutex conn_mutex_;
    std::vector<int> conn_fds_;
    std::vector<std::thread> workers_;
};

} // namespace duforge
