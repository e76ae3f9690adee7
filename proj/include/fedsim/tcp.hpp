#pragma once

#include <arpa/inet.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <atomic>
#include <cerrno>
#include <chrono>
#include <cstring>
#include <memory>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "fedsim/errors.hpp"
#include "fedsim/federation.hpp"
#include "fedsim/frame.hpp"
#include "fedsim/meter.hpp"
#include "fedsim/transport.hpp"

namespace fedsim {

namespace net {

class Socket {
public:
    Socket() = default;
    explicit Socket(int fd) : fd_(fd) {}
    Socket(Socket&& o) noexcept : fd_(std::exchange(o.fd_, -1)) {}
    Socket& operator=(Socket&& o) noexcept {
        if (this != &o) {
            close();
            fd_ = std::exchange(o.fd_, -1);
        }
        return *this;
    }
    Socket(const Socket&) = delete;
    Socket& operator=(const Socket&) = delete;
    ~Socket() { close(); }

    int fd() const { return fd_; }
    bool valid() const { return fd_ >= 0; }

    void close() {
        if (fd_ >= 0) {
            ::close(fd_);
            fd_ = -1;
        }
    }

private:
    int fd_ = -1;
};

inline void write_all(int fd, const std::uint8_t* data, std::size_t size) {
    std::size_t sent = 0;
    while (sent < size) {
        const ssize_t n = ::send(fd, data + sent, size - sent, MSG_NOSIGNAL);
        if (n < 0) {
            if (errno == EINTR) continue;
            throw ProtocolError(std::string("send failed: ") + std::strerror(errno));
        }
        sent += static_cast<std::size_t>(n);
    }
}

inline void read_exact(int fd, std::uint8_t* data, std::size_t size) {
    std::size_t got = 0;
    while (got < size) {
        const ssize_t n = ::recv(fd, data + got, size - got, 0);
        if (n < 0) {
            if (errno == EINTR) continue;
            throw ProtocolError(std::string("recv failed: ") + std::strerror(errno));
        }
        if (n == 0) throw ProtocolError("connection closed mid-frame");
        got += static_cast<std::size_t>(n);
    }
}

inline void write_frame(int fd, const Frame& f) {
    const auto bytes = encode_frame(f);
    write_all(fd, bytes.data(), bytes.size());
}

inline Frame read_frame(int fd) {
    std::uint8_t header[kFrameHeaderBytes];
    read_exact(fd, header, kFrameHeaderBytes);
    const FrameHeader h = parse_header(header);
    Frame f;
    f.type = h.type;
    f.dtype = h.dtype;
    f.round = h.round;
    f.sample_count = h.sample_count;
    f.payload.resize(h.payload_len);
    if (h.payload_len > 0) read_exact(fd, f.payload.data(), h.payload_len);
    return f;
}

inline sockaddr_in make_addr(const std::string& ip, std::uint16_t port) {
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(port);
    if (::inet_pton(AF_INET, ip.c_str(), &addr.sin_addr) != 1) {
        throw ConfigError("bad IPv4 address '" + ip + "'");
    }
    return addr;
}

inline Socket listen_on(const std::string& ip, std::uint16_t port, int backlog) {
    Socket s(::socket(AF_INET, SOCK_STREAM, 0));
    if (!s.valid()) throw IoError(std::string("socket failed: ") + std::strerror(errno));
    const int one = 1;
    ::setsockopt(s.fd(), SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
    const sockaddr_in addr = make_addr(ip, port);
    if (::bind(s.fd(), reinterpret_cast<const sockaddr*>(&addr), sizeof(addr)) != 0) {
        throw IoError("bind to " + ip + ":" + std::to_string(port) + " failed: " +
                      std::strerror(errno));
    }
    if (::listen(s.fd(), backlog) != 0) {
        throw IoError(std::string("listen failed: ") + std::strerror(errno));
    }
    return s;
}

inline Socket connect_to(const std::string& ip, std::uint16_t port, double timeout_seconds) {
    const sockaddr_in addr = make_addr(ip, port);
    const auto deadline =
        std::chrono::steady_clock::now() + std::chrono::duration<double>(timeout_seconds);
    while (true) {
        Socket s(::socket(AF_INET, SOCK_STREAM, 0));
        if (!s.valid()) throw IoError(std::string("socket failed: ") + std::strerror(errno));
        if (::connect(s.fd(), reinterpret_cast<const sockaddr*>(&addr), sizeof(addr)) == 0) {
            const int one = 1;
            ::setsockopt(s.fd(), IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
            return s;
        }
        if (std::chrono::steady_clock::now() >= deadline) {
            throw IoError("connect to " + ip + ":" + std::to_string(port) + " failed: " +
                          std::strerror(errno));
        }
        std::this_thread::sleep_for(std::chrono::milliseconds(50));
    }
}

} // namespace net

// Server-side channel over one accepted connection. Bytes are counted only
// after a frame has been fully read and validated.
class TcpChannel : public ClientChannel {
public:
    TcpChannel(net::Socket sock, std::uint32_t rank, TrafficMeter& meter)
        : sock_(std::move(sock)), rank_(rank), meter_(meter) {}

    std::uint32_t rank() const override { return rank_; }

    void send(const Frame& f) override {
        net::write_frame(sock_.fd(), f);
        meter_.record(Direction::to_clients, f.round, f.wire_bytes());
    }

    Frame recv() override {
        Frame f = net::read_frame(sock_.fd());
        meter_.record(Direction::to_server, f.round, f.wire_bytes());
        return f;
    }

    void close_socket() { sock_.close(); }

private:
    net::Socket sock_;
    std::uint32_t rank_;
    TrafficMeter& meter_;
};

// Accepts exactly K clients, one per rank, validating every JOIN before it
// counts. Latecomers and malformed joiners get an ERROR frame and a closed
// connection; a valid session is never disturbed by them.
class TcpCohort : public Cohort {
public:
    TcpCohort(const FedConfig& cfg, const std::string& arch_name, const std::string& ip,
              std::uint16_t port)
        : cfg_(cfg) {
        cfg.validate();
        listener_ = net::listen_on(ip, port, static_cast<int>(cfg.clients) + 4);
        channels_.resize(cfg.clients);
        std::size_t joined = 0;
        while (joined < cfg.clients) {
            net::Socket conn(::accept(listener_.fd(), nullptr, nullptr));
            if (!conn.valid()) {
                if (errno == EINTR) continue;
                throw IoError(std::string("accept failed: ") + std::strerror(errno));
            }
            const int one = 1;
            ::setsockopt(conn.fd(), IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
            try {
                const Frame f = net::read_frame(conn.fd());
                const JoinInfo j = parse_join(f);
                if (j.rank == 0 || j.rank > cfg.clients) {
                    reject(conn, "rank " + std::to_string(j.rank) + " out of range [1, " +
                                     std::to_string(cfg.clients) + "]");
                    continue;
                }
                if (channels_[j.rank - 1]) {
                    reject(conn, "rank " + std::to_string(j.rank) + " already joined");
                    continue;
                }
                if (j.world_size != cfg.world_size()) {
                    reject(conn, "world size " + std::to_string(j.world_size) + ", expected " +
                                     std::to_string(cfg.world_size()));
                    continue;
                }
                if (j.arch_name != arch_name) {
                    reject(conn, "arch '" + j.arch_name + "', expected '" + arch_name + "'");
                    continue;
                }
                if (f.dtype != cfg.wire_dtype) {
                    reject(conn, "wire dtype mismatch");
                    continue;
                }
                meter_.record(Direction::to_server, 0, f.wire_bytes());
                channels_[j.rank - 1] =
                    std::make_unique<TcpChannel>(std::move(conn), j.rank, meter_);
                ++joined;
            } catch (const ProtocolError&) {
                // Garbage on the socket: drop the connection, count nothing.
            }
        }
        // Keep answering stray connects until close() so a late client gets
        // a clean refusal instead of a hang.
        rejector_ = std::thread([this] {
            while (!stopping_.load()) {
                net::Socket conn(::accept(listener_.fd(), nullptr, nullptr));
                if (!conn.valid()) {
                    if (errno == EINTR && !stopping_.load()) continue;
                    return;
                }
                try {
                    reject(conn, "cohort is full");
                } catch (const ProtocolError&) {
                }
            }
        });
    }

    ~TcpCohort() override { close(); }

    std::size_t num_clients() const override { return channels_.size(); }

    ClientChannel& client(std::size_t index) override { return *channels_.at(index); }

    const TrafficMeter& meter() const override { return meter_; }

    void close() override {
        if (closed_) return;
        closed_ = true;
        for (auto& ch : channels_) {
            if (ch) {
                try {
                    ch->send(make_shutdown());
                } catch (const ProtocolError&) {
                }
                ch->close_socket();
            }
        }
        stopping_.store(true);
        ::shutdown(listener_.fd(), SHUT_RDWR);
        if (rejector_.joinable()) rejector_.join();
        listener_.close();
    }

private:
    void reject(net::Socket& conn, const std::string& why) {
        net::write_frame(conn.fd(), make_error(why));
        conn.close();
    }

    FedConfig cfg_;
    net::Socket listener_;
    std::vector<std::unique_ptr<TcpChannel>> channels_;
    TrafficMeter meter_;
    std::thread rejector_;
    std::atomic<bool> stopping_{false};
    bool closed_ = false;
};

// Client main loop: connect (retrying while the server comes up), join, then
// serve training requests until SHUTDOWN.
template <typename Scalar>
void run_tcp_client(const std::string& ip, std::uint16_t port, std::uint32_t rank,
                    const ArchDescriptor& arch, Dataset<Scalar> shard, const FedConfig& cfg,
                    double connect_timeout_seconds = 30.0) {
    ClientLogic<Scalar> logic(rank, arch, std::move(shard), cfg);
    net::Socket sock = net::connect_to(ip, port, connect_timeout_seconds);
    net::write_frame(sock.fd(), logic.join_frame());
    while (!logic.done()) {
        const Frame f = net::read_frame(sock.fd());
        for (const Frame& reply : logic.on_frame(f)) {
            net::write_frame(sock.fd(), reply);
        }
    }
}

} // namespace fedsim
