#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "fedsim/errors.hpp"
#include "fedsim/frame.hpp"
#include "fedsim/meter.hpp"
#include "fedsim/params.hpp"

namespace fedsim {

// Server-side handle to one connected client.
class ClientChannel {
public:
    virtual ~ClientChannel() = default;
    virtual std::uint32_t rank() const = 0;
    virtual void send(const Frame& f) = 0;
    virtual Frame recv() = 0;
};

// Server-side view of the whole cohort. Channels are live after construction
// (the cohort owns the join handshake) and shut down on close().
class Cohort {
public:
    virtual ~Cohort() = default;
    virtual std::size_t num_clients() const = 0;
    virtual ClientChannel& client(std::size_t index) = 0;
    virtual const TrafficMeter& meter() const = 0;
    virtual void close() = 0;
};

// ---- traffic prediction -----------------------------------------------------
//
// The byte cost of a round and of a whole session are pure functions of the
// transmitted parameter count, the wire dtype and the participant counts, so
// the expected numbers can be computed without running anything. The metered
// counts of a real run must match these exactly.

struct RoundTraffic {
    std::uint64_t model_frame_bytes = 0;  // one GLOBAL_MODEL or LOCAL_UPDATE frame
    std::uint64_t model_exchange = 0;     // m downlinks + m uplinks, model frames only
    std::uint64_t eval_reports = 0;       // m EVAL_REPORT frames
    std::uint64_t to_clients = 0;
    std::uint64_t to_server = 0;

    std::uint64_t total() const { return to_clients + to_server; }
};

inline std::uint64_t model_frame_bytes(std::size_t transmitted_count, Dtype dtype) {
    return kFrameHeaderBytes + static_cast<std::uint64_t>(transmitted_count) * dtype_width(dtype);
}

inline std::uint64_t eval_report_bytes() { return kFrameHeaderBytes + 16; }

inline std::uint64_t join_frame_bytes(std::size_t arch_name_len) {
    return kFrameHeaderBytes + 10 + arch_name_len;
}

inline std::uint64_t shutdown_frame_bytes() { return kFrameHeaderBytes; }

// One round with m participating clients: the server sends each one the
// global model, each sends back its update plus one evaluation report.
inline RoundTraffic round_traffic(std::size_t transmitted_count, Dtype dtype, std::size_t m) {
    RoundTraffic t;
    t.model_frame_bytes = model_frame_bytes(transmitted_count, dtype);
    t.model_exchange = 2 * static_cast<std::uint64_t>(m) * t.model_frame_bytes;
    t.eval_reports = static_cast<std::uint64_t>(m) * eval_report_bytes();
    t.to_clients = static_cast<std::uint64_t>(m) * t.model_frame_bytes;
    t.to_server = static_cast<std::uint64_t>(m) * t.model_frame_bytes + t.eval_reports;
    return t;
}

struct SessionTraffic {
    std::uint64_t joins = 0;
    std::uint64_t shutdowns = 0;
    std::uint64_t to_clients = 0;
    std::uint64_t to_server = 0;

    std::uint64_t total() const { return to_clients + to_server; }
};

// A whole session: every client joins once, every round exchanges models and
// reports, every client is told to shut down at the end.
inline SessionTraffic session_traffic(std::size_t transmitted_count, Dtype dtype,
                                      std::size_t num_clients, const std::string& arch_name,
                                      const std::vector<std::size_t>& clients_per_round) {
    SessionTraffic s;
    s.joins = static_cast<std::uint64_t>(num_clients) * join_frame_bytes(arch_name.size());
    s.shutdowns = static_cast<std::uint64_t>(num_clients) * shutdown_frame_bytes();
    s.to_server = s.joins;
    s.to_clients = s.shutdowns;
    for (std::size_t m : clients_per_round) {
        const RoundTraffic r = round_traffic(transmitted_count, dtype, m);
        s.to_clients += r.to_clients;
        s.to_server += r.to_server;
    }
    return s;
}

} // namespace fedsim
