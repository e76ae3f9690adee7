#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <mutex>

#include "fedsim/errors.hpp"

namespace fedsim {

enum class Direction { to_clients, to_server };

struct TrafficTotals {
    std::uint64_t to_clients = 0;
    std::uint64_t to_server = 0;

    std::uint64_t total() const { return to_clients + to_server; }
};

// Counts bytes actually put on (or taken off) the wire, by direction and by
// round. A frame is only recorded once it has been fully validated; rejected
// garbage never counts.
class TrafficMeter {
public:
    void record(Direction dir, std::uint32_t round, std::uint64_t bytes) {
        std::lock_guard lock(mu_);
        if (dir == Direction::to_clients) {
            totals_.to_clients += bytes;
            rounds_[round].to_clients += bytes;
        } else {
            totals_.to_server += bytes;
            rounds_[round].to_server += bytes;
        }
    }

    TrafficTotals totals() const {
        std::lock_guard lock(mu_);
        return totals_;
    }

    TrafficTotals round_totals(std::uint32_t round) const {
        std::lock_guard lock(mu_);
        const auto it = rounds_.find(round);
        return it == rounds_.end() ? TrafficTotals{} : it->second;
    }

    std::map<std::uint32_t, TrafficTotals> by_round() const {
        std::lock_guard lock(mu_);
        return rounds_;
    }

    void reset() {
        std::lock_guard lock(mu_);
        totals_ = {};
        rounds_.clear();
    }

private:
    mutable std::mutex mu_;
    TrafficTotals totals_;
    std::map<std::uint32_t, TrafficTotals> rounds_;
};

} // namespace fedsim
