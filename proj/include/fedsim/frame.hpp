#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "fedsim/errors.hpp"
#include "fedsim/params.hpp"

namespace fedsim {

// Wire format. Every message is one frame:
//
//   offset  size  field
//   0       4     magic "FLML"
//   4       1     version (1)
//   5       1     message type
//   6       1     dtype of any parameter payload (1 = f32, 2 = f64)
//   7       1     reserved (0)
//   8       4     round, little-endian
//   12      8     sample count, little-endian
//   20      8     payload length, little-endian
//   28      ...   payload
//
// Multi-byte integers and floats are little-endian throughout.

inline constexpr std::size_t kFrameHeaderBytes = 28;
inline constexpr std::array<std::uint8_t, 4> kFrameMagic{'F', 'L', 'M', 'L'};
inline constexpr std::uint8_t kFrameVersion = 1;
inline constexpr std::uint64_t kMaxPayloadBytes = std::uint64_t(1) << 30;

enum class MsgType : std::uint8_t {
    join = 1,
    global_model = 2,
    local_update = 3,
    eval_report = 4,
    shutdown = 5,
    error = 6,
};

inline const char* msg_type_name(MsgType t) {
    switch (t) {
        case MsgType::join: return "JOIN";
        case MsgType::global_model: return "GLOBAL_MODEL";
        case MsgType::local_update: return "LOCAL_UPDATE";
        case MsgType::eval_report: return "EVAL_REPORT";
        case MsgType::shutdown: return "SHUTDOWN";
        case MsgType::error: return "ERROR";
    }
    return "?";
}

struct Frame {
    MsgType type = MsgType::error;
    Dtype dtype = Dtype::f32;
    std::uint32_t round = 0;
    std::uint64_t sample_count = 0;
    std::vector<std::uint8_t> payload;

    std::size_t wire_bytes() const { return kFrameHeaderBytes + payload.size(); }
};

struct FrameHeader {
    MsgType type;
    Dtype dtype;
    std::uint32_t round;
    std::uint64_t sample_count;
    std::uint64_t payload_len;
};

inline std::vector<std::uint8_t> encode_frame(const Frame& f) {
    if (f.payload.size() > kMaxPayloadBytes) {
        throw ProtocolError("frame payload exceeds the 1 GiB limit");
    }
    std::vector<std::uint8_t> out;
    out.reserve(kFrameHeaderBytes + f.payload.size());
    out.insert(out.end(), kFrameMagic.begin(), kFrameMagic.end());
    out.push_back(kFrameVersion);
    out.push_back(static_cast<std::uint8_t>(f.type));
    out.push_back(static_cast<std::uint8_t>(f.dtype));
    out.push_back(0);
    detail::put_u32(out, f.round);
    detail::put_u64(out, f.sample_count);
    detail::put_u64(out, f.payload.size());
    out.insert(out.end(), f.payload.begin(), f.payload.end());
    return out;
}

// Validates and decodes the fixed 28-byte header.
inline FrameHeader parse_header(const std::uint8_t* p) {
    for (std::size_t i = 0; i < kFrameMagic.size(); ++i) {
        if (p[i] != kFrameMagic[i]) throw ProtocolError("bad frame magic");
    }
    if (p[4] != kFrameVersion) {
        throw ProtocolError("unsupported frame version " + std::to_string(p[4]));
    }
    if (p[5] < 1 || p[5] > 6) {
        throw ProtocolError("unknown message type " + std::to_string(p[5]));
    }
    if (p[6] != 1 && p[6] != 2) {
        throw ProtocolError("unknown dtype code " + std::to_string(p[6]));
    }
    if (p[7] != 0) throw ProtocolError("nonzero reserved byte");
    FrameHeader h;
    h.type = static_cast<MsgType>(p[5]);
    h.dtype = static_cast<Dtype>(p[6]);
    h.round = detail::get_u32(p + 8);
    h.sample_count = detail::get_u64(p + 12);
    h.payload_len = detail::get_u64(p + 20);
    if (h.payload_len > kMaxPayloadBytes) {
        throw ProtocolError("frame payload exceeds the 1 GiB limit");
    }
    return h;
}

inline Frame decode_frame(const std::uint8_t* data, std::size_t size) {
    if (size < kFrameHeaderBytes) {
        throw ProtocolError("frame truncated: " + std::to_string(size) + " bytes");
    }
    const FrameHeader h = parse_header(data);
    if (size != kFrameHeaderBytes + h.payload_len) {
        throw ProtocolError("frame length mismatch: header says " +
                            std::to_string(h.payload_len) + " payload bytes, have " +
                            std::to_string(size - kFrameHeaderBytes));
    }
    Frame f;
    f.type = h.type;
    f.dtype = h.dtype;
    f.round = h.round;
    f.sample_count = h.sample_count;
    f.payload.assign(data + kFrameHeaderBytes, data + size);
    return f;
}

inline Frame decode_frame(const std::vector<std::uint8_t>& bytes) {
    return decode_frame(bytes.data(), bytes.size());
}

// ---- typed messages ---------------------------------------------------------

struct JoinInfo {
    std::uint32_t rank;
    std::uint32_t world_size;
    std::string arch_name;
};

// JOIN payload: u32 rank, u32 world size, u16 name length, arch name bytes.
inline Frame make_join(std::uint32_t rank, std::uint32_t world_size, const std::string& arch_name,
                       Dtype dtype) {
    if (arch_name.size() > 0xffff) throw ProtocolError("arch name too long");
    Frame f;
    f.type = MsgType::join;
    f.dtype = dtype;
    detail::put_u32(f.payload, rank);
    detail::put_u32(f.payload, world_size);
    f.payload.push_back(static_cast<std::uint8_t>(arch_name.size()));
    f.payload.push_back(static_cast<std::uint8_t>(arch_name.size() >> 8));
    f.payload.insert(f.payload.end(), arch_name.begin(), arch_name.end());
    return f;
}

inline JoinInfo parse_join(const Frame& f) {
    if (f.type != MsgType::join) throw ProtocolError("not a JOIN frame");
    if (f.payload.size() < 10) throw ProtocolError("JOIN payload truncated");
    JoinInfo j;
    j.rank = detail::get_u32(f.payload.data());
    j.world_size = detail::get_u32(f.payload.data() + 4);
    const std::size_t name_len = f.payload[8] | (static_cast<std::size_t>(f.payload[9]) << 8);
    if (f.payload.size() != 10 + name_len) throw ProtocolError("JOIN payload length mismatch");
    j.arch_name.assign(f.payload.begin() + 10, f.payload.end());
    return j;
}

inline Frame make_global_model(std::uint32_t round, const ModelParams& params) {
    Frame f;
    f.type = MsgType::global_model;
    f.dtype = params.dtype;
    f.round = round;
    f.payload = serialize_values(params.values, params.dtype);
    return f;
}

inline Frame make_local_update(std::uint32_t round, std::uint64_t sample_count,
                               const ModelParams& params) {
    Frame f;
    f.type = MsgType::local_update;
    f.dtype = params.dtype;
    f.round = round;
    f.sample_count = sample_count;
    f.payload = serialize_values(params.values, params.dtype);
    return f;
}

inline std::vector<double> parse_model_payload(const Frame& f) {
    if (f.type != MsgType::global_model && f.type != MsgType::local_update) {
        throw ProtocolError("frame carries no model payload");
    }
    return deserialize_values(f.payload.data(), f.payload.size(), f.dtype);
}

struct EvalReport {
    double loss;
    double wall_seconds;
};

// EVAL_REPORT payload: two f64, the local training loss and the wall time.
inline Frame make_eval_report(std::uint32_t round, std::uint64_t sample_count, double loss,
                              double wall_seconds) {
    Frame f;
    f.type = MsgType::eval_report;
    f.round = round;
    f.sample_count = sample_count;
    detail::put_f64(f.payload, loss);
    detail::put_f64(f.payload, wall_seconds);
    return f;
}

inline EvalReport parse_eval_report(const Frame& f) {
    if (f.type != MsgType::eval_report) throw ProtocolError("not an EVAL_REPORT frame");
    if (f.payload.size() != 16) throw ProtocolError("EVAL_REPORT payload must be 16 bytes");
    return {detail::get_f64(f.payload.data()), detail::get_f64(f.payload.data() + 8)};
}

inline Frame make_shutdown() {
    Frame f;
    f.type = MsgType::shutdown;
    return f;
}

inline Frame make_error(const std::string& text) {
    Frame f;
    f.type = MsgType::error;
    f.payload.assign(text.begin(), text.end());
    return f;
}

inline std::string error_text(const Frame& f) {
    if (f.type != MsgType::error) throw ProtocolError("not an ERROR frame");
    return std::string(f.payload.begin(), f.payload.end());
}

} // namespace fedsim
