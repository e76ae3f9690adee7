#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <string>
#include <vector>

#include "fedsim/errors.hpp"
#include "fedsim/model.hpp"

namespace fedsim {

enum class Dtype : std::uint8_t { f32 = 1, f64 = 2 };

inline std::size_t dtype_width(Dtype d) {
    switch (d) {
        case Dtype::f32: return 4;
        case Dtype::f64: return 8;
    }
    throw ValueError("unknown dtype");
}

inline const char* dtype_name(Dtype d) { return d == Dtype::f32 ? "f32" : "f64"; }

inline Dtype dtype_from_name(const std::string& s) {
    if (s == "f32") return Dtype::f32;
    if (s == "f64") return Dtype::f64;
    throw ConfigError("unknown dtype '" + s + "' (known: f32, f64)");
}

// A model's full exchangeable state, detached from any layer objects. Values
// are held as doubles regardless of the wire dtype; the dtype says how they
// are put on the wire.
struct ModelParams {
    std::string arch_name;
    Dtype dtype = Dtype::f32;
    std::vector<double> values;
};

template <typename Scalar>
ModelParams extract_params(Model<Scalar>& model, const std::string& arch_name, Dtype dtype) {
    ModelParams p;
    p.arch_name = arch_name;
    p.dtype = dtype;
    p.values = model.state_to_flat();
    return p;
}

template <typename Scalar>
void load_params(Model<Scalar>& model, const ModelParams& p) {
    model.load_state_flat(p.values);
}

namespace detail {

inline void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    out.push_back(static_cast<std::uint8_t>(v));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
    out.push_back(static_cast<std::uint8_t>(v >> 16));
    out.push_back(static_cast<std::uint8_t>(v >> 24));
}

inline void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

inline std::uint32_t get_u32(const std::uint8_t* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

inline std::uint64_t get_u64(const std::uint8_t* p) {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
    return v;
}

inline void put_f32(std::vector<std::uint8_t>& out, float v) {
    put_u32(out, std::bit_cast<std::uint32_t>(v));
}

inline void put_f64(std::vector<std::uint8_t>& out, double v) {
    put_u64(out, std::bit_cast<std::uint64_t>(v));
}

inline float get_f32(const std::uint8_t* p) { return std::bit_cast<float>(get_u32(p)); }
inline double get_f64(const std::uint8_t* p) { return std::bit_cast<double>(get_u64(p)); }

} // namespace detail

// Little-endian IEEE-754 packing of the value vector, 4 or 8 bytes each.
inline std::vector<std::uint8_t> serialize_values(const std::vector<double>& values, Dtype dtype) {
    std::vector<std::uint8_t> out;
    out.reserve(values.size() * dtype_width(dtype));
    for (double v : values) {
        if (!std::isfinite(v)) throw ValueError("serialize: non-finite parameter value");
        if (dtype == Dtype::f32) {
            const auto narrowed = static_cast<float>(v);
            if (!std::isfinite(narrowed)) {
                throw ValueError("serialize: value overflows the f32 wire format");
            }
            detail::put_f32(out, narrowed);
        } else {
            detail::put_f64(out, v);
        }
    }
    return out;
}

inline std::vector<double> deserialize_values(const std::uint8_t* data, std::size_t size,
                                              Dtype dtype) {
    const std::size_t width = dtype_width(dtype);
    if (size % width != 0) {
        throw ProtocolError("parameter payload of " + std::to_string(size) +
                            " bytes is not a multiple of " + std::to_string(width));
    }
    std::vector<double> out;
    out.reserve(size / width);
    for (std::size_t i = 0; i < size; i += width) {
        const double v = dtype == Dtype::f32 ? static_cast<double>(detail::get_f32(data + i))
                                             : detail::get_f64(data + i);
        if (!std::isfinite(v)) throw ProtocolError("deserialize: non-finite parameter value");
        out.push_back(v);
    }
    return out;
}

} // namespace fedsim
