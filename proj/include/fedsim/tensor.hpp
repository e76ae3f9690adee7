#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include "fedsim/errors.hpp"

namespace fedsim {

// Dense row-major tensor. Carrier for parameters, activations, and gradients.
template <typename Scalar>
struct Tensor {
    static_assert(std::is_floating_point_v<Scalar>,
                  "Tensor elements must be 32- or 64-bit floating point");

    std::vector<std::size_t> shape;
    std::vector<Scalar> data;

    Tensor() = default;

    explicit Tensor(std::vector<std::size_t> s)
        : shape(std::move(s)), data(checked_numel(shape), Scalar(0)) {}

    Tensor(std::vector<std::size_t> s, std::vector<Scalar> d)
        : shape(std::move(s)), data(std::move(d)) {
        if (checked_numel(shape) != data.size()) {
            throw ShapeError("tensor data length " + std::to_string(data.size()) +
                             " does not match shape product " +
                             std::to_string(checked_numel(shape)));
        }
    }

    std::size_t numel() const { return data.size(); }
    std::size_t rank() const { return shape.size(); }
    std::size_t dim(std::size_t i) const { return shape[i]; }

    Scalar& operator[](std::size_t i) { return data[i]; }
    const Scalar& operator[](std::size_t i) const { return data[i]; }

    // [rows, cols] access
    Scalar& at(std::size_t r, std::size_t c) { return data[r * shape[1] + c]; }
    const Scalar& at(std::size_t r, std::size_t c) const { return data[r * shape[1] + c]; }

    // [batch, channel, row, col] access
    Scalar& at(std::size_t n, std::size_t c, std::size_t h, std::size_t w) {
        return data[((n * shape[1] + c) * shape[2] + h) * shape[3] + w];
    }
    const Scalar& at(std::size_t n, std::size_t c, std::size_t h, std::size_t w) const {
        return data[((n * shape[1] + c) * shape[2] + h) * shape[3] + w];
    }

    void fill(Scalar v) { std::fill(data.begin(), data.end(), v); }

    bool all_finite() const {
        for (const Scalar v : data) {
            if (!std::isfinite(v)) return false;
        }
        return true;
    }

    // Same data, new shape; element counts must agree.
    Tensor reshaped(std::vector<std::size_t> s) const {
        Tensor out;
        if (checked_numel(s) != data.size()) {
            throw ShapeError("reshape to incompatible element count");
        }
        out.shape = std::move(s);
        out.data = data;
        return out;
    }

    bool same_shape(const Tensor& other) const { return shape == other.shape; }

    static std::size_t checked_numel(const std::vector<std::size_t>& s) {
        std::size_t n = 1;
        for (std::size_t e : s) {
            if (e == 0) throw ShapeError("tensor extents must be positive");
            n *= e;
        }
        return n;
    }
};

inline std::string shape_string(const std::vector<std::size_t>& s) {
    std::string out = "[";
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (i) out += ", ";
        out += std::to_string(s[i]);
    }
    out += "]";
    return out;
}

} // namespace fedsim
