#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "fedsim/errors.hpp"
#include "fedsim/tensor.hpp"

namespace fedsim {

template <typename Scalar>
struct LossResult {
    double value;            // mean over the batch
    Tensor<Scalar> dlogits;  // gradient of the mean loss w.r.t. the logits
};

// Softmax cross-entropy over [batch, classes] logits with integer labels.
// Uses the max-shift trick; the gradient is (softmax - onehot) / batch.
template <typename Scalar>
LossResult<Scalar> softmax_cross_entropy(const Tensor<Scalar>& logits,
                                         const std::vector<std::size_t>& labels) {
    if (logits.rank() != 2) {
        throw ShapeError("loss: expected logits [batch, classes], got " +
                         shape_string(logits.shape));
    }
    const std::size_t batch = logits.shape[0], classes = logits.shape[1];
    if (labels.size() != batch) {
        throw ShapeError("loss: " + std::to_string(batch) + " rows but " +
                         std::to_string(labels.size()) + " labels");
    }
    LossResult<Scalar> out{0.0, Tensor<Scalar>({batch, classes})};
    double total = 0.0;
    for (std::size_t n = 0; n < batch; ++n) {
        if (labels[n] >= classes) {
            throw ValueError("loss: label " + std::to_string(labels[n]) + " out of range for " +
                             std::to_string(classes) + " classes");
        }
        const Scalar* row = &logits.data[n * classes];
        double mx = row[0];
        for (std::size_t c = 1; c < classes; ++c) mx = std::max<double>(mx, row[c]);
        double denom = 0.0;
        for (std::size_t c = 0; c < classes; ++c) denom += std::exp(row[c] - mx);
        total += std::log(denom) - (row[labels[n]] - mx);
        Scalar* grad = &out.dlogits.data[n * classes];
        for (std::size_t c = 0; c < classes; ++c) {
            double p = std::exp(row[c] - mx) / denom;
            if (c == labels[n]) p -= 1.0;
            grad[c] = static_cast<Scalar>(p / static_cast<double>(batch));
        }
    }
    out.value = total / static_cast<double>(batch);
    return out;
}

// Predicted class per row: the index of the largest logit, first on ties.
template <typename Scalar>
std::vector<std::size_t> argmax_rows(const Tensor<Scalar>& logits) {
    if (logits.rank() != 2) {
        throw ShapeError("argmax: expected [batch, classes], got " + shape_string(logits.shape));
    }
    const std::size_t batch = logits.shape[0], classes = logits.shape[1];
    std::vector<std::size_t> out(batch);
    for (std::size_t n = 0; n < batch; ++n) {
        const Scalar* row = &logits.data[n * classes];
        std::size_t best = 0;
        for (std::size_t c = 1; c < classes; ++c) {
            if (row[c] > row[best]) best = c;
        }
        out[n] = best;
    }
    return out;
}

} // namespace fedsim
