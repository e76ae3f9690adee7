#pragma once

#include <cstddef>
#include <vector>

#include "fedsim/errors.hpp"
#include "fedsim/tensor.hpp"

namespace fedsim {

// Stochastic gradient descent with classical momentum:
//   v <- mu * v + g
//   w <- w - lr * v
// Velocity buffers are created lazily on the first step and are local to the
// optimizer instance; a fresh instance starts from zero velocity.
template <typename Scalar>
class SgdMomentum {
public:
    SgdMomentum(double lr, double momentum = 0.0) : lr_(lr), mu_(momentum) {
        if (lr < 0.0) throw ValueError("sgd: learning rate must be non-negative");
        if (momentum < 0.0 || momentum >= 1.0) throw ValueError("sgd: momentum must be in [0, 1)");
    }

    void step(const std::vector<Tensor<Scalar>*>& params,
              const std::vector<Tensor<Scalar>*>& grads) {
        if (params.size() != grads.size()) {
            throw ShapeError("sgd: parameter/gradient list size mismatch");
        }
        if (velocity_.size() != params.size()) {
            velocity_.clear();
            for (const auto* p : params) velocity_.emplace_back(p->shape);
        }
        for (std::size_t i = 0; i < params.size(); ++i) {
            Tensor<Scalar>& w = *params[i];
            const Tensor<Scalar>& g = *grads[i];
            Tensor<Scalar>& v = velocity_[i];
            if (!w.same_shape(g) || !w.same_shape(v)) {
                throw ShapeError("sgd: tensor shape mismatch at slot " + std::to_string(i));
            }
            for (std::size_t j = 0; j < w.numel(); ++j) {
                v.data[j] = static_cast<Scalar>(mu_ * v.data[j] + g.data[j]);
                w.data[j] -= static_cast<Scalar>(lr_ * v.data[j]);
            }
        }
    }

    void reset() { velocity_.clear(); }

    double learning_rate() const { return lr_; }
    double momentum() const { return mu_; }

private:
    double lr_, mu_;
    std::vector<Tensor<Scalar>> velocity_;
};

} // namespace fedsim
