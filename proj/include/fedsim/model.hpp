#pragma once

#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "fedsim/errors.hpp"
#include "fedsim/layers.hpp"
#include "fedsim/rng.hpp"
#include "fedsim/tensor.hpp"

namespace fedsim {

// A plain sequential stack of layers. Owns the layers; exposes flattened
// views of parameters, gradients and state for the optimizer and the
// federation machinery.
template <typename Scalar>
class Model {
public:
    Model() = default;

    Model& add(std::unique_ptr<Layer<Scalar>> layer) {
        layers_.push_back(std::move(layer));
        return *this;
    }

    template <typename L, typename... Args>
    Model& emplace(Args&&... args) {
        layers_.push_back(std::make_unique<L>(std::forward<Args>(args)...));
        return *this;
    }

    std::size_t size() const { return layers_.size(); }
    Layer<Scalar>& layer(std::size_t i) { return *layers_.at(i); }

    std::vector<std::size_t> output_shape(std::vector<std::size_t> in) const {
        for (const auto& l : layers_) in = l->output_shape(in);
        return in;
    }

    Tensor<Scalar> forward(Tensor<Scalar> x, bool training) {
        for (auto& l : layers_) {
            x = l->forward(x, training);
            if (!x.all_finite()) {
                throw ValueError(std::string(l->kind()) + ": non-finite activation");
            }
        }
        return x;
    }

    // Propagates the loss gradient back through the stack; fills every
    // layer's gradient buffers. Returns the gradient w.r.t. the model input.
    Tensor<Scalar> backward(Tensor<Scalar> grad) {
        for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) {
            grad = (*it)->backward(grad);
        }
        return grad;
    }

    std::vector<Tensor<Scalar>*> parameters() {
        std::vector<Tensor<Scalar>*> out;
        for (auto& l : layers_) {
            for (auto* t : l->parameters()) out.push_back(t);
        }
        return out;
    }

    std::vector<Tensor<Scalar>*> gradients() {
        std::vector<Tensor<Scalar>*> out;
        for (auto& l : layers_) {
            for (auto* t : l->gradients()) out.push_back(t);
        }
        return out;
    }

    // Trainable parameters plus persistent statistics, in layer order. This
    // is the full vector exchanged with the server.
    std::vector<Tensor<Scalar>*> state() {
        std::vector<Tensor<Scalar>*> out;
        for (auto& l : layers_) {
            for (auto* t : l->state()) out.push_back(t);
        }
        return out;
    }

    std::size_t parameter_count() {
        std::size_t n = 0;
        for (auto* t : parameters()) n += t->numel();
        return n;
    }

    std::size_t state_count() {
        std::size_t n = 0;
        for (auto* t : state()) n += t->numel();
        return n;
    }

    // Full state as doubles, in a fixed layer-by-layer order.
    std::vector<double> state_to_flat() {
        std::vector<double> flat;
        for (auto* t : state()) {
            for (const Scalar v : t->data) flat.push_back(static_cast<double>(v));
        }
        return flat;
    }

    void load_state_flat(const std::vector<double>& flat) {
        std::size_t i = 0;
        auto tensors = state();
        std::size_t need = 0;
        for (auto* t : tensors) need += t->numel();
        if (flat.size() != need) {
            throw ShapeError("model state has " + std::to_string(need) + " values, got " +
                             std::to_string(flat.size()));
        }
        for (auto* t : tensors) {
            for (Scalar& v : t->data) v = static_cast<Scalar>(flat[i++]);
        }
    }

    void init_params(Rng& rng) {
        for (auto& l : layers_) l->init_params(rng);
    }

private:
    std::vector<std::unique_ptr<Layer<Scalar>>> layers_;
};

} // namespace fedsim
