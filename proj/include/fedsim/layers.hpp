#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "fedsim/errors.hpp"
#include "fedsim/rng.hpp"
#include "fedsim/tensor.hpp"

namespace fedsim {

// One step of a feed-forward stack. forward() caches whatever backward()
// needs; backward() fills the gradient buffers and returns the gradient with
// respect to the layer input. Gradients are assigned, not accumulated: one
// backward per forward.
template <typename Scalar>
class Layer {
public:
    virtual ~Layer() = default;

    virtual std::string_view kind() const = 0;

    // Output shape as a pure function of the input shape; throws ShapeError on
    // incompatible input. Never touches data.
    virtual std::vector<std::size_t> output_shape(const std::vector<std::size_t>& in) const = 0;

    virtual Tensor<Scalar> forward(const Tensor<Scalar>& x, bool training) = 0;
    virtual Tensor<Scalar> backward(const Tensor<Scalar>& grad_out) = 0;

    // Trainable parameters and their gradient buffers, index-aligned.
    virtual std::vector<Tensor<Scalar>*> parameters() { return {}; }
    virtual std::vector<Tensor<Scalar>*> gradients() { return {}; }

    // Everything exchanged with the aggregation server: trainable parameters
    // plus persistent statistics (batchnorm running mean/var).
    virtual std::vector<Tensor<Scalar>*> state() { return parameters(); }

    virtual void init_params(Rng&) {}

protected:
    void require_forward_cache(bool have) const {
        if (!have) throw ValueError(std::string(kind_name_for_error()) + ": backward before forward");
    }

private:
    virtual std::string_view kind_name_for_error() const { return kind(); }
};

namespace detail {

// Uniform in [-sqrt(1/fan_in), +sqrt(1/fan_in)].
template <typename Scalar>
void fan_in_uniform(Tensor<Scalar>& t, std::size_t fan_in, Rng& rng) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    for (Scalar& v : t.data) v = static_cast<Scalar>(rng.uniform(-bound, bound));
}

inline std::size_t conv_extent(std::size_t in, std::size_t k, std::size_t stride, std::size_t pad,
                               const char* what) {
    const std::size_t padded = in + 2 * pad;
    if (padded < k) throw ShapeError(std::string(what) + ": kernel larger than padded input");
    return (padded - k) / stride + 1;
}

} // namespace detail

// Fully connected: y = x W^T + b, W is [out, in].
template <typename Scalar>
class Dense : public Layer<Scalar> {
public:
    Dense(std::size_t in_features, std::size_t out_features, bool bias = true)
        : in_(in_features), out_(out_features), has_bias_(bias),
          weight_({out_features, in_features}), weight_grad_({out_features, in_features}) {
        if (bias) {
            bias_ = Tensor<Scalar>({out_features});
            bias_grad_ = Tensor<Scalar>({out_features});
        }
    }

    std::string_view kind() const override { return "dense"; }

    std::vector<std::size_t> output_shape(const std::vector<std::size_t>& in) const override {
        check_input(in);
        return {in[0], out_};
    }

    Tensor<Scalar> forward(const Tensor<Scalar>& x, bool) override {
        check_input(x.shape);
        input_ = x;
        have_cache_ = true;
        const std::size_t batch = x.shape[0];
        Tensor<Scalar> y({batch, out_});
        for (std::size_t n = 0; n < batch; ++n) {
            for (std::size_t o = 0; o < out_; ++o) {
                Scalar acc = has_bias_ ? bias_[o] : Scalar(0);
                const Scalar* row = &x.data[n * in_];
                const Scalar* w = &weight_.data[o * in_];
                for (std::size_t i = 0; i < in_; ++i) acc += row[i] * w[i];
                y.at(n, o) = acc;
            }
        }
        return y;
    }

    Tensor<Scalar> backward(const Tensor<Scalar>& g) override {
        this->require_forward_cache(have_cache_);
        const std::size_t batch = input_.shape[0];
        if (g.shape != std::vector<std::size_t>{batch, out_}) {
            throw ShapeError("dense: gradient shape mismatch");
        }
        weight_grad_.fill(Scalar(0));
        if (has_bias_) bias_grad_.fill(Scalar(0));
        Tensor<Scalar> dx({batch, in_});
        for (std::size_t n = 0; n < batch; ++n) {
            const Scalar* xrow = &input_.data[n * in_];
            const Scalar* grow = &g.data[n * out_];
            for (std::size_t o = 0; o < out_; ++o) {
                const Scalar go = grow[o];
                Scalar* wg = &weight_grad_.data[o * in_];
                const Scalar* w = &weight_.data[o * in_];
                Scalar* dxrow = &dx.data[n * in_];
                for (std::size_t i = 0; i < in_; ++i) {
                    wg[i] += go * xrow[i];
                    dxrow[i] += go * w[i];
                }
                if (has_bias_) bias_grad_[o] += go;
            }
        }
        have_cache_ = false;
        return dx;
    }

    std::vector<Tensor<Scalar>*> parameters() override {
        if (has_bias_) return {&weight_, &bias_};
        return {&weight_};
    }
    std::vector<Tensor<Scalar>*> gradients() override {
        if (has_bias_) return {&weight_grad_, &bias_grad_};
        return {&weight_grad_};
    }

    void init_params(Rng& rng) override {
        detail::fan_in_uniform(weight_, in_, rng);
        if (has_bias_) detail::fan_in_uniform(bias_, in_, rng);
    }

    Tensor<Scalar>& weight() { return weight_; }
    Tensor<Scalar>& bias() { return bias_; }

private:
    void check_input(const std::vector<std::size_t>& s) const {
        if (s.size() != 2 || s[1] != in_) {
            throw ShapeError("dense: expected input [batch, " + std::to_string(in_) +
                             "], got " + shape_string(s));
        }
    }

    std::size_t in_, out_;
    bool has_bias_;
    Tensor<Scalar> weight_, weight_grad_;
    Tensor<Scalar> bias_, bias_grad_;
    Tensor<Scalar> input_;
    bool have_cache_ = false;
};

// 2-D convolution over [batch, channels, height, width], square kernel,
// optional channel groups (groups == in_ch gives a depthwise convolution).
template <typename Scalar>
class Conv2d : public Layer<Scalar> {
public:
    Conv2d(std::size_t in_ch, std::size_t out_ch, std::size_t kernel, std::size_t stride = 1,
           std::size_t pad = 0, bool bias = true, std::size_t groups = 1)
        : in_ch_(in_ch), out_ch_(out_ch), k_(kernel), stride_(stride), pad_(pad),
          groups_(groups), has_bias_(bias) {
        if (kernel == 0 || stride == 0) throw ValueError("conv2d: kernel and stride must be positive");
        if (groups == 0 || in_ch % groups != 0 || out_ch % groups != 0) {
            throw ShapeError("conv2d: groups must divide both channel counts");
        }
        weight_ = Tensor<Scalar>({out_ch, in_ch / groups, k_, k_});
        weight_grad_ = Tensor<Scalar>({out_ch, in_ch / groups, k_, k_});
        if (bias) {
            bias_ = Tensor<Scalar>({out_ch});
            bias_grad_ = Tensor<Scalar>({out_ch});
        }
    }

    std::string_view kind() const override { return "conv2d"; }

    std::vector<std::size_t> output_shape(const std::vector<std::size_t>& in) const override {
        check_input(in);
        return {in[0], out_ch_,
                detail::conv_extent(in[2], k_, stride_, pad_, "conv2d"),
                detail::conv_extent(in[3], k_, stride_, pad_, "conv2d")};
    }

    Tensor<Scalar> forward(const Tensor<Scalar>& x, bool) override {
        const auto out_shape = output_shape(x.shape);
        input_ = x;
        have_cache_ = true;
        Tensor<Scalar> y(out_shape);
        const std::size_t batch = x.shape[0], h = x.shape[2], w = x.shape[3];
        const std::size_t oh = out_shape[2], ow = out_shape[3];
        const std::size_t icg = in_ch_ / groups_, ocg = out_ch_ / groups_;
        for (std::size_t n = 0; n < batch; ++n) {
            for (std::size_t oc = 0; oc < out_ch_; ++oc) {
                const std::size_t g = oc / ocg;
                for (std::size_t r = 0; r < oh; ++r) {
                    for (std::size_t c = 0; c < ow; ++c) {
                        Scalar acc = has_bias_ ? bias_[oc] : Scalar(0);
                        for (std::size_t ic = 0; ic < icg; ++ic) {
                            const std::size_t xc = g * icg + ic;
                            for (std::size_t i = 0; i < k_; ++i) {
                                const std::ptrdiff_t xr =
                                    static_cast<std::ptrdiff_t>(r * stride_ + i) -
                                    static_cast<std::ptrdiff_t>(pad_);
                                if (xr < 0 || xr >= static_cast<std::ptrdiff_t>(h)) continue;
                                for (std::size_t j = 0; j < k_; ++j) {
                                    const std::ptrdiff_t xcol =
                                        static_cast<std::ptrdiff_t>(c * stride_ + j) -
                                        static_cast<std::ptrdiff_t>(pad_);
                                    if (xcol < 0 || xcol >= static_cast<std::ptrdiff_t>(w)) continue;
                                    acc += x.at(n, xc, static_cast<std::size_t>(xr),
                                                static_cast<std::size_t>(xcol)) *
                                           weight_.at(oc, ic, i, j);
                                }
                            }
                        }
                        y.at(n, oc, r, c) = acc;
                    }
                }
            }
        }
        return y;
    }

    Tensor<Scalar> backward(const Tensor<Scalar>& g) override {
        this->require_forward_cache(have_cache_);
        const auto out_shape = output_shape(input_.shape);
        if (g.shape != out_shape) throw ShapeError("conv2d: gradient shape mismatch");
        weight_grad_.fill(Scalar(0));
        if (has_bias_) bias_grad_.fill(Scalar(0));
        Tensor<Scalar> dx(input_.shape);
        const std::size_t batch = input_.shape[0], h = input_.shape[2], w = input_.shape[3];
        const std::size_t oh = out_shape[2], ow = out_shape[3];
        const std::size_t icg = in_ch_ / groups_, ocg = out_ch_ / groups_;
        for (std::size_t n = 0; n < batch; ++n) {
            for (std::size_t oc = 0; oc < out_ch_; ++oc) {
                const std::size_t grp = oc / ocg;
                for (std::size_t r = 0; r < oh; ++r) {
                    for (std::size_t c = 0; c < ow; ++c) {
                        const Scalar go = g.at(n, oc, r, c);
                        if (has_bias_) bias_grad_[oc] += go;
                        for (std::size_t ic = 0; ic < icg; ++ic) {
                            const std::size_t xc = grp * icg + ic;
                            for (std::size_t i = 0; i < k_; ++i) {
                                const std::ptrdiff_t xr =
                                    static_cast<std::ptrdiff_t>(r * stride_ + i) -
                                    static_cast<std::ptrdiff_t>(pad_);
                                if (xr < 0 || xr >= static_cast<std::ptrdiff_t>(h)) continue;
                                for (std::size_t j = 0; j < k_; ++j) {
                                    const std::ptrdiff_t xcol =
                                        static_cast<std::ptrdiff_t>(c * stride_ + j) -
                                        static_cast<std::ptrdiff_t>(pad_);
                                    if (xcol < 0 || xcol >= static_cast<std::ptrdiff_t>(w)) continue;
                                    const auto ur = static_cast<std::size_t>(xr);
                                    const auto uc = static_cast<std::size_t>(xcol);
                                    weight_grad_.at(oc, ic, i, j) += go * input_.at(n, xc, ur, uc);
                                    dx.at(n, xc, ur, uc) += go * weight_.at(oc, ic, i, j);
                                }
                            }
                        }
                    }
                }
            }
        }
        have_cache_ = false;
        return dx;
    }

    std::vector<Tensor<Scalar>*> parameters() override {
        if (has_bias_) return {&weight_, &bias_};
        return {&weight_};
    }
    std::vector<Tensor<Scalar>*> gradients() override {
        if (has_bias_) return {&weight_grad_, &bias_grad_};
        return {&weight_grad_};
    }

    void init_params(Rng& rng) override {
        const std::size_t fan_in = (in_ch_ / groups_) * k_ * k_;
        detail::fan_in_uniform(weight_, fan_in, rng);
        if (has_bias_) detail::fan_in_uniform(bias_, fan_in, rng);
    }

private:
    void check_input(const std::vector<std::size_t>& s) const {
        if (s.size() != 4 || s[1] != in_ch_) {
            throw ShapeError("conv2d: expected input [batch, " + std::to_string(in_ch_) +
                             ", h, w], got " + shape_string(s));
        }
    }

    std::size_t in_ch_, out_ch_, k_, stride_, pad_, groups_;
    bool has_bias_;
    Tensor<Scalar> weight_, weight_grad_, bias_, bias_grad_;
    Tensor<Scalar> input_;
    bool have_cache_ = false;
};

// Max pooling over [batch, channels, height, width]; gradients route to the
// argmax of each window. Padding cells count as -inf and never win.
template <typename Scalar>
class MaxPool2d : public Layer<Scalar> {
public:
    explicit MaxPool2d(std::size_t kernel, std::size_t stride = 0, std::size_t pad = 0)
        : k_(kernel), stride_(stride == 0 ? kernel : stride), pad_(pad) {
        if (kernel == 0) throw ValueError("maxpool2d: kernel must be positive");
        if (pad_ * 2 >= k_) throw ValueError("maxpool2d: padding must be smaller than half the kernel");
    }

    std::string_view kind() const override { return "maxpool2d"; }

    std::vector<std::size_t> output_shape(const std::vector<std::size_t>& in) const override {
        check_input(in);
        return {in[0], in[1],
                detail::conv_extent(in[2], k_, stride_, pad_, "maxpool2d"),
                detail::conv_extent(in[3], k_, stride_, pad_, "maxpool2d")};
    }

    Tensor<Scalar> forward(const Tensor<Scalar>& x, bool) override {
        const auto out_shape = output_shape(x.shape);
        in_shape_ = x.shape;
        Tensor<Scalar> y(out_shape);
        argmax_.assign(Tensor<Scalar>::checked_numel(out_shape), 0);
        const std::size_t batch = x.shape[0], ch = x.shape[1], h = x.shape[2], w = x.shape[3];
        const std::size_t oh = out_shape[2], ow = out_shape[3];
        std::size_t flat = 0;
        for (std::size_t n = 0; n < batch; ++n) {
            for (std::size_t c = 0; c < ch; ++c) {
                for (std::size_t r = 0; r < oh; ++r) {
                    for (std::size_t q = 0; q < ow; ++q, ++flat) {
                        Scalar best = -std::numeric_limits<Scalar>::infinity();
                        std::size_t best_idx = 0;
                        for (std::size_t i = 0; i < k_; ++i) {
                            const std::ptrdiff_t xr = static_cast<std::ptrdiff_t>(r * stride_ + i) -
                                                      static_cast<std::ptrdiff_t>(pad_);
                            if (xr < 0 || xr >= static_cast<std::ptrdiff_t>(h)) continue;
                            for (std::size_t j = 0; j < k_; ++j) {
                                const std::ptrdiff_t xc = static_cast<std::ptrdiff_t>(q * stride_ + j) -
                                                          static_cast<std::ptrdiff_t>(pad_);
                                if (xc < 0 || xc >= static_cast<std::ptrdiff_t>(w)) continue;
                                const Scalar v = x.at(n, c, static_cast<std::size_t>(xr),
                                                      static_cast<std::size_t>(xc));
                                if (v > best) {
                                    best = v;
                                    best_idx = ((n * ch + c) * h + static_cast<std::size_t>(xr)) * w +
                                               static_cast<std::size_t>(xc);
                                }
                            }
                        }
                        y.data[flat] = best;
                        argmax_[flat] = best_idx;
                    }
                }
            }
        }
        have_cache_ = true;
        return y;
    }

    Tensor<Scalar> backward(const Tensor<Scalar>& g) override {
        this->require_forward_cache(have_cache_);
        if (g.numel() != argmax_.size()) throw ShapeError("maxpool2d: gradient shape mismatch");
        Tensor<Scalar> dx(in_shape_);
        for (std::size_t i = 0; i < argmax_.size(); ++i) dx.data[argmax_[i]] += g.data[i];
        have_cache_ = false;
        return dx;
    }

private:
    void check_input(const std::vector<std::size_t>& s) const {
        if (s.size() != 4) {
            throw ShapeError("maxpool2d: expected 4-d input, got " + shape_string(s));
        }
    }

    std::size_t k_, stride_, pad_;
    std::vector<std::size_t> in_shape_;
    std::vector<std::size_t> argmax_;
    bool have_cache_ = false;
};

template <typename Scalar>
class Relu : public Layer<Scalar> {
public:
    std::string_view kind() const override { return "relu"; }

    std::vector<std::size_t> output_shape(const std::vector<std::size_t>& in) const override {
        return in;
    }

    Tensor<Scalar> forward(const Tensor<Scalar>& x, bool) override {
        mask_.assign(x.numel(), false);
        Tensor<Scalar> y(x.shape);
        for (std::size_t i = 0; i < x.numel(); ++i) {
            const bool pos = x.data[i] > Scalar(0);
            mask_[i] = pos;
            y.data[i] = pos ? x.data[i] : Scalar(0);
        }
        have_cache_ = true;
        return y;
    }

    Tensor<Scalar> backward(const Tensor<Scalar>& g) override {
        this->require_forward_cache(have_cache_);
        if (g.numel() != mask_.size()) throw ShapeError("relu: gradient shape mismatch");
        Tensor<Scalar> dx(g.shape);
        for (std::size_t i = 0; i < g.numel(); ++i) dx.data[i] = mask_[i] ? g.data[i] : Scalar(0);
        have_cache_ = false;
        return dx;
    }

private:
    std::vector<bool> mask_;
    bool have_cache_ = false;
};

template <typename Scalar>
class Flatten : public Layer<Scalar> {
public:
    std::string_view kind() const override { return "flatten"; }

    std::vector<std::size_t> output_shape(const std::vector<std::size_t>& in) const override {
        if (in.size() < 2) throw ShapeError("flatten: expected rank >= 2, got " + shape_string(in));
        std::size_t rest = 1;
        for (std::size_t i = 1; i < in.size(); ++i) rest *= in[i];
        return {in[0], rest};
    }

    Tensor<Scalar> forward(const Tensor<Scalar>& x, bool) override {
        in_shape_ = x.shape;
        have_cache_ = true;
        return x.reshaped(output_shape(x.shape));
    }

    Tensor<Scalar> backward(const Tensor<Scalar>& g) override {
        this->require_forward_cache(have_cache_);
        have_cache_ = false;
        return g.reshaped(in_shape_);
    }

private:
    std::vector<std::size_t> in_shape_;
    bool have_cache_ = false;
};

// Batch normalization over [batch, channels, height, width]. Training mode
// normalizes with batch statistics (biased variance) and updates running
// statistics with the unbiased variance; eval mode normalizes with the
// running statistics. Running mean/var ride along in state() so they are
// aggregated and transmitted with the weights.
template <typename Scalar>
class BatchNorm2d : public Layer<Scalar> {
public:
    explicit BatchNorm2d(std::size_t channels, double eps = 1e-5, double momentum = 0.1)
        : ch_(channels), eps_(eps), momentum_(momentum),
          gamma_({channels}), beta_({channels}),
          gamma_grad_({channels}), beta_grad_({channels}),
          running_mean_({channels}), running_var_({channels}) {
        gamma_.fill(Scalar(1));
        running_var_.fill(Scalar(1));
    }

    std::string_view kind() const override { return "batchnorm2d"; }

    std::vector<std::size_t> output_shape(const std::vector<std::size_t>& in) const override {
        check_input(in);
        return in;
    }

    Tensor<Scalar> forward(const Tensor<Scalar>& x, bool training) override {
        check_input(x.shape);
        const std::size_t batch = x.shape[0], h = x.shape[2], w = x.shape[3];
        const std::size_t per_ch = batch * h * w;
        Tensor<Scalar> y(x.shape);
        if (training) {
            xhat_ = Tensor<Scalar>(x.shape);
            inv_std_.assign(ch_, 0.0);
            for (std::size_t c = 0; c < ch_; ++c) {
                double sum = 0.0;
                for (std::size_t n = 0; n < batch; ++n)
                    for (std::size_t r = 0; r < h; ++r)
                        for (std::size_t q = 0; q < w; ++q) sum += x.at(n, c, r, q);
                const double mean = sum / static_cast<double>(per_ch);
                double sq = 0.0;
                for (std::size_t n = 0; n < batch; ++n)
                    for (std::size_t r = 0; r < h; ++r)
                        for (std::size_t q = 0; q < w; ++q) {
                            const double d = x.at(n, c, r, q) - mean;
                            sq += d * d;
                        }
                const double var = sq / static_cast<double>(per_ch);
                const double inv = 1.0 / std::sqrt(var + eps_);
                inv_std_[c] = inv;
                for (std::size_t n = 0; n < batch; ++n)
                    for (std::size_t r = 0; r < h; ++r)
                        for (std::size_t q = 0; q < w; ++q) {
                            const double xn = (x.at(n, c, r, q) - mean) * inv;
                            xhat_.at(n, c, r, q) = static_cast<Scalar>(xn);
                            y.at(n, c, r, q) = static_cast<Scalar>(xn * gamma_[c] + beta_[c]);
                        }
                const double unbiased =
                    per_ch > 1 ? sq / static_cast<double>(per_ch - 1) : var;
                running_mean_[c] = static_cast<Scalar>((1.0 - momentum_) * running_mean_[c] +
                                                       momentum_ * mean);
                running_var_[c] = static_cast<Scalar>((1.0 - momentum_) * running_var_[c] +
                                                      momentum_ * unbiased);
            }
            have_cache_ = true;
        } else {
            for (std::size_t c = 0; c < ch_; ++c) {
                const double inv = 1.0 / std::sqrt(static_cast<double>(running_var_[c]) + eps_);
                for (std::size_t n = 0; n < batch; ++n)
                    for (std::size_t r = 0; r < h; ++r)
                        for (std::size_t q = 0; q < w; ++q) {
                            const double xn = (x.at(n, c, r, q) - running_mean_[c]) * inv;
                            y.at(n, c, r, q) = static_cast<Scalar>(xn * gamma_[c] + beta_[c]);
                        }
            }
        }
        return y;
    }

    Tensor<Scalar> backward(const Tensor<Scalar>& g) override {
        this->require_forward_cache(have_cache_);
        if (g.shape != xhat_.shape) throw ShapeError("batchnorm2d: gradient shape mismatch");
        const std::size_t batch = g.shape[0], h = g.shape[2], w = g.shape[3];
        const double per_ch = static_cast<double>(batch * h * w);
        Tensor<Scalar> dx(g.shape);
        for (std::size_t c = 0; c < ch_; ++c) {
            double sum_dy = 0.0, sum_dy_xhat = 0.0;
            for (std::size_t n = 0; n < batch; ++n)
                for (std::size_t r = 0; r < h; ++r)
                    for (std::size_t q = 0; q < w; ++q) {
                        const double dy = g.at(n, c, r, q);
                        sum_dy += dy;
                        sum_dy_xhat += dy * xhat_.at(n, c, r, q);
                    }
            gamma_grad_[c] = static_cast<Scalar>(sum_dy_xhat);
            beta_grad_[c] = static_cast<Scalar>(sum_dy);
            const double scale = gamma_[c] * inv_std_[c] / per_ch;
            for (std::size_t n = 0; n < batch; ++n)
                for (std::size_t r = 0; r < h; ++r)
                    for (std::size_t q = 0; q < w; ++q) {
                        const double dy = g.at(n, c, r, q);
                        const double xn = xhat_.at(n, c, r, q);
                        dx.at(n, c, r, q) =
                            static_cast<Scalar>(scale * (per_ch * dy - sum_dy - xn * sum_dy_xhat));
                    }
        }
        have_cache_ = false;
        return dx;
    }

    std::vector<Tensor<Scalar>*> parameters() override { return {&gamma_, &beta_}; }
    std::vector<Tensor<Scalar>*> gradients() override { return {&gamma_grad_, &beta_grad_}; }
    std::vector<Tensor<Scalar>*> state() override {
        return {&gamma_, &beta_, &running_mean_, &running_var_};
    }

private:
    void check_input(const std::vector<std::size_t>& s) const {
        if (s.size() != 4 || s[1] != ch_) {
            throw ShapeError("batchnorm2d: expected input [batch, " + std::to_string(ch_) +
                             ", h, w], got " + shape_string(s));
        }
    }

    std::size_t ch_;
    double eps_, momentum_;
    Tensor<Scalar> gamma_, beta_, gamma_grad_, beta_grad_;
    Tensor<Scalar> running_mean_, running_var_;
    Tensor<Scalar> xhat_;
    std::vector<double> inv_std_;
    bool have_cache_ = false;
};

} // namespace fedsim
