#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "fedsim/arch.hpp"
#include "fedsim/errors.hpp"
#include "fedsim/model.hpp"

namespace fedsim {

namespace detail {

inline LayerSpec conv(std::size_t in, std::size_t out, std::size_t k, std::size_t s = 1,
                      std::size_t p = 0, bool bias = true, std::size_t groups = 1) {
    LayerSpec l;
    l.kind = SpecKind::conv2d;
    l.in = in;
    l.out = out;
    l.kernel = k;
    l.stride = s;
    l.pad = p;
    l.bias = bias;
    l.groups = groups;
    return l;
}

inline LayerSpec bn(std::size_t ch) {
    LayerSpec l;
    l.kind = SpecKind::batchnorm2d;
    l.channels = ch;
    return l;
}

inline LayerSpec relu() { return LayerSpec{.kind = SpecKind::relu}; }

inline LayerSpec maxpool(std::size_t k, std::size_t s, std::size_t p = 0, bool ceil = false) {
    LayerSpec l;
    l.kind = SpecKind::maxpool2d;
    l.kernel = k;
    l.stride = s;
    l.pad = p;
    l.ceil_mode = ceil;
    return l;
}

inline LayerSpec adaptive_avgpool(std::size_t h, std::size_t w) {
    LayerSpec l;
    l.kind = SpecKind::adaptive_avgpool2d;
    l.out_h = h;
    l.out_w = w;
    return l;
}

inline LayerSpec flatten() { return LayerSpec{.kind = SpecKind::flatten}; }

inline LayerSpec dense(std::size_t in, std::size_t out, bool bias = true) {
    LayerSpec l;
    l.kind = SpecKind::dense;
    l.in = in;
    l.out = out;
    l.bias = bias;
    return l;
}

inline LayerSpec dropout(double p) {
    LayerSpec l;
    l.kind = SpecKind::dropout;
    l.p = p;
    return l;
}

inline LayerSpec fork() { return LayerSpec{.kind = SpecKind::fork}; }
inline LayerSpec swap() { return LayerSpec{.kind = SpecKind::swap}; }
inline LayerSpec split2() { return LayerSpec{.kind = SpecKind::split2}; }

inline LayerSpec join(JoinMode m) {
    LayerSpec l;
    l.kind = SpecKind::join;
    l.mode = m;
    return l;
}

inline LayerSpec shuffle(std::size_t groups) {
    LayerSpec l;
    l.kind = SpecKind::channel_shuffle;
    l.groups = groups;
    return l;
}

inline void append(std::vector<LayerSpec>& dst, std::vector<LayerSpec> src) {
    for (auto& l : src) dst.push_back(l);
}

// squeeze 1x1, then parallel 1x1 / 3x3 expands concatenated.
inline std::vector<LayerSpec> fire_module(std::size_t in, std::size_t squeeze, std::size_t e1,
                                          std::size_t e3) {
    return {conv(in, squeeze, 1), relu(), fork(),
            conv(squeeze, e1, 1), relu(), swap(),
            conv(squeeze, e3, 3, 1, 1), relu(),
            join(JoinMode::concat)};
}

// Two 3x3 convs with an identity (or 1x1-projected) shortcut.
inline std::vector<LayerSpec> basic_block(std::size_t in, std::size_t out, std::size_t stride) {
    std::vector<LayerSpec> v{fork(),
                             conv(in, out, 3, stride, 1, false), bn(out), relu(),
                             conv(out, out, 3, 1, 1, false), bn(out)};
    if (stride != 1 || in != out) {
        append(v, {swap(), conv(in, out, 1, stride, 0, false), bn(out)});
    }
    append(v, {join(JoinMode::add), relu()});
    return v;
}

// Channel-split unit: one half passes through, the other takes a
// 1x1 / depthwise 3x3 / 1x1 stack; halves are re-concatenated and shuffled.
inline std::vector<LayerSpec> shuffle_basic_unit(std::size_t ch) {
    const std::size_t bf = ch / 2;
    return {split2(),
            conv(bf, bf, 1, 1, 0, false), bn(bf), relu(),
            conv(bf, bf, 3, 1, 1, false, bf), bn(bf),
            conv(bf, bf, 1, 1, 0, false), bn(bf), relu(),
            join(JoinMode::concat), shuffle(2)};
}

// Spatial-downsampling unit: both branches see the full input.
inline std::vector<LayerSpec> shuffle_down_unit(std::size_t in, std::size_t out) {
    const std::size_t bf = out / 2;
    return {fork(),
            conv(in, bf, 1, 1, 0, false), bn(bf), relu(),
            conv(bf, bf, 3, 2, 1, false, bf), bn(bf),
            conv(bf, bf, 1, 1, 0, false), bn(bf), relu(),
            swap(),
            conv(in, in, 3, 2, 1, false, in), bn(in),
            conv(in, bf, 1, 1, 0, false), bn(bf), relu(),
            join(JoinMode::concat), shuffle(2)};
}

} // namespace detail

// ---- small fully buildable architectures -----------------------------------

inline ArchDescriptor make_tiny_mlp(std::size_t classes = 4) {
    using namespace detail;
    ArchDescriptor a;
    a.name = "tiny_mlp";
    a.num_classes = classes;
    a.input = SymShape::flat(16);
    a.layers = {dense(16, 32), relu(), dense(32, classes)};
    return a;
}

inline ArchDescriptor make_tiny_cnn(std::size_t classes = 4) {
    using namespace detail;
    ArchDescriptor a;
    a.name = "tiny_cnn";
    a.num_classes = classes;
    a.input = SymShape::image(1, 16, 16);
    a.layers = {conv(1, 8, 3, 1, 1), relu(), maxpool(2, 2), flatten(),
                dense(8 * 8 * 8, classes)};
    return a;
}

inline ArchDescriptor make_tiny_cnn_bn(std::size_t classes = 4) {
    using namespace detail;
    ArchDescriptor a;
    a.name = "tiny_cnn_bn";
    a.num_classes = classes;
    a.input = SymShape::image(1, 16, 16);
    a.layers = {conv(1, 8, 3, 1, 1), bn(8), relu(), maxpool(2, 2), flatten(),
                dense(8 * 8 * 8, classes)};
    return a;
}

// ---- the five reference CNNs ------------------------------------------------

inline ArchDescriptor make_alexnet(std::size_t classes = 4) {
    using namespace detail;
    ArchDescriptor a;
    a.name = "alexnet";
    a.num_classes = classes;
    a.input = SymShape::image(3, 224, 224);
    a.layers = {conv(3, 64, 11, 4, 2), relu(), maxpool(3, 2),
                conv(64, 192, 5, 1, 2), relu(), maxpool(3, 2),
                conv(192, 384, 3, 1, 1), relu(),
                conv(384, 256, 3, 1, 1), relu(),
                conv(256, 256, 3, 1, 1), relu(), maxpool(3, 2),
                adaptive_avgpool(6, 6), flatten(),
                dropout(0.5), dense(256 * 6 * 6, 4096), relu(),
                dropout(0.5), dense(4096, 4096), relu(),
                dense(4096, classes)};
    return a;
}

inline ArchDescriptor make_vgg11_batchnorm(std::size_t classes = 4) {
    using namespace detail;
    ArchDescriptor a;
    a.name = "vgg11_batchnorm";
    a.num_classes = classes;
    a.input = SymShape::image(3, 224, 224);
    std::size_t in = 3;
    for (std::size_t width : {64u, 0u, 128u, 0u, 256u, 256u, 0u, 512u, 512u, 0u, 512u, 512u, 0u}) {
        if (width == 0) {
            a.layers.push_back(maxpool(2, 2));
        } else {
            append(a.layers, {conv(in, width, 3, 1, 1), bn(width), relu()});
            in = width;
        }
    }
    append(a.layers, {adaptive_avgpool(7, 7), flatten(),
                      dense(512 * 7 * 7, 4096), relu(), dropout(0.5),
                      dense(4096, 4096), relu(), dropout(0.5),
                      dense(4096, classes)});
    return a;
}

inline ArchDescriptor make_resnet18(std::size_t classes = 4) {
    using namespace detail;
    ArchDescriptor a;
    a.name = "resnet18";
    a.num_classes = classes;
    a.input = SymShape::image(3, 224, 224);
    append(a.layers, {conv(3, 64, 7, 2, 3, false), bn(64), relu(), maxpool(3, 2, 1)});
    append(a.layers, basic_block(64, 64, 1));
    append(a.layers, basic_block(64, 64, 1));
    append(a.layers, basic_block(64, 128, 2));
    append(a.layers, basic_block(128, 128, 1));
    append(a.layers, basic_block(128, 256, 2));
    append(a.layers, basic_block(256, 256, 1));
    append(a.layers, basic_block(256, 512, 2));
    append(a.layers, basic_block(512, 512, 1));
    append(a.layers, {adaptive_avgpool(1, 1), flatten(), dense(512, classes)});
    return a;
}

inline ArchDescriptor make_squeezenet_v1_0(std::size_t classes = 4) {
    using namespace detail;
    ArchDescriptor a;
    a.name = "squeezenet_v1_0";
    a.num_classes = classes;
    a.input = SymShape::image(3, 224, 224);
    append(a.layers, {conv(3, 96, 7, 2), relu(), maxpool(3, 2, 0, true)});
    append(a.layers, fire_module(96, 16, 64, 64));
    append(a.layers, fire_module(128, 16, 64, 64));
    append(a.layers, fire_module(128, 32, 128, 128));
    a.layers.push_back(maxpool(3, 2, 0, true));
    append(a.layers, fire_module(256, 32, 128, 128));
    append(a.layers, fire_module(256, 48, 192, 192));
    append(a.layers, fire_module(384, 48, 192, 192));
    append(a.layers, fire_module(384, 64, 256, 256));
    a.layers.push_back(maxpool(3, 2, 0, true));
    append(a.layers, fire_module(512, 64, 256, 256));
    append(a.layers, {dropout(0.5), conv(512, classes, 1), relu(),
                      adaptive_avgpool(1, 1), flatten()});
    return a;
}

inline ArchDescriptor make_shufflenet_v2_x1_0(std::size_t classes = 4) {
    using namespace detail;
    ArchDescriptor a;
    a.name = "shufflenet_v2_x1_0";
    a.num_classes = classes;
    a.input = SymShape::image(3, 224, 224);
    append(a.layers, {conv(3, 24, 3, 2, 1, false), bn(24), relu(), maxpool(3, 2, 1)});
    const std::size_t stage_out[3] = {116, 232, 464};
    const std::size_t stage_repeats[3] = {4, 8, 4};
    std::size_t in = 24;
    for (std::size_t s = 0; s < 3; ++s) {
        append(a.layers, shuffle_down_unit(in, stage_out[s]));
        for (std::size_t r = 1; r < stage_repeats[s]; ++r) {
            append(a.layers, shuffle_basic_unit(stage_out[s]));
        }
        in = stage_out[s];
    }
    append(a.layers, {conv(464, 1024, 1, 1, 0, false), bn(1024), relu(),
                      adaptive_avgpool(1, 1), flatten(), dense(1024, classes)});
    return a;
}

// ----------------------------------------------------------------------------

inline std::vector<std::string> catalog_names() {
    return {"tiny_mlp", "tiny_cnn", "tiny_cnn_bn", "alexnet", "resnet18",
            "squeezenet_v1_0", "vgg11_batchnorm", "shufflenet_v2_x1_0"};
}

inline ArchDescriptor catalog_arch(const std::string& name, std::size_t classes = 4) {
    if (name == "tiny_mlp") return make_tiny_mlp(classes);
    if (name == "tiny_cnn") return make_tiny_cnn(classes);
    if (name == "tiny_cnn_bn") return make_tiny_cnn_bn(classes);
    if (name == "alexnet") return make_alexnet(classes);
    if (name == "resnet18") return make_resnet18(classes);
    if (name == "squeezenet_v1_0") return make_squeezenet_v1_0(classes);
    if (name == "vgg11_batchnorm") return make_vgg11_batchnorm(classes);
    if (name == "shufflenet_v2_x1_0") return make_shufflenet_v2_x1_0(classes);
    std::string known;
    for (const auto& n : catalog_names()) {
        if (!known.empty()) known += ", ";
        known += n;
    }
    throw ConfigError("unknown architecture '" + name + "' (known: " + known + ")");
}

// Instantiates a trainable model from a descriptor. Only the layer kinds the
// training engine implements are accepted; branchy or pooling-variant specs
// stay count-only.
template <typename Scalar>
Model<Scalar> build_model(const ArchDescriptor& arch) {
    count_params(arch); // full shape validation first
    Model<Scalar> m;
    for (std::size_t i = 0; i < arch.layers.size(); ++i) {
        const LayerSpec& l = arch.layers[i];
        switch (l.kind) {
            case SpecKind::conv2d:
                if (l.groups != 1) {
                    m.template emplace<Conv2d<Scalar>>(l.in, l.out, l.kernel, l.stride, l.pad,
                                                       l.bias, l.groups);
                } else {
                    m.template emplace<Conv2d<Scalar>>(l.in, l.out, l.kernel, l.stride, l.pad,
                                                       l.bias);
                }
                break;
            case SpecKind::batchnorm2d:
                m.template emplace<BatchNorm2d<Scalar>>(l.channels);
                break;
            case SpecKind::relu:
                m.template emplace<Relu<Scalar>>();
                break;
            case SpecKind::maxpool2d:
                if (l.ceil_mode) {
                    throw ConfigError(arch.name + " layer " + std::to_string(i) +
                                      ": ceil-mode pooling is count-only, not buildable");
                }
                m.template emplace<MaxPool2d<Scalar>>(l.kernel, l.stride, l.pad);
                break;
            case SpecKind::flatten:
                m.template emplace<Flatten<Scalar>>();
                break;
            case SpecKind::dense:
                m.template emplace<Dense<Scalar>>(l.in, l.out, l.bias);
                break;
            default:
                throw ConfigError(arch.name + " layer " + std::to_string(i) + " (" +
                                  spec_kind_name(l.kind) + ") is not buildable");
        }
    }
    return m;
}

// Input shape for a batch of the given size.
inline std::vector<std::size_t> batch_shape(const ArchDescriptor& arch, std::size_t batch) {
    if (arch.input.is_image) return {batch, arch.input.c, arch.input.h, arch.input.w};
    return {batch, arch.input.features};
}

} // namespace fedsim
