#pragma once

#include <charconv>
#include <cmath>
#include <cstddef>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "fedsim/errors.hpp"

namespace fedsim {

// Architecture descriptors are flat lists of layer specs walked by a small
// stack machine, which is enough to express branchy topologies (residual
// blocks, fire modules, channel splits) without a graph structure:
//   fork     push a copy of the current shape
//   swap     exchange the current shape with the stack top
//   split2   halve the channels; push one half, keep the other
//   join     pop and merge (mode=add requires equal shapes, mode=concat
//            stacks channels)
// Structural markers carry no parameters; counting and shape validation both
// run off the same walk.
enum class SpecKind {
    input,
    conv2d,
    batchnorm2d,
    relu,
    maxpool2d,
    avgpool2d,
    adaptive_avgpool2d,
    flatten,
    dense,
    dropout,
    channel_shuffle,
    fork,
    swap,
    split2,
    join,
};

enum class JoinMode { add, concat };

struct LayerSpec {
    SpecKind kind;
    std::size_t in = 0, out = 0;      // conv2d / dense
    std::size_t kernel = 0;
    std::size_t stride = 1;
    std::size_t pad = 0;
    std::size_t groups = 1;
    bool bias = true;
    bool ceil_mode = false;           // pools only
    std::size_t channels = 0;         // batchnorm2d / channel_shuffle width check
    std::size_t out_h = 1, out_w = 1; // adaptive_avgpool2d target
    JoinMode mode = JoinMode::add;    // join
    double p = 0.0;                   // dropout
};

// Shape without the batch dimension: an image plane or a flat feature vector.
struct SymShape {
    bool is_image = false;
    std::size_t c = 0, h = 0, w = 0;
    std::size_t features = 0;

    static SymShape image(std::size_t c, std::size_t h, std::size_t w) {
        return {true, c, h, w, 0};
    }
    static SymShape flat(std::size_t n) { return {false, 0, 0, 0, n}; }

    bool operator==(const SymShape&) const = default;

    std::string str() const {
        std::ostringstream os;
        if (is_image) {
            os << c << "x" << h << "x" << w;
        } else {
            os << features;
        }
        return os.str();
    }
};

struct ArchDescriptor {
    std::string name;
    std::size_t num_classes = 0;
    SymShape input;
    std::vector<LayerSpec> layers;
};

namespace detail {

inline std::size_t pool_extent(std::size_t in, std::size_t k, std::size_t s, std::size_t pad,
                               bool ceil_mode, const char* what) {
    const std::size_t padded = in + 2 * pad;
    if (padded < k) throw ShapeError(std::string(what) + ": kernel larger than padded input");
    std::size_t out;
    if (ceil_mode) {
        out = (padded - k + s - 1) / s + 1;
        // A window that would start entirely inside the right/bottom padding
        // contributes nothing and is dropped.
        if ((out - 1) * s >= in + pad) --out;
    } else {
        out = (padded - k) / s + 1;
    }
    return out;
}

} // namespace detail

inline const char* spec_kind_name(SpecKind k) {
    switch (k) {
        case SpecKind::input: return "input";
        case SpecKind::conv2d: return "conv2d";
        case SpecKind::batchnorm2d: return "batchnorm2d";
        case SpecKind::relu: return "relu";
        case SpecKind::maxpool2d: return "maxpool2d";
        case SpecKind::avgpool2d: return "avgpool2d";
        case SpecKind::adaptive_avgpool2d: return "adaptive_avgpool2d";
        case SpecKind::flatten: return "flatten";
        case SpecKind::dense: return "dense";
        case SpecKind::dropout: return "dropout";
        case SpecKind::channel_shuffle: return "channel_shuffle";
        case SpecKind::fork: return "fork";
        case SpecKind::swap: return "swap";
        case SpecKind::split2: return "split2";
        case SpecKind::join: return "join";
    }
    return "?";
}

// Applies one spec to the walk state; throws ShapeError on any mismatch.
inline SymShape apply_spec(const LayerSpec& l, SymShape cur, std::vector<SymShape>& stack) {
    auto need_image = [&](const char* what) {
        if (!cur.is_image) {
            throw ShapeError(std::string(what) + ": needs an image input, have flat " + cur.str());
        }
    };
    switch (l.kind) {
        case SpecKind::input:
            throw ShapeError("input spec inside the layer list");
        case SpecKind::conv2d: {
            need_image("conv2d");
            if (cur.c != l.in) {
                throw ShapeError("conv2d: expects " + std::to_string(l.in) + " channels, have " +
                                 cur.str());
            }
            if (l.groups == 0 || l.in % l.groups != 0 || l.out % l.groups != 0) {
                throw ShapeError("conv2d: groups must divide both channel counts");
            }
            const std::size_t oh = detail::pool_extent(cur.h, l.kernel, l.stride, l.pad, false, "conv2d");
            const std::size_t ow = detail::pool_extent(cur.w, l.kernel, l.stride, l.pad, false, "conv2d");
            return SymShape::image(l.out, oh, ow);
        }
        case SpecKind::batchnorm2d:
            need_image("batchnorm2d");
            if (cur.c != l.channels) {
                throw ShapeError("batchnorm2d: expects " + std::to_string(l.channels) +
                                 " channels, have " + cur.str());
            }
            return cur;
        case SpecKind::relu:
        case SpecKind::dropout:
            return cur;
        case SpecKind::maxpool2d:
        case SpecKind::avgpool2d: {
            need_image(spec_kind_name(l.kind));
            const std::size_t oh =
                detail::pool_extent(cur.h, l.kernel, l.stride, l.pad, l.ceil_mode, spec_kind_name(l.kind));
            const std::size_t ow =
                detail::pool_extent(cur.w, l.kernel, l.stride, l.pad, l.ceil_mode, spec_kind_name(l.kind));
            return SymShape::image(cur.c, oh, ow);
        }
        case SpecKind::adaptive_avgpool2d:
            need_image("adaptive_avgpool2d");
            return SymShape::image(cur.c, l.out_h, l.out_w);
        case SpecKind::flatten:
            if (!cur.is_image) return cur;
            return SymShape::flat(cur.c * cur.h * cur.w);
        case SpecKind::dense:
            if (cur.is_image) {
                throw ShapeError("dense: needs a flat input, have image " + cur.str());
            }
            if (cur.features != l.in) {
                throw ShapeError("dense: expects " + std::to_string(l.in) + " features, have " +
                                 std::to_string(cur.features));
            }
            return SymShape::flat(l.out);
        case SpecKind::channel_shuffle:
            need_image("channel_shuffle");
            if (l.groups == 0 || cur.c % l.groups != 0) {
                throw ShapeError("channel_shuffle: groups must divide the channel count");
            }
            return cur;
        case SpecKind::fork:
            stack.push_back(cur);
            return cur;
        case SpecKind::swap: {
            if (stack.empty()) throw ShapeError("swap: empty branch stack");
            SymShape top = stack.back();
            stack.back() = cur;
            return top;
        }
        case SpecKind::split2:
            need_image("split2");
            if (cur.c % 2 != 0) throw ShapeError("split2: odd channel count " + cur.str());
            stack.push_back(SymShape::image(cur.c / 2, cur.h, cur.w));
            return SymShape::image(cur.c / 2, cur.h, cur.w);
        case SpecKind::join: {
            if (stack.empty()) throw ShapeError("join: empty branch stack");
            SymShape other = stack.back();
            stack.pop_back();
            if (l.mode == JoinMode::add) {
                if (!(other == cur)) {
                    throw ShapeError("join add: branch shapes differ, " + other.str() + " vs " +
                                     cur.str());
                }
                return cur;
            }
            if (!cur.is_image || !other.is_image || cur.h != other.h || cur.w != other.w) {
                throw ShapeError("join concat: incompatible branch shapes, " + other.str() +
                                 " vs " + cur.str());
            }
            return SymShape::image(other.c + cur.c, cur.h, cur.w);
        }
    }
    throw ShapeError("unknown spec kind");
}

inline std::size_t spec_trainable(const LayerSpec& l) {
    switch (l.kind) {
        case SpecKind::conv2d:
            return l.out * (l.in / l.groups) * l.kernel * l.kernel + (l.bias ? l.out : 0);
        case SpecKind::dense:
            return l.out * l.in + (l.bias ? l.out : 0);
        case SpecKind::batchnorm2d:
            return 2 * l.channels;
        default:
            return 0;
    }
}

// Values actually exchanged with the server: trainable weights plus
// batchnorm running statistics.
inline std::size_t spec_transmitted(const LayerSpec& l) {
    if (l.kind == SpecKind::batchnorm2d) return 4 * l.channels;
    return spec_trainable(l);
}

struct LayerCount {
    std::size_t index;
    std::string label;
    std::size_t trainable;
    std::size_t transmitted;
    SymShape out;
};

struct CountReport {
    std::size_t trainable = 0;
    std::size_t transmitted = 0;
    SymShape output;
    std::vector<LayerCount> rows;
};

inline std::string spec_to_line(const LayerSpec& l);

// Walks the descriptor end to end, validating every shape transition, and
// tallies parameter counts per layer.
inline CountReport count_params(const ArchDescriptor& arch) {
    CountReport rep;
    SymShape cur = arch.input;
    std::vector<SymShape> stack;
    for (std::size_t i = 0; i < arch.layers.size(); ++i) {
        const LayerSpec& l = arch.layers[i];
        try {
            cur = apply_spec(l, cur, stack);
        } catch (const ShapeError& e) {
            throw ShapeError(arch.name + " layer " + std::to_string(i) + ": " + e.what());
        }
        LayerCount row;
        row.index = i;
        row.label = spec_to_line(l);
        row.trainable = spec_trainable(l);
        row.transmitted = spec_transmitted(l);
        row.out = cur;
        rep.trainable += row.trainable;
        rep.transmitted += row.transmitted;
        rep.rows.push_back(std::move(row));
    }
    if (!stack.empty()) {
        throw ShapeError(arch.name + ": " + std::to_string(stack.size()) +
                         " unjoined branch(es) at the end of the layer list");
    }
    if (cur.is_image || cur.features != arch.num_classes) {
        throw ShapeError(arch.name + ": final shape " + cur.str() + " does not match " +
                         std::to_string(arch.num_classes) + " classes");
    }
    rep.output = cur;
    return rep;
}

// ---- text form ------------------------------------------------------------
//
// One spec per line: the kind followed by key=value attributes. Lines
// starting with '#' and blank lines are skipped. The first two significant
// lines must be `model name=... classes=...` and `input ...`.

inline std::string spec_to_line(const LayerSpec& l) {
    std::ostringstream os;
    os << spec_kind_name(l.kind);
    switch (l.kind) {
        case SpecKind::conv2d:
            os << " in=" << l.in << " out=" << l.out << " kernel=" << l.kernel;
            if (l.stride != 1) os << " stride=" << l.stride;
            if (l.pad != 0) os << " pad=" << l.pad;
            if (l.groups != 1) os << " groups=" << l.groups;
            if (!l.bias) os << " bias=0";
            break;
        case SpecKind::dense:
            os << " in=" << l.in << " out=" << l.out;
            if (!l.bias) os << " bias=0";
            break;
        case SpecKind::batchnorm2d:
            os << " channels=" << l.channels;
            break;
        case SpecKind::maxpool2d:
        case SpecKind::avgpool2d:
            os << " kernel=" << l.kernel << " stride=" << l.stride;
            if (l.pad != 0) os << " pad=" << l.pad;
            if (l.ceil_mode) os << " ceil=1";
            break;
        case SpecKind::adaptive_avgpool2d:
            os << " out_h=" << l.out_h << " out_w=" << l.out_w;
            break;
        case SpecKind::dropout:
            os << " p=" << l.p;
            break;
        case SpecKind::channel_shuffle:
            os << " groups=" << l.groups;
            break;
        case SpecKind::join:
            os << " mode=" << (l.mode == JoinMode::add ? "add" : "concat");
            break;
        default:
            break;
    }
    return os.str();
}

inline std::string arch_to_text(const ArchDescriptor& arch) {
    std::ostringstream os;
    os << "model name=" << arch.name << " classes=" << arch.num_classes << "\n";
    if (arch.input.is_image) {
        os << "input c=" << arch.input.c << " h=" << arch.input.h << " w=" << arch.input.w << "\n";
    } else {
        os << "input features=" << arch.input.features << "\n";
    }
    for (const LayerSpec& l : arch.layers) os << spec_to_line(l) << "\n";
    return os.str();
}

namespace detail {

struct KvPair {
    std::string key, value;
};

inline std::vector<std::string> split_ws(const std::string& line) {
    std::vector<std::string> out;
    std::istringstream is(line);
    std::string tok;
    while (is >> tok) out.push_back(tok);
    return out;
}

inline std::size_t parse_size(const std::string& v, std::size_t line_no, const std::string& key) {
    std::size_t out = 0;
    auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || p != v.data() + v.size()) {
        throw ConfigError("line " + std::to_string(line_no) + ": bad value for " + key + ": '" +
                          v + "'");
    }
    return out;
}

inline double parse_double(const std::string& v, std::size_t line_no, const std::string& key) {
    try {
        std::size_t used = 0;
        const double out = std::stod(v, &used);
        if (used != v.size()) throw std::invalid_argument(v);
        return out;
    } catch (const std::exception&) {
        throw ConfigError("line " + std::to_string(line_no) + ": bad value for " + key + ": '" +
                          v + "'");
    }
}

} // namespace detail

inline ArchDescriptor parse_arch(const std::string& text) {
    ArchDescriptor arch;
    bool have_model = false, have_input = false;
    std::istringstream is(text);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        const auto toks = detail::split_ws(line);
        if (toks.empty() || toks[0][0] == '#') continue;
        const std::string& kind = toks[0];
        std::vector<detail::KvPair> kvs;
        for (std::size_t i = 1; i < toks.size(); ++i) {
            const auto eq = toks[i].find('=');
            if (eq == std::string::npos || eq == 0) {
                throw ConfigError("line " + std::to_string(line_no) + ": expected key=value, got '" +
                                  toks[i] + "'");
            }
            kvs.push_back({toks[i].substr(0, eq), toks[i].substr(eq + 1)});
        }
        auto bad_key = [&](const std::string& k) {
            throw ConfigError("line " + std::to_string(line_no) + ": unknown attribute '" + k +
                              "' for " + kind);
        };
        if (kind == "model") {
            for (const auto& kv : kvs) {
                if (kv.key == "name") arch.name = kv.value;
                else if (kv.key == "classes") arch.num_classes = detail::parse_size(kv.value, line_no, kv.key);
                else bad_key(kv.key);
            }
            if (arch.name.empty() || arch.num_classes == 0) {
                throw ConfigError("line " + std::to_string(line_no) +
                                  ": model needs name=... classes=...");
            }
            have_model = true;
            continue;
        }
        if (kind == "input") {
            std::size_t c = 0, h = 0, w = 0, features = 0;
            for (const auto& kv : kvs) {
                if (kv.key == "c") c = detail::parse_size(kv.value, line_no, kv.key);
                else if (kv.key == "h") h = detail::parse_size(kv.value, line_no, kv.key);
                else if (kv.key == "w") w = detail::parse_size(kv.value, line_no, kv.key);
                else if (kv.key == "features") features = detail::parse_size(kv.value, line_no, kv.key);
                else bad_key(kv.key);
            }
            if (features != 0 && (c | h | w) == 0) {
                arch.input = SymShape::flat(features);
            } else if (features == 0 && c != 0 && h != 0 && w != 0) {
                arch.input = SymShape::image(c, h, w);
            } else {
                throw ConfigError("line " + std::to_string(line_no) +
                                  ": input needs either features=... or c=... h=... w=...");
            }
            have_input = true;
            continue;
        }

        LayerSpec l;
        if (kind == "conv2d") l.kind = SpecKind::conv2d;
        else if (kind == "batchnorm2d") l.kind = SpecKind::batchnorm2d;
        else if (kind == "relu") l.kind = SpecKind::relu;
        else if (kind == "maxpool2d") l.kind = SpecKind::maxpool2d;
        else if (kind == "avgpool2d") l.kind = SpecKind::avgpool2d;
        else if (kind == "adaptive_avgpool2d") l.kind = SpecKind::adaptive_avgpool2d;
        else if (kind == "flatten") l.kind = SpecKind::flatten;
        else if (kind == "dense") l.kind = SpecKind::dense;
        else if (kind == "dropout") l.kind = SpecKind::dropout;
        else if (kind == "channel_shuffle") l.kind = SpecKind::channel_shuffle;
        else if (kind == "fork") l.kind = SpecKind::fork;
        else if (kind == "swap") l.kind = SpecKind::swap;
        else if (kind == "split2") l.kind = SpecKind::split2;
        else if (kind == "join") l.kind = SpecKind::join;
        else {
            throw ConfigError("line " + std::to_string(line_no) + ": unknown layer kind '" + kind +
                              "'");
        }
        for (const auto& kv : kvs) {
            if (kv.key == "in") l.in = detail::parse_size(kv.value, line_no, kv.key);
            else if (kv.key == "out") l.out = detail::parse_size(kv.value, line_no, kv.key);
            else if (kv.key == "kernel") l.kernel = detail::parse_size(kv.value, line_no, kv.key);
            else if (kv.key == "stride") l.stride = detail::parse_size(kv.value, line_no, kv.key);
            else if (kv.key == "pad") l.pad = detail::parse_size(kv.value, line_no, kv.key);
            else if (kv.key == "groups") l.groups = detail::parse_size(kv.value, line_no, kv.key);
            else if (kv.key == "bias") l.bias = detail::parse_size(kv.value, line_no, kv.key) != 0;
            else if (kv.key == "ceil") l.ceil_mode = detail::parse_size(kv.value, line_no, kv.key) != 0;
            else if (kv.key == "channels") l.channels = detail::parse_size(kv.value, line_no, kv.key);
            else if (kv.key == "out_h") l.out_h = detail::parse_size(kv.value, line_no, kv.key);
            else if (kv.key == "out_w") l.out_w = detail::parse_size(kv.value, line_no, kv.key);
            else if (kv.key == "p") l.p = detail::parse_double(kv.value, line_no, kv.key);
            else if (kv.key == "mode") {
                if (kv.value == "add") l.mode = JoinMode::add;
                else if (kv.value == "concat") l.mode = JoinMode::concat;
                else throw ConfigError("line " + std::to_string(line_no) + ": bad join mode '" +
                                       kv.value + "'");
            } else {
                bad_key(kv.key);
            }
        }
        arch.layers.push_back(l);
    }
    if (!have_model) throw ConfigError("descriptor is missing the model line");
    if (!have_input) throw ConfigError("descriptor is missing the input line");
    return arch;
}

} // namespace fedsim
