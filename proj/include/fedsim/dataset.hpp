#pragma once

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "fedsim/errors.hpp"
#include "fedsim/rng.hpp"
#include "fedsim/tensor.hpp"

namespace fedsim {

// Row-major feature matrix with one integer label per row. Feature vectors
// are kept flat; reshaping to an image happens at batch-gather time.
template <typename Scalar>
struct Dataset {
    std::size_t feature_dim = 0;
    std::size_t num_classes = 0;
    std::vector<Scalar> features; // size() == labels.size() * feature_dim
    std::vector<std::size_t> labels;

    std::size_t size() const { return labels.size(); }

    const Scalar* row(std::size_t i) const { return &features[i * feature_dim]; }

    void push_row(const std::vector<Scalar>& x, std::size_t label) {
        if (x.size() != feature_dim) {
            throw ShapeError("dataset: row has " + std::to_string(x.size()) +
                             " features, expected " + std::to_string(feature_dim));
        }
        features.insert(features.end(), x.begin(), x.end());
        labels.push_back(label);
    }

    Dataset subset(const std::vector<std::size_t>& idx) const {
        Dataset out;
        out.feature_dim = feature_dim;
        out.num_classes = num_classes;
        out.features.reserve(idx.size() * feature_dim);
        out.labels.reserve(idx.size());
        for (std::size_t i : idx) {
            if (i >= size()) throw ValueError("dataset: subset index out of range");
            out.features.insert(out.features.end(), row(i), row(i) + feature_dim);
            out.labels.push_back(labels[i]);
        }
        return out;
    }

    std::vector<std::size_t> class_counts() const {
        std::vector<std::size_t> counts(num_classes, 0);
        for (std::size_t y : labels) {
            if (y >= num_classes) throw ValueError("dataset: label out of range");
            ++counts[y];
        }
        return counts;
    }
};

struct SplitSpec {
    double train = 0.8, val = 0.1, test = 0.1;

    void validate() const {
        if (train < 0 || val < 0 || test < 0) {
            throw ValueError("split: fractions must be non-negative");
        }
        if (std::abs(train + val + test - 1.0) > 1e-9) {
            throw ValueError("split: fractions must sum to 1");
        }
    }
};

template <typename Scalar>
struct SplitResult {
    Dataset<Scalar> train, val, test;
};

// Stratified three-way split. Global sizes are fixed first (floor for val
// and test, remainder to train), then distributed across classes by largest
// remainder so every class is represented proportionally and the totals are
// exact.
template <typename Scalar>
SplitResult<Scalar> split_dataset(const Dataset<Scalar>& ds, const SplitSpec& spec, Rng& rng) {
    spec.validate();
    const std::size_t n = ds.size();
    if (n == 0) throw ValueError("split: empty dataset");
    const std::size_t n_val = static_cast<std::size_t>(std::floor(spec.val * n));
    const std::size_t n_test = static_cast<std::size_t>(std::floor(spec.test * n));
    const std::size_t n_train = n - n_val - n_test;

    // Per-class index pools, shuffled.
    std::vector<std::vector<std::size_t>> pools(ds.num_classes);
    for (std::size_t i = 0; i < n; ++i) {
        if (ds.labels[i] >= ds.num_classes) throw ValueError("split: label out of range");
        pools[ds.labels[i]].push_back(i);
    }
    for (auto& p : pools) rng.shuffle(p);

    // Largest-remainder apportionment of a target total across classes,
    // proportional to class size.
    auto apportion = [&](std::size_t total) {
        std::vector<std::size_t> take(pools.size(), 0);
        std::vector<std::pair<double, std::size_t>> rema;
        std::size_t assigned = 0;
        for (std::size_t c = 0; c < pools.size(); ++c) {
            const double exact =
                static_cast<double>(total) * static_cast<double>(pools[c].size()) /
                static_cast<double>(n);
            take[c] = static_cast<std::size_t>(std::floor(exact));
            assigned += take[c];
            rema.push_back({exact - std::floor(exact), c});
        }
        std::stable_sort(rema.begin(), rema.end(), [](const auto& a, const auto& b) {
            return a.first > b.first;
        });
        for (std::size_t i = 0; assigned < total; ++i) {
            const std::size_t c = rema[i % rema.size()].second;
            if (take[c] < pools[c].size()) {
                ++take[c];
                ++assigned;
            }
        }
        return take;
    };

    const auto take_val = apportion(n_val);
    const auto take_test = apportion(n_test);
    for (std::size_t c = 0; c < pools.size(); ++c) {
        if (take_val[c] + take_test[c] > pools[c].size()) {
            throw ValueError("split: class " + std::to_string(c) +
                             " too small for the requested fractions");
        }
    }

    std::vector<std::size_t> vi, ti, tri;
    for (std::size_t c = 0; c < pools.size(); ++c) {
        const auto& p = pools[c];
        std::size_t at = 0;
        for (std::size_t i = 0; i < take_val[c]; ++i) vi.push_back(p[at++]);
        for (std::size_t i = 0; i < take_test[c]; ++i) ti.push_back(p[at++]);
        while (at < p.size()) tri.push_back(p[at++]);
    }
    std::sort(vi.begin(), vi.end());
    std::sort(ti.begin(), ti.end());
    std::sort(tri.begin(), tri.end());
    if (tri.size() != n_train) throw ValueError("split: internal size mismatch");

    return {ds.subset(tri), ds.subset(vi), ds.subset(ti)};
}

// Splits a training set across clients evenly: shuffle once, then deal
// round-robin, so client sizes differ by at most one sample.
template <typename Scalar>
std::vector<Dataset<Scalar>> partition_iid(const Dataset<Scalar>& ds, std::size_t num_clients,
                                           Rng& rng) {
    if (num_clients == 0) throw ValueError("partition: need at least one client");
    if (ds.size() < num_clients) {
        throw ValueError("partition: " + std::to_string(ds.size()) + " samples cannot cover " +
                         std::to_string(num_clients) + " clients");
    }
    std::vector<std::size_t> order(ds.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    rng.shuffle(order);
    std::vector<std::vector<std::size_t>> shards(num_clients);
    for (std::size_t i = 0; i < order.size(); ++i) shards[i % num_clients].push_back(order[i]);
    std::vector<Dataset<Scalar>> out;
    out.reserve(num_clients);
    for (auto& s : shards) out.push_back(ds.subset(s));
    return out;
}

struct BlobsSpec {
    std::vector<std::size_t> class_counts = {1192, 513, 985, 1162};
    std::size_t feature_dim = 16;
    double separation = 10.0;
    double noise = 1.0;
};

// Gaussian blobs with orthonormal class means scaled by `separation`. With
// the default geometry the classes are linearly separable with a wide
// margin, so a correct training loop reaches high accuracy quickly.
template <typename Scalar>
Dataset<Scalar> generate_blobs(const BlobsSpec& spec, Rng& rng) {
    const std::size_t classes = spec.class_counts.size();
    if (classes == 0) throw ValueError("blobs: need at least one class");
    if (spec.feature_dim < classes) {
        throw ValueError("blobs: feature_dim must be at least the class count");
    }
    if (spec.noise <= 0) throw ValueError("blobs: noise must be positive");

    // Random orthonormal directions via Gram-Schmidt over Gaussian draws.
    std::vector<std::vector<double>> means;
    for (std::size_t c = 0; c < classes; ++c) {
        std::vector<double> v(spec.feature_dim);
        while (true) {
            for (double& x : v) x = rng.normal();
            for (const auto& m : means) {
                double dot = 0;
                for (std::size_t i = 0; i < v.size(); ++i) dot += v[i] * m[i];
                for (std::size_t i = 0; i < v.size(); ++i) v[i] -= dot * m[i];
            }
            double norm2 = 0;
            for (double x : v) norm2 += x * x;
            if (norm2 > 1e-12) {
                const double inv = 1.0 / std::sqrt(norm2);
                for (double& x : v) x *= inv;
                break;
            }
        }
        means.push_back(v);
    }

    Dataset<Scalar> ds;
    ds.feature_dim = spec.feature_dim;
    ds.num_classes = classes;
    std::vector<Scalar> row(spec.feature_dim);
    for (std::size_t c = 0; c < classes; ++c) {
        for (std::size_t i = 0; i < spec.class_counts[c]; ++i) {
            for (std::size_t d = 0; d < spec.feature_dim; ++d) {
                row[d] = static_cast<Scalar>(spec.separation * means[c][d] +
                                             spec.noise * rng.normal());
            }
            ds.push_row(row, c);
        }
    }
    return ds;
}

// CSV with one sample per row: feature columns then the class label in the
// last column. Labels may be arbitrary strings; they are mapped to indices
// in order of first appearance. A header row is detected by a non-numeric
// first field and skipped.
template <typename Scalar>
Dataset<Scalar> load_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);

    auto split_fields = [](const std::string& line) {
        std::vector<std::string> out;
        std::string cur;
        for (char ch : line) {
            if (ch == ',') {
                out.push_back(cur);
                cur.clear();
            } else {
                cur.push_back(ch);
            }
        }
        out.push_back(cur);
        for (auto& f : out) {
            const auto b = f.find_first_not_of(" \t");
            const auto e = f.find_last_not_of(" \t");
            f = b == std::string::npos ? std::string() : f.substr(b, e - b + 1);
        }
        return out;
    };
    auto parse_num = [](const std::string& f, double& out) {
        const char* begin = f.data();
        const char* end = begin + f.size();
        auto [p, ec] = std::from_chars(begin, end, out);
        return ec == std::errc() && p == end && !f.empty();
    };

    Dataset<Scalar> ds;
    std::map<std::string, std::size_t> label_ids;
    std::string line;
    std::size_t line_no = 0;
    bool first_data_row = true;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto fields = split_fields(line);
        if (fields.size() < 2) {
            throw ValueError(path + ":" + std::to_string(line_no) +
                             ": need at least one feature and a label");
        }
        double v;
        if (first_data_row && !parse_num(fields[0], v)) {
            // header row
            continue;
        }
        if (first_data_row) {
            ds.feature_dim = fields.size() - 1;
            first_data_row = false;
        } else if (fields.size() - 1 != ds.feature_dim) {
            throw ValueError(path + ":" + std::to_string(line_no) + ": expected " +
                             std::to_string(ds.feature_dim) + " features, got " +
                             std::to_string(fields.size() - 1));
        }
        std::vector<Scalar> row(ds.feature_dim);
        for (std::size_t i = 0; i < ds.feature_dim; ++i) {
            if (!parse_num(fields[i], v)) {
                throw ValueError(path + ":" + std::to_string(line_no) + ": non-numeric feature '" +
                                 fields[i] + "'");
            }
            if (!std::isfinite(v)) {
                throw ValueError(path + ":" + std::to_string(line_no) + ": non-finite feature");
            }
            row[i] = static_cast<Scalar>(v);
        }
        const std::string& label = fields.back();
        if (label.empty()) {
            throw ValueError(path + ":" + std::to_string(line_no) + ": empty label");
        }
        auto [it, inserted] = label_ids.try_emplace(label, ds.num_classes);
        if (inserted) ++ds.num_classes;
        ds.push_row(row, it->second);
    }
    if (ds.size() == 0) throw ValueError(path + ": no data rows");
    return ds;
}

// Copies the rows at `idx` into a batch tensor shaped for the model input.
template <typename Scalar>
Tensor<Scalar> gather_features(const Dataset<Scalar>& ds, const std::vector<std::size_t>& idx,
                               const std::vector<std::size_t>& sample_shape) {
    std::size_t per = 1;
    for (std::size_t d : sample_shape) per *= d;
    if (per != ds.feature_dim) {
        throw ShapeError("gather: sample shape " + shape_string(sample_shape) + " needs " +
                         std::to_string(per) + " values, dataset rows have " +
                         std::to_string(ds.feature_dim));
    }
    std::vector<std::size_t> shape{idx.size()};
    shape.insert(shape.end(), sample_shape.begin(), sample_shape.end());
    Tensor<Scalar> out(shape);
    for (std::size_t i = 0; i < idx.size(); ++i) {
        if (idx[i] >= ds.size()) throw ValueError("gather: index out of range");
        std::copy(ds.row(idx[i]), ds.row(idx[i]) + per, &out.data[i * per]);
    }
    return out;
}

template <typename Scalar>
std::vector<std::size_t> gather_labels(const Dataset<Scalar>& ds,
                                       const std::vector<std::size_t>& idx) {
    std::vector<std::size_t> out;
    out.reserve(idx.size());
    for (std::size_t i : idx) {
        if (i >= ds.size()) throw ValueError("gather: index out of range");
        out.push_back(ds.labels[i]);
    }
    return out;
}

} // namespace fedsim
