#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "fedsim/errors.hpp"

namespace fedsim {

// Square count matrix indexed [true class][predicted class].
struct ConfusionMatrix {
    std::size_t classes = 0;
    std::vector<std::uint64_t> counts;

    explicit ConfusionMatrix(std::size_t n = 0) : classes(n), counts(n * n, 0) {}

    std::uint64_t& at(std::size_t t, std::size_t p) { return counts[t * classes + p]; }
    std::uint64_t at(std::size_t t, std::size_t p) const { return counts[t * classes + p]; }

    std::uint64_t total() const {
        std::uint64_t s = 0;
        for (auto c : counts) s += c;
        return s;
    }

    std::uint64_t row_sum(std::size_t t) const {
        std::uint64_t s = 0;
        for (std::size_t p = 0; p < classes; ++p) s += at(t, p);
        return s;
    }

    std::uint64_t col_sum(std::size_t p) const {
        std::uint64_t s = 0;
        for (std::size_t t = 0; t < classes; ++t) s += at(t, p);
        return s;
    }
};

inline ConfusionMatrix confusion(const std::vector<std::size_t>& y_true,
                                 const std::vector<std::size_t>& y_pred, std::size_t classes) {
    if (y_true.size() != y_pred.size()) {
        throw ShapeError("confusion: " + std::to_string(y_true.size()) + " labels vs " +
                         std::to_string(y_pred.size()) + " predictions");
    }
    if (y_true.empty()) throw ValueError("confusion: no samples");
    ConfusionMatrix cm(classes);
    for (std::size_t i = 0; i < y_true.size(); ++i) {
        if (y_true[i] >= classes || y_pred[i] >= classes) {
            throw ValueError("confusion: class index out of range at sample " + std::to_string(i));
        }
        ++cm.at(y_true[i], y_pred[i]);
    }
    return cm;
}

struct ClassMetrics {
    std::size_t cls = 0;
    std::uint64_t support = 0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    bool degenerate = false; // no true samples and no predictions
};

struct MetricsReport {
    double accuracy = 0.0;
    double macro_precision = 0.0;
    double macro_recall = 0.0;
    double macro_f1 = 0.0;
    std::vector<ClassMetrics> per_class;
    std::vector<std::size_t> degenerate_classes;
};

// One-vs-rest metrics per class, macro-averaged. A ratio with a zero
// denominator scores zero; a class that appears neither in the labels nor in
// the predictions is excluded from the macro averages and flagged instead of
// silently dragging them down.
inline MetricsReport metrics_from_cm(const ConfusionMatrix& cm) {
    const std::uint64_t total = cm.total();
    if (total == 0) throw ValueError("metrics: empty confusion matrix");
    MetricsReport rep;
    std::uint64_t trace = 0;
    for (std::size_t c = 0; c < cm.classes; ++c) trace += cm.at(c, c);
    rep.accuracy = static_cast<double>(trace) / static_cast<double>(total);

    double psum = 0, rsum = 0, fsum = 0;
    std::size_t counted = 0;
    for (std::size_t c = 0; c < cm.classes; ++c) {
        ClassMetrics m;
        m.cls = c;
        const std::uint64_t tp = cm.at(c, c);
        const std::uint64_t actual = cm.row_sum(c);
        const std::uint64_t predicted = cm.col_sum(c);
        m.support = actual;
        if (actual == 0 && predicted == 0) {
            m.degenerate = true;
            rep.degenerate_classes.push_back(c);
            rep.per_class.push_back(m);
            continue;
        }
        m.precision = predicted ? static_cast<double>(tp) / static_cast<double>(predicted) : 0.0;
        m.recall = actual ? static_cast<double>(tp) / static_cast<double>(actual) : 0.0;
        m.f1 = (m.precision + m.recall) > 0.0
                   ? 2.0 * m.precision * m.recall / (m.precision + m.recall)
                   : 0.0;
        psum += m.precision;
        rsum += m.recall;
        fsum += m.f1;
        ++counted;
        rep.per_class.push_back(m);
    }
    if (counted == 0) throw ValueError("metrics: every class is degenerate");
    rep.macro_precision = psum / static_cast<double>(counted);
    rep.macro_recall = rsum / static_cast<double>(counted);
    rep.macro_f1 = fsum / static_cast<double>(counted);
    return rep;
}

inline MetricsReport classification_metrics(const std::vector<std::size_t>& y_true,
                                            const std::vector<std::size_t>& y_pred,
                                            std::size_t classes) {
    return metrics_from_cm(confusion(y_true, y_pred, classes));
}

// Pearson correlation coefficient of two equal-length series.
inline double pearson(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size()) throw ShapeError("pearson: series lengths differ");
    if (x.size() < 2) throw ValueError("pearson: need at least two points");
    const auto n = static_cast<double>(x.size());
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxy = 0, sxx = 0, syy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = x[i] - mx, dy = y[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx == 0.0 || syy == 0.0) throw ValueError("pearson: a series has zero variance");
    return sxy / std::sqrt(sxx * syy);
}

struct RunStats {
    std::size_t n = 0;
    double mean = 0.0;
    double stddev = 0.0; // sample standard deviation, n - 1
};

inline double mean_of(const std::vector<double>& v) {
    if (v.empty()) throw ValueError("mean: empty series");
    double s = 0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

inline RunStats run_stats(const std::vector<double>& v) {
    if (v.size() < 2) throw ValueError("stats: need at least two runs for a deviation");
    RunStats s;
    s.n = v.size();
    s.mean = mean_of(v);
    double acc = 0;
    for (double x : v) {
        const double d = x - s.mean;
        acc += d * d;
    }
    s.stddev = std::sqrt(acc / static_cast<double>(v.size() - 1));
    return s;
}

} // namespace fedsim
