#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"

#include "fedsim/arch.hpp"
#include "fedsim/errors.hpp"
#include "fedsim/federation.hpp"
#include "fedsim/metrics.hpp"

namespace fedsim {

using nlohmann::json;

// Shortest-exact decimal form; the same bits always print the same text.
inline std::string format_g(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline void write_text_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out << content;
    if (!out) throw IoError("short write to " + path.string());
}

inline std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read " + path.string());
    std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return content;
}

inline json fed_config_json(const FedConfig& cfg) {
    return json{{"clients", cfg.clients},
                {"participation", cfg.participation},
                {"rounds", cfg.rounds},
                {"local_epochs", cfg.local_epochs},
                {"batch_size", cfg.batch_size},
                {"learning_rate", cfg.learning_rate},
                {"momentum", cfg.momentum},
                {"seed", cfg.seed},
                {"wire_dtype", dtype_name(cfg.wire_dtype)},
                {"shuffle_each_epoch", cfg.shuffle_each_epoch}};
}

inline json metrics_json(const MetricsReport& m) {
    json per_class = json::array();
    for (const auto& c : m.per_class) {
        per_class.push_back(json{{"class", c.cls},
                                 {"support", c.support},
                                 {"precision", c.precision},
                                 {"recall", c.recall},
                                 {"f1", c.f1},
                                 {"degenerate", c.degenerate}});
    }
    return json{{"accuracy", m.accuracy},
                {"macro_precision", m.macro_precision},
                {"macro_recall", m.macro_recall},
                {"macro_f1", m.macro_f1},
                {"per_class", per_class},
                {"degenerate_classes", m.degenerate_classes}};
}

inline json traffic_json(const TrafficTotals& t) {
    return json{{"bytes_to_clients", t.to_clients},
                {"bytes_to_server", t.to_server},
                {"bytes_total", t.total()}};
}

// round,participants,train_loss,val_loss,val_accuracy,bytes_to_clients,bytes_to_server
inline std::string history_csv(const std::vector<RoundRecord>& rounds) {
    std::string out =
        "round,participants,train_loss,val_loss,val_accuracy,bytes_to_clients,bytes_to_server\n";
    for (const auto& r : rounds) {
        out += std::to_string(r.round) + "," + std::to_string(r.participants) + "," +
               format_g(r.train_loss) + "," + format_g(r.val_loss) + "," +
               format_g(r.val_accuracy) + "," + std::to_string(r.bytes_to_clients) + "," +
               std::to_string(r.bytes_to_server) + "\n";
    }
    return out;
}

// Header row of predicted-class indices, one row per true class.
inline std::string confusion_csv(const ConfusionMatrix& cm) {
    std::string out = "true\\pred";
    for (std::size_t p = 0; p < cm.classes; ++p) out += "," + std::to_string(p);
    out += "\n";
    for (std::size_t t = 0; t < cm.classes; ++t) {
        out += std::to_string(t);
        for (std::size_t p = 0; p < cm.classes; ++p) out += "," + std::to_string(cm.at(t, p));
        out += "\n";
    }
    return out;
}

inline json timing_json(const std::vector<RoundRecord>& rounds, double total_wall_seconds) {
    json per_round = json::array();
    for (const auto& r : rounds) {
        per_round.push_back(json{{"round", r.round}, {"wall_seconds", r.wall_seconds}});
    }
    return json{{"per_round", per_round}, {"total_wall_seconds", total_wall_seconds}};
}

// ---- cross-run summaries -----------------------------------------------------

struct MetricSeries {
    std::vector<double> values;

    void add(double v) { values.push_back(v); }

    json to_json() const {
        json j{{"n", values.size()}, {"values", values}};
        if (!values.empty()) j["mean"] = mean_of(values);
        if (values.size() >= 2) {
            const RunStats s = run_stats(values);
            j["stddev"] = s.stddev;
        }
        return j;
    }

    // "mean +/- std" with enough digits to be useful in a table.
    std::string pm(int decimals) const {
        char buf[80];
        if (values.empty()) return "-";
        if (values.size() == 1) {
            std::snprintf(buf, sizeof(buf), "%.*f", decimals, values[0]);
            return buf;
        }
        const RunStats s = run_stats(values);
        std::snprintf(buf, sizeof(buf), "%.*f +/- %.*f", decimals, s.mean, decimals, s.stddev);
        return buf;
    }
};

struct ArchSummary {
    std::string arch;
    MetricSeries accuracy, precision, recall, f1, loss, wall_seconds, traffic_mb;
};

// Fixed-width text table, one architecture per row, "mean +/- std" cells.
inline std::string summary_table(const std::vector<ArchSummary>& rows) {
    const std::vector<std::string> headers = {"Architecture", "Accuracy (%)", "Precision (%)",
                                              "Recall (%)",   "F1 (%)",       "Loss",
                                              "Time (s)",     "Traffic (MB)"};
    std::vector<std::vector<std::string>> cells;
    for (const auto& r : rows) {
        auto pct = [](const MetricSeries& s) {
            MetricSeries scaled;
            for (double v : s.values) scaled.add(v * 100.0);
            return scaled.pm(2);
        };
        cells.push_back({r.arch, pct(r.accuracy), pct(r.precision), pct(r.recall), pct(r.f1),
                         r.loss.pm(4), r.wall_seconds.pm(2), r.traffic_mb.pm(2)});
    }
    std::vector<std::size_t> width(headers.size());
    for (std::size_t c = 0; c < headers.size(); ++c) width[c] = headers[c].size();
    for (const auto& row : cells) {
        for (std::size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], row[c].size());
    }
    auto emit_row = [&](const std::vector<std::string>& row) {
        std::string line;
        for (std::size_t c = 0; c < row.size(); ++c) {
            line += row[c];
            line.append(width[c] - row[c].size() + 2, ' ');
        }
        while (!line.empty() && line.back() == ' ') line.pop_back();
        return line + "\n";
    };
    std::string out = emit_row(headers);
    std::string rule;
    for (std::size_t c = 0; c < width.size(); ++c) rule.append(width[c] + 2, '-');
    out += rule.substr(0, rule.size() - 2) + "\n";
    for (const auto& row : cells) out += emit_row(row);
    return out;
}

inline std::string summary_csv(const std::vector<ArchSummary>& rows) {
    std::string out =
        "arch,runs,accuracy_mean,accuracy_std,precision_mean,precision_std,recall_mean,"
        "recall_std,f1_mean,f1_std,loss_mean,loss_std,time_mean,time_std,traffic_mb_mean\n";
    auto two = [](const MetricSeries& s) {
        if (s.values.empty()) return std::string(",");
        if (s.values.size() == 1) return format_g(s.values[0]) + ",";
        const RunStats st = run_stats(s.values);
        return format_g(st.mean) + "," + format_g(st.stddev);
    };
    for (const auto& r : rows) {
        out += r.arch + "," + std::to_string(r.accuracy.values.size()) + "," + two(r.accuracy) +
               "," + two(r.precision) + "," + two(r.recall) + "," + two(r.f1) + "," + two(r.loss) +
               "," + two(r.wall_seconds) + "," +
               (r.traffic_mb.values.empty() ? "" : format_g(mean_of(r.traffic_mb.values))) + "\n";
    }
    return out;
}

} // namespace fedsim
