#pragma once

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <map>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "fedsim/catalog.hpp"
#include "fedsim/dataset.hpp"
#include "fedsim/errors.hpp"
#include "fedsim/federation.hpp"
#include "fedsim/metrics.hpp"
#include "fedsim/report.hpp"
#include "fedsim/tcp.hpp"

namespace fedsim {

inline constexpr const char* kVersion = "0.1.0";

namespace fs = std::filesystem;

struct CliOptions {
    // data
    std::string data_csv;     // empty: generate blobs
    std::size_t classes = 4;
    double val_frac = 0.1;
    double test_frac = 0.1;
    double blob_separation = 10.0;
    double blob_noise = 1.0;

    // model / federation
    std::string arch = "tiny_mlp";
    std::string arch_file;    // descriptor text file, overrides --arch
    FedConfig fed;
    Dtype train_dtype = Dtype::f32;

    // run control
    std::size_t repetitions = 10;
    std::size_t workers = 4;
    std::string out_dir = "runs";

    // transport
    std::string ip = "127.0.0.1";
    int port = 3002;
    std::uint32_t rank = 1;

    // report
    std::string report_dir;
    std::string plot_csv;
    double reference_r = std::numeric_limits<double>::quiet_NaN();
    bool json_output = false;
    bool all_archs = false;
};

inline ArchDescriptor resolve_arch(const CliOptions& opts) {
    if (!opts.arch_file.empty()) {
        return parse_arch(read_text_file(opts.arch_file));
    }
    return catalog_arch(opts.arch, opts.classes);
}

inline std::size_t input_numel(const ArchDescriptor& arch) {
    return arch.input.is_image ? arch.input.c * arch.input.h * arch.input.w
                               : arch.input.features;
}

// The synthetic dataset: Gaussian blobs shaped to the model input. With four
// classes the per-class counts default to an uneven 1192/513/985/1162 mix;
// any other class count gets 1000 samples per class.
template <typename Scalar>
Dataset<Scalar> make_dataset(const CliOptions& opts, const ArchDescriptor& arch,
                             std::uint64_t seed) {
    if (!opts.data_csv.empty()) {
        Dataset<Scalar> ds = load_csv<Scalar>(opts.data_csv);
        if (ds.num_classes != arch.num_classes) {
            throw ConfigError(opts.data_csv + " has " + std::to_string(ds.num_classes) +
                              " classes, model expects " + std::to_string(arch.num_classes));
        }
        if (ds.feature_dim != input_numel(arch)) {
            throw ConfigError(opts.data_csv + " rows have " + std::to_string(ds.feature_dim) +
                              " features, model input needs " + std::to_string(input_numel(arch)));
        }
        return ds;
    }
    BlobsSpec spec;
    if (arch.num_classes == 4) {
        spec.class_counts = {1192, 513, 985, 1162};
    } else {
        spec.class_counts.assign(arch.num_classes, 1000);
    }
    spec.feature_dim = input_numel(arch);
    spec.separation = opts.blob_separation;
    spec.noise = opts.blob_noise;
    Rng rng(derive_seed(seed, {seed_tag::blobs}));
    return generate_blobs<Scalar>(spec, rng);
}

template <typename Scalar>
struct PreparedRun {
    SplitResult<Scalar> split;
    std::vector<Dataset<Scalar>> shards;
};

// Split and partition are driven by the per-run seed; the dataset itself is
// shared across repetitions.
template <typename Scalar>
PreparedRun<Scalar> prepare_run(const Dataset<Scalar>& full, const CliOptions& opts,
                                std::uint64_t run_seed) {
    PreparedRun<Scalar> out;
    SplitSpec sp{1.0 - opts.val_frac - opts.test_frac, opts.val_frac, opts.test_frac};
    Rng split_rng(derive_seed(run_seed, {seed_tag::split}));
    out.split = split_dataset(full, sp, split_rng);
    Rng part_rng(derive_seed(run_seed, {seed_tag::partition}));
    out.shards = partition_iid(out.split.train, opts.fed.clients, part_rng);
    return out;
}

template <typename Scalar>
json manifest_json(const CliOptions& opts, const ArchDescriptor& arch, const FedConfig& cfg,
                   const Dataset<Scalar>& full, const PreparedRun<Scalar>& prep) {
    const CountReport counts = count_params(arch);
    const std::size_t m = num_participants(cfg.clients, cfg.participation);
    const SessionTraffic predicted =
        session_traffic(counts.transmitted, cfg.wire_dtype, cfg.clients, arch.name,
                        std::vector<std::size_t>(cfg.rounds, m));
    json shard_sizes = json::array();
    for (const auto& s : prep.shards) shard_sizes.push_back(s.size());
    return json{
        {"version", kVersion},
        {"arch",
         {{"name", arch.name},
          {"classes", arch.num_classes},
          {"trainable_params", counts.trainable},
          {"transmitted_params", counts.transmitted}}},
        {"config", fed_config_json(cfg)},
        {"train_dtype", dtype_name(opts.train_dtype)},
        {"data",
         {{"source", opts.data_csv.empty() ? std::string("blobs") : opts.data_csv},
          {"samples", full.size()},
          {"feature_dim", full.feature_dim},
          {"class_counts", full.class_counts()},
          {"train", prep.split.train.size()},
          {"val", prep.split.val.size()},
          {"test", prep.split.test.size()},
          {"shard_sizes", shard_sizes}}},
        {"predicted_traffic",
         {{"bytes_to_clients", predicted.to_clients},
          {"bytes_to_server", predicted.to_server},
          {"bytes_total", predicted.total()},
          {"participants_per_round", m}}}};
}

// Metered bytes must equal the closed-form prediction; any difference is a
// transport bug, not something to report around.
inline void check_traffic(const FederationResult& result, const ArchDescriptor& arch,
                          const FedConfig& cfg) {
    const CountReport counts = count_params(arch);
    const std::size_t m = num_participants(cfg.clients, cfg.participation);
    const SessionTraffic predicted =
        session_traffic(counts.transmitted, cfg.wire_dtype, cfg.clients, arch.name,
                        std::vector<std::size_t>(cfg.rounds, m));
    if (result.traffic.to_clients != predicted.to_clients ||
        result.traffic.to_server != predicted.to_server) {
        throw ProtocolError("metered traffic (" + std::to_string(result.traffic.to_clients) +
                            " down, " + std::to_string(result.traffic.to_server) +
                            " up) does not match the prediction (" +
                            std::to_string(predicted.to_clients) + " down, " +
                            std::to_string(predicted.to_server) + " up)");
    }
}

inline json report_json(const ArchDescriptor& arch, const FedConfig& cfg,
                        const FederationResult& result) {
    const ConfusionMatrix cm =
        confusion(result.test_labels, result.test_predictions, arch.num_classes);
    const MetricsReport m = metrics_from_cm(cm);
    return json{{"version", kVersion},
                {"arch", arch.name},
                {"seed", cfg.seed},
                {"rounds", result.rounds.size()},
                {"test_loss", result.test_loss},
                {"metrics", metrics_json(m)},
                {"traffic", traffic_json(result.traffic)}};
}

// Writes the deterministic artifacts plus timing.json for one finished run.
inline void write_run_files(const fs::path& dir, const json& manifest, const json& report,
                            const FederationResult& result, const ArchDescriptor& arch,
                            double total_wall, const std::string& mode) {
    fs::create_directories(dir);
    write_text_file(dir / "manifest.json", manifest.dump(2) + "\n");
    write_text_file(dir / "report.json", report.dump(2) + "\n");
    write_text_file(dir / "history.csv", history_csv(result.rounds));
    const ConfusionMatrix cm =
        confusion(result.test_labels, result.test_predictions, arch.num_classes);
    write_text_file(dir / "confusion.csv", confusion_csv(cm));
    json timing = timing_json(result.rounds, total_wall);
    timing["mode"] = mode;
    write_text_file(dir / "timing.json", timing.dump(2) + "\n");
}

// ---- simulate -----------------------------------------------------------------

struct RepOutcome {
    json report;
    double wall = 0.0;
};

template <typename Scalar>
int cmd_simulate(const CliOptions& opts) {
    const ArchDescriptor arch = resolve_arch(opts);
    opts.fed.validate();
    const Dataset<Scalar> full = make_dataset<Scalar>(opts, arch, opts.fed.seed);
    fs::create_directories(opts.out_dir);

    std::vector<RepOutcome> outcomes(opts.repetitions);
    std::vector<std::exception_ptr> failures(opts.repetitions);
    std::atomic<std::size_t> next{0};

    auto run_rep = [&](std::size_t rep) {
        FedConfig cfg = opts.fed;
        cfg.seed = opts.fed.seed + rep;
        const PreparedRun<Scalar> prep = prepare_run(full, opts, cfg.seed);
        const json manifest = manifest_json(opts, arch, cfg, full, prep);
        const auto t0 = std::chrono::steady_clock::now();
        const FederationResult result =
            run_federation<Scalar>(cfg, arch, prep.shards, prep.split.val, prep.split.test);
        const double wall =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        check_traffic(result, arch, cfg);
        const json rep_json = report_json(arch, cfg, result);
        char name[32];
        std::snprintf(name, sizeof(name), "run_%03zu", rep);
        write_run_files(fs::path(opts.out_dir) / name, manifest, rep_json, result, arch, wall,
                        "simulated");
        outcomes[rep] = {rep_json, wall};
    };

    const std::size_t nworkers = std::min(std::max<std::size_t>(opts.workers, 1), opts.repetitions);
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < nworkers; ++w) {
        pool.emplace_back([&] {
            while (true) {
                const std::size_t rep = next.fetch_add(1);
                if (rep >= opts.repetitions) return;
                try {
                    run_rep(rep);
                } catch (...) {
                    failures[rep] = std::current_exception();
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    for (const auto& f : failures) {
        if (f) std::rethrow_exception(f);
    }

    ArchSummary summary;
    summary.arch = arch.name;
    for (const auto& o : outcomes) {
        summary.accuracy.add(o.report["metrics"]["accuracy"].get<double>());
        summary.precision.add(o.report["metrics"]["macro_precision"].get<double>());
        summary.recall.add(o.report["metrics"]["macro_recall"].get<double>());
        summary.f1.add(o.report["metrics"]["macro_f1"].get<double>());
        summary.loss.add(o.report["test_loss"].get<double>());
        summary.wall_seconds.add(o.wall);
        summary.traffic_mb.add(o.report["traffic"]["bytes_total"].get<double>() / 1e6);
    }
    const std::string table = summary_table({summary});
    write_text_file(fs::path(opts.out_dir) / "summary.txt", table);
    write_text_file(fs::path(opts.out_dir) / "summary.csv", summary_csv({summary}));
    const json sj{{"version", kVersion},
                  {"arch", arch.name},
                  {"repetitions", opts.repetitions},
                  {"accuracy", summary.accuracy.to_json()},
                  {"macro_precision", summary.precision.to_json()},
                  {"macro_recall", summary.recall.to_json()},
                  {"macro_f1", summary.f1.to_json()},
                  {"test_loss", summary.loss.to_json()},
                  {"wall_seconds", summary.wall_seconds.to_json()},
                  {"traffic_mb", summary.traffic_mb.to_json()}};
    write_text_file(fs::path(opts.out_dir) / "summary.json", sj.dump(2) + "\n");
    std::fputs(table.c_str(), stdout);
    std::fprintf(stdout, "%zu run(s) written under %s\n", opts.repetitions,
                 opts.out_dir.c_str());
    return 0;
}

// ---- server / client ------------------------------------------------------------

template <typename Scalar>
int cmd_server(const CliOptions& opts) {
    const ArchDescriptor arch = resolve_arch(opts);
    const FedConfig& cfg = opts.fed;
    cfg.validate();
    const Dataset<Scalar> full = make_dataset<Scalar>(opts, arch, cfg.seed);
    const PreparedRun<Scalar> prep = prepare_run(full, opts, cfg.seed);
    const json manifest = manifest_json(opts, arch, cfg, full, prep);

    std::fprintf(stderr, "listening on %s:%d, waiting for %zu client(s)\n", opts.ip.c_str(),
                 opts.port, cfg.clients);
    TcpCohort cohort(cfg, arch.name, opts.ip, static_cast<std::uint16_t>(opts.port));
    const auto t0 = std::chrono::steady_clock::now();
    const FederationResult result =
        run_server_loop<Scalar>(cfg, arch, cohort, prep.split.val, prep.split.test);
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    check_traffic(result, arch, cfg);
    const json rep_json = report_json(arch, cfg, result);
    write_run_files(opts.out_dir, manifest, rep_json, result, arch, wall, "tcp");
    std::fprintf(stdout, "test accuracy %.4f, loss %.6f, %llu bytes exchanged, results in %s\n",
                 rep_json["metrics"]["accuracy"].get<double>(), result.test_loss,
                 static_cast<unsigned long long>(result.traffic.total()), opts.out_dir.c_str());
    return 0;
}

// The client derives its shard from the shared seed: same dataset, same
// split, same partition as the server, no data ever crosses the wire.
template <typename Scalar>
int cmd_client(const CliOptions& opts) {
    const ArchDescriptor arch = resolve_arch(opts);
    const FedConfig& cfg = opts.fed;
    cfg.validate();
    if (opts.rank == 0 || opts.rank > cfg.clients) {
        throw ConfigError("rank must be in [1, " + std::to_string(cfg.clients) + "]");
    }
    const Dataset<Scalar> full = make_dataset<Scalar>(opts, arch, cfg.seed);
    const PreparedRun<Scalar> prep = prepare_run(full, opts, cfg.seed);
    run_tcp_client<Scalar>(opts.ip, static_cast<std::uint16_t>(opts.port), opts.rank, arch,
                           prep.shards[opts.rank - 1], cfg);
    std::fprintf(stdout, "client %u finished\n", opts.rank);
    return 0;
}

// ---- params -----------------------------------------------------------------------

inline int cmd_params(const CliOptions& opts) {
    std::vector<ArchDescriptor> archs;
    if (opts.all_archs) {
        for (const auto& name : catalog_names()) archs.push_back(catalog_arch(name, opts.classes));
    } else {
        archs.push_back(resolve_arch(opts));
    }
    if (opts.json_output) {
        json out = json::array();
        for (const auto& arch : archs) {
            const CountReport rep = count_params(arch);
            json layers = json::array();
            for (const auto& row : rep.rows) {
                layers.push_back(json{{"index", row.index},
                                      {"spec", row.label},
                                      {"output", row.out.str()},
                                      {"trainable", row.trainable},
                                      {"transmitted", row.transmitted}});
            }
            out.push_back(json{{"name", arch.name},
                               {"classes", arch.num_classes},
                               {"trainable", rep.trainable},
                               {"transmitted", rep.transmitted},
                               {"layers", layers}});
        }
        std::fputs((out.dump(2) + "\n").c_str(), stdout);
        return 0;
    }
    for (const auto& arch : archs) {
        const CountReport rep = count_params(arch);
        if (opts.all_archs) {
            std::fprintf(stdout, "%-22s %12zu trainable  %12zu transmitted\n", arch.name.c_str(),
                         rep.trainable, rep.transmitted);
            continue;
        }
        std::fprintf(stdout, "%s (%zu classes)\n", arch.name.c_str(), arch.num_classes);
        std::fprintf(stdout, "%4s  %-58s %14s %12s %12s\n", "#", "layer", "output", "trainable",
                     "transmitted");
        for (const auto& row : rep.rows) {
            std::fprintf(stdout, "%4zu  %-58s %14s %12zu %12zu\n", row.index, row.label.c_str(),
                         row.out.str().c_str(), row.trainable, row.transmitted);
        }
        std::fprintf(stdout, "total trainable   %zu\n", rep.trainable);
        std::fprintf(stdout, "total transmitted %zu\n", rep.transmitted);
    }
    return 0;
}

// ---- report -------------------------------------------------------------------------

inline int cmd_report(const CliOptions& opts) {
    const fs::path root(opts.report_dir);
    if (!fs::exists(root)) throw IoError("no such directory: " + root.string());
    std::vector<fs::path> reports;
    for (const auto& entry : fs::recursive_directory_iterator(root)) {
        if (entry.is_regular_file() && entry.path().filename() == "report.json") {
            reports.push_back(entry.path());
        }
    }
    std::sort(reports.begin(), reports.end());
    if (reports.empty()) {
        throw ConfigError("no run reports found under " + root.string());
    }

    std::map<std::string, ArchSummary> groups;
    for (const auto& path : reports) {
        const json r = json::parse(read_text_file(path));
        const std::string arch = r.at("arch").get<std::string>();
        ArchSummary& g = groups[arch];
        g.arch = arch;
        g.accuracy.add(r.at("metrics").at("accuracy").get<double>());
        g.precision.add(r.at("metrics").at("macro_precision").get<double>());
        g.recall.add(r.at("metrics").at("macro_recall").get<double>());
        g.f1.add(r.at("metrics").at("macro_f1").get<double>());
        g.loss.add(r.at("test_loss").get<double>());
        g.traffic_mb.add(r.at("traffic").at("bytes_total").get<double>() / 1e6);
        const fs::path timing = path.parent_path() / "timing.json";
        if (fs::exists(timing)) {
            const json t = json::parse(read_text_file(timing));
            g.wall_seconds.add(t.at("total_wall_seconds").get<double>());
        }
    }

    std::vector<ArchSummary> rows;
    std::vector<std::string> single_run;
    for (auto& [name, g] : groups) {
        if (g.accuracy.values.size() == 1) single_run.push_back(name);
        rows.push_back(g);
    }

    // Correlation of mean training time against mean accuracy across
    // architectures.
    bool have_r = false;
    double r_value = 0.0;
    std::string r_note;
    {
        std::vector<double> times, accs;
        for (const auto& g : rows) {
            if (g.wall_seconds.values.empty()) continue;
            times.push_back(mean_of(g.wall_seconds.values));
            accs.push_back(mean_of(g.accuracy.values) * 100.0);
        }
        if (times.size() >= 2) {
            try {
                r_value = pearson(times, accs);
                have_r = true;
            } catch (const ValueError& e) {
                r_note = e.what();
            }
        } else {
            r_note = "need at least two architectures with timing data";
        }
    }

    if (opts.json_output) {
        json ja = json::array();
        for (const auto& g : rows) {
            ja.push_back(json{{"arch", g.arch},
                              {"runs", g.accuracy.values.size()},
                              {"accuracy", g.accuracy.to_json()},
                              {"macro_precision", g.precision.to_json()},
                              {"macro_recall", g.recall.to_json()},
                              {"macro_f1", g.f1.to_json()},
                              {"test_loss", g.loss.to_json()},
                              {"wall_seconds", g.wall_seconds.to_json()},
                              {"traffic_mb", g.traffic_mb.to_json()}});
        }
        json out{{"version", kVersion}, {"archs", ja}, {"single_run_archs", single_run}};
        if (have_r) {
            out["time_accuracy_pearson_r"] = r_value;
            if (!std::isnan(opts.reference_r)) {
                out["reference_r"] = opts.reference_r;
                out["reference_r_difference"] = r_value - opts.reference_r;
            }
        } else {
            out["time_accuracy_pearson_note"] = r_note;
        }
        std::fputs((out.dump(2) + "\n").c_str(), stdout);
    } else {
        std::fputs(summary_table(rows).c_str(), stdout);
        if (!single_run.empty()) {
            std::string names;
            for (const auto& n : single_run) names += (names.empty() ? "" : ", ") + n;
            std::fprintf(stdout, "note: single run only, no deviation shown: %s\n", names.c_str());
        }
        if (have_r) {
            std::fprintf(stdout, "time-accuracy correlation (Pearson r): %.6f\n", r_value);
            if (!std::isnan(opts.reference_r)) {
                std::fprintf(stdout,
                             "reference r: %.6f, computed differs by %+.6f%s\n",
                             opts.reference_r, r_value - opts.reference_r,
                             (r_value < 0) == (opts.reference_r < 0)
                                 ? ""
                                 : " (opposite sign to the reference)");
            }
        } else {
            std::fprintf(stdout, "time-accuracy correlation: not computed (%s)\n", r_note.c_str());
        }
    }

    if (!opts.plot_csv.empty()) {
        std::string csv = "arch,mean_time_s,mean_accuracy_pct\n";
        for (const auto& g : rows) {
            if (g.wall_seconds.values.empty()) continue;
            csv += g.arch + "," + format_g(mean_of(g.wall_seconds.values)) + "," +
                   format_g(mean_of(g.accuracy.values) * 100.0) + "\n";
        }
        write_text_file(opts.plot_csv, csv);
    }
    return 0;
}

// ---- partition ------------------------------------------------------------------------

template <typename Scalar>
int cmd_partition(const CliOptions& opts) {
    const ArchDescriptor arch = resolve_arch(opts);
    const Dataset<Scalar> full = make_dataset<Scalar>(opts, arch, opts.fed.seed);
    const PreparedRun<Scalar> prep = prepare_run(full, opts, opts.fed.seed);
    json clients = json::array();
    for (std::size_t i = 0; i < prep.shards.size(); ++i) {
        clients.push_back(json{{"rank", i + 1},
                               {"samples", prep.shards[i].size()},
                               {"class_counts", prep.shards[i].class_counts()}});
    }
    const json out{{"samples", full.size()},
                   {"class_counts", full.class_counts()},
                   {"train", prep.split.train.size()},
                   {"val", prep.split.val.size()},
                   {"test", prep.split.test.size()},
                   {"clients", clients}};
    std::fputs((out.dump(2) + "\n").c_str(), stdout);
    return 0;
}

// ---- wiring --------------------------------------------------------------------------

namespace detail {

inline void add_data_options(CLI::App* cmd, CliOptions& o) {
    cmd->add_option("--data", o.data_csv, "CSV dataset (features..., label); default: blobs");
    cmd->add_option("--classes", o.classes, "class count for catalog models")
        ->check(CLI::Range(std::size_t(2), std::size_t(1000)));
    cmd->add_option("--val-frac", o.val_frac, "validation fraction")->check(CLI::Range(0.0, 0.5));
    cmd->add_option("--test-frac", o.test_frac, "test fraction")->check(CLI::Range(0.0, 0.5));
    cmd->add_option("--blob-separation", o.blob_separation, "blob mean separation");
    cmd->add_option("--blob-noise", o.blob_noise, "blob noise sigma");
}

inline void add_model_options(CLI::App* cmd, CliOptions& o) {
    cmd->add_option("--arch", o.arch, "architecture name from the catalog");
    cmd->add_option("--arch-file", o.arch_file, "architecture descriptor file (overrides --arch)");
}

inline void add_fed_options(CLI::App* cmd, CliOptions& o, std::string* train_dtype,
                            std::string* wire_dtype) {
    cmd->add_option("--clients,-K", o.fed.clients, "number of clients K")
        ->check(CLI::Range(std::size_t(1), std::size_t(10000)));
    cmd->add_option("--participation,-C", o.fed.participation,
                    "fraction of clients sampled per round")
        ->check(CLI::Range(0.0, 1.0));
    cmd->add_option("--rounds,-T", o.fed.rounds, "federation rounds");
    cmd->add_option("--local-epochs,-E", o.fed.local_epochs, "local epochs per round");
    cmd->add_option("--batch-size,-B", o.fed.batch_size, "minibatch size");
    cmd->add_option("--lr", o.fed.learning_rate, "learning rate")->check(CLI::NonNegativeNumber);
    cmd->add_option("--momentum", o.fed.momentum, "momentum coefficient")
        ->check(CLI::Range(0.0, 0.999999));
    cmd->add_option("--seed", o.fed.seed, "base random seed");
    cmd->add_flag("--no-shuffle", [&o](std::int64_t) { o.fed.shuffle_each_epoch = false; },
                  "visit samples in storage order instead of reshuffling per epoch");
    cmd->add_option("--train-dtype", *train_dtype, "training scalar type")
        ->check(CLI::IsMember({"f32", "f64"}));
    cmd->add_option("--wire-dtype", *wire_dtype, "wire parameter encoding")
        ->check(CLI::IsMember({"f32", "f64"}));
}

inline void add_net_options(CLI::App* cmd, CliOptions& o) {
    cmd->add_option("--ip", o.ip, "IPv4 address");
    cmd->add_option("--port", o.port, "TCP port")->check(CLI::Range(1, 65535));
}

} // namespace detail

inline int run_cli(int argc, const char* const* argv) {
    CliOptions opts;
    std::string train_dtype = "f32", wire_dtype = "f32";

    CLI::App app{"federated averaging simulator and toolkit"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kVersion);
    // Subcommand options may also come from an INI file, written under a
    // [simulate], [server], or [client] section. Flags given on the command
    // line win over file values. fallthrough() lets `--config` be typed after
    // the subcommand name; config processing only happens at the root app.
    app.fallthrough();
    app.allow_config_extras(CLI::config_extras_mode::error);
    app.set_config("--config", "",
                   "INI file with options under a [simulate], [server], or [client] section");

    CLI::App* sim = app.add_subcommand("simulate", "run federated training in-process");
    detail::add_data_options(sim, opts);
    detail::add_model_options(sim, opts);
    detail::add_fed_options(sim, opts, &train_dtype, &wire_dtype);
    sim->add_option("--repetitions,-R", opts.repetitions, "independent repetitions")
        ->check(CLI::Range(std::size_t(1), std::size_t(1000)));
    sim->add_option("--workers", opts.workers, "parallel repetition workers")
        ->check(CLI::Range(std::size_t(1), std::size_t(256)));
    sim->add_option("--out", opts.out_dir, "output directory");

    CLI::App* server = app.add_subcommand("server", "run the aggregation server over TCP");
    detail::add_data_options(server, opts);
    detail::add_model_options(server, opts);
    detail::add_fed_options(server, opts, &train_dtype, &wire_dtype);
    detail::add_net_options(server, opts);
    server->add_option("--out", opts.out_dir, "output directory");

    CLI::App* client = app.add_subcommand("client", "run one training client over TCP");
    detail::add_data_options(client, opts);
    detail::add_model_options(client, opts);
    detail::add_fed_options(client, opts, &train_dtype, &wire_dtype);
    detail::add_net_options(client, opts);
    client->add_option("--rank", opts.rank, "client rank, 1-based")->required();

    CLI::App* params = app.add_subcommand("params", "count model parameters");
    detail::add_model_options(params, opts);
    params->add_option("--classes", opts.classes, "class count")
        ->check(CLI::Range(std::size_t(2), std::size_t(1000)));
    params->add_flag("--all", opts.all_archs, "summarize every catalog architecture");
    params->add_flag("--json", opts.json_output, "machine-readable output");

    CLI::App* report = app.add_subcommand("report", "aggregate finished runs");
    report->add_option("dir", opts.report_dir, "directory to scan for run reports")->required();
    report->add_option("--reference-r", opts.reference_r,
                       "reference correlation value to compare against");
    report->add_option("--plot-csv", opts.plot_csv, "write time/accuracy points to a CSV");
    report->add_flag("--json", opts.json_output, "machine-readable output");

    CLI::App* partition = app.add_subcommand("partition", "show the per-client data partition");
    detail::add_data_options(partition, opts);
    detail::add_model_options(partition, opts);
    partition->add_option("--clients,-K", opts.fed.clients, "number of clients K");
    partition->add_option("--seed", opts.fed.seed, "base random seed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        opts.train_dtype = dtype_from_name(train_dtype);
        opts.fed.wire_dtype = dtype_from_name(wire_dtype);
        const bool f32 = opts.train_dtype == Dtype::f32;
        if (sim->parsed()) return f32 ? cmd_simulate<float>(opts) : cmd_simulate<double>(opts);
        if (server->parsed()) return f32 ? cmd_server<float>(opts) : cmd_server<double>(opts);
        if (client->parsed()) return f32 ? cmd_client<float>(opts) : cmd_client<double>(opts);
        if (params->parsed()) return cmd_params(opts);
        if (report->parsed()) return cmd_report(opts);
        if (partition->parsed()) {
            return f32 ? cmd_partition<float>(opts) : cmd_partition<double>(opts);
        }
        return 1;
    } catch (const std::exception& e) {
        const char* kind = "internal";
        if (dynamic_cast<const ConfigError*>(&e)) kind = "config";
        else if (dynamic_cast<const ShapeError*>(&e)) kind = "shape";
        else if (dynamic_cast<const ValueError*>(&e)) kind = "value";
        else if (dynamic_cast<const ProtocolError*>(&e)) kind = "protocol";
        else if (dynamic_cast<const IoError*>(&e)) kind = "io";
        const json err{{"error", kind}, {"message", e.what()}};
        std::fputs((err.dump() + "\n").c_str(), stderr);
        return 1;
    }
}

} // namespace fedsim
