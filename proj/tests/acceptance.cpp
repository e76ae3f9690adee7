// Acceptance checks for the federated training toolkit. Each check prints one
// PASS/FAIL line; the exit code is the number of failures. Unlike the unit
// suites these exercise whole-pipeline properties end to end, with timing
// budgets where a check is only meaningful when it is also cheap.

#include <unistd.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "fedsim/cli.hpp"
#include "fedsim/tcp.hpp"

using namespace fedsim;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::vector<std::size_t> sample_shape(const ArchDescriptor& a) {
    if (a.input.is_image) return {a.input.c, a.input.h, a.input.w};
    return {a.input.features};
}

std::size_t feature_dim(const ArchDescriptor& a) {
    std::size_t n = 1;
    for (const auto d : sample_shape(a)) n *= d;
    return n;
}

struct Prepared {
    std::vector<Dataset<double>> shards;
    Dataset<double> val, test;
};

Prepared prepare(const Dataset<double>& full, std::size_t clients, std::uint64_t seed) {
    Prepared p;
    Rng split_rng(derive_seed(seed, {seed_tag::split}));
    auto split = split_dataset(full, SplitSpec{}, split_rng);
    Rng part_rng(derive_seed(seed, {seed_tag::partition}));
    p.shards = partition_iid(split.train, clients, part_rng);
    p.val = std::move(split.val);
    p.test = std::move(split.test);
    return p;
}

Dataset<double> blobs(const std::vector<std::size_t>& class_counts, std::size_t dim,
                      std::uint64_t seed) {
    BlobsSpec spec;
    spec.class_counts = class_counts;
    spec.feature_dim = dim;
    Rng rng(derive_seed(seed, {seed_tag::blobs}));
    return generate_blobs<double>(spec, rng);
}

// ---- 1: catalog parameter counts -------------------------------------------

bool check_param_counts(std::string& why) {
    const auto t0 = Clock::now();
    const std::vector<std::pair<const char*, std::size_t>> expected{
        {"alexnet", 57020228},
        {"squeezenet_v1_0", 737476},
        {"resnet18", 11178564},
        {"vgg11_batchnorm", 128788228},
        {"shufflenet_v2_x1_0", 1257704},
    };
    for (const auto& [name, want] : expected) {
        const auto got = count_params(catalog_arch(name)).trainable;
        if (got != want) {
            why = std::string(name) + " counted " + std::to_string(got) + ", expected " +
                  std::to_string(want);
            return false;
        }
    }
    const double dt = seconds_since(t0);
    if (dt >= 1.0) {
        why = "took " + std::to_string(dt) + " s, budget is 1 s";
        return false;
    }
    return true;
}

// ---- 2: aggregation against a long double oracle ----------------------------

bool check_aggregation_oracle(std::string& why) {
    const auto t0 = Clock::now();
    Rng rng(2001);
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t k = 1 + rng.next_below(10);
        const std::size_t dim = 1 + rng.next_below(10000);
        std::vector<ClientResult> rs;
        std::vector<long double> sum(dim, 0.0L);
        long double total = 0.0L;
        for (std::size_t c = 0; c < k; ++c) {
            ClientResult r;
            r.client_id = static_cast<std::uint32_t>(c + 1);
            r.sample_count = 1 + rng.next_below(1000);
            r.state.resize(dim);
            for (double& v : r.state) v = rng.uniform(-10.0, 10.0);
            total += static_cast<long double>(r.sample_count);
            for (std::size_t i = 0; i < dim; ++i) {
                sum[i] += static_cast<long double>(r.sample_count) *
                          static_cast<long double>(r.state[i]);
            }
            rs.push_back(std::move(r));
        }
        const auto out = aggregate(std::move(rs));
        for (std::size_t i = 0; i < dim; ++i) {
            const double want = static_cast<double>(sum[i] / total);
            if (std::abs(out[i] - want) > 1e-12 * std::max(1.0, std::abs(want))) {
                why = "trial " + std::to_string(trial) + " coordinate " + std::to_string(i) +
                      ": got " + std::to_string(out[i]) + ", oracle " + std::to_string(want);
                return false;
            }
        }
    }
    const double dt = seconds_since(t0);
    if (dt >= 10.0) {
        why = "took " + std::to_string(dt) + " s, budget is 10 s";
        return false;
    }
    return true;
}

// ---- 3: one client equals centralized SGD ----------------------------------

bool centralized_match(const std::string& arch_name, std::uint64_t seed, std::string& why) {
    const auto arch = catalog_arch(arch_name);
    const auto ds = blobs({40, 40, 40, 40}, feature_dim(arch), seed);
    auto p = prepare(ds, 1, seed);

    FedConfig cfg;
    cfg.clients = 1;
    cfg.participation = 1.0;
    cfg.local_epochs = 1;
    cfg.rounds = 10;
    cfg.seed = seed;
    cfg.wire_dtype = Dtype::f64;
    const auto fed = run_federation(cfg, arch, p.shards, p.val, p.test);

    auto model = build_model<double>(arch);
    {
        Rng rng(derive_seed(seed, {seed_tag::init}));
        model.init_params(rng);
    }
    const auto& train = p.shards[0];
    const auto shape = sample_shape(arch);
    const auto params = model.parameters();
    const auto grads = model.gradients();
    for (std::uint32_t t = 1; t <= cfg.rounds; ++t) {
        SgdMomentum<double> opt(cfg.learning_rate, cfg.momentum);
        const auto order = epoch_order(train.size(), cfg.seed, t, 1, 0, true);
        for (std::size_t at = 0; at < order.size(); at += cfg.batch_size) {
            const std::size_t take = std::min(cfg.batch_size, order.size() - at);
            const std::vector<std::size_t> idx(order.begin() + at, order.begin() + at + take);
            const auto logits = model.forward(gather_features(train, idx, shape), true);
            const auto loss = softmax_cross_entropy(logits, gather_labels(train, idx));
            model.backward(loss.dlogits);
            opt.step(params, grads);
        }
    }
    if (fed.final_state != model.state_to_flat()) {
        why = arch_name + ": federated and centralized weights differ";
        return false;
    }
    return true;
}

bool check_centralized_equivalence(std::string& why) {
    return centralized_match("tiny_mlp", 31, why) && centralized_match("tiny_cnn", 32, why);
}

// ---- 4: finite difference gradient checks ----------------------------------

using T = Tensor<double>;
constexpr double kStep = 1e-5;

T random_tensor(std::vector<std::size_t> shape, Rng& rng) {
    T t(std::move(shape));
    for (double& v : t.data) v = rng.uniform(-1.0, 1.0);
    return t;
}

double objective(Layer<double>& layer, const T& x, const T& r) {
    const T y = layer.forward(x, true);
    double s = 0.0;
    for (std::size_t i = 0; i < y.numel(); ++i) s += r.data[i] * y.data[i];
    return s;
}

bool grads_close(double analytic, double numeric, const std::string& where, std::string& why) {
    const double tol = 1e-4 * std::max(std::abs(analytic), std::abs(numeric)) + 1e-9;
    if (std::abs(analytic - numeric) > tol) {
        std::ostringstream os;
        os << where << ": analytic " << analytic << " vs numeric " << numeric;
        why = os.str();
        return false;
    }
    return true;
}

bool check_layer_grads(Layer<double>& layer, T x, Rng& rng, std::string& why) {
    const T y0 = layer.forward(x, true);
    const T r = random_tensor(y0.shape, rng);
    (void)layer.forward(x, true);
    const T dx = layer.backward(r);
    const std::string kind(layer.kind());

    for (std::size_t i = 0; i < x.numel(); ++i) {
        const double keep = x.data[i];
        x.data[i] = keep + kStep;
        const double up = objective(layer, x, r);
        x.data[i] = keep - kStep;
        const double dn = objective(layer, x, r);
        x.data[i] = keep;
        if (!grads_close(dx.data[i], (up - dn) / (2 * kStep), kind + " dx", why)) return false;
    }

    const auto params = layer.parameters();
    (void)layer.forward(x, true);
    (void)layer.backward(r);
    const auto grads = layer.gradients();
    for (std::size_t p = 0; p < params.size(); ++p) {
        const std::vector<double> analytic = grads[p]->data;
        for (std::size_t i = 0; i < params[p]->numel(); ++i) {
            const double keep = params[p]->data[i];
            params[p]->data[i] = keep + kStep;
            const double up = objective(layer, x, r);
            params[p]->data[i] = keep - kStep;
            const double dn = objective(layer, x, r);
            params[p]->data[i] = keep;
            if (!grads_close(analytic[i], (up - dn) / (2 * kStep), kind + " param", why)) {
                return false;
            }
        }
    }
    return true;
}

T gapped_positive(std::vector<std::size_t> shape, Rng& rng) {
    // Strictly distinct values keep pooling argmaxes stable under probes.
    T x(std::move(shape));
    std::vector<std::size_t> order(x.numel());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    rng.shuffle(order);
    for (std::size_t i = 0; i < x.numel(); ++i) x.data[i] = 1.0 + 0.1 * double(order[i]);
    return x;
}

bool check_gradients(std::string& why) {
    Rng rng(4001);
    {
        Dense<double> d(5, 3);
        d.init_params(rng);
        if (!check_layer_grads(d, random_tensor({4, 5}, rng), rng, why)) return false;
    }
    {
        Dense<double> d(4, 4, false);
        d.init_params(rng);
        if (!check_layer_grads(d, random_tensor({3, 4}, rng), rng, why)) return false;
    }
    {
        Conv2d<double> c(2, 3, 3, 2, 1);
        c.init_params(rng);
        if (!check_layer_grads(c, random_tensor({2, 2, 5, 5}, rng), rng, why)) return false;
    }
    {
        Conv2d<double> c(4, 4, 3, 1, 1, true, 2);
        c.init_params(rng);
        if (!check_layer_grads(c, random_tensor({2, 4, 4, 4}, rng), rng, why)) return false;
    }
    {
        MaxPool2d<double> p(2);
        if (!check_layer_grads(p, gapped_positive({1, 2, 4, 4}, rng), rng, why)) return false;
    }
    {
        MaxPool2d<double> p(3, 2, 1);
        if (!check_layer_grads(p, gapped_positive({2, 1, 5, 5}, rng), rng, why)) return false;
    }
    {
        Relu<double> r;
        T x({3, 7});
        for (double& v : x.data) {
            const double m = rng.uniform(0.1, 1.0);
            v = rng.next_real() < 0.5 ? -m : m;
        }
        if (!check_layer_grads(r, std::move(x), rng, why)) return false;
    }
    {
        Flatten<double> f;
        if (!check_layer_grads(f, random_tensor({2, 3, 2, 2}, rng), rng, why)) return false;
    }
    {
        BatchNorm2d<double> bn(3);
        for (auto* p : bn.parameters()) {
            for (double& v : p->data) v = rng.uniform(0.5, 1.5);
        }
        if (!check_layer_grads(bn, random_tensor({4, 3, 2, 2}, rng), rng, why)) return false;
    }
    return true;
}

// ---- 5: convergence at desk scale -------------------------------------------

bool check_convergence(std::string& why) {
    const auto t0 = Clock::now();
    const auto arch = catalog_arch("tiny_mlp");
    const auto ds = blobs({1192, 513, 985, 1162}, feature_dim(arch), 5);
    auto p = prepare(ds, 3, 5);

    FedConfig cfg;
    cfg.clients = 3;
    cfg.rounds = 50;
    cfg.batch_size = 32;
    cfg.learning_rate = 0.001;
    cfg.momentum = 0.9;
    cfg.seed = 5;
    cfg.wire_dtype = Dtype::f64;
    const auto r = run_federation(cfg, arch, p.shards, p.val, p.test);

    const double dt = seconds_since(t0);
    if (r.test_accuracy < 0.95) {
        why = "test accuracy " + std::to_string(r.test_accuracy) + ", need at least 0.95";
        return false;
    }
    if (dt >= 60.0) {
        why = "took " + std::to_string(dt) + " s, budget is 60 s";
        return false;
    }
    return true;
}

// ---- 6: wire round trips -----------------------------------------------------

bool check_wire(std::string& why) {
    Rng rng(6001);
    for (int i = 0; i < 10000; ++i) {
        Frame f;
        f.type = static_cast<MsgType>(1 + rng.next_below(6));
        f.dtype = rng.next_below(2) ? Dtype::f64 : Dtype::f32;
        f.round = static_cast<std::uint32_t>(rng.next_u64());
        f.sample_count = rng.next_u64() >> 8;
        f.payload.resize(rng.next_below(512));
        for (auto& b : f.payload) b = static_cast<std::uint8_t>(rng.next_below(256));
        const Frame g = decode_frame(encode_frame(f));
        if (g.type != f.type || g.dtype != f.dtype || g.round != f.round ||
            g.sample_count != f.sample_count || g.payload != f.payload) {
            why = "frame " + std::to_string(i) + " did not survive the round trip";
            return false;
        }
    }
    for (int i = 0; i < 200; ++i) {
        const std::size_t n = 1 + rng.next_below(20000);
        const Dtype dtype = rng.next_below(2) ? Dtype::f64 : Dtype::f32;
        std::vector<double> w(n);
        for (double& v : w) v = rng.uniform(-1.0, 1.0);
        const Frame f = make_global_model(1, ModelParams{"tiny_mlp", dtype, w});
        const std::size_t want = n * dtype_width(dtype);
        if (f.payload.size() != want) {
            why = "payload of " + std::to_string(n) + " params at " + dtype_name(dtype) +
                  " is " + std::to_string(f.payload.size()) + " bytes, expected " +
                  std::to_string(want);
            return false;
        }
    }
    return true;
}

// ---- 7: traffic accounting ---------------------------------------------------

bool check_traffic(std::string& why) {
    const std::vector<std::pair<std::size_t, double>> settings{{3, 1.0}, {5, 0.4}, {10, 0.2}};
    for (const char* name : {"tiny_mlp", "tiny_cnn", "tiny_cnn_bn"}) {
        const auto arch = catalog_arch(name);
        const std::size_t transmitted = count_params(arch).transmitted;
        for (const auto& [k, c] : settings) {
            const auto ds = blobs({40, 40, 40, 40}, feature_dim(arch), 7);
            auto p = prepare(ds, k, 7);
            FedConfig cfg;
            cfg.clients = k;
            cfg.participation = c;
            cfg.rounds = 2;
            cfg.seed = 7;
            cfg.wire_dtype = Dtype::f32;
            const auto r = run_federation(cfg, arch, p.shards, p.val, p.test);

            const std::size_t m = num_participants(k, c);
            const auto per_round = round_traffic(transmitted, Dtype::f32, m);
            for (const auto& rec : r.rounds) {
                if (rec.bytes_to_clients != per_round.to_clients ||
                    rec.bytes_to_server != per_round.to_server) {
                    why = std::string(name) + " K=" + std::to_string(k) +
                          ": round bytes diverge from the prediction";
                    return false;
                }
            }
            const auto predicted = session_traffic(transmitted, Dtype::f32, k, name,
                                                   std::vector<std::size_t>(cfg.rounds, m));
            if (r.traffic.to_clients != predicted.to_clients ||
                r.traffic.to_server != predicted.to_server) {
                why = std::string(name) + " K=" + std::to_string(k) +
                      ": session bytes diverge from the prediction";
                return false;
            }
        }
    }
    return true;
}

// ---- 8: simulated and TCP backends agree --------------------------------------

bool check_backend_equivalence(std::string& why) {
    const auto arch = catalog_arch("tiny_mlp");
    const auto ds = blobs({40, 40, 40, 40}, feature_dim(arch), 8);
    auto p = prepare(ds, 2, 8);
    FedConfig cfg;
    cfg.clients = 2;
    cfg.rounds = 3;
    cfg.seed = 8;
    cfg.wire_dtype = Dtype::f64;

    const auto sim = run_federation(cfg, arch, p.shards, p.val, p.test);

    FederationResult tcp;
    std::string server_error;
    std::thread server([&] {
        try {
            TcpCohort cohort(cfg, arch.name, "127.0.0.1", 3002);
            tcp = run_server_loop<double>(cfg, arch, cohort, p.val, p.test);
        } catch (const std::exception& e) {
            server_error = e.what();
        }
    });
    std::vector<std::thread> clients;
    for (std::uint32_t rank = 1; rank <= 2; ++rank) {
        clients.emplace_back([&, rank] {
            run_tcp_client<double>("127.0.0.1", 3002, rank, arch, p.shards[rank - 1], cfg);
        });
    }
    for (auto& c : clients) c.join();
    server.join();
    if (!server_error.empty()) {
        why = "server failed: " + server_error;
        return false;
    }

    if (tcp.final_state != sim.final_state) {
        why = "final weights differ between backends";
        return false;
    }
    if (tcp.test_loss != sim.test_loss || tcp.test_accuracy != sim.test_accuracy ||
        tcp.test_predictions != sim.test_predictions) {
        why = "test metrics differ between backends";
        return false;
    }
    if (tcp.traffic.to_clients != sim.traffic.to_clients ||
        tcp.traffic.to_server != sim.traffic.to_server) {
        why = "traffic meters differ between backends";
        return false;
    }
    return true;
}

// ---- 9: metrics against a brute force recount ---------------------------------

bool check_metrics(std::string& why) {
    Rng rng(9001);
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t classes = 2 + rng.next_below(6);
        const std::size_t n = 1 + rng.next_below(400);
        std::vector<std::size_t> yt(n), yp(n);
        for (std::size_t i = 0; i < n; ++i) {
            yt[i] = rng.next_below(classes);
            yp[i] = rng.next_below(classes);
        }

        double macro_p = 0, macro_r = 0, macro_f = 0;
        std::size_t considered = 0, correct = 0, micro_tp = 0;
        for (std::size_t i = 0; i < n; ++i) {
            if (yt[i] == yp[i]) ++correct;
        }
        for (std::size_t c = 0; c < classes; ++c) {
            std::size_t tp = 0, fp = 0, fn = 0;
            for (std::size_t i = 0; i < n; ++i) {
                if (yt[i] == c && yp[i] == c) ++tp;
                if (yt[i] != c && yp[i] == c) ++fp;
                if (yt[i] == c && yp[i] != c) ++fn;
            }
            if (tp + fp + fn == 0) continue;
            ++considered;
            micro_tp += tp;
            const double prec = (tp + fp) ? double(tp) / double(tp + fp) : 0.0;
            const double rec = (tp + fn) ? double(tp) / double(tp + fn) : 0.0;
            macro_p += prec;
            macro_r += rec;
            macro_f += (prec + rec > 0) ? 2 * prec * rec / (prec + rec) : 0.0;
        }
        macro_p /= double(considered);
        macro_r /= double(considered);
        macro_f /= double(considered);

        const auto rep = metrics_from_cm(confusion(yt, yp, classes));
        const double acc = double(correct) / double(n);
        if (std::abs(rep.accuracy - acc) > 1e-12 || std::abs(rep.macro_precision - macro_p) > 1e-12 ||
            std::abs(rep.macro_recall - macro_r) > 1e-12 || std::abs(rep.macro_f1 - macro_f) > 1e-12) {
            why = "trial " + std::to_string(trial) + " disagrees with the recount";
            return false;
        }
        // Micro precision: every prediction lands somewhere, so the
        // denominator is n and the identity with accuracy is exact.
        if (std::abs(double(micro_tp) / double(n) - rep.accuracy) > 1e-12) {
            why = "micro precision broke the accuracy identity";
            return false;
        }
    }

    // Hand case: true {0,0,1,1}, predicted {0,1,1,1}.
    const auto rep = metrics_from_cm(confusion({0, 0, 1, 1}, {0, 1, 1, 1}, 2));
    if (std::abs(rep.macro_precision - 5.0 / 6.0) > 1e-12 ||
        std::abs(rep.macro_recall - 3.0 / 4.0) > 1e-12 ||
        std::abs(rep.macro_f1 - 11.0 / 15.0) > 1e-12) {
        why = "hand case returned the wrong macro scores";
        return false;
    }
    return true;
}

// ---- 10: correlation fixture and report comparison ------------------------------

std::string capture_stdout(const std::function<void()>& fn) {
    const fs::path path = fs::temp_directory_path() / "acceptance_stdout.txt";
    std::fflush(stdout);
    const int saved = dup(fileno(stdout));
    FILE* sink = std::fopen(path.string().c_str(), "w");
    dup2(fileno(sink), fileno(stdout));
    fn();
    std::fflush(stdout);
    dup2(saved, fileno(stdout));
    close(saved);
    std::fclose(sink);
    std::ifstream in(path);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

void write_run_fixture(const fs::path& root, const std::string& arch, double wall, double acc_pct) {
    const fs::path dir = root / arch / "run_000";
    fs::create_directories(dir);
    std::ofstream(dir / "report.json")
        << "{\"arch\":\"" << arch << "\",\"test_loss\":0.5,\"metrics\":{"
        << "\"accuracy\":" << acc_pct / 100.0 << ",\"macro_precision\":0.9,"
        << "\"macro_recall\":0.9,\"macro_f1\":0.9},"
        << "\"traffic\":{\"bytes_total\":1000}}";
    std::ofstream(dir / "timing.json") << "{\"total_wall_seconds\":" << wall << "}";
}

bool check_pearson_fixture(std::string& why) {
    const std::vector<double> times{16.23, 25.55, 27.95, 78.78, 19.99};
    const std::vector<double> accs{96.87, 96.54, 94.86, 97.29, 75.65};

    // Direct product-moment formula, accumulated independently of the
    // library's centered two-pass implementation.
    long double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
    const long double n = 5.0L;
    for (std::size_t i = 0; i < times.size(); ++i) {
        sx += times[i];
        sy += accs[i];
        sxx += static_cast<long double>(times[i]) * times[i];
        syy += static_cast<long double>(accs[i]) * accs[i];
        sxy += static_cast<long double>(times[i]) * accs[i];
    }
    const double direct = static_cast<double>(
        (n * sxy - sx * sy) / std::sqrt((n * sxx - sx * sx) * (n * syy - sy * sy)));

    const double lib = pearson(times, accs);
    if (std::abs(lib - direct) > 1e-9) {
        why = "library " + std::to_string(lib) + " vs direct formula " + std::to_string(direct);
        return false;
    }

    // The report path must print this value and compare it against a supplied
    // reference without changing the computed number.
    const fs::path root = fs::temp_directory_path() / "acceptance_report_fixture";
    fs::remove_all(root);
    write_run_fixture(root, "arch_a", times[0], accs[0]);
    write_run_fixture(root, "arch_b", times[1], accs[1]);
    write_run_fixture(root, "arch_c", times[2], accs[2]);
    write_run_fixture(root, "arch_d", times[3], accs[3]);
    write_run_fixture(root, "arch_e", times[4], accs[4]);

    char computed[64];
    std::snprintf(computed, sizeof computed, "%.6f", lib);

    CliOptions opts;
    opts.report_dir = root.string();
    const std::string plain = capture_stdout([&] { cmd_report(opts); });
    if (plain.find(computed) == std::string::npos) {
        why = "report output lacks the computed value " + std::string(computed);
        return false;
    }

    opts.reference_r = -0.2;
    const std::string compared = capture_stdout([&] { cmd_report(opts); });
    if (compared.find(computed) == std::string::npos) {
        why = "the reference comparison altered the computed value";
        return false;
    }
    if (compared.find("reference r: -0.200000") == std::string::npos ||
        compared.find("opposite sign") == std::string::npos) {
        why = "report did not flag the disagreement with the reference";
        return false;
    }
    return true;
}

struct Criterion {
    const char* label;
    bool (*fn)(std::string&);
};

} // namespace

int main() {
    const std::vector<Criterion> criteria{
        {"catalog parameter counts match the published totals", check_param_counts},
        {"aggregation matches a long double oracle to 1e-12", check_aggregation_oracle},
        {"single client federation is bit identical to centralized SGD", check_centralized_equivalence},
        {"every layer kind passes finite difference gradient checks", check_gradients},
        {"federated training reaches 95% accuracy at desk scale", check_convergence},
        {"frames survive 10000 randomized round trips", check_wire},
        {"metered traffic equals the analytic prediction exactly", check_traffic},
        {"simulated and TCP backends produce identical results", check_backend_equivalence},
        {"metrics agree with a brute force recount", check_metrics},
        {"correlation fixture matches a direct formula oracle", check_pearson_fixture},
    };

    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        std::string why;
        bool ok = false;
        const auto t0 = Clock::now();
        try {
            ok = criteria[i].fn(why);
        } catch (const std::exception& e) {
            why = std::string("exception: ") + e.what();
        }
        const double dt = seconds_since(t0);
        if (ok) {
            std::printf("PASS %2zu/10 %-62s (%.2f s)\n", i + 1, criteria[i].label, dt);
        } else {
            ++failures;
            std::printf("FAIL %2zu/10 %-62s %s\n", i + 1, criteria[i].label, why.c_str());
        }
    }
    return failures;
}
