#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <deque>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "fedsim/catalog.hpp"
#include "fedsim/dataset.hpp"
#include "fedsim/errors.hpp"
#include "fedsim/frame.hpp"
#include "fedsim/loss.hpp"
#include "fedsim/meter.hpp"
#include "fedsim/model.hpp"
#include "fedsim/optim.hpp"
#include "fedsim/params.hpp"
#include "fedsim/rng.hpp"
#include "fedsim/transport.hpp"

namespace fedsim {

struct FedConfig {
    std::size_t clients = 2;          // K
    double participation = 1.0;       // C, fraction sampled per round
    std::size_t rounds = 50;          // T
    std::size_t local_epochs = 1;     // E
    std::size_t batch_size = 32;      // B
    double learning_rate = 1e-3;
    double momentum = 0.9;
    std::uint64_t seed = 1;
    Dtype wire_dtype = Dtype::f32;
    bool shuffle_each_epoch = true;

    void validate() const {
        if (clients == 0) throw ConfigError("config: need at least one client");
        if (participation < 0.0 || participation > 1.0) {
            throw ConfigError("config: participation must be in [0, 1]");
        }
        if (rounds == 0) throw ConfigError("config: need at least one round");
        if (local_epochs == 0) throw ConfigError("config: need at least one local epoch");
        if (batch_size == 0) throw ConfigError("config: batch size must be positive");
        if (learning_rate < 0.0) throw ConfigError("config: learning rate must be non-negative");
        if (momentum < 0.0 || momentum >= 1.0) throw ConfigError("config: momentum must be in [0, 1)");
    }

    std::uint32_t world_size() const { return static_cast<std::uint32_t>(clients) + 1; }
};

// Participants per round: floor of C*K, at least one. The epsilon absorbs
// decimal fractions that are not exactly representable (0.3 * 10 < 3.0).
inline std::size_t num_participants(std::size_t clients, double participation) {
    const double exact = participation * static_cast<double>(clients);
    const auto m = static_cast<std::size_t>(std::floor(exact + 1e-9));
    return std::max<std::size_t>(m, 1);
}

// The client ranks (1..K) participating in a round, sorted ascending. A
// partial Fisher-Yates draw keyed on (seed, round) makes the choice
// deterministic and independent of everything else.
inline std::vector<std::uint32_t> sample_clients(std::size_t clients, std::size_t m,
                                                 std::uint64_t seed, std::uint32_t round) {
    if (m == 0 || m > clients) throw ValueError("sample: m must be in [1, clients]");
    std::vector<std::uint32_t> ids(clients);
    for (std::size_t i = 0; i < clients; ++i) ids[i] = static_cast<std::uint32_t>(i + 1);
    Rng rng(derive_seed(seed, {seed_tag::sample, round}));
    for (std::size_t i = 0; i < m; ++i) {
        const std::size_t j = i + rng.next_below(clients - i);
        std::swap(ids[i], ids[j]);
    }
    ids.resize(m);
    std::sort(ids.begin(), ids.end());
    return ids;
}

// ---- aggregation --------------------------------------------------------------

struct ClientResult {
    std::uint32_t client_id = 0;
    std::uint64_t sample_count = 0;
    std::vector<double> state;
};

// Sample-weighted average of client states: out = sum(n_k * w_k) / sum(n_k).
// Results are first sorted by client id, so the value is independent of
// arrival order; per-coordinate Neumaier summation keeps the error at one
// rounding of the exact sum. A single result passes through bit-exact.
inline std::vector<double> aggregate(std::vector<ClientResult> results) {
    if (results.empty()) throw ValueError("aggregate: no client results");
    std::sort(results.begin(), results.end(),
              [](const ClientResult& a, const ClientResult& b) { return a.client_id < b.client_id; });
    for (std::size_t i = 1; i < results.size(); ++i) {
        if (results[i].client_id == results[i - 1].client_id) {
            throw ValueError("aggregate: duplicate client id " +
                             std::to_string(results[i].client_id));
        }
    }
    const std::size_t dim = results[0].state.size();
    std::uint64_t total = 0;
    for (const auto& r : results) {
        if (r.state.size() != dim) {
            throw ShapeError("aggregate: client " + std::to_string(r.client_id) + " sent " +
                             std::to_string(r.state.size()) + " values, expected " +
                             std::to_string(dim));
        }
        total += r.sample_count;
    }
    if (total == 0) throw ValueError("aggregate: total sample count is zero");
    if (results.size() == 1) return std::move(results[0].state);

    const double inv_total = 1.0 / static_cast<double>(total);
    std::vector<double> out(dim);
    for (std::size_t i = 0; i < dim; ++i) {
        double sum = 0.0, comp = 0.0;
        for (const auto& r : results) {
            const double term = static_cast<double>(r.sample_count) * r.state[i];
            const double t = sum + term;
            if (std::abs(sum) >= std::abs(term)) {
                comp += (sum - t) + term;
            } else {
                comp += (term - t) + sum;
            }
            sum = t;
        }
        out[i] = (sum + comp) * inv_total;
    }
    return out;
}

// ---- local training -------------------------------------------------------------

// Visit order for one local epoch, derived from (seed, round, client, epoch)
// so every pass is reproducible in isolation.
inline std::vector<std::size_t> epoch_order(std::size_t n, std::uint64_t seed, std::uint32_t round,
                                            std::uint32_t client, std::size_t epoch, bool shuffle) {
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    if (shuffle) {
        Rng rng(derive_seed(seed, {seed_tag::shuffle, round, client, epoch}));
        rng.shuffle(order);
    }
    return order;
}

struct ClientUpdateResult {
    std::uint64_t sample_count = 0;
    double train_loss = 0.0; // sample-weighted mean over the final local epoch
    std::vector<double> state;
};

// One round of local work: load the global state, run E epochs of minibatch
// SGD with momentum, return the new state. The optimizer is fresh each
// round, so momentum never carries across aggregation boundaries.
template <typename Scalar>
ClientUpdateResult client_update(const ArchDescriptor& arch, const std::vector<double>& global_state,
                                 const Dataset<Scalar>& shard, const FedConfig& cfg,
                                 std::uint32_t round, std::uint32_t client_id) {
    if (shard.size() == 0) throw ValueError("client " + std::to_string(client_id) + ": empty shard");
    Model<Scalar> model = build_model<Scalar>(arch);
    model.load_state_flat(global_state);
    SgdMomentum<Scalar> opt(cfg.learning_rate, cfg.momentum);
    const auto params = model.parameters();
    const auto grads = model.gradients();
    const auto full_shape = batch_shape(arch, 1);
    const std::vector<std::size_t> sample_shape(full_shape.begin() + 1, full_shape.end());
    double final_loss = 0.0;
    for (std::size_t e = 0; e < cfg.local_epochs; ++e) {
        const auto order =
            epoch_order(shard.size(), cfg.seed, round, client_id, e, cfg.shuffle_each_epoch);
        double weighted = 0.0;
        for (std::size_t at = 0; at < order.size(); at += cfg.batch_size) {
            const std::size_t take = std::min(cfg.batch_size, order.size() - at);
            const std::vector<std::size_t> idx(order.begin() + at, order.begin() + at + take);
            const Tensor<Scalar> x = gather_features(shard, idx, sample_shape);
            const auto y = gather_labels(shard, idx);
            const Tensor<Scalar> logits = model.forward(x, true);
            const LossResult<Scalar> loss = softmax_cross_entropy(logits, y);
            weighted += loss.value * static_cast<double>(take);
            model.backward(loss.dlogits);
            opt.step(params, grads);
        }
        final_loss = weighted / static_cast<double>(shard.size());
    }
    ClientUpdateResult out;
    out.sample_count = shard.size();
    out.train_loss = final_loss;
    out.state = model.state_to_flat();
    return out;
}

struct EvalOutcome {
    double loss = 0.0;
    double accuracy = 0.0;
    std::vector<std::size_t> predictions;
};

// Forward-only pass in eval mode over the whole set, batched.
template <typename Scalar>
EvalOutcome evaluate(Model<Scalar>& model, const Dataset<Scalar>& ds, const ArchDescriptor& arch,
                     std::size_t batch_size) {
    if (ds.size() == 0) throw ValueError("evaluate: empty dataset");
    const auto full_shape = batch_shape(arch, 1);
    const std::vector<std::size_t> sample_shape(full_shape.begin() + 1, full_shape.end());
    EvalOutcome out;
    double weighted = 0.0;
    std::size_t correct = 0;
    for (std::size_t at = 0; at < ds.size(); at += batch_size) {
        const std::size_t take = std::min(batch_size, ds.size() - at);
        std::vector<std::size_t> idx(take);
        for (std::size_t i = 0; i < take; ++i) idx[i] = at + i;
        const Tensor<Scalar> x = gather_features(ds, idx, sample_shape);
        const auto y = gather_labels(ds, idx);
        const Tensor<Scalar> logits = model.forward(x, false);
        weighted += softmax_cross_entropy(logits, y).value * static_cast<double>(take);
        const auto pred = argmax_rows(logits);
        for (std::size_t i = 0; i < take; ++i) {
            if (pred[i] == y[i]) ++correct;
            out.predictions.push_back(pred[i]);
        }
    }
    out.loss = weighted / static_cast<double>(ds.size());
    out.accuracy = static_cast<double>(correct) / static_cast<double>(ds.size());
    return out;
}

// ---- client protocol logic -------------------------------------------------------
//
// The full client lifecycle as a frame-in, frames-out state machine, shared
// verbatim by the in-process simulation and the TCP client.

template <typename Scalar>
class ClientLogic {
public:
    ClientLogic(std::uint32_t rank, ArchDescriptor arch, Dataset<Scalar> shard, FedConfig cfg)
        : rank_(rank), arch_(std::move(arch)), shard_(std::move(shard)), cfg_(std::move(cfg)) {
        if (rank_ == 0 || rank_ > cfg_.clients) {
            throw ConfigError("client rank must be in [1, " + std::to_string(cfg_.clients) + "]");
        }
        transmitted_ = count_params(arch_).transmitted;
    }

    Frame join_frame() const {
        return make_join(rank_, cfg_.world_size(), arch_.name, cfg_.wire_dtype);
    }

    std::vector<Frame> on_frame(const Frame& f) {
        if (done_) throw ProtocolError("client " + std::to_string(rank_) + ": frame after shutdown");
        switch (f.type) {
            case MsgType::global_model: {
                if (f.dtype != cfg_.wire_dtype) {
                    throw ProtocolError("client " + std::to_string(rank_) + ": dtype mismatch");
                }
                const auto values = parse_model_payload(f);
                if (values.size() != transmitted_) {
                    throw ProtocolError("client " + std::to_string(rank_) + ": expected " +
                                        std::to_string(transmitted_) + " values, got " +
                                        std::to_string(values.size()));
                }
                const auto t0 = std::chrono::steady_clock::now();
                const ClientUpdateResult r =
                    client_update(arch_, values, shard_, cfg_, f.round, rank_);
                const double wall =
                    std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
                ModelParams p{arch_.name, cfg_.wire_dtype, r.state};
                return {make_local_update(f.round, r.sample_count, p),
                        make_eval_report(f.round, r.sample_count, r.train_loss, wall)};
            }
            case MsgType::shutdown:
                done_ = true;
                return {};
            case MsgType::error:
                throw ProtocolError("client " + std::to_string(rank_) +
                                    ": server error: " + error_text(f));
            default:
                throw ProtocolError("client " + std::to_string(rank_) + ": unexpected " +
                                    msg_type_name(f.type));
        }
    }

    bool done() const { return done_; }
    std::uint32_t rank() const { return rank_; }

private:
    std::uint32_t rank_;
    ArchDescriptor arch_;
    Dataset<Scalar> shard_;
    FedConfig cfg_;
    std::size_t transmitted_ = 0;
    bool done_ = false;
};

// ---- in-process cohort ------------------------------------------------------------

// Runs every client inline. Frames still pass through encode/decode in both
// directions and through the traffic meter, so the byte stream is exactly
// what the socket transport would carry.
template <typename Scalar>
class SimulatedCohort : public Cohort {
public:
    SimulatedCohort(const FedConfig& cfg, const ArchDescriptor& arch,
                    std::vector<Dataset<Scalar>> shards)
        : arch_name_(arch.name) {
        cfg.validate();
        if (shards.size() != cfg.clients) {
            throw ConfigError("cohort: " + std::to_string(shards.size()) + " shards for " +
                              std::to_string(cfg.clients) + " clients");
        }
        for (std::size_t i = 0; i < shards.size(); ++i) {
            channels_.push_back(std::make_unique<SimChannel>(
                *this, static_cast<std::uint32_t>(i + 1), arch, std::move(shards[i]), cfg));
        }
        // Join handshake: decode and validate each client's JOIN before
        // counting its bytes.
        for (auto& ch : channels_) {
            const auto bytes = encode_frame(ch->logic.join_frame());
            const Frame f = decode_frame(bytes);
            const JoinInfo j = parse_join(f);
            if (j.world_size != cfg.world_size()) {
                throw ProtocolError("join: world size " + std::to_string(j.world_size) +
                                    ", expected " + std::to_string(cfg.world_size()));
            }
            if (j.arch_name != arch_name_) {
                throw ProtocolError("join: arch '" + j.arch_name + "', expected '" + arch_name_ +
                                    "'");
            }
            meter_.record(Direction::to_server, 0, bytes.size());
        }
    }

    std::size_t num_clients() const override { return channels_.size(); }
    ClientChannel& client(std::size_t index) override { return *channels_.at(index); }
    const TrafficMeter& meter() const override { return meter_; }

    void close() override {
        for (auto& ch : channels_) {
            if (!ch->logic.done()) ch->send(make_shutdown());
        }
    }

private:
    struct SimChannel : ClientChannel {
        SimChannel(SimulatedCohort& owner, std::uint32_t rank, const ArchDescriptor& arch,
                   Dataset<Scalar> shard, const FedConfig& cfg)
            : cohort(owner), logic(rank, arch, std::move(shard), cfg) {}

        std::uint32_t rank() const override { return logic.rank(); }

        void send(const Frame& f) override {
            const auto bytes = encode_frame(f);
            const Frame delivered = decode_frame(bytes);
            cohort.meter_.record(Direction::to_clients, delivered.round, bytes.size());
            for (const Frame& reply : logic.on_frame(delivered)) {
                inbox.push_back(encode_frame(reply));
            }
        }

        Frame recv() override {
            if (inbox.empty()) {
                throw ProtocolError("client " + std::to_string(logic.rank()) + ": nothing to read");
            }
            const auto bytes = std::move(inbox.front());
            inbox.pop_front();
            const Frame f = decode_frame(bytes);
            cohort.meter_.record(Direction::to_server, f.round, bytes.size());
            return f;
        }

        SimulatedCohort& cohort;
        ClientLogic<Scalar> logic;
        std::deque<std::vector<std::uint8_t>> inbox;
    };

    std::string arch_name_;
    std::vector<std::unique_ptr<SimChannel>> channels_;
    TrafficMeter meter_;
};

// ---- server loop -------------------------------------------------------------------

struct RoundRecord {
    std::uint32_t round = 0;
    std::size_t participants = 0;
    double train_loss = 0.0;
    double val_loss = 0.0;
    double val_accuracy = 0.0;
    std::uint64_t bytes_to_clients = 0;
    std::uint64_t bytes_to_server = 0;
    double wall_seconds = 0.0; // mean client wall time this round
};

struct FederationResult {
    std::vector<RoundRecord> rounds;
    std::vector<double> final_state;
    double test_loss = 0.0;
    double test_accuracy = 0.0;
    std::vector<std::size_t> test_predictions;
    std::vector<std::size_t> test_labels;
    TrafficTotals traffic;
};

// Federated averaging over an abstract cohort: initialize the global state,
// then every round send it to the sampled clients, collect their updates and
// reports, aggregate by sample count, and evaluate. Works unchanged over the
// in-process cohort and the socket cohort.
template <typename Scalar>
FederationResult run_server_loop(const FedConfig& cfg, const ArchDescriptor& arch, Cohort& cohort,
                                 const Dataset<Scalar>& val, const Dataset<Scalar>& test) {
    cfg.validate();
    if (cohort.num_clients() != cfg.clients) {
        throw ConfigError("server: cohort has " + std::to_string(cohort.num_clients()) +
                          " clients, config says " + std::to_string(cfg.clients));
    }

    Model<Scalar> global = build_model<Scalar>(arch);
    {
        Rng rng(derive_seed(cfg.seed, {seed_tag::init}));
        global.init_params(rng);
    }
    std::vector<double> state = global.state_to_flat();
    const std::size_t m = num_participants(cfg.clients, cfg.participation);

    FederationResult out;
    for (std::uint32_t t = 1; t <= cfg.rounds; ++t) {
        const auto sampled = sample_clients(cfg.clients, m, cfg.seed, t);
        const ModelParams broadcast{arch.name, cfg.wire_dtype, state};
        for (const std::uint32_t rank : sampled) {
            cohort.client(rank - 1).send(make_global_model(t, broadcast));
        }
        std::vector<ClientResult> results;
        double weighted_loss = 0.0, wall_sum = 0.0;
        std::uint64_t total_samples = 0;
        for (const std::uint32_t rank : sampled) {
            ClientChannel& ch = cohort.client(rank - 1);
            const Frame update = ch.recv();
            if (update.type != MsgType::local_update || update.round != t) {
                if (update.type == MsgType::error) {
                    throw ProtocolError("client " + std::to_string(rank) + ": " +
                                        error_text(update));
                }
                throw ProtocolError("client " + std::to_string(rank) + ": expected LOCAL_UPDATE " +
                                    "for round " + std::to_string(t));
            }
            ClientResult r;
            r.client_id = rank;
            r.sample_count = update.sample_count;
            r.state = parse_model_payload(update);
            if (r.state.size() != state.size()) {
                throw ProtocolError("client " + std::to_string(rank) + ": state size mismatch");
            }
            const Frame report = ch.recv();
            if (report.type != MsgType::eval_report || report.round != t) {
                throw ProtocolError("client " + std::to_string(rank) + ": expected EVAL_REPORT " +
                                    "for round " + std::to_string(t));
            }
            const EvalReport er = parse_eval_report(report);
            weighted_loss += er.loss * static_cast<double>(r.sample_count);
            wall_sum += er.wall_seconds;
            total_samples += r.sample_count;
            results.push_back(std::move(r));
        }
        state = aggregate(std::move(results));

        global.load_state_flat(state);
        const EvalOutcome v = evaluate(global, val, arch, cfg.batch_size);
        const TrafficTotals rt = cohort.meter().round_totals(t);
        RoundRecord rec;
        rec.round = t;
        rec.participants = m;
        rec.train_loss = total_samples ? weighted_loss / static_cast<double>(total_samples) : 0.0;
        rec.val_loss = v.loss;
        rec.val_accuracy = v.accuracy;
        rec.bytes_to_clients = rt.to_clients;
        rec.bytes_to_server = rt.to_server;
        rec.wall_seconds = sampled.empty() ? 0.0 : wall_sum / static_cast<double>(sampled.size());
        out.rounds.push_back(rec);
    }

    cohort.close();
    global.load_state_flat(state);
    const EvalOutcome t = evaluate(global, test, arch, cfg.batch_size);
    out.final_state = std::move(state);
    out.test_loss = t.loss;
    out.test_accuracy = t.accuracy;
    out.test_predictions = t.predictions;
    out.test_labels = test.labels;
    out.traffic = cohort.meter().totals();
    return out;
}

// Convenience entry: partition nothing, just wire the shards into an
// in-process cohort and run.
template <typename Scalar>
FederationResult run_federation(const FedConfig& cfg, const ArchDescriptor& arch,
                                std::vector<Dataset<Scalar>> shards, const Dataset<Scalar>& val,
                                const Dataset<Scalar>& test) {
    SimulatedCohort<Scalar> cohort(cfg, arch, std::move(shards));
    return run_server_loop<Scalar>(cfg, arch, cohort, val, test);
}

} // namespace fedsim
