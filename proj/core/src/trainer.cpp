#include "wsnopt/trainer.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <exception>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <numeric>
#include <stdexcept>
#include <thread>

#include "wsnopt/instance_io.hpp"
#include "wsnopt/rng.hpp"

namespace fs = std::filesystem;

namespace wsnopt {

void TrainConfig::validate() const {
    if (iterations < 1) throw std::invalid_argument("TrainConfig: iterations must be >= 1");
    if (episodes_per_iter < 1) throw std::invalid_argument("TrainConfig: episodes_per_iter must be >= 1");
    if (sims_per_state < 1) throw std::invalid_argument("TrainConfig: sims_per_state must be >= 1");
    if (minibatch < 1) throw std::invalid_argument("TrainConfig: minibatch must be >= 1");
    if (!(learning_rate > 0.0)) throw std::invalid_argument("TrainConfig: learning_rate must be > 0");
    if (!(c_puct > 0.0)) throw std::invalid_argument("TrainConfig: c_puct must be > 0");
    if (replay_capacity < kUnboundedReplay) throw std::invalid_argument("TrainConfig: bad replay_capacity");
    if (eval_realizations < 1) throw std::invalid_argument("TrainConfig: eval_realizations must be >= 1");
    if (threads < 1) throw std::invalid_argument("TrainConfig: threads must be >= 1");
    if (dirichlet_eps < 0.0 || dirichlet_eps > 1.0) throw std::invalid_argument("TrainConfig: bad dirichlet_eps");
}

ReplayBuffer::ReplayBuffer(int64_t capacity) : cap_(capacity) {
    if (cap_ < kUnboundedReplay || cap_ == 0) throw std::invalid_argument("ReplayBuffer: bad capacity");
}

void ReplayBuffer::push(EpisodeSample s) {
    buf_.push_back(std::move(s));
    if (cap_ != kUnboundedReplay)
        while (static_cast<int64_t>(buf_.size()) > cap_) buf_.pop_front();
}

namespace {

int sample_index(const std::vector<double>& dist, Rng& rng) {
    const double u = rng.uniform_real();
    double c = 0.0;
    int last = -1;
    for (size_t i = 0; i < dist.size(); ++i) {
        if (dist[i] <= 0.0) continue;
        last = static_cast<int>(i);
        c += dist[i];
        if (u < c) return last;
    }
    if (last < 0) throw std::logic_error("sample_index: empty distribution");
    return last;
}

int argmax_index(const std::vector<double>& v) {
    int best = -1;
    for (size_t i = 0; i < v.size(); ++i)
        if (v[i] > 0.0 && (best < 0 || v[i] > v[static_cast<size_t>(best)])) best = static_cast<int>(i);
    if (best < 0) throw std::logic_error("argmax_index: empty distribution");
    return best;
}

}  // namespace

EpisodeResult run_episode(const NetworkSpec& spec, const PolicyValueNet& net, const RewardScale& scale,
                          const TrainConfig& cfg, uint64_t seed) {
    MctsConfig mc;
    mc.c_puct = cfg.c_puct;
    mc.dirichlet_eps = cfg.dirichlet_eps;
    Mcts mcts(net, scale, mc, derive_seed(seed, "tree"), cfg.encode_mode);
    Rng commit_rng(derive_seed(seed, "commit"));

    EpisodeResult out;
    TopologyState state = initial_state(spec);
    while (!state.is_terminal()) {
        const std::vector<double> dist = mcts.run_simulations(state, cfg.sims_per_state);
        EpisodeSample s;
        s.encoded_state = encode_state(state, cfg.encode_mode);
        s.valid_mask = valid_action_mask(state);
        s.target_policy = dist;
        out.samples.push_back(std::move(s));
        const int a = sample_index(dist, commit_rng);
        if (!cfg.reuse_tree) mcts.clear();
        state = apply(state, action_from_index(a, state.node_count()));
    }
    out.reward = terminal_reward(state, scale);
    for (auto& s : out.samples) s.target_value = out.reward;
    out.topology = state.to_topology();
    return out;
}

EvalResult evaluate(const NetworkSpec& spec, const PolicyValueNet& net, int n_realizations, EvalMode mode,
                    uint64_t seed, EncodeMode encode_mode, LoadsMode loads_mode) {
    if (net.config().n != spec.node_count())
        throw std::invalid_argument("evaluate: net is bound to a different node count");
    if (encode_channels(encode_mode) != net.config().channels)
        throw std::invalid_argument("evaluate: encode mode does not match the net");
    if (n_realizations < 1) throw std::invalid_argument("evaluate: n_realizations must be >= 1");

    const int count = mode == EvalMode::Greedy ? 1 : n_realizations;
    EvalResult out;
    double sum = 0.0, sum_sq = 0.0;
    int64_t best = -1;
    for (int r = 0; r < count; ++r) {
        Rng rng(derive_seed(seed, "eval.real", static_cast<uint64_t>(r)));
        TopologyState state = initial_state(spec);
        while (!state.is_terminal()) {
            const auto mask = valid_action_mask(state);
            const auto [policy, value] = net.forward(encode_state(state, encode_mode), mask);
            (void)value;
            const int a = mode == EvalMode::Greedy ? argmax_index(policy) : sample_index(policy, rng);
            state = apply(state, action_from_index(a, state.node_count()));
        }
        Topology topo = state.to_topology();
        const int64_t rounds = lifetime_deterministic(spec, topo, loads_mode).rounds;
        sum += static_cast<double>(rounds);
        sum_sq += static_cast<double>(rounds) * static_cast<double>(rounds);
        if (rounds > best) {
            best = rounds;
            out.best_topology = topo;
        }
        out.topologies.push_back(std::move(topo));
    }
    out.mean_lifetime = sum / count;
    const double var = std::max(0.0, sum_sq / count - out.mean_lifetime * out.mean_lifetime);
    out.std_lifetime = std::sqrt(var);
    out.best_lifetime = best;
    return out;
}

NetworkSpec apply_network_change(const NetworkSpec& spec, const NetworkChange& change) {
    spec.validate();
    if (change.nodes.empty()) throw std::invalid_argument("network change: no nodes listed");
    NetworkSpec out = spec;
    if (change.kind == NetworkChange::Kind::Remove) {
        for (NodeId id : change.nodes) {
            if (id == kGateway) throw std::invalid_argument("network change: refusing to remove the gateway");
            if (id < 0 || id >= out.node_count())
                throw std::invalid_argument("network change: node id out of range");
            if (!out.is_active(id))
                throw std::invalid_argument("network change: node " + std::to_string(id) + " is already inactive");
            out.active[static_cast<size_t>(id)] = 0;
        }
        if (out.active_sensor_count() < 1)
            throw std::invalid_argument("network change: refusing to remove the last active sensor");
    } else {
        if (!change.positions.empty() && change.positions.size() != change.nodes.size())
            throw std::invalid_argument("network change: positions count mismatch");
        if (!change.energies.empty() && change.energies.size() != change.nodes.size())
            throw std::invalid_argument("network change: energies count mismatch");
        for (size_t i = 0; i < change.nodes.size(); ++i) {
            const NodeId id = change.nodes[i];
            if (id < 0 || id >= out.node_count())
                throw std::invalid_argument(
                    "network change: node id beyond padded capacity; regenerate the instance with more slots");
            if (out.is_active(id))
                throw std::invalid_argument("network change: node " + std::to_string(id) + " is already active");
            out.active[static_cast<size_t>(id)] = 1;
            if (!change.positions.empty()) out.positions[static_cast<size_t>(id)] = change.positions[i];
            if (!change.energies.empty()) out.initial_energy[static_cast<size_t>(id)] = change.energies[i];
        }
    }
    out.validate();
    return out;
}

Trainer::Trainer(const NetworkSpec& spec, const TrainConfig& cfg)
    : Trainer(spec, cfg, std::nullopt, 0, {}, ReplayBuffer(kUnboundedReplay)) {}

Trainer::Trainer(NetworkSpec spec, TrainConfig cfg, std::optional<LoadedNet> loaded, int completed,
                 std::vector<NetworkChange> changes, ReplayBuffer buffer)
    : spec_(std::move(spec)), cfg_(std::move(cfg)), buffer_(kUnboundedReplay), changes_(std::move(changes)),
      completed_(completed) {
    cfg_.validate();
    spec_.validate();
    cfg_.net.n = spec_.node_count();
    cfg_.net.channels = encode_channels(cfg_.encode_mode);

    const bool fresh = !loaded.has_value();
    if (fresh) {
        cfg_.net.weight_init_seed = derive_seed(cfg_.seed, "init");
        net_.emplace(cfg_.net);
    } else {
        if (loaded->spec_fingerprint != spec_fingerprint(spec_))
            throw std::runtime_error("checkpoint: net was trained on a different instance");
        if (loaded->net.config().n != cfg_.net.n || loaded->net.config().channels != cfg_.net.channels)
            throw std::runtime_error("checkpoint: net shape does not match the instance");
        cfg_.net = loaded->net.config();
        net_.emplace(std::move(loaded->net));
    }

    refresh_derived();
    for (size_t i = 0; i < buffer.size(); ++i) buffer_.push(buffer[i]);

    if (!cfg_.out_dir.empty()) {
        fs::create_directories(checkpoint_dir(cfg_.out_dir));
        if (fresh) {
            std::ofstream metrics(cfg_.out_dir + "/metrics.csv", std::ios::trunc);
            metrics << "iteration,mean_lifetime,std_lifetime,best_lifetime,loss,episodes,sims,wall_seconds,"
                       "star_lifetime,random_mean_lifetime,mst_lifetime,change_event\n";
            save_checkpoint();
        }
    }
}

void Trainer::refresh_derived() {
    scale_ = make_reward_scale(spec_, cfg_.loads_mode);

    baselines_.star = lifetime_deterministic(spec_, star_topology(spec_), cfg_.loads_mode).rounds;
    baselines_.mst = lifetime_deterministic(spec_, mst_topology(spec_), cfg_.loads_mode).rounds;
    double acc = 0.0;
    constexpr int kRandomBaselineCount = 100;
    for (int i = 0; i < kRandomBaselineCount; ++i) {
        const Topology t = random_topology(spec_, derive_seed(cfg_.seed, "baseline.random", static_cast<uint64_t>(i)));
        acc += static_cast<double>(lifetime_deterministic(spec_, t, cfg_.loads_mode).rounds);
    }
    baselines_.random_mean = acc / kRandomBaselineCount;

    const int horizon = spec_.active_sensor_count();
    if (cfg_.replay_capacity == 0) {
        effective_capacity_ = static_cast<int64_t>(std::max(20, cfg_.episodes_per_iter)) * horizon;
    } else {
        effective_capacity_ = cfg_.replay_capacity;
        if (effective_capacity_ != kUnboundedReplay &&
            effective_capacity_ < static_cast<int64_t>(cfg_.episodes_per_iter) * horizon)
            throw std::invalid_argument("TrainConfig: replay_capacity below one iteration's sample count");
    }
    ReplayBuffer rebuilt(effective_capacity_);
    for (size_t i = 0; i < buffer_.size(); ++i) rebuilt.push(buffer_[i]);
    buffer_ = std::move(rebuilt);
}

void Trainer::add_change(const NetworkChange& change) {
    if (change.iteration <= completed_)
        throw std::invalid_argument("add_change: iteration " + std::to_string(change.iteration) + " already ran");
    changes_.push_back(change);
}

void Trainer::apply_changes_for(int it, IterationReport& report) {
    for (const auto& ch : changes_) {
        if (ch.iteration != it) continue;
        spec_ = apply_network_change(spec_, ch);
        buffer_.clear();
        refresh_derived();
        report.change_event = true;
    }
}

std::vector<IterationReport> Trainer::run(int max_new) {
    int target = cfg_.iterations;
    if (max_new >= 0) target = std::min(target, completed_ + max_new);
    std::vector<IterationReport> out;
    for (int it = completed_ + 1; it <= target; ++it) {
        IterationReport r = run_iteration(it);
        completed_ = it;
        save_checkpoint();
        append_metrics(r);
        if (hook_) hook_(r);
        out.push_back(std::move(r));
    }
    return out;
}

IterationReport Trainer::run_iteration(int it) {
    IterationReport r;
    r.iteration = it;
    apply_changes_for(it, r);

    const auto t0 = std::chrono::steady_clock::now();
    const uint64_t iter_seed = derive_seed(cfg_.seed, "iter", static_cast<uint64_t>(it));

    const int n_eps = cfg_.episodes_per_iter;
    std::vector<EpisodeResult> episodes(static_cast<size_t>(n_eps));
    if (cfg_.threads > 1 && n_eps > 1) {
        std::atomic<int> next{0};
        std::exception_ptr first_error;
        std::mutex error_mu;
        auto worker = [&] {
            for (;;) {
                const int e = next.fetch_add(1);
                if (e >= n_eps) return;
                try {
                    episodes[static_cast<size_t>(e)] = run_episode(
                        spec_, *net_, scale_, cfg_, derive_seed(iter_seed, "episode", static_cast<uint64_t>(e)));
                } catch (...) {
                    std::lock_guard<std::mutex> lk(error_mu);
                    if (!first_error) first_error = std::current_exception();
                    return;
                }
            }
        };
        std::vector<std::thread> pool;
        const int nt = std::min(cfg_.threads, n_eps);
        pool.reserve(static_cast<size_t>(nt));
        for (int t = 0; t < nt; ++t) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
        if (first_error) std::rethrow_exception(first_error);
    } else {
        for (int e = 0; e < n_eps; ++e)
            episodes[static_cast<size_t>(e)] =
                run_episode(spec_, *net_, scale_, cfg_, derive_seed(iter_seed, "episode", static_cast<uint64_t>(e)));
    }
    for (auto& ep : episodes) {
        r.episode_rewards.push_back(ep.reward);
        for (auto& s : ep.samples) buffer_.push(std::move(s));
    }

    std::vector<size_t> order(buffer_.size());
    std::iota(order.begin(), order.end(), size_t{0});
    Rng shuffle_rng(derive_seed(iter_seed, "shuffle"));
    shuffle_rng.shuffle(order);
    double loss_sum = 0.0;
    int batches = 0;
    for (size_t at = 0; at < order.size(); at += static_cast<size_t>(cfg_.minibatch)) {
        const size_t end = std::min(order.size(), at + static_cast<size_t>(cfg_.minibatch));
        std::vector<EpisodeSample> batch;
        batch.reserve(end - at);
        for (size_t i = at; i < end; ++i) batch.push_back(buffer_[order[i]]);
        loss_sum += net_->train_step(batch, cfg_.learning_rate);
        ++batches;
    }
    r.loss = batches > 0 ? loss_sum / batches : 0.0;

    const EvalResult ev = evaluate(spec_, *net_, cfg_.eval_realizations, EvalMode::Sample,
                                   derive_seed(iter_seed, "eval"), cfg_.encode_mode, cfg_.loads_mode);
    r.mean_lifetime = ev.mean_lifetime;
    r.std_lifetime = ev.std_lifetime;
    r.best_lifetime = ev.best_lifetime;
    const EvalResult greedy = evaluate(spec_, *net_, 1, EvalMode::Greedy, derive_seed(iter_seed, "eval.greedy"),
                                       cfg_.encode_mode, cfg_.loads_mode);
    r.greedy_lifetime = greedy.best_lifetime;

    r.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return r;
}

EvalResult Trainer::evaluate_now(EvalMode mode, int n_realizations, uint64_t seed) const {
    return evaluate(spec_, *net_, n_realizations, mode, seed, cfg_.encode_mode, cfg_.loads_mode);
}

namespace {

constexpr char kCkptMagic[8] = {'W', 'S', 'N', 'C', 'K', 'P', 'T', '1'};

template <typename T>
void put(std::ofstream& out, const T& v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <typename T>
void get(std::ifstream& in, T& v) {
    in.read(reinterpret_cast<char*>(&v), sizeof v);
}

void put_string(std::ofstream& out, const std::string& s) {
    put(out, static_cast<uint64_t>(s.size()));
    out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string get_string(std::ifstream& in) {
    uint64_t len = 0;
    get(in, len);
    std::string s(len, '\0');
    in.read(s.data(), static_cast<std::streamsize>(len));
    return s;
}

void put_doubles(std::ofstream& out, const std::vector<double>& v) {
    put(out, static_cast<uint64_t>(v.size()));
    out.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(double)));
}

std::vector<double> get_doubles(std::ifstream& in) {
    uint64_t len = 0;
    get(in, len);
    std::vector<double> v(len);
    in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(len * sizeof(double)));
    return v;
}

std::string ckpt_base(const std::string& dir, int iteration) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "/ckpt_%04d", iteration);
    return Trainer::checkpoint_dir(dir) + buf;
}

}  // namespace

void Trainer::save_checkpoint() const {
    if (cfg_.out_dir.empty()) return;
    const std::string base = ckpt_base(cfg_.out_dir, completed_);
    net_->save(base + ".net", spec_fingerprint(spec_));

    std::ofstream out(base + ".state", std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write checkpoint state: " + base + ".state");
    out.write(kCkptMagic, sizeof kCkptMagic);
    put(out, uint32_t{1});
    put(out, int32_t{completed_});
    put(out, int32_t{cfg_.iterations});
    put(out, int32_t{cfg_.episodes_per_iter});
    put(out, int32_t{cfg_.sims_per_state});
    put(out, int32_t{cfg_.minibatch});
    put(out, cfg_.learning_rate);
    put(out, cfg_.c_puct);
    put(out, cfg_.replay_capacity);
    put(out, int32_t{cfg_.eval_realizations});
    put(out, cfg_.seed);
    put(out, uint8_t{cfg_.reuse_tree ? uint8_t{1} : uint8_t{0}});
    put(out, uint8_t{cfg_.encode_mode == EncodeMode::Full ? uint8_t{0} : uint8_t{1}});
    put(out, uint8_t{cfg_.loads_mode == LoadsMode::Subtree ? uint8_t{0} : uint8_t{1}});
    put(out, cfg_.dirichlet_eps);
    put(out, int32_t{cfg_.threads});
    put_string(out, serialize_instance(spec_));

    put(out, static_cast<uint32_t>(changes_.size()));
    for (const auto& ch : changes_) {
        put(out, int32_t{ch.iteration});
        put(out, uint8_t{ch.kind == NetworkChange::Kind::Remove ? uint8_t{0} : uint8_t{1}});
        put(out, static_cast<uint32_t>(ch.nodes.size()));
        for (NodeId id : ch.nodes) put(out, int32_t{id});
        put(out, static_cast<uint32_t>(ch.positions.size()));
        for (const Point& p : ch.positions) {
            put(out, p.x);
            put(out, p.y);
        }
        put(out, static_cast<uint32_t>(ch.energies.size()));
        for (double e : ch.energies) put(out, e);
    }

    put(out, static_cast<uint64_t>(buffer_.size()));
    for (size_t i = 0; i < buffer_.size(); ++i) {
        const EpisodeSample& s = buffer_[i];
        put_doubles(out, s.encoded_state);
        put(out, static_cast<uint64_t>(s.valid_mask.size()));
        out.write(reinterpret_cast<const char*>(s.valid_mask.data()),
                  static_cast<std::streamsize>(s.valid_mask.size()));
        put_doubles(out, s.target_policy);
        put(out, s.target_value);
    }
    if (!out) throw std::runtime_error("checkpoint state write failed: " + base + ".state");
}

Trainer Trainer::from_checkpoint(const std::string& dir, int iteration) {
    if (iteration < 0) {
        int latest = -1;
        const std::string cdir = checkpoint_dir(dir);
        if (!fs::is_directory(cdir)) throw std::runtime_error("no checkpoints directory in " + dir);
        for (const auto& entry : fs::directory_iterator(cdir)) {
            const std::string name = entry.path().filename().string();
            int it = -1;
            if (std::sscanf(name.c_str(), "ckpt_%d.state", &it) == 1) latest = std::max(latest, it);
        }
        if (latest < 0) throw std::runtime_error("no checkpoints found in " + dir);
        iteration = latest;
    }
    const std::string base = ckpt_base(dir, iteration);

    std::ifstream in(base + ".state", std::ios::binary);
    if (!in) throw std::runtime_error("cannot open checkpoint state: " + base + ".state");
    char magic[8];
    in.read(magic, sizeof magic);
    if (!in || std::memcmp(magic, kCkptMagic, sizeof kCkptMagic) != 0)
        throw std::runtime_error("checkpoint state " + base + ".state: bad magic");
    uint32_t version = 0;
    get(in, version);
    if (version != 1) throw std::runtime_error("checkpoint state: unsupported version");

    int32_t completed = 0;
    get(in, completed);
    TrainConfig cfg;
    int32_t i32 = 0;
    uint8_t u8 = 0;
    get(in, i32), cfg.iterations = i32;
    get(in, i32), cfg.episodes_per_iter = i32;
    get(in, i32), cfg.sims_per_state = i32;
    get(in, i32), cfg.minibatch = i32;
    get(in, cfg.learning_rate);
    get(in, cfg.c_puct);
    get(in, cfg.replay_capacity);
    get(in, i32), cfg.eval_realizations = i32;
    get(in, cfg.seed);
    get(in, u8), cfg.reuse_tree = u8 != 0;
    get(in, u8), cfg.encode_mode = u8 == 0 ? EncodeMode::Full : EncodeMode::BareAdjacency;
    get(in, u8), cfg.loads_mode = u8 == 0 ? LoadsMode::Subtree : LoadsMode::Literal;
    get(in, cfg.dirichlet_eps);
    get(in, i32), cfg.threads = i32;
    cfg.out_dir = dir;
    NetworkSpec spec = parse_instance(get_string(in));

    uint32_t n_changes = 0;
    get(in, n_changes);
    std::vector<NetworkChange> changes(n_changes);
    for (auto& ch : changes) {
        get(in, i32), ch.iteration = i32;
        get(in, u8), ch.kind = u8 == 0 ? NetworkChange::Kind::Remove : NetworkChange::Kind::Add;
        uint32_t n = 0;
        get(in, n);
        ch.nodes.resize(n);
        for (auto& id : ch.nodes) {
            get(in, i32);
            id = i32;
        }
        get(in, n);
        ch.positions.resize(n);
        for (auto& p : ch.positions) {
            get(in, p.x);
            get(in, p.y);
        }
        get(in, n);
        ch.energies.resize(n);
        for (auto& e : ch.energies) get(in, e);
    }

    uint64_t n_samples = 0;
    get(in, n_samples);
    ReplayBuffer buffer(kUnboundedReplay);
    for (uint64_t i = 0; i < n_samples; ++i) {
        EpisodeSample s;
        s.encoded_state = get_doubles(in);
        uint64_t mask_len = 0;
        get(in, mask_len);
        s.valid_mask.resize(mask_len);
        in.read(reinterpret_cast<char*>(s.valid_mask.data()), static_cast<std::streamsize>(mask_len));
        s.target_policy = get_doubles(in);
        get(in, s.target_value);
        buffer.push(std::move(s));
    }
    if (!in) throw std::runtime_error("checkpoint state " + base + ".state: truncated");

    LoadedNet loaded = PolicyValueNet::load(base + ".net");
    return Trainer(std::move(spec), std::move(cfg), std::move(loaded), completed, std::move(changes),
                   std::move(buffer));
}

void Trainer::append_metrics(const IterationReport& r) const {
    if (cfg_.out_dir.empty()) return;
    std::ofstream out(cfg_.out_dir + "/metrics.csv", std::ios::app);
    if (!out) throw std::runtime_error("cannot append metrics.csv in " + cfg_.out_dir);
    char line[512];
    std::snprintf(line, sizeof line, "%d,%.12g,%.12g,%lld,%.12g,%d,%d,%.6f,%lld,%.12g,%lld,%d\n", r.iteration,
                  r.mean_lifetime, r.std_lifetime, static_cast<long long>(r.best_lifetime), r.loss,
                  cfg_.episodes_per_iter, cfg_.sims_per_state, r.wall_seconds,
                  static_cast<long long>(baselines_.star), baselines_.random_mean,
                  static_cast<long long>(baselines_.mst), r.change_event ? 1 : 0);
    out << line;
}

}  // namespace wsnopt
