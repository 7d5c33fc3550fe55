#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "wsnopt/baselines.hpp"
#include "wsnopt/mcts.hpp"
#include "wsnopt/mdp.hpp"
#include "wsnopt/net.hpp"
#include "wsnopt/network.hpp"

namespace wsnopt {

// Outer training loop: per iteration, collect episodes with MCTS-guided
// construction, push the samples into a replay buffer, make one training pass
// over the buffer, evaluate, checkpoint. A single top-level seed derives
// every sub-seed (per iteration, episode, shuffle, evaluation), so a run is
// fully determined by (spec, config) and resume needs no hidden RNG state.
struct TrainConfig {
    int iterations = 40;
    int episodes_per_iter = 8;
    int sims_per_state = 64;
    int minibatch = 16;
    double learning_rate = 1e-3;
    double c_puct = 1.5;
    // Samples, FIFO eviction. 0 = auto (20 episodes' worth of horizon),
    // kUnboundedReplay = never evict (the literal accumulate-everything loop).
    int64_t replay_capacity = 0;
    int eval_realizations = 100;
    uint64_t seed = 1;

    bool reuse_tree = true;
    EncodeMode encode_mode = EncodeMode::Full;
    LoadsMode loads_mode = LoadsMode::Subtree;
    double dirichlet_eps = 0.0;
    int threads = 1;
    NetConfig net;            // n/channels/weight_init_seed are bound from the spec and seed
    std::string out_dir;      // empty: no checkpoints or metrics files

    void validate() const;
};

inline constexpr int64_t kUnboundedReplay = -1;

class ReplayBuffer {
  public:
    explicit ReplayBuffer(int64_t capacity = kUnboundedReplay);

    void push(EpisodeSample s);
    size_t size() const { return buf_.size(); }
    bool empty() const { return buf_.empty(); }
    const EpisodeSample& operator[](size_t i) const { return buf_[i]; }
    void clear() { buf_.clear(); }
    int64_t capacity() const { return cap_; }

  private:
    std::deque<EpisodeSample> buf_;
    int64_t cap_;
};

struct EpisodeResult {
    std::vector<EpisodeSample> samples;
    double reward = 0.0;
    Topology topology;
};

// One full construction episode: at each state run sims_per_state
// simulations, record (encoding, mask, normalized visit counts), sample the
// committed action from the visit distribution, and at terminal write the
// normalized reward into every sample's target_value.
EpisodeResult run_episode(const NetworkSpec& spec, const PolicyValueNet& net, const RewardScale& scale,
                          const TrainConfig& cfg, uint64_t seed);

enum class EvalMode { Sample, Greedy };

struct EvalResult {
    double mean_lifetime = 0.0;
    double std_lifetime = 0.0;
    int64_t best_lifetime = 0;
    std::vector<Topology> topologies;
    Topology best_topology;
};

// Search-free construction straight from the net's masked policy: Sample
// draws each action from the policy (n_realizations topologies), Greedy takes
// argmax actions (one deterministic topology).
EvalResult evaluate(const NetworkSpec& spec, const PolicyValueNet& net, int n_realizations, EvalMode mode,
                    uint64_t seed, EncodeMode encode_mode = EncodeMode::Full,
                    LoadsMode loads_mode = LoadsMode::Subtree);

// Dynamic topology changes: removal deactivates sensors, addition activates
// currently-inactive slots (optionally repositioning/recharging them). The
// node count is the padded capacity; activating more nodes than exist is
// refused. Net weights are untouched by design.
struct NetworkChange {
    int iteration = 0;  // applied just before this 1-based iteration runs
    enum class Kind { Remove, Add } kind = Kind::Remove;
    std::vector<NodeId> nodes;
    std::vector<Point> positions;    // Add only; empty keeps stored positions
    std::vector<double> energies;    // Add only; empty keeps stored energies
};

NetworkSpec apply_network_change(const NetworkSpec& spec, const NetworkChange& change);

struct IterationReport {
    int iteration = 0;
    double mean_lifetime = 0.0;
    double std_lifetime = 0.0;
    int64_t best_lifetime = 0;
    int64_t greedy_lifetime = 0;
    double loss = 0.0;
    std::vector<double> episode_rewards;
    double wall_seconds = 0.0;
    bool change_event = false;
};

class Trainer {
  public:
    Trainer(const NetworkSpec& spec, const TrainConfig& cfg);

    // Loads checkpoint `iteration` from dir (latest when -1); the change
    // script and replay buffer are restored from the checkpoint itself.
    static Trainer from_checkpoint(const std::string& dir, int iteration = -1);

    // Must be scheduled before the change's iteration has run.
    void add_change(const NetworkChange& change);

    // Runs up to max_new further iterations (all remaining when -1), returns
    // their reports. Safe to call repeatedly.
    std::vector<IterationReport> run(int max_new = -1);

    void set_iteration_hook(std::function<void(const IterationReport&)> hook) { hook_ = std::move(hook); }

    const NetworkSpec& spec() const { return spec_; }
    const TrainConfig& config() const { return cfg_; }
    const PolicyValueNet& net() const { return *net_; }
    const ReplayBuffer& buffer() const { return buffer_; }
    const RewardScale& reward_scale() const { return scale_; }
    int completed_iterations() const { return completed_; }

    EvalResult evaluate_now(EvalMode mode, int n_realizations, uint64_t seed) const;

    static std::string checkpoint_dir(const std::string& out_dir) { return out_dir + "/checkpoints"; }

  private:
    struct Baselines {
        int64_t star = 0;
        double random_mean = 0.0;
        int64_t mst = 0;
    };

    Trainer(NetworkSpec spec, TrainConfig cfg, std::optional<LoadedNet> loaded, int completed,
            std::vector<NetworkChange> changes, ReplayBuffer buffer);

    IterationReport run_iteration(int it);
    void apply_changes_for(int it, IterationReport& report);
    void refresh_derived();
    void save_checkpoint() const;
    void append_metrics(const IterationReport& r) const;

    NetworkSpec spec_;
    TrainConfig cfg_;
    std::optional<PolicyValueNet> net_;
    ReplayBuffer buffer_;
    RewardScale scale_{};
    Baselines baselines_{};
    std::vector<NetworkChange> changes_;
    int completed_ = 0;
    int64_t effective_capacity_ = kUnboundedReplay;
    std::function<void(const IterationReport&)> hook_;
};

}  // namespace wsnopt
