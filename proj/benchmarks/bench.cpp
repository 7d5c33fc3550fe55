#include <benchmark/benchmark.h>

#include "wsnopt/baselines.hpp"
#include "wsnopt/harness.hpp"
#include "wsnopt/mcts.hpp"
#include "wsnopt/mdp.hpp"
#include "wsnopt/net.hpp"
#include "wsnopt/network.hpp"
#include "wsnopt/rng.hpp"
#include "wsnopt/trainer.hpp"

using namespace wsnopt;

namespace {

NetworkSpec instance_of(int nodes) {
    GenParams p;
    p.nodes = nodes;
    p.seed = 42;
    return generate_instance(p);
}

PolicyValueNet net_of(const NetworkSpec& spec) {
    NetConfig nc;
    nc.n = spec.node_count();
    return PolicyValueNet(nc);
}

}  // namespace

static void BM_LifetimeDeterministic(benchmark::State& state) {
    const NetworkSpec spec = instance_of(static_cast<int>(state.range(0)));
    const Topology t = mst_topology(spec);
    for (auto _ : state) benchmark::DoNotOptimize(lifetime_deterministic(spec, t).rounds);
}
BENCHMARK(BM_LifetimeDeterministic)->Arg(8)->Arg(20)->Arg(50);

static void BM_StateEncode(benchmark::State& state) {
    const NetworkSpec spec = instance_of(static_cast<int>(state.range(0)));
    const TopologyState st = initial_state(spec);
    for (auto _ : state) benchmark::DoNotOptimize(encode_state(st, EncodeMode::Full));
}
BENCHMARK(BM_StateEncode)->Arg(8)->Arg(20);

static void BM_NetForward(benchmark::State& state) {
    const NetworkSpec spec = instance_of(static_cast<int>(state.range(0)));
    const PolicyValueNet net = net_of(spec);
    const TopologyState st = initial_state(spec);
    const auto x = encode_state(st, EncodeMode::Full);
    const auto mask = valid_action_mask(st);
    for (auto _ : state) benchmark::DoNotOptimize(net.forward(x, mask));
}
BENCHMARK(BM_NetForward)->Arg(8)->Arg(20);

static void BM_NetTrainStep(benchmark::State& state) {
    const NetworkSpec spec = instance_of(8);
    PolicyValueNet net = net_of(spec);
    const RewardScale scale = make_reward_scale(spec);
    TrainConfig cfg;
    const EpisodeResult ep = run_episode(spec, net, scale, cfg, 7);
    for (auto _ : state) benchmark::DoNotOptimize(net.train_step(ep.samples, 1e-3));
}
BENCHMARK(BM_NetTrainStep);

static void BM_MctsSimulations(benchmark::State& state) {
    const NetworkSpec spec = instance_of(8);
    const PolicyValueNet net = net_of(spec);
    Mcts mcts(net, make_reward_scale(spec), MctsConfig{}, 7);
    const TopologyState root = initial_state(spec);
    for (auto _ : state) {
        mcts.clear();
        benchmark::DoNotOptimize(mcts.run_simulations(root, static_cast<int>(state.range(0))));
    }
}
BENCHMARK(BM_MctsSimulations)->Arg(64)->Arg(256);

static void BM_Episode(benchmark::State& state) {
    const NetworkSpec spec = instance_of(8);
    const PolicyValueNet net = net_of(spec);
    const RewardScale scale = make_reward_scale(spec);
    TrainConfig cfg;
    uint64_t seed = 0;
    for (auto _ : state) benchmark::DoNotOptimize(run_episode(spec, net, scale, cfg, seed++).reward);
}
BENCHMARK(BM_Episode);

static void BM_PruferDecode(benchmark::State& state) {
    const std::vector<int> seq = {3, 1, 4, 1, 5, 0};
    for (auto _ : state) benchmark::DoNotOptimize(prufer_decode(seq));
}
BENCHMARK(BM_PruferDecode);

static void BM_Oracle(benchmark::State& state) {
    const NetworkSpec spec = instance_of(static_cast<int>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(brute_force_optimal(spec).best_lifetime);
}
BENCHMARK(BM_Oracle)->Arg(5)->Arg(6)->Arg(7)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
