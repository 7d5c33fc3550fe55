// Acceptance gate: ten numbered end-to-end checks, one PASS/FAIL line each.
// Run all with no arguments or a single one with --criterion N. Exits nonzero
// if any executed check fails. All tolerances are pinned here.

#include <cmath>
#include <cstdarg>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "gradcheck.hpp"
#include "test_util.hpp"
#include "wsnopt/baselines.hpp"
#include "wsnopt/harness.hpp"
#include "wsnopt/instance_io.hpp"
#include "wsnopt/mcts.hpp"
#include "wsnopt/mdp.hpp"
#include "wsnopt/net.hpp"
#include "wsnopt/network.hpp"
#include "wsnopt/rng.hpp"
#include "wsnopt/trainer.hpp"

using namespace wsnopt;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, ...) {
    char buf[1024];
    va_list ap;
    va_start(ap, f);
    std::vsnprintf(buf, sizeof buf, f, ap);
    va_end(ap);
    return buf;
}

// 1. Closed-form energy and lifetime values, bit-exact against the formula
//    e = (eps + rho*d^2)*g transcribed with the instance constants.
Outcome criterion_1() {
    const NetworkSpec leaf = testutil::fixed_instance({{1000.0, 0.0}}, 1000, 1000);
    Topology t;
    t.parent = {kNoParent, kGateway};
    const auto loads = compute_loads(leaf, t, {0.0, 1000.0});
    const auto e = compute_round_energy(leaf, t, loads);
    const double e_leaf = (50e-9 + 1e-12 * 1000.0 * 1000.0) * 1000.0;
    const bool leaf_ok = loads[1] == 1000.0 && e[0] == 0.0 && e[1] == e_leaf &&
                         std::abs(e[1] / 1.05e-3 - 1.0) < 1e-15;

    const NetworkSpec one = testutil::fixed_instance({{1000.0, 0.0}}, 500, 1000);
    const LifetimeResult lr = lifetime_deterministic(one, t);
    const double e_mean = (50e-9 + 1e-12 * 1000.0 * 1000.0) * 750.0;
    const bool life_ok = lr.rounds == 1269 && std::abs(lr.continuous * e_mean - 1.0) < 1e-15;

    return {leaf_ok && life_ok,
            fmt("leaf energy %.17g J (want 1.05e-3), lifetime %lld rounds (want 1269)", e[1],
                static_cast<long long>(lr.rounds))};
}

// 2. Exhaustive enumeration emits exactly N^(N-2) trees and its best
//    dominates star, MST, and seeded random topologies on every instance.
Outcome criterion_2() {
    const uint64_t kExpected[3] = {16, 125, 1296};
    int bad_count = 0, dominated = 0;
    for (int i = 0; i < 20; ++i) {
        const int n = 4 + i % 3;
        const NetworkSpec spec = testutil::disc_instance(n, 100 + static_cast<uint64_t>(i));
        const OracleResult orc = brute_force_optimal(spec);
        if (orc.tree_count != kExpected[n - 4]) ++bad_count;
        int64_t rivals = lifetime_deterministic(spec, star_topology(spec)).rounds;
        rivals = std::max(rivals, lifetime_deterministic(spec, mst_topology(spec)).rounds);
        for (uint64_t r = 0; r < 5; ++r)
            rivals = std::max(
                rivals,
                lifetime_deterministic(spec, random_topology(spec, derive_seed(100 + i, "c2", r))).rounds);
        if (orc.best_lifetime < rivals) ++dominated;
    }
    return {bad_count == 0 && dominated == 0,
            fmt("20 instances: %d wrong tree counts, %d beaten by a baseline (want 0/0)", bad_count,
                dominated)};
}

// 3. Baseline ordering on N=20 instances: star below random-mean and MST on
//    at least 9 of 10, MST at or above random-mean on at least 8 of 10.
Outcome criterion_3() {
    int star_low = 0, mst_high = 0;
    for (uint64_t seed = 1; seed <= 10; ++seed) {
        const NetworkSpec spec = testutil::disc_instance(20, seed);
        const BaselineReport b = compute_baselines(spec, seed, 100, LoadsMode::Subtree);
        if (static_cast<double>(b.star) < b.random_mean && b.star < b.mst) ++star_low;
        if (static_cast<double>(b.mst) >= b.random_mean) ++mst_high;
    }
    return {star_low >= 9 && mst_high >= 8,
            fmt("star below random-mean and MST on %d/10 (want >=9), MST >= random-mean on %d/10 "
                "(want >=8)",
                star_low, mst_high)};
}

// 4. Analytic gradients match central finite differences (h=1e-4) within
//    1e-4 relative error for every layer type, 10 random shapes each.
Outcome criterion_4() {
    const double kTol = 1e-4;
    const struct {
        const char* name;
        double worst;
    } checks[] = {
        {"conv", gradcheck::check_conv(10, 11)},
        {"batchnorm", gradcheck::check_batchnorm(10, 22)},
        {"dense", gradcheck::check_dense(10, 33)},
        {"relu", gradcheck::check_relu(10, 44)},
        {"masked_softmax", gradcheck::check_masked_softmax(10, 55)},
        {"residual_block", gradcheck::check_residual_block(10, 66)},
    };
    bool ok = true;
    std::string detail;
    for (const auto& c : checks) {
        if (!(c.worst < kTol)) ok = false;
        detail += fmt("%s%s %.2e", detail.empty() ? "" : ", ", c.name, c.worst);
    }
    return {ok, detail + fmt(" (all want < %g)", kTol)};
}

// 5. Search bookkeeping after 1000 simulations: every expanded node holds
//    m_s = 1 + sum(m_sa), the root's children total 999 visits, Q finite.
Outcome criterion_5() {
    const NetworkSpec spec = testutil::disc_instance(5, 3);
    NetConfig nc;
    nc.n = spec.node_count();
    const PolicyValueNet net(nc);
    Mcts mcts(net, make_reward_scale(spec), MctsConfig{}, derive_seed(3, "accept"));
    const TopologyState root = initial_state(spec);
    mcts.run_simulations(root, 1000);

    int bad_counts = 0, bad_q = 0;
    for (const auto& [key, node] : mcts.nodes()) {
        if (!node.expanded) continue;
        int total = 0;
        for (size_t a = 0; a < node.m_sa.size(); ++a) {
            total += node.m_sa[a];
            if (!std::isfinite(node.q[a])) ++bad_q;
        }
        if (node.m_s != 1 + total) ++bad_counts;
    }
    const SearchNode* r = mcts.find(root);
    int root_total = 0;
    for (int v : r->m_sa) root_total += v;
    return {bad_counts == 0 && bad_q == 0 && root_total == 999,
            fmt("%zu nodes, %d visit-count violations, %d non-finite Q, root visits %d (want 999)",
                mcts.nodes().size(), bad_counts, bad_q, root_total)};
}

// 6. Uniform-prior search alone (zero-weight net, 4096 sims per move,
//    most-visited action committed) reaches 95% of the exact optimum on at
//    least 4 of 5 instances.
Outcome criterion_6() {
    int passed = 0;
    std::string ratios;
    for (uint64_t seed = 1; seed <= 5; ++seed) {
        const NetworkSpec spec = testutil::disc_instance(5, seed);
        NetConfig nc;
        nc.n = spec.node_count();
        PolicyValueNet net(nc);
        net.zero_weights();
        Mcts mcts(net, make_reward_scale(spec), MctsConfig{}, derive_seed(seed, "probe"));
        TopologyState st = initial_state(spec);
        while (!st.is_terminal()) {
            const auto dist = mcts.run_simulations(st, 4096);
            int best = 0;
            for (size_t i = 1; i < dist.size(); ++i)
                if (dist[i] > dist[best]) best = static_cast<int>(i);
            st = apply(st, action_from_index(best, st.node_count()));
        }
        const int64_t got = lifetime_deterministic(spec, st.to_topology()).rounds;
        const int64_t opt = brute_force_optimal(spec).best_lifetime;
        const double ratio = static_cast<double>(got) / static_cast<double>(opt);
        if (ratio >= 0.95) ++passed;
        ratios += fmt("%s%.3f", ratios.empty() ? "" : " ", ratio);
    }
    return {passed >= 4, fmt("search/optimum ratios %s, %d/5 at >=0.95 (want >=4)", ratios.c_str(), passed)};
}

// Criteria 7 and 8 share three seeded N=8 training runs (40 iterations,
// 8 episodes, 64 simulations, defaults otherwise). Cached per process.
constexpr uint64_t kN8Seeds[3] = {19, 135, 175};

struct N8Run {
    NetworkSpec spec;
    std::vector<IterationReport> reports;
};

const N8Run& n8_run(uint64_t seed) {
    static std::map<uint64_t, N8Run> cache;
    auto it = cache.find(seed);
    if (it != cache.end()) return it->second;

    ExperimentConfig ex;
    ex.gen.nodes = 8;
    ex.gen.seed = seed;
    ex.train.iterations = 40;
    ex.train.episodes_per_iter = 8;
    ex.train.sims_per_state = 64;
    ex.train.seed = seed;
    ex.out_dir = testutil::temp_dir("accept_n8_" + std::to_string(seed));
    const ExperimentResult res = run_experiment(ex);
    return cache.emplace(seed, N8Run{res.spec, res.reports}).first->second;
}

double final5_mean(const std::vector<IterationReport>& reports) {
    double s = 0.0;
    for (size_t i = reports.size() - 5; i < reports.size(); ++i) s += reports[i].mean_lifetime;
    return s / 5.0;
}

// 7. Training beats MST: final-5-iteration mean lifetime at or above 1.05x
//    MST and final std at or below half the iteration-1 std, on 2 of 3 seeds.
Outcome criterion_7() {
    int passed = 0;
    std::string detail;
    for (uint64_t seed : kN8Seeds) {
        const N8Run& run = n8_run(seed);
        const double mst =
            static_cast<double>(lifetime_deterministic(run.spec, mst_topology(run.spec)).rounds);
        const double gain = final5_mean(run.reports) / mst;
        const double std1 = run.reports.front().std_lifetime;
        const double stdN = run.reports.back().std_lifetime;
        const bool ok = gain >= 1.05 && std1 > 0.0 && stdN <= 0.5 * std1;
        if (ok) ++passed;
        detail += fmt("%sseed %llu mean/mst %.3f stdN/std1 %.3f%s", detail.empty() ? "" : ", ",
                      static_cast<unsigned long long>(seed), gain, std1 > 0.0 ? stdN / std1 : -1.0,
                      ok ? "" : " [miss]");
    }
    return {passed >= 2, detail + fmt("; %d/3 (want >=2, gate >=1.05 and <=0.5)", passed)};
}

// 8. Near-optimality: best greedy topology over the final 5 iterations within
//    5% of the exact optimum, on 2 of 3 seeds (same runs as criterion 7).
Outcome criterion_8() {
    int passed = 0;
    std::string detail;
    for (uint64_t seed : kN8Seeds) {
        const N8Run& run = n8_run(seed);
        const int64_t opt = brute_force_optimal(run.spec).best_lifetime;
        int64_t best = 0;
        for (size_t i = run.reports.size() - 5; i < run.reports.size(); ++i)
            best = std::max(best, run.reports[i].greedy_lifetime);
        const double ratio = static_cast<double>(best) / static_cast<double>(opt);
        const bool ok = ratio >= 0.95;
        if (ok) ++passed;
        detail += fmt("%sseed %llu greedy/opt %.3f%s", detail.empty() ? "" : ", ",
                      static_cast<unsigned long long>(seed), ratio, ok ? "" : " [miss]");
    }
    return {passed >= 2, detail + fmt("; %d/3 (want >=2 at >=0.95)", passed)};
}

// 9. Mid-run node removal: topologies after the change never touch the
//    removed sensors, lifetime recovers to 90% of the post-change MST, and
//    the checkpoint sequence stays unbroken.
Outcome criterion_9() {
    const uint64_t kSeed = 19;
    const std::vector<NodeId> kRemoved = {3, 4};
    const int kChangeIter = 20, kIters = 40;

    const NetworkSpec spec = testutil::disc_instance(8, kSeed);
    TrainConfig cfg;
    cfg.iterations = kIters;
    cfg.episodes_per_iter = 8;
    cfg.sims_per_state = 64;
    cfg.seed = kSeed;
    cfg.out_dir = testutil::temp_dir("accept_adapt");
    Trainer trainer(spec, cfg);
    trainer.add_change({kChangeIter, NetworkChange::Kind::Remove, kRemoved, {}, {}});

    std::vector<IterationReport> reports;
    int touched = 0;
    for (int it = 1; it <= kIters; ++it) {
        auto r = trainer.run(1);
        reports.push_back(r.at(0));
        if (it < kChangeIter) continue;
        const Topology t =
            trainer.evaluate_now(EvalMode::Greedy, 1, derive_seed(kSeed, "accept9", it)).best_topology;
        if (!topology_valid(trainer.spec(), t)) ++touched;
        for (NodeId r2 : kRemoved) {
            if (t.parent[static_cast<size_t>(r2)] != kNoParent) ++touched;
            for (NodeId p : t.parent)
                if (p == r2) ++touched;
        }
    }
    const bool change_flag = reports[kChangeIter - 1].change_event &&
                             !reports[kChangeIter - 2].change_event && !reports.back().change_event;

    const double post_mst = static_cast<double>(
        lifetime_deterministic(trainer.spec(), mst_topology(trainer.spec())).rounds);
    const double recovery = final5_mean(reports) / post_mst;

    int missing = 0;
    for (int i = 0; i <= kIters; ++i) {
        const std::string p = cfg.out_dir + fmt("/checkpoints/ckpt_%04d.net", i);
        if (!std::filesystem::exists(p)) ++missing;
    }
    return {touched == 0 && change_flag && recovery >= 0.90 && missing == 0,
            fmt("removed-node violations %d, change flagged %s, recovery %.3f of post-change MST "
                "(want >=0.90), missing checkpoints %d/41",
                touched, change_flag ? "yes" : "no", recovery, missing)};
}

std::string metrics_without_wall(const std::string& path) {
    std::ifstream in(path);
    std::string line, out;
    while (std::getline(in, line)) {
        std::string row;
        int col = 0;
        size_t start = 0;
        while (start <= line.size()) {
            size_t comma = line.find(',', start);
            if (comma == std::string::npos) comma = line.size();
            if (col != 7) {
                row += line.substr(start, comma - start);
                row += ',';
            }
            start = comma + 1;
            ++col;
        }
        out += row + "\n";
    }
    return out;
}

std::string file_bytes(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// 10. Same seed twice gives a bit-identical metrics file (wall time aside),
//     resuming from a checkpoint matches the uninterrupted run, and every
//     iteration's evaluation emits validator-passing topologies.
Outcome criterion_10() {
    const NetworkSpec spec = testutil::disc_instance(5, 7);
    TrainConfig cfg;
    cfg.iterations = 6;
    cfg.episodes_per_iter = 4;
    cfg.sims_per_state = 16;
    cfg.minibatch = 8;
    cfg.eval_realizations = 16;
    cfg.seed = 7;
    cfg.net.conv_blocks = 1;
    cfg.net.filters = 8;
    cfg.net.value_hidden = 16;

    TrainConfig cfg_a = cfg;
    cfg_a.out_dir = testutil::temp_dir("accept_det_a");
    Trainer a(spec, cfg_a);
    int invalid = 0;
    for (int it = 1; it <= cfg.iterations; ++it) {
        a.run(1);
        const EvalResult ev = a.evaluate_now(EvalMode::Sample, 8, derive_seed(7, "accept10", it));
        for (const Topology& t : ev.topologies)
            if (!topology_valid(a.spec(), t)) ++invalid;
    }

    TrainConfig cfg_b = cfg;
    cfg_b.out_dir = testutil::temp_dir("accept_det_b");
    Trainer b(spec, cfg_b);
    b.run();
    const bool metrics_equal = metrics_without_wall(cfg_a.out_dir + "/metrics.csv") ==
                               metrics_without_wall(cfg_b.out_dir + "/metrics.csv");

    TrainConfig cfg_c = cfg;
    cfg_c.out_dir = testutil::temp_dir("accept_det_c");
    Trainer c(spec, cfg_c);
    c.run(3);
    Trainer resumed = Trainer::from_checkpoint(cfg_c.out_dir);
    resumed.run();
    const bool resume_metrics = metrics_without_wall(cfg_c.out_dir + "/metrics.csv") ==
                                metrics_without_wall(cfg_b.out_dir + "/metrics.csv");
    const bool resume_ckpt = file_bytes(cfg_c.out_dir + "/checkpoints/ckpt_0006.net") ==
                             file_bytes(cfg_b.out_dir + "/checkpoints/ckpt_0006.net");

    return {invalid == 0 && metrics_equal && resume_metrics && resume_ckpt,
            fmt("invalid eval topologies %d, repeat metrics %s, resumed metrics %s, resumed "
                "checkpoint %s",
                invalid, metrics_equal ? "equal" : "DIFFER", resume_metrics ? "equal" : "DIFFER",
                resume_ckpt ? "equal" : "DIFFER")};
}

Outcome (*const kCriteria[10])() = {criterion_1, criterion_2, criterion_3, criterion_4,
                                    criterion_5, criterion_6, criterion_7, criterion_8,
                                    criterion_9, criterion_10};

}  // namespace

int main(int argc, char** argv) {
    int only = 0;
    for (int i = 1; i < argc; ++i) {
        if (std::string(argv[i]) == "--criterion" && i + 1 < argc) {
            only = std::atoi(argv[++i]);
        } else {
            std::fprintf(stderr, "usage: %s [--criterion N]\n", argv[0]);
            return 2;
        }
    }
    if (only < 0 || only > 10) {
        std::fprintf(stderr, "criterion must be 1..10\n");
        return 2;
    }

    int failures = 0;
    for (int k = 1; k <= 10; ++k) {
        if (only != 0 && k != only) continue;
        Outcome o;
        try {
            o = kCriteria[k - 1]();
        } catch (const std::exception& e) {
            o = {false, fmt("exception: %s", e.what())};
        }
        std::printf("criterion %d: %s  %s\n", k, o.pass ? "PASS" : "FAIL", o.detail.c_str());
        std::fflush(stdout);
        if (!o.pass) ++failures;
    }
    return failures == 0 ? 0 : 1;
}
