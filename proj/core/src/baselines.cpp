#include "wsnopt/baselines.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <limits>
#include <mutex>
#include <stdexcept>
#include <thread>

#include "wsnopt/rng.hpp"

namespace wsnopt {

Topology star_topology(const NetworkSpec& spec) {
    spec.validate();
    Topology t;
    t.parent.assign(static_cast<size_t>(spec.node_count()), kNoParent);
    for (NodeId v = 1; v < spec.node_count(); ++v)
        if (spec.is_active(v)) t.parent[static_cast<size_t>(v)] = kGateway;
    validate_topology(spec, t);
    return t;
}

Topology random_topology(const NetworkSpec& spec, uint64_t seed) {
    Rng rng(seed);
    TopologyState state = initial_state(spec);
    while (!state.is_terminal()) {
        const auto acts = valid_actions(state);
        state = apply(state, acts[rng.index(acts.size())]);
    }
    return state.to_topology();
}

Topology mst_topology(const NetworkSpec& spec) {
    spec.validate();
    const int n = spec.node_count();

    struct EdgeKey {
        double w = std::numeric_limits<double>::infinity();
        NodeId lo = -1, hi = -1;
        bool operator<(const EdgeKey& o) const {
            if (w != o.w) return w < o.w;
            if (lo != o.lo) return lo < o.lo;
            return hi < o.hi;
        }
    };
    auto key_for = [&](NodeId u, NodeId v) {
        EdgeKey k;
        k.w = euclidean_distance(spec, u, v);
        k.lo = std::min(u, v);
        k.hi = std::max(u, v);
        return k;
    };

    Topology t;
    t.parent.assign(static_cast<size_t>(n), kNoParent);
    std::vector<uint8_t> in_tree(static_cast<size_t>(n), 0);
    std::vector<EdgeKey> best(static_cast<size_t>(n));
    std::vector<NodeId> via(static_cast<size_t>(n), kNoParent);

    in_tree[kGateway] = 1;
    for (NodeId v = 1; v < n; ++v) {
        if (!spec.is_active(v)) continue;
        best[static_cast<size_t>(v)] = key_for(kGateway, v);
        via[static_cast<size_t>(v)] = kGateway;
    }
    const int to_add = spec.active_sensor_count();
    for (int added = 0; added < to_add; ++added) {
        NodeId pick = kNoParent;
        for (NodeId v = 1; v < n; ++v) {
            if (!spec.is_active(v) || in_tree[static_cast<size_t>(v)]) continue;
            if (pick == kNoParent || best[static_cast<size_t>(v)] < best[static_cast<size_t>(pick)]) pick = v;
        }
        if (pick == kNoParent) throw std::logic_error("mst_topology: ran out of fringe nodes");
        in_tree[static_cast<size_t>(pick)] = 1;
        t.parent[static_cast<size_t>(pick)] = via[static_cast<size_t>(pick)];
        for (NodeId v = 1; v < n; ++v) {
            if (!spec.is_active(v) || in_tree[static_cast<size_t>(v)]) continue;
            EdgeKey k = key_for(pick, v);
            if (k < best[static_cast<size_t>(v)]) {
                best[static_cast<size_t>(v)] = k;
                via[static_cast<size_t>(v)] = pick;
            }
        }
    }
    validate_topology(spec, t);
    return t;
}

std::vector<std::pair<int, int>> prufer_decode(const std::vector<int>& seq) {
    const int n = static_cast<int>(seq.size()) + 2;
    for (int x : seq)
        if (x < 0 || x >= n) throw std::invalid_argument("prufer_decode: label out of range");
    std::vector<int> degree(static_cast<size_t>(n), 1);
    for (int x : seq) degree[static_cast<size_t>(x)]++;
    std::vector<std::pair<int, int>> edges;
    edges.reserve(static_cast<size_t>(n) - 1);
    int ptr = 0;
    while (degree[static_cast<size_t>(ptr)] != 1) ++ptr;
    int leaf = ptr;
    for (int x : seq) {
        edges.emplace_back(leaf, x);
        if (--degree[static_cast<size_t>(x)] == 1 && x < ptr) {
            leaf = x;
        } else {
            ++ptr;
            while (degree[static_cast<size_t>(ptr)] != 1) ++ptr;
            leaf = ptr;
        }
    }
    edges.emplace_back(leaf, n - 1);
    return edges;
}

namespace {

// Fixed-capacity scratch for enumerating trees over m <= 9 active nodes.
// Everything below works in label space (0..m-1, label 0 = gateway) and maps
// back to node ids only for geometry/energy lookups.
constexpr int kMaxOracleNodes = 9;

struct LabelScratch {
    int m = 0;
    std::array<NodeId, kMaxOracleNodes> id{};
    // (eps + rho*d^2) per ordered label pair, premultiplied later by load.
    std::array<std::array<double, kMaxOracleNodes>, kMaxOracleNodes> edge_cost{};
    std::array<double, kMaxOracleNodes> energy{};
    double mean_bits = 0.0;

    std::array<int, kMaxOracleNodes> degree{};
    std::array<int, kMaxOracleNodes> edge_u{};
    std::array<int, kMaxOracleNodes> edge_v{};
    std::array<int, kMaxOracleNodes> parent{};
    std::array<int, kMaxOracleNodes> order{};
    std::array<double, kMaxOracleNodes> load{};
    std::array<uint16_t, kMaxOracleNodes> adj_bits{};

    void bind(const NetworkSpec& spec) {
        const auto active = spec.active_nodes();
        m = static_cast<int>(active.size());
        for (int i = 0; i < m; ++i) id[static_cast<size_t>(i)] = active[static_cast<size_t>(i)];
        mean_bits = spec.mean_data_bits();
        for (int i = 0; i < m; ++i) {
            const auto ni = static_cast<size_t>(id[static_cast<size_t>(i)]);
            energy[static_cast<size_t>(i)] = spec.initial_energy[ni];
            for (int j = 0; j < m; ++j) {
                if (i == j) continue;
                const double d =
                    euclidean_distance(spec, id[static_cast<size_t>(i)], id[static_cast<size_t>(j)]);
                edge_cost[static_cast<size_t>(i)][static_cast<size_t>(j)] = spec.eps_proc[ni] + spec.rho * d * d;
            }
        }
    }

    // Decodes digits (length m-2) into edges, orients toward label 0 and
    // returns the continuous lifetime. Mirrors prufer_decode +
    // lifetime_deterministic without heap traffic.
    double evaluate(const int* digits, LoadsMode mode) {
        const int len = m - 2;
        for (int i = 0; i < m; ++i) degree[static_cast<size_t>(i)] = 1;
        for (int i = 0; i < len; ++i) degree[static_cast<size_t>(digits[i])]++;
        int ptr = 0;
        while (degree[static_cast<size_t>(ptr)] != 1) ++ptr;
        int leaf = ptr;
        int ne = 0;
        for (int i = 0; i < len; ++i) {
            const int x = digits[i];
            edge_u[static_cast<size_t>(ne)] = leaf;
            edge_v[static_cast<size_t>(ne)] = x;
            ++ne;
            if (--degree[static_cast<size_t>(x)] == 1 && x < ptr) {
                leaf = x;
            } else {
                ++ptr;
                while (degree[static_cast<size_t>(ptr)] != 1) ++ptr;
                leaf = ptr;
            }
        }
        edge_u[static_cast<size_t>(ne)] = leaf;
        edge_v[static_cast<size_t>(ne)] = m - 1;
        ++ne;

        adj_bits.fill(0);
        for (int e = 0; e < ne; ++e) {
            adj_bits[static_cast<size_t>(edge_u[static_cast<size_t>(e)])] |=
                static_cast<uint16_t>(1u << edge_v[static_cast<size_t>(e)]);
            adj_bits[static_cast<size_t>(edge_v[static_cast<size_t>(e)])] |=
                static_cast<uint16_t>(1u << edge_u[static_cast<size_t>(e)]);
        }
        parent[0] = -1;
        order[0] = 0;
        int filled = 1;
        for (int q = 0; q < filled; ++q) {
            const int u = order[static_cast<size_t>(q)];
            uint16_t bits = adj_bits[static_cast<size_t>(u)];
            while (bits) {
                const int v = __builtin_ctz(bits);
                bits = static_cast<uint16_t>(bits & (bits - 1));
                if (v == parent[static_cast<size_t>(u)]) continue;
                parent[static_cast<size_t>(v)] = u;
                order[static_cast<size_t>(filled++)] = v;
            }
        }

        if (mode == LoadsMode::Subtree) {
            for (int i = 0; i < m; ++i) load[static_cast<size_t>(i)] = mean_bits;
            for (int q = filled - 1; q >= 1; --q) {
                const int v = order[static_cast<size_t>(q)];
                load[static_cast<size_t>(parent[static_cast<size_t>(v)])] += load[static_cast<size_t>(v)];
            }
        } else {
            for (int i = 0; i < m; ++i) load[static_cast<size_t>(i)] = mean_bits;
            for (int q = 1; q < filled; ++q) {
                const int v = order[static_cast<size_t>(q)];
                load[static_cast<size_t>(parent[static_cast<size_t>(v)])] += mean_bits;
            }
        }

        double lifetime = std::numeric_limits<double>::infinity();
        for (int v = 1; v < m; ++v) {
            const double e =
                edge_cost[static_cast<size_t>(v)][static_cast<size_t>(parent[static_cast<size_t>(v)])] *
                load[static_cast<size_t>(v)];
            if (e <= 0.0) continue;
            lifetime = std::min(lifetime, energy[static_cast<size_t>(v)] / e);
        }
        return lifetime;
    }

    // Parent array in node-id space for the most recent evaluate() call.
    std::vector<NodeId> current_parents(int total_nodes) const {
        std::vector<NodeId> out(static_cast<size_t>(total_nodes), kNoParent);
        for (int v = 1; v < m; ++v)
            out[static_cast<size_t>(id[static_cast<size_t>(v)])] =
                id[static_cast<size_t>(parent[static_cast<size_t>(v)])];
        return out;
    }
};

struct RangeBest {
    double continuous = -std::numeric_limits<double>::infinity();
    std::vector<NodeId> parents;
};

void scan_range(const NetworkSpec& spec, LoadsMode mode, uint64_t lo, uint64_t hi, RangeBest& best,
                std::atomic<uint64_t>* done, const std::function<void(uint64_t, uint64_t)>& progress,
                uint64_t total, std::mutex* progress_mu) {
    LabelScratch scratch;
    scratch.bind(spec);
    const int len = scratch.m - 2;
    int digits[kMaxOracleNodes] = {0};
    uint64_t rem = lo;
    for (int i = len - 1; i >= 0; --i) {
        digits[i] = static_cast<int>(rem % static_cast<uint64_t>(scratch.m));
        rem /= static_cast<uint64_t>(scratch.m);
    }
    uint64_t local_count = 0;
    for (uint64_t idx = lo; idx < hi; ++idx) {
        const double lt = scratch.evaluate(digits, mode);
        if (lt > best.continuous) {
            best.continuous = lt;
            best.parents = scratch.current_parents(spec.node_count());
        } else if (lt == best.continuous) {
            auto cand = scratch.current_parents(spec.node_count());
            if (cand < best.parents) best.parents = std::move(cand);
        }
        for (int i = len - 1; i >= 0; --i) {
            if (++digits[i] < scratch.m) break;
            digits[i] = 0;
        }
        if (++local_count == 100000) {
            const uint64_t total_done = done->fetch_add(local_count, std::memory_order_relaxed) + local_count;
            local_count = 0;
            if (progress) {
                std::lock_guard<std::mutex> lk(*progress_mu);
                progress(total_done, total);
            }
        }
    }
    if (local_count) done->fetch_add(local_count, std::memory_order_relaxed);
}

}  // namespace

Topology topology_from_prufer(const NetworkSpec& spec, const std::vector<int>& seq) {
    spec.validate();
    const auto active = spec.active_nodes();
    const int m = static_cast<int>(active.size());
    if (static_cast<int>(seq.size()) != m - 2) throw std::invalid_argument("topology_from_prufer: length must be N_active-2");

    Topology t;
    t.parent.assign(static_cast<size_t>(spec.node_count()), kNoParent);
    const auto edges = prufer_decode(seq);
    std::vector<std::vector<int>> adj(static_cast<size_t>(m));
    for (auto [u, v] : edges) {
        adj[static_cast<size_t>(u)].push_back(v);
        adj[static_cast<size_t>(v)].push_back(u);
    }
    std::vector<int> parent_label(static_cast<size_t>(m), -1);
    std::vector<int> stack = {0};
    std::vector<uint8_t> seen(static_cast<size_t>(m), 0);
    seen[0] = 1;
    while (!stack.empty()) {
        const int u = stack.back();
        stack.pop_back();
        for (int v : adj[static_cast<size_t>(u)]) {
            if (seen[static_cast<size_t>(v)]) continue;
            seen[static_cast<size_t>(v)] = 1;
            parent_label[static_cast<size_t>(v)] = u;
            stack.push_back(v);
        }
    }
    for (int v = 1; v < m; ++v)
        t.parent[static_cast<size_t>(active[static_cast<size_t>(v)])] =
            active[static_cast<size_t>(parent_label[static_cast<size_t>(v)])];
    validate_topology(spec, t);
    return t;
}

OracleResult brute_force_optimal(const NetworkSpec& spec, const OracleOptions& opts) {
    spec.validate();
    const int m = 1 + spec.active_sensor_count();
    if (m < 2) throw std::invalid_argument("brute_force_optimal: need at least one active sensor");
    if (m > kMaxOracleNodes)
        throw std::invalid_argument("brute_force_optimal: refusing " + std::to_string(m) +
                                    " active nodes; enumeration is N^(N-2) trees and capped at N=9 (~4.8M)");

    uint64_t total = 1;
    for (int i = 0; i < m - 2; ++i) total *= static_cast<uint64_t>(m);

    const int threads = std::max(1, std::min<int>(opts.threads, static_cast<int>(std::min<uint64_t>(total, 64))));
    std::vector<RangeBest> bests(static_cast<size_t>(threads));
    std::atomic<uint64_t> done{0};
    std::mutex progress_mu;

    if (threads == 1) {
        scan_range(spec, opts.mode, 0, total, bests[0], &done, opts.progress, total, &progress_mu);
    } else {
        std::vector<std::thread> pool;
        const uint64_t chunk = total / static_cast<uint64_t>(threads);
        for (int t = 0; t < threads; ++t) {
            const uint64_t lo = chunk * static_cast<uint64_t>(t);
            const uint64_t hi = t + 1 == threads ? total : lo + chunk;
            pool.emplace_back([&, lo, hi, t] {
                scan_range(spec, opts.mode, lo, hi, bests[static_cast<size_t>(t)], &done, opts.progress, total,
                           &progress_mu);
            });
        }
        for (auto& th : pool) th.join();
    }

    RangeBest merged;
    for (const auto& b : bests) {
        if (b.continuous > merged.continuous || (b.continuous == merged.continuous && !b.parents.empty() &&
                                                 (merged.parents.empty() || b.parents < merged.parents))) {
            merged.continuous = b.continuous;
            merged.parents = b.parents;
        }
    }

    OracleResult out;
    out.best_topology = Topology{std::move(merged.parents)};
    validate_topology(spec, out.best_topology);
    const LifetimeResult lr = lifetime_deterministic(spec, out.best_topology, opts.mode);
    out.best_lifetime = lr.rounds;
    out.best_continuous = lr.continuous;
    out.tree_count = total;
    out.evaluated_count = done.load();
    if (opts.progress) opts.progress(out.evaluated_count, total);
    return out;
}

RewardScale make_reward_scale(const NetworkSpec& spec, LoadsMode mode) {
    const Topology mst = mst_topology(spec);
    RewardScale scale;
    scale.mode = mode;
    scale.mst_continuous = lifetime_deterministic(spec, mst, mode).continuous;
    return scale;
}

}  // namespace wsnopt
