#pragma once

#include <cstdint>
#include <functional>
#include <utility>
#include <vector>

#include "wsnopt/mdp.hpp"
#include "wsnopt/network.hpp"

namespace wsnopt {

// Every sensor attaches directly to the gateway.
Topology star_topology(const NetworkSpec& spec);

// Uniformly random valid construction: walk the MDP picking uniform valid
// actions until terminal. Deterministic per seed.
Topology random_topology(const NetworkSpec& spec, uint64_t seed);

// Euclidean minimum spanning tree over active nodes (Prim from the gateway),
// edges oriented toward the gateway. Equal-weight edges are ordered by
// (weight, min endpoint, max endpoint) so output is platform-independent.
Topology mst_topology(const NetworkSpec& spec);

struct OracleResult {
    Topology best_topology;
    int64_t best_lifetime = 0;
    double best_continuous = 0.0;
    uint64_t tree_count = 0;
    uint64_t evaluated_count = 0;
};

struct OracleOptions {
    LoadsMode mode = LoadsMode::Subtree;
    int threads = 1;
    // Called every 100000 evaluated trees and once at completion.
    std::function<void(uint64_t done, uint64_t total)> progress;
};

// Exact optimum by enumerating all N_active^(N_active-2) labeled trees via
// Prufer sequences. Guarded to N_active <= 9 (9^7 ~ 4.8M trees). Ties on
// lifetime go to the lexicographically smallest parent array. The range of
// sequence indices may be partitioned across threads; merge order is fixed so
// the result is identical for any thread count.
OracleResult brute_force_optimal(const NetworkSpec& spec, const OracleOptions& opts = {});

// Decodes a Prufer sequence over labels 0..n-1 (n = seq.size() + 2) into the
// n-1 edges of the corresponding labeled tree.
std::vector<std::pair<int, int>> prufer_decode(const std::vector<int>& seq);

// Decodes seq over the spec's active nodes (label i = i-th active id) and
// orients the tree toward the gateway.
Topology topology_from_prufer(const NetworkSpec& spec, const std::vector<int>& seq);

// Reward normalizer used by the MDP: the MST baseline's continuous lifetime.
RewardScale make_reward_scale(const NetworkSpec& spec, LoadsMode mode = LoadsMode::Subtree);

}  // namespace wsnopt
