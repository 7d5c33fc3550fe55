#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "wsnopt/network.hpp"

namespace wsnopt {

// Tree construction as a finite-horizon deterministic MDP. A state is a
// partially built arborescence: the set of nodes already connected to the
// gateway plus their parent assignments. An action attaches one unconnected
// active sensor to one connected active node. After exactly
// active_sensor_count() actions the state is terminal and the parent array is
// a complete topology.
struct Action {
    NodeId child = kNoParent;
    NodeId parent = kNoParent;

    bool operator==(const Action&) const = default;
};

// Actions are also addressable as flat indices child*N + parent so the policy
// head can have a fixed N^2 shape with invalid entries masked.
inline int action_index(const Action& a, int n) { return a.child * n + a.parent; }
inline Action action_from_index(int flat, int n) { return Action{flat / n, flat % n}; }

class TopologyState {
  public:
    explicit TopologyState(const NetworkSpec& spec);

    const NetworkSpec& spec() const { return *spec_; }
    int node_count() const { return static_cast<int>(parent_.size()); }
    int step() const { return step_; }
    bool is_connected(NodeId v) const { return connected_[static_cast<size_t>(v)] != 0; }
    NodeId parent_of(NodeId v) const { return parent_[static_cast<size_t>(v)]; }
    const std::vector<NodeId>& parents() const { return parent_; }

    bool is_terminal() const;
    // Byte string identifying the state; equal states produce equal keys.
    // The connected set is implied by the parent array so keying on parents
    // alone is exact.
    std::string key() const;

    // Only meaningful at terminal states; throws otherwise.
    Topology to_topology() const;

  private:
    friend TopologyState apply(const TopologyState&, const Action&);

    const NetworkSpec* spec_;
    std::vector<NodeId> parent_;
    std::vector<uint8_t> connected_;
    int step_ = 0;
    int n_connected_ = 1;
};

TopologyState initial_state(const NetworkSpec& spec);

std::vector<Action> valid_actions(const TopologyState& state);

// N^2 mask aligned with action_index; 1 where the flat action is valid.
std::vector<uint8_t> valid_action_mask(const TopologyState& state);

// Pure transition: returns the successor, never mutates the input.
TopologyState apply(const TopologyState& state, const Action& a);

// Terminal rewards are the completed topology's continuous deterministic
// lifetime divided by the MST baseline's, so 1.0 means "as good as MST" and
// values stay near 1 across instance scales. The scale is computed once per
// spec (baselines::make_reward_scale) and threaded through.
struct RewardScale {
    double mst_continuous = 1.0;
    LoadsMode mode = LoadsMode::Subtree;
};

double terminal_reward(const TopologyState& state, const RewardScale& scale);

// Network input. Full stacks four N x N channels:
//   0: directed adjacency, entry (child, parent) = 1 per placed edge
//   1: connectivity indicator on the diagonal
//   2: pairwise Euclidean distances / max active pair distance
//   3: row-broadcast initial energies / max finite energy (gateway rows 1)
// BareAdjacency keeps only channel 0 for ablation runs.
enum class EncodeMode { Full, BareAdjacency };

inline int encode_channels(EncodeMode mode) { return mode == EncodeMode::Full ? 4 : 1; }

// Row-major (C, N, N) tensor flattened to C*N*N doubles. Inactive nodes
// contribute zero rows/columns in every channel.
std::vector<double> encode_state(const TopologyState& state, EncodeMode mode = EncodeMode::Full);

}  // namespace wsnopt
