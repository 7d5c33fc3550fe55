#include "wsnopt/mdp.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <stdexcept>

namespace wsnopt {

TopologyState::TopologyState(const NetworkSpec& spec) : spec_(&spec) {
    spec.validate();
    if (!spec.is_active(kGateway)) throw std::invalid_argument("initial_state: gateway is inactive");
    const auto n = static_cast<size_t>(spec.node_count());
    parent_.assign(n, kNoParent);
    connected_.assign(n, 0);
    connected_[kGateway] = 1;
}

bool TopologyState::is_terminal() const { return step_ == spec_->active_sensor_count(); }

std::string TopologyState::key() const {
    std::string k(parent_.size() * sizeof(NodeId), '\0');
    std::memcpy(k.data(), parent_.data(), k.size());
    return k;
}

Topology TopologyState::to_topology() const {
    if (!is_terminal()) throw std::logic_error("to_topology: state is not terminal");
    Topology t{parent_};
    validate_topology(*spec_, t);
    return t;
}

TopologyState initial_state(const NetworkSpec& spec) { return TopologyState(spec); }

std::vector<Action> valid_actions(const TopologyState& state) {
    std::vector<Action> out;
    const int n = state.node_count();
    for (NodeId c = 1; c < n; ++c) {
        if (!state.spec().is_active(c) || state.is_connected(c)) continue;
        for (NodeId p = 0; p < n; ++p) {
            if (!state.spec().is_active(p) || !state.is_connected(p)) continue;
            out.push_back({c, p});
        }
    }
    return out;
}

std::vector<uint8_t> valid_action_mask(const TopologyState& state) {
    const int n = state.node_count();
    std::vector<uint8_t> mask(static_cast<size_t>(n) * n, 0);
    for (const Action& a : valid_actions(state)) mask[static_cast<size_t>(action_index(a, n))] = 1;
    return mask;
}

TopologyState apply(const TopologyState& state, const Action& a) {
    const int n = state.node_count();
    if (a.child < 1 || a.child >= n) throw std::invalid_argument("apply: child id out of range");
    if (a.parent < 0 || a.parent >= n) throw std::invalid_argument("apply: parent id out of range");
    if (a.child == a.parent) throw std::invalid_argument("apply: child equals parent");
    if (!state.spec().is_active(a.child)) throw std::invalid_argument("apply: child is inactive");
    if (!state.spec().is_active(a.parent)) throw std::invalid_argument("apply: parent is inactive");
    if (state.is_connected(a.child)) throw std::invalid_argument("apply: child already connected");
    if (!state.is_connected(a.parent)) throw std::invalid_argument("apply: parent not connected");

    TopologyState next = state;
    next.parent_[static_cast<size_t>(a.child)] = a.parent;
    next.connected_[static_cast<size_t>(a.child)] = 1;
    next.step_ += 1;
    next.n_connected_ += 1;
    return next;
}

double terminal_reward(const TopologyState& state, const RewardScale& scale) {
    if (!state.is_terminal()) throw std::logic_error("terminal_reward: state is not terminal");
    if (!(scale.mst_continuous > 0.0) || !std::isfinite(scale.mst_continuous))
        throw std::invalid_argument("terminal_reward: reward scale must be positive finite");
    const LifetimeResult lr = lifetime_deterministic(state.spec(), state.to_topology(), scale.mode);
    return lr.continuous / scale.mst_continuous;
}

std::vector<double> encode_state(const TopologyState& state, EncodeMode mode) {
    const NetworkSpec& spec = state.spec();
    const int n = state.node_count();
    const auto plane = static_cast<size_t>(n) * n;
    const int channels = encode_channels(mode);
    std::vector<double> out(plane * channels, 0.0);

    auto at = [&](int c, int i, int j) -> double& {
        return out[static_cast<size_t>(c) * plane + static_cast<size_t>(i) * n + j];
    };

    for (NodeId v = 1; v < n; ++v) {
        const NodeId p = state.parent_of(v);
        if (p != kNoParent) at(0, v, p) = 1.0;
    }
    if (mode == EncodeMode::BareAdjacency) return out;

    for (NodeId v = 0; v < n; ++v)
        if (spec.is_active(v) && state.is_connected(v)) at(1, v, v) = 1.0;

    double max_d = 0.0;
    for (NodeId i = 0; i < n; ++i) {
        if (!spec.is_active(i)) continue;
        for (NodeId j = i + 1; j < n; ++j) {
            if (!spec.is_active(j)) continue;
            max_d = std::max(max_d, euclidean_distance(spec, i, j));
        }
    }
    if (max_d > 0.0) {
        for (NodeId i = 0; i < n; ++i) {
            if (!spec.is_active(i)) continue;
            for (NodeId j = 0; j < n; ++j) {
                if (!spec.is_active(j) || i == j) continue;
                at(2, i, j) = euclidean_distance(spec, i, j) / max_d;
            }
        }
    }

    double max_e = 0.0;
    for (NodeId v = 1; v < n; ++v)
        if (spec.is_active(v)) max_e = std::max(max_e, spec.initial_energy[static_cast<size_t>(v)]);
    if (max_e > 0.0) {
        for (NodeId i = 0; i < n; ++i) {
            if (!spec.is_active(i)) continue;
            const double e = i == kGateway ? 1.0 : spec.initial_energy[static_cast<size_t>(i)] / max_e;
            for (NodeId j = 0; j < n; ++j)
                if (spec.is_active(j)) at(3, i, j) = e;
        }
    }
    return out;
}

}  // namespace wsnopt
