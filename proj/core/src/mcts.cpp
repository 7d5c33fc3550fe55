#include "wsnopt/mcts.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>

namespace wsnopt {

Mcts::Mcts(const PolicyValueNet& net, const RewardScale& scale, const MctsConfig& cfg, uint64_t seed,
           EncodeMode encode_mode)
    : net_(&net), scale_(scale), cfg_(cfg), encode_mode_(encode_mode), rng_(seed) {
    if (encode_channels(encode_mode) != net.config().channels)
        throw std::invalid_argument("Mcts: encode mode channel count does not match the net");
    if (!(cfg.c_puct > 0.0)) throw std::invalid_argument("Mcts: c_puct must be > 0");
}

SearchNode& Mcts::expand(const TopologyState& state, const std::string& key, double* value_out) {
    SearchNode node;
    node.expanded = true;
    node.m_s = 1;
    node.mask = valid_action_mask(state);
    const auto encoded = encode_state(state, encode_mode_);
    auto [policy, value] = net_->forward(encoded, node.mask);
    if (!std::isfinite(value)) throw std::runtime_error("Mcts: non-finite value from net");
    node.prior = std::move(policy);
    node.q.assign(node.mask.size(), 0.0);
    node.m_sa.assign(node.mask.size(), 0);
    *value_out = value;
    return nodes_.insert_or_assign(key, std::move(node)).first->second;
}

int Mcts::select_action(const SearchNode& node) {
    const double sqrt_ms = std::sqrt(static_cast<double>(node.m_s));
    double best = -std::numeric_limits<double>::infinity();
    int pick = -1;
    uint64_t tie_count = 0;
    for (size_t i = 0; i < node.mask.size(); ++i) {
        if (!node.mask[i]) continue;
        const double u = node.q[i] + cfg_.c_puct * node.prior[i] * sqrt_ms / (1.0 + node.m_sa[i]);
        if (u > best) {
            best = u;
            pick = static_cast<int>(i);
            tie_count = 1;
        } else if (u == best) {
            ++tie_count;
            if (rng_.index(tie_count) == 0) pick = static_cast<int>(i);
        }
    }
    if (pick < 0) throw std::logic_error("Mcts: no valid action at expanded node");
    return pick;
}

double Mcts::search(const TopologyState& state) {
    if (state.is_terminal()) return terminal_reward(state, scale_);

    const std::string key = state.key();
    auto it = nodes_.find(key);
    if (it == nodes_.end() || !it->second.expanded) {
        double value = 0.0;
        expand(state, key, &value);
        return value;
    }

    // References into unordered_map stay valid across the recursive insert.
    SearchNode& node = it->second;
    const int a = select_action(node);
    const TopologyState next = apply(state, action_from_index(a, state.node_count()));
    const double v = search(next);
    if (!std::isfinite(v)) throw std::runtime_error("Mcts: non-finite backed-up value");

    const auto ai = static_cast<size_t>(a);
    node.q[ai] = (node.m_sa[ai] * node.q[ai] + v) / (node.m_sa[ai] + 1);
    node.m_sa[ai] += 1;
    node.m_s += 1;
    return v;
}

std::vector<double> Mcts::run_simulations(const TopologyState& state, int n_sims) {
    if (n_sims < 1) throw std::invalid_argument("run_simulations: n_sims must be >= 1");
    if (state.is_terminal()) throw std::invalid_argument("run_simulations: state is terminal");

    int remaining = n_sims;
    if (cfg_.dirichlet_eps > 0.0) {
        const std::string key = state.key();
        if (!nodes_.count(key)) {
            search(state);
            --remaining;
        }
        SearchNode& root = nodes_.at(key);
        std::vector<double> noise;
        double total = 0.0;
        for (size_t i = 0; i < root.mask.size(); ++i) {
            const double g = root.mask[i] ? rng_.gamma(cfg_.dirichlet_alpha) : 0.0;
            noise.push_back(g);
            total += g;
        }
        if (total > 0.0)
            for (size_t i = 0; i < root.prior.size(); ++i)
                if (root.mask[i])
                    root.prior[i] = (1.0 - cfg_.dirichlet_eps) * root.prior[i] +
                                    cfg_.dirichlet_eps * noise[i] / total;
    }
    for (int m = 0; m < remaining; ++m) search(state);

    const SearchNode& root = nodes_.at(state.key());
    std::vector<double> dist(root.mask.size(), 0.0);
    int64_t total = 0;
    for (size_t i = 0; i < root.mask.size(); ++i)
        if (root.mask[i]) total += root.m_sa[i];
    if (total == 0) {
        int64_t n_valid = 0;
        for (uint8_t m : root.mask) n_valid += m;
        for (size_t i = 0; i < root.mask.size(); ++i)
            if (root.mask[i]) dist[i] = 1.0 / static_cast<double>(n_valid);
    } else {
        for (size_t i = 0; i < root.mask.size(); ++i)
            if (root.mask[i]) dist[i] = static_cast<double>(root.m_sa[i]) / static_cast<double>(total);
    }
    return dist;
}

const SearchNode* Mcts::find(const TopologyState& state) const {
    auto it = nodes_.find(state.key());
    return it == nodes_.end() ? nullptr : &it->second;
}

std::string Mcts::dump_root_stats(const TopologyState& root) const {
    std::string out = "action,child,parent,prior,q,m_sa,u\n";
    const SearchNode* node = find(root);
    if (!node) return out;
    const int n = root.node_count();
    const double sqrt_ms = std::sqrt(static_cast<double>(node->m_s));
    char line[160];
    for (size_t i = 0; i < node->mask.size(); ++i) {
        if (!node->mask[i]) continue;
        const Action a = action_from_index(static_cast<int>(i), n);
        const double u = node->q[i] + cfg_.c_puct * node->prior[i] * sqrt_ms / (1.0 + node->m_sa[i]);
        std::snprintf(line, sizeof line, "%zu,%d,%d,%.12g,%.12g,%d,%.12g\n", i, a.child, a.parent, node->prior[i],
                      node->q[i], node->m_sa[i], u);
        out += line;
    }
    return out;
}

}  // namespace wsnopt
