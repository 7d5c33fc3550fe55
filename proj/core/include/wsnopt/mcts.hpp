#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "wsnopt/mdp.hpp"
#include "wsnopt/net.hpp"
#include "wsnopt/rng.hpp"

namespace wsnopt {

// One node per reached state, keyed by the state's canonical parent-array
// digest, so transpositions (same partial tree reached by different action
// orders) share statistics. Vectors are indexed by flat action.
struct SearchNode {
    bool expanded = false;
    int m_s = 0;
    std::vector<double> prior;
    std::vector<double> q;
    std::vector<int> m_sa;
    std::vector<uint8_t> mask;
};

struct MctsConfig {
    double c_puct = 1.5;
    // Root prior noise, disabled by default: prior <- (1-eps)*prior + eps*Dir(alpha).
    double dirichlet_eps = 0.0;
    double dirichlet_alpha = 0.3;
};

// UCB-guided search: each simulation walks the tree by
//   argmax_a Q(s,a) + c_puct * prior(s,a) * sqrt(M_s) / (1 + M_sa)
// (ties uniform random), expands the first unexpanded state with net priors
// and returns its value estimate, or returns the exact terminal reward;
// values back up along the path via incremental Q averages.
//
// The tree persists across calls, so searching from a committed child reuses
// its subtree; call clear() between moves for no-reuse behavior.
class Mcts {
  public:
    Mcts(const PolicyValueNet& net, const RewardScale& scale, const MctsConfig& cfg, uint64_t seed,
         EncodeMode encode_mode = EncodeMode::Full);

    // One simulation from the given state; returns the backed-up value.
    double search(const TopologyState& state);

    // n_sims simulations, then normalized root visit counts over the N^2
    // action space. A fresh root's first simulation only expands it, so with
    // n_sims=1 there are no child visits and the distribution falls back to
    // uniform over valid actions.
    std::vector<double> run_simulations(const TopologyState& state, int n_sims);

    void clear() { nodes_.clear(); }
    size_t node_count() const { return nodes_.size(); }
    const SearchNode* find(const TopologyState& state) const;
    const std::unordered_map<std::string, SearchNode>& nodes() const { return nodes_; }

    // Per-action root table (action,child,parent,prior,q,m_sa,u) as CSV.
    std::string dump_root_stats(const TopologyState& root) const;

    const MctsConfig& config() const { return cfg_; }

  private:
    SearchNode& expand(const TopologyState& state, const std::string& key, double* value_out);
    int select_action(const SearchNode& node);

    const PolicyValueNet* net_;
    RewardScale scale_;
    MctsConfig cfg_;
    EncodeMode encode_mode_;
    Rng rng_;
    std::unordered_map<std::string, SearchNode> nodes_;
};

}  // namespace wsnopt
