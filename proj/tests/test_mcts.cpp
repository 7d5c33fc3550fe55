#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "doctest.h"
#include "test_util.hpp"
#include "wsnopt/baselines.hpp"
#include "wsnopt/mcts.hpp"
#include "wsnopt/mdp.hpp"
#include "wsnopt/net.hpp"

using namespace wsnopt;

namespace {

NetConfig tiny_net(int n) {
    NetConfig cfg;
    cfg.channels = 4;
    cfg.n = n;
    cfg.conv_blocks = 1;
    cfg.filters = 4;
    cfg.value_hidden = 8;
    cfg.weight_init_seed = 5;
    return cfg;
}

struct Fixture {
    NetworkSpec spec;
    PolicyValueNet net;
    RewardScale scale;

    explicit Fixture(NetworkSpec s, bool zero = true)
        : spec(std::move(s)), net(tiny_net(spec.node_count())), scale(make_reward_scale(spec)) {
        if (zero) net.zero_weights();
    }
};

int visit_total(const SearchNode& node) {
    int total = 0;
    for (int m : node.m_sa) total += m;
    return total;
}

}  // namespace

TEST_SUITE_BEGIN("mcts");

TEST_CASE("a single simulation expands the root and yields the uniform fallback") {
    Fixture f(testutil::disc_instance(5, 3));
    Mcts mcts(f.net, f.scale, {}, 1);
    auto s0 = initial_state(f.spec);
    auto dist = mcts.run_simulations(s0, 1);
    const auto mask = valid_action_mask(s0);
    size_t valid = 0;
    for (auto m : mask) valid += m;
    for (size_t i = 0; i < mask.size(); ++i)
        CHECK(dist[i] == (mask[i] ? doctest::Approx(1.0 / static_cast<double>(valid)) : doctest::Approx(0.0)));

    const auto* root = mcts.find(s0);
    REQUIRE(root != nullptr);
    CHECK(root->expanded);
    CHECK(root->m_s == 1);
    CHECK(visit_total(*root) == 0);
}

TEST_CASE("visit bookkeeping: every expanded node satisfies m_s = 1 + sum m_sa") {
    Fixture f(testutil::disc_instance(5, 7));
    Mcts mcts(f.net, f.scale, {}, 2);
    auto s0 = initial_state(f.spec);
    mcts.run_simulations(s0, 200);

    size_t expanded = 0;
    for (const auto& [key, node] : mcts.nodes()) {
        if (!node.expanded) continue;
        ++expanded;
        CHECK(node.m_s == 1 + visit_total(node));
        double prior_sum = 0.0;
        for (size_t i = 0; i < node.mask.size(); ++i) {
            if (node.mask[i]) {
                prior_sum += node.prior[i];
                CHECK(node.q[i] >= 0.0);
                CHECK(std::isfinite(node.q[i]));
            } else {
                CHECK(node.prior[i] == 0.0);
                CHECK(node.m_sa[i] == 0);
            }
        }
        CHECK(prior_sum == doctest::Approx(1.0).epsilon(1e-9));
    }
    CHECK(expanded > 1);

    const auto* root = mcts.find(s0);
    REQUIRE(root != nullptr);
    CHECK(root->m_s == 200);
    CHECK(visit_total(*root) == 199);
}

TEST_CASE("root distribution is the normalized child visit counts") {
    Fixture f(testutil::disc_instance(4, 9));
    Mcts mcts(f.net, f.scale, {}, 3);
    auto s0 = initial_state(f.spec);
    auto dist = mcts.run_simulations(s0, 100);
    const auto* root = mcts.find(s0);
    REQUIRE(root != nullptr);
    const int total = visit_total(*root);
    CHECK(total == 99);
    double dist_sum = 0.0;
    for (size_t i = 0; i < dist.size(); ++i) {
        CHECK(dist[i] == doctest::Approx(static_cast<double>(root->m_sa[i]) / total).epsilon(1e-12));
        dist_sum += dist[i];
    }
    CHECK(dist_sum == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("terminal children return the exact construction reward") {
    auto spec = testutil::fixed_instance({{300.0, 0.0}});
    Fixture f(spec);
    auto s0 = initial_state(f.spec);

    Mcts mcts(f.net, f.scale, {}, 4);
    auto dist = mcts.run_simulations(s0, 50);
    CHECK(dist[static_cast<size_t>(action_index(Action{1, 0}, 2))] == 1.0);

    const auto* root = mcts.find(s0);
    REQUIRE(root != nullptr);
    const auto terminal = apply(s0, Action{1, 0});
    const double want = terminal_reward(terminal, f.scale);
    CHECK(root->q[static_cast<size_t>(action_index(Action{1, 0}, 2))] == doctest::Approx(want).epsilon(1e-12));
}

TEST_CASE("terminal states short-circuit search and reject simulation batches") {
    Fixture f(testutil::disc_instance(4, 11));
    Mcts mcts(f.net, f.scale, {}, 5);
    auto s = initial_state(f.spec);
    while (!s.is_terminal()) s = apply(s, valid_actions(s)[0]);
    CHECK(mcts.search(s) == doctest::Approx(terminal_reward(s, f.scale)).epsilon(1e-15));
    CHECK(mcts.node_count() == 0);  // terminal rewards never allocate nodes
    CHECK_THROWS_AS(mcts.run_simulations(s, 10), std::invalid_argument);
    CHECK_THROWS_AS(mcts.run_simulations(initial_state(f.spec), 0), std::invalid_argument);
    CHECK_THROWS_AS(Mcts(f.net, f.scale, MctsConfig{0.0, 0.0, 0.3}, 5), std::invalid_argument);
}

TEST_CASE("the second simulation follows the highest prior from a fresh root") {
    Fixture f(testutil::disc_instance(5, 13), /*zero=*/false);
    Mcts mcts(f.net, f.scale, {}, 6);
    auto s0 = initial_state(f.spec);
    mcts.run_simulations(s0, 2);
    const auto* root = mcts.find(s0);
    REQUIRE(root != nullptr);
    CHECK(visit_total(*root) == 1);

    auto [policy, value] = f.net.forward(encode_state(s0), valid_action_mask(s0));
    size_t best = 0;
    for (size_t i = 1; i < policy.size(); ++i)
        if (policy[i] > policy[best]) best = i;
    CHECK(root->m_sa[best] == 1);
}

TEST_CASE("a two-armed choice with a big lifetime gap concentrates visits") {
    // Sensors on a line: relaying through the near sensor roughly doubles
    // the bottleneck lifetime versus both transmitting directly.
    auto spec = testutil::fixed_instance({{500.0, 0.0}, {1000.0, 0.0}});
    Fixture f(spec);
    auto s = apply(initial_state(spec), Action{1, 0});
    REQUIRE(valid_actions(s).size() == 2);

    const double direct =
        terminal_reward(apply(s, Action{2, 0}), f.scale);
    const double relayed =
        terminal_reward(apply(s, Action{2, 1}), f.scale);
    REQUIRE(relayed > direct * 1.4);

    Mcts mcts(f.net, f.scale, {}, 7);
    auto dist = mcts.run_simulations(s, 10000);
    const double share = dist[static_cast<size_t>(action_index(Action{2, 1}, 3))];
    CHECK(share > 0.9);
}

TEST_CASE("equal seeds reproduce the search exactly") {
    Fixture f(testutil::disc_instance(6, 17));
    Mcts a(f.net, f.scale, {}, 8), b(f.net, f.scale, {}, 8), c(f.net, f.scale, {}, 9);
    auto s0 = initial_state(f.spec);
    auto da = a.run_simulations(s0, 300);
    auto db = b.run_simulations(s0, 300);
    CHECK(da == db);
    CHECK(a.node_count() == b.node_count());
    auto dc = c.run_simulations(s0, 300);
    CHECK(da != dc);  // tie breaking differs between seeds on a flat prior
}

TEST_CASE("the tree persists across moves and clear resets it") {
    Fixture f(testutil::disc_instance(5, 19));
    Mcts mcts(f.net, f.scale, {}, 10);
    auto s0 = initial_state(f.spec);
    mcts.run_simulations(s0, 64);
    const size_t after_root = mcts.node_count();
    CHECK(after_root > 1);

    auto s1 = apply(s0, valid_actions(s0)[0]);
    const auto* child = mcts.find(s1);
    REQUIRE(child != nullptr);
    const int kept_visits = child->m_s;
    CHECK(kept_visits > 0);

    mcts.run_simulations(s1, 64);
    const auto* child_after = mcts.find(s1);
    REQUIRE(child_after != nullptr);
    CHECK(child_after->m_s > kept_visits);

    mcts.clear();
    CHECK(mcts.node_count() == 0);
    CHECK(mcts.find(s0) == nullptr);
}

TEST_CASE("transpositions share one node") {
    Fixture f(testutil::disc_instance(5, 23));
    Mcts mcts(f.net, f.scale, {}, 11);
    auto a = apply(apply(initial_state(f.spec), Action{1, 0}), Action{2, 0});
    auto b = apply(apply(initial_state(f.spec), Action{2, 0}), Action{1, 0});
    REQUIRE(a.key() == b.key());
    mcts.run_simulations(a, 32);
    CHECK(mcts.find(a) == mcts.find(b));
    CHECK(mcts.find(b) != nullptr);
}

TEST_CASE("dirichlet root noise keeps a normalized prior over valid actions") {
    Fixture f(testutil::disc_instance(5, 29));
    MctsConfig cfg;
    cfg.dirichlet_eps = 0.3;
    Mcts mcts(f.net, f.scale, cfg, 12);
    auto s0 = initial_state(f.spec);
    mcts.run_simulations(s0, 128);
    const auto* root = mcts.find(s0);
    REQUIRE(root != nullptr);
    double prior_sum = 0.0;
    for (size_t i = 0; i < root->mask.size(); ++i) {
        if (root->mask[i]) {
            CHECK(root->prior[i] > 0.0);
            prior_sum += root->prior[i];
        } else {
            CHECK(root->prior[i] == 0.0);
        }
    }
    CHECK(prior_sum == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(root->m_s == 128);
    CHECK(visit_total(*root) == 127);

    // Noise perturbs the search relative to the noise-free run.
    Mcts plain(f.net, f.scale, {}, 12);
    auto noisy_dist = mcts.run_simulations(s0, 1);
    (void)noisy_dist;
    CHECK(plain.config().dirichlet_eps == 0.0);
    CHECK(mcts.config().dirichlet_eps == 0.3);
}

TEST_CASE("encode mode must match the network input shape") {
    Fixture f(testutil::disc_instance(5, 31));
    CHECK_THROWS_AS(Mcts(f.net, f.scale, {}, 13, EncodeMode::BareAdjacency), std::invalid_argument);

    NetConfig bare = tiny_net(5);
    bare.channels = 1;
    PolicyValueNet bare_net(bare);
    bare_net.zero_weights();
    CHECK_NOTHROW(Mcts(bare_net, f.scale, {}, 13, EncodeMode::BareAdjacency));
    CHECK_THROWS_AS(Mcts(bare_net, f.scale, {}, 13, EncodeMode::Full), std::invalid_argument);
}

TEST_CASE("root stats dump lists one row per valid action") {
    Fixture f(testutil::disc_instance(4, 37));
    Mcts mcts(f.net, f.scale, {}, 14);
    auto s0 = initial_state(f.spec);
    mcts.run_simulations(s0, 32);
    const auto text = mcts.dump_root_stats(s0);
    CHECK(text.find("action,child,parent,prior,q,m_sa,u") != std::string::npos);
    const auto rows = static_cast<size_t>(std::count(text.begin(), text.end(), '\n'));
    CHECK(rows == 1 + valid_actions(s0).size());
}

TEST_SUITE_END();
