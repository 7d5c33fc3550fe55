#include <cmath>
#include <map>
#include <queue>
#include <set>
#include <vector>

#include "doctest.h"
#include "test_util.hpp"
#include "wsnopt/baselines.hpp"
#include "wsnopt/mdp.hpp"
#include "wsnopt/network.hpp"
#include "wsnopt/rng.hpp"

using namespace wsnopt;

namespace {

// Replays a complete topology as a sequence of attach actions in BFS order.
TopologyState replay(const NetworkSpec& spec, const Topology& t) {
    auto state = initial_state(spec);
    std::vector<std::vector<NodeId>> children(static_cast<size_t>(spec.node_count()));
    for (NodeId v = 1; v < spec.node_count(); ++v)
        if (t.parent[static_cast<size_t>(v)] != kNoParent)
            children[static_cast<size_t>(t.parent[static_cast<size_t>(v)])].push_back(v);
    std::queue<NodeId> q;
    q.push(kGateway);
    while (!q.empty()) {
        NodeId u = q.front();
        q.pop();
        for (NodeId v : children[static_cast<size_t>(u)]) {
            state = apply(state, Action{v, u});
            q.push(v);
        }
    }
    return state;
}

}  // namespace

TEST_SUITE_BEGIN("mdp");

TEST_CASE("initial state connects only the gateway") {
    auto spec = testutil::disc_instance(6, 4);
    auto s = initial_state(spec);
    CHECK(s.step() == 0);
    CHECK(s.is_connected(kGateway));
    for (NodeId v = 1; v < 6; ++v) {
        CHECK(!s.is_connected(v));
        CHECK(s.parent_of(v) == kNoParent);
    }
    CHECK(!s.is_terminal());
    CHECK_THROWS_AS(s.to_topology(), std::logic_error);
}

TEST_CASE("valid action count is (unconnected) x (connected) at every step") {
    auto spec = testutil::disc_instance(7, 10);
    Rng rng(3);
    for (int episode = 0; episode < 10; ++episode) {
        auto s = initial_state(spec);
        const int m = spec.active_sensor_count();
        for (int t = 0; t < m; ++t) {
            auto acts = valid_actions(s);
            CHECK(static_cast<int>(acts.size()) == (m - t) * (1 + t));

            auto mask = valid_action_mask(s);
            REQUIRE(mask.size() == static_cast<size_t>(7 * 7));
            size_t mask_count = 0;
            for (auto b : mask) mask_count += b;
            CHECK(mask_count == acts.size());
            for (const auto& a : acts) CHECK(mask[static_cast<size_t>(action_index(a, 7))] == 1);

            s = apply(s, acts[rng.index(acts.size())]);
        }
        CHECK(s.is_terminal());
        CHECK(valid_actions(s).empty());
        CHECK_NOTHROW(validate_topology(spec, s.to_topology()));
    }
}

TEST_CASE("action indexing round trips") {
    const int n = 9;
    for (int flat = 0; flat < n * n; ++flat) {
        auto a = action_from_index(flat, n);
        CHECK(action_index(a, n) == flat);
    }
}

TEST_CASE("apply is pure and rejects illegal attachments") {
    auto spec = testutil::disc_instance(5, 6);
    auto s0 = initial_state(spec);
    auto s1 = apply(s0, Action{1, kGateway});
    CHECK(s0.step() == 0);
    CHECK(!s0.is_connected(1));
    CHECK(s1.step() == 1);
    CHECK(s1.is_connected(1));
    CHECK(s1.parent_of(1) == kGateway);

    CHECK_THROWS_AS(apply(s1, Action{1, kGateway}), std::invalid_argument);   // already connected
    CHECK_THROWS_AS(apply(s1, Action{2, 3}), std::invalid_argument);          // parent not connected
    CHECK_THROWS_AS(apply(s1, Action{99, kGateway}), std::invalid_argument);  // out of range
    CHECK_THROWS_AS(apply(s1, Action{0, 1}), std::invalid_argument);          // gateway as child
}

TEST_CASE("inactive nodes never appear in actions or masks") {
    auto spec = testutil::disc_instance(6, 15);
    spec.active[3] = 0;
    auto s = initial_state(spec);
    const int m = spec.active_sensor_count();
    CHECK(m == 4);
    for (int t = 0; t < m; ++t) {
        auto acts = valid_actions(s);
        CHECK(static_cast<int>(acts.size()) == (m - t) * (1 + t));
        for (const auto& a : acts) {
            CHECK(a.child != 3);
            CHECK(a.parent != 3);
        }
        s = apply(s, acts[0]);
    }
    CHECK(s.is_terminal());
    CHECK(s.parent_of(3) == kNoParent);
    CHECK_THROWS_AS(apply(initial_state(spec), Action{3, kGateway}), std::invalid_argument);
}

TEST_CASE("exhaustive expansion reaches every labeled tree once") {
    auto spec = testutil::disc_instance(4, 40);  // 3 sensors -> 4^2 = 16 trees
    std::map<std::string, int> terminal_keys;
    std::set<std::string> seen;
    std::queue<TopologyState> frontier;
    auto s0 = initial_state(spec);
    frontier.push(s0);
    seen.insert(s0.key());
    while (!frontier.empty()) {
        auto s = frontier.front();
        frontier.pop();
        if (s.is_terminal()) {
            ++terminal_keys[s.key()];
            continue;
        }
        for (const auto& a : valid_actions(s)) {
            auto nxt = apply(s, a);
            if (seen.insert(nxt.key()).second) frontier.push(nxt);
        }
    }
    CHECK(terminal_keys.size() == 16);

    auto spec5 = testutil::disc_instance(5, 41);  // 5^3 = 125 trees
    std::set<std::string> seen5, term5;
    std::queue<TopologyState> q5;
    q5.push(initial_state(spec5));
    seen5.insert(initial_state(spec5).key());
    while (!q5.empty()) {
        auto s = q5.front();
        q5.pop();
        if (s.is_terminal()) {
            term5.insert(s.key());
            continue;
        }
        for (const auto& a : valid_actions(s)) {
            auto nxt = apply(s, a);
            if (seen5.insert(nxt.key()).second) q5.push(nxt);
        }
    }
    CHECK(term5.size() == 125);
}

TEST_CASE("state keys identify parent assignments exactly") {
    auto spec = testutil::disc_instance(5, 50);
    auto a = apply(apply(initial_state(spec), Action{1, 0}), Action{2, 0});
    auto b = apply(apply(initial_state(spec), Action{2, 0}), Action{1, 0});
    CHECK(a.key() == b.key());
    auto c = apply(apply(initial_state(spec), Action{1, 0}), Action{2, 1});
    CHECK(a.key() != c.key());
}

TEST_CASE("terminal reward is the lifetime ratio against the baseline tree") {
    auto spec = testutil::disc_instance(6, 60);
    auto scale = make_reward_scale(spec, LoadsMode::Subtree);
    CHECK(scale.mst_continuous == doctest::Approx(lifetime_deterministic(spec, mst_topology(spec)).continuous));

    Rng rng(5);
    auto s = initial_state(spec);
    while (!s.is_terminal()) {
        auto acts = valid_actions(s);
        s = apply(s, acts[rng.index(acts.size())]);
    }
    const double expect = lifetime_deterministic(spec, s.to_topology()).continuous / scale.mst_continuous;
    CHECK(terminal_reward(s, scale) == doctest::Approx(expect).epsilon(1e-12));

    auto mst_state = replay(spec, mst_topology(spec));
    CHECK(terminal_reward(mst_state, scale) == doctest::Approx(1.0).epsilon(1e-12));

    CHECK_THROWS_AS(terminal_reward(initial_state(spec), scale), std::logic_error);
}

TEST_CASE("encoding has the documented channel layout") {
    auto spec = testutil::fixed_instance({{300.0, 0.0}, {0.0, 400.0}, {500.0, 500.0}});
    const int n = spec.node_count();
    auto s = apply(apply(initial_state(spec), Action{1, 0}), Action{3, 1});
    auto x = encode_state(s, EncodeMode::Full);
    REQUIRE(x.size() == static_cast<size_t>(4 * n * n));
    const auto at = [&](int c, int r, int col) { return x[static_cast<size_t>((c * n + r) * n + col)]; };

    // channel 0: placed directed edges only
    CHECK(at(0, 1, 0) == 1.0);
    CHECK(at(0, 3, 1) == 1.0);
    double edge_sum = 0.0;
    for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c) edge_sum += at(0, r, c);
    CHECK(edge_sum == 2.0);

    // channel 1: connectivity diagonal
    CHECK(at(1, 0, 0) == 1.0);
    CHECK(at(1, 1, 1) == 1.0);
    CHECK(at(1, 3, 3) == 1.0);
    CHECK(at(1, 2, 2) == 0.0);

    // channel 2: normalized symmetric distances, zero diagonal
    CHECK(at(2, 1, 2) == at(2, 2, 1));
    CHECK(at(2, 1, 1) == 0.0);
    double mx = 0.0;
    for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c) mx = std::max(mx, at(2, r, c));
    CHECK(mx == doctest::Approx(1.0));

    // channel 3: row-broadcast energies, gateway row 1
    for (int c = 0; c < n; ++c) {
        CHECK(at(3, 0, c) == 1.0);
        CHECK(at(3, 1, c) == 1.0);  // uniform batteries normalize to 1
    }

    auto bare = encode_state(s, EncodeMode::BareAdjacency);
    REQUIRE(bare.size() == static_cast<size_t>(n * n));
    for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c) CHECK(bare[static_cast<size_t>(r * n + c)] == at(0, r, c));
}

TEST_CASE("encoding zeroes inactive rows and columns everywhere") {
    auto spec = testutil::disc_instance(5, 70);
    spec.active[2] = 0;
    auto s = initial_state(spec);
    auto x = encode_state(s, EncodeMode::Full);
    const int n = 5;
    for (int c = 0; c < 4; ++c)
        for (int k = 0; k < n; ++k) {
            CHECK(x[static_cast<size_t>((c * n + 2) * n + k)] == 0.0);
            CHECK(x[static_cast<size_t>((c * n + k) * n + 2)] == 0.0);
        }
}

TEST_CASE("encoded energies reflect battery differences") {
    auto spec = testutil::fixed_instance({{100.0, 0.0}, {200.0, 0.0}});
    spec.initial_energy[1] = 0.5;
    spec.initial_energy[2] = 2.0;
    auto x = encode_state(initial_state(spec), EncodeMode::Full);
    const int n = 3;
    const auto at = [&](int c, int r, int col) { return x[static_cast<size_t>((c * n + r) * n + col)]; };
    CHECK(at(3, 1, 0) == doctest::Approx(0.25));
    CHECK(at(3, 2, 0) == doctest::Approx(1.0));
    CHECK(at(3, 0, 0) == 1.0);
}

TEST_SUITE_END();
