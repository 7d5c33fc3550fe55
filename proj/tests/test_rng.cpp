#include <algorithm>
#include <cmath>
#include <cstdint>
#include <set>
#include <vector>

#include "doctest.h"
#include "wsnopt/rng.hpp"

using namespace wsnopt;

TEST_SUITE_BEGIN("rng");

TEST_CASE("same seed reproduces every draw kind") {
    Rng a(42), b(42);
    for (int i = 0; i < 200; ++i) {
        CHECK(a.next_u64() == b.next_u64());
        CHECK(a.uniform_real() == b.uniform_real());
        CHECK(a.uniform_int(-50, 50) == b.uniform_int(-50, 50));
        CHECK(a.index(17) == b.index(17));
        CHECK(a.normal() == b.normal());
        CHECK(a.gamma(0.3) == b.gamma(0.3));
    }
}

TEST_CASE("different seeds diverge") {
    Rng a(1), b(2);
    int same = 0;
    for (int i = 0; i < 64; ++i)
        if (a.next_u64() == b.next_u64()) ++same;
    CHECK(same == 0);
}

TEST_CASE("uniform_real stays in [0,1) and covers the range") {
    Rng r(7);
    double lo = 1.0, hi = 0.0, sum = 0.0;
    const int n = 20000;
    for (int i = 0; i < n; ++i) {
        const double u = r.uniform_real();
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
        lo = std::min(lo, u);
        hi = std::max(hi, u);
        sum += u;
    }
    CHECK(lo < 0.01);
    CHECK(hi > 0.99);
    CHECK(sum / n == doctest::Approx(0.5).epsilon(0.02));
}

TEST_CASE("uniform_int is inclusive on both ends and rejects bad ranges") {
    Rng r(9);
    std::set<int64_t> seen;
    for (int i = 0; i < 2000; ++i) {
        const int64_t v = r.uniform_int(-2, 3);
        CHECK(v >= -2);
        CHECK(v <= 3);
        seen.insert(v);
    }
    CHECK(seen.size() == 6);
    CHECK(r.uniform_int(5, 5) == 5);
    CHECK_THROWS_AS(r.uniform_int(2, 1), std::invalid_argument);
}

TEST_CASE("index covers [0,n) uniformly enough") {
    Rng r(11);
    std::vector<int> counts(8, 0);
    const int n = 16000;
    for (int i = 0; i < n; ++i) ++counts[r.index(8)];
    for (int c : counts) CHECK(std::abs(c - n / 8) < 300);
    CHECK_THROWS_AS(r.index(0), std::invalid_argument);
}

TEST_CASE("normal has the right first two moments") {
    Rng r(13);
    const int n = 50000;
    double s1 = 0.0, s2 = 0.0;
    for (int i = 0; i < n; ++i) {
        const double x = r.normal();
        s1 += x;
        s2 += x * x;
    }
    CHECK(s1 / n == doctest::Approx(0.0).epsilon(1.0).scale(0.02));
    CHECK(s2 / n == doctest::Approx(1.0).epsilon(0.03));
}

TEST_CASE("gamma matches mean and variance of the shape parameter") {
    Rng r(17);
    for (double shape : {0.5, 1.0, 3.0}) {
        const int n = 60000;
        double s1 = 0.0, s2 = 0.0;
        for (int i = 0; i < n; ++i) {
            const double x = r.gamma(shape);
            CHECK(x > 0.0);
            s1 += x;
            s2 += x * x;
        }
        const double mean = s1 / n;
        const double var = s2 / n - mean * mean;
        CHECK(mean == doctest::Approx(shape).epsilon(0.05));
        CHECK(var == doctest::Approx(shape).epsilon(0.10));
    }
    CHECK_THROWS_AS(r.gamma(0.0), std::invalid_argument);
    CHECK_THROWS_AS(r.gamma(-1.0), std::invalid_argument);
}

TEST_CASE("shuffle yields a permutation and is seed-deterministic") {
    std::vector<int> v(50);
    for (int i = 0; i < 50; ++i) v[i] = i;
    std::vector<int> w = v;
    Rng a(23), b(23);
    a.shuffle(v);
    b.shuffle(w);
    CHECK(v == w);
    std::vector<int> sorted = v;
    std::sort(sorted.begin(), sorted.end());
    for (int i = 0; i < 50; ++i) CHECK(sorted[static_cast<size_t>(i)] == i);

    // All 6 orderings of a 3-element shuffle show up.
    std::set<std::vector<int>> orders;
    for (uint64_t s = 0; s < 60; ++s) {
        std::vector<int> t{0, 1, 2};
        Rng r(s);
        r.shuffle(t);
        orders.insert(t);
    }
    CHECK(orders.size() == 6);
}

TEST_CASE("derive_seed separates roles and arguments") {
    const uint64_t root = 99;
    std::set<uint64_t> seen;
    seen.insert(derive_seed(root, "alpha"));
    seen.insert(derive_seed(root, "beta"));
    seen.insert(derive_seed(root, "alpha", 1));
    seen.insert(derive_seed(root, "alpha", 2));
    seen.insert(derive_seed(root, "alpha", 1, 1));
    seen.insert(derive_seed(root + 1, "alpha"));
    CHECK(seen.size() == 6);
    CHECK(derive_seed(root, "alpha", 3, 4) == derive_seed(root, "alpha", 3, 4));
}

TEST_SUITE_END();
