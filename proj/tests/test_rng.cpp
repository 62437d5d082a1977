#include <catch2/catch_amalgamated.hpp>

#include "coopdrive/rng.hpp"

using namespace coopdrive;

TEST_CASE("rng streams are deterministic and independent") {
    RngStream a(42), b(42);
    for (int i = 0; i < 100; ++i) REQUIRE(a.next_u64() == b.next_u64());

    RngStream base(7);
    RngStream s1 = base.substream(1);
    RngStream s2 = base.substream(2);
    REQUIRE(s1.next_u64() != s2.next_u64());
}

TEST_CASE("u01 stays in [0, 1)") {
    RngStream rng(3);
    for (int i = 0; i < 10000; ++i) {
        const double u = rng.next_u01();
        REQUIRE(u >= 0.0);
        REQUIRE(u < 1.0);
    }
}

TEST_CASE("normal draws have the right first two moments") {
    RngStream rng(11);
    const int n = 200000;
    double sum = 0.0, sum2 = 0.0;
    for (int i = 0; i < n; ++i) {
        const double x = rng.normal();
        sum += x;
        sum2 += x * x;
    }
    const double mean = sum / n;
    const double var = sum2 / n - mean * mean;
    REQUIRE(std::abs(mean) < 0.01);
    REQUIRE(std::abs(var - 1.0) < 0.02);
}

TEST_CASE("bernoulli hit rate matches p") {
    RngStream rng(13);
    int hits = 0;
    const int n = 100000;
    for (int i = 0; i < n; ++i) hits += rng.bernoulli(0.05) ? 1 : 0;
    // 3 sigma of Binomial(1e5, 0.05)
    REQUIRE(std::abs(hits - 5000) < 3.0 * std::sqrt(100000 * 0.05 * 0.95));
}
