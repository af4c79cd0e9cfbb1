#include "doctest.h"

#include <cmath>
#include <vector>

#include "slfv/rng.hpp"
#include "slfv/stats.hpp"

using namespace slfv;

TEST_CASE("seed keys are deterministic and labels split streams") {
    const SeedKey a(42);
    const SeedKey b(42);
    CHECK(a.raw() == b.raw());
    CHECK(a.child("x").raw() == b.child("x").raw());
    CHECK(a.child("x").raw() != a.child("y").raw());
    CHECK(a.child(1).raw() != a.child(2).raw());
    CHECK(a.child(1).child(2).raw() != a.child(2).child(1).raw());

    Rng r1(a.child("stream"));
    Rng r2(b.child("stream"));
    for (int i = 0; i < 100; ++i) CHECK(r1.next_u64() == r2.next_u64());
}

TEST_CASE("uniform01 stays in [0,1) with the right mean") {
    Rng rng(SeedKey(7).child("u"));
    double sum = 0.0;
    const int n = 100000;
    for (int i = 0; i < n; ++i) {
        const double u = rng.uniform01();
        REQUIRE(u >= 0.0);
        REQUIRE(u < 1.0);
        sum += u;
    }
    // SE of the mean is 1/sqrt(12 n)
    CHECK(std::abs(sum / n - 0.5) < 3.0 / std::sqrt(12.0 * n));
}

TEST_CASE("exponential and normal moments") {
    Rng rng(SeedKey(11).child("m"));
    const int n = 100000;
    double esum = 0.0, nsum = 0.0, nsq = 0.0;
    for (int i = 0; i < n; ++i) {
        esum += rng.exponential(2.0);
        const double z = rng.normal();
        nsum += z;
        nsq += z * z;
    }
    CHECK(std::abs(esum / n - 0.5) < 3.0 * 0.5 / std::sqrt(n));
    CHECK(std::abs(nsum / n) < 3.0 / std::sqrt(n));
    CHECK(std::abs(nsq / n - 1.0) < 3.0 * std::sqrt(2.0 / n));
}

TEST_CASE("poisson sampling matches the law on both algorithm branches") {
    // 8 exercises the Knuth branch, 60 the PTRS branch.
    for (const double mean : {8.0, 60.0}) {
        Rng rng(SeedKey(13).child(static_cast<std::uint64_t>(mean)));
        std::vector<double> counts;
        for (int i = 0; i < 20000; ++i)
            counts.push_back(static_cast<double>(rng.poisson(mean)));
        CHECK(stats::poisson_fit_pvalue(counts, mean) > 0.01);
    }
}

TEST_CASE("beta and gamma moments") {
    Rng rng(SeedKey(17).child("beta"));
    const int n = 50000;
    double bsum = 0.0, gsum = 0.0;
    for (int i = 0; i < n; ++i) {
        bsum += rng.beta(2.0, 3.0);
        gsum += rng.gamma(0.7);
    }
    CHECK(std::abs(bsum / n - 0.4) < 0.01);
    CHECK(std::abs(gsum / n - 0.7) < 3.0 * std::sqrt(0.7 / n));
}

TEST_CASE("discrete respects weights") {
    Rng rng(SeedKey(19).child("d"));
    const double w[3] = {1.0, 2.0, 1.0};
    int hits[3] = {0, 0, 0};
    const int n = 40000;
    for (int i = 0; i < n; ++i) ++hits[rng.discrete(w, 3)];
    CHECK(std::abs(hits[1] / static_cast<double>(n) - 0.5) < 0.01);
    CHECK(std::abs(hits[0] / static_cast<double>(n) - 0.25) < 0.01);
}
