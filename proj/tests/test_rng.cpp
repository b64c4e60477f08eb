#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <vector>

#include "p2emec/rng.hpp"

using p2emec::RngStream;

TEST_CASE("same seed reproduces the same stream") {
    RngStream a(0);
    RngStream b(0);
    for (int i = 0; i < 1000; ++i) CHECK(a.next_u64() == b.next_u64());
}

TEST_CASE("forked streams are deterministic and label-separated") {
    RngStream root(0);
    RngStream c1 = root.fork("channel");
    RngStream c2 = root.fork("channel");
    RngStream mob = root.fork("mobility");
    bool identical = true;
    bool label_diff = false;
    for (int i = 0; i < 64; ++i) {
        const std::uint64_t x = c1.next_u64();
        identical = identical && (x == c2.next_u64());
        label_diff = label_diff || (x != mob.next_u64());
    }
    CHECK(identical);
    CHECK(label_diff);
}

TEST_CASE("seed separation under the same label") {
    RngStream a = RngStream(0).fork("x");
    RngStream b = RngStream(1).fork("x");
    bool differ = false;
    for (int i = 0; i < 64; ++i) differ = differ || (a.next_u64() != b.next_u64());
    CHECK(differ);
}

TEST_CASE("fork rejects empty labels") {
    RngStream root(7);
    CHECK_THROWS(root.fork(""));
}

// The generator algorithm is pinned; these values were captured once from
// this implementation and must never change across platforms or releases.
TEST_CASE("golden sequence is stable") {
    RngStream s(42);
    const std::vector<std::uint64_t> expected = {
        15021278609987233951ULL, 5881210131331364753ULL,  18149643915985481100ULL,
        12933668939759105464ULL, 14637574242682825331ULL, 10848501901068131965ULL,
        2312344417745909078ULL,  11162538943635311430ULL,
    };
    for (std::uint64_t want : expected) CHECK(s.next_u64() == want);
}

TEST_CASE("uniform stays in range and covers it") {
    RngStream s(3);
    double lo = 1.0, hi = 0.0;
    for (int i = 0; i < 10000; ++i) {
        const double u = s.uniform();
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
        lo = std::min(lo, u);
        hi = std::max(hi, u);
    }
    CHECK(lo < 0.01);
    CHECK(hi > 0.99);
}

TEST_CASE("uniform_index is unbiased enough for small n") {
    RngStream s(11);
    std::vector<int> hist(4, 0);
    const int draws = 40000;
    for (int i = 0; i < draws; ++i) ++hist[s.uniform_index(4)];
    for (int h : hist) CHECK(std::abs(h - draws / 4) < 500);
}

TEST_CASE("normal moments") {
    RngStream s(5);
    double sum = 0.0, sum2 = 0.0;
    const int n = 100000;
    for (int i = 0; i < n; ++i) {
        const double z = s.normal();
        sum += z;
        sum2 += z * z;
    }
    CHECK(std::abs(sum / n) < 0.02);
    CHECK(std::abs(sum2 / n - 1.0) < 0.02);
}

TEST_CASE("complex normal has unit mean square magnitude") {
    RngStream s(6);
    double sum2 = 0.0;
    const int n = 100000;
    for (int i = 0; i < n; ++i) sum2 += std::norm(s.complex_normal());
    CHECK(sum2 / n == doctest::Approx(1.0).epsilon(0.02));
}
