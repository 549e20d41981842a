#include <doctest.h>

#include <algorithm>
#include <set>

#include "harness/rng.hpp"

using harness::bounded_uint;
using harness::draw_without_replacement;

TEST_CASE("bounded_uint stays in range and covers it") {
    std::mt19937_64 rng(42);
    std::set<std::uint64_t> seen;
    for (int i = 0; i < 2000; ++i) {
        std::uint64_t v = bounded_uint(rng, 7);
        CHECK(v < 7);
        seen.insert(v);
    }
    CHECK(seen.size() == 7);
}

TEST_CASE("bounded_uint is a pure function of the stream") {
    std::mt19937_64 a(123);
    std::mt19937_64 b(123);
    for (int i = 0; i < 100; ++i) CHECK(bounded_uint(a, 1000) == bounded_uint(b, 1000));
}

TEST_CASE("draw_without_replacement yields distinct indices in range") {
    auto drawn = draw_without_replacement(50, 20, 7);
    REQUIRE(drawn.size() == 20);
    std::set<std::size_t> unique(drawn.begin(), drawn.end());
    CHECK(unique.size() == 20);
    for (std::size_t idx : drawn) CHECK(idx < 50);
}

TEST_CASE("draw_without_replacement is deterministic per seed") {
    CHECK(draw_without_replacement(100, 10, 5) == draw_without_replacement(100, 10, 5));
    CHECK(draw_without_replacement(100, 10, 5) != draw_without_replacement(100, 10, 6));
}

TEST_CASE("draw_without_replacement with k = count is a permutation") {
    auto drawn = draw_without_replacement(10, 10, 3);
    std::sort(drawn.begin(), drawn.end());
    for (std::size_t i = 0; i < 10; ++i) CHECK(drawn[i] == i);
}

TEST_CASE("draw_without_replacement clamps oversized requests") {
    auto drawn = draw_without_replacement(4, 9, 1);
    REQUIRE(drawn.size() == 4);
    std::set<std::size_t> unique(drawn.begin(), drawn.end());
    CHECK(unique.size() == 4);
}

TEST_CASE("draw_without_replacement of zero is empty") {
    CHECK(draw_without_replacement(10, 0, 1).empty());
    CHECK(draw_without_replacement(0, 0, 1).empty());
}
