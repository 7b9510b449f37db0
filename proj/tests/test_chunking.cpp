// Copyright (C) 2026 The longdoc-rank Authors
// SPDX-License-Identifier: Apache-2.0

#include "doctest.h"

#include <algorithm>

#include "ldr/chunking.hpp"
#include "ldr/rng.hpp"

using namespace ldr;

namespace {

std::vector<std::pair<std::size_t, std::size_t>> ranges(const std::vector<Chunk>& chunks) {
    std::vector<std::pair<std::size_t, std::size_t>> out;
    for (const auto& c : chunks) {
        out.emplace_back(c.begin, c.end);
    }
    return out;
}

TokenSeq seq(std::size_t n, int id = 7) {
    TokenSeq t;
    for (std::size_t i = 0; i < n; ++i) {
        t.ids.push_back(id + static_cast<int>(i % 5));
        t.offsets.emplace_back(i, i + 1);
    }
    return t;
}

}  // namespace

TEST_CASE("greedy partition examples") {
    auto c = greedy_partition(1431, 477, 3);
    REQUIRE(c.size() == 3);
    for (const auto& ch : c) {
        CHECK(ch.size() == 477);
    }
    CHECK(ranges(greedy_partition(500, 477, 3)) == decltype(ranges(c)){{0, 477}, {477, 500}});
    CHECK(ranges(greedy_partition(100, 477, 3)) == decltype(ranges(c)){{0, 100}});
    CHECK_THROWS_WITH(greedy_partition(0, 477, 3), doctest::Contains("empty document"));
    CHECK(greedy_partition(5000, 477, 3).back().end == 1431);
}

TEST_CASE("sliding window examples") {
    using R = std::vector<std::pair<std::size_t, std::size_t>>;
    CHECK(ranges(sliding_window(10, 4, 3, 10)) == R{{0, 4}, {3, 7}, {6, 10}, {9, 10}});
    CHECK(ranges(sliding_window(4, 4, 3, 10)) == R{{0, 4}});
    const auto c = sliding_window(1431, 150, 100, 100);
    REQUIRE(c.size() == 15);
    CHECK(c.back().size() == 31);
    CHECK_THROWS_WITH(sliding_window(10, 3, 4, 5), doctest::Contains("stride exceeds window"));
    CHECK(sliding_window(1431, 150, 100, 3).size() == 3);
}

TEST_CASE("property: greedy coverage, sliding offsets, degeneration") {
    Rng rng(2024);
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t n = 1 + rng.below(3000);
        const std::size_t cap = 1 + rng.below(600);
        const std::size_t max_chunks = 1 + rng.below(6);
        const auto g = greedy_partition(n, cap, max_chunks);
        std::size_t pos = 0;
        for (std::size_t i = 0; i < g.size(); ++i) {
            CHECK(g[i].index == i);
            CHECK(g[i].begin == pos);
            CHECK(g[i].end > g[i].begin);
            CHECK(g[i].size() <= cap);
            if (i + 1 < g.size()) {
                CHECK(g[i].size() == cap);
            }
            pos = g[i].end;
        }
        CHECK(pos == std::min(n, cap * max_chunks));

        const std::size_t window = 1 + rng.below(600);
        const std::size_t stride = 1 + rng.below(window);
        const auto s = sliding_window(n, window, stride, max_chunks);
        std::size_t expected = 0;
        while (expected < max_chunks && expected * stride < n) {
            ++expected;
        }
        if (n <= window) {
            expected = 1;
        }
        REQUIRE(s.size() == expected);
        for (std::size_t i = 0; i < s.size(); ++i) {
            CHECK(s[i].begin == i * stride);
            CHECK(s[i].end == std::min(i * stride + window, n));
        }
        CHECK(ranges(sliding_window(n, cap, cap, max_chunks)) == ranges(g));
    }
}

TEST_CASE("assemble follows the [CLS] q [SEP] d [SEP] template") {
    const Vocab v;
    TokenSeq q = seq(1, 20);
    const auto pq = prepare_query(v, q, 32);
    const auto doc = seq(1431);
    auto input = assemble(pq, doc, greedy_partition(doc, 477, 3), v, 512);
    REQUIRE(input.count() == 3);
    CHECK(input.query_len == 32);
    for (const auto& ids : input.ids) {
        CHECK(ids.size() == 512);
        CHECK(ids[0] == Vocab::kCls);
        CHECK(ids[33] == Vocab::kSep);
        CHECK(ids.back() == Vocab::kSep);
    }
    for (std::size_t i = 0; i < 33; ++i) {
        CHECK(input.ids[0][i] == input.ids[2][i]);
    }
    CHECK(input.masks[0][1] == 1);
    CHECK(input.masks[0][2] == 0);
    CHECK(input.masks[0][34] == 1);

    const auto tiny = assemble(pq, seq(1), greedy_partition(1, 477, 3), v, 512);
    CHECK(tiny.ids[0].size() == 36);
    CHECK(std::count(tiny.masks[0].begin(), tiny.masks[0].end(), 0) == 31);
}

TEST_CASE("assemble errors") {
    const Vocab v;
    const auto pq = prepare_query(v, seq(3), 32);
    CHECK_THROWS(assemble(pq, seq(10), {}, v, 512));
    const auto doc = seq(1000);
    std::vector<Chunk> bad = {{0, 10, 0}, {10, 600, 1}};
    CHECK_THROWS_WITH(assemble(pq, doc, bad, v, 512), doctest::Contains("1"));
}

TEST_CASE("FirstP input equals chunk 0 of the multi-chunk input") {
    const Vocab v;
    const auto pq = prepare_query(v, seq(5, 30), 32);
    Rng rng(8);
    for (int trial = 0; trial < 50; ++trial) {
        const auto doc = seq(1 + rng.below(2000), 9);
        const auto first = assemble(pq, doc, greedy_partition(doc, 477, 1), v, 512);
        const auto multi = assemble(pq, doc, greedy_partition(doc, 477, 3), v, 512);
        CHECK(first.ids[0] == multi.ids[0]);
        CHECK(first.masks[0] == multi.masks[0]);
    }
}
