// Copyright (C) 2026 The longdoc-rank Authors
// SPDX-License-Identifier: Apache-2.0

#include "doctest.h"

#include <cmath>

#include "gradcheck.hpp"
#include "ldr/encoder.hpp"
#include "ldr/params.hpp"

using namespace ldr;

namespace {

using Matrix = std::vector<std::uint8_t>;

bool at(const Matrix& m, std::size_t n, std::size_t i, std::size_t j) { return m[i * n + j] != 0; }

EncoderConfig small_config(std::size_t dim = 8, std::size_t layers = 2) {
    EncoderConfig c;
    c.vocab_size = 20;
    c.layers = layers;
    c.heads = 2;
    c.model_dim = dim;
    c.ff_dim = 2 * dim;
    c.max_seq = 16;
    c.dropout = 0.0;
    c.init_std = 0.5;
    return c;
}

std::vector<double> row(const ad::Tensor& t, std::size_t r) {
    const auto d = t.dim(1);
    const auto data = t.data();
    return {data.begin() + static_cast<std::ptrdiff_t>(r * d), data.begin() + static_cast<std::ptrdiff_t>((r + 1) * d)};
}

}  // namespace

TEST_CASE("cls_only window 1 gives identity plus row and column 0") {
    AttentionPattern p;
    p.kind = AttentionKind::sparse;
    p.local_window = 1;
    const auto m = build_attention_allow_matrix(p, 4, 0);
    for (std::size_t i = 0; i < 4; ++i) {
        for (std::size_t j = 0; j < 4; ++j) {
            CHECK(at(m, 4, i, j) == (i == j || i == 0 || j == 0));
        }
    }
}

TEST_CASE("dilated band allows distances that are multiples of the rate") {
    AttentionPattern p;
    p.kind = AttentionKind::sparse;
    p.local_window = 3;
    p.scatter.kind = Scatter::Kind::dilated;
    p.scatter.rate = 2;
    const std::size_t n = 9;
    const auto m = build_attention_allow_matrix(p, n, 0);
    for (std::size_t i = 1; i < n; ++i) {
        for (std::size_t j = 1; j < n; ++j) {
            const std::size_t dist = i > j ? i - j : j - i;
            const bool expected = dist == 0 || dist == 2 || dist == 4;
            CHECK(at(m, n, i, j) == expected);
        }
    }
}

TEST_CASE("random scatter is deterministic and symmetric") {
    AttentionPattern p;
    p.kind = AttentionKind::sparse;
    p.local_window = 1;
    p.scatter.kind = Scatter::Kind::random;
    p.scatter.k = 2;
    p.scatter.seed = 17;
    const std::size_t n = 12;
    const auto a = build_attention_allow_matrix(p, n, 0, 1);
    CHECK(a == build_attention_allow_matrix(p, n, 0, 1));
    std::size_t extra = 0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            CHECK(at(a, n, i, j) == at(a, n, j, i));
            extra += (i != j && i != 0 && j != 0 && at(a, n, i, j)) ? 1 : 0;
        }
    }
    CHECK(extra > 0);
    p.scatter.seed = 18;
    CHECK(a != build_attention_allow_matrix(p, n, 0, 1));
}

TEST_CASE("cls_and_query makes the query block global") {
    AttentionPattern p;
    p.kind = AttentionKind::sparse;
    p.local_window = 2;
    p.global = GlobalTokens::cls_and_query;
    const std::size_t n = 64;
    const auto m = build_attention_allow_matrix(p, n, 32);
    for (std::size_t g = 0; g <= 32; ++g) {
        for (std::size_t j = 0; j < n; ++j) {
            CHECK(at(m, n, g, j));
            CHECK(at(m, n, j, g));
        }
    }
    CHECK_FALSE(at(m, n, 40, 50));
    CHECK(at(m, n, 40, 41));
}

TEST_CASE("attention weights over the allowed set sum to one and are zero elsewhere") {
    AttentionPattern p;
    p.kind = AttentionKind::sparse;
    p.local_window = 2;
    p.scatter.kind = Scatter::Kind::random;
    p.scatter.k = 1;
    p.scatter.seed = 3;
    const std::size_t n = 10;
    const auto allow = build_attention_allow_matrix(p, n, 0);
    Rng rng(5);
    const auto logits = testing::random_leaf({n, n}, rng, 4.0);
    const auto w = ad::masked_softmax(logits, allow);
    const auto data = w.data();
    for (std::size_t i = 0; i < n; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            if (allow[i * n + j] == 0) {
                CHECK(data[i * n + j] == 0.0);
            }
            s += data[i * n + j];
        }
        CHECK(std::fabs(s - 1.0) < 1e-12);
    }
}

TEST_CASE("encode returns the [CLS] row and rejects long inputs") {
    ParameterSet params;
    Rng rng(1);
    const auto cfg = small_config();
    Encoder enc(cfg, params, rng);
    const std::vector<int> ids = {2, 5, 6, 3, 7, 8, 3};
    const std::vector<std::uint8_t> mask(ids.size(), 1);
    const auto out = enc.encode(ids, mask, 1);
    CHECK(out.token_vectors.dim(0) == ids.size());
    CHECK(out.token_vectors.dim(1) == cfg.model_dim);
    CHECK(row(out.token_vectors, 0) == std::vector<double>(out.cls_vector.data().begin(), out.cls_vector.data().end()));
    const std::vector<int> long_ids(17, 5);
    const std::vector<std::uint8_t> long_mask(17, 1);
    CHECK_THROWS_WITH(enc.encode(long_ids, long_mask, 1), doctest::Contains("max_seq"));
}

TEST_CASE("PAD positions do not influence non-PAD outputs") {
    ParameterSet params;
    Rng rng(2);
    Encoder enc(small_config(), params, rng);
    std::vector<int> ids = {2, 5, 0, 3, 7, 8, 3};
    const std::vector<std::uint8_t> mask = {1, 1, 0, 1, 1, 1, 1};
    const auto a = enc.encode(ids, mask, 2);
    ids[2] = 11;
    const auto b = enc.encode(ids, mask, 2);
    for (std::size_t r : {0, 1, 3, 4, 5, 6}) {
        CHECK(row(a.token_vectors, r) == row(b.token_vectors, r));
    }
}

TEST_CASE("disallowed keys do not influence a one-layer output") {
    ParameterSet params;
    Rng rng(3);
    auto cfg = small_config(8, 1);
    cfg.attention.kind = AttentionKind::sparse;
    cfg.attention.local_window = 1;
    Encoder enc(cfg, params, rng);
    std::vector<int> ids = {2, 5, 6, 7, 8, 9};
    const std::vector<std::uint8_t> mask(ids.size(), 1);
    const auto a = enc.encode(ids, mask, 0);
    ids[4] = 12;
    const auto b = enc.encode(ids, mask, 0);
    CHECK(row(a.token_vectors, 2) == row(b.token_vectors, 2));
    CHECK(row(a.token_vectors, 0) != row(b.token_vectors, 0));
}

TEST_CASE("fully permissive sparse attention equals dense bit for bit") {
    for (auto global : {GlobalTokens::cls_only, GlobalTokens::cls_and_query}) {
        auto dense_cfg = small_config();
        auto sparse_cfg = dense_cfg;
        sparse_cfg.attention.kind = AttentionKind::sparse;
        sparse_cfg.attention.local_window = 16;
        sparse_cfg.attention.global = global;
        ParameterSet pa;
        ParameterSet pb;
        Rng ra(9);
        Rng rb(9);
        Encoder dense(dense_cfg, pa, ra);
        Encoder sparse(sparse_cfg, pb, rb);
        const std::vector<int> ids = {2, 5, 6, 3, 7, 8, 9, 10, 0, 3};
        const std::vector<std::uint8_t> mask = {1, 1, 1, 1, 1, 1, 1, 1, 0, 1};
        const auto a = dense.encode(ids, mask, 2);
        const auto b = sparse.encode(ids, mask, 2);
        const auto da = a.token_vectors.data();
        const auto db = b.token_vectors.data();
        CHECK(std::equal(da.begin(), da.end(), db.begin(), db.end()));
    }
}

TEST_CASE("encoder gradients match finite differences") {
    ParameterSet params;
    Rng rng(4);
    auto cfg = small_config(8, 2);
    cfg.attention.kind = AttentionKind::sparse;
    cfg.attention.local_window = 2;
    Encoder enc(cfg, params, rng);
    const std::vector<int> ids = {2, 5, 6, 3, 7, 0};
    const std::vector<std::uint8_t> mask = {1, 1, 1, 1, 1, 0};
    const auto r = testing::random_projection({ids.size(), cfg.model_dim}, rng);
    std::vector<ad::Tensor> leaves;
    for (const auto& e : params.entries()) {
        leaves.push_back(e.tensor);
    }
    const auto result = testing::check_gradients(
        [&] { return testing::project(enc.encode(ids, mask, 1).token_vectors, r); }, leaves, 1e-5, 1e-4);
    CHECK(result.checked > 500);
    CHECK(result.max_rel_error < 1e-4);
}

TEST_CASE("encoder config validation") {
    auto cfg = small_config();
    cfg.heads = 3;
    CHECK_THROWS(cfg.validate());
    cfg = small_config();
    cfg.attention.kind = AttentionKind::sparse;
    cfg.attention.local_window = 0;
    CHECK_THROWS(cfg.validate());
    cfg = small_config();
    cfg.attention.scatter.kind = Scatter::Kind::dilated;
    cfg.attention.scatter.rate = 0;
    CHECK_THROWS(cfg.validate());
}
