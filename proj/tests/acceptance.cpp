// Copyright (C) 2026 The longdoc-rank Authors
// SPDX-License-Identifier: Apache-2.0

// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion
// and exits nonzero if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "gradcheck.hpp"
#include "ldr/aggregators.hpp"
#include "ldr/chunking.hpp"
#include "ldr/config.hpp"
#include "ldr/encoder.hpp"
#include "ldr/evaluation.hpp"
#include "ldr/experiment.hpp"
#include "ldr/position_analysis.hpp"
#include "ldr/ranker.hpp"
#include "ldr/synthetic.hpp"
#include "ldr/training.hpp"

using namespace ldr;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(double v, int precision = 4) {
    std::ostringstream s;
    s.precision(precision);
    s << v;
    return s.str();
}

fs::path fresh_dir(const std::string& name) {
    const auto dir = fs::temp_directory_path() / ("ldr_acceptance_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

std::vector<std::pair<std::string, std::string>> tree(const fs::path& root) {
    std::vector<std::pair<std::string, std::string>> files;
    for (const auto& e : fs::recursive_directory_iterator(root)) {
        if (e.is_regular_file()) {
            files.emplace_back(fs::relative(e.path(), root).string(), slurp(e.path()));
        }
    }
    std::sort(files.begin(), files.end());
    return files;
}

TokenSeq token_seq(const std::vector<int>& ids) {
    TokenSeq t;
    for (std::size_t i = 0; i < ids.size(); ++i) {
        t.ids.push_back(ids[i]);
        t.offsets.emplace_back(i, i + 1);
    }
    return t;
}

std::vector<int> random_ids(Rng& rng, std::size_t n, int lo, int hi) {
    std::vector<int> ids(n);
    for (auto& id : ids) {
        id = lo + static_cast<int>(rng.below(static_cast<std::uint64_t>(hi - lo)));
    }
    return ids;
}

// ---------------------------------------------------------------------------
// 1. Gradient integrity

struct GradTracker {
    double worst = 0.0;
    std::string worst_name;
    std::size_t checks = 0;

    void add(const std::string& name, const testing::GradCheck& r) {
        ++checks;
        if (r.checked == 0 || !(r.max_rel_error < 1e-4)) {
            worst = std::max(worst, r.checked == 0 ? 1.0 : r.max_rel_error);
            worst_name = name;
        } else if (r.max_rel_error > worst) {
            worst = r.max_rel_error;
            worst_name = name;
        }
    }
};

void check_op(GradTracker& tracker, const std::string& name,
              const std::function<ad::Tensor(const std::vector<ad::Tensor>&)>& op,
              const std::vector<ad::Shape>& shapes, Rng& rng, double scale = 1.0) {
    std::vector<ad::Tensor> leaves;
    for (const auto& s : shapes) {
        leaves.push_back(testing::random_leaf(s, rng, scale));
    }
    const auto r = testing::random_projection(op(leaves).shape(), rng);
    tracker.add(name, testing::check_gradients([&] { return testing::project(op(leaves), r); }, leaves));
}

void op_config(GradTracker& t, Rng& rng) {
    const std::size_t a = 1 + rng.below(3);
    const std::size_t b = 2 + rng.below(3);
    const std::size_t c = 2 + rng.below(4);
    check_op(t, "add", [](const auto& x) { return ad::add(x[0], x[1]); }, {{a, b, c}, {b, c}}, rng);
    check_op(t, "sub", [](const auto& x) { return ad::sub(x[0], x[1]); }, {{a, b, c}, {c}}, rng);
    check_op(t, "mul", [](const auto& x) { return ad::mul(x[0], x[1]); }, {{b, c}, {a, b, c}}, rng);
    check_op(t, "div", [](const auto& x) { return ad::div(x[0], ad::add_scalar(ad::exp(x[1]), 0.5)); },
             {{b, c}, {b, 1}}, rng);
    const double factor = 4.0 * rng.uniform() - 2.0;
    check_op(t, "scale", [factor](const auto& x) { return ad::scale(x[0], factor); }, {{b, c}}, rng);
    check_op(t, "exp", [](const auto& x) { return ad::exp(x[0]); }, {{b, c}}, rng);
    check_op(t, "log", [](const auto& x) { return ad::log(ad::add_scalar(ad::mul(x[0], x[0]), 0.3)); }, {{b, c}},
             rng);
    check_op(t, "sqrt", [](const auto& x) { return ad::sqrt(ad::add_scalar(ad::mul(x[0], x[0]), 0.2)); }, {{b, c}},
             rng);
    check_op(t, "relu", [](const auto& x) { return ad::relu(x[0]); }, {{b, c}}, rng);
    check_op(t, "tanh", [](const auto& x) { return ad::tanh(x[0]); }, {{b, c}}, rng);
    check_op(t, "gelu", [](const auto& x) { return ad::gelu(x[0]); }, {{b, c}}, rng, 3.0);
    check_op(t, "matmul", [](const auto& x) { return ad::matmul(x[0], x[1]); }, {{a, b, c}, {c, b}}, rng);
    check_op(t, "matmul_batched", [](const auto& x) { return ad::matmul(x[0], x[1]); }, {{a, b, c}, {a, c, 2}},
             rng);
    check_op(t, "transpose", [](const auto& x) { return ad::transpose(x[0]); }, {{a, b, c}}, rng);
    check_op(t, "reshape", [a, b, c](const auto& x) { return ad::reshape(x[0], {a * b, c}); }, {{a, b, c}}, rng);
    check_op(t, "softmax", [](const auto& x) { return ad::softmax(x[0], -1); }, {{a, b, c}}, rng, 3.0);
    check_op(t, "softmax_axis0", [](const auto& x) { return ad::softmax(x[0], 0); }, {{b, c}}, rng, 3.0);
    check_op(t, "layer_norm", [](const auto& x) { return ad::layer_norm(x[0], -1, 1e-12); }, {{b, c}}, rng);
    check_op(
        t, "concat",
        [](const auto& x) {
            const std::vector<ad::Tensor> parts = {x[0], x[1]};
            return ad::concat(parts, 0);
        },
        {{a, c}, {b, c}}, rng);
    const std::size_t lo = rng.below(c - 1);
    check_op(t, "slice", [lo, c](const auto& x) { return ad::slice(x[0], 1, lo, c); }, {{b, c}}, rng);
    check_op(t, "sum", [](const auto& x) { return ad::sum(x[0], 1); }, {{a, b, c}}, rng);
    check_op(t, "mean", [](const auto& x) { return ad::mean(x[0], 0, true); }, {{b, c}}, rng);
    check_op(t, "max", [](const auto& x) { return ad::max(x[0], -1); }, {{b, c}}, rng);
    const auto seed = rng.below(1000);
    check_op(t, "dropout", [seed](const auto& x) { return ad::dropout(x[0], 0.3, seed, true); }, {{b, c}}, rng);
    const auto ids = random_ids(rng, b + 2, 0, static_cast<int>(c));
    check_op(t, "embedding_lookup", [ids](const auto& x) { return ad::embedding_lookup(x[0], ids); }, {{c, b}}, rng);
    std::vector<std::uint8_t> allow(c * c);
    for (std::size_t i = 0; i < c; ++i) {
        for (std::size_t j = 0; j < c; ++j) {
            allow[i * c + j] = (i == j || rng.below(2) == 0) ? 1 : 0;
        }
    }
    check_op(t, "masked_softmax", [allow](const auto& x) { return ad::masked_softmax(x[0], allow); }, {{a, c, c}},
             rng, 3.0);
}

void encoder_config(GradTracker& t, Rng& rng, std::size_t index) {
    EncoderConfig cfg;
    cfg.vocab_size = 12;
    cfg.layers = 2;
    cfg.heads = 2;
    cfg.model_dim = 8;
    cfg.ff_dim = 16;
    cfg.max_seq = 12;
    cfg.dropout = 0.0;
    cfg.init_std = 0.5;
    switch (index % 4) {
        case 0: break;
        case 1:
            cfg.attention.kind = AttentionKind::sparse;
            cfg.attention.local_window = 1 + rng.below(3);
            break;
        case 2:
            cfg.attention.kind = AttentionKind::sparse;
            cfg.attention.local_window = 2;
            cfg.attention.global = GlobalTokens::cls_and_query;
            cfg.attention.scatter = {Scatter::Kind::random, 1, rng.below(100), 1};
            break;
        default:
            cfg.attention.kind = AttentionKind::sparse;
            cfg.attention.local_window = 3;
            cfg.attention.scatter = {Scatter::Kind::dilated, 0, 0, 2};
            break;
    }
    ParameterSet params;
    Encoder enc(cfg, params, rng);
    const std::size_t n = 4 + rng.below(4);
    const auto ids = random_ids(rng, n, 4, 12);
    std::vector<std::uint8_t> mask(n, 1);
    mask[n - 1] = rng.below(2) == 0 ? 0 : 1;
    const std::size_t query_len = 1 + rng.below(2);
    const auto r = testing::random_projection({n, cfg.model_dim}, rng);
    std::vector<ad::Tensor> leaves;
    for (const auto& e : params.entries()) {
        leaves.push_back(e.tensor);
    }
    t.add("encoder", testing::check_gradients(
                         [&] { return testing::project(enc.encode(ids, mask, query_len).token_vectors, r); }, leaves,
                         1e-5, 1e-4));
}

void head_config(GradTracker& t, Rng& rng) {
    const std::size_t d = 8;
    const std::size_t m = 1 + rng.below(4);
    ParameterSet params;
    auto head = LinearHead::create(params, "head", d, 0.5, rng);
    const auto c = params.add_normal("c", {d}, 0.5, rng, ParamGroup::other);
    const auto cls_leaf = testing::random_leaf({m, d}, rng);
    std::vector<ad::Tensor> base;
    for (const auto& e : params.entries()) {
        base.push_back(e.tensor);
    }
    base.push_back(cls_leaf);
    ClsSet cls;
    cls.cls_vectors = cls_leaf;
    const auto first_row = [&] {
        EncodedChunk e;
        e.cls_vector = ad::reshape(ad::slice(cls_leaf, 0, 0, 1), {d});
        return e;
    };
    const std::vector<std::pair<std::string, std::function<ad::Tensor()>>> heads = {
        {"first_p", [&] { return score_first_p(first_row(), head); }},
        {"max_p", [&] { return score_max_sum(cls, head, PoolMode::max); }},
        {"sum_p", [&] { return score_max_sum(cls, head, PoolMode::sum); }},
        {"avg_p", [&] { return score_avg_p(cls, head); }},
        {"parade_avg", [&] { return score_parade_simple(cls, head, ParadeMode::avg, c); }},
        {"parade_max", [&] { return score_parade_simple(cls, head, ParadeMode::max, c); }},
        {"parade_attn", [&] { return score_parade_simple(cls, head, ParadeMode::attn, c); }},
        {"long_p", [&] { return score_long_p(first_row(), head); }},
    };
    for (const auto& [name, f] : heads) {
        t.add(name, testing::check_gradients(f, base));
    }

    ParameterSet agg_params;
    AggregatorTransformer agg;
    agg.dim = d;
    agg.heads = 2;
    agg.position_embeddings = agg_params.add_normal("agg.pos", {12, d}, 0.5, rng, ParamGroup::other);
    agg.ln_gain = agg_params.add_normal("agg.ln.gain", {d}, 0.5, rng, ParamGroup::other);
    agg.ln_bias = agg_params.add_normal("agg.ln.bias", {d}, 0.5, rng, ParamGroup::other);
    for (int l = 0; l < 2; ++l) {
        agg.layers.push_back(TransformerLayer::create(agg_params, "agg.layer" + std::to_string(l), d, 2 * d, 0.5, rng,
                                                      ParamGroup::other));
    }
    const auto token = agg_params.add_normal("agg.c", {d}, 0.5, rng, ParamGroup::other);
    auto agg_head = LinearHead::create(agg_params, "agg.head", d, 0.5, rng);
    const auto proj = LinearMap::create(agg_params, "agg.p", d, d, 0.5, rng);
    ClsSet with_query;
    with_query.cls_vectors = testing::random_leaf({m, d}, rng);
    with_query.query_vectors = testing::random_leaf({3, d}, rng);
    with_query.query_mask = {1, 1, static_cast<std::uint8_t>(rng.below(2))};
    std::vector<ad::Tensor> agg_leaves;
    for (const auto& e : agg_params.entries()) {
        agg_leaves.push_back(e.tensor);
    }
    agg_leaves.push_back(with_query.cls_vectors);
    agg_leaves.push_back(*with_query.query_vectors);
    t.add("parade_transf", testing::check_gradients(
                               [&] { return score_parade_transformer(with_query, agg, token, agg_head, false, nullptr); },
                               agg_leaves, 1e-5, 1e-4));
    t.add("parade_transf_query",
          testing::check_gradients(
              [&] { return score_parade_transformer(with_query, agg, token, agg_head, true, &proj); }, agg_leaves,
              1e-5, 1e-4));

    const std::vector<Kernel> kernels = {{0.9, 0.3}, {0.1, 0.3}, {-0.5, 0.3}};
    ParameterSet knrm_params;
    auto knrm_head = LinearHead::create(knrm_params, "knrm", kernels.size(), 0.5, rng);
    const auto q = testing::random_leaf({3, d}, rng);
    std::vector<ad::Tensor> docs;
    for (std::size_t i = 0; i < m; ++i) {
        docs.push_back(testing::random_leaf({2 + rng.below(3), d}, rng));
    }
    const std::vector<std::uint8_t> qmask = {1, 1, 0};
    std::vector<ad::Tensor> knrm_leaves = {q, knrm_head.map.weight, knrm_head.map.bias};
    knrm_leaves.insert(knrm_leaves.end(), docs.begin(), docs.end());
    t.add("cedr_knrm", testing::check_gradients(
                           [&] { return score_cedr_knrm(docs, q, qmask, kernels, knrm_head); }, knrm_leaves, 1e-6,
                           1e-4));
}

Outcome criterion_gradients() {
    const auto start = Clock::now();
    GradTracker tracker;
    Rng rng(101);
    const std::size_t configs = 20;
    for (std::size_t i = 0; i < configs; ++i) {
        op_config(tracker, rng);
        encoder_config(tracker, rng, i);
        head_config(tracker, rng);
    }
    const double elapsed = seconds_since(start);
    const bool pass = tracker.worst < 1e-4 && elapsed < 120.0;
    return {pass, std::to_string(configs) + " configurations, " + std::to_string(tracker.checks) +
                      " checks, worst rel err " + fmt(tracker.worst, 3) + " (" + tracker.worst_name + "), " +
                      fmt(elapsed, 3) + " s"};
}

// ---------------------------------------------------------------------------
// 2. Chunking laws

Outcome criterion_chunking() {
    const auto start = Clock::now();
    Rng rng(202);
    std::size_t failures = 0;
    const std::size_t docs = 1000;
    for (std::size_t trial = 0; trial < docs; ++trial) {
        const std::size_t n = 1 + rng.below(3000);
        const std::size_t cap = 1 + rng.below(600);
        const std::size_t max_chunks = 1 + rng.below(6);

        const auto greedy = greedy_partition(n, cap, max_chunks);
        const std::size_t covered = std::min(n, cap * max_chunks);
        std::size_t expect_begin = 0;
        for (std::size_t i = 0; i < greedy.size(); ++i) {
            const auto& c = greedy[i];
            failures += c.begin != expect_begin || c.index != i || c.size() == 0 || c.size() > cap;
            failures += i + 1 < greedy.size() && c.size() != cap;
            expect_begin = c.end;
        }
        failures += expect_begin != covered;
        failures += greedy.size() != (covered + cap - 1) / cap;

        const std::size_t window = 1 + rng.below(600);
        const std::size_t stride = 1 + rng.below(window);
        const auto sliding = sliding_window(n, window, stride, max_chunks);
        if (n <= window) {
            failures += sliding.size() != 1 || sliding[0].begin != 0 || sliding[0].end != n;
        } else {
            std::size_t expected = 0;
            for (std::size_t i = 0; i < max_chunks && i * stride < n; ++i) {
                ++expected;
            }
            failures += sliding.size() != expected;
            for (std::size_t i = 0; i < sliding.size(); ++i) {
                failures += sliding[i].begin != i * stride;
                failures += sliding[i].end != std::min(i * stride + window, n);
                failures += sliding[i].index != i;
            }
        }

        const auto degenerate = sliding_window(n, cap, cap, max_chunks);
        failures += degenerate != greedy;
    }
    const auto truncated = greedy_partition(5000, 477, 3);
    const bool arithmetic = truncated.size() == 3 && truncated.back().end == 1431 && 3 * 477 == 1431 &&
                            std::all_of(truncated.begin(), truncated.end(), [](const Chunk& c) { return c.size() == 477; });
    failures += !arithmetic;
    const double elapsed = seconds_since(start);
    return {failures == 0 && elapsed < 60.0, std::to_string(docs) + " random documents, " +
                                                 std::to_string(failures) + " violations, 1431 = 3 x 477 " +
                                                 (arithmetic ? "holds" : "fails") + ", " + fmt(elapsed, 3) + " s"};
}

// ---------------------------------------------------------------------------
// 3. Single-chunk collapse

Outcome criterion_collapse() {
    RankerConfig base;
    base.encoder.vocab_size = 60;
    base.encoder.layers = 1;
    base.encoder.heads = 2;
    base.encoder.model_dim = 8;
    base.encoder.ff_dim = 16;
    base.encoder.max_seq = 512;
    base.encoder.dropout = 0.0;
    base.encoder.init_std = 0.3;
    base.chunking.chunk_cap = 477;
    base.chunking.max_chunks = 3;
    base.chunking.max_query = 8;
    base.head_init_std = 0.3;

    Ranker first(base, 31);
    const auto shared = first.params().snapshot();
    std::vector<std::pair<std::string, std::unique_ptr<Ranker>>> others;
    for (auto kind : {AggregatorKind::max_p, AggregatorKind::sum_p, AggregatorKind::avg_p, AggregatorKind::parade_avg,
                      AggregatorKind::parade_max}) {
        auto cfg = base;
        cfg.aggregator.kind = kind;
        auto r = std::make_unique<Ranker>(cfg, 97);
        r->params().assign(shared, false);
        others.emplace_back(to_string(kind), std::move(r));
    }
    Rng rng(303);
    double worst = 0.0;
    const std::size_t docs = 12;
    for (std::size_t i = 0; i < docs; ++i) {
        const std::size_t len = i == 0 ? 477 : 1 + rng.below(477);
        const auto q = token_seq(random_ids(rng, 1 + rng.below(8), 5, 60));
        const auto d = token_seq(random_ids(rng, len, 5, 60));
        const double ref = first.score_value(q, d);
        for (const auto& [name, r] : others) {
            worst = std::max(worst, std::fabs(r->score_value(q, d) - ref));
        }
    }
    return {worst <= 1e-12, std::to_string(docs) + " documents of 1..477 tokens, 5 heads vs FirstP, max |diff| " +
                                fmt(worst, 3)};
}

// ---------------------------------------------------------------------------
// 4. Sparse/dense equivalence

Outcome criterion_sparse_dense() {
    Rng rng(404);
    double worst = 0.0;
    const std::size_t inputs = 50;
    for (std::size_t i = 0; i < inputs; ++i) {
        EncoderConfig dense;
        dense.vocab_size = 30;
        dense.layers = 2;
        dense.heads = 2;
        dense.model_dim = 8 * (1 + rng.below(2));
        dense.ff_dim = 2 * dense.model_dim;
        dense.max_seq = 40;
        dense.dropout = 0.0;
        dense.init_std = 0.3;
        auto sparse = dense;
        sparse.attention.kind = AttentionKind::sparse;
        sparse.attention.local_window = dense.max_seq;
        sparse.attention.global = rng.below(2) == 0 ? GlobalTokens::cls_only : GlobalTokens::cls_and_query;
        ParameterSet pa;
        ParameterSet pb;
        const auto seed = rng.below(1u << 20);
        Rng ra(seed);
        Rng rb(seed);
        Encoder a(dense, pa, ra);
        Encoder b(sparse, pb, rb);
        const std::size_t n = 3 + rng.below(dense.max_seq - 2);
        auto ids = random_ids(rng, n, 4, 30);
        ids[0] = 2;
        std::vector<std::uint8_t> mask(n, 1);
        for (std::size_t p = 1; p < n; ++p) {
            if (rng.below(6) == 0) {
                mask[p] = 0;
                ids[p] = 0;
            }
        }
        const std::size_t query_len = rng.below(std::min<std::size_t>(n - 1, 8));
        const auto ea = a.encode(ids, mask, query_len);
        const auto eb = b.encode(ids, mask, query_len);
        const auto va = ea.token_vectors.data();
        const auto vb = eb.token_vectors.data();
        for (std::size_t k = 0; k < va.size(); ++k) {
            worst = std::max(worst, std::fabs(va[k] - vb[k]));
        }
    }
    return {worst <= 1e-9, std::to_string(inputs) + " random inputs, max |diff| " + fmt(worst, 3)};
}

// ---------------------------------------------------------------------------
// 5. Metric oracles

double oracle_dcg(const std::vector<int>& grades, std::size_t k) {
    double dcg = 0.0;
    for (std::size_t i = 0; i < std::min(k, grades.size()); ++i) {
        dcg += (std::pow(2.0, grades[i]) - 1.0) / std::log2(static_cast<double>(i) + 2.0);
    }
    return dcg;
}

Outcome criterion_metrics() {
    Rng rng(505);
    double worst = 0.0;
    std::size_t rankings = 0;
    const std::size_t sets = 200;
    for (std::size_t trial = 0; trial < sets; ++trial) {
        const std::size_t n = 1 + rng.below(5);
        std::vector<std::string> docs;
        std::vector<int> grades;
        Judgments j;
        for (std::size_t i = 0; i < n; ++i) {
            docs.push_back("d" + std::to_string(i));
            grades.push_back(static_cast<int>(rng.below(4)));
        }
        if (std::none_of(grades.begin(), grades.end(), [](int g) { return g > 0; })) {
            grades[rng.below(n)] = 1 + static_cast<int>(rng.below(3));
        }
        for (std::size_t i = 0; i < n; ++i) {
            j.set("q", docs[i], grades[i]);
        }
        // A judged relevant document that was never retrieved.
        const bool missing = rng.below(4) == 0;
        if (missing) {
            j.set("q", "unretrieved", 1);
        }
        std::vector<int> all_grades = grades;
        if (missing) {
            all_grades.push_back(1);
        }
        const std::size_t k = 1 + rng.below(n);

        std::vector<std::size_t> perm(all_grades.size());
        std::iota(perm.begin(), perm.end(), 0);
        double ideal = 0.0;
        do {
            std::vector<int> ordered;
            for (std::size_t p : perm) {
                ordered.push_back(all_grades[p]);
            }
            ideal = std::max(ideal, oracle_dcg(ordered, k));
        } while (std::next_permutation(perm.begin(), perm.end()));
        const auto relevant = static_cast<double>(
            std::count_if(all_grades.begin(), all_grades.end(), [](int g) { return g > 0; }));

        perm.resize(n);
        std::iota(perm.begin(), perm.end(), 0);
        do {
            RankedList r;
            r.qid = "q";
            std::vector<int> ordered;
            for (std::size_t i = 0; i < n; ++i) {
                r.entries.emplace_back(docs[perm[i]], static_cast<double>(n - i));
                ordered.push_back(grades[perm[i]]);
            }
            double rr = 0.0;
            for (std::size_t i = 0; i < k; ++i) {
                if (ordered[i] > 0) {
                    rr = 1.0 / static_cast<double>(i + 1);
                    break;
                }
            }
            double ap = 0.0;
            double hits = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                if (ordered[i] > 0) {
                    hits += 1.0;
                    ap += hits / static_cast<double>(i + 1);
                }
            }
            ap /= relevant;
            const double nd = oracle_dcg(ordered, k) / ideal;
            worst = std::max({worst, std::fabs(reciprocal_rank(r, j, k) - rr), std::fabs(ndcg(r, j, k) - nd),
                              std::fabs(average_precision(r, j) - ap)});
            ++rankings;
        } while (std::next_permutation(perm.begin(), perm.end()));
    }
    return {worst <= 1e-12, std::to_string(sets) + " judgment sets, " + std::to_string(rankings) +
                                " rankings, max |diff| " + fmt(worst, 3)};
}

// ---------------------------------------------------------------------------
// 6. Matcher oracles

// Full-table longest common suffix recurrence.
std::size_t oracle_substring(const std::string& a, const std::string& b) {
    std::vector<std::vector<std::size_t>> t(a.size() + 1, std::vector<std::size_t>(b.size() + 1, 0));
    std::size_t best = 0;
    for (std::size_t i = 1; i <= a.size(); ++i) {
        for (std::size_t j = 1; j <= b.size(); ++j) {
            if (a[i - 1] == b[j - 1]) {
                t[i][j] = t[i - 1][j - 1] + 1;
                best = std::max(best, t[i][j]);
            }
        }
    }
    return best;
}

// Memoized suffix recursion.
std::size_t oracle_subsequence(const std::string& a, const std::string& b) {
    std::vector<std::vector<int>> memo(a.size() + 1, std::vector<int>(b.size() + 1, -1));
    std::function<int(std::size_t, std::size_t)> go = [&](std::size_t i, std::size_t j) -> int {
        if (i == a.size() || j == b.size()) {
            return 0;
        }
        int& m = memo[i][j];
        if (m < 0) {
            m = a[i] == b[j] ? 1 + go(i + 1, j + 1) : std::max(go(i + 1, j), go(i, j + 1));
        }
        return m;
    };
    return static_cast<std::size_t>(go(0, 0));
}

std::string random_string(Rng& rng, std::size_t n, const std::string& alphabet) {
    std::string s;
    for (std::size_t i = 0; i < n; ++i) {
        s += alphabet[rng.below(alphabet.size())];
    }
    return s;
}

Outcome criterion_matchers() {
    Rng rng(606);
    std::size_t mismatches = 0;
    const std::size_t pairs = 500;
    for (std::size_t trial = 0; trial < pairs; ++trial) {
        const std::string alphabet = trial % 3 == 0 ? "ab" : (trial % 3 == 1 ? "abcd" : "abcdefghij ");
        const auto a = random_string(rng, rng.below(201), alphabet);
        const auto b = random_string(rng, rng.below(201), alphabet);
        mismatches += longest_common_substring(a, b).length != oracle_substring(a, b);
        mismatches += longest_common_subsequence(a, b) != oracle_subsequence(a, b);
    }

    const std::string doc = "the quick brown fox jumps over the lazy dog near the river bank";
    const auto exact = match_passage("brown fox jumps over", doc);
    const bool exact_ok = exact.matched && exact.method == MatchMethod::substring && exact.score == 1.0;

    const std::string passage = "abcdefghijklmnopqrst";
    std::string corrupted;
    for (std::size_t i = 0; i < passage.size(); ++i) {
        corrupted += passage[i];
        if (i % 3 == 2) {
            corrupted += 'Z';
        }
    }
    const auto fallback = match_passage(passage, "xxxxxxxx " + corrupted + " yyyyyyyy");
    const bool fallback_ok = fallback.matched && fallback.method == MatchMethod::subsequence;

    const bool pass = mismatches == 0 && exact_ok && fallback_ok;
    return {pass, std::to_string(pairs) + " string pairs, " + std::to_string(mismatches) +
                      " oracle mismatches, containment -> substring " + (exact_ok ? "ok" : "wrong") +
                      ", insertions -> subsequence " + (fallback_ok ? "ok" : "wrong")};
}

// ---------------------------------------------------------------------------
// 7. Position-bias reproduction

// Synthetic corpora for the pretraining stage and the two placement
// conditions. All share one word list.
constexpr const char* kSyntheticBase = R"([synthetic]
docs_per_query = 20
doc_len_min = 96
doc_len_max = 128
passage_len = 12
pattern_len = 4
chunk_size = 32
vocab_words = 500
topic_words = 20
lexicon_seed = 5
)";

constexpr const char* kModelSections = R"(
[data]
vocab = data/vocab.txt
docs = data/docs.tsv
train_queries = data/train_queries.tsv
test_queries = data/test_queries.tsv
qrels = data/qrels.txt
train_candidates = data/train_candidates.run
test_candidates = data/test_candidates.run

[encoder]
layers = 2
model_dim = 32
heads = 4
ff_dim = 128
max_seq = 64
dropout = 0.0

[chunking]
chunk_cap = 32
max_chunks = 3
max_query = 8

[train]
batch_size = 4
warmup_frac = 0.05
)";

fs::path make_corpus(const fs::path& dir, const std::string& extra) {
    fs::create_directories(dir);
    std::ofstream(dir / "synthetic.ini") << kSyntheticBase << extra;
    const auto spec = synthetic_spec_from(read_ini(dir / "synthetic.ini"));
    write_synthetic(generate_synthetic(spec), dir / "data");
    return dir;
}

double mean_mrr(const ExperimentResult& r, const std::string& model) { return r.aggregate(model, 0); }

Outcome criterion_position_bias() {
    const auto start = Clock::now();
    const auto root = fresh_dir("position_bias");

    const auto pre = make_corpus(root / "pretrain",
                                 "train_queries = 4000\ntest_queries = 100\npositions = 1:1.0\nseed = 11\n");
    std::ofstream(pre / "exp.ini") << "[experiment]\nname = pretrain\nrun_dir = run\nseeds = 1\nmetrics = mrr@10\n"
                                   << kModelSections
                                   << "epochs = 2\nlr_main = 1e-3\nlr_other = 1e-3\n\n[model.firstp]\nkind = first_p\n";
    const auto pre_result = run_experiment(load_experiment_config(pre / "exp.ini"));
    if (!pre_result.errors.empty()) {
        return {false, "pretraining failed: " + pre_result.errors.front()};
    }
    const double pre_mrr = mean_mrr(pre_result, "firstp");
    const auto checkpoint = pre / "run" / "firstp" / "seed_1" / "model.ckpt";

    std::map<int, ExperimentResult> results;
    for (int chunk : {1, 3}) {
        const auto dir = make_corpus(root / ("chunk" + std::to_string(chunk)),
                                     "train_queries = 400\ntest_queries = 200\nseed = 7\npositions = " +
                                         std::to_string(chunk) + ":1.0\n");
        std::ofstream(dir / "exp.ini") << "[experiment]\nname = chunk" << chunk
                                       << "\nrun_dir = run\nseeds = 1, 2, 3\nmetrics = mrr@10\nbaselines = firstp\n"
                                       << "init_checkpoint = " << checkpoint.string() << "\n"
                                       << kModelSections
                                       << "epochs = 1\nlr_main = 2e-4\nlr_other = 1e-3\n\n"
                                       << "[model.firstp]\nkind = first_p\n\n[model.maxp]\nkind = max_p\n\n"
                                       << "[model.parade_attn]\nkind = parade_attn\n";
        results[chunk] = run_experiment(load_experiment_config(dir / "exp.ini"));
        if (!results[chunk].errors.empty()) {
            return {false, "chunk " + std::to_string(chunk) + " run failed: " + results[chunk].errors.front()};
        }
    }

    const auto& r1 = results[1];
    const double f1 = mean_mrr(r1, "firstp");
    const double m1 = mean_mrr(r1, "maxp");
    const double p1 = mean_mrr(r1, "parade_attn");
    const bool close = std::fabs(f1 - m1) <= 0.05 * m1 && std::fabs(f1 - p1) <= 0.05 * p1;

    const auto& r3 = results[3];
    const double f3 = mean_mrr(r3, "firstp");
    const double m3 = mean_mrr(r3, "maxp");
    const auto& first_q = r3.find("firstp")->reports[0].seed_averaged;
    const auto& max_q = r3.find("maxp")->reports[0].seed_averaged;
    const auto sig = paired_significance(first_q, max_q, 0.05);
    const bool gap = f3 < 0.5 * m3 && sig.significant;

    const double elapsed = seconds_since(start);
    const bool pass = close && gap && elapsed < 1800.0;
    std::ostringstream detail;
    detail << "pretrain MRR " << fmt(pre_mrr) << "; chunk 1: FirstP " << fmt(f1) << ", MaxP " << fmt(m1)
           << ", PARADE-attn " << fmt(p1) << (close ? " (within 5%)" : " (NOT within 5%)") << "; chunk 3: FirstP "
           << fmt(f3) << ", MaxP " << fmt(m3) << ", p = " << fmt(sig.p_value, 3)
           << (gap ? "" : " (gap or significance missing)") << "; " << fmt(elapsed, 4) << " s";
    return {pass, detail.str()};
}

// ---------------------------------------------------------------------------
// 8. Ceiling estimator

Outcome criterion_ceiling() {
    // Per-mille start/end distributions of relevant passages over chunks 1..6 and 6+.
    PositionHistogram start;
    start.basis = HistogramBasis::start;
    start.counts = {859, 91, 26, 12, 6, 6, 1};
    PositionHistogram end;
    end.basis = HistogramBasis::end;
    end.counts = {710, 149, 61, 30, 14, 12, 25};
    const double factor = estimate_ceiling(end, start, 3);
    return {std::fabs(factor - 1.128) <= 0.001, "factor " + fmt(factor, 6)};
}

// ---------------------------------------------------------------------------
// 9. Determinism

int run_cli(const std::string& args) {
    const std::string cmd = std::string(LDR_CLI_PATH) + " " + args + " > /dev/null 2>&1";
    return std::system(cmd.c_str());
}

Outcome criterion_determinism() {
    const auto root = fresh_dir("determinism");
    std::ofstream(root / "synthetic.ini") << "[synthetic]\ntrain_queries = 10\ntest_queries = 6\ndocs_per_query = 4\n"
                                             "doc_len_min = 40\ndoc_len_max = 60\npassage_len = 8\npattern_len = 2\n"
                                             "chunk_size = 16\nvocab_words = 50\ntopic_words = 20\n"
                                             "positions = 1:0.5, 2:0.3, 3:0.2\nseed = 3\n";
    std::ofstream(root / "exp.ini") << "[experiment]\nname = det\nseeds = 1, 2\nmetrics = mrr@10, ndcg@10, map\n"
                                       "baselines = firstp\nthreads = 2\n\n"
                                       "[data]\nvocab = data/vocab.txt\ndocs = data/docs.tsv\n"
                                       "train_queries = data/train_queries.tsv\ntest_queries = data/test_queries.tsv\n"
                                       "qrels = data/qrels.txt\ntrain_candidates = data/train_candidates.run\n"
                                       "test_candidates = data/test_candidates.run\n\n"
                                       "[encoder]\nlayers = 1\nmodel_dim = 8\nff_dim = 16\nmax_seq = 32\ndropout = 0.1\n\n"
                                       "[chunking]\nchunk_cap = 16\nmax_chunks = 3\nmax_query = 4\n\n"
                                       "[train]\nbatch_size = 4\nlr_main = 1e-3\nlr_other = 1e-3\nepochs = 2\n\n"
                                       "[model.firstp]\nkind = first_p\n\n[model.maxp]\nkind = max_p\n\n"
                                       "[model.parade]\nkind = parade_transf\nfeed_query = true\n";
    const auto root_s = root.string();
    int status = run_cli("gen-synthetic --config " + root_s + "/synthetic.ini --out " + root_s + "/data");
    std::vector<std::string> differing;
    for (int pass = 0; pass < 2; ++pass) {
        const auto out = root / ("out" + std::to_string(pass));
        fs::create_directories(out);
        fs::remove_all(root / "runs");
        status |= run_cli("train --config " + root_s + "/exp.ini");
        fs::rename(root / "runs" / "det", out / "train");
        const auto run1 = (out / "train" / "maxp" / "seed_1" / "test.run").string();
        const auto run2 = (out / "train" / "maxp" / "seed_2" / "test.run").string();
        const auto base1 = (out / "train" / "firstp" / "seed_1" / "test.run").string();
        const auto base2 = (out / "train" / "firstp" / "seed_2" / "test.run").string();
        status |= run_cli("evaluate --qrels " + root_s + "/data/qrels.txt --run " + run1 + " --run " + run2 +
                          " --baseline " + base1 + " --baseline " + base2 + " --metric ndcg@10 --out " +
                          (out / "evaluate").string());
        status |= run_cli("analyze-positions --passages " + root_s + "/data/passages.tsv --passage-queries " + root_s +
                          "/data/passage_queries.tsv --docs " + root_s + "/data/docs.tsv --qrels " + root_s +
                          "/data/qrels.txt --vocab " + root_s + "/data/vocab.txt --chunk-size 16 --max-chunk 4 --out " +
                          (out / "analyze").string() + " --threads 2");
    }
    std::size_t files = 0;
    for (const char* part : {"train", "evaluate", "analyze"}) {
        const auto a = tree(root / "out0" / part);
        const auto b = tree(root / "out1" / part);
        files += a.size();
        if (a.empty() || a != b) {
            differing.emplace_back(part);
        }
    }
    const bool pass = status == 0 && differing.empty();
    std::string detail = std::to_string(files) + " result files compared";
    if (status != 0) {
        detail += ", a command failed";
    }
    for (const auto& d : differing) {
        detail += ", " + d + " differs";
    }
    if (differing.empty()) {
        detail += ", all byte-identical";
    }
    return {pass, detail};
}

// ---------------------------------------------------------------------------
// 10. Schedules

Outcome criterion_schedules() {
    const std::size_t total = 1000;
    const std::vector<std::size_t> steps = {0, 100, 200, 500, 1000};
    const std::vector<double> constant = {0.0, 0.5, 1.0, 1.0, 1.0};
    // One-cycle decay after warm-up: (total - t) / (0.8 * total).
    const std::vector<double> one_cycle = {0.0, 0.5, 1.0, 0.625, 0.0};
    std::size_t wrong = 0;
    for (std::size_t i = 0; i < steps.size(); ++i) {
        wrong += lr_multiplier(Schedule::constant_warmup, steps[i], total, 0.2) != constant[i];
        wrong += lr_multiplier(Schedule::one_cycle, steps[i], total, 0.2) != one_cycle[i];
    }
    return {wrong == 0, "10 schedule points, " + std::to_string(wrong) + " mismatches"};
}

}  // namespace

int main(int argc, char** argv) {
    std::vector<std::string> only(argv + 1, argv + argc);
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
        {"gradient integrity", criterion_gradients},
        {"chunking laws", criterion_chunking},
        {"single-chunk collapse", criterion_collapse},
        {"sparse/dense equivalence", criterion_sparse_dense},
        {"metric oracle equivalence", criterion_metrics},
        {"matcher oracle equivalence", criterion_matchers},
        {"position-bias reproduction", criterion_position_bias},
        {"ceiling estimator", criterion_ceiling},
        {"determinism", criterion_determinism},
        {"schedule correctness", criterion_schedules},
    };
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const auto id = std::to_string(i + 1);
        if (!only.empty() && std::find(only.begin(), only.end(), id) == only.end()) {
            continue;
        }
        Outcome outcome;
        try {
            outcome = criteria[i].second();
        } catch (const std::exception& e) {
            outcome = {false, std::string("exception: ") + e.what()};
        }
        failed += !outcome.pass;
        std::cout << (outcome.pass ? "PASS" : "FAIL") << " criterion " << id << " " << criteria[i].first << ": "
                  << outcome.detail << std::endl;
    }
    return failed == 0 ? 0 : 1;
}
