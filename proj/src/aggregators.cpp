// Copyright (C) 2026 The longdoc-rank Authors
// SPDX-License-Identifier: Apache-2.0

#include "ldr/aggregators.hpp"

#include <stdexcept>

namespace ldr {

LinearMap LinearMap::create(ParameterSet& params, const std::string& prefix, std::size_t in, std::size_t out,
                            double init_std, Rng& rng, ParamGroup group) {
    LinearMap m;
    m.weight = params.add_normal(prefix + ".weight", {in, out}, init_std, rng, group);
    m.bias = params.add_constant(prefix + ".bias", {out}, 0.0, group);
    return m;
}

ad::Tensor LinearMap::apply(const ad::Tensor& x) const {
    if (x.ndim() == 1) {
        return ad::add(ad::reshape(ad::matmul(ad::reshape(x, {1, x.dim(0)}), weight), {weight.dim(1)}), bias);
    }
    return ad::add(ad::matmul(x, weight), bias);
}

LinearHead LinearHead::create(ParameterSet& params, const std::string& prefix, std::size_t dim, double init_std,
                              Rng& rng) {
    return {LinearMap::create(params, prefix, dim, 1, init_std, rng, ParamGroup::other)};
}

ad::Tensor LinearHead::apply(const ad::Tensor& x) const {
    const auto y = map.apply(x);
    if (x.ndim() == 1) {
        return ad::reshape(y, {});
    }
    return ad::reshape(y, {x.dim(0)});
}

std::vector<Kernel> default_kernels() {
    std::vector<Kernel> kernels = {{1.0, 1e-3}};
    for (int i = 0; i < 10; ++i) {
        kernels.push_back({0.9 - 0.2 * i, 0.1});
    }
    return kernels;
}

void AggregatorConfig::validate() const {
    if (feed_query && kind != AggregatorKind::parade_transf) {
        throw std::invalid_argument("aggregator: feed_query is only valid for parade_transf");
    }
    if (kind == AggregatorKind::parade_transf && (aggregator_layers < 2 || aggregator_layers > 6)) {
        throw std::invalid_argument("aggregator: aggregator_layers must be in 2..6");
    }
    if (kind == AggregatorKind::cedr_knrm) {
        if (kernels.empty()) {
            throw std::invalid_argument("aggregator: at least one kernel is required");
        }
        for (const auto& k : kernels) {
            if (!(k.sigma > 0.0)) {
                throw std::invalid_argument("aggregator: kernel sigma must be positive");
            }
        }
    }
    if (init == AggregatorInit::pretrained_reuse && pretrained_checkpoint.empty()) {
        throw std::invalid_argument("aggregator: pretrained_reuse needs a checkpoint path");
    }
}

ad::Tensor score_first_p(const EncodedChunk& encoded, const LinearHead& head) {
    return head.apply(encoded.cls_vector);
}

ad::Tensor score_max_sum(const ClsSet& cls, const LinearHead& head, PoolMode mode) {
    const auto per_chunk = head.apply(cls.cls_vectors);
    return mode == PoolMode::max ? ad::max(per_chunk, 0) : ad::sum(per_chunk, 0);
}

ad::Tensor score_avg_p(const ClsSet& cls, const LinearHead& head) {
    return head.apply(ad::mean(cls.cls_vectors, 0));
}

ad::Tensor parade_attention_weights(const ClsSet& cls, const ad::Tensor& attention_vector) {
    const std::size_t d = cls.cls_vectors.dim(1);
    if (attention_vector.numel() != d) {
        throw ad::ShapeError("parade_attn: attention vector of shape " + ad::shape_str(attention_vector.shape()) +
                             " does not match dim " + std::to_string(d));
    }
    const auto logits = ad::reshape(ad::matmul(cls.cls_vectors, ad::reshape(attention_vector, {d, 1})),
                                    {cls.cls_vectors.dim(0)});
    return ad::softmax(logits, 0);
}

ad::Tensor score_parade_simple(const ClsSet& cls, const LinearHead& head, ParadeMode mode,
                               const ad::Tensor& attention_vector) {
    switch (mode) {
        case ParadeMode::avg: return head.apply(ad::mean(cls.cls_vectors, 0));
        case ParadeMode::max: return head.apply(ad::max(cls.cls_vectors, 0));
        case ParadeMode::attn: {
            const std::size_t m = cls.cls_vectors.dim(0);
            const auto w = ad::reshape(parade_attention_weights(cls, attention_vector), {1, m});
            const auto pooled = ad::reshape(ad::matmul(w, cls.cls_vectors), {cls.cls_vectors.dim(1)});
            return head.apply(pooled);
        }
    }
    throw std::logic_error("unknown parade mode");
}

std::pair<ad::Tensor, std::vector<std::uint8_t>> parade_transformer_input(const ClsSet& cls,
                                                                          const AggregatorTransformer& aggreg,
                                                                          const ad::Tensor& cls_token,
                                                                          bool feed_query,
                                                                          const LinearMap* query_projection) {
    if (cls_token.numel() != aggreg.dim) {
        throw ad::ShapeError("parade_transf: C has shape " + ad::shape_str(cls_token.shape()) +
                             ", aggregator dim is " + std::to_string(aggreg.dim));
    }
    std::vector<ad::Tensor> rows = {ad::reshape(cls_token, {1, aggreg.dim})};
    std::vector<std::uint8_t> mask = {1};
    if (feed_query) {
        if (!cls.query_vectors) {
            throw std::invalid_argument("parade_transf: feed_query requires query vectors");
        }
        auto q = *cls.query_vectors;
        if (query_projection != nullptr) {
            q = query_projection->apply(q);
        }
        if (q.dim(1) != aggreg.dim) {
            throw ad::ShapeError("parade_transf: query vectors of shape " + ad::shape_str(q.shape()) +
                                 " need a projection to dim " + std::to_string(aggreg.dim));
        }
        rows.push_back(q);
        if (cls.query_mask.empty()) {
            mask.insert(mask.end(), q.dim(0), 1);
        } else {
            if (cls.query_mask.size() != q.dim(0)) {
                throw ad::ShapeError("parade_transf: query mask length differs from query vectors");
            }
            mask.insert(mask.end(), cls.query_mask.begin(), cls.query_mask.end());
        }
    }
    auto c = cls.cls_vectors;
    if (aggreg.cls_projection) {
        c = aggreg.cls_projection->apply(c);
    }
    if (c.dim(1) != aggreg.dim) {
        throw ad::ShapeError("parade_transf: cls vectors of shape " + ad::shape_str(c.shape()) +
                             " need a projection to dim " + std::to_string(aggreg.dim));
    }
    rows.push_back(c);
    mask.insert(mask.end(), c.dim(0), 1);
    return {ad::concat(rows, 0), std::move(mask)};
}

ad::Tensor score_parade_transformer(const ClsSet& cls, const AggregatorTransformer& aggreg,
                                    const ad::Tensor& cls_token, const LinearHead& head, bool feed_query,
                                    const LinearMap* query_projection, const ForwardContext& ctx) {
    auto [x, key_mask] = parade_transformer_input(cls, aggreg, cls_token, feed_query, query_projection);
    const std::size_t n = x.dim(0);
    if (n > aggreg.max_len()) {
        throw std::invalid_argument("parade_transf: " + std::to_string(n) + " inputs exceed " +
                                    std::to_string(aggreg.max_len()) + " aggregator positions");
    }
    x = ad::add(x, ad::slice(aggreg.position_embeddings, 0, 0, n));
    x = ad::add(ad::mul(ad::layer_norm(x, -1, 1e-12), aggreg.ln_gain), aggreg.ln_bias);
    std::vector<std::uint8_t> allow(n * n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            allow[i * n + j] = key_mask[j];
        }
    }
    for (std::size_t l = 0; l < aggreg.layers.size(); ++l) {
        x = aggreg.layers[l].forward(x, aggreg.heads, allow, 0.0, ctx, 1000 + l);
    }
    return head.apply(ad::reshape(ad::slice(x, 0, 0, 1), {aggreg.dim}));
}

ad::Tensor score_long_p(const EncodedChunk& encoded, const LinearHead& head) {
    return head.apply(encoded.cls_vector);
}

namespace {

ad::Tensor unit_rows(const ad::Tensor& x) {
    const auto norms = ad::sqrt(ad::add_scalar(ad::sum(ad::mul(x, x), 1, true), 1e-24));
    return ad::div(x, norms);
}

}  // namespace

ad::Tensor score_cedr_knrm(std::span<const ad::Tensor> chunk_doc_vectors, const ad::Tensor& query_vectors,
                           std::span<const std::uint8_t> query_mask, std::span<const Kernel> kernels,
                           const LinearHead& head) {
    if (kernels.empty()) {
        throw std::invalid_argument("cedr_knrm: at least one kernel is required");
    }
    if (chunk_doc_vectors.empty()) {
        throw std::invalid_argument("cedr_knrm: no document vectors");
    }
    for (const auto& k : kernels) {
        if (!(k.sigma > 0.0)) {
            throw std::invalid_argument("cedr_knrm: kernel sigma must be positive");
        }
    }
    std::vector<ad::Tensor> query_rows;
    for (std::size_t i = 0; i < query_vectors.dim(0); ++i) {
        if (query_mask.empty() || query_mask[i]) {
            query_rows.push_back(ad::slice(query_vectors, 0, i, i + 1));
        }
    }
    if (query_rows.empty()) {
        throw std::invalid_argument("cedr_knrm: query has no non-PAD tokens");
    }
    const auto q = unit_rows(ad::concat(query_rows, 0));
    const auto d = unit_rows(chunk_doc_vectors.size() == 1 ? chunk_doc_vectors.front()
                                                           : ad::concat(chunk_doc_vectors, 0));
    const auto sim = ad::matmul(q, ad::transpose(d));  // [q, n]
    std::vector<ad::Tensor> features;
    for (const auto& k : kernels) {
        const auto diff = ad::add_scalar(sim, -k.mu);
        const auto response = ad::exp(ad::scale(ad::mul(diff, diff), -1.0 / (2.0 * k.sigma * k.sigma)));
        const auto mass = ad::sum(response, 1);  // [q]
        features.push_back(ad::reshape(ad::sum_all(ad::log(ad::add_scalar(mass, 1e-10))), {1}));
    }
    return head.apply(ad::scale(ad::concat(features, 0), 0.01));
}

}  // namespace ldr
