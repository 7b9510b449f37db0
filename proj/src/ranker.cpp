// Copyright (C) 2026 The longdoc-rank Authors
// SPDX-License-Identifier: Apache-2.0

#include "ldr/ranker.hpp"

#include <stdexcept>

namespace ldr {

namespace {

bool uses_chunks(AggregatorKind kind) { return kind != AggregatorKind::long_p; }

std::size_t longest_chunk(const ChunkingConfig& c) {
    return c.scheme == ChunkScheme::greedy ? c.chunk_cap : c.window;
}

}  // namespace

Ranker::Ranker(const RankerConfig& config, std::uint64_t seed) : config_(config) {
    config_.aggregator.validate();
    const auto& ch = config_.chunking;
    if (ch.max_query == 0 || ch.max_chunks == 0 || ch.chunk_cap == 0) {
        throw std::invalid_argument("ranker: max_query, max_chunks and chunk_cap must be positive");
    }
    if (ch.scheme == ChunkScheme::sliding && (ch.window == 0 || ch.stride == 0 || ch.stride > ch.window)) {
        throw std::invalid_argument("ranker: sliding window needs 1 <= stride <= window");
    }
    const auto kind = config_.aggregator.kind;
    const std::size_t needed = uses_chunks(kind) ? ch.max_query + longest_chunk(ch) + 3
                                                 : ch.max_query + ch.chunk_cap * ch.max_chunks + 3;
    if (needed > config_.encoder.max_seq) {
        throw std::invalid_argument("ranker: inputs need " + std::to_string(needed) +
                                    " positions but encoder max_seq is " + std::to_string(config_.encoder.max_seq));
    }

    Rng rng(seed);
    encoder_.emplace(config_.encoder, params_, rng);
    const std::size_t d = config_.encoder.model_dim;
    const double std = config_.head_init_std;

    std::size_t head_dim = d;
    if (kind == AggregatorKind::parade_attn) {
        parade_vector_ = params_.add_normal("parade.attention_vector", {d}, std, rng, ParamGroup::other);
    } else if (kind == AggregatorKind::parade_transf) {
        const auto& ac = config_.aggregator;
        AggregatorTransformer agg;
        agg.dim = ac.aggregator_dim == 0 ? d : ac.aggregator_dim;
        agg.heads = ac.aggregator_heads;
        if (agg.heads == 0 || agg.dim % agg.heads != 0) {
            throw std::invalid_argument("ranker: aggregator_dim must be divisible by aggregator_heads");
        }
        const std::size_t ff = ac.aggregator_ff_dim == 0 ? config_.encoder.ff_dim : ac.aggregator_ff_dim;
        const std::size_t max_len = 1 + (ac.feed_query ? ch.max_query : 0) + ch.max_chunks;
        aggreg_token_ = params_.add_normal("aggregator.cls_token", {agg.dim}, std, rng, ParamGroup::other);
        agg.position_embeddings =
            params_.add_normal("aggregator.position_embeddings", {max_len, agg.dim}, std, rng, ParamGroup::other);
        agg.ln_gain = params_.add_constant("aggregator.ln.gain", {agg.dim}, 1.0, ParamGroup::other);
        agg.ln_bias = params_.add_constant("aggregator.ln.bias", {agg.dim}, 0.0, ParamGroup::other);
        for (std::size_t l = 0; l < ac.aggregator_layers; ++l) {
            agg.layers.push_back(TransformerLayer::create(params_, "aggregator.layer" + std::to_string(l), agg.dim,
                                                          ff, std, rng, ParamGroup::other));
        }
        if (agg.dim != d) {
            agg.cls_projection = LinearMap::create(params_, "aggregator.cls_projection", d, agg.dim, std, rng);
        }
        if (ac.feed_query && (agg.dim != d || ac.query_projection)) {
            query_projection_ = LinearMap::create(params_, "aggregator.query_projection", d, agg.dim, std, rng);
        }
        head_dim = agg.dim;
        aggreg_ = std::move(agg);
    }
    const std::size_t head_inputs = kind == AggregatorKind::cedr_knrm ? config_.aggregator.kernels.size() : head_dim;
    head_ = LinearHead::create(params_, "head", head_inputs, std, rng);

    if (kind == AggregatorKind::parade_transf && config_.aggregator.init == AggregatorInit::pretrained_reuse) {
        // Reuse transformer layers of a trained encoder; its embeddings are dropped.
        const auto source = load_checkpoint(config_.aggregator.pretrained_checkpoint);
        std::vector<NamedTensor> renamed;
        for (const auto& t : source) {
            const std::string prefix = "encoder.layer";
            if (t.name.rfind(prefix, 0) != 0) {
                continue;
            }
            NamedTensor copy = t;
            copy.name = "aggregator.layer" + t.name.substr(prefix.size());
            renamed.push_back(std::move(copy));
        }
        const std::size_t expected = config_.aggregator.aggregator_layers * transformer_layer_tensor_names().size();
        if (params_.assign(renamed, false) != expected) {
            throw std::runtime_error("ranker: checkpoint " + config_.aggregator.pretrained_checkpoint +
                                     " lacks layers for the aggregator");
        }
    }
}

std::vector<Chunk> Ranker::chunks_for(std::size_t doc_len) const {
    const auto& ch = config_.chunking;
    const auto kind = config_.aggregator.kind;
    const std::size_t max_chunks = kind == AggregatorKind::first_p ? 1 : ch.max_chunks;
    if (kind == AggregatorKind::long_p) {
        return {{0, std::min(doc_len, ch.chunk_cap * ch.max_chunks), 0}};
    }
    if (ch.scheme == ChunkScheme::sliding) {
        return sliding_window(doc_len, ch.window, ch.stride, max_chunks);
    }
    return greedy_partition(doc_len, ch.chunk_cap, max_chunks);
}

ad::Tensor Ranker::score(const TokenSeq& query, const TokenSeq& doc, const ForwardContext& ctx) const {
    static const Vocab kBase;
    TokenSeq placeholder;
    const TokenSeq* d = &doc;
    if (doc.empty()) {
        placeholder.ids = {Vocab::kUnk};
        placeholder.offsets = {{0, 0}};
        d = &placeholder;
    }
    const TokenSeq q = prepare_query(kBase, query, config_.chunking.max_query);
    const auto chunks = chunks_for(d->size());
    const auto input = assemble(q, *d, chunks, kBase, config_.encoder.max_seq);
    const auto kind = config_.aggregator.kind;

    std::vector<EncodedChunk> encoded;
    for (std::size_t i = 0; i < input.count(); ++i) {
        ForwardContext chunk_ctx = ctx;
        chunk_ctx.seed = mix_seed(ctx.seed, i);
        encoded.push_back(encoder_->encode(input.ids[i], input.masks[i], input.query_len, chunk_ctx));
    }
    if (kind == AggregatorKind::first_p) {
        return score_first_p(encoded.front(), head_);
    }
    if (kind == AggregatorKind::long_p) {
        return score_long_p(encoded.front(), head_);
    }

    const std::size_t ql = input.query_len;
    if (kind == AggregatorKind::cedr_knrm) {
        std::vector<ad::Tensor> doc_vectors;
        for (std::size_t i = 0; i < encoded.size(); ++i) {
            doc_vectors.push_back(ad::slice(encoded[i].token_vectors, 0, ql + 2, ql + 2 + chunks[i].size()));
        }
        const auto qv = ad::slice(encoded.front().token_vectors, 0, 1, 1 + ql);
        std::vector<std::uint8_t> qmask(input.masks.front().begin() + 1, input.masks.front().begin() + 1 + ql);
        return score_cedr_knrm(doc_vectors, qv, qmask, config_.aggregator.kernels, head_);
    }

    ClsSet cls;
    std::vector<ad::Tensor> rows;
    for (const auto& e : encoded) {
        rows.push_back(ad::reshape(e.cls_vector, {1, config_.encoder.model_dim}));
    }
    cls.cls_vectors = rows.size() == 1 ? rows.front() : ad::concat(rows, 0);
    switch (kind) {
        case AggregatorKind::avg_p: return score_avg_p(cls, head_);
        case AggregatorKind::max_p: return score_max_sum(cls, head_, PoolMode::max);
        case AggregatorKind::sum_p: return score_max_sum(cls, head_, PoolMode::sum);
        case AggregatorKind::parade_avg: return score_parade_simple(cls, head_, ParadeMode::avg, parade_vector_);
        case AggregatorKind::parade_max: return score_parade_simple(cls, head_, ParadeMode::max, parade_vector_);
        case AggregatorKind::parade_attn: return score_parade_simple(cls, head_, ParadeMode::attn, parade_vector_);
        case AggregatorKind::parade_transf: {
            if (config_.aggregator.feed_query) {
                cls.query_vectors = ad::slice(encoded.front().token_vectors, 0, 1, 1 + ql);
                cls.query_mask.assign(input.masks.front().begin() + 1, input.masks.front().begin() + 1 + ql);
            }
            return score_parade_transformer(cls, *aggreg_, aggreg_token_, head_, config_.aggregator.feed_query,
                                            query_projection_ ? &*query_projection_ : nullptr, ctx);
        }
        default: break;
    }
    throw std::logic_error("unhandled aggregator kind");
}

double Ranker::score_value(const TokenSeq& query, const TokenSeq& doc) const {
    ad::NoGradGuard guard;
    return score(query, doc).item();
}

}  // namespace ldr
