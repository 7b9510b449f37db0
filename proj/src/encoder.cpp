// Copyright (C) 2026 The longdoc-rank Authors
// SPDX-License-Identifier: Apache-2.0

#include "ldr/encoder.hpp"

#include <cmath>
#include <stdexcept>

namespace ldr {

namespace {

constexpr double kLayerNormEps = 1e-12;

ad::Tensor affine_norm(const ad::Tensor& x, const ad::Tensor& gain, const ad::Tensor& bias) {
    return ad::add(ad::mul(ad::layer_norm(x, -1, kLayerNormEps), gain), bias);
}

ad::Tensor linear(const ad::Tensor& x, const ad::Tensor& w, const ad::Tensor& b) {
    return ad::add(ad::matmul(x, w), b);
}

}  // namespace

void EncoderConfig::validate() const {
    if (vocab_size == 0) {
        throw std::invalid_argument("encoder: vocab_size must be positive");
    }
    if (heads == 0 || model_dim == 0 || model_dim % heads != 0) {
        throw std::invalid_argument("encoder: model_dim must be divisible by heads");
    }
    if (max_seq == 0 || layers == 0 || ff_dim == 0) {
        throw std::invalid_argument("encoder: layers, ff_dim and max_seq must be positive");
    }
    if (attention.kind == AttentionKind::sparse && attention.local_window == 0) {
        throw std::invalid_argument("encoder: sparse attention needs local_window >= 1");
    }
    if (attention.scatter.kind == Scatter::Kind::dilated && attention.scatter.rate == 0) {
        throw std::invalid_argument("encoder: dilation rate must be >= 1");
    }
}

std::vector<std::uint8_t> build_attention_allow_matrix(const AttentionPattern& pattern, std::size_t seq_len,
                                                       std::size_t query_len, std::size_t layer) {
    if (seq_len == 0) {
        throw std::invalid_argument("attention pattern: seq_len must be positive");
    }
    const std::size_t n = seq_len;
    if (pattern.kind == AttentionKind::dense) {
        return std::vector<std::uint8_t>(n * n, 1);
    }
    std::vector<std::uint8_t> allow(n * n, 0);
    const std::size_t window = pattern.local_window;
    const bool dilated = pattern.scatter.kind == Scatter::Kind::dilated;
    const std::size_t rate = dilated ? pattern.scatter.rate : 1;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            const std::size_t dist = i > j ? i - j : j - i;
            if (dist % rate == 0 && dist / rate < window) {
                allow[i * n + j] = 1;
            }
        }
    }
    const std::size_t global_end =
        pattern.global == GlobalTokens::cls_and_query ? std::min(n, query_len + 1) : std::size_t{1};
    for (std::size_t g = 0; g < global_end; ++g) {
        for (std::size_t j = 0; j < n; ++j) {
            allow[g * n + j] = 1;
            allow[j * n + g] = 1;
        }
    }
    if (pattern.scatter.kind == Scatter::Kind::random && pattern.scatter.k > 0) {
        Rng rng(mix_seed(pattern.scatter.seed, layer));
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t r = 0; r < pattern.scatter.k; ++r) {
                const std::size_t j = rng.below(n);
                allow[i * n + j] = 1;
                allow[j * n + i] = 1;
            }
        }
    }
    return allow;
}

const std::vector<std::string>& transformer_layer_tensor_names() {
    static const std::vector<std::string> names = {"wq", "bq", "wk", "bk", "wv", "bv", "wo", "bo",
                                                   "ln1.gain", "ln1.bias", "w1", "b1", "w2", "b2",
                                                   "ln2.gain", "ln2.bias"};
    return names;
}

TransformerLayer TransformerLayer::create(ParameterSet& params, const std::string& prefix, std::size_t dim,
                                          std::size_t ff_dim, double init_std, Rng& rng, ParamGroup group) {
    TransformerLayer l;
    auto w = [&](const char* name, ad::Shape shape) {
        return params.add_normal(prefix + "." + name, std::move(shape), init_std, rng, group);
    };
    auto c = [&](const char* name, std::size_t size, double value) {
        return params.add_constant(prefix + "." + name, {size}, value, group);
    };
    l.wq = w("wq", {dim, dim});
    l.bq = c("bq", dim, 0.0);
    l.wk = w("wk", {dim, dim});
    l.bk = c("bk", dim, 0.0);
    l.wv = w("wv", {dim, dim});
    l.bv = c("bv", dim, 0.0);
    l.wo = w("wo", {dim, dim});
    l.bo = c("bo", dim, 0.0);
    l.ln1_gain = c("ln1.gain", dim, 1.0);
    l.ln1_bias = c("ln1.bias", dim, 0.0);
    l.w1 = w("w1", {dim, ff_dim});
    l.b1 = c("b1", ff_dim, 0.0);
    l.w2 = w("w2", {ff_dim, dim});
    l.b2 = c("b2", dim, 0.0);
    l.ln2_gain = c("ln2.gain", dim, 1.0);
    l.ln2_bias = c("ln2.bias", dim, 0.0);
    return l;
}

ad::Tensor TransformerLayer::forward(const ad::Tensor& x, std::size_t heads, std::span<const std::uint8_t> allow,
                                     double dropout, const ForwardContext& ctx, std::uint64_t salt) const {
    const std::size_t dim = x.dim(1);
    const std::size_t head_dim = dim / heads;
    const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(head_dim));
    const auto q = linear(x, wq, bq);
    const auto k = linear(x, wk, bk);
    const auto v = linear(x, wv, bv);
    std::vector<ad::Tensor> contexts;
    contexts.reserve(heads);
    for (std::size_t h = 0; h < heads; ++h) {
        const std::size_t lo = h * head_dim;
        const std::size_t hi = lo + head_dim;
        const auto qh = ad::slice(q, 1, lo, hi);
        const auto kh = ad::slice(k, 1, lo, hi);
        const auto vh = ad::slice(v, 1, lo, hi);
        auto scores = ad::scale(ad::matmul(qh, ad::transpose(kh)), inv_sqrt);
        auto weights = ad::masked_softmax(scores, allow);
        weights = ad::dropout(weights, dropout, mix_seed(ctx.seed, salt * 64 + h), ctx.training);
        contexts.push_back(ad::matmul(weights, vh));
    }
    auto attended = linear(heads == 1 ? contexts.front() : ad::concat(contexts, 1), wo, bo);
    attended = ad::dropout(attended, dropout, mix_seed(ctx.seed, salt * 64 + 61), ctx.training);
    const auto h1 = affine_norm(ad::add(x, attended), ln1_gain, ln1_bias);
    auto ff = linear(ad::gelu(linear(h1, w1, b1)), w2, b2);
    ff = ad::dropout(ff, dropout, mix_seed(ctx.seed, salt * 64 + 62), ctx.training);
    return affine_norm(ad::add(h1, ff), ln2_gain, ln2_bias);
}

Encoder::Encoder(const EncoderConfig& config, ParameterSet& params, Rng& rng, const std::string& prefix)
    : config_(config) {
    config_.validate();
    const std::size_t d = config_.model_dim;
    token_embeddings_ = params.add_normal(prefix + ".token_embeddings", {config_.vocab_size, d}, config_.init_std,
                                          rng, ParamGroup::main);
    position_embeddings_ = params.add_normal(prefix + ".position_embeddings", {config_.max_seq, d},
                                             config_.init_std, rng, ParamGroup::main);
    segment_embeddings_ =
        params.add_normal(prefix + ".segment_embeddings", {2, d}, config_.init_std, rng, ParamGroup::main);
    emb_ln_gain_ = params.add_constant(prefix + ".embedding_ln.gain", {d}, 1.0, ParamGroup::main);
    emb_ln_bias_ = params.add_constant(prefix + ".embedding_ln.bias", {d}, 0.0, ParamGroup::main);
    for (std::size_t l = 0; l < config_.layers; ++l) {
        layers_.push_back(TransformerLayer::create(params, prefix + ".layer" + std::to_string(l), d, config_.ff_dim,
                                                   config_.init_std, rng, ParamGroup::main));
    }
}

EncodedChunk Encoder::encode(std::span<const int> input_ids, std::span<const std::uint8_t> attention_mask,
                             std::size_t query_len, const ForwardContext& ctx) const {
    const std::size_t n = input_ids.size();
    if (n == 0) {
        throw std::invalid_argument("encode: empty input");
    }
    if (n > config_.max_seq) {
        throw std::invalid_argument("encode: sequence of " + std::to_string(n) + " tokens exceeds max_seq " +
                                    std::to_string(config_.max_seq));
    }
    if (attention_mask.size() != n) {
        throw std::invalid_argument("encode: attention mask length differs from input length");
    }
    std::vector<int> positions(n);
    std::vector<int> segments(n);
    for (std::size_t i = 0; i < n; ++i) {
        positions[i] = static_cast<int>(i);
        segments[i] = i <= query_len + 1 ? 0 : 1;
    }
    auto x = ad::add(ad::embedding_lookup(token_embeddings_, input_ids),
                     ad::embedding_lookup(position_embeddings_, positions));
    x = ad::add(x, ad::embedding_lookup(segment_embeddings_, segments));
    x = affine_norm(x, emb_ln_gain_, emb_ln_bias_);
    x = ad::dropout(x, config_.dropout, mix_seed(ctx.seed, 0x5eed), ctx.training);

    for (std::size_t l = 0; l < layers_.size(); ++l) {
        auto allow = build_attention_allow_matrix(config_.attention, n, query_len, l);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < n; ++j) {
                allow[i * n + j] &= attention_mask[j];
            }
        }
        x = layers_[l].forward(x, config_.heads, allow, config_.dropout, ctx, l + 1);
    }
    EncodedChunk out;
    out.cls_vector = ad::reshape(ad::slice(x, 0, 0, 1), {config_.model_dim});
    out.token_vectors = std::move(x);
    return out;
}

}  // namespace ldr
