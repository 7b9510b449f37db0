// Copyright (C) 2026 The longdoc-rank Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "ldr/params.hpp"
#include "ldr/rng.hpp"
#include "ldr/tensor.hpp"

namespace ldr {

enum class AttentionKind { dense, sparse };
enum class GlobalTokens { cls_only, cls_and_query };

struct Scatter {
    enum class Kind { none, random, dilated };
    Kind kind = Kind::none;
    /// random: extra keys sampled per row (mirrored to keep the pattern symmetric)
    std::size_t k = 0;
    std::uint64_t seed = 0;
    /// dilated: stride between attended neighbours in the local band
    std::size_t rate = 1;
};

struct AttentionPattern {
    AttentionKind kind = AttentionKind::dense;
    std::size_t local_window = 1;
    GlobalTokens global = GlobalTokens::cls_only;
    Scatter scatter;
};

struct EncoderConfig {
    std::size_t vocab_size = 0;
    std::size_t layers = 2;
    std::size_t heads = 2;
    std::size_t model_dim = 32;
    std::size_t ff_dim = 64;
    std::size_t max_seq = 512;
    double dropout = 0.1;
    double init_std = 0.02;
    AttentionPattern attention;

    void validate() const;
};

/// Dropout switch and seed for one forward pass.
struct ForwardContext {
    bool training = false;
    std::uint64_t seed = 0;
};

struct EncodedChunk {
    ad::Tensor token_vectors;  // [n, model_dim]
    ad::Tensor cls_vector;     // [model_dim], row 0 of token_vectors
};

/// Row-major seq_len x seq_len matrix; allow[i * seq_len + j] says position
/// i may attend to j. Dense patterns allow everything. Positions
/// 0..query_len are global under cls_and_query, position 0 always is.
/// `layer` selects the per-layer random scatter stream.
std::vector<std::uint8_t> build_attention_allow_matrix(const AttentionPattern& pattern, std::size_t seq_len,
                                                       std::size_t query_len, std::size_t layer = 0);

/// Post-LN transformer block weights.
struct TransformerLayer {
    ad::Tensor wq, bq, wk, bk, wv, bv, wo, bo;
    ad::Tensor ln1_gain, ln1_bias;
    ad::Tensor w1, b1, w2, b2;
    ad::Tensor ln2_gain, ln2_bias;

    static TransformerLayer create(ParameterSet& params, const std::string& prefix, std::size_t dim,
                                   std::size_t ff_dim, double init_std, Rng& rng, ParamGroup group);

    /// x is [n, dim]; allow is n x n row-major (PAD keys already removed).
    ad::Tensor forward(const ad::Tensor& x, std::size_t heads, std::span<const std::uint8_t> allow, double dropout,
                       const ForwardContext& ctx, std::uint64_t salt) const;
};

/// Names of one layer's tensors relative to its prefix, in creation order.
const std::vector<std::string>& transformer_layer_tensor_names();

class Encoder {
public:
    Encoder(const EncoderConfig& config, ParameterSet& params, Rng& rng, const std::string& prefix = "encoder");

    /// query_len is the padded query length inside the [CLS] q [SEP] d [SEP]
    /// layout; it places the segment boundary and the query-global tokens.
    EncodedChunk encode(std::span<const int> input_ids, std::span<const std::uint8_t> attention_mask,
                        std::size_t query_len, const ForwardContext& ctx = {}) const;

    const EncoderConfig& config() const { return config_; }

private:
    EncoderConfig config_;
    ad::Tensor token_embeddings_;
    ad::Tensor position_embeddings_;
    ad::Tensor segment_embeddings_;
    ad::Tensor emb_ln_gain_;
    ad::Tensor emb_ln_bias_;
    std::vector<TransformerLayer> layers_;
};

}  // namespace ldr
