// Copyright (C) 2026 The longdoc-rank Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ldr/encoder.hpp"
#include "ldr/params.hpp"
#include "ldr/tensor.hpp"

namespace ldr {

/// Affine map x -> x W + b.
struct LinearMap {
    ad::Tensor weight;  // [in, out]
    ad::Tensor bias;    // [out]

    static LinearMap create(ParameterSet& params, const std::string& prefix, std::size_t in, std::size_t out,
                            double init_std, Rng& rng, ParamGroup group = ParamGroup::other);
    ad::Tensor apply(const ad::Tensor& x) const;
};

/// Scoring layer F: [D] -> scalar, or [m, D] -> [m].
struct LinearHead {
    LinearMap map;

    static LinearHead create(ParameterSet& params, const std::string& prefix, std::size_t dim, double init_std,
                             Rng& rng);
    ad::Tensor apply(const ad::Tensor& x) const;
};

struct ClsSet {
    ad::Tensor cls_vectors;                    // [m, D]
    std::optional<ad::Tensor> query_vectors;   // [q, D], contextualized query tokens of chunk 0
    std::vector<std::uint8_t> query_mask;      // q entries, 0 on PAD
};

enum class AggregatorKind {
    first_p,
    avg_p,
    max_p,
    sum_p,
    parade_avg,
    parade_max,
    parade_attn,
    parade_transf,
    long_p,
    cedr_knrm,
};

enum class AggregatorInit { random, pretrained_reuse };

struct Kernel {
    double mu = 0.0;
    double sigma = 0.1;
};

/// KNRM-style kernel set: exact-match kernel plus evenly spaced soft kernels.
std::vector<Kernel> default_kernels();

struct AggregatorConfig {
    AggregatorKind kind = AggregatorKind::first_p;
    std::size_t aggregator_layers = 2;
    std::size_t aggregator_heads = 2;
    /// 0 means the encoder's model_dim.
    std::size_t aggregator_dim = 0;
    std::size_t aggregator_ff_dim = 0;
    bool feed_query = false;
    /// Project query vectors through P even when dimensions already agree.
    bool query_projection = false;
    AggregatorInit init = AggregatorInit::random;
    /// Encoder checkpoint whose layers seed the aggregator under pretrained_reuse.
    std::string pretrained_checkpoint;
    std::vector<Kernel> kernels = default_kernels();

    void validate() const;
};

enum class PoolMode { max, sum };
enum class ParadeMode { avg, max, attn };

/// Transformer over [C, P(q_1).., cls_1..cls_m] with its own position
/// embeddings and no token embedding table.
struct AggregatorTransformer {
    std::vector<TransformerLayer> layers;
    ad::Tensor position_embeddings;  // [max_len, dim]
    ad::Tensor ln_gain;
    ad::Tensor ln_bias;
    std::optional<LinearMap> cls_projection;
    std::size_t heads = 2;
    std::size_t dim = 0;

    std::size_t max_len() const { return position_embeddings.dim(0); }
};

ad::Tensor score_first_p(const EncodedChunk& encoded, const LinearHead& head);
ad::Tensor score_max_sum(const ClsSet& cls, const LinearHead& head, PoolMode mode);
ad::Tensor score_avg_p(const ClsSet& cls, const LinearHead& head);
/// softmax(C . cls_1, ..., C . cls_m) as an [m] tensor.
ad::Tensor parade_attention_weights(const ClsSet& cls, const ad::Tensor& attention_vector);
ad::Tensor score_parade_simple(const ClsSet& cls, const LinearHead& head, ParadeMode mode,
                               const ad::Tensor& attention_vector);
/// Sequence fed to the aggregator transformer, before position embeddings.
/// Also returns the key mask for it (PAD query rows excluded).
std::pair<ad::Tensor, std::vector<std::uint8_t>> parade_transformer_input(const ClsSet& cls,
                                                                          const AggregatorTransformer& aggreg,
                                                                          const ad::Tensor& cls_token,
                                                                          bool feed_query,
                                                                          const LinearMap* query_projection);
ad::Tensor score_parade_transformer(const ClsSet& cls, const AggregatorTransformer& aggreg,
                                    const ad::Tensor& cls_token, const LinearHead& head, bool feed_query,
                                    const LinearMap* query_projection, const ForwardContext& ctx = {});
ad::Tensor score_long_p(const EncodedChunk& encoded, const LinearHead& head);
/// Cosine similarities between non-PAD query vectors and every document
/// token vector, Gaussian kernel pooling, log of per-query kernel mass
/// summed over query tokens, then F.
ad::Tensor score_cedr_knrm(std::span<const ad::Tensor> chunk_doc_vectors, const ad::Tensor& query_vectors,
                           std::span<const std::uint8_t> query_mask, std::span<const Kernel> kernels,
                           const LinearHead& head);

}  // namespace ldr
