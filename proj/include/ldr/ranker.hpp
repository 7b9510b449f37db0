// Copyright (C) 2026 The longdoc-rank Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "ldr/aggregators.hpp"
#include "ldr/chunking.hpp"
#include "ldr/encoder.hpp"
#include "ldr/params.hpp"
#include "ldr/tokenize.hpp"

namespace ldr {

enum class ChunkScheme { greedy, sliding };

struct ChunkingConfig {
    ChunkScheme scheme = ChunkScheme::greedy;
    /// Greedy chunk size; also the FirstP prefix length.
    std::size_t chunk_cap = 477;
    std::size_t window = 477;
    std::size_t stride = 477;
    std::size_t max_chunks = 3;
    std::size_t max_query = 32;
};

struct RankerConfig {
    EncoderConfig encoder;
    AggregatorConfig aggregator;
    ChunkingConfig chunking;
    double head_init_std = 0.02;
};

/// Full document scorer: query/document tokens in, relevance score out.
/// Parameters are created in a fixed order from the seed, so two rankers
/// with the same config and seed are identical.
class Ranker {
public:
    Ranker(const RankerConfig& config, std::uint64_t seed);

    Ranker(const Ranker&) = delete;
    Ranker& operator=(const Ranker&) = delete;

    const RankerConfig& config() const { return config_; }
    ParameterSet& params() { return params_; }
    const ParameterSet& params() const { return params_; }
    const Encoder& encoder() const { return *encoder_; }

    /// Chunks the model reads from a document of doc_len tokens.
    std::vector<Chunk> chunks_for(std::size_t doc_len) const;

    /// The query is truncated/padded to max_query here. Empty documents are
    /// scored as a single [UNK] token.
    ad::Tensor score(const TokenSeq& query, const TokenSeq& doc, const ForwardContext& ctx = {}) const;
    double score_value(const TokenSeq& query, const TokenSeq& doc) const;

private:
    RankerConfig config_;
    ParameterSet params_;
    std::optional<Encoder> encoder_;
    LinearHead head_;
    ad::Tensor parade_vector_;
    ad::Tensor aggreg_token_;
    std::optional<AggregatorTransformer> aggreg_;
    std::optional<LinearMap> query_projection_;
};

}  // namespace ldr
