// Copyright (C) 2026 The longdoc-rank Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "ldr/tokenize.hpp"

namespace ldr {

/// Half-open range [begin, end) of document token positions.
struct Chunk {
    std::size_t begin = 0;
    std::size_t end = 0;
    std::size_t index = 0;

    std::size_t size() const { return end - begin; }
    bool operator==(const Chunk&) const = default;
};

/// Per-chunk model inputs laid out as [CLS] q [SEP] d_i [SEP].
struct ChunkedInput {
    std::vector<std::vector<int>> ids;
    std::vector<std::vector<std::uint8_t>> masks;
    /// Padded query length; query tokens sit at positions 1..query_len.
    std::size_t query_len = 0;

    std::size_t count() const { return ids.size(); }
};

/// Disjoint chunks of chunk_cap tokens; tokens past chunk_cap * max_chunks
/// are dropped.
std::vector<Chunk> greedy_partition(std::size_t doc_len, std::size_t chunk_cap = 477, std::size_t max_chunks = 3);
std::vector<Chunk> greedy_partition(const TokenSeq& doc, std::size_t chunk_cap = 477, std::size_t max_chunks = 3);

/// Chunk i covers [i*stride, min(i*stride + window, n)). Stops at n or at
/// max_chunks; a document that fits one window is a single chunk.
std::vector<Chunk> sliding_window(std::size_t doc_len, std::size_t window, std::size_t stride, std::size_t max_chunks);
std::vector<Chunk> sliding_window(const TokenSeq& doc, std::size_t window, std::size_t stride, std::size_t max_chunks);

/// `query` must already be padded (see prepare_query).
ChunkedInput assemble(const TokenSeq& query, const TokenSeq& doc, const std::vector<Chunk>& chunks,
                      const Vocab& vocab, std::size_t max_seq = 512);

}  // namespace ldr
