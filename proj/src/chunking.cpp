// Copyright (C) 2026 The longdoc-rank Authors
// SPDX-License-Identifier: Apache-2.0

#include "ldr/chunking.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace ldr {

std::vector<Chunk> greedy_partition(std::size_t doc_len, std::size_t chunk_cap, std::size_t max_chunks) {
    if (chunk_cap == 0 || max_chunks == 0) {
        throw std::invalid_argument("chunk_cap and max_chunks must be positive");
    }
    if (doc_len == 0) {
        throw std::invalid_argument("empty document");
    }
    const std::size_t limit = std::min(doc_len, chunk_cap * max_chunks);
    std::vector<Chunk> chunks;
    for (std::size_t start = 0; start < limit; start += chunk_cap) {
        chunks.push_back({start, std::min(start + chunk_cap, limit), chunks.size()});
    }
    return chunks;
}

std::vector<Chunk> greedy_partition(const TokenSeq& doc, std::size_t chunk_cap, std::size_t max_chunks) {
    return greedy_partition(doc.size(), chunk_cap, max_chunks);
}

std::vector<Chunk> sliding_window(std::size_t doc_len, std::size_t window, std::size_t stride,
                                  std::size_t max_chunks) {
    if (window == 0 || stride == 0 || max_chunks == 0) {
        throw std::invalid_argument("window, stride and max_chunks must be positive");
    }
    if (stride > window) {
        throw std::invalid_argument("stride exceeds window");
    }
    if (doc_len == 0) {
        throw std::invalid_argument("empty document");
    }
    if (doc_len <= window) {
        return {{0, doc_len, 0}};
    }
    std::vector<Chunk> chunks;
    for (std::size_t start = 0; start < doc_len && chunks.size() < max_chunks; start += stride) {
        chunks.push_back({start, std::min(start + window, doc_len), chunks.size()});
    }
    return chunks;
}

std::vector<Chunk> sliding_window(const TokenSeq& doc, std::size_t window, std::size_t stride,
                                  std::size_t max_chunks) {
    return sliding_window(doc.size(), window, stride, max_chunks);
}

ChunkedInput assemble(const TokenSeq& query, const TokenSeq& doc, const std::vector<Chunk>& chunks,
                      const Vocab& vocab, std::size_t max_seq) {
    (void)vocab;
    if (chunks.empty()) {
        throw std::invalid_argument("assemble: no chunks");
    }
    ChunkedInput input;
    input.query_len = query.size();
    for (const auto& chunk : chunks) {
        if (chunk.begin >= chunk.end || chunk.end > doc.size()) {
            throw std::invalid_argument("assemble: chunk " + std::to_string(chunk.index) +
                                        " is empty or outside the document");
        }
        const std::size_t len = query.size() + chunk.size() + 3;
        if (len > max_seq) {
            throw std::invalid_argument("assemble: chunk " + std::to_string(chunk.index) + " needs " +
                                        std::to_string(len) + " positions, capacity is " + std::to_string(max_seq));
        }
        std::vector<int> ids;
        ids.reserve(len);
        ids.push_back(Vocab::kCls);
        ids.insert(ids.end(), query.ids.begin(), query.ids.end());
        ids.push_back(Vocab::kSep);
        ids.insert(ids.end(), doc.ids.begin() + static_cast<std::ptrdiff_t>(chunk.begin),
                   doc.ids.begin() + static_cast<std::ptrdiff_t>(chunk.end));
        ids.push_back(Vocab::kSep);
        std::vector<std::uint8_t> mask(ids.size());
        std::transform(ids.begin(), ids.end(), mask.begin(), [](int id) { return id == Vocab::kPad ? 0 : 1; });
        input.ids.push_back(std::move(ids));
        input.masks.push_back(std::move(mask));
    }
    return input;
}

}  // namespace ldr
