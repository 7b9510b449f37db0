// Copyright (C) 2026 The longdoc-rank Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <filesystem>
#include <istream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace ldr {

/// Subword vocabulary. Ids 0..3 are always [PAD], [UNK], [CLS], [SEP].
///
/// Tokens are byte strings over normalized text. Word-initial pieces carry
/// their leading space (" word"), so no continuation marker is needed and
/// token spans tile the source text exactly.
class Vocab {
public:
    static constexpr int kPad = 0;
    static constexpr int kUnk = 1;
    static constexpr int kCls = 2;
    static constexpr int kSep = 3;
    static constexpr std::string_view kContinuationMarker = "";

    Vocab();
    explicit Vocab(std::vector<std::string> tokens);

    std::size_t size() const { return tokens_.size(); }
    const std::string& token(int id) const { return tokens_.at(static_cast<std::size_t>(id)); }
    const std::vector<std::string>& tokens() const { return tokens_; }
    /// -1 when absent.
    int find(std::string_view piece) const;
    std::size_t longest_token() const { return longest_; }

    /// One token per line, line number is the id.
    void save(const std::filesystem::path& path) const;
    static Vocab load(const std::filesystem::path& path);

private:
    std::vector<std::string> tokens_;
    std::unordered_map<std::string, int> ids_;
    std::size_t longest_ = 1;
};

struct TokenSeq {
    std::vector<int> ids;
    /// Half-open byte spans into the source text.
    std::vector<std::pair<std::size_t, std::size_t>> offsets;

    std::size_t size() const { return ids.size(); }
    bool empty() const { return ids.empty(); }
};

/// ASCII lowercase, every whitespace byte mapped to ' '. Length-preserving,
/// so offsets computed on the result index the original text.
std::string normalize_text(std::string_view text);

/// Frequency-greedy pair merges over the corpus until max_size tokens.
/// Pairs seen fewer than twice are never merged.
Vocab build_vocab(std::string_view corpus, std::size_t max_size);
Vocab build_vocab(std::istream& corpus, std::size_t max_size);

/// Greedy longest-match-first segmentation; uncovered bytes become [UNK].
TokenSeq tokenize(const Vocab& vocab, std::string_view text);

/// Truncate to max_q tokens, then right-pad with [PAD] to exactly max_q.
TokenSeq prepare_query(const Vocab& vocab, const TokenSeq& query, std::size_t max_q = 32);

}  // namespace ldr
