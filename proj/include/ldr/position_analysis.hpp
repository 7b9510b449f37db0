// Copyright (C) 2026 The longdoc-rank Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <map>
#include <ostream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "ldr/tokenize.hpp"

namespace ldr {

using Span = std::pair<std::size_t, std::size_t>;

enum class MatchMethod { none, substring, subsequence };

struct MatchResult {
    bool matched = false;
    MatchMethod method = MatchMethod::none;
    /// Matched length over passage length; for unmatched passages the best
    /// score either method reached.
    double score = 0.0;
    Span char_span{0, 0};
    Span token_span{0, 0};
};

struct MatchOptions {
    double substring_threshold = 0.8;
    double subsequence_threshold = 0.7;
    /// Fallback window length as a multiple of the passage length.
    double window_factor = 1.2;
    /// Fallback window stride as a fraction of the window length.
    double stride_fraction = 0.25;
};

struct SubstringMatch {
    std::size_t length = 0;
    /// Start of the earliest longest occurrence in the haystack.
    std::size_t haystack_begin = 0;
};

/// O(|needle| * |haystack|) dynamic program.
SubstringMatch longest_common_substring(std::string_view needle, std::string_view haystack);
std::size_t longest_common_subsequence(std::string_view a, std::string_view b);

struct WindowMatch {
    std::size_t length = 0;
    Span window{0, 0};
    /// First to last matched haystack byte of one optimal alignment.
    Span span{0, 0};
};

/// Best subsequence alignment of the needle over haystack windows starting
/// at 0, stride, 2*stride, ... (the last one reaching the end). Ties keep the
/// earliest window.
WindowMatch best_window_subsequence(std::string_view needle, std::string_view haystack, std::size_t window,
                                    std::size_t stride);

/// Longest common substring first, windowed longest common subsequence as a
/// fallback. Both texts are normalized like tokenize(), and spans index the
/// original document. token_span is left empty; see char_span_to_token_span.
MatchResult match_passage(std::string_view passage, std::string_view document, const MatchOptions& options = {});

/// Smallest token range whose offsets cover the span. An empty span maps
/// to an empty range at the token containing its position.
Span char_span_to_token_span(const TokenSeq& doc, Span char_span);

/// 1-based chunk ordinal of a token position.
std::size_t chunk_index(std::size_t token_pos, std::size_t chunk_size = 477);

enum class HistogramBasis { start, end };

struct PositionHistogram {
    HistogramBasis basis = HistogramBasis::start;
    std::size_t chunk_size = 477;
    /// counts[i] is chunk i + 1 for i < buckets - 1; the last entry is the
    /// overflow bucket.
    std::vector<std::size_t> counts;

    std::size_t total() const;
    double fraction(std::size_t chunk) const;
};

struct LengthHistogram {
    std::size_t bin_width = 500;
    std::size_t cap = 10000;
    std::vector<std::size_t> counts;
};

/// One matched (or unmatched) passage of a relevant (query, document) pair.
struct PassageMatch {
    std::string qid;
    std::string docid;
    MatchResult match;
};

struct HistogramOptions {
    std::size_t chunk_size = 477;
    /// Explicit chunk buckets; one overflow bucket is appended.
    std::size_t max_chunk = 6;
    bool first_only = true;
    std::size_t length_bin = 500;
    std::size_t length_cap = 10000;
};

struct PositionHistograms {
    PositionHistogram start;
    PositionHistogram end;
    LengthHistogram doc_lengths;
};

/// Position histograms over matched passages (per relevant document only
/// the earliest-starting passage under first_only) and token lengths of
/// every distinct relevant document, capped at length_cap.
PositionHistograms build_histograms(const std::vector<PassageMatch>& matches,
                                    const std::map<std::string, TokenSeq>& docs,
                                    const HistogramOptions& options = {});

/// Relative score headroom of a max_chunks model over FirstP: FirstP earns
/// full credit on passages ending in chunk 1; passages starting in chunks
/// 2..max_chunks-1 (and so ending within max_chunks, passages being shorter
/// than a chunk) add the extra credit. Returns 1 + extra / credit.
double estimate_ceiling(const PositionHistogram& end_hist, const PositionHistogram& start_hist,
                        std::size_t max_chunks);

/// "chunk<TAB>start%<TAB>end%" table, overflow row labeled "K+".
void write_position_table(std::ostream& out, const PositionHistogram& start, const PositionHistogram& end);
void write_histogram(std::ostream& out, const PositionHistogram& hist);
void write_histogram(std::ostream& out, const LengthHistogram& hist);

}  // namespace ldr
