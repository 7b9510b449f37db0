// Copyright (C) 2026 The longdoc-rank Authors
// SPDX-License-Identifier: Apache-2.0

#include "ldr/position_analysis.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

#include "ldr/evaluation.hpp"

namespace ldr {

SubstringMatch longest_common_substring(std::string_view needle, std::string_view haystack) {
    SubstringMatch best;
    std::vector<std::size_t> prev(haystack.size() + 1, 0);
    std::vector<std::size_t> cur(haystack.size() + 1, 0);
    for (std::size_t i = 1; i <= needle.size(); ++i) {
        for (std::size_t j = 1; j <= haystack.size(); ++j) {
            cur[j] = needle[i - 1] == haystack[j - 1] ? prev[j - 1] + 1 : 0;
            if (cur[j] == 0) {
                continue;
            }
            const std::size_t begin = j - cur[j];
            if (cur[j] > best.length || (cur[j] == best.length && begin < best.haystack_begin)) {
                best.length = cur[j];
                best.haystack_begin = begin;
            }
        }
        std::swap(prev, cur);
    }
    return best;
}

std::size_t longest_common_subsequence(std::string_view a, std::string_view b) {
    std::vector<std::size_t> prev(b.size() + 1, 0);
    std::vector<std::size_t> cur(b.size() + 1, 0);
    for (std::size_t i = 1; i <= a.size(); ++i) {
        for (std::size_t j = 1; j <= b.size(); ++j) {
            cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
        }
        std::swap(prev, cur);
    }
    return prev[b.size()];
}

namespace {

/// LCS length plus the first/last matched positions in b of one optimal
/// alignment (recovered by backtracking the full table).
std::pair<std::size_t, Span> lcs_with_span(std::string_view a, std::string_view b) {
    const std::size_t n = a.size();
    const std::size_t m = b.size();
    std::vector<std::size_t> table((n + 1) * (m + 1), 0);
    auto at = [&](std::size_t i, std::size_t j) -> std::size_t& { return table[i * (m + 1) + j]; };
    for (std::size_t i = 1; i <= n; ++i) {
        for (std::size_t j = 1; j <= m; ++j) {
            at(i, j) = a[i - 1] == b[j - 1] ? at(i - 1, j - 1) + 1 : std::max(at(i - 1, j), at(i, j - 1));
        }
    }
    const std::size_t length = at(n, m);
    if (length == 0) {
        return {0, {0, 0}};
    }
    std::size_t i = n;
    std::size_t j = m;
    std::size_t first = m;
    std::size_t last = 0;
    bool any = false;
    while (i > 0 && j > 0) {
        if (a[i - 1] == b[j - 1] && at(i, j) == at(i - 1, j - 1) + 1) {
            if (!any) {
                last = j;
                any = true;
            }
            first = j - 1;
            --i;
            --j;
        } else if (at(i - 1, j) >= at(i, j - 1)) {
            --i;
        } else {
            --j;
        }
    }
    return {length, {first, last}};
}

}  // namespace

WindowMatch best_window_subsequence(std::string_view needle, std::string_view haystack, std::size_t window,
                                    std::size_t stride) {
    if (window == 0 || stride == 0) {
        throw std::invalid_argument("best_window_subsequence: window and stride must be positive");
    }
    WindowMatch best;
    std::vector<std::size_t> starts{0};
    const std::size_t tail = haystack.size() > window ? haystack.size() - window : 0;
    for (std::size_t s = stride; s < tail; s += stride) {
        starts.push_back(s);
    }
    if (tail > 0) {
        starts.push_back(tail);
    }
    bool first = true;
    for (std::size_t s : starts) {
        const std::size_t e = std::min(haystack.size(), s + window);
        const auto [length, span] = lcs_with_span(needle, haystack.substr(s, e - s));
        if (first || length > best.length) {
            best.length = length;
            best.window = {s, e};
            best.span = length == 0 ? Span{s, s} : Span{s + span.first, s + span.second};
            first = false;
        }
    }
    return best;
}

MatchResult match_passage(std::string_view passage, std::string_view document, const MatchOptions& options) {
    if (passage.empty()) {
        throw std::invalid_argument("match_passage: empty passage");
    }
    const std::string p = normalize_text(passage);
    const std::string d = normalize_text(document);
    const double plen = static_cast<double>(p.size());

    MatchResult result;
    const auto sub = longest_common_substring(p, d);
    const double sub_score = static_cast<double>(sub.length) / plen;
    if (sub.length > 0 && sub_score >= options.substring_threshold) {
        result.matched = true;
        result.method = MatchMethod::substring;
        result.score = sub_score;
        result.char_span = {sub.haystack_begin, sub.haystack_begin + sub.length};
        return result;
    }

    const auto window = static_cast<std::size_t>(std::ceil(options.window_factor * plen));
    const auto stride = std::max<std::size_t>(1, static_cast<std::size_t>(options.stride_fraction * window));
    const auto win = best_window_subsequence(p, d, std::max<std::size_t>(1, window), stride);
    const double seq_score = static_cast<double>(win.length) / plen;
    if (win.length > 0 && seq_score >= options.subsequence_threshold) {
        result.matched = true;
        result.method = MatchMethod::subsequence;
        result.score = seq_score;
        result.char_span = win.span;
        return result;
    }
    result.score = std::max(sub_score, seq_score);
    return result;
}

Span char_span_to_token_span(const TokenSeq& doc, Span char_span) {
    const auto& off = doc.offsets;
    std::size_t first = 0;
    while (first < off.size() && off[first].second <= char_span.first) {
        ++first;
    }
    if (char_span.second <= char_span.first) {
        return {first, first};
    }
    std::size_t last = first;
    while (last < off.size() && off[last].first < char_span.second) {
        ++last;
    }
    return {first, last};
}

std::size_t chunk_index(std::size_t token_pos, std::size_t chunk_size) {
    if (chunk_size == 0) {
        throw std::invalid_argument("chunk_index: chunk_size must be positive");
    }
    return token_pos / chunk_size + 1;
}

std::size_t PositionHistogram::total() const {
    std::size_t t = 0;
    for (auto c : counts) {
        t += c;
    }
    return t;
}

double PositionHistogram::fraction(std::size_t chunk) const {
    const auto t = total();
    if (t == 0 || chunk == 0 || chunk > counts.size()) {
        return 0.0;
    }
    return static_cast<double>(counts[chunk - 1]) / static_cast<double>(t);
}

PositionHistograms build_histograms(const std::vector<PassageMatch>& matches,
                                    const std::map<std::string, TokenSeq>& docs, const HistogramOptions& options) {
    if (options.max_chunk == 0 || options.length_bin == 0) {
        throw std::invalid_argument("build_histograms: max_chunk and length_bin must be positive");
    }
    PositionHistograms out;
    out.start = {HistogramBasis::start, options.chunk_size, std::vector<std::size_t>(options.max_chunk + 1, 0)};
    out.end = {HistogramBasis::end, options.chunk_size, std::vector<std::size_t>(options.max_chunk + 1, 0)};
    out.doc_lengths.bin_width = options.length_bin;
    out.doc_lengths.cap = options.length_cap;
    out.doc_lengths.counts.assign((options.length_cap + options.length_bin - 1) / options.length_bin + 1, 0);

    auto bucket = [&](std::size_t pos) { return std::min(chunk_index(pos, options.chunk_size), options.max_chunk + 1) - 1; };

    using Key = std::pair<std::string, std::string>;
    std::map<Key, std::vector<Span>> spans;
    std::set<Key> relevant;
    for (const auto& m : matches) {
        auto doc = docs.find(m.docid);
        if (doc == docs.end()) {
            throw std::invalid_argument("build_histograms: unknown document " + m.docid);
        }
        relevant.insert({m.qid, m.docid});
        if (m.match.matched && m.match.token_span.second > m.match.token_span.first) {
            spans[{m.qid, m.docid}].push_back(m.match.token_span);
        }
    }
    for (const auto& key : relevant) {
        const auto len = std::min(docs.at(key.second).size(), options.length_cap);
        out.doc_lengths.counts[len / options.length_bin] += 1;
    }
    for (auto& [key, list] : spans) {
        std::stable_sort(list.begin(), list.end(), [](const Span& a, const Span& b) { return a.first < b.first; });
        const std::size_t take = options.first_only ? 1 : list.size();
        for (std::size_t i = 0; i < take; ++i) {
            out.start.counts[bucket(list[i].first)] += 1;
            out.end.counts[bucket(list[i].second - 1)] += 1;
        }
    }
    return out;
}

double estimate_ceiling(const PositionHistogram& end_hist, const PositionHistogram& start_hist,
                        std::size_t max_chunks) {
    if (end_hist.total() == 0 || start_hist.total() == 0) {
        throw std::invalid_argument("degenerate distribution: empty histogram");
    }
    const double credit = end_hist.fraction(1);
    if (credit <= 0.0) {
        throw std::invalid_argument("degenerate distribution: no passage ends in chunk 1");
    }
    double extra = 0.0;
    for (std::size_t c = 2; c + 1 <= max_chunks && c < start_hist.counts.size(); ++c) {
        extra += start_hist.fraction(c);
    }
    return 1.0 + extra / credit;
}

namespace {

std::string bucket_label(const PositionHistogram& hist, std::size_t i) {
    const auto k = hist.counts.size() - 1;
    return i < k ? std::to_string(i + 1) : std::to_string(k + 1) + "+";
}

std::string percent(const PositionHistogram& hist, std::size_t i) {
    const auto t = hist.total();
    return format_double(t == 0 ? 0.0 : 100.0 * static_cast<double>(hist.counts[i]) / static_cast<double>(t));
}

}  // namespace

void write_position_table(std::ostream& out, const PositionHistogram& start, const PositionHistogram& end) {
    if (start.counts.size() != end.counts.size()) {
        throw std::invalid_argument("write_position_table: histograms have different bucket counts");
    }
    out << "chunk\tstart%\tend%\n";
    for (std::size_t i = 0; i < start.counts.size(); ++i) {
        out << bucket_label(start, i) << '\t' << percent(start, i) << '\t' << percent(end, i) << '\n';
    }
}

void write_histogram(std::ostream& out, const PositionHistogram& hist) {
    out << "chunk\tcount\n";
    for (std::size_t i = 0; i < hist.counts.size(); ++i) {
        out << bucket_label(hist, i) << '\t' << hist.counts[i] << '\n';
    }
}

void write_histogram(std::ostream& out, const LengthHistogram& hist) {
    out << "length_from\tcount\n";
    for (std::size_t i = 0; i < hist.counts.size(); ++i) {
        out << i * hist.bin_width << '\t' << hist.counts[i] << '\n';
    }
}

}  // namespace ldr
