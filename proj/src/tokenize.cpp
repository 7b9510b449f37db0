// Copyright (C) 2026 The longdoc-rank Authors
// SPDX-License-Identifier: Apache-2.0

#include "ldr/tokenize.hpp"

#include <algorithm>
#include <fstream>
#include <iterator>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

namespace ldr {

namespace {

const std::vector<std::string>& special_tokens() {
    static const std::vector<std::string> specials = {"[PAD]", "[UNK]", "[CLS]", "[SEP]"};
    return specials;
}

bool is_space(unsigned char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f'; }

// " word" pieces; a space not followed by a word is a piece on its own.
std::vector<std::string_view> pretokenize(std::string_view text) {
    std::vector<std::string_view> pieces;
    std::size_t i = 0;
    while (i < text.size()) {
        const std::size_t start = i;
        if (text[i] == ' ') {
            ++i;
            if (i >= text.size() || text[i] == ' ') {
                pieces.push_back(text.substr(start, 1));
                continue;
            }
        }
        while (i < text.size() && text[i] != ' ') {
            ++i;
        }
        pieces.push_back(text.substr(start, i - start));
    }
    return pieces;
}

}  // namespace

Vocab::Vocab() : Vocab(special_tokens()) {}

Vocab::Vocab(std::vector<std::string> tokens) : tokens_(std::move(tokens)) {
    const auto& specials = special_tokens();
    if (tokens_.size() < specials.size() || !std::equal(specials.begin(), specials.end(), tokens_.begin())) {
        throw std::invalid_argument("vocab must start with [PAD], [UNK], [CLS], [SEP]");
    }
    for (std::size_t i = 0; i < tokens_.size(); ++i) {
        if (tokens_[i].empty()) {
            throw std::invalid_argument("vocab contains an empty token at id " + std::to_string(i));
        }
        if (!ids_.emplace(tokens_[i], static_cast<int>(i)).second) {
            throw std::invalid_argument("duplicate vocab token at id " + std::to_string(i));
        }
        if (i >= specials.size()) {
            longest_ = std::max(longest_, tokens_[i].size());
        }
    }
}

int Vocab::find(std::string_view piece) const {
    auto it = ids_.find(std::string(piece));
    return it == ids_.end() ? -1 : it->second;
}

void Vocab::save(const std::filesystem::path& path) const {
    std::ofstream os(path, std::ios::trunc);
    if (!os) {
        throw std::runtime_error("cannot write vocab " + path.string());
    }
    for (const auto& t : tokens_) {
        os << t << '\n';
    }
}

Vocab Vocab::load(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) {
        throw std::runtime_error("cannot read vocab " + path.string());
    }
    std::vector<std::string> tokens;
    std::string line;
    while (std::getline(is, line)) {
        tokens.push_back(line);
    }
    return Vocab(std::move(tokens));
}

std::string normalize_text(std::string_view text) {
    std::string out(text);
    for (char& ch : out) {
        const auto c = static_cast<unsigned char>(ch);
        if (is_space(c)) {
            ch = ' ';
        } else if (c >= 'A' && c <= 'Z') {
            ch = static_cast<char>(c - 'A' + 'a');
        }
    }
    return out;
}

Vocab build_vocab(std::string_view corpus, std::size_t max_size) {
    if (max_size < 260) {
        throw std::invalid_argument("max_size must be at least 260");
    }
    if (corpus.empty()) {
        throw std::invalid_argument("empty corpus");
    }
    const std::string text = normalize_text(corpus);

    std::map<std::string_view, long> word_counts;
    for (auto piece : pretokenize(text)) {
        ++word_counts[piece];
    }

    std::vector<std::string> tokens = special_tokens();
    std::set<std::string> known(tokens.begin(), tokens.end());
    std::set<unsigned char> bytes(text.begin(), text.end());
    for (unsigned char b : bytes) {
        tokens.emplace_back(1, static_cast<char>(b));
        known.insert(tokens.back());
    }

    std::vector<std::vector<std::string>> words;
    std::vector<long> counts;
    for (const auto& [word, count] : word_counts) {
        std::vector<std::string> symbols;
        for (char c : word) {
            symbols.emplace_back(1, c);
        }
        words.push_back(std::move(symbols));
        counts.push_back(count);
    }

    while (tokens.size() < max_size) {
        std::map<std::pair<std::string, std::string>, long> pairs;
        for (std::size_t w = 0; w < words.size(); ++w) {
            const auto& sym = words[w];
            for (std::size_t i = 0; i + 1 < sym.size(); ++i) {
                pairs[{sym[i], sym[i + 1]}] += counts[w];
            }
        }
        const std::pair<std::string, std::string>* best = nullptr;
        long best_count = 1;
        for (const auto& [pair, count] : pairs) {
            if (count > best_count) {
                best = &pair;
                best_count = count;
            }
        }
        if (best == nullptr) {
            break;
        }
        const auto left = best->first;
        const auto right = best->second;
        const std::string merged = left + right;
        for (auto& sym : words) {
            std::vector<std::string> next;
            next.reserve(sym.size());
            for (std::size_t i = 0; i < sym.size(); ++i) {
                if (i + 1 < sym.size() && sym[i] == left && sym[i + 1] == right) {
                    next.push_back(merged);
                    ++i;
                } else {
                    next.push_back(std::move(sym[i]));
                }
            }
            sym = std::move(next);
        }
        if (known.insert(merged).second) {
            tokens.push_back(merged);
        }
    }
    return Vocab(std::move(tokens));
}

Vocab build_vocab(std::istream& corpus, std::size_t max_size) {
    std::string text{std::istreambuf_iterator<char>(corpus), std::istreambuf_iterator<char>()};
    return build_vocab(text, max_size);
}

TokenSeq tokenize(const Vocab& vocab, std::string_view text) {
    const std::string norm = normalize_text(text);
    TokenSeq seq;
    std::size_t i = 0;
    while (i < norm.size()) {
        int id = -1;
        std::size_t len = std::min(vocab.longest_token(), norm.size() - i);
        for (; len > 0; --len) {
            id = vocab.find(std::string_view(norm).substr(i, len));
            if (id > Vocab::kSep) {
                break;
            }
        }
        if (len == 0) {
            id = Vocab::kUnk;
            len = 1;
        }
        seq.ids.push_back(id);
        seq.offsets.emplace_back(i, i + len);
        i += len;
    }
    return seq;
}

TokenSeq prepare_query(const Vocab& vocab, const TokenSeq& query, std::size_t max_q) {
    (void)vocab;
    if (max_q == 0) {
        throw std::invalid_argument("max_q must be at least 1");
    }
    TokenSeq out;
    const std::size_t keep = std::min(max_q, query.size());
    out.ids.assign(query.ids.begin(), query.ids.begin() + static_cast<std::ptrdiff_t>(keep));
    out.offsets.assign(query.offsets.begin(), query.offsets.begin() + static_cast<std::ptrdiff_t>(keep));
    const std::size_t end = keep > 0 ? out.offsets.back().second : 0;
    while (out.ids.size() < max_q) {
        out.ids.push_back(Vocab::kPad);
        out.offsets.emplace_back(end, end);
    }
    return out;
}

}  // namespace ldr
