// Copyright (C) 2026 The longdoc-rank Authors
// SPDX-License-Identifier: Apache-2.0

#include "ldr/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <set>
#include <stdexcept>

#include "ldr/corpus.hpp"
#include "ldr/rng.hpp"

namespace ldr {

void SyntheticSpec::validate() const {
    if (train_queries + test_queries == 0) {
        throw std::invalid_argument("synthetic: need at least one query");
    }
    if (docs_per_query < 2) {
        throw std::invalid_argument("synthetic: docs_per_query must be at least 2");
    }
    if (doc_len_min == 0 || doc_len_min > doc_len_max) {
        throw std::invalid_argument("synthetic: need 0 < doc_len_min <= doc_len_max");
    }
    if (pattern_len == 0 || pattern_len > passage_len) {
        throw std::invalid_argument("synthetic: need 0 < pattern_len <= passage_len");
    }
    if (chunk_size == 0) {
        throw std::invalid_argument("synthetic: chunk_size must be positive");
    }
    if (topic_words < 2 * pattern_len || topic_words >= vocab_words) {
        throw std::invalid_argument("synthetic: need 2 * pattern_len <= topic_words < vocab_words");
    }
    if (decoy_overlap >= pattern_len) {
        throw std::invalid_argument("synthetic: decoy_overlap must be below pattern_len");
    }
    if (noise_rate < 0.0 || noise_rate > 1.0) {
        throw std::invalid_argument("synthetic: noise_rate must be in [0, 1]");
    }
    double total = beyond_weight;
    bool negative = beyond_weight < 0.0;
    for (double w : chunk_weights) {
        total += w;
        negative = negative || w < 0.0;
    }
    if (negative || std::fabs(total - 1.0) > 1e-9) {
        throw std::invalid_argument("synthetic: position distribution must be non-negative and sum to 1");
    }
    if (passage_len > doc_len_min) {
        throw std::invalid_argument("infeasible placement: passage_len " + std::to_string(passage_len) +
                                    " exceeds doc_len_min " + std::to_string(doc_len_min));
    }
    for (std::size_t c = 0; c < chunk_weights.size(); ++c) {
        if (chunk_weights[c] <= 0.0) {
            continue;
        }
        const std::size_t need = c == 0 ? passage_len : c * chunk_size + passage_len;
        if (c == 0 && passage_len > chunk_size) {
            throw std::invalid_argument("infeasible placement: passage_len exceeds chunk_size");
        }
        if (need > doc_len_min) {
            throw std::invalid_argument("infeasible placement: chunk " + std::to_string(c + 1) + " needs documents of " +
                                        std::to_string(need) + " words, doc_len_min is " +
                                        std::to_string(doc_len_min));
        }
    }
    if (beyond_weight > 0.0 && chunk_weights.size() * chunk_size + passage_len > doc_len_min) {
        throw std::invalid_argument("infeasible placement: passages beyond chunk " +
                                    std::to_string(chunk_weights.size()) + " do not fit in doc_len_min");
    }
}

void parse_position_distribution(const std::string& text, SyntheticSpec& spec) {
    std::map<std::size_t, double> chunks;
    double beyond = 0.0;
    for (const auto& item : split_list(text)) {
        const auto parts = split_list(item, ':');
        if (parts.size() != 2) {
            throw std::invalid_argument("synthetic positions: expected chunk:weight items, got '" + item + "'");
        }
        const double w = parse_double("synthetic.positions", parts[1]);
        if (parts[0] == "beyond") {
            beyond = w;
        } else {
            const auto c = parse_size("synthetic.positions", parts[0]);
            if (c == 0) {
                throw std::invalid_argument("synthetic positions: chunks are numbered from 1");
            }
            chunks[c] = w;
        }
    }
    if (chunks.empty()) {
        throw std::invalid_argument("synthetic positions: no chunk weights given");
    }
    spec.chunk_weights.assign(chunks.rbegin()->first, 0.0);
    for (const auto& [c, w] : chunks) {
        spec.chunk_weights[c - 1] = w;
    }
    spec.beyond_weight = beyond;
}

SyntheticSpec synthetic_spec_from(const ConfigMap& entries) {
    SyntheticSpec spec;
    const std::map<std::string, std::size_t*> sizes = {
        {"train_queries", &spec.train_queries}, {"test_queries", &spec.test_queries},
        {"docs_per_query", &spec.docs_per_query}, {"doc_len_min", &spec.doc_len_min},
        {"doc_len_max", &spec.doc_len_max},     {"passage_len", &spec.passage_len},
        {"pattern_len", &spec.pattern_len},     {"chunk_size", &spec.chunk_size},
        {"vocab_words", &spec.vocab_words},     {"topic_words", &spec.topic_words},
        {"decoy_overlap", &spec.decoy_overlap},
    };
    for (const auto& [key, value] : entries) {
        if (key.rfind("synthetic.", 0) != 0) {
            continue;
        }
        const auto name = key.substr(10);
        if (auto it = sizes.find(name); it != sizes.end()) {
            *it->second = parse_size(key, value);
        } else if (name == "noise_rate") {
            spec.noise_rate = parse_double(key, value);
        } else if (name == "seed") {
            spec.seed = parse_size(key, value);
        } else if (name == "lexicon_seed") {
            spec.lexicon_seed = parse_size(key, value);
        } else if (name == "positions") {
            parse_position_distribution(value, spec);
        } else {
            throw std::invalid_argument("config: unknown key " + key);
        }
    }
    spec.validate();
    return spec;
}

Vocab SyntheticCorpus::vocab() const {
    std::vector<std::string> tokens = {"[PAD]", "[UNK]", "[CLS]", "[SEP]", " "};
    for (char c = 'a'; c <= 'z'; ++c) {
        tokens.emplace_back(1, c);
    }
    for (const auto& w : words) {
        tokens.push_back(" " + w);
    }
    return Vocab(std::move(tokens));
}

namespace {

std::vector<std::string> make_words(std::size_t count, Rng& rng) {
    static const std::string consonants = "bdfgklmnprstvz";
    static const std::string vowels = "aeiou";
    std::set<std::string> seen;
    std::vector<std::string> out;
    while (out.size() < count) {
        const std::size_t syllables = 2 + rng.below(2);
        std::string w;
        for (std::size_t s = 0; s < syllables; ++s) {
            w += consonants[rng.below(consonants.size())];
            w += vowels[rng.below(vowels.size())];
        }
        if (seen.insert(w).second) {
            out.push_back(std::move(w));
        }
    }
    return out;
}

std::string id_of(char prefix, std::size_t n, std::size_t width) {
    std::string digits = std::to_string(n);
    return std::string(1, prefix) + std::string(width > digits.size() ? width - digits.size() : 0, '0') + digits;
}

std::string join_words(const std::vector<std::size_t>& ids, const std::vector<std::string>& words, std::size_t begin,
                       std::size_t end) {
    std::string text;
    for (std::size_t i = begin; i < end; ++i) {
        text += ' ';
        text += words[ids[i]];
    }
    return text;
}

}  // namespace

SyntheticCorpus generate_synthetic(const SyntheticSpec& spec) {
    spec.validate();
    Rng rng(spec.seed);
    SyntheticCorpus corpus;
    if (spec.lexicon_seed != 0) {
        Rng lexicon(spec.lexicon_seed);
        corpus.words = make_words(spec.vocab_words, lexicon);
    } else {
        corpus.words = make_words(spec.vocab_words, rng);
    }
    const std::size_t topics = spec.topic_words;
    const std::size_t fillers = spec.vocab_words - topics;

    std::vector<double> cumulative;
    double acc = 0.0;
    for (double w : spec.chunk_weights) {
        cumulative.push_back(acc += w);
    }
    cumulative.push_back(acc += spec.beyond_weight);
    auto draw_bucket = [&]() {
        const double u = rng.uniform() * acc;
        std::size_t last = 0;
        for (std::size_t b = 0; b < cumulative.size(); ++b) {
            if (u < cumulative[b]) {
                return b;
            }
            if (cumulative[b] > (b == 0 ? 0.0 : cumulative[b - 1])) {
                last = b;
            }
        }
        return last;
    };
    auto place = [&](std::size_t bucket, std::size_t len) {
        const std::size_t c = spec.chunk_size;
        const std::size_t p = spec.passage_len;
        std::size_t lo = 0;
        std::size_t hi = 0;
        if (bucket == 0) {
            hi = std::min(c, len) - p;
        } else if (bucket < spec.chunk_weights.size()) {
            lo = bucket * c;
            hi = std::min((bucket + 1) * c - 1, len - p);
        } else {
            lo = spec.chunk_weights.size() * c;
            hi = len - p;
        }
        return lo + rng.below(hi - lo + 1);
    };
    auto filler = [&]() {
        if (spec.noise_rate > 0.0 && rng.uniform() < spec.noise_rate) {
            return static_cast<std::size_t>(rng.below(topics));
        }
        return topics + static_cast<std::size_t>(rng.below(fillers));
    };
    auto pick_topics = [&](std::size_t n, const std::set<std::size_t>& exclude) {
        std::vector<std::size_t> out;
        std::set<std::size_t> used = exclude;
        while (out.size() < n) {
            const auto w = static_cast<std::size_t>(rng.below(topics));
            if (used.insert(w).second) {
                out.push_back(w);
            }
        }
        return out;
    };

    const std::size_t total_queries = spec.train_queries + spec.test_queries;
    const std::size_t qwidth = std::to_string(total_queries).size();
    const std::size_t dwidth = std::to_string(spec.docs_per_query).size();
    for (std::size_t q = 0; q < total_queries; ++q) {
        const std::string qid = id_of('q', q + 1, qwidth);
        const auto pattern = pick_topics(spec.pattern_len, {});
        std::vector<std::size_t> query_ids(pattern.begin(), pattern.end());
        const std::string query_text = join_words(query_ids, corpus.words, 0, query_ids.size());
        (q < spec.train_queries ? corpus.train_queries : corpus.test_queries)[qid] = query_text;

        const std::size_t relevant_slot = rng.below(spec.docs_per_query);
        CandidateList cands{qid, {}};
        for (std::size_t d = 0; d < spec.docs_per_query; ++d) {
            const std::string docid = "d" + qid.substr(1) + "_" + id_of('n', d + 1, dwidth).substr(1);
            const std::size_t len = spec.doc_len_min + rng.below(spec.doc_len_max - spec.doc_len_min + 1);
            std::vector<std::size_t> ids(len);
            for (auto& w : ids) {
                w = filler();
            }
            std::vector<std::size_t> planted = pattern;
            const bool relevant = d == relevant_slot;
            if (!relevant) {
                std::vector<std::size_t> shared(pattern.begin(), pattern.end());
                for (std::size_t i = shared.size(); i > 1; --i) {
                    std::swap(shared[i - 1], shared[rng.below(i)]);
                }
                shared.resize(spec.decoy_overlap);
                const auto fresh = pick_topics(spec.pattern_len - spec.decoy_overlap,
                                               std::set<std::size_t>(pattern.begin(), pattern.end()));
                planted = shared;
                planted.insert(planted.end(), fresh.begin(), fresh.end());
                for (std::size_t i = planted.size(); i > 1; --i) {
                    std::swap(planted[i - 1], planted[rng.below(i)]);
                }
            }
            const std::size_t start = place(draw_bucket(), len);
            const std::size_t offset = start + rng.below(spec.passage_len - spec.pattern_len + 1);
            std::copy(planted.begin(), planted.end(), ids.begin() + static_cast<std::ptrdiff_t>(offset));
            corpus.docs[docid] = join_words(ids, corpus.words, 0, len);
            if (relevant) {
                corpus.qrels.set(qid, docid, 1);
                corpus.passages.push_back({"p" + qid.substr(1), qid, docid, start, start + spec.passage_len,
                                           join_words(ids, corpus.words, start, start + spec.passage_len).substr(1)});
            }
            cands.docs.emplace_back(docid, 0.0);
        }
        for (std::size_t i = cands.docs.size(); i > 1; --i) {
            std::swap(cands.docs[i - 1], cands.docs[rng.below(i)]);
        }
        for (std::size_t r = 0; r < cands.docs.size(); ++r) {
            cands.docs[r].second = static_cast<double>(cands.docs.size() - r);
        }
        (q < spec.train_queries ? corpus.train_candidates : corpus.test_candidates)[qid] = std::move(cands);
    }
    return corpus;
}

void write_synthetic(const SyntheticCorpus& corpus, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    auto open = [&](const char* name) {
        std::ofstream out(dir / name, std::ios::binary);
        if (!out) {
            throw std::runtime_error("cannot write " + (dir / name).string());
        }
        return out;
    };
    corpus.vocab().save(dir / "vocab.txt");
    {
        auto out = open("docs.tsv");
        write_texts(out, corpus.docs);
    }
    {
        auto out = open("train_queries.tsv");
        write_texts(out, corpus.train_queries);
    }
    {
        auto out = open("test_queries.tsv");
        write_texts(out, corpus.test_queries);
    }
    {
        auto out = open("qrels.txt");
        write_qrels(out, corpus.qrels);
    }
    {
        auto out = open("train_candidates.run");
        write_candidates(out, corpus.train_candidates, "synthetic");
    }
    {
        auto out = open("test_candidates.run");
        write_candidates(out, corpus.test_candidates, "synthetic");
    }
    {
        auto texts = open("passages.tsv");
        auto map = open("passage_queries.tsv");
        for (const auto& p : corpus.passages) {
            texts << p.pid << '\t' << p.text << '\n';
            map << p.pid << '\t' << p.qid << '\n';
        }
    }
    {
        auto out = open("data.ini");
        out << "[data]\n"
            << "vocab = vocab.txt\n"
            << "docs = docs.tsv\n"
            << "train_queries = train_queries.tsv\n"
            << "test_queries = test_queries.tsv\n"
            << "qrels = qrels.txt\n"
            << "train_candidates = train_candidates.run\n"
            << "test_candidates = test_candidates.run\n";
    }
}

}  // namespace ldr
