// Copyright (C) 2026 The longdoc-rank Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "ldr/config.hpp"
#include "ldr/evaluation.hpp"
#include "ldr/tokenize.hpp"
#include "ldr/training.hpp"

namespace ldr {

/// Planted-relevance ranking corpus. Documents are sequences of
/// pseudo-words; each query is a short pattern of "topic" words and its one
/// relevant document embeds a passage containing that pattern. Negatives
/// embed a decoy passage built the same way from other topic words.
/// Positions are measured in words, and the emitted vocabulary makes every
/// word exactly one token.
struct SyntheticSpec {
    std::size_t train_queries = 200;
    std::size_t test_queries = 100;
    /// Candidates per query, the relevant document included.
    std::size_t docs_per_query = 10;
    std::size_t doc_len_min = 1431;
    std::size_t doc_len_max = 2000;
    std::size_t passage_len = 60;
    std::size_t pattern_len = 3;
    std::size_t chunk_size = 477;
    /// Position weights for chunks 1..K, then the mass placed beyond chunk K.
    std::vector<double> chunk_weights{1.0};
    double beyond_weight = 0.0;
    std::size_t vocab_words = 500;
    std::size_t topic_words = 200;
    /// Probability that a filler slot draws a topic word instead.
    double noise_rate = 0.0;
    /// Query words each decoy pattern shares with its query.
    std::size_t decoy_overlap = 0;
    std::uint64_t seed = 1;
    /// Seeds the word list on its own when nonzero, so corpora with
    /// different content seeds share one vocabulary.
    std::uint64_t lexicon_seed = 0;

    void validate() const;
};

/// "1:0.71, 2:0.15, 3:0.06, beyond:0.08" style.
void parse_position_distribution(const std::string& text, SyntheticSpec& spec);

/// Reads the [synthetic] section of an INI map; unspecified keys keep
/// their defaults.
SyntheticSpec synthetic_spec_from(const ConfigMap& entries);

struct PlantedPassage {
    std::string pid;
    std::string qid;
    std::string docid;
    /// Word (= token) range in the document.
    std::size_t begin = 0;
    std::size_t end = 0;
    std::string text;
};

struct SyntheticCorpus {
    std::vector<std::string> words;
    /// docid -> text; every word is preceded by one space.
    std::map<std::string, std::string> docs;
    std::map<std::string, std::string> train_queries;
    std::map<std::string, std::string> test_queries;
    Judgments qrels;
    std::map<std::string, CandidateList> train_candidates;
    std::map<std::string, CandidateList> test_candidates;
    /// The relevant passage of every query.
    std::vector<PlantedPassage> passages;

    Vocab vocab() const;
};

/// Seed-deterministic. Throws if a placement with positive weight cannot
/// fit in the shortest document.
SyntheticCorpus generate_synthetic(const SyntheticSpec& spec);

/// Writes vocab.txt, docs.tsv, train_queries.tsv, test_queries.tsv,
/// qrels.txt, train_candidates.run, test_candidates.run, passages.tsv,
/// passage_queries.tsv and data.ini (a [data] section naming them).
void write_synthetic(const SyntheticCorpus& corpus, const std::filesystem::path& dir);

}  // namespace ldr
