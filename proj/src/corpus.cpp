// Copyright (C) 2026 The longdoc-rank Authors
// SPDX-License-Identifier: Apache-2.0

#include "ldr/corpus.hpp"

#include <fstream>
#include <stdexcept>

#include "ldr/evaluation.hpp"

namespace ldr {

std::map<std::string, std::string> read_texts(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::runtime_error("cannot read " + path.string());
    }
    std::map<std::string, std::string> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line.empty()) {
            continue;
        }
        const auto tab = line.find('\t');
        if (tab == std::string::npos || tab == 0) {
            throw std::runtime_error(path.string() + ":" + std::to_string(lineno) + ": expected 'id<TAB>text'");
        }
        if (!out.emplace(line.substr(0, tab), line.substr(tab + 1)).second) {
            throw std::runtime_error(path.string() + ":" + std::to_string(lineno) + ": duplicate id " +
                                     line.substr(0, tab));
        }
    }
    return out;
}

void write_texts(std::ostream& out, const std::map<std::string, std::string>& texts) {
    for (const auto& [id, text] : texts) {
        out << id << '\t' << text << '\n';
    }
}

std::map<std::string, CandidateList> read_candidates(const std::filesystem::path& path) {
    std::map<std::string, CandidateList> out;
    for (auto& [qid, ranked] : read_run(path)) {
        out[qid] = {qid, std::move(ranked.entries)};
    }
    return out;
}

void write_candidates(std::ostream& out, const std::map<std::string, CandidateList>& candidates,
                      const std::string& tag) {
    std::map<std::string, RankedList> run;
    for (const auto& [qid, list] : candidates) {
        run[qid] = {qid, list.docs};
    }
    write_run(out, run, tag);
}

std::map<std::string, TokenSeq> tokenize_all(const Vocab& vocab, const std::map<std::string, std::string>& texts) {
    std::map<std::string, TokenSeq> out;
    for (const auto& [id, text] : texts) {
        out.emplace(id, tokenize(vocab, text));
    }
    return out;
}

}  // namespace ldr
