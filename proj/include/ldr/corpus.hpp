// Copyright (C) 2026 The longdoc-rank Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <map>
#include <ostream>
#include <string>

#include "ldr/tokenize.hpp"
#include "ldr/training.hpp"

namespace ldr {

/// "id<TAB>text" lines. Text is taken verbatim after the first tab.
std::map<std::string, std::string> read_texts(const std::filesystem::path& path);
void write_texts(std::ostream& out, const std::map<std::string, std::string>& texts);

/// Candidate lists from a TREC run file, ordered by score.
std::map<std::string, CandidateList> read_candidates(const std::filesystem::path& path);
void write_candidates(std::ostream& out, const std::map<std::string, CandidateList>& candidates,
                      const std::string& tag);

std::map<std::string, TokenSeq> tokenize_all(const Vocab& vocab, const std::map<std::string, std::string>& texts);

}  // namespace ldr
