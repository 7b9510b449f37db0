// Copyright (C) 2026 The longdoc-rank Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "ldr/evaluation.hpp"
#include "ldr/ranker.hpp"
#include "ldr/training.hpp"

namespace ldr {

/// Flat "section.key" -> value view of an INI file. Model sections are
/// stored as "model.<name>.<key>".
using ConfigMap = std::map<std::string, std::string>;

ConfigMap read_ini(const std::filesystem::path& path);
ConfigMap parse_ini(std::istream& in);

/// Every recognized base key with its default value. Keys of [data] have
/// no default and must be supplied.
const ConfigMap& default_config();

struct DataPaths {
    std::filesystem::path vocab;
    std::filesystem::path docs;
    std::filesystem::path train_queries;
    std::filesystem::path test_queries;
    std::filesystem::path qrels;
    std::filesystem::path train_candidates;
    std::filesystem::path test_candidates;
};

struct ModelSpec {
    std::string name;
    /// encoder.vocab_size is filled in from the vocabulary at run time.
    RankerConfig ranker;
    TrainConfig train;
};

struct ExperimentConfig {
    std::string name = "experiment";
    std::filesystem::path run_dir = "runs/experiment";
    std::vector<std::uint64_t> seeds{1};
    std::vector<MetricSpec> metrics{MetricSpec::parse("mrr@10")};
    /// Model names compared against; report markers a, b, ... follow this order.
    std::vector<std::string> baselines;
    double alpha = 0.05;
    std::size_t threads = 1;
    /// Candidates reranked per test query.
    std::size_t rerank_depth = 100;
    /// Optional checkpoint loaded into every model before training (names
    /// that do not exist in the model are ignored).
    std::string init_checkpoint;
    DataPaths data;
    /// Base training settings; each model carries its resolved copy.
    TrainConfig train;
    std::vector<ModelSpec> models;
    /// Fully resolved key-values, written as the run's config snapshot.
    ConfigMap resolved;

    void validate(bool check_paths) const;
};

/// Typed view of a config map. Relative data paths resolve against
/// base_dir. Without [model.*] sections a single model named after
/// aggregator.kind is built from the base sections. Inside a model
/// section, undotted keys address [aggregator]; dotted keys ("encoder.dropout",
/// "chunking.max_chunks") override other sections for that model.
/// [sweep] and [synthetic] sections are ignored here.
ExperimentConfig build_experiment_config(const ConfigMap& entries, const std::filesystem::path& base_dir);
ExperimentConfig load_experiment_config(const std::filesystem::path& path, bool check_paths = true);

/// Deterministic INI text of the resolved map.
void write_ini(std::ostream& out, const ConfigMap& entries);

std::string to_string(AggregatorKind kind);
AggregatorKind parse_aggregator_kind(const std::string& text);

/// Helpers shared by the CLI and the synthetic generator.
std::vector<std::string> split_list(const std::string& text, char sep = ',');
std::size_t parse_size(const std::string& key, const std::string& text);
double parse_double(const std::string& key, const std::string& text);
bool parse_bool(const std::string& key, const std::string& text);

}  // namespace ldr
