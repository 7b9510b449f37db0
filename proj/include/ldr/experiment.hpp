// Copyright (C) 2026 The longdoc-rank Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "ldr/config.hpp"
#include "ldr/evaluation.hpp"
#include "ldr/position_analysis.hpp"
#include "ldr/ranker.hpp"
#include "ldr/training.hpp"

namespace ldr {

struct ExperimentData {
    Vocab vocab;
    /// Training queries, all documents, qrels and training candidates.
    TrainingData train;
    std::map<std::string, TokenSeq> test_queries;
    std::map<std::string, CandidateList> test_candidates;
};

ExperimentData load_experiment_data(const DataPaths& paths);

/// Reranks the top `depth` candidates of every test query.
std::map<std::string, RankedList> rerank(const Ranker& ranker, const ExperimentData& data, std::size_t depth);

struct ModelResult {
    std::string name;
    /// One report per configured metric, in config order.
    std::vector<MetricReport> reports;
};

struct Comparison {
    std::string model;
    std::string baseline;
    std::string metric;
    double delta = 0.0;
    /// False when the test could not be run (fewer than two queries).
    bool tested = false;
    Significance significance;
};

struct ExperimentResult {
    std::string name;
    std::vector<std::string> metrics;
    std::vector<ModelResult> models;
    std::vector<std::string> baselines;
    std::vector<Comparison> comparisons;
    /// "model seed: message" for every failed job.
    std::vector<std::string> errors;

    const ModelResult* find(const std::string& model) const;
    /// Seed-averaged aggregate of a model under the metric at `index`.
    double aggregate(const std::string& model, std::size_t metric_index) const;
};

/// Seed-ordered rankings of each model; models with a failed seed are
/// left out of the metrics.
ExperimentResult assemble_results(const ExperimentConfig& config,
                                  const std::map<std::string, std::vector<std::map<std::string, RankedList>>>& runs,
                                  const Judgments& qrels, std::vector<std::string> errors);

struct RunOptions {
    /// Restrict to these models / seeds when non-empty.
    std::vector<std::string> models;
    std::vector<std::uint64_t> seeds;
    /// Progress lines (not part of any result file).
    std::ostream* progress = nullptr;
};

/// Trains every (model, seed) job, reranks the test candidates, evaluates
/// and writes the run directory:
///   config.ini                      resolved config snapshot
///   <model>/seed_<s>/model.ckpt     trained parameters
///   <model>/seed_<s>/train_log.jsonl
///   <model>/seed_<s>/test.run       reranked test candidates
///   plus the files of emit_report. Failed jobs are listed in errors.txt;
///   finished jobs are kept.
ExperimentResult run_experiment(const ExperimentConfig& config, const RunOptions& options = {});

/// results.tsv (seed-averaged metrics with baseline markers such as
/// "0.3970^ab"), markers.tsv, comparisons.tsv and per-model per-query
/// metric files.
void emit_report(const ExperimentResult& result, const std::filesystem::path& dir);

/// Rebuilds the result of a finished run directory from its snapshot and
/// run files, then re-emits the report.
ExperimentResult report_run_dir(const std::filesystem::path& run_dir);

/// Sweep over one or more keys set together; each cell is a
/// ':'-joined tuple of values for the keys.
struct SweepAxis {
    std::vector<std::string> keys;
    std::vector<std::vector<std::string>> cells;

    std::string label(std::size_t cell) const;
};

/// Reads sweep.keys ("chunking.window, chunking.stride") and sweep.values
/// ("150:100, 477:477") from the map.
SweepAxis sweep_axis_from(const ConfigMap& entries);

/// Runs one experiment per cell under <run_dir>/<cell label> and writes
/// <run_dir>/sweep.tsv with one row per cell and one column per
/// (model, metric).
std::vector<ExperimentResult> run_sweep(const ConfigMap& entries, const std::filesystem::path& base_dir,
                                        const RunOptions& options = {});

struct PositionAnalysisPaths {
    std::filesystem::path passages;
    /// "pid<TAB>qid" lines.
    std::filesystem::path passage_queries;
    std::filesystem::path docs;
    std::filesystem::path qrels;
    std::filesystem::path vocab;
};

/// Matches every passage against every relevant document of its query and
/// writes matches.tsv, positions.tsv (chunk, start%, end%),
/// start_hist.tsv, end_hist.tsv, doc_lengths.tsv and ceiling.tsv.
PositionHistograms analyze_positions(const PositionAnalysisPaths& paths, const HistogramOptions& histogram,
                                     const MatchOptions& matching, const std::filesystem::path& out_dir,
                                     std::size_t threads = 1);

}  // namespace ldr
