// Copyright (C) 2026 The longdoc-rank Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <map>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "ldr/evaluation.hpp"
#include "ldr/params.hpp"
#include "ldr/ranker.hpp"
#include "ldr/tensor.hpp"
#include "ldr/tokenize.hpp"

namespace ldr {

enum class Schedule { constant_warmup, one_cycle };

struct TrainConfig {
    /// Documents per optimizer step; each pair contributes two.
    std::size_t batch_size = 16;
    double lr_main = 1e-5;
    double lr_other = 1e-4;
    double weight_decay = 1e-7;
    double warmup_frac = 0.2;
    Schedule schedule = Schedule::constant_warmup;
    double margin = 1.0;
    std::uint64_t seed = 0;
    std::size_t epochs = 1;
    std::size_t top_k = 100;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;

    void validate() const;
};

/// First-stage candidates of one query, best first.
struct CandidateList {
    std::string qid;
    std::vector<std::pair<std::string, double>> docs;

    /// Throws on duplicate docids or ascending scores.
    void validate() const;
};

struct TrainingPair {
    std::string qid;
    std::string positive;
    std::string negative;
};

struct EpochSample {
    std::vector<TrainingPair> pairs;
    std::size_t skipped = 0;
};

/// One (positive, negative) pair per eligible query, queries visited in a
/// seed-shuffled order. The positive is drawn from judged-relevant
/// documents, the negative uniformly from the top_k candidates not judged
/// relevant. Queries lacking either are skipped and counted.
EpochSample sample_epoch(const std::vector<std::string>& qids, const Judgments& judgments,
                         const std::map<std::string, CandidateList>& candidates, std::size_t top_k,
                         std::uint64_t seed);

/// max(0, margin - pos + neg)
ad::Tensor pairwise_margin_loss(const ad::Tensor& score_pos, const ad::Tensor& score_neg, double margin);

/// Learning-rate multiplier at step t of total.
double lr_multiplier(Schedule schedule, std::size_t t, std::size_t total, double warmup_frac);

/// AdamW with decoupled weight decay and separate learning rates for the
/// main transformer and everything else.
class AdamW {
public:
    AdamW(ParameterSet& params, const TrainConfig& config);

    /// Applies one update from the gradients currently stored on the
    /// parameters, scaling each group's base learning rate by its multiplier.
    void step(double main_multiplier, double other_multiplier);
    std::size_t steps_taken() const { return t_; }

private:
    ParameterSet& params_;
    TrainConfig config_;
    std::vector<std::vector<double>> m_;
    std::vector<std::vector<double>> v_;
    std::size_t t_ = 0;
};

struct TrainingData {
    std::map<std::string, TokenSeq> queries;
    std::map<std::string, TokenSeq> docs;
    Judgments judgments;
    std::map<std::string, CandidateList> candidates;
};

struct TrainLogRecord {
    std::size_t step = 0;
    double loss = 0.0;
    double lr_main_mult = 0.0;
    double lr_other_mult = 0.0;
};

struct TrainResult {
    std::vector<TrainLogRecord> log;
    std::vector<std::size_t> skipped_per_epoch;
    std::size_t total_steps = 0;
};

class TrainingDiverged : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Pairwise training. If `log` is given, one JSON object per line is
/// written per step ({"step","loss","lr_main_mult","lr_other_mult"}) and
/// per epoch ({"epoch","pairs","skipped"}).
TrainResult train(Ranker& ranker, const TrainingData& data, const TrainConfig& config, std::ostream* log = nullptr);

}  // namespace ldr
