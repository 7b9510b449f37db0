// Copyright (C) 2026 The longdoc-rank Authors
// SPDX-License-Identifier: Apache-2.0

#include "ldr/training.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "json.hpp"

#include "ldr/rng.hpp"

namespace ldr {

void TrainConfig::validate() const {
    if (batch_size < 2 || batch_size % 2 != 0) {
        throw std::invalid_argument("train: batch_size must be even and at least 2");
    }
    if (!(warmup_frac > 0.0 && warmup_frac < 1.0)) {
        throw std::invalid_argument("train: warmup_frac must be in (0, 1)");
    }
    if (epochs == 0 || top_k == 0) {
        throw std::invalid_argument("train: epochs and top_k must be positive");
    }
    if (lr_main < 0.0 || lr_other < 0.0 || weight_decay < 0.0) {
        throw std::invalid_argument("train: learning rates and weight decay must be non-negative");
    }
}

void CandidateList::validate() const {
    std::set<std::string> seen;
    for (std::size_t i = 0; i < docs.size(); ++i) {
        if (!seen.insert(docs[i].first).second) {
            throw std::invalid_argument("candidates of " + qid + ": duplicate document " + docs[i].first);
        }
        if (i > 0 && docs[i].second > docs[i - 1].second) {
            throw std::invalid_argument("candidates of " + qid + ": scores must be non-increasing");
        }
    }
}

EpochSample sample_epoch(const std::vector<std::string>& qids, const Judgments& judgments,
                         const std::map<std::string, CandidateList>& candidates, std::size_t top_k,
                         std::uint64_t seed) {
    Rng rng(seed);
    std::vector<std::string> order = qids;
    for (std::size_t i = order.size(); i > 1; --i) {
        std::swap(order[i - 1], order[rng.below(i)]);
    }
    EpochSample sample;
    for (const auto& qid : order) {
        const auto positives = judgments.positives(qid);
        std::vector<std::string> negatives;
        if (auto it = candidates.find(qid); it != candidates.end()) {
            const std::size_t limit = std::min(top_k, it->second.docs.size());
            for (std::size_t i = 0; i < limit; ++i) {
                if (judgments.grade(qid, it->second.docs[i].first) <= 0) {
                    negatives.push_back(it->second.docs[i].first);
                }
            }
        }
        if (positives.empty() || negatives.empty()) {
            ++sample.skipped;
            continue;
        }
        const auto& pos = positives[rng.below(positives.size())];
        const auto& neg = negatives[rng.below(negatives.size())];
        sample.pairs.push_back({qid, pos, neg});
    }
    return sample;
}

ad::Tensor pairwise_margin_loss(const ad::Tensor& score_pos, const ad::Tensor& score_neg, double margin) {
    return ad::relu(ad::add_scalar(ad::sub(score_neg, score_pos), margin));
}

double lr_multiplier(Schedule schedule, std::size_t t, std::size_t total, double warmup_frac) {
    if (total == 0 || t > total) {
        throw std::invalid_argument("lr_multiplier: need 0 <= t <= total and total > 0");
    }
    const double warm = warmup_frac * static_cast<double>(total);
    const double step = static_cast<double>(t);
    if (step < warm) {
        return step / warm;
    }
    if (schedule == Schedule::constant_warmup) {
        return 1.0;
    }
    const double rest = static_cast<double>(total) - warm;
    return rest <= 0.0 ? 0.0 : (static_cast<double>(total) - step) / rest;
}

AdamW::AdamW(ParameterSet& params, const TrainConfig& config) : params_(params), config_(config) {
    for (const auto& e : params_.entries()) {
        m_.emplace_back(e.tensor.numel(), 0.0);
        v_.emplace_back(e.tensor.numel(), 0.0);
    }
}

void AdamW::step(double main_multiplier, double other_multiplier) {
    ++t_;
    const double b1 = config_.beta1;
    const double b2 = config_.beta2;
    const double correction1 = 1.0 - std::pow(b1, static_cast<double>(t_));
    const double correction2 = 1.0 - std::pow(b2, static_cast<double>(t_));
    const auto& entries = params_.entries();
    for (std::size_t p = 0; p < entries.size(); ++p) {
        auto tensor = entries[p].tensor;
        const auto grad = tensor.grad();
        if (grad.empty()) {
            continue;
        }
        const double lr = entries[p].group == ParamGroup::main ? config_.lr_main * main_multiplier
                                                               : config_.lr_other * other_multiplier;
        auto values = tensor.mutable_data();
        auto& m = m_[p];
        auto& v = v_[p];
        const double decay = 1.0 - lr * config_.weight_decay;
        for (std::size_t i = 0; i < values.size(); ++i) {
            m[i] = b1 * m[i] + (1.0 - b1) * grad[i];
            v[i] = b2 * v[i] + (1.0 - b2) * grad[i] * grad[i];
            const double m_hat = m[i] / correction1;
            const double v_hat = v[i] / correction2;
            values[i] = values[i] * decay - lr * m_hat / (std::sqrt(v_hat) + config_.eps);
        }
    }
}

TrainResult train(Ranker& ranker, const TrainingData& data, const TrainConfig& config, std::ostream* log) {
    config.validate();
    for (const auto& [qid, cands] : data.candidates) {
        cands.validate();
    }
    std::vector<std::string> qids;
    for (const auto& [qid, q] : data.queries) {
        qids.push_back(qid);
    }

    std::vector<EpochSample> epochs;
    TrainResult result;
    const std::size_t pairs_per_batch = config.batch_size / 2;
    for (std::size_t e = 0; e < config.epochs; ++e) {
        epochs.push_back(sample_epoch(qids, data.judgments, data.candidates, config.top_k, mix_seed(config.seed, e)));
        result.total_steps += (epochs.back().pairs.size() + pairs_per_batch - 1) / pairs_per_batch;
        result.skipped_per_epoch.push_back(epochs.back().skipped);
    }

    auto lookup = [](const std::map<std::string, TokenSeq>& m, const std::string& key, const char* what) -> const TokenSeq& {
        auto it = m.find(key);
        if (it == m.end()) {
            throw std::invalid_argument(std::string("train: unknown ") + what + " " + key);
        }
        return it->second;
    };

    AdamW optimizer(ranker.params(), config);
    std::size_t step = 0;
    for (std::size_t e = 0; e < epochs.size(); ++e) {
        const auto& pairs = epochs[e].pairs;
        for (std::size_t start = 0; start < pairs.size(); start += pairs_per_batch) {
            ranker.params().zero_grad();
            double batch_loss = 0.0;
            const std::size_t end = std::min(pairs.size(), start + pairs_per_batch);
            for (std::size_t i = start; i < end; ++i) {
                const auto& pair = pairs[i];
                const auto& query = lookup(data.queries, pair.qid, "query");
                const std::uint64_t base = mix_seed(config.seed, 0x7a11 + step * 4096 + (i - start) * 2);
                const auto pos = ranker.score(query, lookup(data.docs, pair.positive, "document"), {true, base});
                const auto neg =
                    ranker.score(query, lookup(data.docs, pair.negative, "document"), {true, mix_seed(base, 1)});
                const auto loss = pairwise_margin_loss(pos, neg, config.margin);
                ad::backward(loss);
                batch_loss += loss.item();
            }
            if (!std::isfinite(batch_loss)) {
                throw TrainingDiverged("training diverged at step " + std::to_string(step) + " (epoch " +
                                       std::to_string(e) + "): loss is " + std::to_string(batch_loss));
            }
            const double mult = lr_multiplier(config.schedule, step, result.total_steps, config.warmup_frac);
            optimizer.step(mult, mult);
            result.log.push_back({step, batch_loss, mult, mult});
            if (log != nullptr) {
                nlohmann::ordered_json rec;
                rec["step"] = step;
                rec["loss"] = batch_loss;
                rec["lr_main_mult"] = mult;
                rec["lr_other_mult"] = mult;
                *log << rec.dump() << '\n';
            }
            ++step;
        }
        if (log != nullptr) {
            nlohmann::ordered_json rec;
            rec["epoch"] = e;
            rec["pairs"] = pairs.size();
            rec["skipped"] = epochs[e].skipped;
            *log << rec.dump() << '\n';
        }
    }
    return result;
}

}  // namespace ldr
