// Copyright (C) 2026 The longdoc-rank Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <filesystem>
#include <istream>
#include <map>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

namespace ldr {

/// qid -> docid -> grade. Unjudged documents count as grade 0.
class Judgments {
public:
    void set(const std::string& qid, const std::string& docid, int grade);
    int grade(const std::string& qid, const std::string& docid) const;
    bool has_positive(const std::string& qid) const;
    /// Documents with grade > 0, in docid order.
    std::vector<std::string> positives(const std::string& qid) const;
    const std::map<std::string, int>* query(const std::string& qid) const;
    const std::map<std::string, std::map<std::string, int>>& all() const { return grades_; }

private:
    std::map<std::string, std::map<std::string, int>> grades_;
};

struct RankedList {
    std::string qid;
    /// Descending score, ties by docid ascending (see sort_ranking).
    std::vector<std::pair<std::string, double>> entries;
};

/// Orders entries by descending score, breaking ties by docid ascending.
/// Throws on duplicate docids.
void sort_ranking(RankedList& list);

double reciprocal_rank(const RankedList& ranked, const Judgments& judgments, std::size_t cutoff);
/// Gain 2^g - 1, discount log2(rank + 1), normalized by the ideal ordering
/// of all judged documents of the query.
double ndcg(const RankedList& ranked, const Judgments& judgments, std::size_t k);
/// Denominator is the number of relevant documents in the judgments.
double average_precision(const RankedList& ranked, const Judgments& judgments);

enum class MetricKind { mrr, ndcg, map };

struct MetricSpec {
    MetricKind kind = MetricKind::mrr;
    /// Cutoff for mrr/ndcg; 0 means unlimited.
    std::size_t cutoff = 0;

    std::string name() const;
    static MetricSpec parse(const std::string& text);
    double evaluate(const RankedList& ranked, const Judgments& judgments) const;
};

struct MetricReport {
    std::string metric;
    std::vector<std::string> qids;
    /// per_seed[s][i] is the value of qids[i] under seed s.
    std::vector<std::vector<double>> per_seed;
    std::vector<double> seed_averaged;
    double aggregate = 0.0;
    /// Queries skipped because they had no positive judgment.
    std::size_t excluded = 0;
};

/// Evaluates every judged query present in runs[0]; each element of runs is
/// one seed's rankings keyed by qid. Queries without a positive grade are
/// excluded and counted.
MetricReport evaluate_runs(const MetricSpec& metric, const std::vector<std::map<std::string, RankedList>>& runs,
                           const Judgments& judgments);

struct Significance {
    double p_value = 1.0;
    bool significant = false;
    double t_statistic = 0.0;
};

/// Two-sided paired t-test. All-zero differences give p = 1.
Significance paired_significance(const std::vector<double>& a, const std::vector<double>& b, double alpha = 0.05);

/// "qid 0 docid grade" lines.
Judgments read_qrels(std::istream& in);
Judgments read_qrels(const std::filesystem::path& path);
void write_qrels(std::ostream& out, const Judgments& judgments);

/// "qid Q0 docid rank score tag" lines; rankings re-sorted by score.
std::map<std::string, RankedList> read_run(std::istream& in);
std::map<std::string, RankedList> read_run(const std::filesystem::path& path);
void write_run(std::ostream& out, const std::map<std::string, RankedList>& run, const std::string& tag);

/// Tab-separated "qid<TAB>value" rows per seed-averaged query plus an "all" row.
void write_metric_report(std::ostream& out, const MetricReport& report);

/// Shortest decimal text that round-trips the double.
std::string format_double(double value);

}  // namespace ldr
