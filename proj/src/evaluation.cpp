// Copyright (C) 2026 The longdoc-rank Authors
// SPDX-License-Identifier: Apache-2.0

#include "ldr/evaluation.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include <boost/math/distributions/students_t.hpp>

namespace ldr {

void Judgments::set(const std::string& qid, const std::string& docid, int grade) {
    if (grade < 0) {
        throw std::invalid_argument("negative relevance grade for " + qid + "/" + docid);
    }
    grades_[qid][docid] = grade;
}

int Judgments::grade(const std::string& qid, const std::string& docid) const {
    auto q = grades_.find(qid);
    if (q == grades_.end()) {
        return 0;
    }
    auto d = q->second.find(docid);
    return d == q->second.end() ? 0 : d->second;
}

bool Judgments::has_positive(const std::string& qid) const {
    auto q = grades_.find(qid);
    if (q == grades_.end()) {
        return false;
    }
    return std::any_of(q->second.begin(), q->second.end(), [](const auto& kv) { return kv.second > 0; });
}

std::vector<std::string> Judgments::positives(const std::string& qid) const {
    std::vector<std::string> out;
    if (const auto* q = query(qid)) {
        for (const auto& [doc, g] : *q) {
            if (g > 0) {
                out.push_back(doc);
            }
        }
    }
    return out;
}

const std::map<std::string, int>* Judgments::query(const std::string& qid) const {
    auto q = grades_.find(qid);
    return q == grades_.end() ? nullptr : &q->second;
}

void sort_ranking(RankedList& list) {
    std::stable_sort(list.entries.begin(), list.entries.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) {
            return a.second > b.second;
        }
        return a.first < b.first;
    });
    std::set<std::string> seen;
    for (const auto& e : list.entries) {
        if (!seen.insert(e.first).second) {
            throw std::invalid_argument("duplicate document " + e.first + " in ranking of query " + list.qid);
        }
    }
}

double reciprocal_rank(const RankedList& ranked, const Judgments& judgments, std::size_t cutoff) {
    const std::size_t limit = cutoff == 0 ? ranked.entries.size() : std::min(cutoff, ranked.entries.size());
    for (std::size_t r = 0; r < limit; ++r) {
        if (judgments.grade(ranked.qid, ranked.entries[r].first) > 0) {
            return 1.0 / static_cast<double>(r + 1);
        }
    }
    return 0.0;
}

namespace {

double gain(int grade) { return std::exp2(static_cast<double>(grade)) - 1.0; }

double discount(std::size_t rank0) { return 1.0 / std::log2(static_cast<double>(rank0) + 2.0); }

}  // namespace

double ndcg(const RankedList& ranked, const Judgments& judgments, std::size_t k) {
    const std::size_t limit = k == 0 ? ranked.entries.size() : std::min(k, ranked.entries.size());
    double dcg = 0.0;
    for (std::size_t r = 0; r < limit; ++r) {
        dcg += gain(judgments.grade(ranked.qid, ranked.entries[r].first)) * discount(r);
    }
    std::vector<int> ideal;
    if (const auto* q = judgments.query(ranked.qid)) {
        for (const auto& [doc, g] : *q) {
            if (g > 0) {
                ideal.push_back(g);
            }
        }
    }
    std::sort(ideal.rbegin(), ideal.rend());
    const std::size_t ideal_limit = k == 0 ? ideal.size() : std::min(k, ideal.size());
    double idcg = 0.0;
    for (std::size_t r = 0; r < ideal_limit; ++r) {
        idcg += gain(ideal[r]) * discount(r);
    }
    return idcg > 0.0 ? dcg / idcg : 0.0;
}

double average_precision(const RankedList& ranked, const Judgments& judgments) {
    const auto relevant = judgments.positives(ranked.qid).size();
    if (relevant == 0) {
        return 0.0;
    }
    double total = 0.0;
    std::size_t hits = 0;
    for (std::size_t r = 0; r < ranked.entries.size(); ++r) {
        if (judgments.grade(ranked.qid, ranked.entries[r].first) > 0) {
            ++hits;
            total += static_cast<double>(hits) / static_cast<double>(r + 1);
        }
    }
    return total / static_cast<double>(relevant);
}

std::string MetricSpec::name() const {
    switch (kind) {
        case MetricKind::mrr: return cutoff == 0 ? "mrr" : "mrr@" + std::to_string(cutoff);
        case MetricKind::ndcg: return cutoff == 0 ? "ndcg" : "ndcg@" + std::to_string(cutoff);
        case MetricKind::map: return "map";
    }
    return "?";
}

MetricSpec MetricSpec::parse(const std::string& text) {
    MetricSpec spec;
    const auto at = text.find('@');
    const std::string base = text.substr(0, at);
    if (base == "mrr") {
        spec.kind = MetricKind::mrr;
    } else if (base == "ndcg") {
        spec.kind = MetricKind::ndcg;
    } else if (base == "map") {
        spec.kind = MetricKind::map;
    } else {
        throw std::invalid_argument("unknown metric: " + text);
    }
    if (at != std::string::npos) {
        if (spec.kind == MetricKind::map) {
            throw std::invalid_argument("map takes no cutoff: " + text);
        }
        spec.cutoff = std::stoul(text.substr(at + 1));
    }
    return spec;
}

double MetricSpec::evaluate(const RankedList& ranked, const Judgments& judgments) const {
    switch (kind) {
        case MetricKind::mrr: return reciprocal_rank(ranked, judgments, cutoff);
        case MetricKind::ndcg: return ndcg(ranked, judgments, cutoff);
        case MetricKind::map: return average_precision(ranked, judgments);
    }
    return 0.0;
}

MetricReport evaluate_runs(const MetricSpec& metric, const std::vector<std::map<std::string, RankedList>>& runs,
                           const Judgments& judgments) {
    if (runs.empty()) {
        throw std::invalid_argument("evaluate_runs: no runs");
    }
    MetricReport report;
    report.metric = metric.name();
    for (const auto& [qid, list] : runs.front()) {
        if (judgments.has_positive(qid)) {
            report.qids.push_back(qid);
        } else {
            ++report.excluded;
        }
    }
    for (const auto& run : runs) {
        std::vector<double> values;
        values.reserve(report.qids.size());
        for (const auto& qid : report.qids) {
            auto it = run.find(qid);
            if (it == run.end()) {
                throw std::invalid_argument("evaluate_runs: query " + qid + " missing from a seed's run");
            }
            values.push_back(metric.evaluate(it->second, judgments));
        }
        report.per_seed.push_back(std::move(values));
    }
    report.seed_averaged.assign(report.qids.size(), 0.0);
    for (std::size_t i = 0; i < report.qids.size(); ++i) {
        double total = 0.0;
        for (const auto& seed : report.per_seed) {
            total += seed[i];
        }
        report.seed_averaged[i] = total / static_cast<double>(report.per_seed.size());
    }
    double total = 0.0;
    for (double v : report.seed_averaged) {
        total += v;
    }
    report.aggregate = report.qids.empty() ? 0.0 : total / static_cast<double>(report.qids.size());
    return report;
}

Significance paired_significance(const std::vector<double>& a, const std::vector<double>& b, double alpha) {
    if (a.size() != b.size()) {
        throw std::invalid_argument("paired_significance: length mismatch (" + std::to_string(a.size()) + " vs " +
                                    std::to_string(b.size()) + ")");
    }
    if (a.size() < 2) {
        throw std::invalid_argument("insufficient samples");
    }
    const double n = static_cast<double>(a.size());
    double mean = 0.0;
    bool all_zero = true;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = b[i] - a[i];
        mean += d;
        all_zero = all_zero && d == 0.0;
    }
    Significance out;
    if (all_zero) {
        return out;
    }
    mean /= n;
    double ss = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = b[i] - a[i] - mean;
        ss += d * d;
    }
    const double sd = std::sqrt(ss / (n - 1.0));
    if (sd == 0.0) {
        out.t_statistic = mean > 0 ? INFINITY : -INFINITY;
        out.p_value = 0.0;
    } else {
        out.t_statistic = mean / (sd / std::sqrt(n));
        const boost::math::students_t dist(n - 1.0);
        out.p_value = 2.0 * boost::math::cdf(boost::math::complement(dist, std::fabs(out.t_statistic)));
        out.p_value = std::min(1.0, out.p_value);
    }
    out.significant = out.p_value < alpha;
    return out;
}

Judgments read_qrels(std::istream& in) {
    Judgments j;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::istringstream ls(line);
        std::string qid, iter, docid;
        int grade = 0;
        if (!(ls >> qid)) {
            continue;
        }
        if (!(ls >> iter >> docid >> grade)) {
            throw std::runtime_error("qrels line " + std::to_string(lineno) + ": expected 'qid 0 docid grade'");
        }
        j.set(qid, docid, grade);
    }
    return j;
}

Judgments read_qrels(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot read qrels " + path.string());
    }
    return read_qrels(in);
}

void write_qrels(std::ostream& out, const Judgments& judgments) {
    for (const auto& [qid, docs] : judgments.all()) {
        for (const auto& [docid, grade] : docs) {
            out << qid << " 0 " << docid << ' ' << grade << '\n';
        }
    }
}

std::map<std::string, RankedList> read_run(std::istream& in) {
    std::map<std::string, RankedList> run;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::istringstream ls(line);
        std::string qid, q0, docid, rank, score_text, tag;
        if (!(ls >> qid)) {
            continue;
        }
        if (!(ls >> q0 >> docid >> rank >> score_text)) {
            throw std::runtime_error("run line " + std::to_string(lineno) + ": expected 'qid Q0 docid rank score tag'");
        }
        auto& list = run[qid];
        list.qid = qid;
        list.entries.emplace_back(docid, std::stod(score_text));
    }
    for (auto& [qid, list] : run) {
        sort_ranking(list);
    }
    return run;
}

std::map<std::string, RankedList> read_run(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot read run " + path.string());
    }
    return read_run(in);
}

void write_run(std::ostream& out, const std::map<std::string, RankedList>& run, const std::string& tag) {
    for (const auto& [qid, list] : run) {
        for (std::size_t r = 0; r < list.entries.size(); ++r) {
            out << qid << " Q0 " << list.entries[r].first << ' ' << (r + 1) << ' '
                << format_double(list.entries[r].second) << ' ' << tag << '\n';
        }
    }
}

void write_metric_report(std::ostream& out, const MetricReport& report) {
    out << "qid\t" << report.metric << '\n';
    for (std::size_t i = 0; i < report.qids.size(); ++i) {
        out << report.qids[i] << '\t' << format_double(report.seed_averaged[i]) << '\n';
    }
    out << "all\t" << format_double(report.aggregate) << '\n';
}

std::string format_double(double value) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, value);
    return std::string(buf, res.ptr);
}

}  // namespace ldr
