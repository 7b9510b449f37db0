// Copyright (C) 2026 The longdoc-rank Authors
// SPDX-License-Identifier: Apache-2.0

#include "ldr/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <fstream>
#include <set>
#include <stdexcept>
#include <thread>

#include "ldr/corpus.hpp"

namespace ldr {

namespace fs = std::filesystem;

namespace {

std::ofstream open_out(const fs::path& path) {
    fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw std::runtime_error("cannot write " + path.string());
    }
    return out;
}

/// Runs fn(i) for i in [0, n) on up to `threads` workers.
template <typename Fn>
void parallel_for(std::size_t n, std::size_t threads, Fn fn) {
    threads = std::max<std::size_t>(1, std::min(threads, n));
    if (threads == 1) {
        for (std::size_t i = 0; i < n; ++i) {
            fn(i);
        }
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < n; i = next++) {
                fn(i);
            }
        });
    }
    for (auto& th : pool) {
        th.join();
    }
}

fs::path job_dir(const fs::path& run_dir, const std::string& model, std::uint64_t seed) {
    return run_dir / model / ("seed_" + std::to_string(seed));
}

std::string fixed4(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4f", v);
    return buf;
}

}  // namespace

ExperimentData load_experiment_data(const DataPaths& paths) {
    ExperimentData data;
    data.vocab = Vocab::load(paths.vocab);
    data.train.docs = tokenize_all(data.vocab, read_texts(paths.docs));
    data.train.queries = tokenize_all(data.vocab, read_texts(paths.train_queries));
    data.test_queries = tokenize_all(data.vocab, read_texts(paths.test_queries));
    data.train.judgments = read_qrels(paths.qrels);
    data.train.candidates = read_candidates(paths.train_candidates);
    data.test_candidates = read_candidates(paths.test_candidates);
    for (const auto* cands : {&data.train.candidates, &data.test_candidates}) {
        for (const auto& [qid, list] : *cands) {
            list.validate();
            for (const auto& [docid, score] : list.docs) {
                if (data.train.docs.count(docid) == 0) {
                    throw std::runtime_error("candidate " + docid + " of query " + qid + " is not in the corpus");
                }
            }
        }
    }
    return data;
}

std::map<std::string, RankedList> rerank(const Ranker& ranker, const ExperimentData& data, std::size_t depth) {
    std::map<std::string, RankedList> run;
    for (const auto& [qid, query] : data.test_queries) {
        auto cands = data.test_candidates.find(qid);
        if (cands == data.test_candidates.end()) {
            continue;
        }
        RankedList list{qid, {}};
        const std::size_t limit = std::min(depth, cands->second.docs.size());
        for (std::size_t i = 0; i < limit; ++i) {
            const auto& docid = cands->second.docs[i].first;
            list.entries.emplace_back(docid, ranker.score_value(query, data.train.docs.at(docid)));
        }
        sort_ranking(list);
        run.emplace(qid, std::move(list));
    }
    return run;
}

const ModelResult* ExperimentResult::find(const std::string& model) const {
    for (const auto& m : models) {
        if (m.name == model) {
            return &m;
        }
    }
    return nullptr;
}

double ExperimentResult::aggregate(const std::string& model, std::size_t metric_index) const {
    const auto* m = find(model);
    if (m == nullptr) {
        throw std::invalid_argument("no results for model " + model);
    }
    return m->reports.at(metric_index).aggregate;
}

ExperimentResult assemble_results(const ExperimentConfig& config,
                                  const std::map<std::string, std::vector<std::map<std::string, RankedList>>>& runs,
                                  const Judgments& qrels, std::vector<std::string> errors) {
    ExperimentResult result;
    result.name = config.name;
    result.errors = std::move(errors);
    for (const auto& metric : config.metrics) {
        result.metrics.push_back(metric.name());
    }
    for (const auto& model : config.models) {
        auto it = runs.find(model.name);
        if (it == runs.end() || it->second.empty()) {
            continue;
        }
        ModelResult mr{model.name, {}};
        for (const auto& metric : config.metrics) {
            mr.reports.push_back(evaluate_runs(metric, it->second, qrels));
        }
        result.models.push_back(std::move(mr));
    }
    for (const auto& b : config.baselines) {
        result.baselines.push_back(b);
    }
    for (const auto& model : result.models) {
        for (const auto& baseline : result.baselines) {
            const auto* base = result.find(baseline);
            if (base == nullptr || baseline == model.name) {
                continue;
            }
            for (std::size_t k = 0; k < result.metrics.size(); ++k) {
                Comparison c;
                c.model = model.name;
                c.baseline = baseline;
                c.metric = result.metrics[k];
                c.delta = model.reports[k].aggregate - base->reports[k].aggregate;
                if (model.reports[k].qids != base->reports[k].qids) {
                    throw std::runtime_error("models " + model.name + " and " + baseline +
                                             " were evaluated on different queries");
                }
                if (model.reports[k].qids.size() >= 2) {
                    c.tested = true;
                    c.significance = paired_significance(base->reports[k].seed_averaged,
                                                         model.reports[k].seed_averaged, config.alpha);
                }
                result.comparisons.push_back(c);
            }
        }
    }
    return result;
}

ExperimentResult run_experiment(const ExperimentConfig& config, const RunOptions& options) {
    config.validate(true);
    const auto data = load_experiment_data(config.data);
    {
        auto out = open_out(config.run_dir / "config.ini");
        write_ini(out, config.resolved);
    }

    struct Job {
        const ModelSpec* model;
        std::uint64_t seed;
        std::map<std::string, RankedList> run;
        std::string error;
    };
    std::vector<Job> jobs;
    auto selected = [](const auto& list, const auto& value) {
        return list.empty() || std::find(list.begin(), list.end(), value) != list.end();
    };
    for (const auto& model : config.models) {
        if (!selected(options.models, model.name)) {
            continue;
        }
        for (auto seed : config.seeds) {
            if (selected(options.seeds, seed)) {
                jobs.push_back({&model, seed, {}, {}});
            }
        }
    }

    parallel_for(jobs.size(), config.threads, [&](std::size_t i) {
        auto& job = jobs[i];
        try {
            const auto dir = job_dir(config.run_dir, job.model->name, job.seed);
            fs::create_directories(dir);
            RankerConfig rc = job.model->ranker;
            rc.encoder.vocab_size = data.vocab.size();
            Ranker ranker(rc, job.seed);
            if (!config.init_checkpoint.empty()) {
                ranker.params().assign(load_checkpoint(config.init_checkpoint), false);
            }
            TrainConfig tc = job.model->train;
            tc.seed = job.seed;
            TrainResult trained;
            {
                auto log = open_out(dir / "train_log.jsonl");
                trained = train(ranker, data.train, tc, &log);
            }
            save_checkpoint(dir / "model.ckpt", ranker.params().snapshot());
            job.run = rerank(ranker, data, config.rerank_depth);
            auto out = open_out(dir / "test.run");
            write_run(out, job.run, job.model->name);
            if (options.progress != nullptr) {
                *options.progress << job.model->name << " seed " << job.seed << ": " << trained.total_steps
                                  << " steps, final loss "
                                  << (trained.log.empty() ? 0.0 : trained.log.back().loss) << '\n';
            }
        } catch (const std::exception& e) {
            job.error = job.model->name + " seed " + std::to_string(job.seed) + ": " + e.what();
        }
    });

    std::map<std::string, std::vector<std::map<std::string, RankedList>>> runs;
    std::set<std::string> failed;
    std::vector<std::string> errors;
    for (auto& job : jobs) {
        if (!job.error.empty()) {
            failed.insert(job.model->name);
            errors.push_back(job.error);
        }
    }
    for (auto& job : jobs) {
        if (failed.count(job.model->name) == 0) {
            runs[job.model->name].push_back(std::move(job.run));
        }
    }
    auto result = assemble_results(config, runs, data.train.judgments, errors);
    emit_report(result, config.run_dir);
    return result;
}

void emit_report(const ExperimentResult& result, const fs::path& dir) {
    {
        auto out = open_out(dir / "results.tsv");
        out << "model";
        for (const auto& m : result.metrics) {
            out << '\t' << m;
        }
        out << '\n';
        for (const auto& model : result.models) {
            out << model.name;
            for (std::size_t k = 0; k < result.metrics.size(); ++k) {
                std::string marks;
                for (std::size_t b = 0; b < result.baselines.size(); ++b) {
                    for (const auto& c : result.comparisons) {
                        if (c.model == model.name && c.baseline == result.baselines[b] &&
                            c.metric == result.metrics[k] && c.tested && c.significance.significant) {
                            marks += static_cast<char>('a' + b);
                        }
                    }
                }
                out << '\t' << fixed4(model.reports[k].aggregate) << (marks.empty() ? "" : "^" + marks);
            }
            out << '\n';
        }
    }
    {
        auto out = open_out(dir / "markers.tsv");
        out << "marker\tbaseline\n";
        for (std::size_t b = 0; b < result.baselines.size(); ++b) {
            out << static_cast<char>('a' + b) << '\t' << result.baselines[b] << '\n';
        }
    }
    {
        auto out = open_out(dir / "comparisons.tsv");
        out << "model\tbaseline\tmetric\tdelta\tt\tp_value\tsignificant\n";
        for (const auto& c : result.comparisons) {
            out << c.model << '\t' << c.baseline << '\t' << c.metric << '\t' << format_double(c.delta) << '\t';
            if (c.tested) {
                out << format_double(c.significance.t_statistic) << '\t' << format_double(c.significance.p_value)
                    << '\t' << (c.significance.significant ? "yes" : "no") << '\n';
            } else {
                out << "NA\tNA\tinsufficient samples\n";
            }
        }
    }
    for (const auto& model : result.models) {
        for (const auto& report : model.reports) {
            auto out = open_out(dir / model.name / (report.metric + ".tsv"));
            write_metric_report(out, report);
            auto seeds = open_out(dir / model.name / (report.metric + ".per_seed.tsv"));
            seeds << "qid";
            for (std::size_t s = 0; s < report.per_seed.size(); ++s) {
                seeds << "\tseed" << s;
            }
            seeds << '\n';
            for (std::size_t i = 0; i < report.qids.size(); ++i) {
                seeds << report.qids[i];
                for (const auto& values : report.per_seed) {
                    seeds << '\t' << format_double(values[i]);
                }
                seeds << '\n';
            }
        }
    }
    if (result.errors.empty()) {
        fs::remove(dir / "errors.txt");
    } else {
        auto out = open_out(dir / "errors.txt");
        for (const auto& e : result.errors) {
            out << e << '\n';
        }
    }
}

ExperimentResult report_run_dir(const fs::path& run_dir) {
    auto config = load_experiment_config(run_dir / "config.ini", false);
    std::map<std::string, std::vector<std::map<std::string, RankedList>>> runs;
    std::vector<std::string> errors;
    for (const auto& model : config.models) {
        std::vector<std::map<std::string, RankedList>> seeds;
        for (auto seed : config.seeds) {
            const auto path = job_dir(run_dir, model.name, seed) / "test.run";
            if (!fs::exists(path)) {
                errors.push_back(model.name + " seed " + std::to_string(seed) + ": missing " + path.string());
                seeds.clear();
                break;
            }
            seeds.push_back(read_run(path));
        }
        if (!seeds.empty()) {
            runs[model.name] = std::move(seeds);
        }
    }
    auto result = assemble_results(config, runs, read_qrels(config.data.qrels), errors);
    emit_report(result, run_dir);
    return result;
}

std::string SweepAxis::label(std::size_t cell) const {
    std::string out;
    for (std::size_t k = 0; k < keys.size(); ++k) {
        const auto dot = keys[k].rfind('.');
        out += (k == 0 ? "" : "_") + keys[k].substr(dot + 1) + cells.at(cell)[k];
    }
    return out;
}

SweepAxis sweep_axis_from(const ConfigMap& entries) {
    auto keys = entries.find("sweep.keys");
    auto values = entries.find("sweep.values");
    if (keys == entries.end() || values == entries.end()) {
        throw std::invalid_argument("config: a sweep needs sweep.keys and sweep.values");
    }
    for (const auto& [key, value] : entries) {
        if (key.rfind("sweep.", 0) == 0 && key != "sweep.keys" && key != "sweep.values") {
            throw std::invalid_argument("config: unknown key " + key);
        }
    }
    SweepAxis axis;
    axis.keys = split_list(keys->second);
    if (axis.keys.empty()) {
        throw std::invalid_argument("config: sweep.keys is empty");
    }
    for (const auto& key : axis.keys) {
        if (default_config().count(key) == 0) {
            throw std::invalid_argument("config: sweep over unknown key " + key);
        }
    }
    for (const auto& cell : split_list(values->second)) {
        auto parts = split_list(cell, ':');
        if (parts.size() != axis.keys.size()) {
            throw std::invalid_argument("config: sweep cell '" + cell + "' needs " + std::to_string(axis.keys.size()) +
                                        " ':'-separated values");
        }
        axis.cells.push_back(std::move(parts));
    }
    if (axis.cells.empty()) {
        throw std::invalid_argument("config: sweep.values is empty");
    }
    return axis;
}

std::vector<ExperimentResult> run_sweep(const ConfigMap& entries, const fs::path& base_dir, const RunOptions& options) {
    const auto axis = sweep_axis_from(entries);
    const auto base = build_experiment_config(entries, base_dir);
    std::vector<ExperimentResult> results;
    for (std::size_t c = 0; c < axis.cells.size(); ++c) {
        ConfigMap cell = entries;
        for (std::size_t k = 0; k < axis.keys.size(); ++k) {
            cell[axis.keys[k]] = axis.cells[c][k];
        }
        cell["experiment.run_dir"] = (base.run_dir / axis.label(c)).string();
        cell["experiment.name"] = base.name + "/" + axis.label(c);
        results.push_back(run_experiment(build_experiment_config(cell, base_dir), options));
    }

    auto out = open_out(base.run_dir / "sweep.tsv");
    out << "cell";
    for (const auto& key : axis.keys) {
        out << '\t' << key;
    }
    for (const auto& model : base.models) {
        for (const auto& metric : base.metrics) {
            out << '\t' << model.name << ':' << metric.name();
        }
    }
    out << '\n';
    for (std::size_t c = 0; c < axis.cells.size(); ++c) {
        out << axis.label(c);
        for (const auto& v : axis.cells[c]) {
            out << '\t' << v;
        }
        for (const auto& model : base.models) {
            for (std::size_t k = 0; k < base.metrics.size(); ++k) {
                const auto* m = results[c].find(model.name);
                out << '\t' << (m == nullptr ? "NA" : format_double(m->reports[k].aggregate));
            }
        }
        out << '\n';
    }
    return results;
}

PositionHistograms analyze_positions(const PositionAnalysisPaths& paths, const HistogramOptions& histogram,
                                     const MatchOptions& matching, const fs::path& out_dir, std::size_t threads) {
    const auto vocab = Vocab::load(paths.vocab);
    const auto passages = read_texts(paths.passages);
    const auto passage_queries = read_texts(paths.passage_queries);
    const auto doc_texts = read_texts(paths.docs);
    const auto qrels = read_qrels(paths.qrels);

    struct Task {
        std::string pid;
        PassageMatch match;
    };
    std::vector<Task> tasks;
    std::map<std::string, TokenSeq> docs;
    for (const auto& [pid, qid] : passage_queries) {
        if (passages.count(pid) == 0) {
            throw std::runtime_error("passage " + pid + " has no text");
        }
        for (const auto& docid : qrels.positives(qid)) {
            auto text = doc_texts.find(docid);
            if (text == doc_texts.end()) {
                throw std::runtime_error("relevant document " + docid + " of query " + qid + " is not in the corpus");
            }
            docs.emplace(docid, tokenize(vocab, text->second));
            tasks.push_back({pid, {qid, docid, {}}});
        }
    }
    parallel_for(tasks.size(), threads, [&](std::size_t i) {
        auto& m = tasks[i].match;
        m.match = match_passage(passages.at(tasks[i].pid), doc_texts.at(m.docid), matching);
        if (m.match.matched) {
            m.match.token_span = char_span_to_token_span(docs.at(m.docid), m.match.char_span);
        }
    });

    std::vector<PassageMatch> matches;
    {
        auto out = open_out(out_dir / "matches.tsv");
        out << "pid\tqid\tdocid\tmethod\tscore\tchar_begin\tchar_end\ttoken_begin\ttoken_end\n";
        for (const auto& t : tasks) {
            const auto& r = t.match.match;
            const char* method = r.method == MatchMethod::substring     ? "substring"
                                 : r.method == MatchMethod::subsequence ? "subsequence"
                                                                        : "none";
            out << t.pid << '\t' << t.match.qid << '\t' << t.match.docid << '\t' << method << '\t'
                << format_double(r.score) << '\t' << r.char_span.first << '\t' << r.char_span.second << '\t'
                << r.token_span.first << '\t' << r.token_span.second << '\n';
            matches.push_back(t.match);
        }
    }
    auto hist = build_histograms(matches, docs, histogram);
    {
        auto out = open_out(out_dir / "positions.tsv");
        write_position_table(out, hist.start, hist.end);
    }
    {
        auto out = open_out(out_dir / "start_hist.tsv");
        write_histogram(out, hist.start);
    }
    {
        auto out = open_out(out_dir / "end_hist.tsv");
        write_histogram(out, hist.end);
    }
    {
        auto out = open_out(out_dir / "doc_lengths.tsv");
        write_histogram(out, hist.doc_lengths);
    }
    {
        auto out = open_out(out_dir / "ceiling.tsv");
        out << "max_chunks\tfactor\n";
        for (std::size_t k = 1; k <= histogram.max_chunk; ++k) {
            out << k << '\t';
            try {
                out << format_double(estimate_ceiling(hist.end, hist.start, k)) << '\n';
            } catch (const std::invalid_argument&) {
                out << "NA\n";
            }
        }
    }
    return hist;
}

}  // namespace ldr
