// Copyright (C) 2026 The longdoc-rank Authors
// SPDX-License-Identifier: Apache-2.0

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"

#include "ldr/config.hpp"
#include "ldr/corpus.hpp"
#include "ldr/evaluation.hpp"
#include "ldr/experiment.hpp"
#include "ldr/synthetic.hpp"
#include "ldr/tokenize.hpp"

namespace fs = std::filesystem;

namespace {

int build_vocab_cmd(const fs::path& corpus, std::size_t size, const fs::path& out) {
    std::ostringstream text;
    for (const auto& [id, body] : ldr::read_texts(corpus)) {
        text << body << '\n';
    }
    const auto vocab = ldr::build_vocab(text.str(), size);
    vocab.save(out);
    std::cout << "wrote " << vocab.size() << " tokens to " << out.string() << '\n';
    return 0;
}

int gen_synthetic_cmd(const fs::path& config, const fs::path& out) {
    const auto spec = ldr::synthetic_spec_from(ldr::read_ini(config));
    const auto corpus = ldr::generate_synthetic(spec);
    ldr::write_synthetic(corpus, out);
    std::cout << "wrote " << corpus.docs.size() << " documents, " << corpus.train_queries.size() << " train and "
              << corpus.test_queries.size() << " test queries to " << out.string() << '\n';
    return 0;
}

void print_results(const ldr::ExperimentResult& result) {
    std::cout << "model";
    for (const auto& m : result.metrics) {
        std::cout << '\t' << m;
    }
    std::cout << '\n';
    for (const auto& model : result.models) {
        std::cout << model.name;
        for (const auto& r : model.reports) {
            std::cout << '\t' << ldr::format_double(r.aggregate);
        }
        std::cout << '\n';
    }
    for (const auto& e : result.errors) {
        std::cerr << "error: " << e << '\n';
    }
}

int train_cmd(const fs::path& config_path, const std::vector<std::string>& models,
              const std::vector<std::uint64_t>& seeds, std::size_t threads) {
    auto config = ldr::load_experiment_config(config_path);
    if (threads > 0) {
        config.threads = threads;
    }
    ldr::RunOptions options;
    options.models = models;
    options.seeds = seeds;
    options.progress = &std::cerr;
    const auto result = ldr::run_experiment(config, options);
    print_results(result);
    return result.errors.empty() ? 0 : 1;
}

int evaluate_cmd(const fs::path& qrels_path, const std::vector<fs::path>& run_paths,
                 const std::vector<fs::path>& baseline_paths, const std::vector<std::string>& metric_names,
                 const fs::path& out_dir) {
    const auto qrels = ldr::read_qrels(qrels_path);
    auto load = [](const std::vector<fs::path>& paths) {
        std::vector<std::map<std::string, ldr::RankedList>> runs;
        for (const auto& p : paths) {
            runs.push_back(ldr::read_run(p));
        }
        return runs;
    };
    const auto runs = load(run_paths);
    const auto baselines = load(baseline_paths);
    std::cout << "metric\tvalue\tqueries\texcluded" << (baselines.empty() ? "" : "\tbaseline\tp_value") << '\n';
    for (const auto& name : metric_names) {
        const auto metric = ldr::MetricSpec::parse(name);
        const auto report = ldr::evaluate_runs(metric, runs, qrels);
        std::cout << report.metric << '\t' << ldr::format_double(report.aggregate) << '\t' << report.qids.size()
                  << '\t' << report.excluded;
        if (!baselines.empty()) {
            const auto base = ldr::evaluate_runs(metric, baselines, qrels);
            if (base.qids != report.qids) {
                throw std::runtime_error("run and baseline cover different queries");
            }
            std::cout << '\t' << ldr::format_double(base.aggregate) << '\t';
            if (report.qids.size() >= 2) {
                std::cout << ldr::format_double(ldr::paired_significance(base.seed_averaged, report.seed_averaged).p_value);
            } else {
                std::cout << "NA";
            }
        }
        std::cout << '\n';
        if (!out_dir.empty()) {
            fs::create_directories(out_dir);
            std::ofstream out(out_dir / (report.metric + ".tsv"), std::ios::binary);
            ldr::write_metric_report(out, report);
        }
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Long-document neural reranking experiments"};
    app.require_subcommand(1);

    fs::path corpus, out, config, qrels, run_dir;
    std::size_t vocab_size = 8000;
    auto* vocab_cmd = app.add_subcommand("build-vocab", "Build a subword vocabulary from an id<TAB>text corpus");
    vocab_cmd->add_option("--corpus", corpus, "Corpus file")->required()->check(CLI::ExistingFile);
    vocab_cmd->add_option("--size", vocab_size, "Vocabulary size")->capture_default_str();
    vocab_cmd->add_option("--out", out, "Output vocabulary file")->required();

    auto* synth_cmd = app.add_subcommand("gen-synthetic", "Generate a planted-relevance corpus");
    synth_cmd->add_option("--config", config, "INI file with a [synthetic] section")->required()->check(CLI::ExistingFile);
    synth_cmd->add_option("--out", out, "Output directory")->required();

    std::vector<std::string> models;
    std::vector<std::uint64_t> seeds;
    std::size_t threads = 0;
    auto* train = app.add_subcommand("train", "Train, rerank and evaluate the configured models");
    train->add_option("--config", config, "Experiment INI file")->required()->check(CLI::ExistingFile);
    train->add_option("--model", models, "Only these models");
    train->add_option("--seed", seeds, "Only these seeds");
    train->add_option("--threads", threads, "Parallel jobs (overrides experiment.threads)");

    std::vector<fs::path> runs, baselines;
    std::vector<std::string> metrics{"mrr@10"};
    auto* eval = app.add_subcommand("evaluate", "Evaluate TREC run files against qrels");
    eval->add_option("--qrels", qrels, "Qrels file")->required()->check(CLI::ExistingFile);
    eval->add_option("--run", runs, "Run file; repeat for seeds")->required()->check(CLI::ExistingFile);
    eval->add_option("--baseline", baselines, "Baseline run file; repeat for seeds")->check(CLI::ExistingFile);
    eval->add_option("--metric", metrics, "Metric such as mrr@10, ndcg@20, map")->capture_default_str();
    eval->add_option("--out", out, "Directory for per-query metric files");

    ldr::PositionAnalysisPaths pa;
    ldr::HistogramOptions hist;
    ldr::MatchOptions match;
    bool all_passages = false;
    auto* analyze = app.add_subcommand("analyze-positions", "Locate relevant passages inside their documents");
    analyze->add_option("--passages", pa.passages, "pid<TAB>text file")->required()->check(CLI::ExistingFile);
    analyze->add_option("--passage-queries", pa.passage_queries, "pid<TAB>qid file")->required()->check(CLI::ExistingFile);
    analyze->add_option("--docs", pa.docs, "docid<TAB>text file")->required()->check(CLI::ExistingFile);
    analyze->add_option("--qrels", pa.qrels, "Qrels file")->required()->check(CLI::ExistingFile);
    analyze->add_option("--vocab", pa.vocab, "Vocabulary file")->required()->check(CLI::ExistingFile);
    analyze->add_option("--out", out, "Output directory")->required();
    analyze->add_option("--chunk-size", hist.chunk_size, "Chunk size in tokens")->capture_default_str();
    analyze->add_option("--max-chunk", hist.max_chunk, "Chunk buckets before the overflow bucket")->capture_default_str();
    analyze->add_option("--length-cap", hist.length_cap, "Document length cap")->capture_default_str();
    analyze->add_option("--length-bin", hist.length_bin, "Document length bin width")->capture_default_str();
    analyze->add_flag("--all-passages", all_passages, "Count every matched passage, not only the first");
    analyze->add_option("--substring-threshold", match.substring_threshold)->capture_default_str();
    analyze->add_option("--subsequence-threshold", match.subsequence_threshold)->capture_default_str();
    analyze->add_option("--threads", threads, "Parallel matching workers");

    auto* sweep = app.add_subcommand("sweep", "Run one experiment per [sweep] cell");
    sweep->add_option("--config", config, "Experiment INI file with a [sweep] section")->required()->check(CLI::ExistingFile);

    auto* report = app.add_subcommand("report", "Re-emit the report of a finished run directory");
    report->add_option("--run-dir", run_dir, "Run directory")->required()->check(CLI::ExistingDirectory);

    CLI11_PARSE(app, argc, argv);

    try {
        if (*vocab_cmd) {
            return build_vocab_cmd(corpus, vocab_size, out);
        }
        if (*synth_cmd) {
            return gen_synthetic_cmd(config, out);
        }
        if (*train) {
            return train_cmd(config, models, seeds, threads);
        }
        if (*eval) {
            return evaluate_cmd(qrels, runs, baselines, metrics, out);
        }
        if (*analyze) {
            hist.first_only = !all_passages;
            const auto h = ldr::analyze_positions(pa, hist, match, out, std::max<std::size_t>(1, threads));
            ldr::write_position_table(std::cout, h.start, h.end);
            return 0;
        }
        if (*sweep) {
            ldr::RunOptions options;
            options.progress = &std::cerr;
            const auto results =
                ldr::run_sweep(ldr::read_ini(config), fs::absolute(config).parent_path(), options);
            bool failed = false;
            for (const auto& r : results) {
                std::cout << "# " << r.name << '\n';
                print_results(r);
                failed = failed || !r.errors.empty();
            }
            return failed ? 1 : 0;
        }
        if (*report) {
            const auto result = ldr::report_run_dir(run_dir);
            print_results(result);
            return result.errors.empty() ? 0 : 1;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
