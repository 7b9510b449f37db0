// Copyright (C) 2026 The longdoc-rank Authors
// SPDX-License-Identifier: Apache-2.0

#include "ldr/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <set>
#include <stdexcept>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

namespace ldr {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) {
        return "";
    }
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

const std::vector<std::string> kDataKeys = {"vocab",        "docs",           "train_queries", "test_queries",
                                            "qrels",        "train_candidates", "test_candidates"};

const std::set<std::string> kModelSections = {"encoder", "aggregator", "chunking", "ranker", "train"};

std::string section_of(const std::string& key) { return key.substr(0, key.find('.')); }

}  // namespace

ConfigMap parse_ini(std::istream& in) {
    boost::property_tree::ptree tree;
    try {
        boost::property_tree::ini_parser::read_ini(in, tree);
    } catch (const boost::property_tree::ini_parser_error& e) {
        throw std::invalid_argument(std::string("config: ") + e.what());
    }
    ConfigMap out;
    for (const auto& [section, body] : tree) {
        if (body.empty()) {
            throw std::invalid_argument("config: key '" + section + "' outside of any section");
        }
        for (const auto& [key, value] : body) {
            out[section + "." + key] = trim(value.data());
        }
    }
    return out;
}

ConfigMap read_ini(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot read config " + path.string());
    }
    return parse_ini(in);
}

const ConfigMap& default_config() {
    static const ConfigMap defaults = {
        {"experiment.name", "experiment"},
        {"experiment.run_dir", ""},
        {"experiment.seeds", "1"},
        {"experiment.metrics", "mrr@10"},
        {"experiment.baselines", ""},
        {"experiment.models", ""},
        {"experiment.alpha", "0.05"},
        {"experiment.threads", "1"},
        {"experiment.rerank_depth", "100"},
        {"experiment.init_checkpoint", ""},
        {"encoder.layers", "2"},
        {"encoder.heads", "2"},
        {"encoder.model_dim", "32"},
        {"encoder.ff_dim", "64"},
        {"encoder.max_seq", "512"},
        {"encoder.dropout", "0.1"},
        {"encoder.init_std", "0.02"},
        {"encoder.attention", "dense"},
        {"encoder.local_window", "64"},
        {"encoder.global", "cls_only"},
        {"encoder.scatter", "none"},
        {"encoder.scatter_k", "0"},
        {"encoder.scatter_seed", "0"},
        {"encoder.dilation", "1"},
        {"aggregator.kind", "first_p"},
        {"aggregator.layers", "2"},
        {"aggregator.heads", "2"},
        {"aggregator.dim", "0"},
        {"aggregator.ff_dim", "0"},
        {"aggregator.feed_query", "false"},
        {"aggregator.query_projection", "false"},
        {"aggregator.init", "random"},
        {"aggregator.pretrained_checkpoint", ""},
        {"aggregator.kernels", "default"},
        {"chunking.scheme", "greedy"},
        {"chunking.chunk_cap", "477"},
        {"chunking.window", "477"},
        {"chunking.stride", "477"},
        {"chunking.max_chunks", "3"},
        {"chunking.max_query", "32"},
        {"ranker.head_init_std", "0.02"},
        {"train.batch_size", "16"},
        {"train.lr_main", "1e-5"},
        {"train.lr_other", "1e-4"},
        {"train.weight_decay", "1e-7"},
        {"train.warmup_frac", "0.2"},
        {"train.schedule", "constant_warmup"},
        {"train.margin", "1"},
        {"train.epochs", "1"},
        {"train.top_k", "100"},
        {"train.beta1", "0.9"},
        {"train.beta2", "0.999"},
        {"train.eps", "1e-8"},
    };
    return defaults;
}

std::vector<std::string> split_list(const std::string& text, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (start <= text.size()) {
        const auto end = std::min(text.find(sep, start), text.size());
        auto item = trim(text.substr(start, end - start));
        if (!item.empty()) {
            out.push_back(std::move(item));
        }
        start = end + 1;
    }
    return out;
}

std::size_t parse_size(const std::string& key, const std::string& text) {
    std::size_t value = 0;
    const auto res = std::from_chars(text.data(), text.data() + text.size(), value);
    if (res.ec != std::errc{} || res.ptr != text.data() + text.size()) {
        throw std::invalid_argument("config " + key + ": expected a non-negative integer, got '" + text + "'");
    }
    return value;
}

double parse_double(const std::string& key, const std::string& text) {
    double value = 0.0;
    const auto res = std::from_chars(text.data(), text.data() + text.size(), value);
    if (res.ec != std::errc{} || res.ptr != text.data() + text.size()) {
        throw std::invalid_argument("config " + key + ": expected a number, got '" + text + "'");
    }
    return value;
}

bool parse_bool(const std::string& key, const std::string& text) {
    if (text == "true" || text == "1" || text == "yes") {
        return true;
    }
    if (text == "false" || text == "0" || text == "no") {
        return false;
    }
    throw std::invalid_argument("config " + key + ": expected true/false, got '" + text + "'");
}

std::string to_string(AggregatorKind kind) {
    switch (kind) {
        case AggregatorKind::first_p: return "first_p";
        case AggregatorKind::avg_p: return "avg_p";
        case AggregatorKind::max_p: return "max_p";
        case AggregatorKind::sum_p: return "sum_p";
        case AggregatorKind::parade_avg: return "parade_avg";
        case AggregatorKind::parade_max: return "parade_max";
        case AggregatorKind::parade_attn: return "parade_attn";
        case AggregatorKind::parade_transf: return "parade_transf";
        case AggregatorKind::long_p: return "long_p";
        case AggregatorKind::cedr_knrm: return "cedr_knrm";
    }
    return "?";
}

AggregatorKind parse_aggregator_kind(const std::string& text) {
    for (auto kind : {AggregatorKind::first_p, AggregatorKind::avg_p, AggregatorKind::max_p, AggregatorKind::sum_p,
                      AggregatorKind::parade_avg, AggregatorKind::parade_max, AggregatorKind::parade_attn,
                      AggregatorKind::parade_transf, AggregatorKind::long_p, AggregatorKind::cedr_knrm}) {
        if (to_string(kind) == text) {
            return kind;
        }
    }
    throw std::invalid_argument("unknown aggregator kind '" + text + "'");
}

namespace {

struct Reader {
    const ConfigMap& map;
    const std::string& at(const std::string& key) const {
        auto it = map.find(key);
        if (it == map.end()) {
            throw std::invalid_argument("config: missing key " + key);
        }
        return it->second;
    }
    std::size_t size(const std::string& key) const { return parse_size(key, at(key)); }
    double number(const std::string& key) const { return parse_double(key, at(key)); }
    bool flag(const std::string& key) const { return parse_bool(key, at(key)); }

    template <typename E>
    E choice(const std::string& key, std::initializer_list<std::pair<const char*, E>> options) const {
        const auto& text = at(key);
        std::string known;
        for (const auto& [name, value] : options) {
            if (text == name) {
                return value;
            }
            known += known.empty() ? name : std::string("|") + name;
        }
        throw std::invalid_argument("config " + key + ": expected one of " + known + ", got '" + text + "'");
    }
};

std::vector<Kernel> parse_kernels(const std::string& text) {
    if (text == "default") {
        return default_kernels();
    }
    std::vector<Kernel> out;
    for (const auto& item : split_list(text)) {
        const auto parts = split_list(item, ':');
        if (parts.size() != 2) {
            throw std::invalid_argument("config aggregator.kernels: expected mu:sigma items, got '" + item + "'");
        }
        out.push_back({parse_double("aggregator.kernels", parts[0]), parse_double("aggregator.kernels", parts[1])});
    }
    return out;
}

RankerConfig ranker_config(const Reader& r) {
    RankerConfig c;
    auto& e = c.encoder;
    e.layers = r.size("encoder.layers");
    e.heads = r.size("encoder.heads");
    e.model_dim = r.size("encoder.model_dim");
    e.ff_dim = r.size("encoder.ff_dim");
    e.max_seq = r.size("encoder.max_seq");
    e.dropout = r.number("encoder.dropout");
    e.init_std = r.number("encoder.init_std");
    e.attention.kind = r.choice<AttentionKind>("encoder.attention",
                                               {{"dense", AttentionKind::dense}, {"sparse", AttentionKind::sparse}});
    e.attention.local_window = r.size("encoder.local_window");
    e.attention.global = r.choice<GlobalTokens>(
        "encoder.global", {{"cls_only", GlobalTokens::cls_only}, {"cls_and_query", GlobalTokens::cls_and_query}});
    e.attention.scatter.kind = r.choice<Scatter::Kind>(
        "encoder.scatter",
        {{"none", Scatter::Kind::none}, {"random", Scatter::Kind::random}, {"dilated", Scatter::Kind::dilated}});
    e.attention.scatter.k = r.size("encoder.scatter_k");
    e.attention.scatter.seed = r.size("encoder.scatter_seed");
    e.attention.scatter.rate = r.size("encoder.dilation");

    auto& a = c.aggregator;
    a.kind = parse_aggregator_kind(r.at("aggregator.kind"));
    a.aggregator_layers = r.size("aggregator.layers");
    a.aggregator_heads = r.size("aggregator.heads");
    a.aggregator_dim = r.size("aggregator.dim");
    a.aggregator_ff_dim = r.size("aggregator.ff_dim");
    a.feed_query = r.flag("aggregator.feed_query");
    a.query_projection = r.flag("aggregator.query_projection");
    a.init = r.choice<AggregatorInit>(
        "aggregator.init", {{"random", AggregatorInit::random}, {"pretrained_reuse", AggregatorInit::pretrained_reuse}});
    a.pretrained_checkpoint = r.at("aggregator.pretrained_checkpoint");
    a.kernels = parse_kernels(r.at("aggregator.kernels"));

    auto& k = c.chunking;
    k.scheme = r.choice<ChunkScheme>("chunking.scheme", {{"greedy", ChunkScheme::greedy}, {"sliding", ChunkScheme::sliding}});
    k.chunk_cap = r.size("chunking.chunk_cap");
    k.window = r.size("chunking.window");
    k.stride = r.size("chunking.stride");
    k.max_chunks = r.size("chunking.max_chunks");
    k.max_query = r.size("chunking.max_query");

    c.head_init_std = r.number("ranker.head_init_std");
    a.validate();
    return c;
}

TrainConfig train_config(const Reader& r) {
    TrainConfig t;
    t.batch_size = r.size("train.batch_size");
    t.lr_main = r.number("train.lr_main");
    t.lr_other = r.number("train.lr_other");
    t.weight_decay = r.number("train.weight_decay");
    t.warmup_frac = r.number("train.warmup_frac");
    t.schedule = r.choice<Schedule>("train.schedule", {{"constant_warmup", Schedule::constant_warmup},
                                                       {"one_cycle", Schedule::one_cycle}});
    t.margin = r.number("train.margin");
    t.epochs = r.size("train.epochs");
    t.top_k = r.size("train.top_k");
    t.beta1 = r.number("train.beta1");
    t.beta2 = r.number("train.beta2");
    t.eps = r.number("train.eps");
    t.validate();
    return t;
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& text) {
    std::filesystem::path p(text);
    if (p.is_relative()) {
        p = base / p;
    }
    return std::filesystem::absolute(p).lexically_normal();
}

}  // namespace

ExperimentConfig build_experiment_config(const ConfigMap& entries, const std::filesystem::path& base_dir) {
    ConfigMap merged = default_config();
    std::map<std::string, ConfigMap> model_entries;
    for (const auto& [key, value] : entries) {
        if (key.rfind("model.", 0) == 0) {
            const auto rest = key.substr(6);
            const auto dot = rest.find('.');
            if (dot == std::string::npos || dot == 0 || dot + 1 == rest.size()) {
                throw std::invalid_argument("config: malformed model key " + key);
            }
            model_entries[rest.substr(0, dot)][rest.substr(dot + 1)] = value;
            continue;
        }
        if (section_of(key) == "sweep" || section_of(key) == "synthetic") {
            continue;
        }
        const bool data_key = section_of(key) == "data" &&
                              std::find(kDataKeys.begin(), kDataKeys.end(), key.substr(5)) != kDataKeys.end();
        if (!data_key && merged.count(key) == 0) {
            throw std::invalid_argument("config: unknown key " + key);
        }
        merged[key] = value;
    }
    for (const auto& k : kDataKeys) {
        const auto key = "data." + k;
        if (merged.count(key) == 0 || merged[key].empty()) {
            throw std::invalid_argument("config: missing key " + key);
        }
        merged[key] = resolve(base_dir, merged[key]).string();
    }
    if (merged["experiment.run_dir"].empty()) {
        merged["experiment.run_dir"] = "runs/" + merged["experiment.name"];
    }
    merged["experiment.run_dir"] = resolve(base_dir, merged["experiment.run_dir"]).string();
    if (!merged["experiment.init_checkpoint"].empty()) {
        merged["experiment.init_checkpoint"] = resolve(base_dir, merged["experiment.init_checkpoint"]).string();
    }
    if (!merged["aggregator.pretrained_checkpoint"].empty()) {
        merged["aggregator.pretrained_checkpoint"] =
            resolve(base_dir, merged["aggregator.pretrained_checkpoint"]).string();
    }

    const Reader base{merged};
    ExperimentConfig cfg;
    cfg.name = base.at("experiment.name");
    cfg.run_dir = base.at("experiment.run_dir");
    cfg.seeds.clear();
    for (const auto& s : split_list(base.at("experiment.seeds"))) {
        cfg.seeds.push_back(parse_size("experiment.seeds", s));
    }
    cfg.metrics.clear();
    for (const auto& m : split_list(base.at("experiment.metrics"))) {
        cfg.metrics.push_back(MetricSpec::parse(m));
    }
    cfg.baselines = split_list(base.at("experiment.baselines"));
    cfg.alpha = base.number("experiment.alpha");
    cfg.threads = base.size("experiment.threads");
    cfg.rerank_depth = base.size("experiment.rerank_depth");
    cfg.init_checkpoint = base.at("experiment.init_checkpoint");
    cfg.data = {base.at("data.vocab"),        base.at("data.docs"),   base.at("data.train_queries"),
                base.at("data.test_queries"), base.at("data.qrels"),  base.at("data.train_candidates"),
                base.at("data.test_candidates")};
    cfg.train = train_config(base);

    std::vector<std::string> order = split_list(base.at("experiment.models"));
    if (order.empty()) {
        for (const auto& [name, body] : model_entries) {
            order.push_back(name);
        }
    }
    for (const auto& [name, body] : model_entries) {
        if (std::find(order.begin(), order.end(), name) == order.end()) {
            throw std::invalid_argument("config: [model." + name + "] is not listed in experiment.models");
        }
    }
    if (model_entries.empty()) {
        if (!order.empty()) {
            throw std::invalid_argument("config: experiment.models lists models but no [model.*] section exists");
        }
        cfg.models.push_back({base.at("aggregator.kind"), ranker_config(base), cfg.train});
    }
    ConfigMap resolved = merged;
    for (const auto& name : order) {
        auto it = model_entries.find(name);
        if (it == model_entries.end()) {
            throw std::invalid_argument("config: experiment.models names unknown model " + name);
        }
        ConfigMap local = merged;
        for (const auto& [key, value] : it->second) {
            const std::string full = key.find('.') == std::string::npos ? "aggregator." + key : key;
            if (kModelSections.count(section_of(full)) == 0 || merged.count(full) == 0) {
                throw std::invalid_argument("config: unknown key " + key + " in [model." + name + "]");
            }
            std::string v = value;
            if (full == "aggregator.pretrained_checkpoint" && !v.empty()) {
                v = resolve(base_dir, v).string();
            }
            local[full] = v;
            resolved["model." + name + "." + key] = v;
        }
        const Reader reader{local};
        cfg.models.push_back({name, ranker_config(reader), train_config(reader)});
    }
    cfg.resolved = std::move(resolved);
    cfg.validate(false);
    return cfg;
}

void ExperimentConfig::validate(bool check_paths) const {
    if (seeds.empty()) {
        throw std::invalid_argument("config: experiment.seeds must not be empty");
    }
    if (std::set<std::uint64_t>(seeds.begin(), seeds.end()).size() != seeds.size()) {
        throw std::invalid_argument("config: experiment.seeds has duplicates");
    }
    if (metrics.empty()) {
        throw std::invalid_argument("config: experiment.metrics must not be empty");
    }
    if (threads == 0 || rerank_depth == 0) {
        throw std::invalid_argument("config: experiment.threads and experiment.rerank_depth must be positive");
    }
    if (!(alpha > 0.0 && alpha < 1.0)) {
        throw std::invalid_argument("config: experiment.alpha must be in (0, 1)");
    }
    std::set<std::string> names;
    for (const auto& m : models) {
        if (!names.insert(m.name).second) {
            throw std::invalid_argument("config: duplicate model " + m.name);
        }
    }
    for (const auto& b : baselines) {
        if (names.count(b) == 0) {
            throw std::invalid_argument("config: baseline " + b + " is not a configured model");
        }
    }
    if (check_paths) {
        for (const auto* p : {&data.vocab, &data.docs, &data.train_queries, &data.test_queries, &data.qrels,
                              &data.train_candidates, &data.test_candidates}) {
            if (!std::filesystem::exists(*p)) {
                throw std::invalid_argument("config: data file does not exist: " + p->string());
            }
        }
        if (!init_checkpoint.empty() && !std::filesystem::exists(init_checkpoint)) {
            throw std::invalid_argument("config: init checkpoint does not exist: " + init_checkpoint);
        }
    }
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path, bool check_paths) {
    auto cfg = build_experiment_config(read_ini(path), std::filesystem::absolute(path).parent_path());
    cfg.validate(check_paths);
    return cfg;
}

void write_ini(std::ostream& out, const ConfigMap& entries) {
    std::string current;
    bool first = true;
    for (const auto& [key, value] : entries) {
        const auto dot = key.rfind("model.", 0) == 0 ? key.find('.', 6) : key.find('.');
        const auto section = key.substr(0, dot);
        if (first || section != current) {
            out << (first ? "" : "\n") << '[' << section << "]\n";
            current = section;
            first = false;
        }
        out << key.substr(dot + 1) << " = " << value << '\n';
    }
}

}  // namespace ldr
