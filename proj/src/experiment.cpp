#include "recipemeta/experiment.hpp"

#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <mutex>
#include <stdexcept>
#include <thread>

#ifndef RECIPEMETA_VERSION
#define RECIPEMETA_VERSION "unknown"
#endif

namespace recipemeta {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

namespace {

std::string_view fold_name(Fold f) { return f == Fold::val ? "val" : "test"; }

Fold parse_fold(const std::string& s) {
    if (s == "val") return Fold::val;
    if (s == "test") return Fold::test;
    throw std::invalid_argument("unknown fold '" + s + "' (val, test)");
}

std::string join_labels(const std::vector<std::string>& labels) {
    std::string out;
    for (const auto& l : labels) out += (out.empty() ? "" : "+") + l;
    return out;
}

void write_json(const fs::path& path, const ordered_json& j) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << j.dump(2) << '\n';
}

}  // namespace

void ExperimentConfig::validate() const {
    split.validate();
    model.validate();
    train.validate();
    if (train.target_relation != split.target_relation) {
        throw std::invalid_argument("train.target_relation and split.target_relation differ");
    }
}

ordered_json to_json(const ExperimentConfig& cfg) {
    ordered_json j;
    j["data"] = {{"nodes", cfg.nodes.string()},
                 {"edges", cfg.edges.string()},
                 {"split_manifest", cfg.split_manifest.string()}};
    j["split"] = {{"ratios", cfg.split.ratios}, {"seed", cfg.split.seed}, {"target_relation", cfg.split.target_relation}};
    j["model"] = to_json(cfg.model);
    j["train"] = to_json(cfg.train);
    j["eval"] = {{"seed", cfg.eval_seed}, {"fold", fold_name(cfg.eval_fold)}};
    ordered_json variants = ordered_json::array();
    for (auto v : cfg.ablation.variants) variants.push_back(to_string(v));
    j["ablate"] = {{"variants", variants},
                   {"metapath_sets", cfg.ablation.metapath_sets},
                   {"m_values", cfg.ablation.m_values}};
    j["output_dir"] = cfg.output_dir.string();
    return j;
}

ExperimentConfig experiment_config_from_json(const json& j) {
    ExperimentConfig cfg;
    if (j.contains("data")) {
        const auto& d = j["data"];
        cfg.nodes = d.value("nodes", std::string());
        cfg.edges = d.value("edges", std::string());
        cfg.split_manifest = d.value("split_manifest", std::string());
    }
    if (j.contains("split")) {
        const auto& s = j["split"];
        if (s.contains("ratios")) cfg.split.ratios = s["ratios"].get<std::array<double, 3>>();
        cfg.split.seed = s.value("seed", cfg.split.seed);
        cfg.split.target_relation = s.value("target_relation", cfg.split.target_relation);
    }
    if (j.contains("model")) cfg.model = model_config_from_json(j["model"]);
    if (j.contains("train")) cfg.train = train_config_from_json(j["train"]);
    if (j.contains("eval")) {
        cfg.eval_seed = j["eval"].value("seed", cfg.eval_seed);
        if (j["eval"].contains("fold")) cfg.eval_fold = parse_fold(j["eval"]["fold"].get<std::string>());
    }
    if (j.contains("ablate")) {
        const auto& a = j["ablate"];
        if (a.contains("variants")) {
            cfg.ablation.variants.clear();
            for (const auto& v : a["variants"]) cfg.ablation.variants.push_back(parse_variant(v.get<std::string>()));
        }
        if (a.contains("metapath_sets")) {
            cfg.ablation.metapath_sets = a["metapath_sets"].get<std::vector<std::vector<std::string>>>();
        }
        if (a.contains("m_values")) cfg.ablation.m_values = a["m_values"].get<std::vector<std::size_t>>();
    }
    cfg.output_dir = j.value("output_dir", std::string());
    return cfg;
}

ExperimentConfig load_experiment_config(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config " + path.string());
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        throw std::runtime_error(path.string() + ": " + e.what());
    }
    return experiment_config_from_json(j);
}

fs::path default_output_root() {
    const char* env = std::getenv("RECIPEMETA_OUT");
    if (env && *env) return env;
    return "runs";
}

std::string config_hash(const ordered_json& config) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : config.dump()) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

void write_run_manifest(const fs::path& dir, const std::string& command, const ordered_json& config,
                        std::uint64_t seed, const std::vector<std::string>& outputs) {
    ordered_json m;
    m["command"] = command;
    m["version"] = RECIPEMETA_VERSION;
    m["seed"] = seed;
    m["config_hash"] = config_hash(config);
    m["config"] = config;
    m["outputs"] = outputs;
    write_json(dir / "manifest.json", m);
}

Dataset prepare_dataset(HeteIN graph, const ExperimentConfig& cfg) {
    EdgeHoldout holdout;
    if (cfg.split_manifest.empty()) {
        holdout = split_target_edges(graph, cfg.split);
    } else {
        const auto rel = graph.relation_named(cfg.split.target_relation);
        holdout = holdout_from_records(graph, rel, read_split_manifest(cfg.split_manifest, graph, rel));
    }
    return {std::move(graph), std::move(holdout)};
}

Dataset load_dataset(const ExperimentConfig& cfg) {
    if (cfg.nodes.empty() || cfg.edges.empty()) {
        throw std::invalid_argument("dataset paths (nodes, edges) are required");
    }
    return prepare_dataset(load_hetein(cfg.nodes, cfg.edges), cfg);
}

std::span<const EdgePair> fold_edges(const EdgeHoldout& holdout, Fold fold) {
    return fold == Fold::val ? std::span<const EdgePair>(holdout.val_edges)
                             : std::span<const EdgePair>(holdout.test_edges);
}

FitResult run_train(const Dataset& data, const ExperimentConfig& cfg, const fs::path& out_dir) {
    cfg.validate();
    auto train_cfg = cfg.train;
    if (!out_dir.empty()) {
        fs::create_directories(out_dir);
        if (train_cfg.checkpoint_every > 0 && train_cfg.checkpoint_dir.empty()) {
            train_cfg.checkpoint_dir = out_dir / "checkpoints";
        }
    }
    auto result = fit(data.holdout.train_graph, train_cfg, cfg.model);
    if (!out_dir.empty()) {
        write_tensors(out_dir / "model.bin", result.model.parameters());
        write_loss_trace(out_dir / "loss.csv", result.trace);
        write_split_manifest(out_dir / "split.jsonl", data.graph, data.holdout);
        auto config = to_json(cfg);
        write_json(out_dir / "config.json", config);
        write_run_manifest(out_dir, "train", config, cfg.train.seed,
                           {"model.bin", "loss.csv", "split.jsonl", "config.json"});
    }
    return result;
}

EvalReport run_eval(const RecipeMetaModel& model, const Dataset& data, Fold fold, std::uint64_t seed) {
    FusedEmbeddings emb;
    {
        ad::NoGradGuard no_grad;
        emb = model.forward();
    }
    ScoreFn score = [&emb](LocalId u, LocalId r) { return fuse_and_score(emb, u, r); };
    return evaluate(score, data.graph, data.holdout.relation, fold_edges(data.holdout, fold), seed);
}

RecipeMetaModel load_trained_model(const Dataset& data, const ExperimentConfig& cfg, const fs::path& checkpoint) {
    RecipeMetaModel model(data.holdout.train_graph, cfg.model);
    restore_tensors(model.parameters(), read_tensors(checkpoint));
    return model;
}

std::vector<AblationRow> run_ablate(const Dataset& data, const ExperimentConfig& cfg, std::size_t jobs) {
    struct Run {
        AblationRow row;
        ExperimentConfig cfg;
    };
    std::vector<Run> runs;
    auto make_run = [&](std::string group, std::string label) {
        Run r{{}, cfg};
        r.row.group = std::move(group);
        r.row.label = std::move(label);
        return r;
    };
    for (auto v : cfg.ablation.variants) {
        auto r = make_run("variant", std::string(to_string(v)));
        r.cfg.model.variant = v;
        runs.push_back(std::move(r));
    }
    for (const auto& set : cfg.ablation.metapath_sets) {
        auto r = make_run("metapaths", join_labels(set));
        r.cfg.model.variant = Variant::full;
        r.cfg.model.metapaths = set;
        runs.push_back(std::move(r));
    }
    for (auto m : cfg.ablation.m_values) {
        auto r = make_run("m", std::to_string(m));
        r.cfg.model.variant = Variant::full;
        r.cfg.model.top_m = m;
        runs.push_back(std::move(r));
    }

    auto execute = [&](Run& run) {
        try {
            auto fitted = run_train(data, run.cfg, {});
            auto report = run_eval(fitted.model, data, run.cfg.eval_fold, run.cfg.eval_seed);
            run.row.average = report.average;
            run.row.trials = report.trials;
            run.row.ok = true;
        } catch (const std::exception& e) {
            run.row.error = e.what();
        }
    };

    jobs = std::max<std::size_t>(1, std::min(jobs, runs.size()));
    if (jobs == 1) {
        for (auto& r : runs) execute(r);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::jthread> workers;
        for (std::size_t w = 0; w < jobs; ++w) {
            workers.emplace_back([&] {
                for (auto i = next++; i < runs.size(); i = next++) execute(runs[i]);
            });
        }
    }

    std::vector<AblationRow> rows;
    for (auto& r : runs) rows.push_back(std::move(r.row));
    return rows;
}

void write_ablation_report(const fs::path& dir, const std::vector<AblationRow>& rows) {
    fs::create_directories(dir);
    std::ofstream csv(dir / "ablation.csv");
    if (!csv) throw std::runtime_error("cannot write " + (dir / "ablation.csv").string());
    csv << "group,label,status,hr,ndcg,precision,map,trials\n";
    csv.precision(17);
    ordered_json j = ordered_json::array();
    for (const auto& r : rows) {
        csv << r.group << ',' << r.label << ',' << (r.ok ? "ok" : "failed") << ',';
        if (r.ok) {
            csv << r.average.hr << ',' << r.average.ndcg << ',' << r.average.precision << ',' << r.average.map << ','
                << r.trials << '\n';
        } else {
            csv << ",,,,\n";
        }
        ordered_json row{{"group", r.group}, {"label", r.label}, {"status", r.ok ? "ok" : "failed"}};
        if (r.ok) {
            row["avg"] = {{"hr", r.average.hr},
                          {"ndcg", r.average.ndcg},
                          {"precision", r.average.precision},
                          {"map", r.average.map}};
            row["trials"] = r.trials;
        } else {
            row["error"] = r.error;
        }
        j.push_back(std::move(row));
    }
    write_json(dir / "ablation.json", j);
}

}  // namespace recipemeta
