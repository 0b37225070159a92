#include "recipemeta/experiment.hpp"
#include "recipemeta/metapath.hpp"
#include "recipemeta/synthetic.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>

namespace fs = std::filesystem;
using namespace recipemeta;
using nlohmann::ordered_json;

namespace {

struct Overrides {
    std::string config;
    std::string nodes, edges, split_manifest, output;
    std::string variant, optimizer, fold;
    std::vector<std::string> metapaths;
    std::size_t top_m = 0, embed_dim = 0, heads = 0, layers = 0, out_dim = 0;
    double lr = 0.0;
    std::size_t batch = 0, epochs = 0, checkpoint_every = 0;
    std::uint64_t train_seed = 0, model_seed = 0, split_seed = 0, eval_seed = 0;
};

void add_data_flags(CLI::App* cmd, Overrides& o) {
    cmd->add_option("--config", o.config, "JSON experiment config; flags override it");
    cmd->add_option("--nodes", o.nodes, "nodes.tsv");
    cmd->add_option("--edges", o.edges, "edges.tsv");
    cmd->add_option("--split-manifest", o.split_manifest, "replay an existing split instead of drawing one");
    cmd->add_option("--split-seed", o.split_seed);
    cmd->add_option("--out", o.output, "output directory");
}

void add_model_flags(CLI::App* cmd, Overrides& o) {
    cmd->add_option("--variant", o.variant, "full, hgat_only or metapath_only");
    cmd->add_option("--metapaths", o.metapaths, "metapath labels, e.g. U-R-U R-U-R")->delimiter(',');
    cmd->add_option("--top-m", o.top_m);
    cmd->add_option("--embed-dim", o.embed_dim);
    cmd->add_option("--heads", o.heads);
    cmd->add_option("--layers", o.layers);
    cmd->add_option("--out-dim", o.out_dim);
    cmd->add_option("--model-seed", o.model_seed);
    cmd->add_option("--lr", o.lr);
    cmd->add_option("--batch", o.batch);
    cmd->add_option("--epochs", o.epochs);
    cmd->add_option("--optimizer", o.optimizer, "adam or sgd");
    cmd->add_option("--seed", o.train_seed, "training seed");
    cmd->add_option("--checkpoint-every", o.checkpoint_every);
    cmd->add_option("--eval-seed", o.eval_seed);
    cmd->add_option("--fold", o.fold, "val or test");
}

bool given(const CLI::App* cmd, const std::string& flag) {
    const auto* opt = cmd->get_option_no_throw(flag);
    return opt != nullptr && opt->count() > 0;
}

ExperimentConfig resolve(const CLI::App* cmd, const Overrides& o) {
    ExperimentConfig cfg;
    if (!o.config.empty()) cfg = load_experiment_config(o.config);
    auto has = [&](const char* flag) { return given(cmd, flag); };
    if (has("--nodes")) cfg.nodes = o.nodes;
    if (has("--edges")) cfg.edges = o.edges;
    if (has("--split-manifest")) cfg.split_manifest = o.split_manifest;
    if (has("--split-seed")) cfg.split.seed = o.split_seed;
    if (has("--out")) cfg.output_dir = o.output;
    if (has("--variant")) cfg.model.variant = parse_variant(o.variant);
    if (has("--metapaths")) cfg.model.metapaths = o.metapaths;
    if (has("--top-m")) cfg.model.top_m = o.top_m;
    if (has("--embed-dim")) cfg.model.embed_dim = o.embed_dim;
    if (has("--heads")) cfg.model.heads = o.heads;
    if (has("--layers")) cfg.model.layers = o.layers;
    if (has("--out-dim")) cfg.model.out_dim = o.out_dim;
    if (has("--model-seed")) cfg.model.seed = o.model_seed;
    if (has("--lr")) cfg.train.learning_rate = o.lr;
    if (has("--batch")) cfg.train.batch_size = o.batch;
    if (has("--epochs")) cfg.train.epochs = o.epochs;
    if (has("--optimizer")) {
        if (o.optimizer == "adam") cfg.train.optimizer = OptimizerKind::adam;
        else if (o.optimizer == "sgd") cfg.train.optimizer = OptimizerKind::sgd;
        else throw std::invalid_argument("unknown optimizer '" + o.optimizer + "' (adam, sgd)");
    }
    if (has("--seed")) cfg.train.seed = o.train_seed;
    if (has("--checkpoint-every")) cfg.train.checkpoint_every = o.checkpoint_every;
    if (has("--eval-seed")) cfg.eval_seed = o.eval_seed;
    if (has("--fold")) {
        if (o.fold == "val") cfg.eval_fold = Fold::val;
        else if (o.fold == "test") cfg.eval_fold = Fold::test;
        else throw std::invalid_argument("unknown fold '" + o.fold + "' (val, test)");
    }
    cfg.validate();
    return cfg;
}

fs::path output_dir(const std::string& flag, const char* command) {
    return flag.empty() ? default_output_root() / command : fs::path(flag);
}

ordered_json graph_stats(const HeteIN& g) {
    ordered_json stats;
    ordered_json nodes, edges;
    for (std::size_t t = 0; t < g.num_types(); ++t) {
        nodes[g.type(TypeId(t)).name] = g.num_nodes(TypeId(t));
    }
    for (std::size_t r = 0; r < g.num_relations(); ++r) {
        edges[g.relation(RelationId(r)).name] = g.num_edges(RelationId(r));
    }
    stats["nodes"] = nodes;
    stats["edges"] = edges;
    return stats;
}

void write_json(const fs::path& path, const ordered_json& j) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << j.dump(2) << '\n';
}

void print_metrics(const EvalReport& report) {
    std::printf("k  HR      NDCG    Prec    MAP\n");
    for (std::size_t k = 1; k <= kMaxK; ++k) {
        const auto& m = report.at_k[k - 1];
        std::printf("%-2zu %.4f  %.4f  %.4f  %.4f\n", k, m.hr, m.ndcg, m.precision, m.map);
    }
    const auto& a = report.average;
    std::printf("avg %.4f %.4f  %.4f  %.4f  (%zu trials, %zu skipped)\n", a.hr, a.ndcg, a.precision, a.map,
                report.trials, report.skipped);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"RecipeMeta heterogeneous-graph recipe recommender"};
    app.require_subcommand(1);
    app.set_version_flag("--version", RECIPEMETA_VERSION);

    // ingest
    std::string in_nodes, in_edges, in_out;
    auto* ingest = app.add_subcommand("ingest", "validate a nodes/edges TSV pair and write a normalized archive");
    ingest->add_option("--nodes", in_nodes)->required();
    ingest->add_option("--edges", in_edges)->required();
    ingest->add_option("--out", in_out, "archive directory");

    // pathsim
    std::string ps_nodes, ps_edges, ps_label, ps_out;
    std::size_t ps_m = 10;
    auto* pathsim = app.add_subcommand("pathsim", "top-m PathSim neighbours along a symmetric metapath");
    pathsim->add_option("--nodes", ps_nodes)->required();
    pathsim->add_option("--edges", ps_edges)->required();
    pathsim->add_option("--metapath", ps_label, "e.g. R-U-R")->required();
    pathsim->add_option("--m", ps_m, "neighbours kept per node")->default_val(10);
    pathsim->add_option("--out", ps_out, "output directory");

    // split
    Overrides split_o;
    std::vector<double> ratios;
    auto* split = app.add_subcommand("split", "hold out validation and test interactions");
    add_data_flags(split, split_o);
    split->add_option("--ratios", ratios, "train,val,test")->delimiter(',')->expected(3);

    // train
    Overrides train_o;
    auto* train = app.add_subcommand("train", "train a model and write its checkpoint");
    add_data_flags(train, train_o);
    add_model_flags(train, train_o);

    // eval
    std::string ev_run, ev_checkpoint, ev_config, ev_split, ev_out, ev_fold;
    std::uint64_t ev_seed = 0;
    auto* eval = app.add_subcommand("eval", "rank held-out interactions against 100 sampled negatives");
    eval->add_option("--run", ev_run, "training run directory (config.json, model.bin, split.jsonl)");
    eval->add_option("--checkpoint", ev_checkpoint);
    eval->add_option("--config", ev_config);
    eval->add_option("--split-manifest", ev_split);
    eval->add_option("--seed", ev_seed, "negative sampling seed");
    eval->add_option("--fold", ev_fold, "val or test");
    eval->add_option("--out", ev_out);

    // ablate
    Overrides ab_o;
    std::size_t ab_jobs = 1;
    auto* ablate = app.add_subcommand("ablate", "compare variants, metapath sets and m values");
    add_data_flags(ablate, ab_o);
    add_model_flags(ablate, ab_o);
    ablate->add_option("--jobs", ab_jobs, "concurrent runs")->default_val(1);

    // synth
    PlantedSpec planted;
    std::string sy_out;
    auto* synth = app.add_subcommand("synth", "write a planted two-block dataset");
    synth->add_option("--users", planted.users)->default_val(planted.users);
    synth->add_option("--recipes", planted.recipes)->default_val(planted.recipes);
    synth->add_option("--ingredients", planted.ingredients)->default_val(planted.ingredients);
    synth->add_option("--per-user", planted.interactions_per_user)->default_val(planted.interactions_per_user);
    synth->add_option("--affinity", planted.in_block_affinity)->default_val(planted.in_block_affinity);
    synth->add_option("--seed", planted.seed)->default_val(planted.seed);
    synth->add_option("--out", sy_out);

    CLI11_PARSE(app, argc, argv);

    try {
        if (ingest->parsed()) {
            auto g = load_hetein(in_nodes, in_edges);
            const auto dir = output_dir(in_out, "ingest");
            fs::create_directories(dir);
            write_hetein(g, dir / "nodes.tsv", dir / "edges.tsv");
            auto stats = graph_stats(g);
            write_json(dir / "stats.json", stats);
            ordered_json config{{"nodes", in_nodes}, {"edges", in_edges}};
            write_run_manifest(dir, "ingest", config, 0, {"nodes.tsv", "edges.tsv", "stats.json"});
            std::cout << stats.dump(2) << '\n';
            return 0;
        }
        if (pathsim->parsed()) {
            if (ps_m == 0) throw std::invalid_argument("--m must be positive");
            auto g = load_hetein(ps_nodes, ps_edges);
            auto table = top_m_similar(g, parse_metapath(g, ps_label), ps_m);
            const auto dir = output_dir(ps_out, "pathsim");
            fs::create_directories(dir);
            const auto file = ps_label + ".jsonl";
            write_similarity_table(dir / file, g, table);
            ordered_json config{{"nodes", ps_nodes}, {"edges", ps_edges}, {"metapath", ps_label}, {"m", ps_m}};
            write_run_manifest(dir, "pathsim", config, 0, {file});
            std::cout << "wrote " << (dir / file).string() << '\n';
            return 0;
        }
        if (split->parsed()) {
            auto cfg = resolve(split, split_o);
            if (!ratios.empty()) std::copy(ratios.begin(), ratios.end(), cfg.split.ratios.begin());
            cfg.split_manifest.clear();
            cfg.validate();
            auto data = load_dataset(cfg);
            const auto dir = output_dir(cfg.output_dir.string(), "split");
            fs::create_directories(dir);
            write_split_manifest(dir / "split.jsonl", data.graph, data.holdout);
            write_run_manifest(dir, "split", to_json(cfg), cfg.split.seed, {"split.jsonl"});
            std::cout << "train " << data.holdout.train_edges.size() << ", val " << data.holdout.val_edges.size()
                      << ", test " << data.holdout.test_edges.size() << '\n';
            return 0;
        }
        if (train->parsed()) {
            auto cfg = resolve(train, train_o);
            const auto dir = output_dir(cfg.output_dir.string(), "train");
            cfg.output_dir = dir;
            auto data = load_dataset(cfg);
            auto result = run_train(data, cfg, dir);
            for (const auto& e : result.trace) {
                std::printf("epoch %zu  loss %.6f  %.2fs\n", e.epoch, e.mean_loss, e.wall_seconds);
            }
            std::cout << "wrote " << (dir / "model.bin").string() << '\n';
            return 0;
        }
        if (eval->parsed()) {
            fs::path checkpoint = ev_checkpoint, config = ev_config, manifest = ev_split;
            if (!ev_run.empty()) {
                if (checkpoint.empty()) checkpoint = fs::path(ev_run) / "model.bin";
                if (config.empty()) config = fs::path(ev_run) / "config.json";
                if (manifest.empty()) manifest = fs::path(ev_run) / "split.jsonl";
            }
            if (checkpoint.empty() || config.empty() || manifest.empty()) {
                throw std::invalid_argument("eval needs --run, or --checkpoint with --config and --split-manifest");
            }
            auto cfg = load_experiment_config(config);
            cfg.split_manifest = manifest;
            if (eval->count("--seed")) cfg.eval_seed = ev_seed;
            if (eval->count("--fold")) {
                cfg.eval_fold = ev_fold == "val" ? Fold::val
                                : ev_fold == "test" ? Fold::test
                                                    : throw std::invalid_argument("unknown fold '" + ev_fold + "'");
            }
            auto data = load_dataset(cfg);
            auto model = load_trained_model(data, cfg, checkpoint);
            auto report = run_eval(model, data, cfg.eval_fold, cfg.eval_seed);
            const auto dir = output_dir(ev_out, "eval");
            fs::create_directories(dir);
            write_eval_report(dir / "eval.json", report);
            write_trial_ranks(dir / "ranks.csv", data.graph, data.holdout.relation, report);
            auto run_config = to_json(cfg);
            run_config["checkpoint"] = checkpoint.string();
            write_run_manifest(dir, "eval", run_config, cfg.eval_seed, {"eval.json", "ranks.csv"});
            print_metrics(report);
            return 0;
        }
        if (ablate->parsed()) {
            auto cfg = resolve(ablate, ab_o);
            const auto dir = output_dir(cfg.output_dir.string(), "ablate");
            cfg.output_dir = dir;
            auto data = load_dataset(cfg);
            auto rows = run_ablate(data, cfg, ab_jobs);
            write_ablation_report(dir, rows);
            write_run_manifest(dir, "ablate", to_json(cfg), cfg.train.seed, {"ablation.csv", "ablation.json"});
            int failed = 0;
            for (const auto& r : rows) {
                if (r.ok) {
                    std::printf("%-10s %-22s HR %.4f  NDCG %.4f  Prec %.4f  MAP %.4f\n", r.group.c_str(),
                                r.label.c_str(), r.average.hr, r.average.ndcg, r.average.precision, r.average.map);
                } else {
                    ++failed;
                    std::printf("%-10s %-22s FAILED: %s\n", r.group.c_str(), r.label.c_str(), r.error.c_str());
                }
            }
            if (failed > 0) {
                std::cerr << failed << " of " << rows.size() << " runs failed\n";
                return 1;
            }
            return 0;
        }
        if (synth->parsed()) {
            auto g = make_planted_graph(planted);
            const auto dir = output_dir(sy_out, "synth");
            fs::create_directories(dir);
            write_hetein(g, dir / "nodes.tsv", dir / "edges.tsv");
            ordered_json config{{"users", planted.users},
                                {"recipes", planted.recipes},
                                {"ingredients", planted.ingredients},
                                {"per_user", planted.interactions_per_user},
                                {"affinity", planted.in_block_affinity}};
            write_run_manifest(dir, "synth", config, planted.seed, {"nodes.tsv", "edges.tsv"});
            std::cout << graph_stats(g).dump(2) << '\n';
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
