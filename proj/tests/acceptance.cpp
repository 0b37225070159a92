// Acceptance suite: one PASS/FAIL line per criterion. Exit status is the
// number of failed criteria.

#include "fixtures.hpp"

#include "recipemeta/experiment.hpp"
#include "recipemeta/grad_check.hpp"
#include "recipemeta/synthetic.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <numeric>
#include <sstream>
#include <string>

using namespace recipemeta;
using ad::Tensor;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

HeteIN planted_graph() { return make_planted_graph(PlantedSpec{}); }

ExperimentConfig planted_config() {
    ExperimentConfig cfg;
    cfg.model.embed_dim = 32;
    cfg.model.out_dim = 32;
    cfg.train.epochs = 20;
    return cfg;
}

// ---------------------------------------------------------------------------

Outcome path_counts_match_enumeration() {
    const auto start = Clock::now();
    std::mt19937_64 rng(20240601);
    std::size_t metapaths = 0;
    double worst = 0.0;
    for (int trial = 0; trial < 200; ++trial) {
        auto g = fixtures::random_small_graph(rng, 50);
        for (const auto& label : fixtures::symmetric_metapath_labels(g, 5)) {
            auto p = parse_metapath(g, label);
            auto pc = count_paths(g, p);
            auto oracle = fixtures::dfs_path_counts(g, p);
            ++metapaths;
            for (LocalId x = 0; x < oracle.size(); ++x) {
                for (LocalId y = 0; y < oracle[x].size(); ++y) {
                    if (pc.counts.at(x, y) != oracle[x][y]) {
                        return {false, fmt("graph %d, %s: count(%u,%u) = %llu, enumeration gives %llu", trial,
                                           label.c_str(), x, y, (unsigned long long)pc.counts.at(x, y),
                                           (unsigned long long)oracle[x][y])};
                    }
                    double expect = 0.0;
                    if (x == y) {
                        expect = 1.0;
                    } else if (oracle[x][x] + oracle[y][y] > 0) {
                        expect = 2.0 * double(oracle[x][y]) / (double(oracle[x][x]) + double(oracle[y][y]));
                    }
                    worst = std::max(worst, std::abs(pathsim(pc, x, y) - expect));
                }
            }
        }
    }
    auto fixture = fixtures::two_recipe_graph();
    const double ab = pathsim(count_paths(fixture, parse_metapath(fixture, "R-U-R")), 0, 1);
    const double elapsed = seconds_since(start);
    const bool ok = worst <= 1e-12 && ab == 0.4 && elapsed < 60.0;
    return {ok, fmt("200 graphs, %zu metapaths, max |pathsim - oracle| = %.1e, o(A,B) = %.17g, %.1fs", metapaths,
                    worst, ab, elapsed)};
}

// The hinge loss minus its constant margin: sum of s(u, r-) - s(u, r+) over
// examples whose hinge is active. Identical to the batch loss up to a
// constant while no hinge changes state, and free of the rounding that adding
// the margin to a small score difference causes.
Tensor active_margin_sum(std::span<const TrainingExample> batch, const RecipeMetaModel& model) {
    auto emb = model.forward();
    std::vector<std::uint32_t> users, pos, neg;
    for (const auto& e : batch) {
        users.push_back(e.user);
        pos.push_back(e.pos_recipe);
        neg.push_back(e.neg_recipe);
    }
    auto u = ad::gather_rows(emb.users, users);
    auto diff = ad::sub(ad::rowwise_dot(u, ad::gather_rows(emb.recipes, neg)),
                        ad::rowwise_dot(u, ad::gather_rows(emb.recipes, pos)));
    ad::relu(ad::add_scalar(diff, 1.0));  // lets the kink probe see hinge flips
    double total = 0.0;
    for (double d : diff.data()) {
        if (1.0 + d > 0.0) total += d;
    }
    return Tensor::scalar(total);
}

Outcome gradients_match_finite_differences() {
    const auto start = Clock::now();
    std::mt19937_64 rng(77);
    double worst = 0.0;
    std::size_t checked = 0, excluded = 0, graphs = 0;
    while (graphs < 20) {
        std::uniform_int_distribution<std::size_t> size(2, 6);
        auto g = make_random_graph(size(rng), size(rng), size(rng), 0.4, rng());
        const auto rel = g.relation_named("U-R");
        const auto user = g.type_named("User");
        const auto n_recipes = g.num_nodes(g.type_named("Recipe"));
        std::vector<TrainingExample> batch;
        for (const auto& e : g.edges(rel)) {
            if (g.neighbors({user, e.src}, rel).size() >= n_recipes) continue;
            batch.push_back({e.src, e.dst, sample_negative(g, rel, e.src, rng)});
            if (batch.size() == 6) break;
        }
        if (batch.empty()) continue;
        ++graphs;

        ModelConfig cfg;
        cfg.embed_dim = 4;
        cfg.heads = 2;
        cfg.layers = 2;
        cfg.out_dim = 3;
        cfg.top_m = 2;
        cfg.seed = rng();
        RecipeMetaModel model(g, cfg);
        auto res = ad::grad_check([&] { return batch_loss(batch, model); }, model.parameter_tensors(), 1e-5,
                                  [&] { return active_margin_sum(batch, model); });
        worst = std::max(worst, res.max_relative_error);
        checked += res.checked;
        excluded += res.excluded;
    }
    const double elapsed = seconds_since(start);
    return {worst < 1e-4 && elapsed < 300.0,
            fmt("20 graphs, %zu entries checked, %zu kink-excluded, max relative error %.2e, %.1fs", checked,
                excluded, worst, elapsed)};
}

Outcome attention_weights_normalize() {
    std::mt19937_64 rng(31);
    double worst = 0.0;
    std::size_t alpha_rows = 0, betas = 0;
    const std::vector<std::vector<std::string>> metapath_sets{
        {"U-R-U", "R-U-R", "R-I-R"}, {"U-R-U", "I-R-I", "R-R"}, {"R-I-I-R", "U-R-R-U"}};
    for (int pass = 0; pass < 1000; ++pass) {
        auto g = fixtures::random_small_graph(rng, 30);
        ModelConfig cfg;
        cfg.embed_dim = 4;
        cfg.heads = 2;
        cfg.layers = 2;
        cfg.out_dim = 4;
        cfg.top_m = 1 + pass % 4;
        cfg.metapaths = metapath_sets[pass % metapath_sets.size()];
        cfg.seed = rng();
        RecipeMetaModel model(g, cfg);
        AttentionTrace trace;
        {
            ad::NoGradGuard no_grad;
            model.forward(&trace);
        }
        for (const auto& level : trace.node_level) {
            for (const auto& alpha : level.alpha) {
                for (std::size_t i = 0; i + 1 < level.offsets.size(); ++i) {
                    if (level.offsets[i] == level.offsets[i + 1]) continue;
                    for (std::size_t c = 0; c < alpha.cols(); ++c) {
                        double s = 0.0;
                        for (auto k = level.offsets[i]; k < level.offsets[i + 1]; ++k) s += alpha.at(k, c);
                        worst = std::max(worst, std::abs(s - 1.0));
                        ++alpha_rows;
                    }
                }
            }
        }
        for (const auto& beta : trace.relation_level) {
            worst = std::max(worst, std::abs(std::accumulate(beta.begin(), beta.end(), 0.0) - 1.0));
            ++betas;
        }
    }
    return {worst <= 1e-10 && alpha_rows > 0 && betas > 0,
            fmt("1000 passes, %zu alpha rows, %zu beta vectors, max |sum - 1| = %.1e", alpha_rows, betas, worst)};
}

Outcome metric_fixtures() {
    bool exact = true;
    const std::size_t ranks[] = {1, 3, 11};
    const MetricSet want[] = {{1, 1, 0.1, 1}, {1, 0.5, 0.1, 1.0 / 3.0}, {0, 0, 0, 0}};
    for (int i = 0; i < 3; ++i) {
        std::vector<RankedTrial> t(1);
        t[0].rank = ranks[i];
        auto m = metrics_at_k(t, 10);
        exact &= m.hr == want[i].hr && m.ndcg == want[i].ndcg && m.precision == want[i].precision &&
                 m.map == want[i].map;
    }

    const std::size_t n = 10000;
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<double> scores(n * (kNegativesPerTrial + 1));
    for (auto& s : scores) s = u(rng);
    std::vector<RankedTrial> trials(n);
    for (std::size_t i = 0; i < n; ++i) {
        trials[i].user = static_cast<LocalId>(i);
        trials[i].positive = 0;
        for (LocalId k = 1; k <= kNegativesPerTrial; ++k) trials[i].negatives.push_back(k);
    }
    ScoreFn random_score = [&](LocalId user, LocalId r) { return scores[user * (kNegativesPerTrial + 1) + r]; };
    auto report = evaluate_trials(random_score, std::move(trials), 0);
    const double p = 10.0 / 101.0;
    const double sigma = std::sqrt(p * (1.0 - p) / n);
    const double hr = report.at_k[9].hr;
    return {exact && std::abs(hr - p) <= 3.0 * sigma,
            fmt("closed forms %s; random HR@10 = %.4f vs %.4f +- %.4f", exact ? "exact" : "MISMATCH", hr, p,
                3.0 * sigma)};
}

Outcome planted_recovery(const Dataset& data, double& full_avg_hr) {
    const auto start = Clock::now();
    auto cfg = planted_config();
    auto fitted = run_train(data, cfg, {});
    auto report = run_eval(fitted.model, data, Fold::test, cfg.eval_seed);
    const double elapsed = seconds_since(start);
    full_avg_hr = report.average.hr;
    const double hr10 = report.at_k[9].hr;
    return {hr10 >= 0.5 && elapsed < 600.0,
            fmt("HR@10 = %.4f over %zu test trials (loss %.4f -> %.4f), %.1fs", hr10, report.trials,
                fitted.trace.front().mean_loss, fitted.trace.back().mean_loss, elapsed)};
}

Outcome ablation_direction(const Dataset& data, double seed1_full_avg_hr) {
    const std::uint64_t seeds[] = {1, 2, 3};
    int holds = 0;
    std::string detail;
    for (auto seed : seeds) {
        double avg[3] = {0, 0, 0};
        const Variant variants[] = {Variant::full, Variant::hgat_only, Variant::metapath_only};
        for (int v = 0; v < 3; ++v) {
            if (seed == 1 && v == 0) {
                avg[0] = seed1_full_avg_hr;
                continue;
            }
            auto cfg = planted_config();
            cfg.model.variant = variants[v];
            cfg.model.seed = seed;
            cfg.train.seed = seed == 1 ? cfg.train.seed : 100 + seed;
            auto fitted = run_train(data, cfg, {});
            avg[v] = run_eval(fitted.model, data, Fold::test, cfg.eval_seed).average.hr;
        }
        const bool ok = avg[0] >= avg[1] && avg[0] >= avg[2];
        holds += ok ? 1 : 0;
        detail += fmt("%sseed %llu: full %.4f, hgat_only %.4f, metapath_only %.4f", detail.empty() ? "" : "; ",
                      (unsigned long long)seed, avg[0], avg[1], avg[2]);
    }
    return {holds >= 2, fmt("%d/3 seeds hold (%s)", holds, detail.c_str())};
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Outcome determinism() {
    PlantedSpec spec;
    spec.users = 120;
    spec.recipes = 300;
    spec.ingredients = 60;
    spec.interactions_per_user = 10;
    auto graph = make_planted_graph(spec);
    auto cfg = planted_config();
    cfg.model.embed_dim = 16;
    cfg.model.out_dim = 16;
    cfg.train.epochs = 4;
    auto root = fixtures::scratch_dir("acceptance_determinism");
    for (const char* run : {"a", "b"}) {
        auto data = prepare_dataset(graph, cfg);
        auto fitted = run_train(data, cfg, root / run);
        write_eval_report(root / run / "eval.json", run_eval(fitted.model, data, cfg.eval_fold, cfg.eval_seed));
    }
    bool ok = true;
    std::string detail;
    for (const char* f : {"model.bin", "eval.json", "split.jsonl", "manifest.json"}) {
        const auto a = slurp(root / "a" / f);
        const auto b = slurp(root / "b" / f);
        const bool same = !a.empty() && a == b;
        ok &= same;
        detail += fmt("%s%s %s (%zu bytes)", detail.empty() ? "" : ", ", f, same ? "identical" : "DIFFERENT", a.size());
    }
    return {ok, detail};
}

Outcome permutation_equivariance() {
    PlantedSpec spec;
    spec.users = 60;
    spec.recipes = 150;
    spec.ingredients = 30;
    spec.interactions_per_user = 6;
    auto g = make_planted_graph(spec);
    std::mt19937_64 rng(8);
    std::vector<std::vector<LocalId>> perm(g.num_types());
    HeteIN h = g;
    for (std::size_t t = 0; t < g.num_types(); ++t) {
        perm[t].resize(g.num_nodes(TypeId(t)));
        std::iota(perm[t].begin(), perm[t].end(), 0);
        std::shuffle(perm[t].begin(), perm[t].end(), rng);
        h = h.permuted(TypeId(t), perm[t]);
    }
    auto moved = [&](TypeId t, LocalId i) { return perm[index_of(t)][i]; };

    double worst_sim = 0.0;
    for (const char* label : {"U-R-U", "R-U-R", "R-I-R", "I-R-I", "R-R", "U-R-I-R-U"}) {
        auto p = parse_metapath(g, label);
        auto a = count_paths(g, p);
        auto b = count_paths(h, parse_metapath(h, label));
        const auto t = p.source_type();
        for (LocalId x = 0; x < g.num_nodes(t); ++x)
            for (LocalId y = 0; y < g.num_nodes(t); ++y)
                worst_sim = std::max(worst_sim, std::abs(pathsim(a, x, y) - pathsim(b, moved(t, x), moved(t, y))));
    }

    // m covers every positive-similarity neighbour, so id tie-breaks never truncate
    ModelConfig cfg;
    cfg.embed_dim = 8;
    cfg.heads = 2;
    cfg.layers = 2;
    cfg.out_dim = 8;
    cfg.top_m = 1000;
    RecipeMetaModel base(g, cfg);
    RecipeMetaModel other(h, cfg);
    for (std::size_t i = 0; i < base.parameters().size(); ++i) {
        const auto& src = base.parameters()[i];
        auto dst = other.parameters()[i].tensor.mutable_data();
        auto from = src.tensor.data();
        std::optional<TypeId> embed_type;
        if (src.name.rfind("embed.", 0) == 0) embed_type = g.type_named(src.name.substr(6));
        if (!embed_type) {
            std::copy(from.begin(), from.end(), dst.begin());
            continue;
        }
        const auto cols = src.tensor.cols();
        for (LocalId r = 0; r < src.tensor.rows(); ++r)
            std::copy_n(from.begin() + r * cols, cols, dst.begin() + moved(*embed_type, r) * cols);
    }

    double worst_full = 0.0;
    {
        ad::NoGradGuard no_grad;
        auto a = base.forward_full();
        auto b = other.forward_full();
        for (std::size_t t = 0; t < a.size(); ++t)
            for (LocalId i = 0; i < a[t].rows(); ++i)
                for (std::size_t c = 0; c < a[t].cols(); ++c)
                    worst_full = std::max(worst_full, std::abs(a[t].at(i, c) - b[t].at(moved(TypeId(t), i), c)));
    }

    ExperimentConfig ecfg;
    auto data = prepare_dataset(g, ecfg);
    const auto user = g.type_named("User");
    const auto recipe = g.type_named("Recipe");
    FusedEmbeddings ea, eb;
    {
        ad::NoGradGuard no_grad;
        ea = base.forward();
        eb = other.forward();
    }
    ScoreFn score_a = [&](LocalId u, LocalId r) { return fuse_and_score(ea, u, r); };
    ScoreFn score_b = [&](LocalId u, LocalId r) { return fuse_and_score(eb, u, r); };
    auto ra = evaluate(score_a, data.graph, data.holdout.relation, data.holdout.test_edges, 5);
    std::vector<RankedTrial> relabelled;
    for (const auto& t : ra.per_trial) {
        RankedTrial m;
        m.user = moved(user, t.user);
        m.positive = moved(recipe, t.positive);
        for (auto n : t.negatives) m.negatives.push_back(moved(recipe, n));
        relabelled.push_back(std::move(m));
    }
    auto rb = evaluate_trials(score_b, std::move(relabelled), 5);
    double worst_metric = 0.0;
    for (std::size_t k = 0; k < kMaxK; ++k) {
        const auto& x = ra.at_k[k];
        const auto& y = rb.at_k[k];
        for (double d : {x.hr - y.hr, x.ndcg - y.ndcg, x.precision - y.precision, x.map - y.map})
            worst_metric = std::max(worst_metric, std::abs(d));
    }
    const bool ok = worst_sim <= 1e-10 && worst_full <= 1e-10 && worst_metric <= 1e-10;
    return {ok, fmt("max deviation: pathsim %.1e, forward_full %.1e, metrics %.1e over %zu trials", worst_sim,
                    worst_full, worst_metric, ra.trials)};
}

}  // namespace

int main(int argc, char** argv) {
    // an optional argument restricts the run to the listed criteria, e.g. "AC1,AC4"
    std::string only = argc > 1 ? argv[1] : "";
    auto wanted = [&](const char* id) { return only.empty() || only.find(id) != std::string::npos; };

    int failures = 0;
    auto report = [&](const char* id, const char* name, const std::function<Outcome()>& run) {
        if (!wanted(id)) return;
        Outcome o;
        try {
            o = run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        failures += o.pass ? 0 : 1;
        std::printf("%s %s %s: %s\n", o.pass ? "PASS" : "FAIL", id, name, o.detail.c_str());
        std::fflush(stdout);
    };

    report("AC1", "path counts and PathSim match enumeration", path_counts_match_enumeration);
    report("AC2", "analytic gradients match finite differences", gradients_match_finite_differences);
    report("AC3", "attention weights sum to one", attention_weights_normalize);
    report("AC4", "metric fixtures and random baseline", metric_fixtures);

    double full_avg_hr = 0.0;
    std::optional<Dataset> planted;
    if (wanted("AC5") || wanted("AC6")) planted = prepare_dataset(planted_graph(), planted_config());
    report("AC5", "planted block structure is recovered", [&] { return planted_recovery(*planted, full_avg_hr); });
    report("AC6", "full model is at least as good as each ablation",
           [&] { return ablation_direction(*planted, full_avg_hr); });
    report("AC7", "repeated runs are byte-identical", determinism);
    report("AC8", "relabelling nodes is harmless", permutation_equivariance);
    return failures;
}
