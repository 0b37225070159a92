#include "recipemeta/eval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <stdexcept>
#include <unordered_set>

namespace recipemeta {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

nlohmann::ordered_json metric_json(const MetricSet& m) {
    nlohmann::ordered_json j;
    j["hr"] = m.hr;
    j["ndcg"] = m.ndcg;
    j["precision"] = m.precision;
    j["map"] = m.map;
    return j;
}

}  // namespace

RankedTrial rank_trial(const ScoreFn& score, LocalId user, LocalId positive, std::vector<LocalId> negatives,
                       std::span<const LocalId> known_positives) {
    if (!known_positives.empty()) {
        for (auto n : negatives) {
            if (std::binary_search(known_positives.begin(), known_positives.end(), n)) {
                throw std::invalid_argument("rank_trial: negative " + std::to_string(n) +
                                            " is a known positive of user " + std::to_string(user));
            }
        }
    }
    const double target = score(user, positive);
    std::size_t rank = 1;
    for (auto n : negatives) {
        const double s = score(user, n);
        if (s > target || (s == target && n < positive)) ++rank;
    }
    return {user, positive, std::move(negatives), rank};
}

MetricSet metrics_at_k(std::span<const RankedTrial> trials, std::size_t k) {
    if (trials.empty()) throw std::invalid_argument("metrics_at_k: no trials");
    if (k == 0) throw std::invalid_argument("metrics_at_k: k must be >= 1");
    MetricSet m;
    for (const auto& t : trials) {
        if (t.rank == 0 || t.rank > k) continue;
        const double rho = static_cast<double>(t.rank);
        m.hr += 1.0;
        m.ndcg += 1.0 / std::log2(rho + 1.0);
        m.precision += 1.0 / static_cast<double>(k);
        m.map += 1.0 / rho;
    }
    const double n = static_cast<double>(trials.size());
    m.hr /= n;
    m.ndcg /= n;
    m.precision /= n;
    m.map /= n;
    return m;
}

MetricSet average_over_k(const std::array<MetricSet, kMaxK>& at_k) {
    MetricSet avg;
    for (const auto& m : at_k) {
        avg.hr += m.hr;
        avg.ndcg += m.ndcg;
        avg.precision += m.precision;
        avg.map += m.map;
    }
    const double n = static_cast<double>(kMaxK);
    avg.hr /= n;
    avg.ndcg /= n;
    avg.precision /= n;
    avg.map /= n;
    return avg;
}

namespace {

EvalReport summarize(std::vector<RankedTrial> trials, std::size_t skipped, std::uint64_t seed) {
    EvalReport report;
    report.seed = seed;
    report.trials = trials.size();
    report.skipped = skipped;
    if (!trials.empty()) {
        for (std::size_t k = 1; k <= kMaxK; ++k) report.at_k[k - 1] = metrics_at_k(trials, k);
        report.average = average_over_k(report.at_k);
    }
    report.per_trial = std::move(trials);
    return report;
}

}  // namespace

EvalReport evaluate_trials(const ScoreFn& score, std::vector<RankedTrial> trials, std::uint64_t seed) {
    for (auto& t : trials) t = rank_trial(score, t.user, t.positive, std::move(t.negatives));
    return summarize(std::move(trials), 0, seed);
}

EvalReport evaluate(const ScoreFn& score, const HeteIN& full_graph, RelationId user_recipe,
                    std::span<const EdgePair> holdout, std::uint64_t seed) {
    if (holdout.empty()) throw std::invalid_argument("evaluate: no held-out edges");
    const auto& rel = full_graph.relation(user_recipe);
    const auto n_recipes = full_graph.num_nodes(rel.dst_type);

    std::vector<RankedTrial> trials;
    std::size_t skipped = 0;
    std::unordered_set<LocalId> chosen;
    for (std::size_t i = 0; i < holdout.size(); ++i) {
        const auto& e = holdout[i];
        auto known = full_graph.neighbors({rel.src_type, e.src}, user_recipe);
        if (n_recipes - known.size() < kNegativesPerTrial) {
            ++skipped;
            continue;
        }
        std::mt19937_64 rng(splitmix64(seed ^ splitmix64(i)));
        std::uniform_int_distribution<LocalId> pick(0, n_recipes - 1);
        std::vector<LocalId> negatives;
        negatives.reserve(kNegativesPerTrial);
        chosen.clear();
        while (negatives.size() < kNegativesPerTrial) {
            const auto r = pick(rng);
            if (std::binary_search(known.begin(), known.end(), r) || !chosen.insert(r).second) continue;
            negatives.push_back(r);
        }
        trials.push_back(rank_trial(score, e.src, e.dst, std::move(negatives), known));
    }
    if (trials.empty()) throw std::runtime_error("evaluate: every trial was skipped");

    return summarize(std::move(trials), skipped, seed);
}

nlohmann::ordered_json to_json(const EvalReport& report) {
    nlohmann::ordered_json j;
    for (std::size_t k = 1; k <= kMaxK; ++k) j[std::to_string(k)] = metric_json(report.at_k[k - 1]);
    j["avg"] = metric_json(report.average);
    j["trials"] = report.trials;
    j["skipped"] = report.skipped;
    j["seed"] = report.seed;
    return j;
}

void write_eval_report(const std::filesystem::path& path, const EvalReport& report) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << to_json(report).dump(2) << '\n';
}

void write_trial_ranks(const std::filesystem::path& path, const HeteIN& g, RelationId user_recipe,
                       const EvalReport& report) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    const auto& rel = g.relation(user_recipe);
    out << "user,positive,rank\n";
    for (const auto& t : report.per_trial) {
        out << g.node_id({rel.src_type, t.user}) << ',' << g.node_id({rel.dst_type, t.positive}) << ',' << t.rank
            << '\n';
    }
}

}  // namespace recipemeta
