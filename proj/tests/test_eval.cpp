#include "fixtures.hpp"

#include "recipemeta/eval.hpp"
#include "recipemeta/split.hpp"
#include "recipemeta/synthetic.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <fstream>

using namespace recipemeta;

namespace {

RankedTrial at_rank(std::size_t rank) {
    RankedTrial t;
    t.rank = rank;
    return t;
}

HeteIN eval_graph() {
    PlantedSpec s;
    s.users = 40;
    s.recipes = 150;
    s.ingredients = 20;
    s.interactions_per_user = 5;
    return make_planted_graph(s);
}

}  // namespace

TEST(Metrics, ClosedFormValuesAtTen) {
    const std::vector<std::pair<std::size_t, MetricSet>> cases{
        {1, {1.0, 1.0, 0.1, 1.0}},
        {3, {1.0, 0.5, 0.1, 1.0 / 3.0}},
        {11, {0.0, 0.0, 0.0, 0.0}},
    };
    for (const auto& [rank, want] : cases) {
        std::vector<RankedTrial> trials{at_rank(rank)};
        auto m = metrics_at_k(trials, 10);
        EXPECT_EQ(m.hr, want.hr) << rank;
        EXPECT_EQ(m.ndcg, want.ndcg) << rank;
        EXPECT_EQ(m.precision, want.precision) << rank;
        EXPECT_EQ(m.map, want.map) << rank;
    }
    std::vector<RankedTrial> mixed{at_rank(1), at_rank(3), at_rank(11)};
    auto m = metrics_at_k(mixed, 10);
    EXPECT_DOUBLE_EQ(m.hr, 2.0 / 3.0);
    EXPECT_DOUBLE_EQ(m.ndcg, 0.5);
    EXPECT_DOUBLE_EQ(m.map, (1.0 + 1.0 / 3.0) / 3.0);
}

TEST(Metrics, RejectEmptyInputAndZeroK) {
    std::vector<RankedTrial> one{at_rank(1)};
    EXPECT_THROW(metrics_at_k({}, 10), std::invalid_argument);
    EXPECT_THROW(metrics_at_k(one, 0), std::invalid_argument);
}

TEST(Metrics, AverageOverKIsArithmeticMean) {
    std::vector<RankedTrial> trials{at_rank(4)};
    std::array<MetricSet, kMaxK> at_k{};
    for (std::size_t k = 1; k <= kMaxK; ++k) at_k[k - 1] = metrics_at_k(trials, k);
    auto avg = average_over_k(at_k);
    EXPECT_DOUBLE_EQ(avg.hr, 0.7);  // hit for k = 4..10
    EXPECT_DOUBLE_EQ(avg.ndcg, 0.7 * 1.0 / std::log2(5.0));
}

TEST(RankTrial, StrictlyHigherScoresAndLowerIdTiesRankAhead) {
    ScoreFn score = [](LocalId, LocalId r) { return r == 5 ? 1.0 : (r < 3 ? 2.0 : (r < 8 ? 1.0 : 0.0)); };
    // negatives 0..2 score higher; 3, 4 tie with smaller id; 6, 7 tie with larger id
    auto t = rank_trial(score, 0, 5, {0, 1, 2, 3, 4, 6, 7, 8, 9});
    EXPECT_EQ(t.rank, 6u);
    std::vector<LocalId> known{1, 5};
    EXPECT_THROW(rank_trial(score, 0, 5, {0, 1, 2}, known), std::invalid_argument);
}

TEST(Evaluate, PerfectScorerHitsEveryK) {
    auto g = eval_graph();
    auto split = split_target_edges(g, {});
    const auto rel = split.relation;
    ScoreFn oracle = [&](LocalId u, LocalId r) {
        for (const auto& e : split.test_edges) {
            if (e.src == u && e.dst == r) return 1.0;
        }
        return 0.0;
    };
    auto report = evaluate(oracle, g, rel, split.test_edges, 5);
    EXPECT_EQ(report.trials, split.test_edges.size());
    EXPECT_EQ(report.skipped, 0u);
    for (const auto& m : report.at_k) EXPECT_EQ(m.hr, 1.0);
    EXPECT_EQ(report.average.ndcg, 1.0);
}

TEST(Evaluate, NegativesAvoidKnownPositivesAndAreSeeded) {
    auto g = eval_graph();
    auto split = split_target_edges(g, {});
    const auto user_type = g.type_named("User");
    ScoreFn zero = [](LocalId, LocalId) { return 0.0; };
    auto a = evaluate(zero, g, split.relation, split.test_edges, 11);
    auto b = evaluate(zero, g, split.relation, split.test_edges, 11);
    auto c = evaluate(zero, g, split.relation, split.test_edges, 12);
    ASSERT_EQ(a.per_trial.size(), b.per_trial.size());
    bool any_diff = false;
    for (std::size_t i = 0; i < a.per_trial.size(); ++i) {
        const auto& t = a.per_trial[i];
        EXPECT_EQ(t.negatives, b.per_trial[i].negatives);
        any_diff |= t.negatives != c.per_trial[i].negatives;
        EXPECT_EQ(t.negatives.size(), kNegativesPerTrial);
        std::vector<LocalId> sorted = t.negatives;
        std::sort(sorted.begin(), sorted.end());
        EXPECT_EQ(std::adjacent_find(sorted.begin(), sorted.end()), sorted.end());
        auto known = g.neighbors({user_type, t.user}, split.relation);
        for (auto n : t.negatives) EXPECT_FALSE(std::binary_search(known.begin(), known.end(), n));
    }
    EXPECT_TRUE(any_diff);
    EXPECT_EQ(to_json(a).dump(), to_json(b).dump());
}

TEST(Evaluate, SkipsUsersWithTooFewEligibleRecipes) {
    PlantedSpec s;
    s.users = 20;
    s.recipes = 104;
    s.ingredients = 10;
    s.interactions_per_user = 5;  // 99 eligible recipes each
    auto g = make_planted_graph(s);
    auto split = split_target_edges(g, {});
    ScoreFn zero = [](LocalId, LocalId) { return 0.0; };
    EXPECT_THROW(evaluate(zero, g, split.relation, split.test_edges, 1), std::runtime_error);
}

TEST(Evaluate, RandomScorerHitRateMatchesChance) {
    std::vector<RankedTrial> trials;
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const std::size_t n = 10000;
    for (std::size_t i = 0; i < n; ++i) {
        RankedTrial t;
        t.positive = 0;
        for (LocalId k = 1; k <= kNegativesPerTrial; ++k) t.negatives.push_back(k);
        trials.push_back(std::move(t));
    }
    std::vector<double> cache((kNegativesPerTrial + 1) * n);
    for (auto& x : cache) x = u(rng);
    std::size_t trial = 0;
    ScoreFn score = [&](LocalId user, LocalId r) { return cache[user * (kNegativesPerTrial + 1) + r]; };
    for (auto& t : trials) t.user = static_cast<LocalId>(trial++);
    auto report = evaluate_trials(score, std::move(trials), 0);
    const double p = 10.0 / 101.0;
    const double sigma = std::sqrt(p * (1 - p) / n);
    EXPECT_NEAR(report.at_k[9].hr, p, 3 * sigma);
}

TEST(Evaluate, ReportJsonHasFixedKeys) {
    EvalReport r;
    r.trials = 3;
    auto j = to_json(r);
    std::vector<std::string> keys;
    for (auto it = j.begin(); it != j.end(); ++it) keys.push_back(it.key());
    EXPECT_EQ(keys, (std::vector<std::string>{"1", "2", "3", "4", "5", "6", "7", "8", "9", "10", "avg", "trials",
                                              "skipped", "seed"}));
    EXPECT_TRUE(j["4"].contains("ndcg"));
}

TEST(Evaluate, TrialRanksCsv) {
    auto g = eval_graph();
    auto split = split_target_edges(g, {});
    ScoreFn zero = [](LocalId, LocalId) { return 0.0; };
    auto report = evaluate(zero, g, split.relation, split.test_edges, 3);
    auto dir = fixtures::scratch_dir("eval_ranks");
    write_trial_ranks(dir / "ranks.csv", g, split.relation, report);
    std::ifstream in(dir / "ranks.csv");
    std::string line;
    std::getline(in, line);
    EXPECT_EQ(line, "user,positive,rank");
    std::size_t rows = 0;
    while (std::getline(in, line)) ++rows;
    EXPECT_EQ(rows, report.trials);
}
