#pragma once

#include "recipemeta/hetein.hpp"

#include "json.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <vector>

namespace recipemeta {

/// Score of a (user, recipe) pair; higher ranks earlier.
using ScoreFn = std::function<double(LocalId user, LocalId recipe)>;

inline constexpr std::size_t kNegativesPerTrial = 100;
inline constexpr std::size_t kMaxK = 10;

struct RankedTrial {
    LocalId user = 0;
    LocalId positive = 0;
    std::vector<LocalId> negatives;
    std::size_t rank = 0;  // 1-based among positive + negatives
};

/// Scores the positive and every negative; rank counts candidates scoring
/// strictly higher, plus equal-score candidates with a smaller id.
/// If `known_positives` (sorted) is given, a negative found in it is rejected.
RankedTrial rank_trial(const ScoreFn& score, LocalId user, LocalId positive, std::vector<LocalId> negatives,
                       std::span<const LocalId> known_positives = {});

struct MetricSet {
    double hr = 0.0;
    double ndcg = 0.0;
    double precision = 0.0;
    double map = 0.0;
};

/// Single-relevant metrics averaged over trials: HR = [rho <= k],
/// NDCG = 1/log2(rho + 1), Precision = HR / k, AP = 1/rho (zero outside the top k).
MetricSet metrics_at_k(std::span<const RankedTrial> trials, std::size_t k);

struct EvalReport {
    std::array<MetricSet, kMaxK> at_k{};  // index k - 1
    MetricSet average;                     // arithmetic mean over k = 1..10
    std::size_t trials = 0;
    std::size_t skipped = 0;
    std::uint64_t seed = 0;
    std::vector<RankedTrial> per_trial;
};

MetricSet average_over_k(const std::array<MetricSet, kMaxK>& at_k);

/// One trial per held-out edge with 100 negatives drawn (without replacement)
/// from recipes outside the user's known positives in `full_graph`. The
/// negative stream of trial i depends only on (seed, i). Users with fewer than
/// 100 eligible recipes are skipped and counted.
EvalReport evaluate(const ScoreFn& score, const HeteIN& full_graph, RelationId user_recipe,
                    std::span<const EdgePair> holdout, std::uint64_t seed);

/// Ranks caller-supplied trials (negatives already chosen).
EvalReport evaluate_trials(const ScoreFn& score, std::vector<RankedTrial> trials, std::uint64_t seed);

/// {"1": {hr, ndcg, precision, map}, ..., "10": {...}, "avg": {...}, "trials", "skipped", "seed"}
nlohmann::ordered_json to_json(const EvalReport& report);
void write_eval_report(const std::filesystem::path& path, const EvalReport& report);
/// CSV `user,positive,rank` with node ids.
void write_trial_ranks(const std::filesystem::path& path, const HeteIN& g, RelationId user_recipe,
                       const EvalReport& report);

}  // namespace recipemeta
