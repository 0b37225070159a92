#pragma once

#include "recipemeta/eval.hpp"
#include "recipemeta/model.hpp"
#include "recipemeta/split.hpp"
#include "recipemeta/trainer.hpp"

#include "json.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace recipemeta {

struct AblationPlan {
    std::vector<Variant> variants{Variant::full, Variant::hgat_only, Variant::metapath_only};
    std::vector<std::vector<std::string>> metapath_sets{{"U-R-U"}, {"U-R-U", "R-U-R", "R-I-R"}};
    std::vector<std::size_t> m_values{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
};

struct ExperimentConfig {
    std::filesystem::path nodes;
    std::filesystem::path edges;
    /// Existing split manifest; when empty the split is drawn from `split`.
    std::filesystem::path split_manifest;
    SplitSpec split;
    ModelConfig model;
    TrainConfig train;
    std::uint64_t eval_seed = 2023;
    Fold eval_fold = Fold::test;
    AblationPlan ablation;
    std::filesystem::path output_dir;

    void validate() const;
};

nlohmann::ordered_json to_json(const ExperimentConfig& cfg);
/// Missing keys keep their defaults.
ExperimentConfig experiment_config_from_json(const nlohmann::json& j);
ExperimentConfig load_experiment_config(const std::filesystem::path& path);

/// $RECIPEMETA_OUT if set and non-empty, otherwise ./runs.
std::filesystem::path default_output_root();

/// 64-bit FNV-1a of the compact JSON dump, as 16 hex digits.
std::string config_hash(const nlohmann::ordered_json& config);

/// manifest.json: command, version, seed, config hash, the full config and the
/// outputs written. No timestamps, so identical runs give identical manifests.
void write_run_manifest(const std::filesystem::path& dir, const std::string& command,
                        const nlohmann::ordered_json& config, std::uint64_t seed,
                        const std::vector<std::string>& outputs);

struct Dataset {
    HeteIN graph;  // every interaction
    EdgeHoldout holdout;
};

/// Splits `graph` per cfg (or replays cfg.split_manifest).
Dataset prepare_dataset(HeteIN graph, const ExperimentConfig& cfg);
Dataset load_dataset(const ExperimentConfig& cfg);

std::span<const EdgePair> fold_edges(const EdgeHoldout& holdout, Fold fold);

/// Trains on the holdout's train graph and, if `out_dir` is non-empty, writes
/// model.bin, loss.csv, split.jsonl, config.json and manifest.json there.
FitResult run_train(const Dataset& data, const ExperimentConfig& cfg, const std::filesystem::path& out_dir);

/// Scores every trial of `fold` with the trained model.
EvalReport run_eval(const RecipeMetaModel& model, const Dataset& data, Fold fold, std::uint64_t seed);

/// Rebuilds the model described by cfg on the train graph and loads the checkpoint into it.
RecipeMetaModel load_trained_model(const Dataset& data, const ExperimentConfig& cfg,
                                   const std::filesystem::path& checkpoint);

struct AblationRow {
    std::string group;  // "variant", "metapaths" or "m"
    std::string label;
    bool ok = false;
    std::string error;
    MetricSet average;
    std::size_t trials = 0;
};

/// One row per variant, per metapath set and per m value, all sharing cfg's
/// seeds. A failing run is recorded and the rest continue. Up to `jobs` runs
/// execute concurrently; each is independent and deterministic.
std::vector<AblationRow> run_ablate(const Dataset& data, const ExperimentConfig& cfg, std::size_t jobs = 1);

/// ablation.csv and ablation.json.
void write_ablation_report(const std::filesystem::path& dir, const std::vector<AblationRow>& rows);

}  // namespace recipemeta
