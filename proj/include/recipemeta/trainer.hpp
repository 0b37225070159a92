#pragma once

#include "recipemeta/hetein.hpp"
#include "recipemeta/model.hpp"

#include <cstdint>
#include <filesystem>
#include <random>
#include <span>
#include <vector>

namespace recipemeta {

enum class OptimizerKind { adam, sgd };

struct TrainConfig {
    double learning_rate = 0.005;
    std::size_t batch_size = 412;  // positives per minibatch
    std::size_t epochs = 50;
    std::size_t negatives_per_positive = 1;
    std::uint64_t seed = 7;
    OptimizerKind optimizer = OptimizerKind::adam;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double adam_eps = 1e-8;
    std::string target_relation = "U-R";
    /// Write a checkpoint every N epochs into checkpoint_dir (0 disables).
    std::size_t checkpoint_every = 0;
    std::filesystem::path checkpoint_dir;

    void validate() const;
};

nlohmann::ordered_json to_json(const TrainConfig& cfg);
TrainConfig train_config_from_json(const nlohmann::json& j);

struct TrainingExample {
    LocalId user = 0;
    LocalId pos_recipe = 0;
    LocalId neg_recipe = 0;
};

/// Uniform over recipes the user has no training edge to (rejection sampling).
/// Throws std::runtime_error if the user is connected to every recipe.
LocalId sample_negative(const HeteIN& g_train, RelationId user_recipe, LocalId user, std::mt19937_64& rng);

/// Sum over examples of max(0, 1 - s(u, r+) + s(u, r-)).
ad::Tensor batch_loss(std::span<const TrainingExample> examples, const FusedEmbeddings& emb);
ad::Tensor batch_loss(std::span<const TrainingExample> examples, const RecipeMetaModel& model);

struct EpochStats {
    std::size_t epoch = 0;
    double mean_loss = 0.0;
    double wall_seconds = 0.0;
};

/// Adam or plain SGD over a fixed parameter list.
class Optimizer {
public:
    Optimizer(const TrainConfig& cfg, std::vector<ad::Tensor> params);
    void step();
    void zero_grad();

private:
    TrainConfig cfg_;
    std::vector<ad::Tensor> params_;
    std::vector<std::vector<double>> m_;
    std::vector<std::vector<double>> v_;
    std::size_t t_ = 0;
};

/// Trains `model` in place on the target relation of g_train. Throws
/// std::runtime_error naming the epoch and batch if a loss goes non-finite.
std::vector<EpochStats> fit(RecipeMetaModel& model, const HeteIN& g_train, const TrainConfig& cfg);

struct FitResult {
    RecipeMetaModel model;
    std::vector<EpochStats> trace;
};

/// Builds the model (similarity tables from g_train, fixed for the run) and trains it.
FitResult fit(const HeteIN& g_train, const TrainConfig& cfg, const ModelConfig& model_cfg);

void write_loss_trace(const std::filesystem::path& path, const std::vector<EpochStats>& trace);

}  // namespace recipemeta
