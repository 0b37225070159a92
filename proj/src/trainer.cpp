#include "recipemeta/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <stdexcept>

namespace recipemeta {

using ad::Tensor;

void TrainConfig::validate() const {
    if (!(learning_rate >= 0.0) || batch_size == 0 || epochs == 0 || negatives_per_positive == 0) {
        throw std::invalid_argument("learning_rate must be >= 0; batch_size, epochs and negatives must be positive");
    }
}

nlohmann::ordered_json to_json(const TrainConfig& cfg) {
    nlohmann::ordered_json j;
    j["learning_rate"] = cfg.learning_rate;
    j["batch_size"] = cfg.batch_size;
    j["epochs"] = cfg.epochs;
    j["negatives_per_positive"] = cfg.negatives_per_positive;
    j["seed"] = cfg.seed;
    j["optimizer"] = cfg.optimizer == OptimizerKind::adam ? "adam" : "sgd";
    j["beta1"] = cfg.beta1;
    j["beta2"] = cfg.beta2;
    j["adam_eps"] = cfg.adam_eps;
    j["target_relation"] = cfg.target_relation;
    j["checkpoint_every"] = cfg.checkpoint_every;
    return j;
}

TrainConfig train_config_from_json(const nlohmann::json& j) {
    TrainConfig cfg;
    cfg.learning_rate = j.value("learning_rate", cfg.learning_rate);
    cfg.batch_size = j.value("batch_size", cfg.batch_size);
    cfg.epochs = j.value("epochs", cfg.epochs);
    cfg.negatives_per_positive = j.value("negatives_per_positive", cfg.negatives_per_positive);
    cfg.seed = j.value("seed", cfg.seed);
    if (j.contains("optimizer")) {
        const auto o = j["optimizer"].get<std::string>();
        if (o == "adam") cfg.optimizer = OptimizerKind::adam;
        else if (o == "sgd") cfg.optimizer = OptimizerKind::sgd;
        else throw std::invalid_argument("unknown optimizer '" + o + "' (adam, sgd)");
    }
    cfg.beta1 = j.value("beta1", cfg.beta1);
    cfg.beta2 = j.value("beta2", cfg.beta2);
    cfg.adam_eps = j.value("adam_eps", cfg.adam_eps);
    cfg.target_relation = j.value("target_relation", cfg.target_relation);
    cfg.checkpoint_every = j.value("checkpoint_every", cfg.checkpoint_every);
    return cfg;
}

LocalId sample_negative(const HeteIN& g_train, RelationId user_recipe, LocalId user, std::mt19937_64& rng) {
    const auto& rel = g_train.relation(user_recipe);
    const auto n_recipes = g_train.num_nodes(rel.dst_type);
    auto positives = g_train.neighbors({rel.src_type, user}, user_recipe);
    if (positives.size() >= n_recipes) {
        throw std::runtime_error("user " + g_train.node_id({rel.src_type, user}) +
                                 " is connected to every recipe; no negative to sample");
    }
    std::uniform_int_distribution<LocalId> pick(0, n_recipes - 1);
    while (true) {
        const auto r = pick(rng);
        if (!std::binary_search(positives.begin(), positives.end(), r)) return r;
    }
}

Tensor batch_loss(std::span<const TrainingExample> examples, const FusedEmbeddings& emb) {
    if (examples.empty()) throw std::invalid_argument("batch_loss: empty batch");
    std::vector<std::uint32_t> users, pos, neg;
    users.reserve(examples.size());
    pos.reserve(examples.size());
    neg.reserve(examples.size());
    for (const auto& e : examples) {
        users.push_back(e.user);
        pos.push_back(e.pos_recipe);
        neg.push_back(e.neg_recipe);
    }
    Tensor u = ad::gather_rows(emb.users, users);
    Tensor s_pos = ad::rowwise_dot(u, ad::gather_rows(emb.recipes, pos));
    Tensor s_neg = ad::rowwise_dot(u, ad::gather_rows(emb.recipes, neg));
    return ad::sum(ad::relu(ad::add_scalar(ad::sub(s_neg, s_pos), 1.0)));
}

Tensor batch_loss(std::span<const TrainingExample> examples, const RecipeMetaModel& model) {
    return batch_loss(examples, model.forward());
}

Optimizer::Optimizer(const TrainConfig& cfg, std::vector<Tensor> params) : cfg_(cfg), params_(std::move(params)) {
    if (cfg_.optimizer == OptimizerKind::adam) {
        for (const auto& p : params_) {
            m_.emplace_back(p.size(), 0.0);
            v_.emplace_back(p.size(), 0.0);
        }
    }
}

void Optimizer::zero_grad() {
    for (auto& p : params_) p.zero_grad();
}

void Optimizer::step() {
    ++t_;
    const double lr = cfg_.learning_rate;
    if (cfg_.optimizer == OptimizerKind::sgd) {
        for (auto& p : params_) {
            auto w = p.mutable_data();
            auto g = p.grad();
            for (std::size_t i = 0; i < w.size(); ++i) w[i] -= lr * g[i];
        }
        return;
    }
    const double b1 = cfg_.beta1, b2 = cfg_.beta2;
    const double c1 = 1.0 - std::pow(b1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(b2, static_cast<double>(t_));
    for (std::size_t k = 0; k < params_.size(); ++k) {
        auto w = params_[k].mutable_data();
        auto g = params_[k].grad();
        auto& m = m_[k];
        auto& v = v_[k];
        for (std::size_t i = 0; i < w.size(); ++i) {
            m[i] = b1 * m[i] + (1.0 - b1) * g[i];
            v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
            w[i] -= lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + cfg_.adam_eps);
        }
    }
}

std::vector<EpochStats> fit(RecipeMetaModel& model, const HeteIN& g_train, const TrainConfig& cfg) {
    cfg.validate();
    const auto rel = g_train.relation_named(cfg.target_relation);
    auto positives = g_train.edges(rel);
    if (positives.empty()) throw std::runtime_error("training graph has no " + cfg.target_relation + " edges");

    std::mt19937_64 rng(cfg.seed);
    Optimizer opt(cfg, model.parameter_tensors());
    std::vector<EpochStats> trace;
    std::vector<TrainingExample> batch;

    for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
        const auto start = std::chrono::steady_clock::now();
        std::shuffle(positives.begin(), positives.end(), rng);
        double total = 0.0;
        std::size_t count = 0;
        std::size_t batch_no = 0;
        for (std::size_t begin = 0; begin < positives.size(); begin += cfg.batch_size, ++batch_no) {
            const auto end = std::min(positives.size(), begin + cfg.batch_size);
            batch.clear();
            for (auto i = begin; i < end; ++i) {
                for (std::size_t k = 0; k < cfg.negatives_per_positive; ++k) {
                    batch.push_back({positives[i].src, positives[i].dst,
                                     sample_negative(g_train, rel, positives[i].src, rng)});
                }
            }
            opt.zero_grad();
            Tensor loss = batch_loss(batch, model);
            const double value = loss.item();
            if (!std::isfinite(value)) {
                throw std::runtime_error("non-finite loss in epoch " + std::to_string(epoch) + ", batch " +
                                         std::to_string(batch_no) + " (positives " + std::to_string(begin) + ".." +
                                         std::to_string(end - 1) + ")");
            }
            ad::backward(loss);
            opt.step();
            total += value;
            count += batch.size();
        }
        const auto elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        trace.push_back({epoch, total / static_cast<double>(count), elapsed});

        if (cfg.checkpoint_every > 0 && epoch % cfg.checkpoint_every == 0 && !cfg.checkpoint_dir.empty()) {
            std::filesystem::create_directories(cfg.checkpoint_dir);
            write_tensors(cfg.checkpoint_dir / ("params_epoch" + std::to_string(epoch) + ".bin"), model.parameters());
        }
    }
    return trace;
}

FitResult fit(const HeteIN& g_train, const TrainConfig& cfg, const ModelConfig& model_cfg) {
    RecipeMetaModel model(g_train, model_cfg);
    auto trace = fit(model, g_train, cfg);
    return {std::move(model), std::move(trace)};
}

void write_loss_trace(const std::filesystem::path& path, const std::vector<EpochStats>& trace) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out.precision(17);
    out << "epoch,mean_loss,wall_seconds\n";
    for (const auto& e : trace) out << e.epoch << ',' << e.mean_loss << ',' << e.wall_seconds << '\n';
}

}  // namespace recipemeta
