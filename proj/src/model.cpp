#include "recipemeta/model.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

namespace recipemeta {

using ad::Tensor;

std::string_view to_string(Variant v) {
    switch (v) {
        case Variant::full: return "full";
        case Variant::hgat_only: return "hgat_only";
        case Variant::metapath_only: return "metapath_only";
    }
    return "full";
}

Variant parse_variant(std::string_view s) {
    if (s == "full") return Variant::full;
    if (s == "hgat_only") return Variant::hgat_only;
    if (s == "metapath_only") return Variant::metapath_only;
    throw std::invalid_argument("unknown variant '" + std::string(s) + "' (full, hgat_only, metapath_only)");
}

void ModelConfig::validate() const {
    if (embed_dim == 0 || heads == 0 || layers == 0 || out_dim == 0 || top_m == 0) {
        throw std::invalid_argument("model dimensions, heads, layers and top_m must be positive");
    }
    if (embed_dim % heads != 0) {
        throw std::invalid_argument("embed_dim " + std::to_string(embed_dim) + " is not divisible by " +
                                    std::to_string(heads) + " heads");
    }
    if (variant == Variant::metapath_only && metapaths.empty()) {
        throw std::invalid_argument("metapath_only variant needs at least one metapath");
    }
}

nlohmann::ordered_json to_json(const ModelConfig& cfg) {
    nlohmann::ordered_json j;
    j["embed_dim"] = cfg.embed_dim;
    j["input_dim"] = cfg.input_dim;
    j["heads"] = cfg.heads;
    j["layers"] = cfg.layers;
    j["out_dim"] = cfg.out_dim;
    j["metapaths"] = cfg.metapaths;
    j["top_m"] = cfg.top_m;
    j["variant"] = std::string(to_string(cfg.variant));
    j["seed"] = cfg.seed;
    j["user_type"] = cfg.user_type;
    j["item_type"] = cfg.item_type;
    return j;
}

ModelConfig model_config_from_json(const nlohmann::json& j) {
    ModelConfig cfg;
    cfg.embed_dim = j.value("embed_dim", cfg.embed_dim);
    cfg.input_dim = j.value("input_dim", cfg.input_dim);
    cfg.heads = j.value("heads", cfg.heads);
    cfg.layers = j.value("layers", cfg.layers);
    cfg.out_dim = j.value("out_dim", cfg.out_dim);
    if (j.contains("metapaths")) cfg.metapaths = j["metapaths"].get<std::vector<std::string>>();
    cfg.top_m = j.value("top_m", cfg.top_m);
    if (j.contains("variant")) cfg.variant = parse_variant(j["variant"].get<std::string>());
    cfg.seed = j.value("seed", cfg.seed);
    cfg.user_type = j.value("user_type", cfg.user_type);
    cfg.item_type = j.value("item_type", cfg.item_type);
    return cfg;
}

NeighborIndex NeighborIndex::from_csr(const Csr& csr) {
    NeighborIndex idx;
    idx.offsets.assign(csr.row_ptr.begin(), csr.row_ptr.end());
    idx.cols.assign(csr.cols.begin(), csr.cols.end());
    idx.rows.reserve(csr.nnz());
    for (std::uint32_t i = 0; i < csr.rows(); ++i) {
        for (auto k = csr.row_ptr[i]; k < csr.row_ptr[i + 1]; ++k) idx.rows.push_back(i);
    }
    return idx;
}

// ---------------------------------------------------------------------------
// layers

Tensor node_attention(const AttentionLayer& layer, const Tensor& src_feats, const Tensor& nbr_feats,
                      const NeighborIndex& adj, AttentionTrace* trace) {
    if (adj.num_sources() != src_feats.rows()) {
        throw ad::ShapeError("node_attention", "adjacency has " + std::to_string(adj.num_sources()) +
                                                   " sources but features have " +
                                                   std::to_string(src_feats.rows()) + " rows");
    }
    if (src_feats.cols() != nbr_feats.cols()) {
        throw ad::ShapeError("node_attention", src_feats.shape(), nbr_feats.shape());
    }
    AttentionTrace::NodeLevel* record = nullptr;
    if (trace) {
        trace->node_level.push_back({adj.offsets, {}});
        record = &trace->node_level.back();
    }

    // sum_j W (x_i (.) x_j) = W (x_i (.) sum_j x_j)
    Tensor nbr_sum = ad::segment_sum(ad::gather_rows(nbr_feats, adj.cols), adj.offsets);
    Tensor pair_in = ad::hadamard(src_feats, nbr_sum);

    std::vector<Tensor> outputs;
    outputs.reserve(layer.heads.size());
    for (const auto& head : layer.heads) {
        const auto h = head.w_node.cols();
        Tensor z_src = ad::matmul(src_feats, head.w_node);
        Tensor z_nbr = ad::matmul(nbr_feats, head.w_node);
        // (z_i || z_j) W_ij = z_i W_ij[:h] + z_j W_ij[h:]
        Tensor score_src = ad::matmul(z_src, ad::slice(head.w_score, 0, h, 0, h));
        Tensor score_nbr = ad::matmul(z_nbr, ad::slice(head.w_score, h, 2 * h, 0, h));
        Tensor logits = ad::add(ad::gather_rows(score_src, adj.rows), ad::gather_rows(score_nbr, adj.cols));
        Tensor alpha = ad::segment_softmax(logits, adj.offsets);
        if (record) record->alpha.push_back(alpha);
        Tensor agg = ad::segment_sum(ad::hadamard(alpha, ad::gather_rows(z_nbr, adj.cols)), adj.offsets);
        outputs.push_back(ad::relu(ad::add(agg, ad::matmul(pair_in, head.w_pair))));
    }
    return outputs.size() == 1 ? outputs.front() : ad::concat(outputs, 1);
}

Tensor relation_fusion(const RelationFusion& fusion, const std::vector<Tensor>& per_relation, AttentionTrace* trace) {
    if (per_relation.empty()) {
        throw std::invalid_argument("relation_fusion: no relation produced features for this node type");
    }
    if (per_relation.size() != fusion.w_rel.size()) {
        throw std::invalid_argument("relation_fusion: " + std::to_string(per_relation.size()) +
                                    " relation inputs but " + std::to_string(fusion.w_rel.size()) +
                                    " relation weights");
    }
    std::vector<Tensor> scores;
    scores.reserve(per_relation.size());
    for (std::size_t r = 0; r < per_relation.size(); ++r) {
        Tensor hidden = ad::tanh(ad::add_row(ad::matmul(per_relation[r], fusion.w_rel[r]), fusion.bias));
        scores.push_back(ad::dot(ad::mean(hidden, 0), fusion.query));
    }
    Tensor beta = ad::softmax(ad::concat(scores, 1), 1);
    if (trace) trace->relation_level.emplace_back(beta.data().begin(), beta.data().end());

    Tensor out = ad::mul_scalar(per_relation[0], ad::slice(beta, 0, 1, 0, 1));
    for (std::size_t r = 1; r < per_relation.size(); ++r) {
        out = ad::add(out, ad::mul_scalar(per_relation[r], ad::slice(beta, 0, 1, r, r + 1)));
    }
    return out;
}

Tensor project(const EmbeddingTables& tables, NodeRef node) {
    const auto& table = tables.table.at(index_of(node.type));
    return ad::matmul(ad::slice(table, node.index, node.index + 1, 0, table.cols()),
                      tables.projection.at(index_of(node.type)));
}

Tensor project_all(const EmbeddingTables& tables, TypeId type) {
    return ad::matmul(tables.table.at(index_of(type)), tables.projection.at(index_of(type)));
}

std::vector<RelationView> relation_views(const HeteIN& g) {
    std::vector<RelationView> views;
    for (std::size_t r = 0; r < g.num_relations(); ++r) {
        const auto rid = static_cast<RelationId>(r);
        const auto& rel = g.relation(rid);
        views.push_back({rel.name, rel.src_type, rel.dst_type, NeighborIndex::from_csr(g.forward(rid))});
        if (!rel.symmetric) {
            views.push_back({rel.name + ":rev", rel.dst_type, rel.src_type, NeighborIndex::from_csr(g.reverse(rid))});
        }
    }
    return views;
}

std::vector<Tensor> forward_full(const std::vector<RelationView>& views, const FullChannel& params,
                                 std::vector<Tensor> inputs, AttentionTrace* trace) {
    const auto num_types = inputs.size();
    for (std::size_t l = 0; l < params.layers.size(); ++l) {
        std::vector<std::vector<Tensor>> per_type(num_types);
        for (std::size_t v = 0; v < views.size(); ++v) {
            const auto& view = views[v];
            per_type[index_of(view.src_type)].push_back(node_attention(
                params.layers[l][v], inputs[index_of(view.src_type)], inputs[index_of(view.nbr_type)], view.index,
                trace));
        }
        std::vector<Tensor> next(num_types);
        for (std::size_t t = 0; t < num_types; ++t) {
            if (per_type[t].empty()) {
                // a type without any relation view has no neighbourhood to aggregate
                const auto width = params.layers[l].empty() ? inputs[t].cols()
                                                            : params.layers[l][0].heads.size() *
                                                                  params.layers[l][0].heads[0].w_node.cols();
                next[t] = Tensor::zeros(inputs[t].rows(), width);
                continue;
            }
            next[t] = relation_fusion(*params.fusion[l][t], per_type[t], trace);
        }
        inputs = std::move(next);
    }
    return inputs;
}

Tensor forward_metapath(const NeighborIndex& homograph, const AttentionLayer& layer, const Tensor& feats,
                        AttentionTrace* trace) {
    return node_attention(layer, feats, feats, homograph, trace);
}

double fuse_and_score(const FusedEmbeddings& emb, LocalId user, LocalId recipe) {
    const auto n = emb.users.cols();
    if (emb.recipes.cols() != n) throw ad::ShapeError("fuse_and_score", emb.users.shape(), emb.recipes.shape());
    auto u = emb.users.data().subspan(static_cast<std::size_t>(user) * n, n);
    auto r = emb.recipes.data().subspan(static_cast<std::size_t>(recipe) * n, n);
    double s = 0.0;
    for (std::size_t j = 0; j < n; ++j) s += u[j] * r[j];
    return s;
}

// ---------------------------------------------------------------------------
// RecipeMetaModel

namespace {

class ParamFactory {
public:
    ParamFactory(std::uint64_t seed, std::vector<NamedTensor>& out) : rng_(seed), out_(out) {}

    Tensor glorot(const std::string& name, std::size_t rows, std::size_t cols) {
        const double a = std::sqrt(6.0 / static_cast<double>(rows + cols));
        std::uniform_real_distribution<double> dist(-a, a);
        std::vector<double> v(rows * cols);
        for (auto& x : v) x = dist(rng_);
        return keep(name, Tensor({rows, cols}, std::move(v), true));
    }

    Tensor normal(const std::string& name, std::size_t rows, std::size_t cols, double stddev) {
        std::normal_distribution<double> dist(0.0, stddev);
        std::vector<double> v(rows * cols);
        for (auto& x : v) x = dist(rng_);
        return keep(name, Tensor({rows, cols}, std::move(v), true));
    }

    Tensor zeros(const std::string& name, std::size_t rows, std::size_t cols) {
        return keep(name, Tensor::zeros(rows, cols, true));
    }

    AttentionLayer attention(const std::string& prefix, std::size_t in_dim, std::size_t heads, std::size_t h) {
        AttentionLayer layer;
        for (std::size_t m = 0; m < heads; ++m) {
            const auto p = prefix + ".h" + std::to_string(m);
            layer.heads.push_back({glorot(p + ".w_node", in_dim, h), glorot(p + ".w_score", 2 * h, h),
                                   glorot(p + ".w_pair", in_dim, h)});
        }
        return layer;
    }

private:
    Tensor keep(const std::string& name, Tensor t) {
        out_.push_back({name, t});
        return t;
    }

    std::mt19937_64 rng_;
    std::vector<NamedTensor>& out_;
};

std::vector<SimilarityTable> compute_tables(const HeteIN& g, const ModelConfig& cfg) {
    std::vector<SimilarityTable> tables;
    if (cfg.variant == Variant::hgat_only) return tables;
    for (const auto& label : cfg.metapaths) {
        tables.push_back(top_m_similar(g, parse_metapath(g, label), cfg.top_m));
    }
    return tables;
}

}  // namespace

RecipeMetaModel::RecipeMetaModel(const HeteIN& train_graph, ModelConfig cfg) : cfg_(std::move(cfg)) {
    cfg_.validate();
    init(train_graph, compute_tables(train_graph, cfg_));
}

RecipeMetaModel::RecipeMetaModel(const HeteIN& train_graph, ModelConfig cfg, std::vector<SimilarityTable> tables)
    : cfg_(std::move(cfg)) {
    cfg_.validate();
    init(train_graph, std::move(tables));
}

void RecipeMetaModel::init(const HeteIN& g, std::vector<SimilarityTable> tables) {
    const auto num_types = g.num_types();
    for (std::size_t t = 0; t < num_types; ++t) {
        counts_.push_back(g.num_nodes(TypeId(t)));
        type_names_.push_back(g.type(TypeId(t)).name);
    }
    user_type_ = g.type_named(cfg_.user_type);
    recipe_type_ = g.type_named(cfg_.item_type);
    views_ = relation_views(g);

    const auto d = cfg_.embed_dim;
    const auto d_t = cfg_.table_dim();
    const auto h = cfg_.head_dim();
    ParamFactory make(cfg_.seed, params_);

    for (std::size_t t = 0; t < num_types; ++t) {
        embeddings_.table.push_back(make.normal("embed." + type_names_[t], counts_[t], d_t, 0.1));
    }
    for (std::size_t t = 0; t < num_types; ++t) {
        embeddings_.projection.push_back(make.glorot("proj." + type_names_[t], d_t, d));
    }

    if (cfg_.variant != Variant::metapath_only) {
        for (std::size_t l = 0; l < cfg_.layers; ++l) {
            const auto prefix = "full.l" + std::to_string(l);
            std::vector<AttentionLayer> layer;
            for (const auto& view : views_) layer.push_back(make.attention(prefix + "." + view.name, d, cfg_.heads, h));
            full_.layers.push_back(std::move(layer));

            std::vector<std::optional<RelationFusion>> fusion(num_types);
            for (std::size_t t = 0; t < num_types; ++t) {
                RelationFusion f;
                for (const auto& view : views_) {
                    if (index_of(view.src_type) != t) continue;
                    f.w_rel.push_back(make.glorot(prefix + ".fuse." + view.name + ".w_rel", d, d));
                }
                if (f.w_rel.empty()) continue;
                f.bias = make.zeros(prefix + ".fuse." + type_names_[t] + ".bias", 1, d);
                f.query = make.glorot(prefix + ".fuse." + type_names_[t] + ".query", 1, d);
                fusion[t] = std::move(f);
            }
            full_.fusion.push_back(std::move(fusion));
        }
    }

    if (cfg_.variant != Variant::hgat_only) {
        if (tables.size() != cfg_.metapaths.size()) {
            throw std::invalid_argument("expected one similarity table per configured metapath");
        }
        for (std::size_t i = 0; i < tables.size(); ++i) {
            const auto& label = cfg_.metapaths[i];
            auto p = parse_metapath(g, label);
            if (tables[i].node_type != p.source_type() || tables[i].rows.size() != counts_[index_of(p.source_type())]) {
                throw std::invalid_argument("similarity table for " + label + " does not match the graph");
            }
            auto homo = build_homograph(tables[i]);
            channels_.push_back({label, p.source_type(), std::move(tables[i]), NeighborIndex::from_csr(homo.adjacency),
                                 make.attention("meta." + label, d, cfg_.heads, h)});
        }
    }

    output_projection_.resize(num_types);
    for (TypeId t : {user_type_, recipe_type_}) {
        std::size_t parts = cfg_.variant == Variant::metapath_only ? 0 : 1;
        for (const auto& ch : channels_) parts += ch.type == t ? 1 : 0;
        if (parts == 0) parts = 1;  // metapath_only with no channel: projected input
        output_projection_[index_of(t)] = make.glorot("out." + type_names_[index_of(t)], parts * d, cfg_.out_dim);
    }
}

std::vector<Tensor> RecipeMetaModel::projected_inputs() const {
    std::vector<Tensor> inputs;
    for (std::size_t t = 0; t < counts_.size(); ++t) inputs.push_back(project_all(embeddings_, TypeId(t)));
    return inputs;
}

std::vector<Tensor> RecipeMetaModel::forward_full(AttentionTrace* trace) const {
    if (cfg_.variant == Variant::metapath_only) {
        throw std::logic_error("metapath_only model has no full-graph channel");
    }
    return recipemeta::forward_full(views_, full_, projected_inputs(), trace);
}

FusedEmbeddings RecipeMetaModel::forward(AttentionTrace* trace) const {
    auto inputs = projected_inputs();
    std::vector<Tensor> full;
    if (cfg_.variant != Variant::metapath_only) full = recipemeta::forward_full(views_, full_, inputs, trace);

    auto fused = [&](TypeId t) {
        std::vector<Tensor> parts;
        if (!full.empty()) parts.push_back(full[index_of(t)]);
        for (const auto& ch : channels_) {
            if (ch.type == t) parts.push_back(forward_metapath(ch.index, ch.layer, inputs[index_of(t)], trace));
        }
        if (parts.empty()) parts.push_back(inputs[index_of(t)]);
        Tensor cat = parts.size() == 1 ? parts.front() : ad::concat(parts, 1);
        return ad::matmul(cat, output_projection_[index_of(t)]);
    };
    // channels over types that are never scored (e.g. I-R-I) still run so the
    // attention trace covers them
    for (const auto& ch : channels_) {
        if (ch.type != user_type_ && ch.type != recipe_type_ && trace) {
            forward_metapath(ch.index, ch.layer, inputs[index_of(ch.type)], trace);
        }
    }
    return {fused(user_type_), fused(recipe_type_)};
}

Tensor RecipeMetaModel::parameter(std::string_view name) const {
    for (const auto& p : params_) {
        if (p.name == name) return p.tensor;
    }
    throw std::out_of_range("no parameter named '" + std::string(name) + "'");
}

std::vector<Tensor> RecipeMetaModel::parameter_tensors() const {
    std::vector<Tensor> out;
    out.reserve(params_.size());
    for (const auto& p : params_) out.push_back(p.tensor);
    return out;
}

}  // namespace recipemeta
