#pragma once

#include "recipemeta/checkpoint.hpp"
#include "recipemeta/hetein.hpp"
#include "recipemeta/metapath.hpp"
#include "recipemeta/tensor.hpp"

#include "json.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace recipemeta {

enum class Variant { full, hgat_only, metapath_only };

std::string_view to_string(Variant v);
Variant parse_variant(std::string_view s);

struct ModelConfig {
    std::size_t embed_dim = 128;  // d, shared output width of every attention layer
    std::size_t input_dim = 0;    // per-type embedding width d_t; 0 means embed_dim
    std::size_t heads = 4;
    std::size_t layers = 2;
    std::size_t out_dim = 128;
    std::vector<std::string> metapaths{"U-R-U", "R-U-R", "R-I-R"};
    std::size_t top_m = 10;
    Variant variant = Variant::full;
    std::uint64_t seed = 1;
    std::string user_type = "User";
    std::string item_type = "Recipe";

    void validate() const;
    std::size_t table_dim() const { return input_dim == 0 ? embed_dim : input_dim; }
    std::size_t head_dim() const { return embed_dim / heads; }
};

nlohmann::ordered_json to_json(const ModelConfig& cfg);
ModelConfig model_config_from_json(const nlohmann::json& j);

/// CSR over source nodes of one directed relation view, plus the source row of every edge.
struct NeighborIndex {
    std::vector<std::uint64_t> offsets{0};
    std::vector<std::uint32_t> cols;
    std::vector<std::uint32_t> rows;

    std::size_t num_sources() const { return offsets.size() - 1; }
    static NeighborIndex from_csr(const Csr& csr);
};

/// One head: W_i (d_in x h), W_ij (2h x h), W (d_in x h).
struct AttentionHead {
    ad::Tensor w_node;
    ad::Tensor w_score;
    ad::Tensor w_pair;
};

struct AttentionLayer {
    std::vector<AttentionHead> heads;
};

struct RelationFusion {
    std::vector<ad::Tensor> w_rel;  // d x d per relation view
    ad::Tensor bias;                // 1 x d
    ad::Tensor query;               // 1 x d
};

/// Attention weights captured during a forward pass.
struct AttentionTrace {
    struct NodeLevel {
        std::vector<std::uint64_t> offsets;
        std::vector<ad::Tensor> alpha;  // per head, nnz x h
    };
    std::vector<NodeLevel> node_level;
    std::vector<std::vector<double>> relation_level;  // beta per fusion call
};

/// Multi-head node-level attention over one relation view. Attention is
/// channel-wise: W_ij maps (z_i || z_j) to an h-vector of logits and each
/// channel is softmax-normalized over N(i). Sources without neighbours get 0.
ad::Tensor node_attention(const AttentionLayer& layer, const ad::Tensor& src_feats, const ad::Tensor& nbr_feats,
                          const NeighborIndex& adj, AttentionTrace* trace = nullptr);

/// Relation-level attention: w_r = mean_i tanh(x_i W_r + b) . q, beta = softmax(w),
/// output sum_r beta_r x^r. Throws std::invalid_argument for an empty relation list.
ad::Tensor relation_fusion(const RelationFusion& fusion, const std::vector<ad::Tensor>& per_relation,
                           AttentionTrace* trace = nullptr);

struct EmbeddingTables {
    std::vector<ad::Tensor> table;       // per type: |V_t| x d_t
    std::vector<ad::Tensor> projection;  // per type: d_t x d
};

ad::Tensor project(const EmbeddingTables& tables, NodeRef node);
ad::Tensor project_all(const EmbeddingTables& tables, TypeId type);

/// A relation walked in one direction: sources of `src_type` attend over `nbr_type`.
struct RelationView {
    std::string name;
    TypeId src_type{};
    TypeId nbr_type{};
    NeighborIndex index;
};

/// Forward view for every relation plus a reverse view for non-symmetric ones.
std::vector<RelationView> relation_views(const HeteIN& g);

struct FullChannel {
    std::vector<std::vector<AttentionLayer>> layers;                // [layer][view]
    std::vector<std::vector<std::optional<RelationFusion>>> fusion;  // [layer][type]
};

/// Stacked node attention + relation fusion over every relation view.
std::vector<ad::Tensor> forward_full(const std::vector<RelationView>& views, const FullChannel& params,
                                     std::vector<ad::Tensor> inputs, AttentionTrace* trace = nullptr);

/// Single attention layer over a similarity graph (self-loops included).
ad::Tensor forward_metapath(const NeighborIndex& homograph, const AttentionLayer& layer, const ad::Tensor& feats,
                            AttentionTrace* trace = nullptr);

struct FusedEmbeddings {
    ad::Tensor users;    // |V_user| x out_dim
    ad::Tensor recipes;  // |V_item| x out_dim
};

double fuse_and_score(const FusedEmbeddings& emb, LocalId user, LocalId recipe);

struct MetapathChannel {
    std::string label;
    TypeId type{};
    SimilarityTable table;
    NeighborIndex index;
    AttentionLayer layer;
};

/// Full model: per-node embeddings and per-type projections, the full-graph
/// HGAT, one single-layer HGAT per metapath, and per-type output projections
/// of the concatenated channels to out_dim.
class RecipeMetaModel {
public:
    /// Similarity tables are computed from `train_graph` for every configured metapath.
    RecipeMetaModel(const HeteIN& train_graph, ModelConfig cfg);
    /// Uses precomputed tables (one per configured metapath, same order).
    RecipeMetaModel(const HeteIN& train_graph, ModelConfig cfg, std::vector<SimilarityTable> tables);

    const ModelConfig& config() const { return cfg_; }
    TypeId user_type() const { return user_type_; }
    TypeId recipe_type() const { return recipe_type_; }
    LocalId num_users() const { return counts_[index_of(user_type_)]; }
    LocalId num_recipes() const { return counts_[index_of(recipe_type_)]; }

    FusedEmbeddings forward(AttentionTrace* trace = nullptr) const;
    /// Final full-channel features per node type.
    std::vector<ad::Tensor> forward_full(AttentionTrace* trace = nullptr) const;
    std::vector<ad::Tensor> projected_inputs() const;

    std::vector<NamedTensor>& parameters() { return params_; }
    const std::vector<NamedTensor>& parameters() const { return params_; }
    ad::Tensor parameter(std::string_view name) const;
    std::vector<ad::Tensor> parameter_tensors() const;

    const std::vector<MetapathChannel>& channels() const { return channels_; }
    const std::vector<RelationView>& views() const { return views_; }
    const EmbeddingTables& embeddings() const { return embeddings_; }

private:
    void init(const HeteIN& g, std::vector<SimilarityTable> tables);

    ModelConfig cfg_;
    std::vector<LocalId> counts_;
    std::vector<std::string> type_names_;
    TypeId user_type_{};
    TypeId recipe_type_{};
    std::vector<RelationView> views_;
    EmbeddingTables embeddings_;
    FullChannel full_;
    std::vector<MetapathChannel> channels_;
    std::vector<ad::Tensor> output_projection_;  // indexed by type; undefined for unscored types
    std::vector<NamedTensor> params_;
};

}  // namespace recipemeta
