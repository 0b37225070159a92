#include "fixtures.hpp"

#include "recipemeta/model.hpp"
#include "recipemeta/synthetic.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

using namespace recipemeta;
using ad::Tensor;

namespace {

using Mat = std::vector<std::vector<double>>;

Mat to_mat(const Tensor& t) {
    Mat m(t.rows(), std::vector<double>(t.cols()));
    for (std::size_t i = 0; i < t.rows(); ++i)
        for (std::size_t j = 0; j < t.cols(); ++j) m[i][j] = t.at(i, j);
    return m;
}

Mat mat_mul(const Mat& a, const Mat& b) {
    Mat c(a.size(), std::vector<double>(b[0].size(), 0.0));
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t k = 0; k < b.size(); ++k)
            for (std::size_t j = 0; j < b[0].size(); ++j) c[i][j] += a[i][k] * b[k][j];
    return c;
}

Tensor random_tensor(std::mt19937_64& rng, std::size_t r, std::size_t c) {
    std::normal_distribution<double> n(0.0, 0.5);
    std::vector<double> v(r * c);
    for (auto& x : v) x = n(rng);
    return Tensor({r, c}, v, true);
}

AttentionLayer random_layer(std::mt19937_64& rng, std::size_t d, std::size_t heads, std::size_t h) {
    AttentionLayer layer;
    for (std::size_t m = 0; m < heads; ++m) {
        layer.heads.push_back({random_tensor(rng, d, h), random_tensor(rng, 2 * h, h), random_tensor(rng, d, h)});
    }
    return layer;
}

// Dense per-node evaluation: for each i, e_ij[c] = (z_i || z_j) . W_ij[:, c],
// alpha = softmax over j per channel c, out_i = relu(sum_j alpha_ij z_j + sum_j W^T (x_i * x_j)).
Mat attention_oracle(const AttentionLayer& layer, const Tensor& xs, const Tensor& xn,
                     const std::vector<std::vector<LocalId>>& nbrs) {
    const auto X = to_mat(xs);
    const auto Y = to_mat(xn);
    Mat out(X.size());
    for (const auto& head : layer.heads) {
        const auto Wn = to_mat(head.w_node);
        const auto Ws = to_mat(head.w_score);
        const auto Wp = to_mat(head.w_pair);
        const auto h = Wn[0].size();
        const auto Zs = mat_mul(X, Wn);
        const auto Zn = mat_mul(Y, Wn);
        for (std::size_t i = 0; i < X.size(); ++i) {
            std::vector<double> res(h, 0.0);
            const auto& nb = nbrs[i];
            if (!nb.empty()) {
                for (std::size_t c = 0; c < h; ++c) {
                    std::vector<double> e;
                    for (auto j : nb) {
                        double v = 0;
                        for (std::size_t k = 0; k < h; ++k) v += Zs[i][k] * Ws[k][c] + Zn[j][k] * Ws[h + k][c];
                        e.push_back(v);
                    }
                    double mx = *std::max_element(e.begin(), e.end()), z = 0;
                    for (auto& v : e) z += std::exp(v - mx);
                    for (std::size_t q = 0; q < nb.size(); ++q) res[c] += std::exp(e[q] - mx) / z * Zn[nb[q]][c];
                }
                for (auto j : nb) {
                    for (std::size_t c = 0; c < h; ++c)
                        for (std::size_t k = 0; k < X[i].size(); ++k) res[c] += Wp[k][c] * X[i][k] * Y[j][k];
                }
            }
            for (auto v : res) out[i].push_back(std::max(0.0, v));
        }
    }
    return out;
}

NeighborIndex index_from_lists(const std::vector<std::vector<LocalId>>& nbrs) {
    std::vector<std::pair<EdgePair, double>> edges;
    for (LocalId i = 0; i < nbrs.size(); ++i)
        for (auto j : nbrs[i]) edges.push_back({{i, j}, 1.0});
    return NeighborIndex::from_csr(Csr::from_edges(nbrs.size(), edges));
}

ModelConfig small_config() {
    ModelConfig cfg;
    cfg.embed_dim = 8;
    cfg.heads = 2;
    cfg.layers = 2;
    cfg.out_dim = 6;
    cfg.top_m = 3;
    return cfg;
}

}  // namespace

TEST(NodeAttention, MatchesDenseOracle) {
    std::mt19937_64 rng(17);
    const std::size_t d = 6, heads = 3, h = 2;
    std::vector<std::vector<LocalId>> nbrs{{0, 2, 3}, {}, {1}, {0, 1, 2, 3, 4}};
    auto xs = random_tensor(rng, 4, d);
    auto xn = random_tensor(rng, 5, d);
    auto layer = random_layer(rng, d, heads, h);
    auto out = node_attention(layer, xs, xn, index_from_lists(nbrs));
    auto oracle = attention_oracle(layer, xs, xn, nbrs);
    ASSERT_EQ(out.shape(), (ad::Shape{4, heads * h}));
    for (std::size_t i = 0; i < 4; ++i)
        for (std::size_t c = 0; c < heads * h; ++c) EXPECT_NEAR(out.at(i, c), oracle[i][c], 1e-12);
}

TEST(NodeAttention, AlphaRowsAreNormalizedPerChannel) {
    std::mt19937_64 rng(3);
    std::vector<std::vector<LocalId>> nbrs{{0, 1}, {2}, {}, {0, 1, 2}};
    auto idx = index_from_lists(nbrs);
    auto layer = random_layer(rng, 4, 2, 2);
    AttentionTrace trace;
    node_attention(layer, random_tensor(rng, 4, 4), random_tensor(rng, 3, 4), idx, &trace);
    ASSERT_EQ(trace.node_level.size(), 1u);
    for (const auto& alpha : trace.node_level[0].alpha) {
        for (std::size_t i = 0; i < nbrs.size(); ++i) {
            if (nbrs[i].empty()) continue;
            for (std::size_t c = 0; c < alpha.cols(); ++c) {
                double s = 0;
                for (auto k = idx.offsets[i]; k < idx.offsets[i + 1]; ++k) s += alpha.at(k, c);
                EXPECT_NEAR(s, 1.0, 1e-12);
            }
        }
    }
}

TEST(RelationFusion, MatchesDenseOracleAndBetaSumsToOne) {
    std::mt19937_64 rng(5);
    const std::size_t n = 5, d = 4;
    RelationFusion f{{random_tensor(rng, d, d), random_tensor(rng, d, d), random_tensor(rng, d, d)},
                     random_tensor(rng, 1, d), random_tensor(rng, 1, d)};
    std::vector<Tensor> xs{random_tensor(rng, n, d), random_tensor(rng, n, d), random_tensor(rng, n, d)};
    AttentionTrace trace;
    auto out = relation_fusion(f, xs, &trace);

    std::vector<double> w;
    for (std::size_t r = 0; r < 3; ++r) {
        auto hid = mat_mul(to_mat(xs[r]), to_mat(f.w_rel[r]));
        double total = 0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t k = 0; k < d; ++k) total += std::tanh(hid[i][k] + f.bias.at(0, k)) * f.query.at(0, k);
        w.push_back(total / n);
    }
    double z = 0;
    for (auto v : w) z += std::exp(v);
    ASSERT_EQ(trace.relation_level.size(), 1u);
    double sum_beta = 0;
    for (std::size_t r = 0; r < 3; ++r) {
        EXPECT_NEAR(trace.relation_level[0][r], std::exp(w[r]) / z, 1e-12);
        sum_beta += trace.relation_level[0][r];
    }
    EXPECT_NEAR(sum_beta, 1.0, 1e-12);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t k = 0; k < d; ++k) {
            double expect = 0;
            for (std::size_t r = 0; r < 3; ++r) expect += std::exp(w[r]) / z * xs[r].at(i, k);
            EXPECT_NEAR(out.at(i, k), expect, 1e-12);
        }
    EXPECT_THROW(relation_fusion(f, {}, nullptr), std::invalid_argument);
}

TEST(Model, ParametersFollowTheConfiguredVariant) {
    std::mt19937_64 rng(9);
    auto g = fixtures::random_small_graph(rng, 45);
    auto cfg = small_config();
    RecipeMetaModel full(g, cfg);
    EXPECT_EQ(full.channels().size(), 3u);
    EXPECT_EQ(full.views().size(), 6u);  // U-R, U-R:rev, R-I, R-I:rev, R-R, I-I
    auto emb = full.forward();
    EXPECT_EQ(emb.users.shape(), (ad::Shape{full.num_users(), 6}));
    EXPECT_EQ(emb.recipes.shape(), (ad::Shape{full.num_recipes(), 6}));
    EXPECT_EQ(full.parameter("out.User").shape(), (ad::Shape{16, 6}));   // full + U-R-U
    EXPECT_EQ(full.parameter("out.Recipe").shape(), (ad::Shape{24, 6}));  // full + R-U-R + R-I-R

    cfg.variant = Variant::hgat_only;
    RecipeMetaModel hgat(g, cfg);
    EXPECT_TRUE(hgat.channels().empty());
    EXPECT_EQ(hgat.parameter("out.User").shape(), (ad::Shape{8, 6}));

    cfg.variant = Variant::metapath_only;
    RecipeMetaModel meta(g, cfg);
    EXPECT_THROW(meta.forward_full(), std::logic_error);
    EXPECT_THROW(meta.parameter("full.l0.U-R.h0.w_node"), std::out_of_range);
    EXPECT_EQ(meta.forward().users.cols(), 6u);

    cfg.variant = Variant::full;
    cfg.metapaths = {"U-R-U", "I-R-I"};
    RecipeMetaModel with_iri(g, cfg);
    AttentionTrace trace;
    with_iri.forward(&trace);
    EXPECT_EQ(with_iri.parameter("out.Recipe").shape(), (ad::Shape{8, 6}));
}

TEST(Model, SameSeedSameParameters) {
    std::mt19937_64 rng(9);
    auto g = fixtures::random_small_graph(rng, 45);
    RecipeMetaModel a(g, small_config());
    RecipeMetaModel b(g, small_config());
    ASSERT_EQ(a.parameters().size(), b.parameters().size());
    for (std::size_t i = 0; i < a.parameters().size(); ++i) {
        EXPECT_EQ(a.parameters()[i].name, b.parameters()[i].name);
        auto x = a.parameters()[i].tensor.data();
        auto y = b.parameters()[i].tensor.data();
        EXPECT_TRUE(std::equal(x.begin(), x.end(), y.begin(), y.end()));
    }
}

TEST(Model, RejectsBadConfigs) {
    auto g = fixtures::two_recipe_graph();
    auto cfg = small_config();
    cfg.heads = 3;
    EXPECT_THROW(cfg.validate(), std::invalid_argument);
    cfg = small_config();
    cfg.metapaths = {"X-Y-X"};
    EXPECT_THROW(RecipeMetaModel(g, cfg), SchemaError);
    cfg.metapaths = {"U-R"};
    EXPECT_THROW(RecipeMetaModel(g, cfg), SchemaError);
    EXPECT_THROW(parse_variant("both"), std::invalid_argument);
}

TEST(Model, ConfigJsonRoundTrip) {
    auto cfg = small_config();
    cfg.variant = Variant::metapath_only;
    cfg.metapaths = {"R-I-R"};
    auto back = model_config_from_json(nlohmann::json::parse(to_json(cfg).dump()));
    EXPECT_EQ(to_json(back), to_json(cfg));
}

TEST(Model, FullChannelIsEquivariantUnderRelabelling) {
    std::mt19937_64 rng(21);
    auto g = fixtures::random_small_graph(rng, 45);
    auto cfg = small_config();
    RecipeMetaModel base(g, cfg);
    auto recipe = g.type_named("Recipe");
    std::vector<LocalId> perm(g.num_nodes(recipe));
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    auto h = g.permuted(recipe, perm);
    RecipeMetaModel moved(h, cfg);
    // carry parameters over, moving the recipe embedding rows with their nodes
    for (std::size_t i = 0; i < base.parameters().size(); ++i) {
        const auto& src = base.parameters()[i];
        auto dst = moved.parameters()[i].tensor.mutable_data();
        auto from = src.tensor.data();
        if (src.name == "embed.Recipe") {
            const auto cols = src.tensor.cols();
            for (LocalId r = 0; r < perm.size(); ++r)
                std::copy_n(from.begin() + r * cols, cols, dst.begin() + perm[r] * cols);
        } else {
            std::copy(from.begin(), from.end(), dst.begin());
        }
    }
    auto a = base.forward_full();
    auto b = moved.forward_full();
    for (std::size_t t = 0; t < a.size(); ++t) {
        for (LocalId i = 0; i < a[t].rows(); ++i) {
            const LocalId j = TypeId(t) == recipe ? perm[i] : i;
            for (std::size_t c = 0; c < a[t].cols(); ++c) EXPECT_NEAR(a[t].at(i, c), b[t].at(j, c), 1e-10);
        }
    }
}
