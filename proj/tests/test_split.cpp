#include "fixtures.hpp"

#include "recipemeta/split.hpp"
#include "recipemeta/synthetic.hpp"

#include <gtest/gtest.h>

#include <set>

using namespace recipemeta;

namespace {

HeteIN small_planted() {
    PlantedSpec s;
    s.users = 40;
    s.recipes = 60;
    s.ingredients = 20;
    s.interactions_per_user = 5;
    return make_planted_graph(s);
}

}  // namespace

TEST(Split, PartitionsTargetEdgesWithFloorSizes) {
    auto g = small_planted();
    auto split = split_target_edges(g, {});
    const auto n = g.num_edges(split.relation);
    ASSERT_EQ(n, 200u);
    EXPECT_EQ(split.val_edges.size(), 20u);
    EXPECT_EQ(split.test_edges.size(), 20u);
    EXPECT_EQ(split.train_edges.size(), 160u);

    std::set<EdgePair> all;
    for (const auto* fold : {&split.train_edges, &split.val_edges, &split.test_edges}) {
        for (auto e : *fold) EXPECT_TRUE(all.insert(e).second);
    }
    auto edges = g.edges(split.relation);
    EXPECT_EQ(all, std::set<EdgePair>(edges.begin(), edges.end()));
    EXPECT_EQ(split.train_graph.num_edges(split.relation), 160u);
}

TEST(Split, SameSeedSameSplitDifferentSeedDifferentSplit) {
    auto g = small_planted();
    auto a = split_target_edges(g, {});
    auto b = split_target_edges(g, {});
    EXPECT_EQ(a.test_edges, b.test_edges);
    SplitSpec other;
    other.seed = 43;
    EXPECT_NE(split_target_edges(g, other).test_edges, a.test_edges);
}

TEST(Split, ValidatesRatiosAndSize) {
    SplitSpec bad;
    bad.ratios = {0.8, 0.1, 0.2};
    EXPECT_THROW(bad.validate(), std::invalid_argument);
    EXPECT_THROW(split_target_edges(fixtures::two_recipe_graph(), {}), ValidationError);
}

TEST(Split, ManifestReplaysTheSameHoldout) {
    auto g = small_planted();
    auto split = split_target_edges(g, {});
    auto dir = fixtures::scratch_dir("split_manifest");
    write_split_manifest(dir / "split.jsonl", g, split);
    auto records = read_split_manifest(dir / "split.jsonl", g, split.relation);
    EXPECT_EQ(records.size(), 40u);
    auto again = holdout_from_records(g, split.relation, records);
    EXPECT_EQ(again.val_edges, split.val_edges);
    EXPECT_EQ(again.test_edges, split.test_edges);
    EXPECT_EQ(again.train_graph.edges(split.relation), split.train_graph.edges(split.relation));
}
