#include "recipemeta/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>
#include <unordered_set>

namespace recipemeta {

namespace {

struct StandardTypes {
    TypeId user, recipe, ingredient;
    RelationId ur, ri, rr, ii;
};

StandardTypes declare_types(HeteINBuilder& b, std::size_t users, std::size_t recipes, std::size_t ingredients,
                            auto&& key_of) {
    StandardTypes s{};
    s.user = b.add_type("User");
    s.recipe = b.add_type("Recipe");
    s.ingredient = b.add_type("Ingredient");
    for (std::size_t k = 0; k < users; ++k) b.add_node(s.user, "u" + std::to_string(k), key_of(s.user, k));
    for (std::size_t k = 0; k < recipes; ++k) b.add_node(s.recipe, "r" + std::to_string(k), key_of(s.recipe, k));
    for (std::size_t k = 0; k < ingredients; ++k) {
        b.add_node(s.ingredient, "i" + std::to_string(k), key_of(s.ingredient, k));
    }
    b.declare_standard_relations();
    s.ur = *b.find_relation("U-R");
    s.ri = *b.find_relation("R-I");
    s.rr = *b.find_relation("R-R");
    s.ii = *b.find_relation("I-I");
    return s;
}

}  // namespace

HeteIN make_planted_graph(const PlantedSpec& spec) {
    if (spec.users < 2 || spec.recipes < 2 || spec.ingredients < 2) {
        throw std::invalid_argument("planted graph needs at least two nodes of each type");
    }
    if (spec.interactions_per_user >= spec.recipes || spec.ingredients_per_recipe > spec.ingredients) {
        throw std::invalid_argument("planted graph: per-node degrees exceed the available nodes");
    }
    std::mt19937_64 rng(spec.seed);
    auto block = [](std::size_t k, std::size_t n) { return k < n / 2 ? 0 : 1; };
    const std::size_t counts[3] = {spec.users, spec.recipes, spec.ingredients};

    HeteINBuilder b;
    auto s = declare_types(b, spec.users, spec.recipes, spec.ingredients, [&](TypeId t, std::size_t k) {
        return "b" + std::to_string(block(k, counts[index_of(t)]));
    });

    // popularity ranks shuffled within each block
    std::vector<double> popularity(spec.recipes);
    for (int blk = 0; blk < 2; ++blk) {
        std::vector<std::size_t> members;
        for (std::size_t r = 0; r < spec.recipes; ++r) {
            if (block(r, spec.recipes) == blk) members.push_back(r);
        }
        std::shuffle(members.begin(), members.end(), rng);
        for (std::size_t rank = 0; rank < members.size(); ++rank) {
            popularity[members[rank]] = 1.0 / std::pow(static_cast<double>(rank + 1), spec.popularity_exponent);
        }
    }

    std::vector<double> weights(spec.recipes);
    for (std::size_t u = 0; u < spec.users; ++u) {
        const int ub = block(u, spec.users);
        for (std::size_t r = 0; r < spec.recipes; ++r) {
            weights[r] = popularity[r] * (block(r, spec.recipes) == ub ? spec.in_block_affinity : 1.0);
        }
        std::unordered_set<std::size_t> chosen;
        while (chosen.size() < spec.interactions_per_user) {
            std::discrete_distribution<std::size_t> pick(weights.begin(), weights.end());
            const auto r = pick(rng);
            if (chosen.insert(r).second) {
                b.add_edge(s.ur, static_cast<LocalId>(u), static_cast<LocalId>(r));
                weights[r] = 0.0;
            }
        }
    }

    auto block_members = [&](std::size_t n, int blk) {
        std::vector<LocalId> out;
        for (std::size_t k = 0; k < n; ++k) {
            if (block(k, n) == blk) out.push_back(static_cast<LocalId>(k));
        }
        return out;
    };
    const std::vector<LocalId> ing_blocks[2] = {block_members(spec.ingredients, 0),
                                                block_members(spec.ingredients, 1)};
    const std::vector<LocalId> rec_blocks[2] = {block_members(spec.recipes, 0), block_members(spec.recipes, 1)};
    std::bernoulli_distribution in_block(spec.ingredient_in_block);

    for (std::size_t r = 0; r < spec.recipes; ++r) {
        const int rb = block(r, spec.recipes);
        std::unordered_set<LocalId> chosen;
        while (chosen.size() < spec.ingredients_per_recipe) {
            const auto& pool = ing_blocks[in_block(rng) ? rb : 1 - rb];
            std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
            const auto i = pool[pick(rng)];
            if (chosen.insert(i).second) b.add_edge(s.ri, static_cast<LocalId>(r), i);
        }
    }

    // similarity links stay inside a block; duplicates merge in the symmetric relation
    auto link_within = [&](RelationId rel, const std::vector<LocalId> (&blocks)[2], std::size_t links) {
        for (const auto& pool : blocks) {
            if (pool.size() < 2) continue;
            std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
            for (auto a : pool) {
                for (std::size_t k = 0; k < links; ++k) {
                    const auto c = pool[pick(rng)];
                    if (c != a) b.add_edge(rel, std::min(a, c), std::max(a, c));
                }
            }
        }
    };
    link_within(s.rr, rec_blocks, spec.recipe_links);
    link_within(s.ii, ing_blocks, spec.ingredient_links);
    return std::move(b).build();
}

HeteIN make_random_graph(std::size_t users, std::size_t recipes, std::size_t ingredients, double density,
                         std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::bernoulli_distribution edge(density);
    HeteINBuilder b;
    auto s = declare_types(b, users, recipes, ingredients, [](TypeId, std::size_t) { return std::string(); });
    for (LocalId u = 0; u < users; ++u) {
        for (LocalId r = 0; r < recipes; ++r) {
            if (edge(rng)) b.add_edge(s.ur, u, r);
        }
    }
    for (LocalId r = 0; r < recipes; ++r) {
        for (LocalId i = 0; i < ingredients; ++i) {
            if (edge(rng)) b.add_edge(s.ri, r, i);
        }
    }
    for (LocalId a = 0; a < recipes; ++a) {
        for (LocalId c = a + 1; c < recipes; ++c) {
            if (edge(rng)) b.add_edge(s.rr, a, c);
        }
    }
    for (LocalId a = 0; a < ingredients; ++a) {
        for (LocalId c = a + 1; c < ingredients; ++c) {
            if (edge(rng)) b.add_edge(s.ii, a, c);
        }
    }
    return std::move(b).build();
}

}  // namespace recipemeta
