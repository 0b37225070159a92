#pragma once

#include "recipemeta/hetein.hpp"

#include <cstdint>

namespace recipemeta {

/// Two-block recipe network. Users and recipes are split evenly into two
/// blocks; a user's affinity for a same-block recipe is `in_block_affinity`
/// times that for an other-block recipe, scaled by a Zipf popularity
/// 1 / rank^popularity_exponent (ranks shuffled within each block).
struct PlantedSpec {
    std::size_t users = 500;
    std::size_t recipes = 1000;
    std::size_t ingredients = 200;
    std::size_t interactions_per_user = 20;
    double in_block_affinity = 10.0;
    double popularity_exponent = 1.0;
    std::size_t ingredients_per_recipe = 5;
    double ingredient_in_block = 0.8;
    std::size_t recipe_links = 2;
    std::size_t ingredient_links = 2;
    std::uint64_t seed = 2024;
};

/// Node ids are u<k>, r<k>, i<k>; external keys carry the block ("b0"/"b1").
HeteIN make_planted_graph(const PlantedSpec& spec);

/// Uniformly random User/Recipe/Ingredient graph with the four standard
/// relations; every relation edge is present independently with probability `density`.
HeteIN make_random_graph(std::size_t users, std::size_t recipes, std::size_t ingredients, double density,
                         std::uint64_t seed);

}  // namespace recipemeta
