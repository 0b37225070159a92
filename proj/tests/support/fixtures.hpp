#pragma once

#include "recipemeta/hetein.hpp"
#include "recipemeta/metapath.hpp"

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

namespace fixtures {

using namespace recipemeta;

/// Users u1..u4 and recipes A, B; A is linked to u1, u2 and B to u2, u3, u4.
HeteIN two_recipe_graph();

/// User/Recipe/Ingredient graph with at most `max_nodes` nodes in total, at
/// least one of each type, and random per-relation edge densities.
HeteIN random_small_graph(std::mt19937_64& rng, std::size_t max_nodes);

/// Every palindromic type sequence of 2..max_len+1 codes whose neighbours are joined by a relation.
std::vector<std::string> symmetric_metapath_labels(const HeteIN& g, std::size_t max_len);

/// Path counts by explicit depth-first enumeration over edge lists.
std::vector<std::vector<std::uint64_t>> dfs_path_counts(const HeteIN& g, const Metapath& p);

/// Fresh empty directory under the system temp dir.
std::filesystem::path scratch_dir(const std::string& name);

}  // namespace fixtures
