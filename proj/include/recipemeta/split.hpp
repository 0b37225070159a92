#pragma once

#include "recipemeta/hetein.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace recipemeta {

struct SplitSpec {
    std::array<double, 3> ratios{0.8, 0.1, 0.1};  // train / val / test
    std::uint64_t seed = 42;
    std::string target_relation = "U-R";

    void validate() const;
};

/// Held-out folds of the target relation plus the graph with them removed.
struct EdgeHoldout {
    HeteIN train_graph;
    RelationId relation{};
    std::vector<EdgePair> train_edges;
    std::vector<EdgePair> val_edges;
    std::vector<EdgePair> test_edges;
};

/// Seeded random partition of the target relation. Validation and test sizes
/// are floor(ratio * n); the remainder goes to training.
EdgeHoldout split_target_edges(const HeteIN& g, const SplitSpec& spec);

enum class Fold { val, test };

struct HeldOutRecord {
    EdgePair edge;
    Fold fold;
};

/// JSON-lines, one {"user", "recipe", "fold"} record per held-out edge, node ids as strings.
void write_split_manifest(const std::filesystem::path& path, const HeteIN& g, const EdgeHoldout& split);
std::vector<HeldOutRecord> read_split_manifest(const std::filesystem::path& path, const HeteIN& g,
                                               RelationId relation);

/// Rebuilds the holdout from a manifest (train graph = g minus every listed edge).
EdgeHoldout holdout_from_records(const HeteIN& g, RelationId relation, const std::vector<HeldOutRecord>& records);

}  // namespace recipemeta
