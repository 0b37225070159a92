#pragma once

#include "recipemeta/count_matrix.hpp"
#include "recipemeta/hetein.hpp"

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace recipemeta {

class SchemaError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct MetapathStep {
    RelationId relation{};
    bool reversed = false;  // walk the relation dst -> src
};

/// Ordered node-type sequence t0 -> ... -> tl with the relation used for each hop.
struct Metapath {
    std::vector<TypeId> types;
    std::vector<MetapathStep> steps;
    std::string label;

    TypeId source_type() const { return types.front(); }
    TypeId target_type() const { return types.back(); }
    std::size_t length() const { return steps.size(); }
    /// Reads the same reversed (types and relations).
    bool is_symmetric() const;
};

/// Parses a dash-separated label of type codes, e.g. "U-R-I-R-U".
Metapath parse_metapath(const HeteIN& g, std::string_view label);

/// Builds a metapath from an explicit type sequence (each hop must be unambiguous).
Metapath make_metapath(const HeteIN& g, const std::vector<TypeId>& types);

struct PathCountMatrix {
    Metapath metapath;
    CountMatrix counts;
};

/// Exact path-instance counts: the chained product of the hop adjacency matrices.
PathCountMatrix count_paths(const HeteIN& g, const Metapath& p);

/// 2 c(x,y) / (c(x,x) + c(y,y)); 1 when x == y, 0 when the denominator vanishes.
double pathsim(const PathCountMatrix& counts, LocalId x, LocalId y);

struct SimilarNode {
    LocalId id = 0;
    double score = 0.0;

    friend bool operator==(const SimilarNode&, const SimilarNode&) = default;
};

struct SimilarityTable {
    std::string metapath;
    TypeId node_type{};
    std::size_t m = 0;
    std::vector<std::vector<SimilarNode>> rows;  // one per node of node_type
};

/// Up to m most PathSim-similar distinct nodes per source with positive score,
/// sorted by score descending then id ascending.
SimilarityTable top_m_similar(const HeteIN& g, const Metapath& p, std::size_t m);

/// Single-type graph: each node points at itself and at its table row, columns sorted.
struct HomoGraph {
    TypeId node_type{};
    Csr adjacency;
};

HomoGraph build_homograph(const SimilarityTable& table);

/// JSON-lines: {"metapath", "src", "neighbors": [{"id", "score"}]} with node ids
/// as strings and scores at 17 significant digits.
void write_similarity_table(const std::filesystem::path& path, const HeteIN& g, const SimilarityTable& table);
SimilarityTable read_similarity_table(const std::filesystem::path& path, const HeteIN& g);

}  // namespace recipemeta
