#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace recipemeta {

enum class TypeId : std::uint16_t {};
enum class RelationId : std::uint16_t {};
using LocalId = std::uint32_t;

constexpr std::size_t index_of(TypeId t) { return static_cast<std::size_t>(t); }
constexpr std::size_t index_of(RelationId r) { return static_cast<std::size_t>(r); }

/// A node is addressed by its type and its dense index within that type.
struct NodeRef {
    TypeId type{};
    LocalId index = 0;

    friend bool operator==(const NodeRef&, const NodeRef&) = default;
};

struct NodeType {
    std::string name;
    char code = '?';  // single-letter code used in metapath labels
};

struct RelationType {
    std::string name;
    TypeId src_type{};
    TypeId dst_type{};
    bool symmetric = false;
};

struct EdgePair {
    LocalId src = 0;
    LocalId dst = 0;

    friend bool operator==(const EdgePair&, const EdgePair&) = default;
    friend auto operator<=>(const EdgePair&, const EdgePair&) = default;
};

class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& file, std::size_t line, const std::string& what);
    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

class ValidationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Compressed sparse rows over local ids. Columns are sorted and unique per row.
struct Csr {
    std::vector<std::uint64_t> row_ptr{0};
    std::vector<LocalId> cols;
    std::vector<double> weights;

    std::size_t rows() const { return row_ptr.size() - 1; }
    std::size_t nnz() const { return cols.size(); }
    std::span<const LocalId> row(LocalId r) const {
        return {cols.data() + row_ptr[r], cols.data() + row_ptr[r + 1]};
    }
    std::span<const double> row_weights(LocalId r) const {
        return {weights.data() + row_ptr[r], weights.data() + row_ptr[r + 1]};
    }

    static Csr from_edges(std::size_t rows, std::vector<std::pair<EdgePair, double>> edges);
};

/// Heterogeneous information network: typed nodes with per-type dense ids,
/// and per-relation CSR adjacency in both directions. Immutable once built.
class HeteIN {
public:
    std::size_t num_types() const { return types_.size(); }
    const NodeType& type(TypeId t) const { return types_.at(index_of(t)); }
    std::optional<TypeId> find_type(std::string_view name) const;
    TypeId type_named(std::string_view name) const;
    TypeId type_with_code(char code) const;

    LocalId num_nodes(TypeId t) const { return static_cast<LocalId>(node_ids_.at(index_of(t)).size()); }
    std::size_t total_nodes() const;
    const std::string& node_id(NodeRef n) const { return node_ids_.at(index_of(n.type)).at(n.index); }
    const std::string& external_key(NodeRef n) const { return external_keys_.at(index_of(n.type)).at(n.index); }
    std::optional<NodeRef> find_node(std::string_view id) const;

    std::size_t num_relations() const { return relations_.size(); }
    const RelationType& relation(RelationId r) const { return relations_.at(index_of(r)); }
    std::optional<RelationId> find_relation(std::string_view name) const;
    RelationId relation_named(std::string_view name) const;
    /// First relation joining the two types in either orientation.
    std::optional<RelationId> relation_between(TypeId a, TypeId b) const;

    /// src -> dst adjacency.
    const Csr& forward(RelationId r) const { return forward_.at(index_of(r)); }
    /// dst -> src adjacency; identical to forward() for symmetric relations.
    const Csr& reverse(RelationId r) const { return reverse_.at(index_of(r)); }

    std::span<const LocalId> neighbors(NodeRef node, RelationId rel) const;

    /// Distinct edges; symmetric relations count each unordered pair once.
    std::size_t num_edges(RelationId r) const;
    /// Canonical edge list (symmetric relations report src <= dst only).
    std::vector<EdgePair> edges(RelationId r) const;

    /// Copy of this graph with the listed edges of one relation removed.
    HeteIN without_edges(RelationId r, std::span<const EdgePair> removed) const;

    /// Identical node tables with one node type relabelled; `perm[old] = new`.
    HeteIN permuted(TypeId t, std::span<const LocalId> perm) const;

private:
    friend class HeteINBuilder;

    std::vector<NodeType> types_;
    std::vector<std::vector<std::string>> node_ids_;
    std::vector<std::vector<std::string>> external_keys_;
    std::unordered_map<std::string, NodeRef> id_index_;
    std::vector<RelationType> relations_;
    std::vector<Csr> forward_;
    std::vector<Csr> reverse_;
};

/// Incremental construction of a HeteIN. build() validates every invariant.
class HeteINBuilder {
public:
    TypeId add_type(std::string name);
    NodeRef add_node(TypeId t, std::string id, std::string external_key = {});
    RelationId add_relation(std::string name, TypeId src, TypeId dst, bool symmetric);
    void add_edge(RelationId r, LocalId src, LocalId dst, double weight = 1.0);

    std::optional<TypeId> find_type(std::string_view name) const;
    std::optional<RelationId> find_relation(std::string_view name) const;
    const RelationType& relation(RelationId r) const { return relations_.at(index_of(r)); }
    std::optional<NodeRef> find_node(std::string_view id) const;

    /// Declares U-R, R-I, R-R and I-I for whichever standard types exist.
    void declare_standard_relations();

    HeteIN build() &&;

private:
    struct PendingEdge {
        EdgePair edge;
        double weight;
    };

    std::vector<NodeType> types_;
    std::vector<std::vector<std::string>> node_ids_;
    std::vector<std::vector<std::string>> external_keys_;
    std::unordered_map<std::string, NodeRef> id_index_;
    std::vector<RelationType> relations_;
    std::vector<std::vector<PendingEdge>> edges_;
};

/// Reads nodes.tsv (`node_id  type  external_key`, header required) and
/// edges.tsv (`relation  src_id  dst_id  [weight]`, header optional).
HeteIN load_hetein(const std::filesystem::path& nodes_file, const std::filesystem::path& edges_file);

void write_hetein(const HeteIN& g, const std::filesystem::path& nodes_file, const std::filesystem::path& edges_file);

}  // namespace recipemeta
