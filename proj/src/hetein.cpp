#include "recipemeta/hetein.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>

namespace recipemeta {

namespace {

char code_for(const std::string& name) {
    if (name.empty()) {
        throw ValidationError("node type name must not be empty");
    }
    return static_cast<char>(std::toupper(static_cast<unsigned char>(name.front())));
}

std::vector<std::string_view> split_tabs(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        auto pos = line.find('\t', start);
        if (pos == std::string_view::npos) {
            out.push_back(line.substr(start));
            break;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    return out;
}

std::string describe(const HeteIN& g, RelationId r) {
    const auto& rel = g.relation(r);
    return rel.name + " (" + g.type(rel.src_type).name + "->" + g.type(rel.dst_type).name + ")";
}

}  // namespace

ParseError::ParseError(const std::string& file, std::size_t line, const std::string& what)
    : std::runtime_error(file + ":" + std::to_string(line) + ": " + what), line_(line) {}

Csr Csr::from_edges(std::size_t rows, std::vector<std::pair<EdgePair, double>> edges) {
    std::sort(edges.begin(), edges.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    Csr csr;
    csr.row_ptr.assign(rows + 1, 0);
    csr.cols.reserve(edges.size());
    csr.weights.reserve(edges.size());
    for (const auto& [e, w] : edges) {
        csr.row_ptr[e.src + 1]++;
        csr.cols.push_back(e.dst);
        csr.weights.push_back(w);
    }
    for (std::size_t i = 0; i < rows; ++i) {
        csr.row_ptr[i + 1] += csr.row_ptr[i];
    }
    return csr;
}

// ---------------------------------------------------------------------------
// HeteIN

std::optional<TypeId> HeteIN::find_type(std::string_view name) const {
    for (std::size_t i = 0; i < types_.size(); ++i) {
        if (types_[i].name == name) return TypeId(i);
    }
    return std::nullopt;
}

TypeId HeteIN::type_named(std::string_view name) const {
    if (auto t = find_type(name)) return *t;
    throw ValidationError("unknown node type '" + std::string(name) + "'");
}

TypeId HeteIN::type_with_code(char code) const {
    for (std::size_t i = 0; i < types_.size(); ++i) {
        if (types_[i].code == code) return TypeId(i);
    }
    throw ValidationError(std::string("unknown node type code '") + code + "'");
}

std::size_t HeteIN::total_nodes() const {
    std::size_t n = 0;
    for (const auto& ids : node_ids_) n += ids.size();
    return n;
}

std::optional<NodeRef> HeteIN::find_node(std::string_view id) const {
    auto it = id_index_.find(std::string(id));
    if (it == id_index_.end()) return std::nullopt;
    return it->second;
}

std::optional<RelationId> HeteIN::find_relation(std::string_view name) const {
    for (std::size_t i = 0; i < relations_.size(); ++i) {
        if (relations_[i].name == name) return RelationId(i);
    }
    return std::nullopt;
}

RelationId HeteIN::relation_named(std::string_view name) const {
    if (auto r = find_relation(name)) return *r;
    throw ValidationError("unknown relation '" + std::string(name) + "'");
}

std::optional<RelationId> HeteIN::relation_between(TypeId a, TypeId b) const {
    for (std::size_t i = 0; i < relations_.size(); ++i) {
        const auto& rel = relations_[i];
        if ((rel.src_type == a && rel.dst_type == b) || (rel.src_type == b && rel.dst_type == a)) {
            return RelationId(i);
        }
    }
    return std::nullopt;
}

std::span<const LocalId> HeteIN::neighbors(NodeRef node, RelationId rel) const {
    const auto& r = relation(rel);
    if (node.type != r.src_type) {
        throw ValidationError("type mismatch: node of type " + type(node.type).name +
                              " queried on relation " + describe(*this, rel));
    }
    if (node.index >= num_nodes(node.type)) {
        throw ValidationError("node index " + std::to_string(node.index) + " out of range for type " +
                              type(node.type).name);
    }
    return forward(rel).row(node.index);
}

std::size_t HeteIN::num_edges(RelationId r) const {
    const auto& rel = relation(r);
    const auto& fwd = forward(r);
    if (!rel.symmetric) return fwd.nnz();
    std::size_t loops = 0;
    for (LocalId i = 0; i < fwd.rows(); ++i) {
        auto row = fwd.row(i);
        if (std::binary_search(row.begin(), row.end(), i)) ++loops;
    }
    return (fwd.nnz() - loops) / 2 + loops;
}

std::vector<EdgePair> HeteIN::edges(RelationId r) const {
    const auto& rel = relation(r);
    const auto& fwd = forward(r);
    std::vector<EdgePair> out;
    out.reserve(fwd.nnz());
    for (LocalId i = 0; i < fwd.rows(); ++i) {
        for (LocalId j : fwd.row(i)) {
            if (rel.symmetric && j < i) continue;
            out.push_back({i, j});
        }
    }
    return out;
}

HeteIN HeteIN::without_edges(RelationId r, std::span<const EdgePair> removed) const {
    std::vector<EdgePair> drop(removed.begin(), removed.end());
    const auto& rel = relation(r);
    if (rel.symmetric) {
        for (auto& e : drop) {
            if (e.dst < e.src) std::swap(e.src, e.dst);
        }
    }
    std::sort(drop.begin(), drop.end());

    HeteIN out = *this;
    std::vector<std::pair<EdgePair, double>> kept;
    const auto& fwd = forward(r);
    for (LocalId i = 0; i < fwd.rows(); ++i) {
        auto row = fwd.row(i);
        auto w = fwd.row_weights(i);
        for (std::size_t k = 0; k < row.size(); ++k) {
            EdgePair e{i, row[k]};
            EdgePair canon = e;
            if (rel.symmetric && canon.dst < canon.src) std::swap(canon.src, canon.dst);
            if (std::binary_search(drop.begin(), drop.end(), canon)) continue;
            kept.push_back({e, w[k]});
        }
    }
    std::vector<std::pair<EdgePair, double>> flipped;
    flipped.reserve(kept.size());
    for (const auto& [e, w] : kept) flipped.push_back({{e.dst, e.src}, w});
    out.forward_[index_of(r)] = Csr::from_edges(num_nodes(rel.src_type), std::move(kept));
    out.reverse_[index_of(r)] = rel.symmetric ? out.forward_[index_of(r)]
                                              : Csr::from_edges(num_nodes(rel.dst_type), std::move(flipped));
    return out;
}

HeteIN HeteIN::permuted(TypeId t, std::span<const LocalId> perm) const {
    const auto n = num_nodes(t);
    if (perm.size() != n) {
        throw ValidationError("permutation size does not match node count");
    }
    HeteINBuilder b;
    for (const auto& type : types_) b.add_type(type.name);
    for (std::size_t ti = 0; ti < types_.size(); ++ti) {
        const auto count = node_ids_[ti].size();
        std::vector<LocalId> inverse(count);
        for (LocalId i = 0; i < count; ++i) {
            inverse[TypeId(ti) == t ? perm[i] : i] = i;
        }
        for (LocalId k = 0; k < count; ++k) {
            b.add_node(TypeId(ti), node_ids_[ti][inverse[k]], external_keys_[ti][inverse[k]]);
        }
    }
    auto map = [&](TypeId type, LocalId i) { return type == t ? perm[i] : i; };
    for (std::size_t ri = 0; ri < relations_.size(); ++ri) {
        const auto& rel = relations_[ri];
        auto id = b.add_relation(rel.name, rel.src_type, rel.dst_type, rel.symmetric);
        const auto& fwd = forward_[ri];
        for (LocalId i = 0; i < fwd.rows(); ++i) {
            auto row = fwd.row(i);
            auto w = fwd.row_weights(i);
            for (std::size_t k = 0; k < row.size(); ++k) {
                if (rel.symmetric && row[k] < i) continue;
                b.add_edge(id, map(rel.src_type, i), map(rel.dst_type, row[k]), w[k]);
            }
        }
    }
    return std::move(b).build();
}

// ---------------------------------------------------------------------------
// HeteINBuilder

TypeId HeteINBuilder::add_type(std::string name) {
    if (find_type(name)) {
        throw ValidationError("duplicate node type '" + name + "'");
    }
    char code = code_for(name);
    for (const auto& t : types_) {
        if (t.code == code) {
            throw ValidationError("node types '" + t.name + "' and '" + name + "' share the code '" +
                                  std::string(1, code) + "'");
        }
    }
    types_.push_back({std::move(name), code});
    node_ids_.emplace_back();
    external_keys_.emplace_back();
    return TypeId(types_.size() - 1);
}

NodeRef HeteINBuilder::add_node(TypeId t, std::string id, std::string external_key) {
    if (index_of(t) >= types_.size()) {
        throw ValidationError("unknown node type id " + std::to_string(index_of(t)));
    }
    auto& ids = node_ids_[index_of(t)];
    NodeRef ref{t, static_cast<LocalId>(ids.size())};
    auto [it, inserted] = id_index_.emplace(id, ref);
    if (!inserted) {
        throw ValidationError("duplicate node id '" + id + "'");
    }
    ids.push_back(std::move(id));
    external_keys_[index_of(t)].push_back(std::move(external_key));
    return ref;
}

RelationId HeteINBuilder::add_relation(std::string name, TypeId src, TypeId dst, bool symmetric) {
    if (find_relation(name)) {
        throw ValidationError("duplicate relation '" + name + "'");
    }
    if (index_of(src) >= types_.size() || index_of(dst) >= types_.size()) {
        throw ValidationError("relation '" + name + "' references an unknown node type");
    }
    if (symmetric && src != dst) {
        throw ValidationError("symmetric relation '" + name + "' must join a type to itself");
    }
    relations_.push_back({std::move(name), src, dst, symmetric});
    edges_.emplace_back();
    return RelationId(relations_.size() - 1);
}

void HeteINBuilder::add_edge(RelationId r, LocalId src, LocalId dst, double weight) {
    edges_.at(index_of(r)).push_back({{src, dst}, weight});
}

std::optional<TypeId> HeteINBuilder::find_type(std::string_view name) const {
    for (std::size_t i = 0; i < types_.size(); ++i) {
        if (types_[i].name == name) return TypeId(i);
    }
    return std::nullopt;
}

std::optional<RelationId> HeteINBuilder::find_relation(std::string_view name) const {
    for (std::size_t i = 0; i < relations_.size(); ++i) {
        if (relations_[i].name == name) return RelationId(i);
    }
    return std::nullopt;
}

std::optional<NodeRef> HeteINBuilder::find_node(std::string_view id) const {
    auto it = id_index_.find(std::string(id));
    if (it == id_index_.end()) return std::nullopt;
    return it->second;
}

void HeteINBuilder::declare_standard_relations() {
    auto user = find_type("User");
    auto recipe = find_type("Recipe");
    auto ingredient = find_type("Ingredient");
    auto declare = [&](const char* name, std::optional<TypeId> a, std::optional<TypeId> b, bool sym) {
        if (a && b && !find_relation(name)) add_relation(name, *a, *b, sym);
    };
    declare("U-R", user, recipe, false);
    declare("R-I", recipe, ingredient, false);
    declare("R-R", recipe, recipe, true);
    declare("I-I", ingredient, ingredient, true);
}

HeteIN HeteINBuilder::build() && {
    HeteIN g;
    g.types_ = std::move(types_);
    g.node_ids_ = std::move(node_ids_);
    g.external_keys_ = std::move(external_keys_);
    g.id_index_ = std::move(id_index_);
    g.relations_ = relations_;

    for (std::size_t ri = 0; ri < relations_.size(); ++ri) {
        const auto& rel = relations_[ri];
        const auto n_src = g.num_nodes(rel.src_type);
        const auto n_dst = g.num_nodes(rel.dst_type);
        std::vector<std::pair<EdgePair, double>> fwd;
        std::vector<std::pair<EdgePair, double>> rev;
        for (const auto& [e, w] : edges_[ri]) {
            if (e.src >= n_src || e.dst >= n_dst) {
                throw ValidationError("dangling endpoint in relation " + rel.name + ": edge (" +
                                      std::to_string(e.src) + ", " + std::to_string(e.dst) + ")");
            }
            fwd.push_back({e, w});
            if (rel.symmetric) {
                if (e.src != e.dst) fwd.push_back({{e.dst, e.src}, w});
            } else {
                rev.push_back({{e.dst, e.src}, w});
            }
        }
        // symmetric relations may list both orientations of a pair; they merge.
        std::sort(fwd.begin(), fwd.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
        std::vector<std::pair<EdgePair, double>> unique;
        unique.reserve(fwd.size());
        for (std::size_t k = 0; k < fwd.size(); ++k) {
            if (!unique.empty() && unique.back().first == fwd[k].first) {
                if (!rel.symmetric) {
                    throw ValidationError("duplicate edge in relation " + rel.name + ": (" +
                                          std::to_string(fwd[k].first.src) + ", " +
                                          std::to_string(fwd[k].first.dst) + ")");
                }
                continue;
            }
            unique.push_back(fwd[k]);
        }
        g.forward_.push_back(Csr::from_edges(n_src, std::move(unique)));
        if (rel.symmetric) {
            g.reverse_.push_back(g.forward_.back());
        } else {
            g.reverse_.push_back(Csr::from_edges(n_dst, std::move(rev)));
        }
    }
    return g;
}

// ---------------------------------------------------------------------------
// TSV I/O

HeteIN load_hetein(const std::filesystem::path& nodes_file, const std::filesystem::path& edges_file) {
    HeteINBuilder b;

    std::ifstream nodes(nodes_file);
    if (!nodes) throw std::runtime_error("cannot open " + nodes_file.string());
    std::string line;
    std::size_t lineno = 0;
    const auto nodes_name = nodes_file.string();
    if (!std::getline(nodes, line)) {
        throw ParseError(nodes_name, 1, "missing header row");
    }
    ++lineno;
    if (split_tabs(line).size() != 3) {
        throw ParseError(nodes_name, lineno, "header must have 3 columns: node_id, type, external_key");
    }
    while (std::getline(nodes, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto cols = split_tabs(line);
        if (cols.size() != 3 || cols[0].empty() || cols[1].empty()) {
            throw ParseError(nodes_name, lineno, "expected node_id<TAB>type<TAB>external_key");
        }
        auto t = b.find_type(cols[1]);
        if (!t) t = b.add_type(std::string(cols[1]));
        try {
            b.add_node(*t, std::string(cols[0]), std::string(cols[2]));
        } catch (const ValidationError& e) {
            throw ValidationError(nodes_name + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
    b.declare_standard_relations();

    std::ifstream edges(edges_file);
    if (!edges) throw std::runtime_error("cannot open " + edges_file.string());
    const auto edges_name = edges_file.string();
    lineno = 0;
    while (std::getline(edges, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto cols = split_tabs(line);
        if (lineno == 1 && cols[0] == "relation") continue;
        if (cols.size() < 3 || cols.size() > 4) {
            throw ParseError(edges_name, lineno, "expected relation<TAB>src_id<TAB>dst_id[<TAB>weight]");
        }
        double weight = 1.0;
        if (cols.size() == 4 && !cols[3].empty()) {
            auto s = cols[3];
            auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), weight);
            if (ec != std::errc() || ptr != s.data() + s.size()) {
                throw ParseError(edges_name, lineno, "malformed weight '" + std::string(s) + "'");
            }
        }
        auto src = b.find_node(cols[1]);
        auto dst = b.find_node(cols[2]);
        if (!src || !dst) {
            throw ValidationError(edges_name + ":" + std::to_string(lineno) + ": dangling endpoint: edge " +
                                  std::string(cols[0]) + " references unknown node '" +
                                  std::string(!src ? cols[1] : cols[2]) + "'");
        }
        auto rel = b.find_relation(cols[0]);
        if (!rel) rel = b.add_relation(std::string(cols[0]), src->type, dst->type, src->type == dst->type);
        const auto& spec = b.relation(*rel);
        if (spec.src_type != src->type || spec.dst_type != dst->type) {
            throw ValidationError(edges_name + ":" + std::to_string(lineno) + ": edge endpoints do not match the " +
                                  "declared types of relation " + spec.name);
        }
        b.add_edge(*rel, src->index, dst->index, weight);
    }
    return std::move(b).build();
}

void write_hetein(const HeteIN& g, const std::filesystem::path& nodes_file, const std::filesystem::path& edges_file) {
    std::ofstream nodes(nodes_file);
    if (!nodes) throw std::runtime_error("cannot write " + nodes_file.string());
    nodes << "node_id\ttype\texternal_key\n";
    for (std::size_t t = 0; t < g.num_types(); ++t) {
        const auto type = static_cast<TypeId>(t);
        for (LocalId i = 0; i < g.num_nodes(type); ++i) {
            NodeRef n{type, i};
            nodes << g.node_id(n) << '\t' << g.type(type).name << '\t' << g.external_key(n) << '\n';
        }
    }

    std::ofstream edges(edges_file);
    if (!edges) throw std::runtime_error("cannot write " + edges_file.string());
    edges << "relation\tsrc_id\tdst_id\tweight\n";
    edges.precision(17);
    for (std::size_t r = 0; r < g.num_relations(); ++r) {
        const auto rid = static_cast<RelationId>(r);
        const auto& rel = g.relation(rid);
        const auto& fwd = g.forward(rid);
        for (LocalId i = 0; i < fwd.rows(); ++i) {
            auto row = fwd.row(i);
            auto w = fwd.row_weights(i);
            for (std::size_t k = 0; k < row.size(); ++k) {
                if (rel.symmetric && row[k] < i) continue;
                edges << rel.name << '\t' << g.node_id({rel.src_type, i}) << '\t'
                      << g.node_id({rel.dst_type, row[k]}) << '\t' << w[k] << '\n';
            }
        }
    }
}

}  // namespace recipemeta
