#include "recipemeta/metapath.hpp"

#include "json.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>

namespace recipemeta {

bool Metapath::is_symmetric() const {
    const auto n = types.size();
    for (std::size_t i = 0; i < n; ++i) {
        if (types[i] != types[n - 1 - i]) return false;
    }
    const auto l = steps.size();
    for (std::size_t i = 0; i < l; ++i) {
        const auto& a = steps[i];
        const auto& b = steps[l - 1 - i];
        if (a.relation != b.relation) return false;
    }
    return true;
}

Metapath make_metapath(const HeteIN& g, const std::vector<TypeId>& types) {
    if (types.size() < 2) {
        throw SchemaError("a metapath needs at least two node types");
    }
    Metapath p;
    p.types = types;
    for (std::size_t i = 0; i < types.size(); ++i) {
        if (i > 0) p.label += '-';
        p.label += g.type(types[i]).code;
    }
    for (std::size_t i = 0; i + 1 < types.size(); ++i) {
        const auto a = types[i];
        const auto b = types[i + 1];
        std::vector<MetapathStep> candidates;
        for (std::size_t r = 0; r < g.num_relations(); ++r) {
            const auto& rel = g.relation(RelationId(r));
            if (rel.src_type == a && rel.dst_type == b) {
                candidates.push_back({RelationId(r), false});
            } else if (rel.src_type == b && rel.dst_type == a) {
                candidates.push_back({RelationId(r), true});
            }
        }
        if (candidates.empty()) {
            throw SchemaError("metapath " + p.label + ": no relation joins " + g.type(a).name + " and " +
                              g.type(b).name);
        }
        if (candidates.size() > 1) {
            throw SchemaError("metapath " + p.label + ": more than one relation joins " + g.type(a).name +
                              " and " + g.type(b).name);
        }
        p.steps.push_back(candidates.front());
    }
    return p;
}

Metapath parse_metapath(const HeteIN& g, std::string_view label) {
    std::vector<TypeId> types;
    std::size_t start = 0;
    while (start <= label.size()) {
        auto pos = label.find('-', start);
        auto token = label.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start);
        if (token.size() != 1) {
            throw SchemaError("malformed metapath label '" + std::string(label) +
                              "': expected dash-separated single-letter type codes");
        }
        try {
            types.push_back(g.type_with_code(token.front()));
        } catch (const ValidationError&) {
            throw SchemaError("metapath '" + std::string(label) + "': unknown type code '" + std::string(token) +
                              "'");
        }
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return make_metapath(g, types);
}

PathCountMatrix count_paths(const HeteIN& g, const Metapath& p) {
    if (p.steps.size() + 1 != p.types.size()) {
        throw SchemaError("metapath " + p.label + ": relation list does not match type list");
    }
    auto hop = [&](std::size_t i) {
        const auto& step = p.steps[i];
        if (index_of(step.relation) >= g.num_relations()) {
            throw SchemaError("metapath " + p.label + ": relation missing from graph");
        }
        const auto& rel = g.relation(step.relation);
        const auto from = step.reversed ? rel.dst_type : rel.src_type;
        const auto to = step.reversed ? rel.src_type : rel.dst_type;
        if (from != p.types[i] || to != p.types[i + 1]) {
            throw SchemaError("metapath " + p.label + ": hop " + std::to_string(i) + " uses relation " + rel.name +
                              " with mismatched types");
        }
        auto a = adjacency_matrix(g, step.relation);
        return step.reversed ? a.transpose() : a;
    };
    CountMatrix acc = hop(0);
    for (std::size_t i = 1; i < p.steps.size(); ++i) acc = multiply(acc, hop(i));
    return {p, std::move(acc)};
}

double pathsim(const PathCountMatrix& counts, LocalId x, LocalId y) {
    if (x == y) return 1.0;
    const auto cxy = counts.counts.at(x, y);
    const auto den = static_cast<double>(counts.counts.at(x, x)) + static_cast<double>(counts.counts.at(y, y));
    if (den == 0.0) return 0.0;
    return 2.0 * static_cast<double>(cxy) / den;
}

SimilarityTable top_m_similar(const HeteIN& g, const Metapath& p, std::size_t m) {
    if (m == 0) throw std::invalid_argument("top_m_similar: m must be positive");
    if (!p.is_symmetric()) {
        throw SchemaError("metapath " + p.label + " is not symmetric; PathSim requires a symmetric metapath");
    }
    const auto pc = count_paths(g, p);
    const auto diag = pc.counts.diagonal();

    SimilarityTable table;
    table.metapath = p.label;
    table.node_type = p.source_type();
    table.m = m;
    table.rows.resize(pc.counts.rows());
    std::vector<SimilarNode> candidates;
    for (LocalId x = 0; x < pc.counts.rows(); ++x) {
        candidates.clear();
        auto cols = pc.counts.row_cols(x);
        auto vals = pc.counts.row_values(x);
        for (std::size_t k = 0; k < cols.size(); ++k) {
            const auto y = cols[k];
            if (y == x) continue;
            const double den = static_cast<double>(diag[x]) + static_cast<double>(diag[y]);
            if (den == 0.0) continue;
            const double score = 2.0 * static_cast<double>(vals[k]) / den;
            if (score > 0.0) candidates.push_back({y, score});
        }
        auto better = [](const SimilarNode& a, const SimilarNode& b) {
            return a.score != b.score ? a.score > b.score : a.id < b.id;
        };
        const auto keep = std::min(m, candidates.size());
        std::partial_sort(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(keep),
                          candidates.end(), better);
        table.rows[x].assign(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(keep));
    }
    return table;
}

HomoGraph build_homograph(const SimilarityTable& table) {
    std::vector<std::pair<EdgePair, double>> edges;
    for (LocalId v = 0; v < table.rows.size(); ++v) {
        edges.push_back({{v, v}, 1.0});
        for (const auto& nb : table.rows[v]) {
            if (nb.id != v) edges.push_back({{v, nb.id}, nb.score});
        }
    }
    return {table.node_type, Csr::from_edges(table.rows.size(), std::move(edges))};
}

void write_similarity_table(const std::filesystem::path& path, const HeteIN& g, const SimilarityTable& table) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    char buf[64];
    for (LocalId x = 0; x < table.rows.size(); ++x) {
        out << "{\"metapath\":" << nlohmann::json(table.metapath).dump()
            << ",\"src\":" << nlohmann::json(g.node_id({table.node_type, x})).dump() << ",\"neighbors\":[";
        bool first = true;
        for (const auto& nb : table.rows[x]) {
            std::snprintf(buf, sizeof buf, "%.17g", nb.score);
            out << (first ? "" : ",") << "{\"id\":" << nlohmann::json(g.node_id({table.node_type, nb.id})).dump()
                << ",\"score\":" << buf << '}';
            first = false;
        }
        out << "]}\n";
    }
}

SimilarityTable read_similarity_table(const std::filesystem::path& path, const HeteIN& g) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    SimilarityTable table;
    std::string line;
    std::size_t lineno = 0;
    bool typed = false;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        nlohmann::json rec;
        try {
            rec = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(path.string(), lineno, e.what());
        }
        auto src = g.find_node(rec.at("src").get<std::string>());
        if (!src) throw ValidationError(path.string() + ":" + std::to_string(lineno) + ": unknown source node");
        if (!typed) {
            table.metapath = rec.at("metapath").get<std::string>();
            table.node_type = src->type;
            table.rows.resize(g.num_nodes(src->type));
            typed = true;
        }
        auto& row = table.rows.at(src->index);
        for (const auto& nb : rec.at("neighbors")) {
            auto id = g.find_node(nb.at("id").get<std::string>());
            if (!id || id->type != table.node_type) {
                throw ValidationError(path.string() + ":" + std::to_string(lineno) + ": bad neighbor id");
            }
            row.push_back({id->index, nb.at("score").get<double>()});
        }
        table.m = std::max(table.m, row.size());
    }
    return table;
}

}  // namespace recipemeta
