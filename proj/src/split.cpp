#include "recipemeta/split.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>

namespace recipemeta {

void SplitSpec::validate() const {
    double total = 0.0;
    for (double r : ratios) {
        if (!(r >= 0.0)) throw std::invalid_argument("split ratios must be non-negative");
        total += r;
    }
    if (std::abs(total - 1.0) > 1e-9) {
        throw std::invalid_argument("split ratios must sum to 1 (got " + std::to_string(total) + ")");
    }
}

EdgeHoldout split_target_edges(const HeteIN& g, const SplitSpec& spec) {
    spec.validate();
    auto rel = g.find_relation(spec.target_relation);
    if (!rel) throw ValidationError("unknown relation '" + spec.target_relation + "'");

    auto edges = g.edges(*rel);
    if (edges.size() < 10) {
        throw ValidationError("target relation " + spec.target_relation + " has " + std::to_string(edges.size()) +
                              " edges; at least 10 are required to split");
    }
    std::mt19937_64 rng(spec.seed);
    std::shuffle(edges.begin(), edges.end(), rng);

    const auto n = edges.size();
    const auto n_val = static_cast<std::size_t>(std::floor(spec.ratios[1] * static_cast<double>(n) + 1e-9));
    const auto n_test = static_cast<std::size_t>(std::floor(spec.ratios[2] * static_cast<double>(n) + 1e-9));

    EdgeHoldout out{HeteIN{}, *rel, {}, {}, {}};
    out.val_edges.assign(edges.begin(), edges.begin() + n_val);
    out.test_edges.assign(edges.begin() + n_val, edges.begin() + n_val + n_test);
    out.train_edges.assign(edges.begin() + n_val + n_test, edges.end());
    std::sort(out.train_edges.begin(), out.train_edges.end());

    std::vector<EdgePair> removed(out.val_edges);
    removed.insert(removed.end(), out.test_edges.begin(), out.test_edges.end());
    out.train_graph = g.without_edges(*rel, removed);
    return out;
}

void write_split_manifest(const std::filesystem::path& path, const HeteIN& g, const EdgeHoldout& split) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    const auto& rel = g.relation(split.relation);
    auto emit = [&](const std::vector<EdgePair>& edges, const char* fold) {
        for (const auto& e : edges) {
            nlohmann::ordered_json rec;
            rec["user"] = g.node_id({rel.src_type, e.src});
            rec["recipe"] = g.node_id({rel.dst_type, e.dst});
            rec["fold"] = fold;
            out << rec.dump() << '\n';
        }
    };
    emit(split.val_edges, "val");
    emit(split.test_edges, "test");
}

std::vector<HeldOutRecord> read_split_manifest(const std::filesystem::path& path, const HeteIN& g,
                                               RelationId relation) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    const auto& rel = g.relation(relation);
    std::vector<HeldOutRecord> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        nlohmann::json rec;
        try {
            rec = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(path.string(), lineno, e.what());
        }
        if (!rec.contains("user") || !rec.contains("recipe") || !rec.contains("fold")) {
            throw ParseError(path.string(), lineno, "record needs user, recipe and fold");
        }
        auto u = g.find_node(rec["user"].get<std::string>());
        auto r = g.find_node(rec["recipe"].get<std::string>());
        if (!u || !r || u->type != rel.src_type || r->type != rel.dst_type) {
            throw ValidationError(path.string() + ":" + std::to_string(lineno) + ": record does not name a " +
                                  rel.name + " pair in this graph");
        }
        auto fold = rec["fold"].get<std::string>();
        if (fold != "val" && fold != "test") {
            throw ParseError(path.string(), lineno, "fold must be 'val' or 'test'");
        }
        out.push_back({{u->index, r->index}, fold == "val" ? Fold::val : Fold::test});
    }
    return out;
}

EdgeHoldout holdout_from_records(const HeteIN& g, RelationId relation, const std::vector<HeldOutRecord>& records) {
    EdgeHoldout out{HeteIN{}, relation, {}, {}, {}};
    std::vector<EdgePair> removed;
    for (const auto& rec : records) {
        (rec.fold == Fold::val ? out.val_edges : out.test_edges).push_back(rec.edge);
        removed.push_back(rec.edge);
    }
    std::sort(removed.begin(), removed.end());
    for (const auto& e : g.edges(relation)) {
        if (!std::binary_search(removed.begin(), removed.end(), e)) out.train_edges.push_back(e);
    }
    out.train_graph = g.without_edges(relation, removed);
    return out;
}

}  // namespace recipemeta
