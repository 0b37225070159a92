#include "fixtures.hpp"

#include "recipemeta/synthetic.hpp"

#include <functional>

namespace fixtures {

HeteIN two_recipe_graph() {
    HeteINBuilder b;
    auto user = b.add_type("User");
    auto recipe = b.add_type("Recipe");
    for (const char* u : {"u1", "u2", "u3", "u4"}) b.add_node(user, u);
    b.add_node(recipe, "A");
    b.add_node(recipe, "B");
    b.declare_standard_relations();
    auto ur = *b.find_relation("U-R");
    b.add_edge(ur, 0, 0);
    b.add_edge(ur, 1, 0);
    b.add_edge(ur, 1, 1);
    b.add_edge(ur, 2, 1);
    b.add_edge(ur, 3, 1);
    return std::move(b).build();
}

HeteIN random_small_graph(std::mt19937_64& rng, std::size_t max_nodes) {
    std::uniform_int_distribution<std::size_t> size(1, max_nodes / 3);
    std::uniform_real_distribution<double> density(0.05, 0.35);
    return make_random_graph(size(rng), size(rng), size(rng), density(rng), rng());
}

std::vector<std::string> symmetric_metapath_labels(const HeteIN& g, std::size_t max_len) {
    std::vector<char> codes;
    for (std::size_t t = 0; t < g.num_types(); ++t) codes.push_back(g.type(TypeId(t)).code);
    auto joined = [&](char a, char b) {
        return g.relation_between(g.type_with_code(a), g.type_with_code(b)).has_value();
    };
    std::vector<std::string> out;
    std::string seq;
    std::function<void()> extend = [&] {
        if (seq.size() >= 2) {
            if (std::equal(seq.begin(), seq.end(), seq.rbegin())) {
                std::string label;
                for (char c : seq) label += (label.empty() ? "" : "-") + std::string(1, c);
                out.push_back(label);
            }
        }
        if (seq.size() == max_len + 1) return;
        for (char c : codes) {
            if (!seq.empty() && !joined(seq.back(), c)) continue;
            seq.push_back(c);
            extend();
            seq.pop_back();
        }
    };
    extend();
    return out;
}

std::vector<std::vector<std::uint64_t>> dfs_path_counts(const HeteIN& g, const Metapath& p) {
    // adjacency per hop rebuilt from the raw edge lists
    std::vector<std::vector<std::vector<LocalId>>> hop(p.steps.size());
    for (std::size_t i = 0; i < p.steps.size(); ++i) {
        hop[i].resize(g.num_nodes(p.types[i]));
        const auto& step = p.steps[i];
        const bool sym = g.relation(step.relation).symmetric;
        for (const auto& e : g.edges(step.relation)) {
            if (sym) {
                hop[i][e.src].push_back(e.dst);
                if (e.src != e.dst) hop[i][e.dst].push_back(e.src);
            } else if (step.reversed) {
                hop[i][e.dst].push_back(e.src);
            } else {
                hop[i][e.src].push_back(e.dst);
            }
        }
    }
    const auto n_src = g.num_nodes(p.types.front());
    const auto n_dst = g.num_nodes(p.types.back());
    std::vector<std::vector<std::uint64_t>> counts(n_src, std::vector<std::uint64_t>(n_dst, 0));
    std::function<void(LocalId, std::size_t, LocalId)> walk = [&](LocalId start, std::size_t depth, LocalId at) {
        if (depth == p.steps.size()) {
            ++counts[start][at];
            return;
        }
        for (auto next : hop[depth][at]) walk(start, depth + 1, next);
    };
    for (LocalId s = 0; s < n_src; ++s) walk(s, 0, s);
    return counts;
}

std::filesystem::path scratch_dir(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / ("recipemeta_test_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

}  // namespace fixtures
