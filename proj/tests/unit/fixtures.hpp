#pragma once

#include <cmath>
#include <memory>
#include <string>
#include <vector>

#include "textcascade/neighbor.hpp"

namespace fixtures {

using namespace textcascade;

// A tree whose single edge carries exactly the given head and dependent
// words; words are both their own lemma and tagged NOUN.
inline DependencyTree edge_tree(std::string id, const std::vector<std::pair<std::string, std::string>>& edges) {
    DependencyTree tree(std::move(id));
    for (const auto& [head, dep] : edges) {
        const auto h = tree.add_node({head, head, "NOUN"});
        const auto d = tree.add_node({dep, dep, "NOUN"});
        tree.add_edge(h, d, "dep");
    }
    return tree;
}

inline std::shared_ptr<WordVectorTable> table_of(std::size_t dim,
                                                 const std::vector<std::pair<std::string, std::vector<double>>>& words) {
    auto table = std::make_shared<WordVectorTable>(dim);
    for (const auto& [w, v] : words) table->insert(w, v);
    return table;
}

// Brute-force best-matching-text similarity straight from the definition.
inline double oracle_sim(const FeatureBag& query, const TrainingIndex& index, ClassId id) {
    double best = 0.0;
    bool first = true;
    for (const auto& sample : index.samples(id)) {
        double total = 0.0;
        for (std::size_t i = 0; i < query.size(); ++i) {
            double m = 0.0;
            bool any = false;
            for (std::size_t j = 0; j < sample.bag.size(); ++j) {
                const double c = cosine(query.row(i), sample.bag.row(j));
                if (!any || c > m) m = c;
                any = true;
            }
            total += m;
        }
        if (first || total > best) best = total;
        first = false;
    }
    return best;
}

inline std::vector<double> random_vector(Rng& rng, std::size_t n) {
    std::vector<double> v(n);
    for (auto& x : v) x = rng.uniform(-1.0, 1.0);
    return v;
}

}  // namespace fixtures
