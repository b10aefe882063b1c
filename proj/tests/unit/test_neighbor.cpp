#include <algorithm>
#include <cmath>
#include <sstream>

#include "doctest.h"
#include "fixtures.hpp"

using namespace textcascade;
using fixtures::edge_tree;

namespace {

// Unit weights so bags are plain concatenations.
const WeightPolicy kUnit({}, 1.0);

TrainingRecord record(std::string id, std::string label, DependencyTree tree) {
    auto text = tree.words();
    std::string joined;
    for (const auto& w : text) joined += (joined.empty() ? "" : " ") + w;
    tree.set_id(id);
    return {std::move(id), std::move(label), joined, std::move(tree)};
}

Query query_of(const DependencyTree& tree, const WordVectorTable& table) {
    std::string joined;
    for (const auto& w : tree.words()) joined += (joined.empty() ? "" : " ") + w;
    return make_query("q", joined, tree, table, kUnit);
}

// Random corpus: words w0..w{vocab-1}, classes c0..c{classes-1}.
struct RandomWorld {
    std::shared_ptr<WordVectorTable> table;
    std::unique_ptr<TrainingIndex> index;
    std::vector<DependencyTree> queries;
};

DependencyTree random_tree(Rng& rng, std::size_t vocab, std::size_t max_edges) {
    std::vector<std::pair<std::string, std::string>> edges;
    const auto m = 1 + rng.below(max_edges);
    for (std::size_t e = 0; e < m; ++e) {
        edges.emplace_back("w" + std::to_string(rng.below(vocab)), "w" + std::to_string(rng.below(vocab)));
    }
    return edge_tree("", edges);
}

RandomWorld random_world(std::uint64_t seed, std::size_t classes, std::size_t queries) {
    Rng rng(seed);
    RandomWorld w;
    const std::size_t vocab = 12, dim = 3;
    w.table = std::make_shared<WordVectorTable>(dim);
    for (std::size_t i = 0; i < vocab; ++i) w.table->insert("w" + std::to_string(i), fixtures::random_vector(rng, dim));
    std::vector<TrainingRecord> records;
    for (std::size_t c = 0; c < classes; ++c) {
        const auto samples = 1 + rng.below(3);
        for (std::size_t s = 0; s < samples; ++s) {
            records.push_back(record("r" + std::to_string(records.size()), "c" + std::to_string(c),
                                     random_tree(rng, vocab, 4)));
        }
    }
    w.index = std::make_unique<TrainingIndex>(std::move(records), w.table, kUnit);
    for (std::size_t q = 0; q < queries; ++q) w.queries.push_back(random_tree(rng, vocab, 4));
    return w;
}

// Exhaustive ranking straight from the definition.
ScoredClasses oracle_top(const Query& q, const TrainingIndex& index, std::size_t n, std::vector<ClassId> scope) {
    ScoredClasses all;
    for (ClassId id : scope) all.push_back({id, fixtures::oracle_sim(q.bag, index, id)});
    std::sort(all.begin(), all.end(), [](const ScoredClass& a, const ScoredClass& b) {
        return a.score > b.score || (a.score == b.score && a.id < b.id);
    });
    if (all.size() > n) all.resize(n);
    return all;
}

std::vector<ClassId> all_ids(const TrainingIndex& index) {
    std::vector<ClassId> ids(index.class_count());
    for (ClassId i = 0; i < ids.size(); ++i) ids[i] = i;
    return ids;
}

}  // namespace

TEST_SUITE("neighbor") {

TEST_CASE("identical orthogonal bag scores its size") {
    // three mutually orthogonal edge features in 6 dimensions
    const auto table = fixtures::table_of(3, {{"a", {1, 0, 0}}, {"b", {0, 1, 0}}, {"c", {0, 0, 1}}, {"z", {0, 0, 0}}});
    const auto tree = edge_tree("", {{"a", "z"}, {"b", "z"}, {"z", "c"}});
    TrainingIndex index({record("r", "x", tree)}, table, kUnit);
    const auto q = query_of(tree, *table);
    CHECK(sim(q, 0, index) == doctest::Approx(3.0).epsilon(1e-12));

    const auto other = edge_tree("", {{"z", "a"}});
    TrainingIndex orth({record("r", "x", other)}, table, kUnit);
    const auto q2 = query_of(edge_tree("", {{"a", "z"}}), *table);
    CHECK(sim(q2, 0, orth) == 0.0);
}

TEST_CASE("best matching text over two samples") {
    // query {[1,0],[0,1]}; samples {[1,0]} and {[1,1]/sqrt2}. Features are the
    // head half of an edge whose dependent is the zero word.
    const double r = 1.0 / std::sqrt(2.0);
    const auto table = fixtures::table_of(2, {{"x", {1, 0}}, {"y", {0, 1}}, {"d", {r, r}}, {"o", {0, 0}}});
    TrainingIndex index({record("s1", "b", edge_tree("", {{"x", "o"}})), record("s2", "b", edge_tree("", {{"d", "o"}}))},
                        table, kUnit);
    const auto q = query_of(edge_tree("", {{"x", "o"}, {"y", "o"}}), *table);
    // oracle: max(1 + 0, r + r)
    const double expected = std::max(1.0 + 0.0, r + r);
    CHECK(expected == doctest::Approx(std::sqrt(2.0)));
    CHECK(sim(q, 0, index) == doctest::Approx(expected).epsilon(1e-12));
    CHECK(sim(q.bag, "b", index) == doctest::Approx(expected).epsilon(1e-12));
    CHECK_THROWS_AS(sim(q.bag, "nope", index), ContractViolation);
}

TEST_CASE("top_n matches the exhaustive oracle") {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        auto w = random_world(seed, seed == 1 ? 3 : 8, 10);
        for (const auto& tree : w.queries) {
            const auto q = query_of(tree, *w.table);
            const auto ids = all_ids(*w.index);
            for (std::size_t n : {1u, 2u, 3u, 10u}) {
                const auto got = top_n(q, *w.index, n);
                const auto want = oracle_top(q, *w.index, n, ids);
                REQUIRE(got.size() == want.size());
                for (std::size_t i = 0; i < got.size(); ++i) {
                    CHECK(got[i].id == want[i].id);
                    CHECK(got[i].score == doctest::Approx(want[i].score).epsilon(1e-12));
                }
            }
        }
    }
}

TEST_CASE("restriction scope") {
    auto w = random_world(9, 6, 12);
    const auto ids = all_ids(*w.index);
    const ClassId single[] = {2};
    const ClassId unknown[] = {99};
    for (const auto& tree : w.queries) {
        const auto q = query_of(tree, *w.index->shared_table());
        CHECK(top_n(q, *w.index, ids.size(), std::span<const ClassId>(ids)) == top_n(q, *w.index, ids.size()));
        CHECK(top_n(q, *w.index, 10, std::span<const ClassId>(single)).size() == 1);
    }
    const auto q = query_of(w.queries[0], *w.table);
    CHECK_THROWS_AS(top_n(q, *w.index, 0), ContractViolation);
    CHECK_THROWS_AS(top_n(q, *w.index, 3, std::span<const ClassId>()), ContractViolation);
    CHECK_THROWS_AS(top_n(q, *w.index, 3, std::span<const ClassId>(unknown)), ContractViolation);
}

TEST_CASE("scores do not depend on scope and pruning never hurts a kept class") {
    Rng rng(17);
    for (std::uint64_t seed = 20; seed < 26; ++seed) {
        auto w = random_world(seed, 10, 8);
        for (const auto& tree : w.queries) {
            const auto q = query_of(tree, *w.table);
            const auto n = 1 + rng.below(4);
            const auto full = top_n(q, *w.index, w.index->class_count());
            std::vector<ClassId> t2, t1;
            for (ClassId id = 0; id < w.index->class_count(); ++id) {
                if (rng.uniform() < 0.7) t2.push_back(id);
            }
            if (t2.empty()) t2.push_back(0);
            for (ClassId id : t2) {
                if (rng.uniform() < 0.6) t1.push_back(id);
            }
            const auto b = t2[rng.below(t2.size())];
            if (std::find(t1.begin(), t1.end(), b) == t1.end()) t1.push_back(b);

            const auto in_t2 = top_n(q, *w.index, t2.size(), std::span<const ClassId>(t2));
            for (const auto& sc : in_t2) {
                const auto it = std::find_if(full.begin(), full.end(), [&](const auto& f) { return f.id == sc.id; });
                CHECK(it->score == sc.score);
            }
            const auto rank_in = [&](const ScoredClasses& r) {
                return std::find_if(r.begin(), r.end(), [&](const auto& x) { return x.id == b; }) - r.begin();
            };
            const auto r1 = top_n(q, *w.index, t1.size(), std::span<const ClassId>(t1));
            CHECK(rank_in(r1) <= rank_in(in_t2));

            // if b is in the unrestricted top n, it stays in the restricted top n
            const auto unrestricted = top_n(q, *w.index, n);
            const auto restricted = top_n(q, *w.index, n, std::span<const ClassId>(t1));
            if (rank_in(unrestricted) < static_cast<std::ptrdiff_t>(unrestricted.size())) {
                CHECK(rank_in(restricted) < static_cast<std::ptrdiff_t>(restricted.size()));
            }
        }
    }
}

TEST_CASE("score ignores sample and edge order") {
    Rng rng(4);
    auto table = std::make_shared<WordVectorTable>(3);
    for (int i = 0; i < 8; ++i) table->insert("w" + std::to_string(i), fixtures::random_vector(rng, 3));
    std::vector<std::pair<std::string, std::string>> e1, e2;
    for (int i = 0; i < 4; ++i) e1.emplace_back("w" + std::to_string(rng.below(8)), "w" + std::to_string(rng.below(8)));
    for (int i = 0; i < 3; ++i) e2.emplace_back("w" + std::to_string(rng.below(8)), "w" + std::to_string(rng.below(8)));
    auto r1 = e1, r2 = e2;
    std::reverse(r1.begin(), r1.end());
    std::reverse(r2.begin(), r2.end());
    TrainingIndex forward({record("a", "b", edge_tree("", e1)), record("c", "b", edge_tree("", e2))}, table, kUnit);
    TrainingIndex backward({record("c", "b", edge_tree("", r2)), record("a", "b", edge_tree("", r1))}, table, kUnit);
    const auto q = query_of(edge_tree("", {{"w1", "w2"}, {"w3", "w4"}}), *table);
    CHECK(sim(q, 0, forward) == doctest::Approx(sim(q, 0, backward)).epsilon(1e-12));
}

TEST_CASE("empty bags score zero") {
    const auto table = fixtures::table_of(2, {{"a", {1, 0}}});
    DependencyTree lone;
    lone.add_node({"a", "a", "NOUN"});
    TrainingIndex index({record("r", "b", edge_tree("", {{"a", "a"}})), record("s", "c", lone)}, table, kUnit);
    const auto empty_q = query_of(lone, *table);
    CHECK(sim(empty_q, 0, index) == 0.0);
    const auto q = query_of(edge_tree("", {{"a", "a"}}), *table);
    CHECK(sim(q, 1, index) == 0.0);
}

TEST_CASE("bag of words cosine") {
    const std::vector<std::string> aab{"a", "a", "b"}, ab{"a", "b"}, cd{"c", "d"};
    CHECK(term_cosine(TermVector::from_tokens(ab), TermVector::from_tokens(ab)) == doctest::Approx(1.0));
    CHECK(term_cosine(TermVector::from_tokens(ab), TermVector::from_tokens(cd)) == 0.0);
    CHECK(term_cosine(TermVector::from_tokens(aab), TermVector::from_tokens(ab)) ==
          doctest::Approx(3.0 / std::sqrt(10.0)).epsilon(1e-12));
    CHECK(term_cosine(TermVector::from_tokens({}), TermVector::from_tokens(ab)) == 0.0);
}

TEST_CASE("syntactic bigram overlap") {
    const auto table = fixtures::table_of(1, {});
    const auto t3 = edge_tree("", {{"a", "b"}, {"c", "d"}, {"e", "f"}});
    TrainingIndex index({record("r", "x", t3)}, table, kUnit);
    CHECK(score_snbigram(t3, 0, index) == 3.0);
    CHECK(score_snbigram(edge_tree("", {{"b", "a"}}), 0, index) == 0.0);
    const auto partial = edge_tree("", {{"a", "b"}, {"e", "f"}, {"x", "y"}});
    // oracle: set intersection of the two bigram sets
    const auto qa = lemma_bigrams(partial), qb = lemma_bigrams(t3);
    std::vector<std::string> common;
    std::set_intersection(qa.begin(), qa.end(), qb.begin(), qb.end(), std::back_inserter(common));
    CHECK(common.size() == 2);
    CHECK(score_snbigram(partial, 0, index) == 2.0);
}

TEST_CASE("labels map to ascending ids") {
    const auto table = fixtures::table_of(1, {{"a", {1}}});
    TrainingIndex index({record("1", "zeta", edge_tree("", {{"a", "a"}})), record("2", "alpha", edge_tree("", {{"a", "a"}})),
                         record("3", "mid", edge_tree("", {{"a", "a"}}))},
                        table, kUnit);
    CHECK(index.labels() == std::vector<std::string>{"alpha", "mid", "zeta"});
    CHECK(index.require("zeta") == 2);
    CHECK_FALSE(index.find("nope"));
    CHECK_THROWS_AS(index.require("nope"), ContractViolation);
    // equal scores fall back to label order
    const auto q = query_of(edge_tree("", {{"a", "a"}}), *table);
    const auto r = top_n(q, index, 3);
    CHECK(r[0].id == 0);
    CHECK(r[1].id == 1);
    CHECK(r[2].id == 2);
}

TEST_CASE("bag cache round trip and key check") {
    auto w = random_world(31, 5, 0);
    std::stringstream buf;
    write_bag_cache(buf, *w.index);
    const auto key = cache_key(*w.index);
    auto bags = read_bag_cache(buf, key);
    REQUIRE(bags);
    // record order of the original build is the sample record_ordinal order
    std::vector<TrainingRecord> ordered(w.index->sample_count());
    for (const auto& s : w.index->all_samples()) ordered[s.record_ordinal] = {s.text_id, w.index->label(s.class_id), s.text, s.tree};
    TrainingIndex rebuilt(ordered, w.table, kUnit, std::move(bags));
    for (std::size_t i = 0; i < rebuilt.sample_count(); ++i) {
        const auto a = rebuilt.all_samples()[i].bag.data();
        const auto b = w.index->all_samples()[i].bag.data();
        CHECK(std::equal(a.begin(), a.end(), b.begin(), b.end()));
    }
    std::stringstream again;
    write_bag_cache(again, *w.index);
    auto other = key;
    other.policy ^= 1;
    CHECK_FALSE(read_bag_cache(again, other));
    std::stringstream broken(std::string("TCBAGS"));
    CHECK_THROWS_AS(read_bag_cache(broken, key), FormatError);
}

}
