#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <set>

#include "doctest.h"
#include "fixtures.hpp"
#include "textcascade/lsh.hpp"

using namespace textcascade;
using fixtures::edge_tree;

namespace {

const WeightPolicy kUnit({}, 1.0);

FeatureBag bag_of(std::size_t width, const std::vector<std::vector<double>>& rows) {
    FeatureBag bag(width);
    for (const auto& r : rows) bag.add(r);
    return bag;
}

struct World {
    std::shared_ptr<WordVectorTable> table;
    std::unique_ptr<TrainingIndex> index;
    std::vector<Query> queries;
};

World random_world(std::uint64_t seed, std::size_t classes, std::size_t queries) {
    Rng rng(seed);
    World w;
    const std::size_t vocab = 10, dim = 3;
    w.table = std::make_shared<WordVectorTable>(dim);
    for (std::size_t i = 0; i < vocab; ++i) w.table->insert("w" + std::to_string(i), fixtures::random_vector(rng, dim));
    const auto edges = [&] {
        std::vector<std::pair<std::string, std::string>> e;
        const auto m = 1 + rng.below(3);
        for (std::size_t k = 0; k < m; ++k) e.emplace_back("w" + std::to_string(rng.below(vocab)), "w" + std::to_string(rng.below(vocab)));
        return e;
    };
    std::vector<TrainingRecord> records;
    for (std::size_t c = 0; c < classes; ++c) {
        const auto samples = 1 + rng.below(3);
        for (std::size_t s = 0; s < samples; ++s)
            records.push_back({"r" + std::to_string(records.size()), "c" + std::to_string(100 + c), "", edge_tree("", edges())});
    }
    w.index = std::make_unique<TrainingIndex>(std::move(records), w.table, kUnit);
    for (std::size_t q = 0; q < queries; ++q) w.queries.push_back(make_query("q", "", edge_tree("", edges()), *w.table, kUnit));
    return w;
}

bool subset(const std::vector<ClassId>& a, const std::vector<ClassId>& b) {
    return std::includes(b.begin(), b.end(), a.begin(), a.end());
}

}  // namespace

TEST_SUITE("lsh") {

TEST_CASE("sign reading") {
    const double planes[] = {1, 0, 0, 1};
    const auto f = HyperplaneFamily::from_planes(planes, 2);
    CHECK(f.bits() == 2);
    // bit 0 from plane 0, bit 1 from plane 1
    CHECK(f.hash(std::vector<double>{0.5, -2.0}) == 0b01);
    CHECK(f.hash(std::vector<double>{0.0, 0.0}) == 0);
    CHECK(f.hash(std::vector<double>{-1.0, 3.0}) == 0b10);
    CHECK_THROWS_AS(f.hash(std::vector<double>{1.0}), ContractViolation);
    CHECK_THROWS_AS(HyperplaneFamily(0, 4, 1), ContractViolation);
    CHECK_THROWS_AS(HyperplaneFamily(65, 4, 1), ContractViolation);
    CHECK(HyperplaneFamily(7, 4, 1).hash(std::vector<double>(4, 0.0)) == 0);
}

TEST_CASE("families are nested and reproducible") {
    const HyperplaneFamily big(20, 6, 3);
    for (std::size_t p : {1u, 3u, 5u, 10u, 15u}) {
        const HyperplaneFamily small(p, 6, 3);
        for (std::size_t i = 0; i < p; ++i) {
            CHECK(std::equal(small.plane(i).begin(), small.plane(i).end(), big.plane(i).begin()));
        }
        const auto pre = big.prefix(p);
        Rng rng(p);
        const auto v = fixtures::random_vector(rng, 6);
        CHECK(pre.hash(v) == small.hash(v));
        CHECK(small.hash(v) == (big.hash(v) & ((HashCode{1} << p) - 1)));
    }
    const HyperplaneFamily again(20, 6, 3), other(20, 6, 4);
    CHECK(std::equal(again.plane(19).begin(), again.plane(19).end(), big.plane(19).begin()));
    CHECK_FALSE(std::equal(other.plane(0).begin(), other.plane(0).end(), big.plane(0).begin()));
}

TEST_CASE("tables for tiny indexes") {
    const auto table = fixtures::table_of(1, {{"a", {1}}, {"b", {-1}}});
    const HyperplaneFamily f(4, 2, 9);
    {
        TrainingIndex index({{"r", "x", "", edge_tree("", {{"a", "b"}})}}, table, kUnit);
        const auto t = build_tables(index, f);
        REQUIRE(t.by_class.size() == 1);
        REQUIRE(t.by_text.size() == 1);
        CHECK(t.by_class.begin()->second.size() == 1);
        CHECK(t.by_text.begin()->second.size() == 1);
    }
    {
        TrainingIndex index({{"r", "x", "", edge_tree("", {{"a", "b"}})}, {"s", "y", "", edge_tree("", {{"a", "b"}})}}, table, kUnit);
        const auto t = build_tables(index, f);
        REQUIRE(t.by_class.size() == 1);
        CHECK(t.by_class.begin()->second == std::vector<ClassId>{0, 1});
    }
}

TEST_CASE("tables equal a brute-force rehash") {
    auto w = random_world(5, 3, 0);
    for (std::size_t p : {1u, 2u, 4u}) {
        const HyperplaneFamily f(p, 6, 11);
        const auto t = build_tables(*w.index, f);
        std::map<HashCode, std::set<ClassId>> by_class;
        std::map<HashCode, std::set<std::uint32_t>> by_text;
        const auto samples = w.index->all_samples();
        for (std::uint32_t s = 0; s < samples.size(); ++s) {
            for (std::size_t r = 0; r < samples[s].bag.size(); ++r) {
                HashCode code = 0;
                for (std::size_t i = 0; i < p; ++i) {
                    double dot = 0.0;
                    for (std::size_t k = 0; k < 6; ++k) dot += f.plane(i)[k] * samples[s].bag.row(r)[k];
                    if (dot > 0.0) code |= HashCode{1} << i;
                }
                by_class[code].insert(samples[s].class_id);
                by_text[code].insert(s);
            }
        }
        REQUIRE(t.by_class.size() == by_class.size());
        for (const auto& [code, ids] : by_class) CHECK(t.by_class.at(code) == std::vector<ClassId>(ids.begin(), ids.end()));
        for (const auto& [code, ids] : by_text) CHECK(t.by_text.at(code) == std::vector<std::uint32_t>(ids.begin(), ids.end()));
    }
}

TEST_CASE("conjunctive class candidates") {
    const double planes[] = {1, 0, 0, 1};
    const auto f = HyperplaneFamily::from_planes(planes, 2);
    HashTables t;
    t.by_class[0b11] = {0, 1};
    t.by_class[0b01] = {1, 2};
    CHECK(candidates_class_based(bag_of(2, {{1, 1}}), t, f) == std::vector<ClassId>{0, 1});
    CHECK(candidates_class_based(bag_of(2, {{1, 1}, {1, -1}}), t, f) == std::vector<ClassId>{1});
    CHECK(candidates_class_based(bag_of(2, {{-1, 1}}), t, f).empty());
    CHECK_THROWS_AS(candidates_class_based(FeatureBag(2), t, f), ContractViolation);
}

TEST_CASE("text candidates need one text holding every code") {
    const double planes[] = {1, 0, 0, 1};
    const auto f = HyperplaneFamily::from_planes(planes, 2);
    const auto table = fixtures::table_of(1, {{"a", {1}}});
    TrainingIndex index({{"t1", "b", "", edge_tree("", {{"a", "a"}})}, {"t2", "b", "", edge_tree("", {{"a", "a"}})},
                         {"t3", "c", "", edge_tree("", {{"a", "a"}})}},
                        table, kUnit);
    // samples 0 and 1 belong to b, 2 to c
    HashTables t;
    t.by_class[0b11] = {0, 1};
    t.by_class[0b01] = {0};
    t.by_text[0b11] = {0, 2};
    t.by_text[0b01] = {1};
    const auto split = bag_of(2, {{1, 1}, {1, -1}});
    CHECK(candidates_class_based(split, t, f) == std::vector<ClassId>{0});
    CHECK(candidates_text_based(split, t, f, index).empty());
    CHECK(candidates_text_based(bag_of(2, {{1, 1}}), t, f, index) == std::vector<ClassId>{0, 1});
    CHECK(candidates_text_based(bag_of(2, {{-1, -1}}), t, f, index).empty());
}

TEST_CASE("classification after filtering") {
    auto w = random_world(8, 6, 15);
    const HyperplaneFamily f(1, 6, 2);
    const auto t = build_tables(*w.index, f);
    for (const auto& q : w.queries) {
        for (auto variant : {LshVariant::class_based, LshVariant::text_based}) {
            const auto r = lsh_classify(q, t, f, *w.index, 3, variant);
            const auto cands = variant == LshVariant::class_based ? candidates_class_based(q.bag, t, f)
                                                                  : candidates_text_based(q.bag, t, f, *w.index);
            CHECK(r.candidate_count == cands.size());
            if (cands.empty()) {
                CHECK(r.classes.empty());
            } else {
                CHECK(r.classes == top_n(q, *w.index, 3, std::span<const ClassId>(cands)));
            }
            if (cands.size() == w.index->class_count()) CHECK(r.classes == top_n(q, *w.index, 3));
        }
    }
}

TEST_CASE("no shared code gives an empty result") {
    const auto table = fixtures::table_of(2, {{"a", {0.3, 0.8}}, {"b", {-0.5, 0.1}}, {"na", {-0.3, -0.8}}, {"nb", {0.5, -0.1}}});
    TrainingIndex index({{"r", "x", "", edge_tree("", {{"a", "b"}})}}, table, kUnit);
    const HyperplaneFamily f(64, 4, 5);
    const auto t = build_tables(index, f);
    // the negated feature hashes to the complement code
    const auto q = make_query("q", "", edge_tree("", {{"na", "nb"}}), *table, kUnit);
    CHECK(lsh_classify(q, t, f, index, 1, LshVariant::class_based).classes.empty());
    CHECK(lsh_classify(q, t, f, index, 1, LshVariant::text_based).candidate_count == 0);
    const auto empty = make_query("e", "", DependencyTree{}, *table, kUnit);
    CHECK(lsh_classify(empty, t, f, index, 1, LshVariant::class_based).classes.empty());
}

TEST_CASE("candidate sets shrink as bits grow") {
    for (std::uint64_t world_seed = 1; world_seed <= 3; ++world_seed) {
        auto w = random_world(world_seed + 40, 12, 25);
        for (std::uint64_t seed : {1u, 2u, 3u}) {
            std::vector<std::vector<ClassId>> prev_class(w.queries.size()), prev_text(w.queries.size());
            bool first = true;
            for (std::size_t p : {1u, 3u, 5u, 10u, 15u, 20u}) {
                const HyperplaneFamily f(p, 6, seed);
                const auto t = build_tables(*w.index, f);
                for (std::size_t q = 0; q < w.queries.size(); ++q) {
                    const auto c = candidates_class_based(w.queries[q].bag, t, f);
                    const auto x = candidates_text_based(w.queries[q].bag, t, f, *w.index);
                    CHECK(subset(x, c));
                    if (!first) {
                        CHECK(subset(c, prev_class[q]));
                        CHECK(subset(x, prev_text[q]));
                    }
                    prev_class[q] = c;
                    prev_text[q] = x;
                }
                first = false;
            }
        }
    }
}

TEST_CASE("one-bit collision rate follows the angle") {
    const std::size_t dim = 8;
    Rng rng(99);
    for (double angle : {std::numbers::pi / 3, std::numbers::pi / 2, 2 * std::numbers::pi / 3}) {
        const int trials = 10000;
        int collisions = 0;
        for (int trial = 0; trial < trials; ++trial) {
            // u and v at the given angle inside a random plane
            auto a = fixtures::random_vector(rng, dim);
            auto b = fixtures::random_vector(rng, dim);
            double na = 0.0;
            for (double x : a) na += x * x;
            na = std::sqrt(na);
            for (auto& x : a) x /= na;
            double proj = 0.0;
            for (std::size_t k = 0; k < dim; ++k) proj += a[k] * b[k];
            double nb = 0.0;
            for (std::size_t k = 0; k < dim; ++k) {
                b[k] -= proj * a[k];
                nb += b[k] * b[k];
            }
            nb = std::sqrt(nb);
            std::vector<double> v(dim);
            for (std::size_t k = 0; k < dim; ++k) v[k] = std::cos(angle) * a[k] + std::sin(angle) * b[k] / nb;
            const HyperplaneFamily f(1, dim, static_cast<std::uint64_t>(trial) + 1);
            collisions += f.hash(a) == f.hash(v);
        }
        CHECK(std::abs(static_cast<double>(collisions) / trials - (1.0 - angle / std::numbers::pi)) <= 0.05);
    }
}

}
