#include <map>
#include <sstream>

#include "doctest.h"
#include "fixtures.hpp"

using namespace textcascade;

namespace {

WordVectorTable parse(const std::string& text, bool fold = false) {
    std::istringstream in(text);
    return WordVectorTable::load(in, VectorLoadOptions{fold});
}

// Independent reader: first pass collects every line, second keeps the last.
std::map<std::string, std::vector<double>> two_pass(const std::string& text) {
    std::istringstream in(text);
    std::string header;
    std::getline(in, header);
    std::vector<std::pair<std::string, std::vector<double>>> lines;
    std::string line;
    while (std::getline(in, line)) {
        std::istringstream ls(line);
        std::string w;
        ls >> w;
        std::vector<double> v;
        double x;
        while (ls >> x) v.push_back(x);
        lines.emplace_back(w, v);
    }
    std::map<std::string, std::vector<double>> out;
    for (auto it = lines.rbegin(); it != lines.rend(); ++it) out.emplace(it->first, it->second);
    return out;
}

std::vector<double> vec(std::span<const double> s) { return {s.begin(), s.end()}; }

}  // namespace

TEST_SUITE("embeddings") {

TEST_CASE("loads the text format") {
    const auto t = parse("2 2\ncat 1 0\ndog 0 1");
    CHECK(t.dim() == 2);
    CHECK(t.size() == 2);
    CHECK(vec(t.lookup("cat")) == std::vector<double>{1, 0});
    CHECK(vec(t.lookup("dog")) == std::vector<double>{0, 1});
}

TEST_CASE("declared dimension is enforced with the line number") {
    try {
        parse("1 3\ncat 1 0");
        FAIL("expected a format error");
    } catch (const FormatError& e) {
        CHECK(std::string(e.what()).find("line 2") != std::string::npos);
    }
    CHECK_THROWS_AS(parse(""), FormatError);
    CHECK_THROWS_AS(parse("2 x\n"), FormatError);
    CHECK_THROWS_AS(parse("1 2\ncat 1 zz"), FormatError);
}

TEST_CASE("later duplicates win") {
    const std::string text = "2 1\na 5\na 7";
    const auto t = parse(text);
    const auto ref = two_pass(text);
    CHECK(t.size() == ref.size());
    for (const auto& [w, v] : ref) CHECK(vec(t.lookup(w)) == v);
    CHECK(vec(t.lookup("a")) == std::vector<double>{7});
}

TEST_CASE("lookup is total and exact-match by default") {
    const auto t = parse("2 2\ncat 1 0\ndog 0 1");
    CHECK(vec(t.lookup("zebra")) == std::vector<double>{0, 0});
    CHECK(vec(t.lookup("CAT")) == std::vector<double>{0, 0});
    CHECK_FALSE(t.contains("CAT"));
    const auto folded = parse("2 2\nCat 1 0\ndog 0 1", true);
    CHECK(vec(folded.lookup("CAT")) == std::vector<double>{1, 0});
}

TEST_CASE("save and load round trip exactly") {
    Rng rng(3);
    WordVectorTable t(5);
    for (int i = 0; i < 20; ++i) t.insert("w" + std::to_string(i), fixtures::random_vector(rng, 5));
    std::ostringstream out;
    t.save(out);
    const auto back = parse(out.str());
    CHECK(back.digest() == t.digest());
    CHECK_THROWS_AS(t.insert("bad", std::vector<double>{1.0}), ContractViolation);
}

TEST_CASE("cosine conventions") {
    const std::vector<double> x{1, 0}, y{0, 1}, z{0, 0}, w{3, 4};
    CHECK(cosine(x, x) == 1.0);
    CHECK(cosine(x, y) == 0.0);
    CHECK(cosine(z, w) == 0.0);
    CHECK_THROWS_AS(cosine(x, std::vector<double>{1, 2, 3}), ContractViolation);
}

TEST_CASE("cosine is symmetric and scale invariant") {
    Rng rng(5);
    for (int trial = 0; trial < 200; ++trial) {
        const auto u = fixtures::random_vector(rng, 9);
        const auto v = fixtures::random_vector(rng, 9);
        CHECK(cosine(u, v) == cosine(v, u));
        const double c = rng.uniform(0.01, 100.0);
        auto cu = u;
        for (auto& x : cu) x *= c;
        CHECK(std::abs(cosine(cu, v) - cosine(u, v)) <= 1e-9);
        CHECK(std::abs(cosine(u, v)) <= 1.0);
    }
}

}
