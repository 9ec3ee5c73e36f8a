#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "oracles.hpp"

#include "bratteli/diagram.hpp"
#include "bratteli/diagram_io.hpp"
#include "bratteli/rational.hpp"

#include <algorithm>
#include <map>

using namespace bratteli;

namespace {

std::multiset<std::string> potentials_at(const Diagram& d, std::size_t gap) {
    std::multiset<std::string> out;
    for (const Arrow& a : d.arrows(gap))
        for (Integer i = 0; i < a.count; ++i)
            out.insert(d.level(gap - 1)[a.source] + ">" + d.level(gap)[a.range] + ":" + to_string(a.potential.exact));
    return out;
}

}  // namespace

TEST_CASE("rational parsing") {
    CHECK(parse_rational("3/6") == Rational(1, 2));
    CHECK(parse_rational("-1.25") == Rational(-5, 4));
    CHECK(parse_rational("3e-2") == Rational(3, 100));
    CHECK(parse_rational("7") == 7);
    CHECK_THROWS(parse_rational("1e"));
    CHECK_THROWS(parse_rational("x"));
    CHECK(rational_from_double(0.1) == Rational(1, 10));
    // uncanonical input still compares equal
    CHECK(Potential::from_rational(Rational(2, 4)).exact == Rational(1, 2));
    CHECK(Potential::from_rational(Rational(-12, 4)).exact == -3);
    CHECK(format_double(0.1) == "0.1");
    CHECK(log_of(Integer("1000000000000000000000000000000")) == doctest::Approx(30 * std::log(10.0)));
}

TEST_CASE("two-column diagram loads with two vertices per level") {
    Diagram d = oracle::load("car_two_columns.json");
    CHECK(d.is_periodic());
    CHECK_FALSE(d.depth().has_value());
    for (std::size_t j = 1; j <= 8; ++j) CHECK(d.level_size(j) == 2);
    for (std::size_t j = 2; j <= 6; ++j) {
        MultiplicityMatrix m = multiplicity_matrix(d, j);
        CHECK(m.entries == std::vector<Integer>{1, 1, 1, 1});
    }
    MultiplicityMatrix m1 = multiplicity_matrix(d, 1);
    CHECK(m1.rows == 2);
    CHECK(m1.cols == 1);
}

TEST_CASE("chain: 1x1 multiplicity matrices") {
    Diagram d = oracle::load("chain.json");
    for (const auto& m : multiplicity_matrices(d, 5)) CHECK(m.entries == std::vector<Integer>{1});
}

TEST_CASE("validation errors name the offending coordinates") {
    const char* sink = R"({"levels": [["v0"], ["a"], ["b", "c"], ["d"]],
        "arrows": [{"gap": 1, "from": "v0", "to": "a", "potential": 0},
                   {"gap": 2, "from": "a", "to": "b", "potential": 0},
                   {"gap": 2, "from": "a", "to": "c", "potential": 0},
                   {"gap": 3, "from": "b", "to": "d", "potential": 0}]})";
    try {
        load_spec(std::string(sink));
        FAIL("expected a sink error");
    } catch (const DiagramError& e) {
        std::string w = e.what();
        CHECK(w.find("sink") != std::string::npos);
        CHECK(w.find("c") != std::string::npos);
    }
    const char* unreachable = R"({"levels": [["v0"], ["a", "b"]],
        "arrows": [{"gap": 1, "from": "v0", "to": "a", "potential": 0}]})";
    CHECK_THROWS_WITH_AS(load_spec(std::string(unreachable)), doctest::Contains("unreachable"), DiagramError);
    const char* wrong = R"({"levels": [["v0"], ["a"]],
        "arrows": [{"gap": 1, "from": "v0", "to": "zz", "potential": 0}]})";
    CHECK_THROWS_AS(load_spec(std::string(wrong)), DiagramError);
    const char* two_tops = R"({"levels": [["v0", "v1"]], "arrows": []})";
    CHECK_THROWS_AS(load_spec(std::string(two_tops)), DiagramError);
}

TEST_CASE("serialize round trip") {
    for (const char* f : {"car_asymmetric.json", "car_two_columns.json", "car_growing_cross.json", "chain.json",
                          "zero_potential.json"}) {
        Diagram d = oracle::load(f);
        std::string s = serialize(d);
        Diagram e = load_spec(s);
        CHECK(serialize(e) == s);
        for (std::size_t g = 1; g <= 5; ++g) CHECK(potentials_at(d, g) == potentials_at(e, g));
    }
    Diagram big = load_spec(std::string(R"({"levels": [["v0"], ["a"]],
        "arrows": [{"gap": 1, "from": "v0", "to": "a", "potential": "1/3", "count": "123456789012345678901234567890"}]})"));
    CHECK(big.arrows(1)[0].count == Integer("123456789012345678901234567890"));
    CHECK(big.arrows(1)[0].potential.exact == Rational(1, 3));
    CHECK(load_spec(serialize(big)).arrows(1)[0].count == big.arrows(1)[0].count);
}

TEST_CASE("drift tail potentials") {
    Diagram d = oracle::load("car_growing_cross.json");
    for (std::size_t j = 2; j <= 20; ++j)
        for (const Arrow& a : d.arrows(j))
            CHECK(a.potential.exact == (a.source == a.range ? Rational(0) : Rational(static_cast<long>(j))));
}

TEST_CASE("telescoping") {
    Diagram chain = oracle::load("chain.json");
    Diagram t = telescope(chain, {2, 4, 6});
    CHECK(t.depth() == 3u);
    CHECK(t.arrows(1)[0].potential.exact == Rational(1, 3));
    CHECK(t.arrows(2)[0].potential.exact == Rational(2, 3));
    CHECK(t.arrows(3)[0].potential.exact == Rational(2, 3));

    // two-column diagram cut at 1 < 3: each source reaches the two targets by paths of potential 0, 2 and 1, 1
    Diagram br2 = oracle::load("car_two_columns.json");
    Diagram b = telescope(br2, {1, 3});
    CHECK(potentials_at(b, 2) == std::multiset<std::string>{"L>L:0", "L>L:2", "L>R:1", "L>R:1", "R>R:0", "R>R:2",
                                                           "R>L:1", "R>L:1"});

    // path counts are preserved
    Diagram asym = oracle::load("car_asymmetric.json");
    Diagram ta = telescope(asym, {2, 3, 5});
    std::vector<std::size_t> cuts{2, 3, 5};
    for (std::size_t i = 0; i < cuts.size(); ++i) {
        auto before = oracle::stats(asym, cuts[i], 0.0);
        auto after = oracle::stats(ta, i + 1, 0.0);
        CHECK(before.count == after.count);
        CHECK(before.min == after.min);
        CHECK(before.min_count == after.min_count);
    }
    // composition
    Diagram direct = telescope(asym, {2, 6});
    Diagram twice = telescope(telescope(asym, {1, 2, 4, 6}), {2, 4});
    CHECK(potentials_at(direct, 2) == potentials_at(twice, 2));
    CHECK(multiplicity_matrix(direct, 2).entries ==
          multiply(multiply(multiplicity_matrix(asym, 6), multiplicity_matrix(asym, 5)),
                   multiply(multiplicity_matrix(asym, 4), multiplicity_matrix(asym, 3)))
              .entries);
    CHECK_THROWS_AS(telescope(asym, {2, 2}), DiagramError);
}

TEST_CASE("products") {
    Diagram chain = oracle::load("chain.json");
    Diagram cc = product(chain, chain);
    CHECK(cc.level_size(3) == 1);
    CHECK(cc.arrows(3)[0].potential.exact == Rational(2, 3));

    Diagram a = oracle::load("car_asymmetric.json").prefix(4);
    Diagram b = oracle::load("zero_potential.json").prefix(4);
    Diagram ab = product(a, b), ba = product(b, a);
    for (std::size_t n = 1; n <= 4; ++n) {
        auto sa = oracle::stats(a, n, 0.0), sb = oracle::stats(b, n, 0.0), sab = oracle::stats(ab, n, 0.0);
        Integer ta = 0, tb = 0, tab = 0;
        for (auto& x : sa.count) ta += x;
        for (auto& x : sb.count) tb += x;
        for (auto& x : sab.count) tab += x;
        CHECK(tab == ta * tb);
        // coordinate swap
        MultiplicityMatrix m1 = multiplicity_matrix(ab, n), m2 = multiplicity_matrix(ba, n);
        std::size_t nb = b.level_size(n), nbp = b.level_size(n - 1), na = a.level_size(n), nap = a.level_size(n - 1);
        for (std::size_t x = 0; x < na; ++x)
            for (std::size_t y = 0; y < nb; ++y)
                for (std::size_t xp = 0; xp < nap; ++xp)
                    for (std::size_t yp = 0; yp < nbp; ++yp)
                        CHECK(m1(x * nb + y, xp * nbp + yp) == m2(y * na + x, yp * nap + xp));
    }
    CHECK(ab.level(1)[0] == product_vertex_name("L", "a"));
}

TEST_CASE("negation and path potentials") {
    Diagram d = oracle::load("car_asymmetric.json").prefix(5);
    CHECK(serialize(negate_potential(negate_potential(d))) == serialize(d));
    Diagram z = oracle::load("zero_potential.json");
    CHECK(serialize(negate_potential(z)) == serialize(z));

    FinitePath mu{0, {{1, 1, 0}, {2, 2, 0}}};  // v0 -> R -> R
    FinitePath nu{2, {{3, 3, 0}}};              // R -> L
    FinitePath all{0, {{1, 1, 0}, {2, 2, 0}, {3, 3, 0}}};
    CHECK(path_potential(d, mu).exact == 2);
    CHECK(path_potential(d, all).exact == path_potential(d, mu).exact + path_potential(d, nu).exact);
    CHECK(path_potential(d, FinitePath{3, {}}).exact == 0);
    FinitePath broken{0, {{1, 0, 0}, {2, 2, 0}}};  // v0 -> L then R -> R
    CHECK_THROWS_AS(path_potential(d, broken), DiagramError);
}

TEST_CASE("dot export highlights") {
    Diagram d = oracle::load("car_two_columns.json");
    std::string dot = to_dot(d, 2, {{true, true}, {true, true, false, false}});
    CHECK(dot.find("digraph") != std::string::npos);
    CHECK(dot.find("red") != std::string::npos);
}
