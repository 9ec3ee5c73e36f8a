#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "oracles.hpp"

#include "bratteli/geodesics.hpp"

#include <random>

using namespace bratteli;

namespace {

GeodesicOptions exact_opts(std::size_t lookahead = 8) {
    GeodesicOptions o;
    o.lookahead = lookahead;
    o.mode = NumericMode::Exact;
    return o;
}

}  // namespace

TEST_CASE("asymmetric diagram: single left column") {
    Diagram d = oracle::load("car_asymmetric.json");
    TightSubdiagram sub = extract_geodesic_subdiagram(d, 8);
    CHECK(sub.certification == Certification::Exact);
    for (std::size_t n = 1; n <= 8; ++n) {
        CHECK(sub.vertex_alive[n] == std::vector<bool>{true, false});
        CHECK(geodesic_prefix_data(sub, n).total == 1);
    }
    for (std::size_t g = 2; g <= 8; ++g) CHECK(sub.arrow_alive[g - 1] == std::vector<bool>{true, false, false, false});
    AlgebraProfile p = ground_state_algebra_profile(sub, 8);
    for (std::size_t n = 0; n <= 8; ++n) CHECK(describe_blocks(p.blocks[n]) == "C");
}

TEST_CASE("two-column diagram: two vertical columns") {
    Diagram d = oracle::load("car_two_columns.json");
    TightSubdiagram sub = extract_geodesic_subdiagram(d, 6);
    CHECK(sub.certification == Certification::Exact);
    for (std::size_t n = 1; n <= 6; ++n) {
        GeodesicPrefixData g = geodesic_prefix_data(sub, n);
        CHECK(g.total == 2);
        CHECK(g.per_vertex == std::vector<Integer>{1, 1});
        CHECK(g.total == oracle::geodesic_counts(d, n, 8)[0] + oracle::geodesic_counts(d, n, 8)[1]);
    }
    AlgebraProfile p = ground_state_algebra_profile(sub, 6);
    for (std::size_t n = 1; n <= 6; ++n) CHECK(describe_blocks(p.blocks[n]) == "C^2");
    CHECK(p.plus.level_size(3) == 2);
    CHECK(p.plus.arrows(3).size() == 2);

    FinitePath vertical{0, {{1, 0, 0}, {2, 0, 0}}};
    FinitePath cross{0, {{1, 0, 0}, {2, 2, 0}}};
    CHECK(is_geodesic_prefix(sub, vertical));
    CHECK_FALSE(is_geodesic_prefix(sub, cross));
}

TEST_CASE("negated two-column diagram: alternating paths, checked against enumeration") {
    Diagram d = negate_potential(oracle::load("car_two_columns.json"));
    TightSubdiagram sub = extract_geodesic_subdiagram(d, 6);
    CHECK(sub.certification == Certification::Exact);
    for (std::size_t n = 1; n <= 6; ++n) {
        auto brute = oracle::geodesic_counts(d, n, 9);
        CHECK(geodesic_prefix_data(sub, n).per_vertex == brute);
    }
    // only the cross arrows survive past gap 1
    for (std::size_t g = 2; g <= 6; ++g) CHECK(sub.arrow_alive[g - 1] == std::vector<bool>{false, false, true, true});
}

TEST_CASE("zero potential: every path is a geodesic") {
    Diagram d = oracle::load("zero_potential.json");
    TightSubdiagram sub = extract_geodesic_subdiagram(d, 5);
    for (std::size_t n = 1; n <= 5; ++n) {
        auto all = oracle::stats(d, n, 0.0).count;
        CHECK(geodesic_prefix_data(sub, n).per_vertex == all);
    }
}

TEST_CASE("growing cross: drift tail still certified") {
    Diagram d = oracle::load("car_growing_cross.json");
    TightSubdiagram sub = extract_geodesic_subdiagram(d, 6);
    CHECK(sub.certification == Certification::Exact);
    for (std::size_t n = 1; n <= 6; ++n) CHECK(geodesic_prefix_data(sub, n).total == 2);
    // negative drift on the minimising arrows cannot be certified by the fixed point
    Diagram neg = negate_potential(d);
    TightSubdiagram s2 = extract_geodesic_subdiagram(neg, 4);
    CHECK(s2.certification == Certification::TruncatedAtDepth);
}

TEST_CASE("product profile is the product of profiles") {
    Diagram p = product(oracle::load("car_asymmetric.json"), oracle::load("car_two_columns.json"));
    TightSubdiagram sub = extract_geodesic_subdiagram(p.prefix(12), 5, exact_opts(7));
    AlgebraProfile prof = ground_state_algebra_profile(sub, 5);
    for (std::size_t n = 1; n <= 5; ++n) CHECK(describe_blocks(prof.blocks[n]) == "C^2");
}

TEST_CASE("finite diagrams: truncation, stability and prefix optimality against enumeration") {
    std::mt19937_64 rng(11);
    for (int t = 0; t < 30; ++t) {
        Diagram d = oracle::random_diagram(rng, 6, 3, 2);
        for (std::size_t n = 1; n <= 3; ++n) {
            TightSubdiagram sub = extract_geodesic_subdiagram(d, n, exact_opts(3));
            CHECK(sub.certification == Certification::TruncatedAtDepth);
            CHECK(sub.horizon == n + 3);
            CHECK(geodesic_prefix_data(sub, n).per_vertex == oracle::geodesic_counts(d, n, n + 3));
            // every surviving prefix minimises the potential at its range
            auto mins = oracle::stats(d, n, 0.0).min;
            for (const auto& p : oracle::paths(d, n)) {
                FinitePath fp{0, {}};
                for (std::size_t k = 0; k < n; ++k) fp.arrows.push_back({k + 1, p.cls[k], 0});
                if (is_geodesic_prefix(sub, fp)) CHECK(p.pot == mins[p.verts.back()]);
            }
        }
        // lookahead monotonicity
        TightSubdiagram a = extract_geodesic_subdiagram(d, 2, exact_opts(1));
        TightSubdiagram b = extract_geodesic_subdiagram(d, 2, exact_opts(4));
        for (std::size_t v = 0; v < d.level_size(2); ++v)
            if (b.vertex_alive[2][v]) CHECK(a.vertex_alive[2][v]);
    }
}

TEST_CASE("float ties close to the tolerance are rejected") {
    const char* text = R"({"levels": [["v0"], ["a", "b"], ["c"]],
        "arrows": [{"gap": 1, "from": "v0", "to": "a", "potential": 0},
                   {"gap": 1, "from": "v0", "to": "b", "potential": 0.0000001},
                   {"gap": 2, "from": "a", "to": "c", "potential": 1},
                   {"gap": 2, "from": "b", "to": "c", "potential": 1}]})";
    Diagram d = load_spec(std::string(text));
    GeodesicOptions o;
    o.lookahead = 0;
    CHECK_THROWS_AS(extract_geodesic_subdiagram(d, 2, o), TieAmbiguityError);
    o.mode = NumericMode::Exact;
    TightSubdiagram sub = extract_geodesic_subdiagram(d, 2, o);
    CHECK(geodesic_prefix_data(sub, 2).total == 1);
}

TEST_CASE("requests beyond a finite diagram") {
    Diagram d = oracle::load("car_two_columns.json").prefix(3);
    CHECK_THROWS(extract_geodesic_subdiagram(d, 5));
}
