#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "oracles.hpp"

#include "bratteli/geodesics.hpp"
#include "bratteli/kms.hpp"

#include <random>

using namespace bratteli;

TEST_CASE("two columns: every seed reaches the barycenter") {
    Diagram d = oracle::load("car_two_columns.json");
    Eigen::Vector2d half(0.5, 0.5);
    for (double beta : {-2.0, -1.0, 0.5, 1.0, 2.0}) {
        for (std::size_t base = 1; base <= 3; ++base) {
            auto seeds = seed_set(2, 6);
            REQUIRE(seeds.size() == 6);
            KmsOptions opt;
            opt.budget = 200;
            opt.tol = 1e-11;
            MultiSeedResult r = kms_multi_seed(d, beta, base, seeds, opt);
            CHECK(r.converged);
            CHECK(r.iterations <= 200);
            CHECK(r.max_residual() < 1e-9);
            for (const auto& s : r.per_seed) CHECK(l1_distance(s.values, half) < 1e-9);
            CHECK(r.agreement < 1e-9);
        }
    }
}

TEST_CASE("gauge route matches Perron and stochastic routes") {
    Diagram d = oracle::load("car_two_columns.json");
    for (double beta : {-1.0, 0.5, 2.0}) {
        PerronData p = perron_block(d, beta);
        REQUIRE(p.applicable);
        for (std::size_t level = 1; level <= 3; ++level) {
            InverseLimitApproximant g = gauge_limit_vector(d, beta, level, 60);
            Eigen::VectorXd t = distribution_from_gauge(d, beta, level, g.values);
            CHECK(l1_distance(t, perron_kms_distribution(d, beta, level)) < 1e-9);
            CHECK(l1_distance(t, Eigen::Vector2d(0.5, 0.5)) < 1e-9);
        }
    }

    Diagram z = oracle::load("zero_potential.json");
    if (perron_block(z, 1.0).applicable) {
        Eigen::VectorXd t = perron_kms_distribution(z, 1.0, 2);
        MultiSeedResult r = kms_multi_seed(z, 1.0, 2, default_seeds(t.size()));
        CHECK(r.converged);
        CHECK(l1_distance(r.per_seed[0].values, t) < 1e-8);
    }
}

TEST_CASE("Perron iteration on a known matrix") {
    Eigen::Matrix2d a;
    a << 2, 1, 1, 2;
    PerronData p = perron_vector(a);
    CHECK(p.lambda == doctest::Approx(3.0).epsilon(1e-12));
    CHECK(p.vector(0) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(is_primitive(a));
    Eigen::Matrix2d perm;
    perm << 0, 1, 1, 0;
    CHECK_FALSE(is_primitive(perm));
}

TEST_CASE("extreme ground states stay out of reach") {
    Diagram d = oracle::load("car_two_columns.json");
    std::size_t pd = 8;
    TightSubdiagram sub = extract_geodesic_subdiagram(d, pd);
    std::vector<double> grid{1, 2, 4, 8, 16};
    for (std::size_t v = 0; v < 2; ++v) {
        REQUIRE(sub.vertex_alive[pd][v]);
        Eigen::VectorXd target = Eigen::VectorXd::Zero(2);
        target(v) = 1.0;
        auto rows = beta_infinity_transport(d, target, grid, pd, pd);
        REQUIRE(rows.size() == grid.size());
        for (const auto& row : rows) {
            CHECK(row.route == "perron");
            CHECK(row.max_distance >= 0.45);
            CHECK(row.max_distance == doctest::Approx(1.0).epsilon(1e-9));
        }
    }
}

TEST_CASE("growing cross: transport approaches the limit family") {
    Diagram d = oracle::load("car_growing_cross.json");
    Eigen::VectorXd target = Eigen::VectorXd::Zero(2);
    target(0) = 1.0;
    auto rows = beta_infinity_transport(d, target, {1, 4, 16}, 10, 6);
    for (const auto& row : rows) {
        CHECK(row.route == "finite");
        for (std::size_t j = 0; j < row.distances.size(); ++j) CHECK(row.distances[j] <= row.bounds[j] + 1e-12);
    }
    CHECK(rows.back().max_distance < rows.front().max_distance);
}

TEST_CASE("random seeds are distinct points of the simplex") {
    auto seeds = seed_set(3, 7);
    CHECK(seeds.size() == 7);
    Eigen::VectorXd a = seeds[4].realise(3), b = seeds[5].realise(3);
    CHECK(a.sum() == doctest::Approx(1.0));
    CHECK((a.array() >= 0.0).all());
    CHECK(l1_distance(a, b) > 1e-3);
    CHECK(l1_distance(a, Seed::random(1).realise(3)) == 0.0);
    CHECK(seed_set(2, 1).size() == 3);
}

TEST_CASE("chain: trivial simplex") {
    Diagram d = oracle::load("chain.json");
    MultiSeedResult r = kms_multi_seed(d, 1.0, 2, default_seeds(1));
    CHECK(r.converged);
    CHECK(r.per_seed[0].values.size() == 1);
    CHECK(r.per_seed[0].values(0) == doctest::Approx(1.0));
}

TEST_CASE("flows agree with enumerated stochastic matrices") {
    std::mt19937_64 rng(17);
    for (int t = 0; t < 10; ++t) {
        Diagram d = oracle::random_diagram(rng, 4, 3, 0);
        for (double beta : {-1.0, 1.0}) {
            Eigen::VectorXd top = Eigen::VectorXd::Constant(d.level_size(4), 1.0 / d.level_size(4));
            Eigen::VectorXd x = top;
            for (std::size_t j = 4; j > 1; --j) x = oracle::stochastic(d, j, beta) * x;
            InverseLimitApproximant a = kms_vertex_distribution(d, beta, 1, 3, Seed::uniform());
            CHECK(l1_distance(a.values, x) < 1e-12);

            auto up = push_up(d, beta, 1, x);
            REQUIRE(up.size() == 2);
            CHECK(up[0](0) == doctest::Approx(1.0));
        }
    }
}

TEST_CASE("diagram end stops the flow") {
    std::mt19937_64 rng(3);
    Diagram d = oracle::random_diagram(rng, 3, 2, 0);
    KmsOptions opt;
    opt.budget = 50;
    MultiSeedResult r = kms_multi_seed(d, 1.0, 1, default_seeds(d.level_size(1)), opt);
    CHECK(r.iterations <= 2);
}
