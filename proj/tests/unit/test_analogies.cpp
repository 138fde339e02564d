#include <doctest.h>

#include <random>

#include "oracles.hpp"
#include "pendsearch/analogies.hpp"
#include "pendsearch/errors.hpp"
#include "pendsearch/powerlaw.hpp"

using namespace pendsearch;

TEST_CASE("plane evolution equals dense evolution on four states")
{
    for (std::size_t marked : {0u, 2u}) {
        const QuantumSystem q(4, marked);
        for (double t : {0.0, 0.3, 1.7, 3.14159, 10.0})
            CHECK(full_evolution(q, t) == doctest::Approx(oracle::marked_probability(4, marked, t)).epsilon(1e-12));
    }
}

TEST_CASE("plane evolution equals dense evolution on 64 states")
{
    const QuantumSystem q(64, 17);
    for (double t : {1.0, 6.0, 12.566})
        CHECK(full_evolution(q, t) == doctest::Approx(oracle::marked_probability(64, 17, t)).epsilon(1e-10));
}

TEST_CASE("evolution is unitary")
{
    const QuantumSystem q(1000, 5);
    for (double t = 0.0; t < 100.0; t += 7.3)
        CHECK(full_evolution_norm(q, t) == doctest::Approx(1.0).epsilon(1e-13));
    CHECK_THROWS_AS(full_evolution(q, -1.0), ValidationError);
    CHECK_THROWS_AS(QuantumSystem(1, 0), ValidationError);
    CHECK_THROWS_AS(QuantumSystem(8, 8), ValidationError);
}

TEST_CASE("two-level approximation")
{
    CHECK(two_level_probability(100, 0.0) == 0.0);
    CHECK(two_level_probability(100, 0.5 * M_PI * 10.0) == doctest::Approx(1.0));
    CHECK(two_level_probability(1, 0.5 * M_PI) == doctest::Approx(1.0));
    const QuantumSystem q(100, 0);
    CHECK(full_evolution(q, 0.0) == doctest::Approx(0.01));
}

TEST_CASE("marked state peaks near (pi/2) sqrt(n)")
{
    const QuantumSystem q(100, 0);
    double best_t = 0.0, best_p = 0.0;
    for (double t = 0.0; t <= 31.4; t += 0.001) {
        const double p = full_evolution(q, t);
        if (p > best_p) {
            best_p = p;
            best_t = t;
        }
    }
    CHECK(best_t == doctest::Approx(5.0 * M_PI).epsilon(0.02));
    CHECK(best_p >= 1.0 - 2.0 / 100.0);
}

TEST_CASE("elastic collisions conserve momentum and energy")
{
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> m(0.1, 100.0), v(-5.0, 5.0);
    for (int i = 0; i < 100; ++i) {
        const double m1 = m(rng), m2 = m(rng), v1 = v(rng), v2 = v(rng);
        const auto [a, b] = elastic_collision(m1, v1, m2, v2);
        CHECK(m1 * a + m2 * b == doctest::Approx(m1 * v1 + m2 * v2).epsilon(1e-12));
        CHECK(m1 * a * a + m2 * b * b == doctest::Approx(m1 * v1 * v1 + m2 * v2 * v2).epsilon(1e-12));
    }
    const auto [a, b] = elastic_collision(1.0, 1.0, 1.0, 0.0);
    CHECK(a == 0.0);
    CHECK(b == 1.0);
    CHECK_THROWS_AS(elastic_collision(0.0, 1.0, 1.0, 1.0), ValidationError);
}

TEST_CASE("collision pump counts")
{
    CHECK(collision_pump(100) == 6);
    for (std::size_t n : {100u, 400u, 1600u, 10000u}) {
        const double r = static_cast<double>(collision_pump(n)) / std::sqrt(static_cast<double>(n));
        CHECK(r >= 0.4);
        CHECK(r <= 0.6);
    }
    const auto speeds = collision_speeds(400);
    CHECK(std::is_sorted(speeds.begin(), speeds.end()));
    CHECK(speeds.back() >= 1.0);
    CHECK(speeds[speeds.size() - 2] < 1.0);
    CHECK_THROWS_AS(collision_pump(3), ValidationError);
}

TEST_CASE("power-law fit")
{
    const auto fit = fit_powerlaw({{1, 1}, {4, 2}, {9, 3}, {16, 4}});
    CHECK(fit.slope == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(fit.intercept == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(fit.stderr_slope < 1e-12);

    const auto flat = fit_powerlaw({{1, 3}, {2, 3}, {5, 3}});
    CHECK(flat.slope == doctest::Approx(0.0));
    CHECK(flat.intercept == doctest::Approx(std::log(3.0)));

    const auto noisy = fit_powerlaw({{1, 1.1}, {2, 1.9}, {4, 4.3}, {8, 7.6}});
    CHECK(noisy.stderr_slope > 0.0);

    CHECK_THROWS_AS(fit_powerlaw({{2, 1}, {2, 3}, {2, 5}}), DegenerateFit);
    CHECK_THROWS_AS(fit_powerlaw({{1, 1}, {2, 2}}), ValidationError);
    CHECK_THROWS_AS(fit_powerlaw({{1, 1}, {2, -2}, {3, 3}}), ValidationError);
}

TEST_CASE("collision count approaches half of sqrt(n)")
{
    for (std::size_t n : {100u, 10000u, 1000000u}) {
        const double r = static_cast<double>(collision_pump(n)) / std::sqrt(static_cast<double>(n));
        if (n == 1000000u) {
            CHECK(r >= 0.45);
            CHECK(r <= 0.55);
        }
        CHECK(collision_pump(n) <= collision_pump(4 * n));
    }
}
