#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <vector>

#include "blockquant/monte_carlo.hpp"

using namespace blockquant;

namespace {

SimulationConfig base_config() {
    SimulationConfig cfg;
    cfg.kind = ScaleKind::SBFP;
    cfg.p1 = cfg.p2 = 4;
    cfg.n = 64;
    cfg.sigma = 1.0;
    cfg.trials = 40000;
    cfg.seed = 123;
    return cfg;
}

}  // namespace

TEST_CASE("config validation") {
    SimulationConfig cfg = base_config();
    cfg.n = 0;
    CHECK_THROWS_AS(simulate_error(cfg), std::invalid_argument);
    cfg = base_config();
    cfg.p1 = 1;
    CHECK_THROWS_AS(simulate_error(cfg), std::invalid_argument);
    cfg = base_config();
    cfg.trials = 1;
    CHECK_THROWS_AS(simulate_error(cfg), std::invalid_argument);
    cfg = base_config();
    cfg.sigma = -1.0;
    CHECK_THROWS_AS(simulate_error(cfg), std::invalid_argument);
}

TEST_CASE("identical seeds give bit-identical results") {
    const SimulationConfig cfg = base_config();
    const ErrorStats a = simulate_error(cfg);
    const ErrorStats b = simulate_error(cfg);
    CHECK(a.mean == b.mean);
    CHECK(a.variance == b.variance);
    CHECK(a.trials == cfg.trials);

    SimulationConfig other = cfg;
    other.seed = 124;
    const ErrorStats c = simulate_error(other);
    CHECK(c.variance != a.variance);
}

TEST_CASE("results do not depend on the worker count") {
    const SimulationConfig cfg = base_config();
    setenv("BLOCKQUANT_THREADS", "1", 1);
    const ErrorStats serial = simulate_error(cfg);
    setenv("BLOCKQUANT_THREADS", "5", 1);
    const ErrorStats parallel = simulate_error(cfg);
    unsetenv("BLOCKQUANT_THREADS");
    CHECK(serial.mean == parallel.mean);
    CHECK(serial.variance == parallel.variance);
}

TEST_CASE("gaussian stream moments") {
    GaussianStream g(42);
    const std::uint64_t draws = 1000000;
    double s1 = 0.0, s2 = 0.0, s3 = 0.0, s4 = 0.0;
    for (std::uint64_t i = 0; i < draws; ++i) {
        const double x = g.next();
        s1 += x;
        s2 += x * x;
        s3 += x * x * x;
        s4 += x * x * x * x;
    }
    const double inv = 1.0 / draws;
    const double rt = std::sqrt(static_cast<double>(draws));
    // standard errors: 1/sqrt(N), sqrt(2/N), sqrt(15/N), sqrt(96/N)
    CHECK(std::fabs(s1 * inv) < 4.0 / rt);
    CHECK(std::fabs(s2 * inv - 1.0) < 4.0 * std::sqrt(2.0) / rt);
    CHECK(std::fabs(s3 * inv) < 4.0 * std::sqrt(15.0) / rt);
    CHECK(std::fabs(s4 * inv - 3.0) < 4.0 * std::sqrt(96.0) / rt);
}

TEST_CASE("error mean is near zero") {
    SimulationConfig cfg = base_config();
    cfg.trials = 100000;
    for (ScaleKind kind : {ScaleKind::SBFP, ScaleKind::BFP}) {
        cfg.kind = kind;
        const ErrorStats st = simulate_error(cfg);
        const double se_mean = std::sqrt(st.variance / st.trials);
        CHECK(std::fabs(st.mean) < 4.0 * se_mean);
    }
}

TEST_CASE("variance drops about fourfold per extra bit") {
    SimulationConfig cfg = base_config();
    cfg.trials = 200000;
    cfg.p1 = cfg.p2 = 4;
    const double v4 = simulate_error(cfg).variance;
    cfg.p1 = cfg.p2 = 5;
    cfg.seed = 321;
    const double v5 = simulate_error(cfg).variance;
    const double ratio = v4 / v5;
    CHECK(ratio > 3.4);
    CHECK(ratio < 4.7);
}

TEST_CASE("precision order does not matter statistically") {
    SimulationConfig cfg = base_config();
    cfg.trials = 100000;
    cfg.p1 = 4;
    cfg.p2 = 6;
    const ErrorStats a = simulate_error(cfg);
    cfg.p1 = 6;
    cfg.p2 = 4;
    cfg.seed = 777;
    const ErrorStats b = simulate_error(cfg);
    const double slack = 3.0 * std::sqrt(a.std_error_of_variance * a.std_error_of_variance +
                                         b.std_error_of_variance * b.std_error_of_variance);
    CHECK(std::fabs(a.variance - b.variance) < slack);
}

TEST_CASE("sweep rows match standalone runs and come sorted") {
    const auto rows = sweep({64, 16}, {5, 4}, ScaleKind::SBFP, 1.0, 20000, 99);
    REQUIRE(rows.size() == 4);
    CHECK(rows[0].p == 4);
    CHECK(rows[0].n == 16);
    CHECK(rows[3].p == 5);
    CHECK(rows[3].n == 64);
    for (const auto& r : rows) {
        SimulationConfig cfg;
        cfg.kind = ScaleKind::SBFP;
        cfg.p1 = cfg.p2 = r.p;
        cfg.n = r.n;
        cfg.trials = 20000;
        cfg.seed = mix64(mix64(99, 0),
                         mix64(static_cast<std::uint64_t>(r.p), static_cast<std::uint64_t>(r.n)));
        const ErrorStats st = simulate_error(cfg);
        CHECK(r.variance == st.variance);
        CHECK(r.normalized_variance == doctest::Approx(st.variance / r.n).epsilon(1e-15));
    }
    CHECK_THROWS_AS(sweep({}, {4}, ScaleKind::SBFP, 1.0, 100, 0), std::invalid_argument);
}
