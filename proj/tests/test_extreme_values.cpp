#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "blockquant/extreme_values.hpp"
#include "blockquant/monte_carlo.hpp"
#include "blockquant/quadrature.hpp"

using namespace blockquant;

TEST_CASE("standard normal primitives") {
    CHECK(std_normal_pdf(0.0) == doctest::Approx(0.3989422804014327).epsilon(1e-14));
    CHECK(std_normal_cdf(0.0) == doctest::Approx(0.5).epsilon(1e-14));
    // symmetry over sampled points
    for (double x = -8.0; x <= 8.0; x += 0.37)
        CHECK(std_normal_cdf(x) + std_normal_cdf(-x) == doctest::Approx(1.0).epsilon(1e-12));
    // accuracy contract vs erfc identity at a few tabled points
    CHECK(std_normal_cdf(1.0) == doctest::Approx(0.8413447460685429).epsilon(1e-12));
    CHECK(std_normal_cdf(-3.0) == doctest::Approx(0.0013498980316300933).epsilon(1e-9));
}

TEST_CASE("max_abs_pdf special cases") {
    // n=1 is half-normal
    for (double y : {0.1, 0.7, 2.3})
        CHECK(max_abs_pdf(y, 1, 1.0) == doctest::Approx(2.0 * std_normal_pdf(y)).epsilon(1e-13));
    CHECK(max_abs_pdf(-0.5, 1, 1.0) == 0.0);
    CHECK(max_abs_pdf(0.0, 2, 1.0) == 0.0);
    CHECK(max_abs_pdf(0.0, 1024, 1.0) == 0.0);
}

TEST_CASE("max_abs density integrates to one") {
    for (int n : {1, 16, 1024}) {
        const double hi = max_abs_domain_hi(n);
        const double cut = std::min(std::sqrt(2.0 * std::log(2.0 * n + 1.0)), hi - 1.0);
        auto f = [n](double y) { return max_abs_pdf(y, n, 1.0); };
        const double total = integrate(f, 0.0, cut) + integrate(f, cut, hi);
        CHECK(total == doctest::Approx(1.0).epsilon(1e-9));
    }
}

TEST_CASE("max_abs cdf properties") {
    // nondecreasing, limits, pdf == d cdf / dy numerically
    for (int n : {1, 8, 200}) {
        double prev = 0.0;
        for (double y = 0.0; y <= 8.0; y += 0.05) {
            const double c = max_abs_cdf(y, n, 1.0);
            CHECK(c >= prev);
            prev = c;
        }
        CHECK(max_abs_cdf(-1e-9, n, 1.0) == 0.0);
        CHECK(max_abs_cdf(50.0, n, 1.0) == doctest::Approx(1.0).epsilon(1e-12));
        for (double y : {0.5, 1.5, 2.5, 3.5}) {
            const double h = 1e-6;
            const double num = (max_abs_cdf(y + h, n, 1.0) - max_abs_cdf(y - h, n, 1.0)) / (2 * h);
            CHECK(max_abs_pdf(y, n, 1.0) == doctest::Approx(num).epsilon(1e-6));
        }
    }
    // stochastic dominance in n
    for (double y : {0.5, 1.0, 2.0, 3.0})
        for (int n1 : {1, 4, 32})
            CHECK(max_abs_cdf(y, 4 * n1, 1.0) <= max_abs_cdf(y, n1, 1.0));
}

TEST_CASE("sigma scaling of the max-abs law") {
    for (double y : {0.5, 2.0})
        CHECK(max_abs_cdf(y, 16, 1.0) == doctest::Approx(max_abs_cdf(2 * y, 16, 2.0)).epsilon(1e-13));
}

TEST_CASE("gumbel pdf") {
    CHECK(gumbel_pdf(0.0, 0.0, 1.0) == doctest::Approx(std::exp(-1.0)).epsilon(1e-14));
    CHECK(gumbel_pdf(2.5, 2.5, 0.7) == doctest::Approx(std::exp(-1.0) / 0.7).epsilon(1e-14));
    CHECK_THROWS_AS(gumbel_pdf(0.0, 0.0, -1.0), std::invalid_argument);
    const double mu = 1.3, beta = 0.6;
    auto f = [&](double x) { return gumbel_pdf(x, mu, beta); };
    const double total = integrate(f, mu - 20 * beta, mu) + integrate(f, mu, mu + 40 * beta);
    CHECK(total == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("gumbel_params frozen values") {
    const GumbelParams g1024 = gumbel_params(1024, 1.0, true);
    CHECK(g1024.mu == doctest::Approx(3.2887).epsilon(1e-4));
    CHECK(g1024.beta == doctest::Approx(0.4313).epsilon(1e-4));
    const GumbelParams g8 = gumbel_params(8, 1.0, true);
    CHECK(g8.mu == doctest::Approx(1.5482).epsilon(1e-4));
    CHECK(g8.beta == doctest::Approx(0.5584).epsilon(1e-4));
    CHECK_THROWS_AS(gumbel_params(1, 1.0, true), std::invalid_argument);
}

TEST_CASE("absolute-max params at n equal signed-max params at 2n") {
    for (int n : {2, 8, 100, 4096}) {
        const GumbelParams a = gumbel_params(n, 1.0, true);
        const GumbelParams s = gumbel_params(2 * n, 1.0, false);
        CHECK(a.mu == doctest::Approx(s.mu).epsilon(1e-13));
        CHECK(a.beta == doctest::Approx(s.beta).epsilon(1e-13));
    }
}

TEST_CASE("yn_mean_var frozen values and scaling") {
    auto [m1024, v1024] = yn_mean_var(1024, 1.0);
    CHECK(m1024 == doctest::Approx(3.5377).epsilon(1e-4));
    CHECK(v1024 == doctest::Approx(0.3061).epsilon(1e-3));
    auto [m8, v8] = yn_mean_var(8, 1.0);
    CHECK(m8 == doctest::Approx(1.8705).epsilon(1e-4));
    auto [ms, vs] = yn_mean_var(100, 2.5);
    auto [mu_, vu] = yn_mean_var(100, 1.0);
    CHECK(ms == doctest::Approx(2.5 * mu_).epsilon(1e-13));
    CHECK(vs == doctest::Approx(2.5 * 2.5 * vu).epsilon(1e-13));
    CHECK_THROWS_AS(yn_mean_var(1, 1.0), std::invalid_argument);
}

TEST_CASE("yn_moment_numeric analytic cases") {
    CHECK(yn_moment_numeric(1, 1.0, 1) ==
          doctest::Approx(std::sqrt(2.0 / std::numbers::pi)).epsilon(1e-9));
    CHECK(yn_moment_numeric(1, 1.0, 2) == doctest::Approx(1.0).epsilon(1e-9));
    // the dropped-o(.) closed form sits ~2.8% above the exact moment here
    const double numeric = yn_moment_numeric(1024, 1.0, 1);
    CHECK(numeric == doctest::Approx(3.4418702805).epsilon(1e-7));
    CHECK(std::fabs(yn_mean_var(1024, 1.0).first - numeric) / numeric < 0.03);
    // sigma homogeneity
    CHECK(yn_moment_numeric(16, 3.0, 2) ==
          doctest::Approx(9.0 * yn_moment_numeric(16, 1.0, 2)).epsilon(1e-9));
}

TEST_CASE("empirical max-abs mean matches numeric moment") {
    for (int n : {8, 64}) {
        const std::uint64_t trials = 20000;
        double sum = 0.0, sq = 0.0;
        for (std::uint64_t t = 0; t < trials; ++t) {
            GaussianStream g(mix64(777 + n, t));
            double y = 0.0;
            for (int i = 0; i < n; ++i) y = std::max(y, std::fabs(g.next()));
            sum += y;
            sq += y * y;
        }
        const double mean = sum / trials;
        const double sd = std::sqrt((sq - sum * sum / trials) / (trials - 1.0));
        const double se = sd / std::sqrt(static_cast<double>(trials));
        CHECK(std::fabs(mean - yn_moment_numeric(n, 1.0, 1)) < 3 * se);
    }
}

TEST_CASE("ribbon values and monotonicity") {
    const auto rows = ribbon({1, 2, 4, 8, 16, 64}, 4, 1.0);
    CHECK(rows[0].mean == doctest::Approx(0.7978845608 / 7.0).epsilon(1e-8));
    for (std::size_t i = 1; i < rows.size(); ++i) CHECK(rows[i].mean > rows[i - 1].mean);
    // asymptotic mode matches the closed form
    const auto arows = ribbon({1024}, 4, 1.0, /*asymptotic=*/true);
    CHECK(arows[0].mean == doctest::Approx(3.5376211372 / 7.0).epsilon(1e-9));
}
