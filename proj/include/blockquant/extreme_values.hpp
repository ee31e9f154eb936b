#pragma once

// Standard-normal primitives, the exact law of the max-abs of n Gaussians,
// its Gumbel asymptotics, and confidence-ribbon data for Y_n / alpha.

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "blockquant/quadrature.hpp"

namespace blockquant {

// Euler-Mascheroni constant to double precision.
inline constexpr double kEulerGamma = 0.57721566490153286;

inline double std_normal_pdf(double x) {
    return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
}

inline double std_normal_cdf(double x) {
    return 0.5 * std::erfc(-x / std::numbers::sqrt2);
}

namespace detail {

// log(2*Phi(u) - 1) for u >= 0, stable for both small and large u.
inline double log_central_mass(double u) {
    if (u <= 0.0) return -std::numeric_limits<double>::infinity();
    if (u < 1.0) return std::log(std::erf(u / std::numbers::sqrt2));
    return std::log1p(-std::erfc(u / std::numbers::sqrt2));
}

}  // namespace detail

// CDF of Y = max_i |X_i|, X_i iid N(0, sigma^2): F_n(y) = [2*Phi(y/s) - 1]^n.
inline double max_abs_cdf(double y, int n, double sigma) {
    if (n < 1 || sigma <= 0.0)
        throw std::invalid_argument("max_abs_cdf: need n >= 1, sigma > 0");
    if (y <= 0.0) return 0.0;
    return std::exp(n * detail::log_central_mass(y / sigma));
}

// Density f_n(y) = (2n/s) phi(y/s) [2 Phi(y/s) - 1]^(n-1), y >= 0.
inline double max_abs_pdf(double y, int n, double sigma) {
    if (n < 1 || sigma <= 0.0)
        throw std::invalid_argument("max_abs_pdf: need n >= 1, sigma > 0");
    if (y < 0.0) return 0.0;
    const double u = y / sigma;
    const double lead = 2.0 * n / sigma * std_normal_pdf(u);
    if (n == 1) return lead;
    const double lb = detail::log_central_mass(u);
    return std::isinf(lb) ? 0.0 : lead * std::exp((n - 1) * lb);
}

struct GumbelParams {
    double mu = 0.0;    // location
    double beta = 0.0;  // Gumbel scale (named beta: sigma is the population sd)
    int n = 0;
    double population_sigma = 1.0;
};

inline double gumbel_pdf(double x, double mu, double beta) {
    if (beta <= 0.0) throw std::invalid_argument("gumbel_pdf: beta must be > 0");
    const double z = (x - mu) / beta;
    return std::exp(-(z + std::exp(-z))) / beta;
}

inline double gumbel_cdf(double x, double mu, double beta) {
    if (beta <= 0.0) throw std::invalid_argument("gumbel_cdf: beta must be > 0");
    return std::exp(-std::exp(-(x - mu) / beta));
}

// Asymptotic Gumbel parameters of the max (absolute = max |X_i|, otherwise
// max X_i) of n iid N(0, sigma^2) draws, o(.) terms dropped. The absolute
// law at n coincides with the signed law at 2n.
inline GumbelParams gumbel_params(int n, double sigma, bool absolute) {
    if (n < 2)
        throw std::invalid_argument("gumbel_params: asymptotic formulas need n >= 2");
    if (sigma <= 0.0) throw std::invalid_argument("gumbel_params: sigma must be > 0");
    const double pi = std::numbers::pi;
    const double a = absolute ? 2.0 * n * static_cast<double>(n) / pi
                              : n * static_cast<double>(n) / (2.0 * pi);
    const double mu = std::sqrt(std::log(a / std::log(a)));
    const double denom = absolute ? std::log(2.0 * n) : std::log(static_cast<double>(n));
    return {sigma * mu, sigma * mu / denom, n, sigma};
}

// Closed-form asymptotic mean and variance of Y_n = max |X_i|:
// mean = mu + gamma*beta, variance = (pi^2/6) beta^2.
inline std::pair<double, double> yn_mean_var(int n, double sigma) {
    const GumbelParams g = gumbel_params(n, sigma, /*absolute=*/true);
    const double pi = std::numbers::pi;
    return {g.mu + kEulerGamma * g.beta, pi * pi / 6.0 * g.beta * g.beta};
}

// Quadrature domain upper end for f_n at unit sigma; omitted tail < 1e-12.
inline double max_abs_domain_hi(int n) {
    return std::sqrt(2.0 * std::log(2.0 * n + 1.0)) + 8.0;
}

// k-th moment of Y_n by adaptive quadrature, relative tolerance 1e-9.
inline double yn_moment_numeric(int n, double sigma, int k) {
    if (n < 1 || sigma <= 0.0 || k < 0)
        throw std::invalid_argument("yn_moment_numeric: need n >= 1, sigma > 0, k >= 0");
    const double hi = max_abs_domain_hi(n);
    auto integrand = [n, k](double y) {
        return std::pow(y, k) * max_abs_pdf(y, n, 1.0);
    };
    // split at the bulk of the density so the outer panels see the peak
    const double mode = std::sqrt(2.0 * std::log(2.0 * n + 1.0));
    const double cut = std::min(std::max(mode, 0.5), hi - 1.0);
    const double unit = integrate(integrand, 0.0, cut) + integrate(integrand, cut, hi);
    return unit * std::pow(sigma, k);
}

struct RibbonRow {
    int n = 0;
    double mean = 0.0;  // E[Y_n / alpha]
    double sd = 0.0;    // sd[Y_n / alpha]
};

// Mean and standard deviation of Y_n / alpha per block size. Numeric moments
// by default; `asymptotic` switches to the closed-form Gumbel values.
inline std::vector<RibbonRow> ribbon(const std::vector<int>& n_list, int precision,
                                     double sigma, bool asymptotic = false) {
    if (precision < 2) throw std::invalid_argument("ribbon: precision must be >= 2");
    const double alpha = (1 << (precision - 1)) - 1;
    std::vector<RibbonRow> rows;
    rows.reserve(n_list.size());
    for (int n : n_list) {
        if (n < 1) throw std::invalid_argument("ribbon: block sizes must be >= 1");
        double mean, var;
        if (asymptotic) {
            std::tie(mean, var) = yn_mean_var(n, sigma);
        } else {
            mean = yn_moment_numeric(n, sigma, 1);
            const double m2 = yn_moment_numeric(n, sigma, 2);
            var = std::max(m2 - mean * mean, 0.0);
        }
        rows.push_back({n, mean / alpha, std::sqrt(var) / alpha});
    }
    return rows;
}

}  // namespace blockquant
