#pragma once

// Closed-form asymptotic inner-product error bounds, high-dimensional
// (exact max-abs law) refinements, the sub-Gaussian tail bound, and the
// conditional variance proxies for fixed block maxima.

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "blockquant/block_format.hpp"
#include "blockquant/extreme_values.hpp"
#include "blockquant/quadrature.hpp"

namespace blockquant {

enum class BoundRegime { Asymptotic, HighDimensional };

struct BoundQuery {
    ScaleKind kind = ScaleKind::SBFP;
    BoundRegime regime = BoundRegime::Asymptotic;
    int n = 0;
    int p1 = 0;
    int p2 = 0;
    double sigma = 1.0;
    bool normalized = false;  // divide by n for reporting
};

namespace detail {

// ln(4n^2 / (2 pi ln(2n^2/pi))) shared by both asymptotic bounds.
inline double asymptotic_log_factor(int n) {
    if (n < 2) throw std::invalid_argument("asymptotic bound: need n >= 2");
    const double pi = std::numbers::pi;
    const double nn = static_cast<double>(n) * n;
    const double arg = 4.0 * nn / (2.0 * pi * std::log(2.0 * nn / pi));
    if (arg <= 1.0) throw std::invalid_argument("asymptotic bound: log argument <= 1");
    return std::log(arg);
}

inline void check_bound_args(int n, int p1, int p2, double sigma) {
    if (n < 2) throw std::invalid_argument("bound: need n >= 2");
    if (p1 < 2 || p2 < 2) throw std::invalid_argument("bound: need p >= 2");
    if (sigma <= 0.0) throw std::invalid_argument("bound: need sigma > 0");
}

}  // namespace detail

// Variance bound on Delta E_s:
// (sigma^4/8) [2^-2(p1-1) + 2^-2(p2-1)] n ln(4n^2 / (2 pi ln(2n^2/pi))).
inline double sbfp_asymptotic_var_bound(int n, int p1, int p2, double sigma) {
    detail::check_bound_args(n, p1, p2, sigma);
    const double s2 = sigma * sigma;
    const double prec = std::ldexp(1.0, -2 * (p1 - 1)) + std::ldexp(1.0, -2 * (p2 - 1));
    return s2 * s2 / 8.0 * prec * n * detail::asymptotic_log_factor(n);
}

// Variance bound on Delta E_b; equal precisions assumed:
// (sigma^2/4) n 2^(2 ceil(log2(sigma/2^(p-1)) + 1/2 log2 ln(...))).
inline double bfp_asymptotic_var_bound(int n, int p, double sigma) {
    detail::check_bound_args(n, p, p, sigma);
    const double arg = std::log2(sigma / std::ldexp(1.0, p - 1)) +
                       0.5 * std::log2(detail::asymptotic_log_factor(n));
    const int c = static_cast<int>(std::ceil(arg));
    return sigma * sigma / 4.0 * n * std::ldexp(1.0, 2 * c);
}

// (n sigma^4 / 8) E[(Y/alpha1)^2 + (Y/alpha2)^2] with Y ~ f_n at unit sigma.
// The 2-D integral factorizes: each summand integrates to m2(n)/alpha^2.
inline double sbfp_hd_var_bound(int n, int p1, int p2, double sigma) {
    detail::check_bound_args(n, p1, p2, sigma);
    const double a1 = (1 << (p1 - 1)) - 1, a2 = (1 << (p2 - 1)) - 1;
    const double m2 = yn_moment_numeric(n, 1.0, 2);
    const double s2 = sigma * sigma;
    return n * s2 * s2 / 8.0 * (m2 / (a1 * a1) + m2 / (a2 * a2));
}

namespace detail {

// I(alpha) = E[2^(2 ceil(log2(sigma Y / alpha)))], Y ~ f_n at unit sigma,
// evaluated exactly as a sum over ceiling plateaus of the max-abs CDF.
inline double bfp_plateau_mean(int n, double alpha, double sigma) {
    const double hi = max_abs_domain_hi(n);
    int k = ceil_log2(sigma * hi / alpha) + 1;
    double total = 0.0;
    for (int steps = 0; steps < 400; ++steps, --k) {
        const double upper = alpha * std::ldexp(1.0, k) / sigma;
        const double lower = alpha * std::ldexp(1.0, k - 1) / sigma;
        const double mass = max_abs_cdf(upper, n, 1.0) - max_abs_cdf(lower, n, 1.0);
        const double term = std::ldexp(1.0, 2 * k) * std::max(mass, 0.0);
        total += term;
        // plateaus below the bulk contribute geometrically less
        if (total > 0.0 && term < 1e-14 * total && max_abs_cdf(upper, n, 1.0) < 0.5)
            break;
    }
    return total;
}

}  // namespace detail

// (n sigma^2 / 8) E[2^(2 ceil(log2(sigma Y1/alpha1))) + same(alpha2)].
inline double bfp_hd_var_bound(int n, int p1, int p2, double sigma) {
    detail::check_bound_args(n, p1, p2, sigma);
    const double a1 = (1 << (p1 - 1)) - 1, a2 = (1 << (p2 - 1)) - 1;
    return n * sigma * sigma / 8.0 *
           (detail::bfp_plateau_mean(n, a1, sigma) + detail::bfp_plateau_mean(n, a2, sigma));
}

inline double evaluate_bound(const BoundQuery& q) {
    double v = 0.0;
    if (q.regime == BoundRegime::Asymptotic) {
        if (q.kind == ScaleKind::SBFP) {
            v = sbfp_asymptotic_var_bound(q.n, q.p1, q.p2, q.sigma);
        } else {
            if (q.p1 != q.p2)
                throw std::invalid_argument("asymptotic BFP bound assumes p1 == p2");
            v = bfp_asymptotic_var_bound(q.n, q.p1, q.sigma);
        }
    } else {
        v = q.kind == ScaleKind::SBFP ? sbfp_hd_var_bound(q.n, q.p1, q.p2, q.sigma)
                                      : bfp_hd_var_bound(q.n, q.p1, q.p2, q.sigma);
    }
    return q.normalized ? v / q.n : v;
}

struct BoundCurve {
    BoundQuery query;  // template; n varies per row
    std::vector<std::pair<int, double>> rows;
};

inline BoundCurve bound_curve(BoundQuery query, const std::vector<int>& n_list) {
    BoundCurve c;
    c.query = query;
    c.rows.reserve(n_list.size());
    for (int n : n_list) {
        query.n = n;
        c.rows.emplace_back(n, evaluate_bound(query));
    }
    return c;
}

// P[|Delta E| >= t] <= min(1, 2 exp(-t^2 / (4 Var))).
inline double tail_bound(double t, double variance) {
    if (t < 0.0 || variance <= 0.0)
        throw std::invalid_argument("tail_bound: need t >= 0, variance > 0");
    return std::min(1.0, 2.0 * std::exp(-t * t / (4.0 * variance)));
}

// Sub-Gaussian variance proxy of Delta E_s given the block maxima Y1, Y2.
inline double conditional_proxy_sbfp(double y1, double y2, int n, int p1, int p2,
                                     double sigma) {
    detail::check_bound_args(n, p1, p2, sigma);
    if (y1 <= 0.0 || y2 <= 0.0)
        throw std::invalid_argument("conditional proxy: need Y1, Y2 > 0");
    const double a1 = (1 << (p1 - 1)) - 1, a2 = (1 << (p2 - 1)) - 1;
    const double s2 = sigma * sigma;
    const double r1 = y1 / a1, r2 = y2 / a2;
    return (n - 1) * r1 * r1 * s2 / 4.0 + (n - 1) * r2 * r2 * s2 / 4.0 +
           (n - 2) * r1 * r1 * r2 * r2 / 128.0;
}

// Same proxy with each Y/alpha replaced by its covering power of two.
inline double conditional_proxy_bfp(double y1, double y2, int n, int p1, int p2,
                                    double sigma) {
    detail::check_bound_args(n, p1, p2, sigma);
    if (y1 <= 0.0 || y2 <= 0.0)
        throw std::invalid_argument("conditional proxy: need Y1, Y2 > 0");
    const double a1 = (1 << (p1 - 1)) - 1, a2 = (1 << (p2 - 1)) - 1;
    const double s2 = sigma * sigma;
    const double r1 = std::ldexp(1.0, ceil_log2(y1 / a1));
    const double r2 = std::ldexp(1.0, ceil_log2(y2 / a2));
    return (n - 1) * r1 * r1 * s2 / 4.0 + (n - 1) * r2 * r2 * s2 / 4.0 +
           (n - 2) * r1 * r1 * r2 * r2 / 128.0;
}

}  // namespace blockquant
