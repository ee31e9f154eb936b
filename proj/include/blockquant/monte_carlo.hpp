#pragma once

// Seeded Monte Carlo simulation of Gaussian block pairs and their
// quantized inner-product errors.
//
// Reproducibility contract: trial t of a run draws from a generator keyed
// by (seed, t) only, so results are bit-identical regardless of worker
// count or scheduling. Normal variates come from the Marsaglia polar
// transform applied to a xoshiro256++ stream (fixed here because the
// transform choice affects bit-reproducibility).

#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "blockquant/block_format.hpp"

namespace blockquant {

inline std::uint64_t splitmix64(std::uint64_t& state) {
    state += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

// Order-sensitive combiner for deriving substream keys.
inline std::uint64_t mix64(std::uint64_t a, std::uint64_t b) {
    std::uint64_t s = a;
    s = splitmix64(s) ^ b;
    return splitmix64(s);
}

class Xoshiro256pp {
public:
    explicit Xoshiro256pp(std::uint64_t key) {
        for (auto& w : s_) w = splitmix64(key);
    }
    std::uint64_t next() {
        const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
        const std::uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }
    // uniform double in [0, 1)
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) {
        return (x << k) | (x >> (64 - k));
    }
    std::uint64_t s_[4];
};

// Standard-normal stream via the polar method.
class GaussianStream {
public:
    explicit GaussianStream(std::uint64_t key) : rng_(key) {}
    double next() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u, v, s;
        do {
            u = 2.0 * rng_.uniform() - 1.0;
            v = 2.0 * rng_.uniform() - 1.0;
            s = u * u + v * v;
        } while (s >= 1.0 || s == 0.0);
        const double f = std::sqrt(-2.0 * std::log(s) / s);
        spare_ = v * f;
        has_spare_ = true;
        return u * f;
    }

private:
    Xoshiro256pp rng_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

struct SimulationConfig {
    ScaleKind kind = ScaleKind::SBFP;
    int p1 = 4;
    int p2 = 4;
    int n = 64;
    double sigma = 1.0;
    std::uint64_t trials = 100000;
    std::uint64_t seed = 0;

    void validate() const {
        if (n < 1) throw std::invalid_argument("SimulationConfig: n must be >= 1");
        if (p1 < 2 || p2 < 2) throw std::invalid_argument("SimulationConfig: p must be >= 2");
        if (sigma <= 0.0) throw std::invalid_argument("SimulationConfig: sigma must be > 0");
        if (trials < 2) throw std::invalid_argument("SimulationConfig: trials must be >= 2");
    }
};

struct ErrorStats {
    double mean = 0.0;
    double variance = 0.0;  // unbiased, divisor trials - 1
    std::uint64_t trials = 0;
    double std_error_of_variance = 0.0;  // sqrt(2/(trials-1)) * variance
};

inline unsigned worker_count() {
    if (const char* env = std::getenv("BLOCKQUANT_THREADS")) {
        const long v = std::strtol(env, nullptr, 10);
        if (v >= 1) return static_cast<unsigned>(v);
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? hw : 1;
}

namespace detail {

// One trial: draw a pair of N(0, sigma^2) blocks from the substream keyed by
// (seed, trial) and return the inner-product quantization error Delta E.
// Fused (no per-trial allocation); mantissa arithmetic matches the
// format-core codecs bit for bit.
inline double trial_error(const SimulationConfig& cfg, std::uint64_t trial,
                          double* x1, double* x2) {
    GaussianStream g(mix64(cfg.seed, trial));
    const int n = cfg.n;
    double y1 = 0.0, y2 = 0.0, exact = 0.0;
    for (int i = 0; i < n; ++i) {
        x1[i] = cfg.sigma * g.next();
        x2[i] = cfg.sigma * g.next();
        y1 = std::max(y1, std::fabs(x1[i]));
        y2 = std::max(y2, std::fabs(x2[i]));
        exact += x1[i] * x2[i];
    }
    if (y1 == 0.0 || y2 == 0.0) return exact;
    const int a1 = (1 << (cfg.p1 - 1)) - 1;
    const int a2 = (1 << (cfg.p2 - 1)) - 1;
    double s1, s2;
    std::int64_t acc = 0;
    if (cfg.kind == ScaleKind::SBFP) {
        s1 = y1 / a1;
        s2 = y2 / a2;
        for (int i = 0; i < n; ++i) {
            const std::int64_t m1 = detail::round_mantissa(a1 * x1[i] / y1, a1);
            const std::int64_t m2 = detail::round_mantissa(a2 * x2[i] / y2, a2);
            acc += m1 * m2;
        }
    } else {
        s1 = std::ldexp(1.0, ceil_log2(y1 / a1));
        s2 = std::ldexp(1.0, ceil_log2(y2 / a2));
        for (int i = 0; i < n; ++i) {
            const std::int64_t m1 = detail::round_mantissa(x1[i] / s1, a1);
            const std::int64_t m2 = detail::round_mantissa(x2[i] / s2, a2);
            acc += m1 * m2;
        }
    }
    return exact - s1 * s2 * static_cast<double>(acc);
}

struct ChunkSums {
    double sum = 0.0;
    double sum_sq = 0.0;
};

}  // namespace detail

inline ErrorStats simulate_error(const SimulationConfig& cfg) {
    cfg.validate();
    constexpr std::uint64_t kChunk = 1024;  // fixed grain keeps reduction order stable
    const std::uint64_t chunks = (cfg.trials + kChunk - 1) / kChunk;
    std::vector<detail::ChunkSums> partial(chunks);

    const unsigned workers =
        static_cast<unsigned>(std::min<std::uint64_t>(worker_count(), chunks));
    std::atomic<std::uint64_t> next_chunk{0};
    auto run = [&] {
        std::vector<double> x1(cfg.n), x2(cfg.n);
        for (;;) {
            const std::uint64_t c = next_chunk.fetch_add(1);
            if (c >= chunks) break;
            const std::uint64_t lo = c * kChunk;
            const std::uint64_t hi = std::min(lo + kChunk, cfg.trials);
            detail::ChunkSums sums;
            for (std::uint64_t t = lo; t < hi; ++t) {
                const double e = detail::trial_error(cfg, t, x1.data(), x2.data());
                sums.sum += e;
                sums.sum_sq += e * e;
            }
            partial[c] = sums;
        }
    };
    if (workers <= 1) {
        run();
    } else {
        std::vector<std::thread> pool;
        for (unsigned w = 0; w < workers; ++w) pool.emplace_back(run);
        for (auto& th : pool) th.join();
    }

    double sum = 0.0, sum_sq = 0.0;  // fixed chunk order => bit-stable totals
    for (const auto& c : partial) {
        sum += c.sum;
        sum_sq += c.sum_sq;
    }
    ErrorStats st;
    st.trials = cfg.trials;
    const double nd = static_cast<double>(cfg.trials);
    st.mean = sum / nd;
    st.variance = std::max((sum_sq - sum * sum / nd) / (nd - 1.0), 0.0);
    st.std_error_of_variance = std::sqrt(2.0 / (nd - 1.0)) * st.variance;
    return st;
}

struct SweepRow {
    int n = 0;
    int p = 0;
    double variance = 0.0;
    double std_error = 0.0;
    double normalized_variance = 0.0;
    double mean = 0.0;
};

// One simulate_error per (n, p) grid point, each with a seed derived from
// (seed, kind, p, n). Rows come out sorted by (p, n).
inline std::vector<SweepRow> sweep(std::vector<int> n_list, std::vector<int> p_list,
                                   ScaleKind kind, double sigma, std::uint64_t trials,
                                   std::uint64_t seed) {
    if (n_list.empty() || p_list.empty())
        throw std::invalid_argument("sweep: empty grid");
    std::sort(n_list.begin(), n_list.end());
    std::sort(p_list.begin(), p_list.end());
    std::vector<SweepRow> rows;
    rows.reserve(n_list.size() * p_list.size());
    for (int p : p_list) {
        for (int n : n_list) {
            SimulationConfig cfg;
            cfg.kind = kind;
            cfg.p1 = cfg.p2 = p;
            cfg.n = n;
            cfg.sigma = sigma;
            cfg.trials = trials;
            cfg.seed = mix64(mix64(seed, static_cast<std::uint64_t>(kind == ScaleKind::BFP)),
                             mix64(static_cast<std::uint64_t>(p), static_cast<std::uint64_t>(n)));
            const ErrorStats st = simulate_error(cfg);
            rows.push_back({n, p, st.variance, st.std_error_of_variance,
                            st.variance / n, st.mean});
        }
    }
    return rows;
}

}  // namespace blockquant
