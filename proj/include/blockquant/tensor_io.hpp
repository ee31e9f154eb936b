#pragma once

// Weight-tensor file I/O (rawbin and csv) and the layer-pair inner-product
// error experiment: quantize the rows of A and columns of B along the
// shared k dimension, take the diagonal block-pair scalar products, and
// compare the per-block error variance with the high-dimensional bounds.

#include <array>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "blockquant/block_format.hpp"
#include "blockquant/bounds.hpp"
#include "blockquant/monte_carlo.hpp"

namespace blockquant {

struct WeightTensor {
    std::string name;
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<float> values;  // row-major

    std::size_t size() const { return rows * cols; }
};

enum class TensorFileFormat { Rawbin, Csv };

inline constexpr std::array<char, 8> kRawbinMagic = {'B', 'Q', 'T', 'E', 'N', 'S', 'R', '1'};

namespace detail {

inline void put_u64_le(std::ostream& os, std::uint64_t v) {
    unsigned char buf[8];
    for (int i = 0; i < 8; ++i) buf[i] = static_cast<unsigned char>(v >> (8 * i));
    os.write(reinterpret_cast<const char*>(buf), 8);
}

inline std::uint64_t get_u64_le(std::istream& is) {
    unsigned char buf[8];
    is.read(reinterpret_cast<char*>(buf), 8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
    return v;
}

}  // namespace detail

inline void save_rawbin(const WeightTensor& t, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("save_rawbin: cannot open " + path);
    os.write(kRawbinMagic.data(), kRawbinMagic.size());
    detail::put_u64_le(os, t.rows);
    detail::put_u64_le(os, t.cols);
    static_assert(sizeof(float) == 4);
    // host is little-endian; values are IEEE-754 binary32 LE on disk
    os.write(reinterpret_cast<const char*>(t.values.data()),
             static_cast<std::streamsize>(t.values.size() * 4));
    if (!os) throw std::runtime_error("save_rawbin: write failed for " + path);
}

inline void save_csv(const WeightTensor& t, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("save_csv: cannot open " + path);
    os.precision(9);
    for (std::size_t r = 0; r < t.rows; ++r) {
        for (std::size_t c = 0; c < t.cols; ++c) {
            if (c) os << ',';
            os << t.values[r * t.cols + c];
        }
        os << '\n';
    }
    if (!os) throw std::runtime_error("save_csv: write failed for " + path);
}

inline WeightTensor load_rawbin(const std::string& path) {
    std::ifstream is(path, std::ios::binary | std::ios::ate);
    if (!is) throw std::runtime_error("load_rawbin: cannot open " + path);
    const std::uint64_t file_size = static_cast<std::uint64_t>(is.tellg());
    is.seekg(0);
    std::array<char, 8> magic{};
    is.read(magic.data(), magic.size());
    if (!is || magic != kRawbinMagic)
        throw std::runtime_error("load_rawbin: bad magic in " + path);
    const std::uint64_t rows = detail::get_u64_le(is);
    const std::uint64_t cols = detail::get_u64_le(is);
    if (!is) throw std::runtime_error("load_rawbin: truncated header in " + path);
    const std::uint64_t expect = 24 + rows * cols * 4;
    if (file_size != expect)
        throw std::runtime_error("load_rawbin: truncated payload in " + path + ": expected " +
                                 std::to_string(expect) + " bytes, got " +
                                 std::to_string(file_size));
    WeightTensor t;
    t.name = path;
    t.rows = rows;
    t.cols = cols;
    t.values.resize(rows * cols);
    is.read(reinterpret_cast<char*>(t.values.data()),
            static_cast<std::streamsize>(t.values.size() * 4));
    if (!is) throw std::runtime_error("load_rawbin: read failed for " + path);
    for (float v : t.values)
        if (!std::isfinite(v))
            throw std::runtime_error("load_rawbin: non-finite value in " + path);
    return t;
}

inline WeightTensor load_csv(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("load_csv: cannot open " + path);
    WeightTensor t;
    t.name = path;
    std::string line;
    std::size_t row = 0;
    while (std::getline(is, line)) {
        if (line.empty() && is.eof()) break;
        std::stringstream ss(line);
        std::string cell;
        std::size_t cols = 0;
        while (std::getline(ss, cell, ',')) {
            std::size_t pos = 0;
            float v = 0.0f;
            try {
                v = std::stof(cell, &pos);
            } catch (const std::exception&) {
                throw std::runtime_error("load_csv: bad number '" + cell + "' at row " +
                                         std::to_string(row) + " in " + path);
            }
            if (!std::isfinite(v))
                throw std::runtime_error("load_csv: non-finite value at row " +
                                         std::to_string(row) + " in " + path);
            t.values.push_back(v);
            ++cols;
        }
        if (row == 0) {
            t.cols = cols;
        } else if (cols != t.cols) {
            throw std::runtime_error("load_csv: ragged row " + std::to_string(row) + " in " +
                                     path + " (" + std::to_string(cols) + " vs " +
                                     std::to_string(t.cols) + " columns)");
        }
        ++row;
    }
    t.rows = row;
    if (t.rows == 0 || t.cols == 0)
        throw std::runtime_error("load_csv: empty tensor in " + path);
    return t;
}

inline WeightTensor load_tensor(const std::string& path, TensorFileFormat format) {
    return format == TensorFileFormat::Rawbin ? load_rawbin(path) : load_csv(path);
}

inline void save_tensor(const WeightTensor& t, const std::string& path,
                        TensorFileFormat format) {
    format == TensorFileFormat::Rawbin ? save_rawbin(t, path) : save_csv(t, path);
}

// Synthetic N(0, sigma^2) tensor; row r draws from the substream (seed, r).
inline WeightTensor make_gaussian_tensor(const std::string& name, std::size_t rows,
                                         std::size_t cols, double sigma,
                                         std::uint64_t seed) {
    WeightTensor t;
    t.name = name;
    t.rows = rows;
    t.cols = cols;
    t.values.resize(rows * cols);
    for (std::size_t r = 0; r < rows; ++r) {
        GaussianStream g(mix64(seed, r));
        for (std::size_t c = 0; c < cols; ++c)
            t.values[r * cols + c] = static_cast<float>(sigma * g.next());
    }
    return t;
}

struct LayerPairReport {
    std::string layer_id;
    int n = 0;
    int p = 0;
    std::uint64_t sample_count = 0;  // aligned block-pair Delta E samples
    double sigma_hat = 0.0;          // pooled sd over both tensors' entries
    double var_sbfp = 0.0;           // normalized per block (variance / n)
    double var_bfp = 0.0;
    double std_error_sbfp = 0.0;     // of the normalized variance
    double std_error_bfp = 0.0;
    double bound_sbfp = 0.0;         // normalized HD bounds at sigma_hat
    double bound_bfp = 0.0;
};

namespace detail {

inline double block_pair_error(const double* a, const double* b, std::size_t len,
                               int p, ScaleKind kind) {
    double y1 = 0.0, y2 = 0.0, exact = 0.0;
    for (std::size_t i = 0; i < len; ++i) {
        y1 = std::max(y1, std::fabs(a[i]));
        y2 = std::max(y2, std::fabs(b[i]));
        exact += a[i] * b[i];
    }
    if (y1 == 0.0 || y2 == 0.0) return exact;
    const int alpha = (1 << (p - 1)) - 1;
    double s1, s2;
    std::int64_t acc = 0;
    if (kind == ScaleKind::SBFP) {
        s1 = y1 / alpha;
        s2 = y2 / alpha;
        for (std::size_t i = 0; i < len; ++i)
            acc += static_cast<std::int64_t>(round_mantissa(alpha * a[i] / y1, alpha)) *
                   round_mantissa(alpha * b[i] / y2, alpha);
    } else {
        s1 = std::ldexp(1.0, ceil_log2(y1 / alpha));
        s2 = std::ldexp(1.0, ceil_log2(y2 / alpha));
        for (std::size_t i = 0; i < len; ++i)
            acc += static_cast<std::int64_t>(round_mantissa(a[i] / s1, alpha)) *
                   round_mantissa(b[i] / s2, alpha);
    }
    return exact - s1 * s2 * static_cast<double>(acc);
}

}  // namespace detail

// A is m x k, B is k x m; row i of A meets column i of B (the diagonal of
// the operator product). Each aligned length-n block pair contributes one
// Delta E sample; short tails get their own scale.
inline LayerPairReport analyze_layer_pair(const WeightTensor& a, const WeightTensor& b,
                                          int n, int p, bool center = false) {
    if (a.cols != b.rows)
        throw std::invalid_argument("analyze_layer_pair: inner dimensions mismatch (" +
                                    std::to_string(a.cols) + " vs " +
                                    std::to_string(b.rows) + ")");
    if (n < 1 || p < 2)
        throw std::invalid_argument("analyze_layer_pair: need n >= 1, p >= 2");
    const std::size_t k = a.cols;
    const std::size_t diag = std::min(a.rows, b.cols);
    if (diag == 0) throw std::invalid_argument("analyze_layer_pair: empty tensors");

    double mean_a = 0.0, mean_b = 0.0;
    if (center) {
        for (float v : a.values) mean_a += v;
        for (float v : b.values) mean_b += v;
        mean_a /= static_cast<double>(a.size());
        mean_b /= static_cast<double>(b.size());
    }
    double ss = 0.0, sm = 0.0;
    for (float v : a.values) { sm += v - mean_a; ss += (v - mean_a) * (v - mean_a); }
    for (float v : b.values) { sm += v - mean_b; ss += (v - mean_b) * (v - mean_b); }
    const double count = static_cast<double>(a.size() + b.size());
    const double sigma_hat = std::sqrt((ss - sm * sm / count) / (count - 1.0));

    std::vector<double> lane_a(k), lane_b(k);
    double sum_s = 0.0, sq_s = 0.0, sum_b = 0.0, sq_b = 0.0;
    std::uint64_t samples = 0;
    for (std::size_t i = 0; i < diag; ++i) {
        for (std::size_t j = 0; j < k; ++j) {
            lane_a[j] = a.values[i * k + j] - mean_a;
            lane_b[j] = b.values[j * b.cols + i] - mean_b;
        }
        for (std::size_t start = 0; start < k; start += static_cast<std::size_t>(n)) {
            const std::size_t len = std::min<std::size_t>(n, k - start);
            const double es = detail::block_pair_error(lane_a.data() + start,
                                                       lane_b.data() + start, len, p,
                                                       ScaleKind::SBFP);
            const double eb = detail::block_pair_error(lane_a.data() + start,
                                                       lane_b.data() + start, len, p,
                                                       ScaleKind::BFP);
            sum_s += es;
            sq_s += es * es;
            sum_b += eb;
            sq_b += eb * eb;
            ++samples;
        }
    }
    if (samples < 2)
        throw std::invalid_argument("analyze_layer_pair: fewer than 2 block samples");

    LayerPairReport r;
    r.layer_id = a.name + "|" + b.name;
    r.n = n;
    r.p = p;
    r.sample_count = samples;
    r.sigma_hat = sigma_hat;
    const double m = static_cast<double>(samples);
    const double var_s = (sq_s - sum_s * sum_s / m) / (m - 1.0);
    const double var_b = (sq_b - sum_b * sum_b / m) / (m - 1.0);
    r.var_sbfp = var_s / n;
    r.var_bfp = var_b / n;
    r.std_error_sbfp = std::sqrt(2.0 / (m - 1.0)) * r.var_sbfp;
    r.std_error_bfp = std::sqrt(2.0 / (m - 1.0)) * r.var_bfp;
    if (n >= 2) {
        r.bound_sbfp = sbfp_hd_var_bound(n, p, p, sigma_hat) / n;
        r.bound_bfp = bfp_hd_var_bound(n, p, p, sigma_hat) / n;
    }
    return r;
}

}  // namespace blockquant
