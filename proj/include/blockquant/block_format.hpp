#pragma once

// SBFP/BFP block codecs: quantization, dequantization, integer-mantissa
// inner products, and exact scalar-product error.
//
// A block format stores n values as p-bit signed integer mantissas sharing
// one scale. SBFP keeps the scale S = Y/alpha in full precision (Y is the
// block max-abs, alpha = 2^(p-1)-1); BFP rounds the scale up to the nearest
// power of two, S = 2^ceil(log2(Y/alpha)).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace blockquant {

enum class ScaleKind { SBFP, BFP };

inline const char* to_string(ScaleKind k) {
    return k == ScaleKind::SBFP ? "sbfp" : "bfp";
}

struct BlockFormatSpec {
    ScaleKind kind = ScaleKind::SBFP;
    int block_size = 0;  // n >= 1
    int precision = 0;   // p >= 2, mantissa bits incl. sign

    // Largest mantissa magnitude, 2^(p-1) - 1.
    int alpha() const { return (1 << (precision - 1)) - 1; }

    void validate() const {
        if (block_size < 1)
            throw std::invalid_argument("block_size must be >= 1, got " +
                                        std::to_string(block_size));
        if (precision < 2 || precision > 30)
            throw std::invalid_argument("precision must be in [2, 30], got " +
                                        std::to_string(precision));
    }
};

// Reserved exponent for all-zero BFP blocks (Y = 0 has no finite log2).
inline constexpr int kZeroExponent = std::numeric_limits<int>::min();

struct QuantizedBlock {
    ScaleKind kind = ScaleKind::SBFP;
    int precision = 0;
    double scale = 0.0;          // S; equals 2^exponent for BFP
    int exponent = kZeroExponent;  // BFP only
    std::vector<std::int32_t> mantissas;

    std::size_t size() const { return mantissas.size(); }
};

// Smallest integer e with v <= 2^e, exact for powers of two.
inline int ceil_log2(double v) {
    int e = 0;
    double m = std::frexp(v, &e);  // v = m * 2^e, m in [0.5, 1)
    return m == 0.5 ? e - 1 : e;
}

namespace detail {

inline void check_block_input(std::span<const double> values, int precision) {
    if (values.empty())
        throw std::invalid_argument("empty input block");
    if (precision < 2 || precision > 30)
        throw std::invalid_argument("precision must be in [2, 30], got " +
                                    std::to_string(precision));
    for (double v : values)
        if (!std::isfinite(v))
            throw std::invalid_argument("non-finite value in input block");
}

inline double max_abs(std::span<const double> values) {
    double y = 0.0;
    for (double v : values) y = std::max(y, std::fabs(v));
    return y;
}

// Ties round away from zero; clamp absorbs a possible 1-ulp overshoot at
// the range boundary.
inline std::int32_t round_mantissa(double z, int alpha) {
    double r = std::round(z);
    if (r > alpha) r = alpha;
    if (r < -alpha) r = -alpha;
    return static_cast<std::int32_t>(r);
}

}  // namespace detail

inline QuantizedBlock sbfp_quantize(std::span<const double> values, int precision) {
    detail::check_block_input(values, precision);
    const int alpha = (1 << (precision - 1)) - 1;
    QuantizedBlock q;
    q.kind = ScaleKind::SBFP;
    q.precision = precision;
    q.mantissas.resize(values.size());
    const double y = detail::max_abs(values);
    if (y == 0.0) {
        q.scale = 0.0;
        return q;
    }
    q.scale = y / alpha;
    for (std::size_t i = 0; i < values.size(); ++i)
        q.mantissas[i] = detail::round_mantissa(alpha * values[i] / y, alpha);
    return q;
}

inline QuantizedBlock bfp_quantize(std::span<const double> values, int precision) {
    detail::check_block_input(values, precision);
    const int alpha = (1 << (precision - 1)) - 1;
    QuantizedBlock q;
    q.kind = ScaleKind::BFP;
    q.precision = precision;
    q.mantissas.resize(values.size());
    const double y = detail::max_abs(values);
    if (y == 0.0) {
        q.scale = 0.0;
        q.exponent = kZeroExponent;
        return q;
    }
    q.exponent = ceil_log2(y / alpha);
    q.scale = std::ldexp(1.0, q.exponent);
    for (std::size_t i = 0; i < values.size(); ++i)
        q.mantissas[i] = detail::round_mantissa(values[i] / q.scale, alpha);
    return q;
}

inline QuantizedBlock quantize(std::span<const double> values, const BlockFormatSpec& spec) {
    spec.validate();
    return spec.kind == ScaleKind::SBFP ? sbfp_quantize(values, spec.precision)
                                        : bfp_quantize(values, spec.precision);
}

inline std::vector<double> dequantize(const QuantizedBlock& q) {
    std::vector<double> out(q.mantissas.size());
    for (std::size_t i = 0; i < out.size(); ++i)
        out[i] = q.scale * q.mantissas[i];
    return out;
}

// S_a * S_b * sum_i M_i^(a) M_i^(b); the mantissa accumulation is exact
// in a 64-bit integer, which is asserted, not assumed.
inline double quantized_dot(const QuantizedBlock& qa, const QuantizedBlock& qb) {
    if (qa.size() != qb.size())
        throw std::invalid_argument("quantized_dot: block length mismatch (" +
                                    std::to_string(qa.size()) + " vs " +
                                    std::to_string(qb.size()) + ")");
    // worst case |sum| <= n * alpha_a * alpha_b < 2^(p_a-1) * 2^(p_b-1) * n
    const int need = qa.precision + qb.precision - 2 +
                     ceil_log2(static_cast<double>(qa.size())) + 1;
    if (need > 62)
        throw std::invalid_argument("quantized_dot: accumulator width exceeded");
    std::int64_t acc = 0;
    for (std::size_t i = 0; i < qa.size(); ++i)
        acc += static_cast<std::int64_t>(qa.mantissas[i]) * qb.mantissas[i];
    return qa.scale * qb.scale * static_cast<double>(acc);
}

// Exact inner product minus the quantized one (Delta E of the block pair).
inline double dot_error(std::span<const double> xa, std::span<const double> xb,
                        const BlockFormatSpec& spec_a, const BlockFormatSpec& spec_b) {
    if (xa.size() != xb.size())
        throw std::invalid_argument("dot_error: length mismatch");
    double exact = 0.0, comp = 0.0;  // Neumaier-compensated reference dot
    for (std::size_t i = 0; i < xa.size(); ++i) {
        double term = xa[i] * xb[i];
        double t = exact + term;
        comp += std::fabs(exact) >= std::fabs(term) ? (exact - t) + term
                                                    : (term - t) + exact;
        exact = t;
    }
    exact += comp;
    return exact - quantized_dot(quantize(xa, spec_a), quantize(xb, spec_b));
}

enum class Axis { Rows, Cols };

struct QuantizedTensor {
    std::size_t rows = 0, cols = 0;
    Axis quantization_axis = Axis::Cols;
    BlockFormatSpec spec;
    // Blocks in row-major order of the lanes: for axis == Cols, all blocks of
    // row 0 first, and so on. The trailing block of a lane may be short.
    std::vector<QuantizedBlock> blocks;
};

// Splits each lane along `axis` into ceil(len/n) blocks; a short tail block
// is quantized with its own max-abs scale.
inline QuantizedTensor quantize_tensor(std::span<const double> values,
                                       std::size_t rows, std::size_t cols,
                                       Axis axis, const BlockFormatSpec& spec) {
    spec.validate();
    if (rows == 0 || cols == 0 || values.size() != rows * cols)
        throw std::invalid_argument("quantize_tensor: empty tensor or shape/value count mismatch");
    QuantizedTensor out;
    out.rows = rows;
    out.cols = cols;
    out.quantization_axis = axis;
    out.spec = spec;
    const std::size_t n = static_cast<std::size_t>(spec.block_size);
    const std::size_t lanes = axis == Axis::Cols ? rows : cols;
    const std::size_t len = axis == Axis::Cols ? cols : rows;
    std::vector<double> lane(len);
    for (std::size_t l = 0; l < lanes; ++l) {
        if (axis == Axis::Cols) {
            std::copy_n(values.begin() + l * cols, cols, lane.begin());
        } else {
            for (std::size_t r = 0; r < rows; ++r) lane[r] = values[r * cols + l];
        }
        for (std::size_t start = 0; start < len; start += n) {
            const std::size_t blen = std::min(n, len - start);
            out.blocks.push_back(quantize(std::span<const double>(lane).subspan(start, blen), spec));
        }
    }
    return out;
}

inline std::vector<double> dequantize_tensor(const QuantizedTensor& t) {
    std::vector<double> out(t.rows * t.cols);
    const std::size_t lanes = t.quantization_axis == Axis::Cols ? t.rows : t.cols;
    const std::size_t len = t.quantization_axis == Axis::Cols ? t.cols : t.rows;
    std::size_t bi = 0;
    for (std::size_t l = 0; l < lanes; ++l) {
        std::size_t pos = 0;
        while (pos < len) {
            const QuantizedBlock& b = t.blocks[bi++];
            for (std::size_t i = 0; i < b.size(); ++i, ++pos) {
                const double v = b.scale * b.mantissas[i];
                if (t.quantization_axis == Axis::Cols)
                    out[l * t.cols + pos] = v;
                else
                    out[pos * t.cols + l] = v;
            }
        }
    }
    return out;
}

}  // namespace blockquant
