#pragma once

#include <vector>

#include "ellq/common.hpp"

namespace ellq {

// Truncated Laurent series in a local variable delta, used by the residue
// calculus of the monodromy and inverse functors. A series holds coefficients
// c[0..len-1] for powers delta^{lo}, delta^{lo+1}, ...

struct CSeries {
    int             lo = 0;
    std::vector<cx> c;

    int hi() const { return lo + static_cast<int>(c.size()) - 1; }
    cx  at(int power) const {
        const int idx = power - lo;
        return (idx >= 0 && idx < static_cast<int>(c.size())) ? c[idx] : cx(0.0);
    }

    static CSeries taylor(std::vector<cx> coeffs) { return {0, std::move(coeffs)}; }

    /// exp(2 pi i delta) - 1 divided by delta: sum_{j>=0} (2 pi i)^{j+1} delta^j / (j+1)!
    static CSeries expm1_over_delta(int order) {
        std::vector<cx> c(order + 1);
        cx              w = two_pi_i;
        for (int j = 0; j <= order; ++j) {
            c[j] = w;
            w *= two_pi_i / static_cast<double>(j + 2);
        }
        return {0, std::move(c)};
    }
};

inline CSeries mul(const CSeries& a, const CSeries& b, int keep_hi) {
    CSeries out;
    out.lo = a.lo + b.lo;
    const int len = keep_hi - out.lo + 1;
    if (len <= 0) return {out.lo, {}};
    out.c.assign(len, cx(0.0));
    for (int i = 0; i < static_cast<int>(a.c.size()); ++i)
        for (int j = 0; j < static_cast<int>(b.c.size()); ++j) {
            const int k = i + j;
            if (k < len) out.c[k] += a.c[i] * b.c[j];
        }
    return out;
}

/// Reciprocal of a series with nonzero leading coefficient.
inline CSeries inverse(const CSeries& a, int order) {
    CSeries out;
    out.lo = -a.lo;
    out.c.assign(order + 1, cx(0.0));
    const cx a0 = a.c.at(0);
    out.c[0]    = 1.0 / a0;
    for (int k = 1; k <= order; ++k) {
        cx s = 0.0;
        for (int j = 1; j <= k && j < static_cast<int>(a.c.size()); ++j)
            s += a.c[j] * out.c[k - j];
        out.c[k] = -s / a0;
    }
    return out;
}

inline CSeries pow_int(const CSeries& a, int n, int keep_hi) {
    if (n == 0) return CSeries::taylor({cx(1.0)});
    CSeries base = (n > 0) ? a : inverse(a, keep_hi + std::abs(n) * (-a.lo) + 4);
    const int m = std::abs(n);
    CSeries out = base;
    for (int k = 1; k < m; ++k) out = mul(out, base, keep_hi);
    return out;
}

// Matrix-coefficient counterpart.

struct MatSeries {
    int              lo = 0;
    std::vector<Mat> c;

    Mat at(int power, int dim) const {
        const int idx = power - lo;
        return (idx >= 0 && idx < static_cast<int>(c.size())) ? c[idx] : Mat::Zero(dim, dim);
    }
    static MatSeries zero(int lo, int len, int dim) {
        return {lo, std::vector<Mat>(static_cast<size_t>(len), Mat::Zero(dim, dim))};
    }
};

inline MatSeries mul(const MatSeries& a, const MatSeries& b, int keep_hi, int dim) {
    MatSeries out;
    out.lo        = a.lo + b.lo;
    const int len = keep_hi - out.lo + 1;
    if (len <= 0) return {out.lo, {}};
    out.c.assign(len, Mat::Zero(dim, dim));
    for (int i = 0; i < static_cast<int>(a.c.size()); ++i)
        for (int j = 0; j < static_cast<int>(b.c.size()); ++j) {
            const int k = i + j;
            if (k < len) out.c[k] += a.c[i] * b.c[j];
        }
    return out;
}

inline MatSeries mul(const MatSeries& a, const CSeries& b, int keep_hi, int dim) {
    MatSeries out;
    out.lo        = a.lo + b.lo;
    const int len = keep_hi - out.lo + 1;
    if (len <= 0) return {out.lo, {}};
    out.c.assign(len, Mat::Zero(dim, dim));
    for (int i = 0; i < static_cast<int>(a.c.size()); ++i)
        for (int j = 0; j < static_cast<int>(b.c.size()); ++j) {
            const int k = i + j;
            if (k < len) out.c[k] += b.c[j] * a.c[i];
        }
    return out;
}

inline void add_in_place(MatSeries& a, const MatSeries& b, int dim) {
    if (b.c.empty()) return;
    if (a.c.empty()) {
        a = b;
        return;
    }
    const int lo = std::min(a.lo, b.lo);
    const int hi = std::max(a.lo + static_cast<int>(a.c.size()), b.lo + static_cast<int>(b.c.size())) - 1;
    MatSeries out = MatSeries::zero(lo, hi - lo + 1, dim);
    for (int i = 0; i < static_cast<int>(a.c.size()); ++i) out.c[a.lo + i - lo] += a.c[i];
    for (int i = 0; i < static_cast<int>(b.c.size()); ++i) out.c[b.lo + i - lo] += b.c[i];
    a = std::move(out);
}

/// Composition sum_k D[k] * s(delta)^k for a scalar inner series s with
/// s(0) = 0, where D are Taylor coefficients of the outer function.
inline MatSeries compose_taylor(const std::vector<Mat>& D, const CSeries& s, int keep_hi,
                                int dim) {
    MatSeries out = MatSeries::zero(0, keep_hi + 1, dim);
    out.c[0]      = D[0];
    CSeries sk    = CSeries::taylor({cx(1.0)});
    for (size_t k = 1; k < D.size(); ++k) {
        sk = mul(sk, s, keep_hi);
        for (int j = std::max(0, sk.lo); j <= std::min(keep_hi, sk.hi()); ++j)
            out.c[j] += sk.at(j) * D[k];
    }
    return out;
}

}  // namespace ellq
