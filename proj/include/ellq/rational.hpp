#pragma once

#include <algorithm>
#include <vector>

#include "ellq/common.hpp"

namespace ellq {

/// Rational End(V)-valued function of z, regular at z = 0 and z = infinity,
/// stored in partial-fraction normal form
///
///   F(z) = value_at_inf + sum_poles sum_{k=1}^{order} coeffs[k-1] / (z - z0)^k.
struct RationalMatFun {
    struct PoleTerm {
        cx               z0;
        std::vector<Mat> coeffs;  // coeffs[k-1] multiplies (z - z0)^{-k}
        int              order() const { return static_cast<int>(coeffs.size()); }
    };

    int                   dim = 0;
    Mat                   value_at_inf;
    std::vector<PoleTerm> poles;

    static RationalMatFun constant(const Mat& M) {
        RationalMatFun f;
        f.dim          = static_cast<int>(M.rows());
        f.value_at_inf = M;
        return f;
    }

    double pole_distance(cx z) const {
        double d = std::numeric_limits<double>::infinity();
        for (const auto& p : poles) d = std::min(d, std::abs(z - p.z0));
        return d;
    }

    Mat eval(cx z, double pole_tol = 1e-9) const {
        Mat out = value_at_inf;
        for (const auto& p : poles) {
            const cx dz = z - p.z0;
            if (std::abs(dz) < pole_tol) throw pole_hit(p.z0, "RationalMatFun::eval at a pole");
            cx inv = 1.0 / dz;
            cx w   = inv;
            for (const auto& C : p.coeffs) {
                out += w * C;
                w *= inv;
            }
        }
        return out;
    }

    /// Taylor coefficients F^{(k)}(z)/k! for k = 0..max_order at a regular point.
    std::vector<Mat> taylor(cx z, int max_order, double pole_tol = 1e-9) const {
        std::vector<Mat> out(max_order + 1, Mat::Zero(dim, dim));
        out[0] = value_at_inf;
        for (const auto& p : poles) {
            const cx dz = z - p.z0;
            if (std::abs(dz) < pole_tol) throw pole_hit(p.z0, "RationalMatFun::taylor at a pole");
            for (int k = 1; k <= p.order(); ++k) {
                // d^m/dz^m (z-z0)^{-k} / m! = binom(k+m-1, m) (-1)^m (z-z0)^{-k-m}
                double binom = 1.0;
                cx     w     = std::pow(dz, -k);
                for (int m = 0; m <= max_order; ++m) {
                    out[m] += ((m % 2 == 0) ? binom : -binom) * w * p.coeffs[k - 1];
                    binom *= static_cast<double>(k + m) / static_cast<double>(m + 1);
                    w /= dz;
                }
            }
        }
        return out;
    }

    /// F(s*z) as a RationalMatFun: poles move to z0/s, order-k coefficients
    /// divide by s^k.
    RationalMatFun scaled_arg(cx s) const {
        RationalMatFun out = *this;
        for (auto& p : out.poles) {
            p.z0 /= s;
            cx w = s;
            for (auto& C : p.coeffs) {
                C /= w;
                w *= s;
            }
        }
        return out;
    }

    /// Restriction to the (rows, cols) block of a larger function.
    Mat block_eval(cx z, int row0, int rows, int col0, int cols, double pole_tol = 1e-9) const {
        return eval(z, pole_tol).block(row0, col0, rows, cols);
    }

    std::vector<cx> pole_locations() const {
        std::vector<cx> out;
        for (const auto& p : poles) out.push_back(p.z0);
        return out;
    }

    void add_pole_term(cx z0, int k, const Mat& C, double merge_tol = 1e-10) {
        for (auto& p : poles) {
            if (std::abs(p.z0 - z0) < merge_tol) {
                while (p.order() < k) p.coeffs.push_back(Mat::Zero(dim, dim));
                p.coeffs[k - 1] += C;
                return;
            }
        }
        PoleTerm t;
        t.z0 = z0;
        t.coeffs.assign(k, Mat::Zero(dim, dim));
        t.coeffs[k - 1] = C;
        poles.push_back(std::move(t));
    }

    /// Drops pole terms whose coefficients are all below tol.
    void prune(double tol = 1e-12) {
        std::vector<PoleTerm> kept;
        for (auto& p : poles) {
            while (!p.coeffs.empty() && max_abs(p.coeffs.back()) < tol) p.coeffs.pop_back();
            if (!p.coeffs.empty()) kept.push_back(std::move(p));
        }
        poles = std::move(kept);
    }
};

/// Block direct sum of two rational functions.
inline RationalMatFun direct_sum(const RationalMatFun& a, const RationalMatFun& b) {
    RationalMatFun out;
    out.dim          = a.dim + b.dim;
    out.value_at_inf = Mat::Zero(out.dim, out.dim);
    out.value_at_inf.topLeftCorner(a.dim, a.dim)     = a.value_at_inf;
    out.value_at_inf.bottomRightCorner(b.dim, b.dim) = b.value_at_inf;
    auto lift = [&](const RationalMatFun& f, int off) {
        for (const auto& p : f.poles)
            for (int k = 1; k <= p.order(); ++k) {
                Mat C = Mat::Zero(out.dim, out.dim);
                C.block(off, off, f.dim, f.dim) = p.coeffs[k - 1];
                out.add_pole_term(p.z0, k, C);
            }
    };
    lift(a, 0);
    lift(b, a.dim);
    out.prune();
    return out;
}

/// Least-squares recovery of a RationalMatFun from samples, with the pole
/// locations and orders (and optionally the value at infinity) known.
inline RationalMatFun fit_rational_matfun(int dim, const std::vector<std::pair<cx, int>>& poles,
                                          const std::vector<std::pair<cx, Mat>>& samples,
                                          const Mat* known_inf = nullptr) {
    int unknowns = (known_inf ? 0 : 1);
    for (const auto& p : poles) unknowns += p.second;
    const int m = static_cast<int>(samples.size());
    if (m < unknowns) throw invalid_input("fit_rational_matfun: not enough samples");

    Eigen::MatrixXcd A(m, unknowns);
    for (int s = 0; s < m; ++s) {
        int c = 0;
        if (!known_inf) A(s, c++) = 1.0;
        for (const auto& p : poles) {
            cx w = 1.0 / (samples[s].first - p.first);
            for (int k = 1; k <= p.second; ++k) {
                A(s, c++) = w;
                w /= (samples[s].first - p.first);
            }
        }
    }
    const auto solver = A.colPivHouseholderQr();

    RationalMatFun out;
    out.dim          = dim;
    out.value_at_inf = known_inf ? *known_inf : Mat::Zero(dim, dim);
    std::vector<std::vector<Mat>> coef;
    for (const auto& p : poles) coef.emplace_back(p.second, Mat::Zero(dim, dim));

    Eigen::VectorXcd rhs(m);
    for (int i = 0; i < dim; ++i)
        for (int j = 0; j < dim; ++j) {
            for (int s = 0; s < m; ++s) {
                rhs[s] = samples[s].second(i, j);
                if (known_inf) rhs[s] -= (*known_inf)(i, j);
            }
            const Eigen::VectorXcd x = solver.solve(rhs);
            int                    c = 0;
            if (!known_inf) out.value_at_inf(i, j) = x[c++];
            for (size_t pp = 0; pp < poles.size(); ++pp)
                for (int k = 0; k < poles[pp].second; ++k) coef[pp][k](i, j) = x[c++];
        }
    for (size_t pp = 0; pp < poles.size(); ++pp) {
        RationalMatFun::PoleTerm t;
        t.z0     = poles[pp].first;
        t.coeffs = coef[pp];
        out.poles.push_back(std::move(t));
    }
    out.prune();
    return out;
}

}  // namespace ellq
