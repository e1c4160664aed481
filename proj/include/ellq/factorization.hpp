#pragma once

#include <functional>
#include <string>
#include <vector>

#include "ellq/matrix_kit.hpp"
#include "ellq/rational.hpp"
#include "ellq/theta.hpp"

namespace ellq {

// ---------------------------------------------------------------------------
// The abelian q-difference factorization problem: given commuting Phi(z)
// with Phi(pz) = K^{-2} Phi(z), find H^{+-}(z) with
//   (F1) Phi = (H^+)^{-1} H^-      (F2) [K, H^{+-}] = 0
//   (F3) H^{+-} holomorphic, invertible near 0 / infinity
//   (F4) H^-(infinity) = 1.
// The solver consumes analytic data per joint generalized eigenblock:
// a theta-quotient for the semisimple part and log principal parts for the
// unipotent part.
// ---------------------------------------------------------------------------

struct UnipotentLogTerm {
    cx  a;      // pole position in the u variable
    int n = 0;  // contributes f * d_u^{n+1}/(n+1)! log theta(u - a)
    Mat f;      // block-local nilpotent coefficient
};

struct FactorBlockData {
    cx                            eta{1.0};  // K eigenvalue on the block
    ThetaQuotient                 tq;        // C prod theta(u-a_l)/theta(u-b_l)
    std::vector<UnipotentLogTerm> logterms;
};

struct FactorizationProblem {
    int           dim = 0;
    Mat           K;
    Mat           S, Sinv;  // eigenbasis; blocks live on contiguous columns
    struct Block {
        int             offset = 0, dim = 1;
        FactorBlockData data;
    };
    std::vector<Block> blocks;
    ModularParams      params;
};

// --- scalar derivative helpers -------------------------------------------

namespace detail {

inline cx nth_deriv(const std::function<cx(cx)>& f, cx x, int k, double radius) {
    if (k == 0) return f(x);
    auto   c    = cauchy_taylor(f, x, k, radius);
    double fact = 1.0;
    for (int r = 2; r <= k; ++r) fact *= r;
    return c[k] * fact;
}

/// d/dx log theta^-(x), termwise.
inline cx dlog_theta_minus1(cx x, const ModularParams& mp) {
    const cx wbar = std::exp(-two_pi_i * x);
    cx       s    = 0.0;
    cx       pk   = mp.p;
    const int extra = static_cast<int>(std::ceil(std::max(0.0, x.imag()) / mp.tau.imag()));
    for (int k = 1; k <= mp.trunc + extra; ++k) {
        s += two_pi_i * pk * wbar / (1.0 - pk * wbar);
        pk *= mp.p;
    }
    return s;
}

inline cx dlog_theta_plus1(cx x, const ModularParams& mp) { return -dlog_theta_minus1(-x, mp); }

/// d/dx log(e^{pi i x} - e^{-pi i x}) = pi cot(pi x).
inline cx dlog_sin1(cx x) { return pi / std::tan(pi * x); }

/// d/dx log(1 - e^{-2 pi i x}); in z = e^{2 pi i (x+a)} terms this is the
/// rational function 2 pi i A/(z - A).
inline cx dlog_one_minus_exp1(cx x) {
    const cx w = std::exp(-two_pi_i * x);
    return two_pi_i * w / (1.0 - w);
}

/// k-th derivative (k >= 1) of the log of the named factor at x.
enum class LogFactor { theta_full, theta_plus, theta_minus, sin_half, one_minus_exp };

inline cx dlog(LogFactor which, cx x, int k, const ModularParams& mp) {
    std::function<cx(cx)> d1;
    switch (which) {
        case LogFactor::theta_full: d1 = [&mp](cx y) { return theta_log_deriv(y, mp); }; break;
        case LogFactor::theta_plus: d1 = [&mp](cx y) { return dlog_theta_plus1(y, mp); }; break;
        case LogFactor::theta_minus: d1 = [&mp](cx y) { return dlog_theta_minus1(y, mp); }; break;
        case LogFactor::sin_half: d1 = [](cx y) { return dlog_sin1(y); }; break;
        case LogFactor::one_minus_exp: d1 = [](cx y) { return dlog_one_minus_exp1(y); }; break;
    }
    if (k == 1) return d1(x);
    const double radius = 0.05 * std::max(0.05, lattice_distance(x, mp.tau));
    return nth_deriv(d1, x, k - 1, radius);
}

inline Mat matrix_exp_nilpotent(const Mat& N) {
    const int n   = static_cast<int>(N.rows());
    Mat       out = Mat::Identity(n, n);
    Mat       Nk  = Mat::Identity(n, n);
    double    f   = 1.0;
    for (int k = 1; k <= n; ++k) {
        Nk = Nk * N;
        f *= k;
        out += Nk / f;
    }
    return out;
}

inline double factorial(int n) {
    double f = 1.0;
    for (int k = 2; k <= n; ++k) f *= k;
    return f;
}

}  // namespace detail

// --- solution -------------------------------------------------------------

struct FactorizationSolution {
    int            dim = 0;
    ModularParams  params;
    Mat            S, Sinv;
    RationalMatFun A;  // coefficient matrix, A(inf) = K = A(0)^{-1}
    bool           uniqueness_warning = false;

    // Block data, post consistency fix-up.
    struct Block {
        int             offset = 0, dim = 1;
        FactorBlockData data;
    };
    std::vector<Block> blocks;

    Mat Hminus(cx z) const { return assemble(z, /*plus=*/false); }
    Mat HplusInv(cx z) const { return assemble(z, /*plus=*/true); }
    Mat Hplus(cx z) const { return HplusInv(z).fullPivLu().inverse(); }

private:
    Mat assemble(cx z, bool plus) const {
        const ModularParams& mp = params;
        const cx             u  = std::log(z) / two_pi_i;
        Mat                  D  = Mat::Zero(dim, dim);
        for (const auto& blk : blocks) {
            cx scalar = 1.0;
            if (plus) {
                scalar = blk.data.tq.constant * blk.data.eta;
                for (size_t l = 0; l < blk.data.tq.poles.size(); ++l) {
                    const cx a = blk.data.tq.zeros[l], b = blk.data.tq.poles[l];
                    scalar *= (z - std::exp(two_pi_i * a)) / (z - std::exp(two_pi_i * b)) *
                              theta_plus(u - a, mp) / theta_plus(u - b, mp);
                }
            } else {
                for (size_t l = 0; l < blk.data.tq.poles.size(); ++l)
                    scalar *= theta_minus(u - blk.data.tq.zeros[l], mp) /
                              theta_minus(u - blk.data.tq.poles[l], mp);
            }
            Mat N = Mat::Zero(blk.dim, blk.dim);
            for (const auto& t : blk.data.logterms) {
                const int k = t.n + 1;
                cx        d;
                if (plus) {
                    // N = -h^+, where h^+ = -sum f D^{n+1}/(n+1)! log(sin theta^+);
                    // (H^+)^{-1} = exp(-h^+) = exp(N).
                    d = (detail::dlog(detail::LogFactor::sin_half, u - t.a, k, mp) +
                         detail::dlog(detail::LogFactor::theta_plus, u - t.a, k, mp)) /
                        detail::factorial(k);
                } else {
                    // N = h^-;  H^- = exp(h^-) = exp(N).
                    d = detail::dlog(detail::LogFactor::theta_minus, u - t.a, k, mp) /
                        detail::factorial(k);
                }
                N += d * t.f;
            }
            const Mat E = detail::matrix_exp_nilpotent(N);
            D.block(blk.offset, blk.offset, blk.dim, blk.dim) = scalar * E;
        }
        return S * D * Sinv;
    }
};

// --- solver ----------------------------------------------------------------

namespace detail {

/// eq:consistency: the K eigenvalue must equal exp(pi i sum(b_l - a_l)).
/// A mismatch by exactly -1 is absorbed by shifting one zero representative
/// by 1 (and flipping the constant); anything else is inconsistent data.
inline void fix_consistency(FactorBlockData& d, double tol) {
    if (d.tq.zeros.size() != d.tq.poles.size())
        throw inconsistent_data("block theta-quotient must have equally many zeros and poles");
    cx s = 0.0;
    for (size_t l = 0; l < d.tq.poles.size(); ++l) s += d.tq.poles[l] - d.tq.zeros[l];
    const cx ratio = d.eta / std::exp(iu * pi * s);
    if (std::abs(ratio - 1.0) < tol) return;
    if (std::abs(ratio + 1.0) < tol) {
        if (d.tq.zeros.empty()) throw inconsistent_data("eta = -1 on a constant block");
        d.tq.zeros[0] += 1.0;
        d.tq.constant *= -1.0;
        return;
    }
    throw inconsistent_data("eq:consistency violated: eta does not match exp(pi i sum(b-a))");
}

}  // namespace detail

inline FactorizationSolution solve_factorization(const FactorizationProblem& problem) {
    const ModularParams& mp = problem.params;
    FactorizationSolution sol;
    sol.dim    = problem.dim;
    sol.params = mp;
    sol.S      = problem.S;
    sol.Sinv   = problem.Sinv;
    for (const auto& b : problem.blocks) {
        FactorizationSolution::Block nb;
        nb.offset = b.offset;
        nb.dim    = b.dim;
        nb.data   = b.data;
        detail::fix_consistency(nb.data, 1e-6);
        sol.blocks.push_back(std::move(nb));
    }

    // Coefficient matrix A(z) = K Hbar(z): per block
    //   eta * prod (z - alpha_l)/(z - beta_l) * exp(sum f D^{n+1}/(n+1)! log(1 - e^{-2pi i(u-a)})),
    // which is rational; recovered in partial-fraction form from samples with
    // the pole set and orders known exactly.
    std::vector<std::pair<cx, int>> pole_spec;
    auto add_pole = [&](cx z0, int order) {
        for (auto& p : pole_spec)
            if (std::abs(p.first - z0) < 1e-10 * std::max(1.0, std::abs(z0))) {
                p.second = std::max(p.second, order);
                return;
            }
        pole_spec.emplace_back(z0, order);
    };
    for (const auto& blk : sol.blocks) {
        for (const cx& b : blk.data.tq.poles) add_pole(std::exp(two_pi_i * b), 1);
        for (const auto& t : blk.data.logterms)
            add_pole(std::exp(two_pi_i * t.a), (t.n + 1) * std::max(1, blk.dim - 1));
    }

    auto eval_A = [&](cx z) {
        Mat D = Mat::Zero(sol.dim, sol.dim);
        for (const auto& blk : sol.blocks) {
            cx scalar = blk.data.eta;
            for (size_t l = 0; l < blk.data.tq.poles.size(); ++l)
                scalar *= (z - std::exp(two_pi_i * blk.data.tq.zeros[l])) /
                          (z - std::exp(two_pi_i * blk.data.tq.poles[l]));
            // A = K Abar with the unipotent part of K given by
            // exp(pi i sum_a f_{a,0}) (only the order-0 log terms shift under
            // the tau translation).
            Mat NK = Mat::Zero(blk.dim, blk.dim);
            Mat N  = Mat::Zero(blk.dim, blk.dim);
            const cx u = std::log(z) / two_pi_i;
            for (const auto& t : blk.data.logterms) {
                if (t.n == 0) NK += iu * pi * t.f;
                N += detail::dlog(detail::LogFactor::one_minus_exp, u - t.a, t.n + 1, mp) /
                     detail::factorial(t.n + 1) * t.f;
            }
            D.block(blk.offset, blk.offset, blk.dim, blk.dim) =
                scalar * detail::matrix_exp_nilpotent(NK) * detail::matrix_exp_nilpotent(N);
        }
        return Mat(sol.S * D * sol.Sinv);
    };

    int unknowns = 1;
    for (const auto& p : pole_spec) unknowns += p.second;
    std::vector<std::pair<cx, Mat>> samples;
    Rng                             rng(11);
    while (static_cast<int>(samples.size()) < 2 * unknowns + 4) {
        const cx z = std::exp(cx(rng.uniform(-0.8, 0.8), 0.0)) *
                     std::exp(iu * rng.uniform(0.0, 2.0 * pi));
        bool ok = true;
        for (const auto& p : pole_spec)
            ok = ok && std::abs(z - p.first) > 0.05 * std::max(1.0, std::abs(p.first));
        if (ok) samples.emplace_back(z, eval_A(z));
    }
    sol.A = fit_rational_matfun(sol.dim, pole_spec, samples);

    // Uniqueness preconditions on the block data: pole/zero sets must be
    // pairwise non-congruent. A violation is only a warning.
    std::vector<cx> all_zeros, all_poles;
    for (const auto& blk : sol.blocks) {
        for (const cx& a : blk.data.tq.zeros) all_zeros.push_back(std::exp(two_pi_i * a));
        for (const cx& b : blk.data.tq.poles) all_poles.push_back(std::exp(two_pi_i * b));
    }
    auto congruent_pair = [&](const std::vector<cx>& X, const std::vector<cx>& Y) {
        for (const cx& x : X)
            for (const cx& y : Y) {
                cx pk = mp.p;
                for (int k = 1; k <= mp.trunc; ++k) {
                    if (std::abs(x / y - pk) < 1e-9 || std::abs(y / x - pk) < 1e-9) return true;
                    pk *= mp.p;
                }
            }
        return false;
    };
    sol.uniqueness_warning = congruent_pair(all_zeros, all_poles) ||
                             congruent_pair(all_zeros, all_zeros) ||
                             congruent_pair(all_poles, all_poles);
    return sol;
}

// --- checks ----------------------------------------------------------------

struct FactorizationReport {
    double f1_residual = 0.0;
    double f2_residual = 0.0;
    double f4_residual = 0.0;
    bool   f3_ok       = true;
    bool   pass        = false;
};

inline FactorizationReport check_factorization(
    const FactorizationSolution& sol, const std::vector<std::pair<cx, Mat>>& phi_samples,
    const Mat& K, double tol) {
    FactorizationReport rep;
    for (const auto& [z, Phi] : phi_samples) {
        const Mat Hm = sol.Hminus(z), HpInv = sol.HplusInv(z);
        rep.f1_residual = std::max(rep.f1_residual, rel_residual(HpInv * Hm, Phi));
        rep.f2_residual = std::max(rep.f2_residual, rel_residual(K * Hm, Hm * K));
        rep.f2_residual = std::max(rep.f2_residual, rel_residual(K * HpInv, HpInv * K));
    }
    // H^-(z) -> 1 at the O(1/z) rate, so probe far out.
    for (const double r : {1e9, 1e11}) {
        const Mat Hm = sol.Hminus(cx(r, 0.37 * r));
        rep.f4_residual = std::max(rep.f4_residual, max_abs(Hm - Mat::Identity(sol.dim, sol.dim)));
    }
    for (const double r : {1e-4, 1e-3}) {
        const Mat Hp = sol.HplusInv(cx(r, 0.2 * r));
        if (!Hp.allFinite() || std::abs(Hp.fullPivLu().determinant()) < 1e-14) rep.f3_ok = false;
    }
    rep.pass = rep.f1_residual < tol && rep.f2_residual < tol && rep.f4_residual < tol &&
               rep.f3_ok;
    return rep;
}

/// Roots of sum c_k z^k via the companion matrix.
inline std::vector<cx> polynomial_roots(std::vector<cx> coeffs) {
    while (!coeffs.empty() && std::abs(coeffs.back()) < 1e-12) coeffs.pop_back();
    const int n = static_cast<int>(coeffs.size()) - 1;
    if (n < 1) return {};
    Mat C = Mat::Zero(n, n);
    for (int i = 1; i < n; ++i) C(i, i - 1) = 1.0;
    for (int i = 0; i < n; ++i) C(i, n - 1) = -coeffs[i] / coeffs[n];
    Eigen::ComplexEigenSolver<Mat> es(C, false);
    return {es.eigenvalues().data(), es.eigenvalues().data() + n};
}

/// Zeros of det F(z): the numerator polynomial over the common denominator,
/// recovered by sampling (degree bound from the stored pole orders).
inline std::vector<cx> rational_det_zeros(const RationalMatFun& F) {
    int denom_deg = 0;
    for (const auto& p : F.poles) denom_deg += p.order() * F.dim;
    const int deg = denom_deg;  // det F is O(1) at infinity
    Rng       rng(23);
    Eigen::MatrixXcd V(deg + 1, deg + 1);
    Eigen::VectorXcd rhs(deg + 1);
    for (int s = 0; s <= deg; ++s) {
        cx z;
        do {
            z = std::exp(cx(rng.uniform(-0.5, 0.5), 0.0)) * std::exp(iu * rng.uniform(0.0, 2 * pi));
        } while (F.pole_distance(z) < 0.05);
        cx denom = 1.0;
        for (const auto& p : F.poles) denom *= std::pow(z - p.z0, p.order() * F.dim);
        cx w = 1.0;
        for (int k = 0; k <= deg; ++k) {
            V(s, k) = w;
            w *= z;
        }
        rhs[s] = F.eval(z).fullPivLu().determinant() * denom;
    }
    const Eigen::VectorXcd c = V.fullPivLu().solve(rhs);
    return polynomial_roots({c.data(), c.data() + deg + 1});
}

/// True iff the zero/pole sets of A are pairwise non-congruent in the sense
/// of Prop. fact-unique (ratio never in p^{Z != 0}, |exponent| <= trunc).
inline bool uniqueness_preconditions(const RationalMatFun& A, const ModularParams& mp) {
    const std::vector<cx> P = A.pole_locations();
    std::vector<cx>       Z = rational_det_zeros(A);
    // Keep genuine zeros: smallest singular value of A there is ~0.
    std::vector<cx> zs;
    for (const cx& z : Z) {
        if (!is_finite(z) || std::abs(z) < 1e-8 || A.pole_distance(z) < 1e-8) continue;
        Eigen::JacobiSVD<Mat> svd(A.eval(z));
        if (svd.singularValues()(svd.singularValues().size() - 1) < 1e-6) zs.push_back(z);
    }
    auto ok_pair = [&](const std::vector<cx>& X, const std::vector<cx>& Y) {
        for (const cx& x : X)
            for (const cx& y : Y) {
                cx pk = mp.p;
                for (int k = 1; k <= mp.trunc; ++k) {
                    if (std::abs(x / y - pk) < 1e-8 || std::abs(y / x - pk) < 1e-8) return false;
                    pk *= mp.p;
                }
            }
        return true;
    };
    return ok_pair(zs, P) && ok_pair(zs, zs) && ok_pair(P, P);
}

}  // namespace ellq
