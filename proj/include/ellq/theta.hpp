#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "ellq/common.hpp"
#include "ellq/modular.hpp"

namespace ellq {

// ---------------------------------------------------------------------------
// The odd theta function
//
//   theta(u+1)   = -theta(u)
//   theta(u+tau) = -e^{-pi i tau} e^{-2 pi i u} theta(u)
//   theta(u) = 0  iff  u in Z + tau Z
//   theta'(0)    = 1
//
// evaluated through the triple product
//
//   theta(u) = sin(pi u)/pi * prod_{k>=1} (1-p^k z)(1-p^k/z)/(1-p^k)^2,
//   z = e^{2 pi i u},
//
// after reducing u into the fundamental parallelogram. Note the 1/pi: the
// product above is the unique normalization with theta'(0) = 1.
// ---------------------------------------------------------------------------

namespace detail {

inline cx theta_fundamental(cx u0, const ModularParams& mp) {
    const cx z = std::exp(two_pi_i * u0);
    cx       prod = 1.0;
    cx       pk   = mp.p;
    for (int k = 1; k <= mp.trunc; ++k) {
        const cx d = 1.0 - pk;
        prod *= (1.0 - pk * z) * (1.0 - pk / z) / (d * d);
        pk *= mp.p;
    }
    return std::sin(pi * u0) / pi * prod;
}

/// theta(u) = prefactor(m,n,u0) * theta(u0) for u = u0 + m + n tau.
inline cx reduction_prefactor(const LatticeReduction& r, const ModularParams& mp) {
    const double sign = ((r.m + r.n) % 2 == 0) ? 1.0 : -1.0;
    const cx     n    = static_cast<double>(r.n);
    return sign * std::exp(-iu * pi * n * n * mp.tau - two_pi_i * n * r.reduced);
}

}  // namespace detail

inline cx theta(cx u, const ModularParams& mp) {
    if (!is_finite(u)) throw invalid_input("non-finite argument to theta");
    const auto r = lattice_reduce(u, mp.tau);
    return detail::reduction_prefactor(r, mp) * detail::theta_fundamental(r.reduced, mp);
}

/// theta^{+-}(u) = prod_{n>=1} (1 - p^n e^{+-2 pi i u}).
/// 1-periodic in u; extra factors are added when |Im u| is large so the
/// truncated tail stays below tol_eval.
inline cx theta_plus(cx u, const ModularParams& mp) {
    if (!is_finite(u)) throw invalid_input("non-finite argument to theta_plus");
    u -= std::floor(u.real());
    const cx  z     = std::exp(two_pi_i * u);
    const int extra = static_cast<int>(std::ceil(std::max(0.0, -u.imag()) / mp.tau.imag()));
    cx        prod  = 1.0;
    cx        pk    = mp.p;
    for (int k = 1; k <= mp.trunc + extra; ++k) {
        prod *= (1.0 - pk * z);
        pk *= mp.p;
    }
    return prod;
}

inline cx theta_minus(cx u, const ModularParams& mp) { return theta_plus(-u, mp); }

enum class ThetaKind { full, plus, minus };

inline cx theta_eval(ThetaKind kind, cx u, const ModularParams& mp) {
    switch (kind) {
        case ThetaKind::full: return theta(u, mp);
        case ThetaKind::plus: return theta_plus(u, mp);
        default: return theta_minus(u, mp);
    }
}

/// Logarithmic derivative theta'(u)/theta(u), termwise over the product.
inline cx theta_log_deriv(cx u, const ModularParams& mp) {
    const auto r = lattice_reduce(u, mp.tau);
    if (on_lattice(u, mp.tau, mp.pole_tol)) throw pole_hit(u, "theta_log_deriv at a lattice zero");
    const cx z   = std::exp(two_pi_i * r.reduced);
    cx       sum = pi / std::tan(pi * r.reduced);
    cx       pk  = mp.p;
    for (int k = 1; k <= mp.trunc; ++k) {
        sum += two_pi_i * (-pk * z / (1.0 - pk * z) + (pk / z) / (1.0 - pk / z));
        pk *= mp.p;
    }
    return sum - two_pi_i * static_cast<double>(r.n);
}

inline cx theta_deriv(cx u, const ModularParams& mp) {
    return theta(u, mp) * theta_log_deriv(u, mp);
}

// ---------------------------------------------------------------------------
// Cauchy-circle Taylor coefficients of an analytic function
// ---------------------------------------------------------------------------

/// Returns f^{(k)}(c)/k! for k = 0..max_order, by trapezoidal quadrature on a
/// circle of the given radius (exact for analytic integrands up to aliasing).
inline std::vector<cx> cauchy_taylor(const std::function<cx(cx)>& f, cx c, int max_order,
                                     double radius, int nodes = 256) {
    std::vector<cx> vals(nodes);
    for (int j = 0; j < nodes; ++j) {
        const double t = 2.0 * pi * j / nodes;
        vals[j]        = f(c + radius * std::exp(iu * t));
    }
    std::vector<cx> out(max_order + 1);
    for (int k = 0; k <= max_order; ++k) {
        cx s = 0.0;
        for (int j = 0; j < nodes; ++j) {
            const double t = 2.0 * pi * j / nodes;
            s += vals[j] * std::exp(-iu * (static_cast<double>(k) * t));
        }
        out[k] = s / (static_cast<double>(nodes) * std::pow(radius, k));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Dynamical kernel  theta(x+lam) / (theta(x) theta(lam))  and derivatives
// ---------------------------------------------------------------------------

inline cx kernel_plain(cx x, cx lam, const ModularParams& mp) {
    return theta(x + lam, mp) / (theta(x, mp) * theta(lam, mp));
}

/// ((-d/dx)^n / n!) [ theta(x+lam) / (theta(x) theta(lam)) ].
/// Order 0 is the plain kernel, order 1 uses the termwise log-derivative,
/// orders >= 2 go through Cauchy quadrature.
inline cx kernel_eval(cx x, cx lam, int order, const ModularParams& mp) {
    if (order < 0 || order > 6) throw unsupported_order("kernel_eval order must be in 0..6");
    if (on_lattice(x, mp.tau, mp.pole_tol)) throw pole_hit(x, "kernel_eval: x on the lattice");
    if (on_lattice(lam, mp.tau, mp.pole_tol)) throw lattice_lambda(lam);
    if (order == 0) return kernel_plain(x, lam, mp);
    if (order == 1)
        return -kernel_plain(x, lam, mp) *
               (theta_log_deriv(x + lam, mp) - theta_log_deriv(x, mp));
    const double radius = 0.05 * lattice_distance(x, mp.tau);
    const auto   coeffs = cauchy_taylor([&](cx xx) { return kernel_plain(xx, lam, mp); }, x,
                                        order, radius);
    return (order % 2 == 0 ? 1.0 : -1.0) * coeffs[order];
}

// ---------------------------------------------------------------------------
// Fay's trisecant identity residual
// ---------------------------------------------------------------------------

/// |LHS - RHS| / max(|LHS|,|RHS|,1) of
///   th(a-c)th(a+c)th(b-d)th(b+d)
///     = th(a-b)th(a+b)th(c-d)th(c+d) + th(a-d)th(a+d)th(b-c)th(b+c).
inline double fay_residual(cx a, cx b, cx c, cx d, const ModularParams& mp) {
    auto th = [&](cx x) { return theta(x, mp); };
    const cx lhs = th(a - c) * th(a + c) * th(b - d) * th(b + d);
    const cx rhs = th(a - b) * th(a + b) * th(c - d) * th(c + d) +
                   th(a - d) * th(a + d) * th(b - c) * th(b + c);
    return std::abs(lhs - rhs) / std::max({std::abs(lhs), std::abs(rhs), 1.0});
}

// ---------------------------------------------------------------------------
// Theta quotients  C prod_k theta(u - a_k)/theta(u - b_k)
// ---------------------------------------------------------------------------

struct ThetaQuotient {
    cx              constant{1.0, 0.0};
    std::vector<cx> zeros;
    std::vector<cx> poles;

    cx eval(cx u, const ModularParams& mp) const {
        cx val = constant;
        for (const cx& b : poles) {
            if (on_lattice(u - b, mp.tau, mp.pole_tol)) throw pole_hit(b);
            val /= theta(u - b, mp);
        }
        for (const cx& a : zeros) val *= theta(u - a, mp);
        return val;
    }

    /// f(u+tau)/f(u) = e^{-2 pi i sum(b_k - a_k)}; exponent in the sense of
    /// QuasiPeriodicExpansion below.
    cx quasi_exponent() const {
        cx s = 0.0;
        for (const cx& b : poles) s += b;
        for (const cx& a : zeros) s -= a;
        return s;
    }
};

// ---------------------------------------------------------------------------
// Partial fractions for doubly quasi-periodic functions
//
// f(u+1) = f(u), f(u+tau) = e^{-2 pi i a} f(u), with principal parts
// f_{b,n}/(u-b)^{n+1} at representatives b. For a in the lattice the kernel
// is (-d)^n/n! of theta'(u-b)/theta(u-b) plus an additive constant; otherwise
// (-d)^n/n! of theta(u-b+a)/(theta(u-b) theta(a)).
// ---------------------------------------------------------------------------

struct QuasiPeriodicExpansion {
    struct Term {
        cx  pole;
        int order = 0;  // contributes f_{b,n}/(u-b)^{n+1}
        cx  coeff;
    };
    cx                quasi_exponent{0.0, 0.0};
    std::vector<Term> terms;
    cx                constant{0.0, 0.0};  // only used when quasi_exponent in the lattice

    cx eval(cx u, const ModularParams& mp) const {
        const bool periodic = on_lattice(quasi_exponent, mp.tau, mp.pole_tol);
        cx         val      = periodic ? constant : cx(0.0);
        for (const auto& t : terms) {
            if (periodic) {
                if (t.order == 0) {
                    val += t.coeff * theta_log_deriv(u - t.pole, mp);
                } else {
                    const double radius = 0.05 * lattice_distance(u - t.pole, mp.tau);
                    const auto   c      = cauchy_taylor(
                        [&](cx x) { return theta_log_deriv(x, mp); }, u - t.pole, t.order,
                        radius);
                    val += t.coeff * (t.order % 2 == 0 ? 1.0 : -1.0) * c[t.order];
                }
            } else {
                val += t.coeff * kernel_eval(u - t.pole, quasi_exponent, t.order, mp);
            }
        }
        return val;
    }
};

/// Builds the expansion from given principal parts. The optional anchor
/// (u0, f(u0)) pins the additive constant in the periodic case.
inline QuasiPeriodicExpansion quasi_periodic_expand(
    const std::vector<QuasiPeriodicExpansion::Term>& principal_parts, cx quasi_exponent,
    const ModularParams& mp, const std::vector<std::pair<cx, cx>>& anchor = {}) {
    for (size_t i = 0; i < principal_parts.size(); ++i)
        for (size_t j = i + 1; j < principal_parts.size(); ++j)
            if (on_lattice(principal_parts[i].pole - principal_parts[j].pole, mp.tau, 1e-7))
                throw invalid_input("quasi_periodic_expand: congruent poles");

    QuasiPeriodicExpansion e;
    e.quasi_exponent = quasi_exponent;
    e.terms          = principal_parts;
    if (!anchor.empty() && on_lattice(quasi_exponent, mp.tau, mp.pole_tol)) {
        e.constant = anchor.front().second - e.eval(anchor.front().first, mp);
    }
    return e;
}

}  // namespace ellq
