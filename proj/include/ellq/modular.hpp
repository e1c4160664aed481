#pragma once

#include <cmath>

#include "ellq/common.hpp"

namespace ellq {

/// Reduction into the fundamental parallelogram {s + t*tau : s,t in [0,1)}
/// with the lattice offset x = reduced + m + n*tau.
struct LatticeReduction {
    cx   reduced;
    long m = 0, n = 0;
};

inline LatticeReduction lattice_reduce(cx x, cx tau) {
    const double t = x.imag() / tau.imag();
    const long   n = static_cast<long>(std::floor(t));
    const cx     y = x - static_cast<double>(n) * tau;
    const double s = y.real() - (y.imag() / tau.imag()) * tau.real();
    const long   m = static_cast<long>(std::floor(s));
    return {y - static_cast<double>(m), m, n};
}

/// Distance from x to the nearest point of Z + tau*Z.
inline double lattice_distance(cx x, cx tau) {
    const auto r  = lattice_reduce(x, tau);
    double     d  = std::abs(r.reduced);
    for (long mm = 0; mm <= 1; ++mm)
        for (long nn = 0; nn <= 1; ++nn)
            d = std::min(d, std::abs(r.reduced - cx(static_cast<double>(mm), 0) -
                                     static_cast<double>(nn) * tau));
    return d;
}

inline bool on_lattice(cx x, cx tau, double tol = 1e-9) {
    return lattice_distance(x, tau) < tol;
}

/// Global evaluation parameters: tau, p = e^{2 pi i tau}, hbar, q = e^{pi i hbar},
/// product truncation and tolerances. Everything downstream takes one of these.
struct ModularParams {
    cx     tau;
    cx     p;
    cx     hbar;
    cx     q;
    int    trunc      = 40;
    double tol_eval   = 1e-12;
    double tol_check  = 1e-8;
    double pole_tol   = 1e-9;  // "within tol of a pole" after lattice reduction
    int    n_max      = 20;    // genericity of hbar checked for n = 1..n_max

    static ModularParams make(cx tau, cx hbar, int trunc = 40, double tol_eval = 1e-12,
                              double tol_check = 1e-8) {
        ModularParams mp;
        mp.tau       = tau;
        mp.hbar      = hbar;
        mp.trunc     = trunc;
        mp.tol_eval  = tol_eval;
        mp.tol_check = tol_check;
        mp.p         = std::exp(two_pi_i * tau);
        mp.q         = std::exp(iu * pi * hbar);
        mp.validate();
        return mp;
    }

    void validate() const {
        if (!is_finite(tau) || !is_finite(hbar)) throw invalid_params("non-finite tau or hbar");
        if (tau.imag() <= 0.0) throw invalid_params("Im(tau) must be positive");
        if (std::abs(p) >= 1.0) throw invalid_params("|p| >= 1");
        if (trunc < 1) throw invalid_params("trunc must be >= 1");
        for (int n = 1; n <= n_max; ++n) {
            if (on_lattice(static_cast<double>(n) * hbar, tau, 1e-8))
                throw invalid_params("n*hbar lies on the lattice for n = " + std::to_string(n));
        }
        if (std::pow(std::abs(p), trunc + 1) >= tol_eval)
            throw invalid_params("trunc too small: |p|^(trunc+1) >= tol_eval");
    }

    /// Truncation error bound |p|^{N+1}/(1-|p|) recorded in reports.
    double truncation_bound() const {
        const double ap = std::abs(p);
        return std::pow(ap, trunc + 1) / (1.0 - ap);
    }
};

}  // namespace ellq
