#pragma once

#include <numeric>
#include <string>
#include <vector>

#include "ellq/common.hpp"

namespace ellq {

/// A weight written in the basis of simple roots (root-span coordinates).
/// All implemented formulas pair weights against alpha_i, alpha_i^vee or
/// fundamental coweights, so root-span coordinates are the whole story for
/// nondegenerate Cartan matrices.
struct Weight {
    Vec  coords;  // lambda = sum_i coords[i] * alpha_i
    bool in_root_span = true;

    static Weight zero(int rank) {
        Weight w;
        w.coords = Vec::Zero(rank);
        return w;
    }
    Weight operator+(const Weight& o) const { return {coords + o.coords, in_root_span}; }
    Weight operator-(const Weight& o) const { return {coords - o.coords, in_root_span}; }
    Weight scaled(cx s) const { return {s * coords, in_root_span}; }
};

/// Symmetrizable Cartan datum: integer matrix A, minimal relatively prime
/// symmetrizers d_i, and the Gram matrix (alpha_i, alpha_j) = d_i a_ij.
struct CartanDatum {
    Eigen::MatrixXi          A;
    std::vector<long>        d;
    Eigen::MatrixXd          gram;  // real symmetric, d_i * a_ij
    bool                     nondegenerate = false;
    std::vector<std::string> labels;

    int rank() const { return static_cast<int>(A.rows()); }

    Weight alpha(int i) const {
        Weight w = Weight::zero(rank());
        w.coords[i] = 1.0;
        return w;
    }

    /// (lambda, alpha_i)
    cx pair_alpha(const Weight& w, int i) const {
        cx s = 0.0;
        for (int j = 0; j < rank(); ++j) s += w.coords[j] * gram(j, i);
        return s;
    }

    /// (lambda, mu) through the Gram matrix on the root span.
    cx pair(const Weight& a, const Weight& b) const {
        cx s = 0.0;
        for (int i = 0; i < rank(); ++i)
            for (int j = 0; j < rank(); ++j) s += a.coords[i] * gram(i, j) * b.coords[j];
        return s;
    }

    /// lambda(alpha_i^vee) = (lambda, alpha_i)/d_i
    cx coweight_value(const Weight& w, int i) const {
        return pair_alpha(w, i) / static_cast<double>(d[i]);
    }

    /// lambda(varpi_j^vee); in root-span coordinates this is coords[j].
    /// Refused for degenerate A (the realization quotient is not implemented).
    cx fund_coweight_value(const Weight& w, int j) const {
        if (!nondegenerate)
            throw unsupported_cartan("fundamental coweights need a nondegenerate Cartan matrix");
        return w.coords[j];
    }

    /// Weight with prescribed values N_i = mu(alpha_i^vee): solves gram * l = d .* N.
    Weight weight_from_coweight_values(const std::vector<cx>& N) const {
        if (!nondegenerate)
            throw unsupported_cartan("weight reconstruction needs a nondegenerate Cartan matrix");
        Vec rhs(rank());
        for (int i = 0; i < rank(); ++i) rhs[i] = static_cast<double>(d[i]) * N[i];
        Weight w;
        w.coords = gram.cast<cx>().fullPivLu().solve(rhs);
        return w;
    }

    /// gamma in Pbar_vee iff (gamma, alpha_i) is an integer for all i.
    bool in_pbar_vee(const Weight& w, double tol = 1e-9) const {
        for (int i = 0; i < rank(); ++i) {
            const cx v = pair_alpha(w, i);
            if (std::abs(v.imag()) > tol) return false;
            if (std::abs(v.real() - std::round(v.real())) > tol) return false;
        }
        return true;
    }

    /// gamma in P iff (gamma, alpha_i) in d_i * Z for all i.
    bool in_weight_lattice(const Weight& w, double tol = 1e-9) const {
        for (int i = 0; i < rank(); ++i) {
            const cx v = pair_alpha(w, i) / static_cast<double>(d[i]);
            if (std::abs(v.imag()) > tol) return false;
            if (std::abs(v.real() - std::round(v.real())) > tol) return false;
        }
        return true;
    }
};

/// Checks the generalized-Cartan axioms and computes the minimal relatively
/// prime symmetrizers, walking the Dynkin graph with rational ratios.
inline CartanDatum validate_cartan(const Eigen::MatrixXi& A,
                                   std::vector<std::string> labels = {}) {
    const int n = static_cast<int>(A.rows());
    if (A.cols() != n || n == 0) throw invalid_cartan("Cartan matrix must be square, nonempty");
    for (int i = 0; i < n; ++i) {
        if (A(i, i) != 2) throw invalid_cartan("diagonal entries must equal 2");
        for (int j = 0; j < n; ++j) {
            if (i != j && A(i, j) > 0) throw invalid_cartan("off-diagonal entries must be <= 0");
            if (i != j && ((A(i, j) == 0) != (A(j, i) == 0)))
                throw invalid_cartan("not symmetrizable: zero pattern is not symmetric");
        }
    }
    // d_i a_ij = d_j a_ji: propagate rational ratios num/den per component.
    std::vector<long> num(n, 0), den(n, 1);
    for (int start = 0; start < n; ++start) {
        if (num[start] != 0) continue;
        num[start] = den[start] = 1;
        std::vector<int> stack{start};
        while (!stack.empty()) {
            const int i = stack.back();
            stack.pop_back();
            for (int j = 0; j < n; ++j) {
                if (i == j || A(i, j) == 0) continue;
                // d_j = d_i * a_ij / a_ji
                long nj = num[i] * A(i, j), dj = den[i] * A(j, i);
                if (dj < 0) { nj = -nj; dj = -dj; }
                const long g = std::gcd(std::abs(nj), dj);
                nj /= g; dj /= g;
                if (num[j] == 0) {
                    num[j] = nj; den[j] = dj;
                    stack.push_back(j);
                } else if (num[j] * dj != nj * den[j]) {
                    throw invalid_cartan("not symmetrizable: inconsistent ratios");
                }
            }
        }
    }
    long L = 1;
    for (int i = 0; i < n; ++i) L = std::lcm(L, den[i]);
    std::vector<long> d(n);
    long              g = 0;
    for (int i = 0; i < n; ++i) {
        d[i] = num[i] * (L / den[i]);
        if (d[i] <= 0) throw invalid_cartan("not symmetrizable: nonpositive symmetrizer");
        g = std::gcd(g, d[i]);
    }
    for (auto& di : d) di /= g;

    CartanDatum cd;
    cd.A = A;
    cd.d = d;
    cd.gram.resize(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            cd.gram(i, j) = static_cast<double>(d[i] * A(i, j));
            if (d[i] * A(i, j) != d[j] * A(j, i))
                throw invalid_cartan("not symmetrizable: DA is not symmetric");
        }
    cd.nondegenerate = std::abs(cd.gram.determinant()) > 1e-9;
    if (labels.empty())
        for (int i = 0; i < n; ++i) labels.push_back(std::to_string(i + 1));
    cd.labels = std::move(labels);
    return cd;
}

inline CartanDatum cartan_sl2() {
    Eigen::MatrixXi A(1, 1);
    A << 2;
    return validate_cartan(A);
}

inline CartanDatum cartan_sl3() {
    Eigen::MatrixXi A(2, 2);
    A << 2, -1, -1, 2;
    return validate_cartan(A);
}

inline CartanDatum cartan_a1xa1() {
    Eigen::MatrixXi A(2, 2);
    A << 2, 0, 0, 2;
    return validate_cartan(A);
}

}  // namespace ellq
