#pragma once

#include <algorithm>
#include <string>
#include <vector>

#include "ellq/inverse.hpp"

namespace ellq {

// ---------------------------------------------------------------------------
// Elliptic Drinfeld data, isomorphism classes mod the lattice, the balanced
// hbar-string normal form, and triangularity.
// ---------------------------------------------------------------------------

struct EllipticHighestWeight {
    Weight                       mu;
    std::vector<std::vector<cx>> b;  // per node: slice-reduced multiset
};

struct StringDiagnostic {
    struct StringInfo {
        std::vector<cx> points;  // coherent representatives, descending hbar level
        std::string     parens;
        bool            balanced = false;
    };
    std::vector<StringInfo> strings;
    bool                    all_balanced = true;
};

namespace detail {

/// x = k*step + lattice? Returns k if so (|k| <= kmax).
inline std::optional<int> step_multiple(cx x, cx step, cx tau, int kmax, double tol = 1e-7) {
    for (int k = -kmax; k <= kmax; ++k)
        if (on_lattice(x - static_cast<double>(k) * step, tau, tol)) return k;
    return std::nullopt;
}

}  // namespace detail

/// Decomposes zero/pole data (slice representatives, listed with
/// multiplicity) into hbar_i-strings, builds the parenthesis expression of
/// each string top-down, and checks balance by the right-to-left counter.
inline StringDiagnostic theta_quotient_form_check(const std::vector<cx>& zeros,
                                                  const std::vector<cx>& poles, long d_i,
                                                  const ModularParams& mp) {
    const cx step = static_cast<double>(d_i) * mp.hbar;
    struct Point {
        cx  pos;
        int level = 0;
        int zero_mult = 0, pole_mult = 0;
    };
    std::vector<std::vector<Point>> strings;

    auto insert = [&](cx x, bool is_zero) {
        for (auto& str : strings) {
            const auto k = detail::step_multiple(x - str.front().pos, step, mp.tau, mp.n_max);
            if (!k) continue;
            for (auto& pt : str)
                if (pt.level == *k) {
                    (is_zero ? pt.zero_mult : pt.pole_mult) += 1;
                    return;
                }
            Point pt;
            pt.level = *k;
            pt.pos   = str.front().pos + static_cast<double>(*k) * step;
            (is_zero ? pt.zero_mult : pt.pole_mult) = 1;
            str.push_back(pt);
            return;
        }
        Point pt;
        pt.pos                                  = x;
        (is_zero ? pt.zero_mult : pt.pole_mult) = 1;
        strings.push_back({pt});
    };
    for (const cx& z : zeros) insert(z, true);
    for (const cx& p : poles) insert(p, false);

    StringDiagnostic diag;
    for (auto& str : strings) {
        std::sort(str.begin(), str.end(), [](const Point& a, const Point& b) {
            return a.level > b.level;
        });
        StringDiagnostic::StringInfo info;
        for (const auto& pt : str) {
            info.points.push_back(pt.pos);
            const int net = pt.zero_mult - pt.pole_mult;  // same-point pairs cancel
            for (int r = 0; r < net; ++r) info.parens += ')';
            for (int r = 0; r < -net; ++r) info.parens += '(';
        }
        // Right-to-left counter: ')' decrements, '(' increments; unbalanced
        // iff the counter ever becomes positive, or is nonzero at the end.
        int  counter  = 0;
        bool bad      = false;
        for (auto it = info.parens.rbegin(); it != info.parens.rend(); ++it) {
            counter += (*it == '(') ? 1 : -1;
            if (counter > 0) bad = true;
        }
        info.balanced = !bad && counter == 0;
        diag.all_balanced = diag.all_balanced && info.balanced;
        diag.strings.push_back(std::move(info));
    }
    return diag;
}

/// Reads the Phi_i eigenvalues on the highest weight vector and extracts
/// (mu, b): theta-quotient patterns with shift d_i hbar only (Thm. class1).
inline EllipticHighestWeight elliptic_drinfeld_data(const EllipticRep& erep) {
    const int b = top_weight_block(erep.space, erep.datum);
    if (b < 0) throw not_highest_weight("no top weight block");
    if (erep.space.dims[b] != 1)
        throw not_highest_weight("top weight space has dimension " +
                                 std::to_string(erep.space.dims[b]));
    const int idx = erep.space.offsets[b];
    const ModularParams& mp = erep.params;

    // The raising half-currents must annihilate the top vector.
    {
        SamplePlan         plan;
        detail::EqgSampler sampler(erep, plan);
        for (int s = 0; s < 3; ++s) {
            const cx     u   = sampler.u();
            const Weight lam = sampler.lambda();
            for (int i = 0; i < erep.rank(); ++i)
                if (erep.half(i, +1, u, lam).col(idx).cwiseAbs().maxCoeff() > 1e-8)
                    throw not_highest_weight("top vector not annihilated by raising currents");
        }
    }

    const PhiEigenBlocks eb = extract_phi_eigen_data(erep);
    const PhiEigenBlocks::Block* top = nullptr;
    for (const auto& blk : eb.blocks)
        if (blk.offset == idx && blk.dim == 1) top = &blk;
    if (!top) throw not_highest_weight("no one-dimensional eigenblock at the top weight");

    EllipticHighestWeight hw;
    hw.mu = erep.space.weights[b];
    Slice slice{mp.tau};
    for (int i = 0; i < erep.rank(); ++i) {
        const cx shift = static_cast<double>(erep.datum.d[i]) * mp.hbar;
        std::vector<cx> bs;
        for (size_t l = 0; l < top->tq[i].poles.size(); ++l) {
            // Accept only the raising pair zero = pole - d_i hbar.
            if (!on_lattice(top->tq[i].zeros[l] - (top->tq[i].poles[l] - shift), mp.tau, 1e-7)) {
                StringDiagnostic diag = theta_quotient_form_check(
                    top->tq[i].zeros, top->tq[i].poles, erep.datum.d[i], mp);
                (void)diag;
                throw form_mismatch("highest-weight eigenvalue has a lowering theta-pair");
            }
            bs.push_back(slice.reduce(top->tq[i].poles[l]));
        }
        const cx Ni = erep.datum.coweight_value(hw.mu, i);
        if (std::abs(Ni - static_cast<double>(bs.size())) > 1e-8)
            throw form_mismatch("mu(alpha_i^vee) does not match the number of theta pairs");
        hw.b.push_back(std::move(bs));
    }
    return hw;
}

/// Equal highest weight and per-node multisets matching mod the lattice.
inline bool same_isoclass(const EllipticHighestWeight& A, const EllipticHighestWeight& B,
                          const ModularParams& mp) {
    if (A.b.size() != B.b.size()) return false;
    if ((A.mu.coords - B.mu.coords).cwiseAbs().maxCoeff() > 1e-8) return false;
    Slice slice{mp.tau};
    for (size_t i = 0; i < A.b.size(); ++i) {
        if (A.b[i].size() != B.b[i].size()) return false;
        auto key = [&](cx x) { return slice.reduce(x); };
        std::vector<cx> a = A.b[i], bb = B.b[i];
        auto cmp = [&](cx x, cx y) {
            const cx rx = key(x), ry = key(y);
            if (std::abs(rx.real() - ry.real()) > 1e-8) return rx.real() < ry.real();
            return rx.imag() < ry.imag();
        };
        std::sort(a.begin(), a.end(), cmp);
        std::sort(bb.begin(), bb.end(), cmp);
        for (size_t k = 0; k < a.size(); ++k)
            if (!on_lattice(a[k] - bb[k], mp.tau, 1e-8)) return false;
    }
    return true;
}

// ---------------------------------------------------------------------------
// Triangularity
// ---------------------------------------------------------------------------

struct TriangularityReport {
    bool   top_found           = false;
    int    top_dimension       = 0;
    double raising_residual    = 0.0;
    double eigenvector_residual = 0.0;
    int    closure_dimension   = 0;
    int    total_dimension     = 0;
    bool   spanning            = false;
};

/// Finds a Phi-eigenvector at the top weight, checks it is killed by the
/// raising currents, and grows the span under the stored lowering
/// coefficients until the dimension stabilizes.
inline TriangularityReport verify_triangularity(const EllipticRep& erep) {
    TriangularityReport rep;
    rep.total_dimension = erep.dim();
    const int b = top_weight_block(erep.space, erep.datum);
    if (b < 0) throw not_highest_weight("degenerate top: no top weight block");
    rep.top_found     = true;
    rep.top_dimension = erep.space.dims[b];

    // Eigenvector: one-dimensional joint eigenblock inside the top space.
    const PhiEigenBlocks eb = extract_phi_eigen_data(erep);
    Vec                  omega;
    for (const auto& blk : eb.blocks)
        if (blk.weight_block == b && blk.dim == 1 && omega.size() == 0)
            omega = eb.S.col(blk.offset);
    if (omega.size() == 0) throw not_highest_weight("degenerate top: no eigenvector");

    SamplePlan         plan;
    detail::EqgSampler sampler(erep, plan);
    for (int s = 0; s < 5; ++s) {
        const cx     u   = sampler.u();
        const Weight lam = sampler.lambda();
        for (int i = 0; i < erep.rank(); ++i) {
            rep.raising_residual = std::max(
                rep.raising_residual,
                (erep.half(i, +1, u, lam) * omega).cwiseAbs().maxCoeff() /
                    std::max(1.0, omega.cwiseAbs().maxCoeff()));
            const Vec pv   = erep.phi(i, u) * omega;
            const cx  coef = (omega.adjoint() * pv)(0, 0) / (omega.adjoint() * omega)(0, 0);
            rep.eigenvector_residual =
                std::max(rep.eigenvector_residual, (pv - coef * omega).cwiseAbs().maxCoeff());
        }
    }

    // Span closure under the stored lowering coefficients at a generic
    // lambda (a single generic lambda suffices, Lemma eqg-pbw).
    Weight lam0 = sampler.lambda();
    Mat    span(erep.dim(), 1);
    span.col(0) = omega;
    int rank_now = 1;
    for (int iter = 0; iter < erep.dim() + 1; ++iter) {
        std::vector<Vec> newvecs;
        for (int i = 0; i < erep.rank(); ++i)
            for (const auto& p : erep.hc(i, -1).poles)
                for (const auto& cmat : p.coeffs)
                    for (int cidx = 0; cidx < span.cols(); ++cidx)
                        newvecs.push_back(cmat.eval(lam0) * span.col(cidx));
        Mat cand(erep.dim(), span.cols() + static_cast<long>(newvecs.size()));
        cand.leftCols(span.cols()) = span;
        for (size_t k = 0; k < newvecs.size(); ++k) cand.col(span.cols() + k) = newvecs[k];
        Eigen::ColPivHouseholderQR<Mat> qr(cand);
        qr.setThreshold(1e-9);
        const int r = static_cast<int>(qr.rank());
        if (r == rank_now) break;
        rank_now = r;
        // Orthonormal basis of the new span.
        Eigen::HouseholderQR<Mat> hqr(cand);
        span = Mat(hqr.householderQ()) .leftCols(r);
    }
    rep.closure_dimension = rank_now;
    rep.spanning          = (rank_now == erep.dim());
    return rep;
}

}  // namespace ellq
