#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "ellq/eqg_verify.hpp"
#include "ellq/factorization.hpp"
#include "ellq/monodromy.hpp"

namespace ellq {

// ---------------------------------------------------------------------------
// Slice: the fundamental parallelogram with explicit lattice-offset tracking.
// ---------------------------------------------------------------------------

struct Slice {
    cx tau;

    cx reduce(cx x) const { return lattice_reduce(x, tau).reduced; }
    std::pair<long, long> offsets(cx x) const {
        const auto r = lattice_reduce(x, tau);
        return {r.m, r.n};
    }
    bool contains(cx x, double tol = 1e-9) const { return std::abs(reduce(x) - x) < tol; }
};

// ---------------------------------------------------------------------------
// Gauge functions: psi(lambda) = S diag_B( c_B e^{2 pi i <e_B, l>} ) S^{-1}
// on blocks refining the Phi eigenblocks inside weight spaces.
// ---------------------------------------------------------------------------

struct GaugeFunction {
    Mat S, Sinv;
    struct Block {
        int offset = 0, dim = 1;
        int weight_block = 0;
        cx  c{1.0};
        Vec e;  // lambda exponent covector on root-span coordinates
    };
    std::vector<Block> blocks;

    static GaugeFunction identity(const WeightGradedSpace& sp, int rank) {
        GaugeFunction g;
        g.S    = Mat::Identity(sp.total_dim, sp.total_dim);
        g.Sinv = g.S;
        for (size_t b = 0; b < sp.weights.size(); ++b) {
            Block blk;
            blk.offset       = sp.offsets[b];
            blk.dim          = sp.dims[b];
            blk.weight_block = static_cast<int>(b);
            blk.e            = Vec::Zero(rank);
            g.blocks.push_back(blk);
        }
        return g;
    }

    Mat eval(const Weight& lam) const {
        const int n = static_cast<int>(S.rows());
        Mat       D = Mat::Zero(n, n);
        for (const auto& b : blocks) {
            const cx v = b.c * std::exp(two_pi_i * (b.e.transpose() * lam.coords)(0, 0));
            for (int k = 0; k < b.dim; ++k) D(b.offset + k, b.offset + k) = v;
        }
        return S * D * Sinv;
    }

    GaugeFunction inverse() const {
        GaugeFunction g = *this;
        for (auto& b : g.blocks) {
            b.c = 1.0 / b.c;
            b.e = -b.e;
        }
        return g;
    }

    bool is_identity(double tol = 1e-12) const {
        for (const auto& b : blocks)
            if (std::abs(b.c - 1.0) > tol || b.e.cwiseAbs().maxCoeff() > tol) return false;
        return true;
    }
};

// ---------------------------------------------------------------------------
// Eigen-data extraction: the analytic form of the Phi eigenvalues per joint
// generalized eigenblock (Knight form, Prop. eqg-knight).
// ---------------------------------------------------------------------------

struct PhiEigenBlocks {
    Mat S, Sinv;
    struct Block {
        int                        offset = 0, dim = 1;
        int                        weight_block = 0;
        std::vector<ThetaQuotient> tq;        // per node, constant folded in
        std::vector<cx>            constant;  // per node (the C_i of Thm. class1)
        std::vector<cx>            eta;       // per node: exp(pi i sum(b-a))
    };
    std::vector<Block> blocks;
};

namespace detail {

/// Scalar restriction tr((X^* X)^{-1} X^* M X)/dim of M to the column span X.
inline cx restrict_scalar(const Mat& M, const Mat& X) {
    const Mat R = (X.adjoint() * X).ldlt().solve(X.adjoint() * (M * X));
    return R.trace() / static_cast<double>(R.rows());
}

/// Zeros of the scalar rational kappa + sum r_k/(z - y_j)^k with known poles:
/// roots of the numerator polynomial, recovered through sampling.
inline std::vector<cx> scalar_rational_zeros(const std::function<cx(cx)>& f,
                                             const std::vector<std::pair<cx, int>>& poles) {
    int deg = 0;
    for (const auto& p : poles) deg += p.second;
    if (deg == 0) return {};
    Rng              rng(31);
    Eigen::MatrixXcd V(deg + 1, deg + 1);
    Eigen::VectorXcd rhs(deg + 1);
    for (int s = 0; s <= deg; ++s) {
        cx z;
        bool ok = false;
        while (!ok) {
            z  = std::exp(cx(rng.uniform(-0.6, 0.6), 0.0)) *
                std::exp(iu * rng.uniform(0.0, 2.0 * pi));
            ok = true;
            for (const auto& p : poles) ok = ok && std::abs(z - p.first) > 0.05;
        }
        cx denom = 1.0;
        for (const auto& p : poles) denom *= std::pow(z - p.first, p.second);
        cx w = 1.0;
        for (int k = 0; k <= deg; ++k) {
            V(s, k) = w;
            w *= z;
        }
        rhs[s] = f(z) * denom;
    }
    const Eigen::VectorXcd c = V.fullPivLu().solve(rhs);
    return polynomial_roots({c.data(), c.data() + deg + 1});
}

}  // namespace detail

/// Extracts Knight-form eigenvalue data of {Phi_i} per joint eigenblock.
/// For functor-backed representations the zero/pole data comes from the
/// rational Psi_i restricted to each block (never from numerical limiting).
inline PhiEigenBlocks extract_phi_eigen_data(const EllipticRep& erep) {
    const ModularParams& mp = erep.params;
    PhiEigenBlocks       out;
    const int            n = erep.dim();

    if (!erep.functor_backed) {
        out.S    = erep.S;
        out.Sinv = erep.Sinv;
        for (const auto& pb : erep.phi_blocks) {
            PhiEigenBlocks::Block b;
            b.offset = pb.offset;
            b.dim    = pb.dim;
            // Locate the weight block containing this eigenblock.
            for (size_t wb = 0; wb < erep.space.weights.size(); ++wb)
                if (pb.offset >= erep.space.offsets[wb] &&
                    pb.offset < erep.space.offsets[wb] + erep.space.dims[wb])
                    b.weight_block = static_cast<int>(wb);
            for (int i = 0; i < erep.rank(); ++i) {
                ThetaQuotient tq = pb.tq[i];
                cx            C  = tq.constant;
                tq.constant      = 1.0;
                cx s             = 0.0;
                for (size_t l = 0; l < tq.poles.size(); ++l) s += tq.poles[l] - tq.zeros[l];
                b.tq.push_back(tq);
                b.constant.push_back(C);
                b.eta.push_back(std::exp(iu * pi * s));
            }
            out.blocks.push_back(std::move(b));
        }
        return out;
    }

    // Joint split of {Phi_i(u_s)} within each weight space.
    const std::vector<cx> us = {cx(0.231, 0.118), cx(0.677, 0.301), cx(0.413, 0.522)};
    Mat                   S  = Mat::Zero(n, n);
    struct RawBlock {
        Mat basis;
        int weight_block, offset, dim;
    };
    std::vector<RawBlock> raw;
    int                   col = 0;
    for (size_t wb = 0; wb < erep.space.weights.size(); ++wb) {
        const int off = erep.space.offsets[wb], d = erep.space.dims[wb];
        std::vector<Mat> family;
        for (int i = 0; i < erep.rank(); ++i)
            for (const cx& u : us) family.push_back(erep.phi(i, u + erep.space.weights[wb].coords[0] * 0.0).block(off, off, d, d));
        const auto split = joint_spectral_split(family, mp.tol_check * 10);
        for (const auto& blk : split.blocks) {
            Mat lifted = Mat::Zero(n, blk.dim);
            lifted.middleRows(off, d) = blk.basis;
            S.middleCols(col, blk.dim) = lifted;
            raw.push_back({lifted, static_cast<int>(wb), col, blk.dim});
            col += blk.dim;
        }
    }
    out.S    = S;
    out.Sinv = S.fullPivLu().inverse();

    for (const auto& rb : raw) {
        PhiEigenBlocks::Block b;
        b.offset       = rb.offset;
        b.dim          = rb.dim;
        b.weight_block = rb.weight_block;
        for (int i = 0; i < erep.rank(); ++i) {
            // Scalar rational eigenvalue of Psi_i on the block.
            std::vector<std::pair<cx, int>> poles;
            for (const auto& p : erep.qrep.Psi[i].poles) {
                int order = 0;
                for (int k = p.order(); k >= 1; --k)
                    if (std::abs(detail::restrict_scalar(p.coeffs[k - 1], rb.basis)) > 1e-9) {
                        order = k;
                        break;
                    }
                if (order > 0) poles.emplace_back(p.z0, order);
            }
            auto psi_scalar = [&](cx z) {
                return detail::restrict_scalar(erep.qrep.Psi[i].eval(z), rb.basis);
            };
            const std::vector<cx> zeros = detail::scalar_rational_zeros(psi_scalar, poles);
            if (zeros.size() != [&] {
                    size_t t = 0;
                    for (const auto& p : poles) t += p.second;
                    return t;
                }())
                throw form_mismatch("Psi eigenvalue zero/pole counts differ on a block");

            // Knight pairing: each pole c pairs with a zero at c - d_i hbar
            // (raising pair) or c + d_i hbar (lowering pair), mod p^Z.
            const cx      shift = static_cast<double>(erep.datum.d[i]) * mp.hbar;
            ThetaQuotient tq;
            std::vector<bool> used(zeros.size(), false);
            for (const auto& [y, order] : poles)
                for (int rep = 0; rep < order; ++rep) {
                    const cx c = lattice_reduce(log_over_2pii(y), mp.tau).reduced;
                    bool     found = false;
                    for (size_t zi = 0; zi < zeros.size() && !found; ++zi) {
                        if (used[zi]) continue;
                        const cx r = log_over_2pii(zeros[zi] / y);
                        if (on_lattice(r + shift, mp.tau, 1e-7)) {  // zero = pole * q_i^{-2}
                            tq.poles.push_back(c);
                            tq.zeros.push_back(c - shift);
                            used[zi] = found = true;
                        } else if (on_lattice(r - shift, mp.tau, 1e-7)) {
                            tq.poles.push_back(c);
                            tq.zeros.push_back(c + shift);
                            used[zi] = found = true;
                        }
                    }
                    if (!found)
                        throw form_mismatch("eigenvalue not of Knight form at node " +
                                            std::to_string(i));
                }
            // Constant: measured at regular sample points.
            cx C = 0.0;
            int cnt = 0;
            for (const cx& u : us) {
                const cx t = tq.eval(u, mp);
                const cx p = detail::restrict_scalar(erep.phi(i, u), rb.basis);
                C += p / t;
                ++cnt;
            }
            C /= static_cast<double>(cnt);
            cx s = 0.0;
            for (size_t l = 0; l < tq.poles.size(); ++l) s += tq.poles[l] - tq.zeros[l];
            b.tq.push_back(tq);
            b.constant.push_back(C);
            b.eta.push_back(std::exp(iu * pi * s));
        }
        out.blocks.push_back(std::move(b));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Gauge application
// ---------------------------------------------------------------------------

/// Twists V into W so that psi : V -> W is a morphism:
///   Phi^W_i(u,l) = psi(l + h/2 a_i) Phi^V_i(u) psi(l - h/2 a_i)^{-1}
///   X^W_i(u,l)  = psi(+-l -+ h/2(mu +- a_i) + h/2 a_i) X^V_i(u,l)
///                 psi(+-l -+ h/2 mu - h/2 a_i)^{-1}  on V_mu.
/// The psi blocks must refine the Phi eigenblocks.
inline EllipticRep apply_gauge(const EllipticRep& V, const GaugeFunction& psi) {
    EllipticRep W = V;
    const cx    hb = V.params.hbar;
    const int   n  = V.dim();

    // Phi: on a psi block B the twist multiplies by e^{2 pi i hbar e_B[i]}.
    for (int i = 0; i < V.rank(); ++i) {
        Mat D = Mat::Zero(n, n);
        for (const auto& b : psi.blocks) {
            const cx v = std::exp(two_pi_i * hb * b.e[i]);
            for (int k = 0; k < b.dim; ++k) D(b.offset + k, b.offset + k) = v;
        }
        const Mat Pre = psi.S * D * psi.Sinv;
        if (V.functor_backed) {
            if (W.phi_pre.empty()) W.phi_pre.assign(V.rank(), Mat::Identity(n, n));
            W.phi_pre[i] = Pre * W.phi_pre[i];
        } else {
            // Analytic blocks must align with psi blocks: fold the constant in.
            for (auto& pb : W.phi_blocks)
                for (const auto& b : psi.blocks)
                    if (b.offset == pb.offset) pb.tq[i].constant *= std::exp(two_pi_i * hb * b.e[i]);
        }
    }

    // Half-currents: transform each LambdaMat blockwise in the psi basis.
    for (int i = 0; i < V.rank(); ++i)
        for (int sign : {+1, -1}) {
            const double          sg = sign;
            DynamicalHalfCurrent& hcW = W.hc(i, sign);
            const auto&           hcV = V.hc(i, sign);
            for (size_t pi_ = 0; pi_ < hcV.poles.size(); ++pi_)
                for (size_t nn = 0; nn < hcV.poles[pi_].coeffs.size(); ++nn) {
                    const LambdaMat& src = hcV.poles[pi_].coeffs[nn];
                    LambdaMat        dst;
                    for (const auto& term : src.terms) {
                        const Mat Mt = psi.Sinv * term.M * psi.S;
                        for (const auto& T : psi.blocks)
                            for (const auto& Sb : psi.blocks) {
                                const Mat sub = Mt.block(T.offset, Sb.offset, T.dim, Sb.dim);
                                if (max_abs(sub) < 1e-14) continue;
                                const Weight mu = V.space.weights[Sb.weight_block];
                                const Weight tgt =
                                    mu + V.datum.alpha(i).scaled(sg);
                                const Weight shiftL =
                                    tgt.scaled(-sg * hb / 2.0) + V.datum.alpha(i).scaled(hb / 2.0);
                                const Weight shiftR = mu.scaled(-sg * hb / 2.0) +
                                                      V.datum.alpha(i).scaled(-hb / 2.0);
                                const cx factor =
                                    T.c / Sb.c *
                                    std::exp(two_pi_i *
                                             ((T.e.transpose() * shiftL.coords)(0, 0) -
                                              (Sb.e.transpose() * shiftR.coords)(0, 0)));
                                Mat big = Mat::Zero(n, n);
                                big.block(T.offset, Sb.offset, T.dim, Sb.dim) = factor * sub;
                                LambdaMat::Term nt;
                                nt.e = term.e + sg * (T.e - Sb.e);
                                nt.M = psi.S * big * psi.Sinv;
                                dst.terms.push_back(std::move(nt));
                            }
                    }
                    dst.compress();
                    hcW.poles[pi_].coeffs[nn] = std::move(dst);
                }
        }
    return W;
}

// ---------------------------------------------------------------------------
// Gauge normalization: first gauge (lambda-flattening) and second gauge
// (kills the eigenvalue constants, makes G^+(0) = 1).
// ---------------------------------------------------------------------------

struct GaugeRecord {
    struct FirstGaugeEntry {
        int             weight_block = 0;
        Eigen::VectorXi alpha;  // element of the root lattice Q
    };
    std::vector<FirstGaugeEntry> first;
    std::vector<std::vector<cx>> lnC;  // per block, per node: ln G_j^+(0) (principal)
    std::vector<GaugeFunction>   applied;  // psi's, in application order
    bool                         identity = true;

    /// The morphism from the normalized representation back to the original:
    /// the inverse of the applied twists, composed right to left.
    Mat morphism_to_original(const Weight& lam) const {
        if (applied.empty()) throw invalid_input("no gauges applied");
        Mat out = applied.front().inverse().eval(lam);
        for (size_t k = 1; k < applied.size(); ++k)
            out = out * applied[k].inverse().eval(lam);
        return out;
    }
};

inline std::pair<EllipticRep, GaugeRecord> normalize_gauges(const EllipticRep& erep_in) {
    EllipticRep erep = erep_in;
    GaugeRecord rec;
    const ModularParams& mp   = erep.params;
    const CartanDatum&   cd   = erep.datum;
    const int            rank = erep.rank();

    // --- First gauge: merge equivalent eigenvalue classes. ---
    PhiEigenBlocks eb = extract_phi_eigen_data(erep);
    {
        GaugeFunction psi;
        psi.S    = eb.S;
        psi.Sinv = eb.Sinv;
        bool any = false;
        std::vector<int> anchor(eb.blocks.size());
        for (size_t b = 0; b < eb.blocks.size(); ++b) anchor[b] = static_cast<int>(b);
        auto same_tq = [&](const ThetaQuotient& A, const ThetaQuotient& B) {
            if (A.poles.size() != B.poles.size()) return false;
            std::vector<bool> used(B.poles.size(), false);
            for (const cx& a : A.poles) {
                bool ok = false;
                for (size_t k = 0; k < B.poles.size() && !ok; ++k)
                    if (!used[k] && on_lattice(a - B.poles[k], mp.tau, 1e-7)) used[k] = ok = true;
                if (!ok) return false;
            }
            return true;
        };
        for (size_t b = 0; b < eb.blocks.size(); ++b) {
            GaugeFunction::Block gb;
            gb.offset       = eb.blocks[b].offset;
            gb.dim          = eb.blocks[b].dim;
            gb.weight_block = eb.blocks[b].weight_block;
            gb.e            = Vec::Zero(rank);
            // Look for an earlier equivalent block in the same weight space.
            for (size_t a = 0; a < b; ++a) {
                if (eb.blocks[a].weight_block != eb.blocks[b].weight_block) continue;
                bool tq_match = true;
                for (int i = 0; i < rank && tq_match; ++i)
                    tq_match = same_tq(eb.blocks[a].tq[i], eb.blocks[b].tq[i]);
                if (!tq_match) continue;
                // Constants ratio e^{2 pi i hbar (alpha_i, alpha)} for integer alpha?
                Eigen::VectorXi best;
                bool            found = false;
                const int       R     = 3;
                std::vector<int> m(rank, -R);
                while (true) {
                    bool ok = true;
                    for (int i = 0; i < rank && ok; ++i) {
                        cx pairing = 0.0;
                        for (int j = 0; j < rank; ++j) pairing += cd.gram(i, j) * m[j];
                        const cx expect = std::exp(two_pi_i * mp.hbar * pairing);
                        ok = std::abs(eb.blocks[b].constant[i] / eb.blocks[a].constant[i] -
                                      expect) < 1e-7;
                    }
                    if (ok) {
                        best = Eigen::VectorXi(rank);
                        for (int j = 0; j < rank; ++j) best[j] = m[j];
                        // Prefer the least-norm solution.
                        if (best.cwiseAbs().sum() == 0 || !found) found = true;
                        if (best.cwiseAbs().sum() == 0) break;
                    }
                    int k = 0;
                    while (k < rank && ++m[k] > R) m[k++] = -R;
                    if (k == rank) break;
                }
                if (found && best.cwiseAbs().sum() > 0) {
                    // Twist this block by psi = e^{-2 pi i (lambda, alpha)}.
                    Vec al = Vec::Zero(rank);
                    for (int j = 0; j < rank; ++j) al[j] = static_cast<double>(best[j]);
                    gb.e = -(cd.gram.cast<cx>() * al);
                    any  = true;
                    rec.first.push_back({eb.blocks[b].weight_block, best});
                    break;
                }
            }
            psi.blocks.push_back(gb);
        }
        if (any) {
            erep = apply_gauge(erep, psi);
            rec.applied.push_back(psi);
            rec.identity = false;
            eb           = extract_phi_eigen_data(erep);
        }
    }

    // --- Second gauge: phi(lambda) = exp((1/hbar) sum_j (lam + hbar mu/2,
    // varpi_j^vee) ln C_j) per block; applied as psi = phi^{-1}. ---
    {
        if (!cd.nondegenerate)
            throw unsupported_cartan("second gauge needs fundamental coweights");
        GaugeFunction phi;
        phi.S    = eb.S;
        phi.Sinv = eb.Sinv;
        bool any = false;
        for (const auto& blk : eb.blocks) {
            GaugeFunction::Block gb;
            gb.offset       = blk.offset;
            gb.dim          = blk.dim;
            gb.weight_block = blk.weight_block;
            gb.e            = Vec::Zero(rank);
            const Weight& mu = erep.space.weights[blk.weight_block];
            cx            lc = 0.0;
            for (int j = 0; j < rank; ++j) {
                const cx lnC = std::log(blk.constant[j]);  // principal branch
                gb.e[j]      = lnC / (two_pi_i * mp.hbar);
                lc += 0.5 * mu.coords[j] * lnC;
                if (std::abs(blk.constant[j] - 1.0) > 1e-10) any = true;
            }
            gb.c = std::exp(lc);
            phi.blocks.push_back(gb);
            rec.lnC.emplace_back();
            for (int j = 0; j < rank; ++j) rec.lnC.back().push_back(std::log(blk.constant[j]));
        }
        if (any) {
            erep = apply_gauge(erep, phi.inverse());
            rec.applied.push_back(phi.inverse());
            rec.identity = false;
        } else if (rec.applied.empty()) {
            rec.applied.push_back(GaugeFunction::identity(erep.space, rank));
        }
    }
    return {erep, rec};
}

// ---------------------------------------------------------------------------
// The inverse functor
// ---------------------------------------------------------------------------

namespace detail {

inline std::vector<Mat> cauchy_taylor_mat(const std::function<Mat(cx)>& f, cx c, int max_order,
                                          double radius, int nodes = 256) {
    std::vector<Mat> vals;
    vals.reserve(nodes);
    for (int j = 0; j < nodes; ++j) {
        const double t = 2.0 * pi * j / nodes;
        vals.push_back(f(c + radius * std::exp(iu * t)));
    }
    std::vector<Mat> out;
    for (int k = 0; k <= max_order; ++k) {
        Mat s = Mat::Zero(vals[0].rows(), vals[0].cols());
        for (int j = 0; j < nodes; ++j) {
            const double t = 2.0 * pi * j / nodes;
            s += vals[j] * std::exp(-iu * (static_cast<double>(k) * t));
        }
        out.push_back(s / (static_cast<double>(nodes) * std::pow(radius, k)));
    }
    return out;
}

/// Taylor coefficients in delta = u - b of F(z,u) = z/(z - e^{2 pi i u}),
/// expressed over powers of s0 = w0/(z - w0), w0 = e^{2 pi i b}:
/// F_0 = 1 + s0 and F_k for k >= 1 is a polynomial in s0 (no constant term),
/// from s' = 2 pi i s(1 + s). Returns coefficient rows F_k over s0^m.
inline std::vector<std::vector<cx>> f_basis_polynomials(int max_order) {
    std::vector<std::vector<cx>> sk;  // sk[k][m] = coeff of s0^m in sigma_k
    sk.push_back({cx(0.0), cx(1.0)}); // sigma_0 = s0
    for (int k = 0; k + 1 <= max_order; ++k) {
        // (k+1) sigma_{k+1} = 2 pi i (sigma_k + sum_j sigma_j sigma_{k-j})
        std::vector<cx> nxt(sk[k].size() + sk[0].size(), cx(0.0));
        for (size_t m = 0; m < sk[k].size(); ++m) nxt[m] += sk[k][m];
        for (int j = 0; j <= k; ++j)
            for (size_t m1 = 0; m1 < sk[j].size(); ++m1)
                for (size_t m2 = 0; m2 < sk[k - j].size(); ++m2)
                    nxt[m1 + m2] += sk[j][m1] * sk[k - j][m2];
        for (auto& v : nxt) v *= two_pi_i / static_cast<double>(k + 1);
        sk.push_back(std::move(nxt));
    }
    std::vector<std::vector<cx>> F = sk;
    F[0] = {cx(1.0), cx(1.0)};  // 1 + s0
    return F;
}

}  // namespace detail

/// Inverse functor: factorizes each Phi_i and recovers the rational fields
/// by exact residue calculus. Requires a lambda-flat, gauge-normalized input
/// with slice eigen-data (run normalize_gauges first).
inline QLoopRep xi_functor(const EllipticRep& erep) {
    const ModularParams& mp = erep.params;
    for (int i = 0; i < erep.rank(); ++i)
        for (int sign : {+1, -1})
            if (!erep.hc(i, sign).lambda_independent(1e-7))
                throw invalid_input("xi_functor: half-current coefficients depend on lambda; "
                                    "normalize gauges first");

    const PhiEigenBlocks eb = extract_phi_eigen_data(erep);
    for (const auto& blk : eb.blocks)
        for (const cx& C : blk.constant)
            if (std::abs(C - 1.0) > 1e-6)
                throw invalid_input("xi_functor: eigenvalue constants not normalized");

    QLoopRep out;
    out.space  = erep.space;
    out.datum  = erep.datum;
    out.params = mp;

    for (int i = 0; i < erep.rank(); ++i) {
        // Factorization problem for Phi_i from the extracted analytic data.
        FactorizationProblem prob;
        prob.dim    = erep.dim();
        prob.params = mp;
        prob.S      = eb.S;
        prob.Sinv   = eb.Sinv;
        Mat Kd      = Mat::Zero(erep.dim(), erep.dim());
        for (const auto& blk : eb.blocks) {
            FactorizationProblem::Block pb;
            pb.offset       = blk.offset;
            pb.dim          = blk.dim;
            pb.data.eta     = blk.eta[i];
            pb.data.tq      = blk.tq[i];
            prob.blocks.push_back(pb);
            for (int k = 0; k < blk.dim; ++k) Kd(blk.offset + k, blk.offset + k) = blk.eta[i];
        }
        prob.K = eb.S * Kd * eb.Sinv;

        const FactorizationSolution sol = solve_factorization(prob);
        out.Psi.push_back(sol.A);
        out.K.push_back(sol.A.value_at_inf);

        // X_i^{+-}(z) = (2 pi i / c_i^{+-}) sum_b Res_{u=b} [ z/(z-e^{2piiu})
        //                G^{+-}(e^{2piiu})^{-1} X_i^{+-}(u, lam) ].
        const cx c = functor_constant(erep.datum, i, mp);
        for (int sign : {+1, -1}) {
            RationalMatFun X;
            X.dim          = erep.dim();
            X.value_at_inf = Mat::Zero(erep.dim(), erep.dim());
            const auto& hcur = erep.hc(i, sign);
            for (const auto& p : hcur.poles) {
                const int order = static_cast<int>(p.coeffs.size());
                const cx  w0    = std::exp(two_pi_i * p.b);
                // g(u) = G^{+-}(e^{2 pi i u})^{-1} Taylor coefficients at b.
                auto g = [&](cx u) -> Mat {
                    const cx z = std::exp(two_pi_i * u);
                    if (sign > 0) return sol.A.eval(z) * sol.HplusInv(z).fullPivLu().inverse();
                    return sol.Hminus(z).fullPivLu().inverse();
                };
                std::vector<Mat> gT;
                if (order == 1) {
                    gT.push_back(g(p.b));
                } else {
                    double rad = 0.04;
                    for (const auto& q2 : hcur.poles)
                        if (std::abs(q2.b - p.b) > 1e-12)
                            rad = std::min(rad, 0.3 * lattice_distance(p.b - q2.b, mp.tau));
                    gT = detail::cauchy_taylor_mat(g, p.b, order - 1, rad);
                }
                const auto F = detail::f_basis_polynomials(order - 1);
                for (int n = 0; n < order; ++n) {
                    const Mat Xb = p.coeffs[n].terms.front().M;
                    for (int k = 0; k <= n; ++k) {
                        const int l = n - k;
                        const Mat M = (two_pi_i / c) * (gT[l] * Xb);
                        // F_k = sum_m F[k][m] s0^m with s0^m = w0^m/(z-w0)^m.
                        for (size_t m = 0; m < F[k].size(); ++m) {
                            if (std::abs(F[k][m]) < 1e-15) continue;
                            if (m == 0)
                                X.value_at_inf += F[k][m] * M;
                            else
                                X.add_pole_term(w0, static_cast<int>(m),
                                                F[k][m] * std::pow(w0, static_cast<double>(m)) * M);
                        }
                    }
                }
            }
            X.prune(1e-13);
            (sign > 0 ? out.Xp : out.Xm).push_back(std::move(X));
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Round trips
// ---------------------------------------------------------------------------

struct RoundtripReport {
    double psi_residual  = 0.0;  // Xi(Theta(V)) vs V: commuting fields
    double x_residual    = 0.0;  // Xi(Theta(V)) vs V: raising/lowering fields
    double k_residual    = 0.0;
    double phi_residual  = 0.0;  // Theta(Xi(E)) vs E
    double half_residual = 0.0;
    bool   pass(double tol) const {
        return psi_residual < tol && x_residual < tol && k_residual < tol &&
               phi_residual < tol && half_residual < tol;
    }
};

/// Xi(Theta(V)) vs V on stored operator data at sample points.
inline RoundtripReport roundtrip_qloop(const QLoopRep& V) {
    RoundtripReport  rep;
    const EllipticRep E  = theta_functor(V);
    const QLoopRep    V2 = xi_functor(E);
    Rng               rng(17);
    std::vector<cx>   avoid;
    for (int i = 0; i < V.rank(); ++i)
        for (const cx& z : V.X(i, +1).pole_locations()) avoid.push_back(z);
    for (int i = 0; i < V.rank(); ++i)
        for (const cx& z : V.X(i, -1).pole_locations()) avoid.push_back(z);
    for (int s = 0; s < 20; ++s) {
        cx z;
        bool ok = false;
        while (!ok) {
            z  = std::exp(cx(rng.uniform(-0.6, 0.6), 0.0)) *
                std::exp(iu * rng.uniform(0.0, 2.0 * pi));
            ok = true;
            for (const cx& b : avoid) ok = ok && std::abs(z - b) > 0.05 * std::max(1.0, std::abs(b));
        }
        for (int i = 0; i < V.rank(); ++i) {
            rep.psi_residual =
                std::max(rep.psi_residual, rel_residual(V2.Psi[i].eval(z), V.Psi[i].eval(z)));
            rep.x_residual =
                std::max(rep.x_residual, rel_residual(V2.Xp[i].eval(z), V.Xp[i].eval(z)));
            rep.x_residual =
                std::max(rep.x_residual, rel_residual(V2.Xm[i].eval(z), V.Xm[i].eval(z)));
            rep.k_residual = std::max(rep.k_residual, rel_residual(V2.K[i], V.K[i]));
        }
    }
    return rep;
}

/// Theta(Xi(E)) vs E on Phi and half-current samples.
inline RoundtripReport roundtrip_elliptic(const EllipticRep& E) {
    RoundtripReport rep;
    const QLoopRep    V  = xi_functor(E);
    const EllipticRep E2 = theta_functor(V);
    SamplePlan        plan;
    plan.seed = 29;
    detail::EqgSampler sampler(E, plan);
    for (int s = 0; s < 10; ++s) {
        const cx     u   = sampler.u();
        const Weight lam = sampler.lambda();
        for (int i = 0; i < E.rank(); ++i) {
            rep.phi_residual = std::max(rep.phi_residual, rel_residual(E2.phi(i, u), E.phi(i, u)));
            for (int sign : {+1, -1})
                rep.half_residual =
                    std::max(rep.half_residual,
                             rel_residual(E2.half(i, sign, u, lam), E.half(i, sign, u, lam)));
        }
    }
    return rep;
}

}  // namespace ellq
