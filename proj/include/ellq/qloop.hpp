#pragma once

#include <algorithm>
#include <string>
#include <vector>

#include "ellq/cartan.hpp"
#include "ellq/matrix_kit.hpp"
#include "ellq/modular.hpp"
#include "ellq/rational.hpp"
#include "ellq/verify_common.hpp"

namespace ellq {

// ---------------------------------------------------------------------------
// Representations of the quantum loop algebra in the functional presentation:
// rational fields Psi_i(z), X_i^{+-}(z) regular at 0 and infinity, with
// Psi_i(inf) = Psi_i(0)^{-1} = K_i and X_i^{+-}(0) = 0.
// ---------------------------------------------------------------------------

struct QLoopRep {
    WeightGradedSpace           space;
    CartanDatum                 datum;
    ModularParams               params;
    std::vector<Mat>            K;
    std::vector<RationalMatFun> Psi, Xp, Xm;

    int rank() const { return datum.rank(); }
    cx  q_i(int i) const { return std::pow(params.q, static_cast<double>(datum.d[i])); }

    const RationalMatFun& X(int i, int sign) const { return sign > 0 ? Xp[i] : Xm[i]; }
};

struct DrinfeldData {
    Weight                       mu;
    std::vector<std::vector<cx>> roots;  // per node, with multiplicity
};

namespace detail {

inline void guard_root_of_unity(const ModularParams& mp) {
    cx qn = 1.0;
    for (int n = 1; n <= 24; ++n) {
        qn *= mp.q;
        if (std::abs(qn - 1.0) < 1e-8)
            throw invalid_params("q is a root of unity to working precision (n=" +
                                 std::to_string(n) + ")");
    }
}

/// K_i as q_i^{alpha_i^vee} from the weight grading.
inline Mat torus_matrix(const WeightGradedSpace& sp, const CartanDatum& cd, int i, cx q) {
    Mat K = Mat::Zero(sp.total_dim, sp.total_dim);
    for (size_t b = 0; b < sp.weights.size(); ++b) {
        const cx val = std::pow(q, cd.coweight_value(sp.weights[b], i) *
                                        static_cast<double>(cd.d[i]));
        for (int k = 0; k < sp.dims[b]; ++k)
            K(sp.offsets[b] + k, sp.offsets[b] + k) = val;
    }
    return K;
}

/// X(z) = (unit residue scale) * z/(z - pole) * M as a RationalMatFun.
inline RationalMatFun simple_current(int dim, const Mat& M, cx pole, cx scale) {
    RationalMatFun f;
    f.dim          = dim;
    f.value_at_inf = scale * M;
    RationalMatFun::PoleTerm t;
    t.z0     = pole;
    t.coeffs = {scale * pole * M};
    f.poles.push_back(std::move(t));
    return f;
}

/// Psi determined by the w -> infinity limit of (QL5):
///   Psi_i(z) = K_i^{-1} + (q_i - q_i^{-1}) [X_i^+(z), X_i^-(inf)].
inline RationalMatFun psi_from_ql5(const RationalMatFun& Xp, const Mat& Xm_inf, const Mat& Kinv,
                                   cx qi) {
    const cx       f = qi - 1.0 / qi;
    RationalMatFun psi;
    psi.dim          = Xp.dim;
    psi.value_at_inf = Kinv + f * (Xp.value_at_inf * Xm_inf - Xm_inf * Xp.value_at_inf);
    for (const auto& p : Xp.poles) {
        RationalMatFun::PoleTerm t;
        t.z0 = p.z0;
        for (const auto& C : p.coeffs) t.coeffs.push_back(f * (C * Xm_inf - Xm_inf * C));
        psi.poles.push_back(std::move(t));
    }
    psi.prune();
    return psi;
}

/// Affine solve: f(c) = 0 for f affine in c, via two evaluations.
template <typename F>
cx affine_solve(F&& f) {
    const cx f0 = f(cx(0.0)), f1 = f(cx(1.0));
    return -f0 / (f1 - f0);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Constructors
// ---------------------------------------------------------------------------

inline QLoopRep make_trivial_module(const CartanDatum& cd, const ModularParams& mp) {
    QLoopRep rep;
    rep.datum  = cd;
    rep.params = mp;
    rep.space  = WeightGradedSpace::make({Weight::zero(cd.rank())}, {1});
    for (int i = 0; i < cd.rank(); ++i) {
        rep.K.push_back(Mat::Identity(1, 1));
        rep.Psi.push_back(RationalMatFun::constant(Mat::Identity(1, 1)));
        rep.Xp.push_back(RationalMatFun::constant(Mat::Zero(1, 1)));
        rep.Xm.push_back(RationalMatFun::constant(Mat::Zero(1, 1)));
    }
    return rep;
}

/// Two-dimensional sl2 evaluation module with evaluation parameter a != 0.
/// The ansatz puts a single simple pole at a with X(0) = 0; the residue scale
/// of X^- and the Psi pole data are solved from (QL5) and the normalization
/// Psi(inf) = K.
inline QLoopRep make_sl2_evaluation(cx a, const ModularParams& mp) {
    detail::guard_root_of_unity(mp);
    if (std::abs(a) < 1e-12) throw invalid_params("evaluation parameter must be nonzero");
    const CartanDatum cd = cartan_sl2();
    QLoopRep          rep;
    rep.datum  = cd;
    rep.params = mp;
    Weight top = cd.alpha(0).scaled(0.5);
    rep.space  = WeightGradedSpace::make({top, top - cd.alpha(0)}, {1, 1});

    const cx q = mp.q;
    Mat      E = Mat::Zero(2, 2), F = Mat::Zero(2, 2);
    E(0, 1) = 1.0;
    F(1, 0) = 1.0;
    rep.K.push_back(detail::torus_matrix(rep.space, cd, 0, q));
    const Mat Kinv = rep.K[0].fullPivLu().inverse();

    rep.Xp.push_back(detail::simple_current(2, E, a, 1.0));
    // Solve the X^- residue scale from Psi(inf) = K (top-left entry, affine).
    const cx cminus = detail::affine_solve([&](cx c) {
        const Mat psi_inf = Kinv + (q - 1.0 / q) * ((E * (c * F)) - ((c * F) * E));
        return psi_inf(0, 0) - rep.K[0](0, 0);
    });
    rep.Xm.push_back(detail::simple_current(2, F, a, cminus));
    rep.Psi.push_back(detail::psi_from_ql5(rep.Xp[0], rep.Xm[0].value_at_inf, Kinv, q));
    return rep;
}

/// Three-dimensional vector evaluation module of the sl3 quantum loop
/// algebra. Node 1 keeps its pole at a; the node-2 pole location is forced by
/// the cross relation (QL3), which after clearing denominators is quadratic
/// in it, so it is recovered as the common root over two samples.
inline QLoopRep make_sl3_vector(cx a, const ModularParams& mp) {
    detail::guard_root_of_unity(mp);
    if (std::abs(a) < 1e-12) throw invalid_params("evaluation parameter must be nonzero");
    const CartanDatum cd = cartan_sl3();
    QLoopRep          rep;
    rep.datum  = cd;
    rep.params = mp;
    Weight e1  = cd.weight_from_coweight_values({cx(1.0), cx(0.0)});
    Weight e2  = e1 - cd.alpha(0);
    Weight e3  = e2 - cd.alpha(1);
    rep.space  = WeightGradedSpace::make({e1, e2, e3}, {1, 1, 1});

    const cx q = mp.q;
    auto     unit = [&](int r, int c) {
        Mat m = Mat::Zero(3, 3);
        m(r, c) = 1.0;
        return m;
    };
    const Mat E1 = unit(0, 1), F1 = unit(1, 0), E2 = unit(1, 2), F2 = unit(2, 1);
    rep.K.push_back(detail::torus_matrix(rep.space, cd, 0, q));
    rep.K.push_back(detail::torus_matrix(rep.space, cd, 1, q));

    // Node 1 exactly as in the sl2 case.
    rep.Xp.push_back(detail::simple_current(3, E1, a, 1.0));
    const Mat K1inv = rep.K[0].fullPivLu().inverse();
    const cx  c1m   = detail::affine_solve([&](cx c) {
        const Mat psi_inf = K1inv + (q - 1.0 / q) * (E1 * (c * F1) - (c * F1) * E1);
        return psi_inf(0, 0) - rep.K[0](0, 0);
    });
    rep.Xm.push_back(detail::simple_current(3, F1, a, c1m));
    rep.Psi.push_back(detail::psi_from_ql5(rep.Xp[0], rep.Xm[0].value_at_inf, K1inv, q));

    // Node 2 pole from (QL3) with i=1, j=2, upper sign: clearing the
    // denominators (w - b)(z/q_a - b) leaves an expression affine in b,
    // whose root is sample-independent.
    auto ql3_cleared = [&](cx b, cx z, cx w) {
        const RationalMatFun X2 = detail::simple_current(3, E2, b, 1.0);
        const cx             aij = static_cast<double>(cd.A(0, 1));
        const cx             qa  = std::pow(q, aij);  // q_1^{a_12}
        const Mat            lhs = (z - qa * w) * (rep.Psi[0].eval(z) * X2.eval(w));
        const Mat rhs = (qa * z - w) * (X2.eval(w) * rep.Psi[0].eval(z)) -
                        (qa - 1.0 / qa) * qa * w * (X2.eval(z / qa) * rep.Psi[0].eval(z));
        return ((lhs - rhs) * (w - b) * (z / qa - b))(1, 2);
    };
    auto affine_root = [&](cx z, cx w) {
        const cx s  = 0.37 * a;
        const cx r0 = ql3_cleared(0.0, z, w), r1 = ql3_cleared(s, z, w);
        return -r0 * s / (r1 - r0);
    };
    const cx b2      = affine_root(1.37 * a, 0.61 * a);
    const cx b2check = affine_root(cx(-0.83, 0.11) * a, cx(2.19, 0.23) * a);
    if (std::abs(b2 - b2check) > 1e-9 * std::max(1.0, std::abs(b2)))
        throw invalid_params("sl3 vector module: node-2 pole location did not stabilize");

    rep.Xp.push_back(detail::simple_current(3, E2, b2, 1.0));
    const Mat K2inv = rep.K[1].fullPivLu().inverse();
    const cx  c2m   = detail::affine_solve([&](cx c) {
        const Mat psi_inf = K2inv + (q - 1.0 / q) * (E2 * (c * F2) - (c * F2) * E2);
        return psi_inf(1, 1) - rep.K[1](1, 1);
    });
    rep.Xm.push_back(detail::simple_current(3, F2, b2, c2m));
    rep.Psi.push_back(detail::psi_from_ql5(rep.Xp[1], rep.Xm[1].value_at_inf, K2inv, q));
    return rep;
}

enum class EvalKind { sl2, sl3_vector };

inline QLoopRep make_evaluation_module(EvalKind kind, cx a, const ModularParams& mp) {
    return kind == EvalKind::sl2 ? make_sl2_evaluation(a, mp) : make_sl3_vector(a, mp);
}

/// Outer tensor product of two sl2 evaluation modules over A1 x A1 (node 1
/// acts on the first factor, node 2 on the second).
inline QLoopRep make_a1xa1_tensor(cx a1, cx a2, const ModularParams& mp) {
    const QLoopRep    m1 = make_sl2_evaluation(a1, mp), m2 = make_sl2_evaluation(a2, mp);
    const CartanDatum cd = cartan_a1xa1();
    QLoopRep          rep;
    rep.datum  = cd;
    rep.params = mp;
    std::vector<Weight> ws;
    for (int s = 0; s < 2; ++s)
        for (int t = 0; t < 2; ++t) {
            Weight w = Weight::zero(2);
            w.coords[0] = (s == 0 ? 0.5 : -0.5);
            w.coords[1] = (t == 0 ? 0.5 : -0.5);
            ws.push_back(w);
        }
    rep.space = WeightGradedSpace::make(ws, {1, 1, 1, 1});

    auto kron = [](const Mat& A, const Mat& B) {
        Mat out(A.rows() * B.rows(), A.cols() * B.cols());
        for (int i = 0; i < A.rows(); ++i)
            for (int j = 0; j < A.cols(); ++j)
                out.block(i * B.rows(), j * B.cols(), B.rows(), B.cols()) = A(i, j) * B;
        return out;
    };
    auto lift = [&](const RationalMatFun& f, bool first) {
        RationalMatFun out;
        out.dim          = 4;
        const Mat I2     = Mat::Identity(2, 2);
        out.value_at_inf = first ? kron(f.value_at_inf, I2) : kron(I2, f.value_at_inf);
        for (const auto& p : f.poles) {
            RationalMatFun::PoleTerm t;
            t.z0 = p.z0;
            for (const auto& C : p.coeffs) t.coeffs.push_back(first ? kron(C, I2) : kron(I2, C));
            out.poles.push_back(std::move(t));
        }
        return out;
    };
    rep.K   = {kron(m1.K[0], Mat::Identity(2, 2)), kron(Mat::Identity(2, 2), m2.K[0])};
    rep.Psi = {lift(m1.Psi[0], true), lift(m2.Psi[0], false)};
    rep.Xp  = {lift(m1.Xp[0], true), lift(m2.Xp[0], false)};
    rep.Xm  = {lift(m1.Xm[0], true), lift(m2.Xm[0], false)};
    return rep;
}

/// Direct sum, with the basis re-sorted into merged weight blocks.
inline QLoopRep direct_sum(const QLoopRep& A, const QLoopRep& B) {
    QLoopRep rep;
    rep.datum  = A.datum;
    rep.params = A.params;
    const int na = A.space.total_dim, n = na + B.space.total_dim;

    // Merge weight lists.
    std::vector<Weight> ws;
    std::vector<int>    dims;
    auto                add_weight = [&](const Weight& w, int d) {
        for (size_t k = 0; k < ws.size(); ++k)
            if ((ws[k].coords - w.coords).cwiseAbs().maxCoeff() < 1e-9) {
                dims[k] += d;
                return;
            }
        ws.push_back(w);
        dims.push_back(d);
    };
    for (size_t b = 0; b < A.space.weights.size(); ++b) add_weight(A.space.weights[b], A.space.dims[b]);
    for (size_t b = 0; b < B.space.weights.size(); ++b) add_weight(B.space.weights[b], B.space.dims[b]);
    rep.space = WeightGradedSpace::make(ws, dims);

    // Permutation: stacked (A then B) basis -> weight-sorted basis.
    Mat              P = Mat::Zero(n, n);
    std::vector<int> fill(ws.size(), 0);
    auto             place = [&](const WeightGradedSpace& sp, int base) {
        for (size_t b = 0; b < sp.weights.size(); ++b) {
            const int tgt = rep.space.find_weight(sp.weights[b]);
            for (int k = 0; k < sp.dims[b]; ++k) {
                P(rep.space.offsets[tgt] + fill[tgt], base + sp.offsets[b] + k) = 1.0;
                ++fill[tgt];
            }
        }
    };
    place(A.space, 0);
    place(B.space, na);

    auto conj = [&](const RationalMatFun& fa, const RationalMatFun& fb) {
        RationalMatFun f = direct_sum(fa, fb);
        f.value_at_inf   = P * f.value_at_inf * P.transpose();
        for (auto& p : f.poles)
            for (auto& C : p.coeffs) C = P * C * P.transpose();
        return f;
    };
    for (int i = 0; i < rep.datum.rank(); ++i) {
        Mat K           = Mat::Zero(n, n);
        K.topLeftCorner(na, na)         = A.K[i];
        K.bottomRightCorner(n - na, n - na) = B.K[i];
        rep.K.push_back(P * K * P.transpose());
        rep.Psi.push_back(conj(A.Psi[i], B.Psi[i]));
        rep.Xp.push_back(conj(A.Xp[i], B.Xp[i]));
        rep.Xm.push_back(conj(A.Xm[i], B.Xm[i]));
    }
    return rep;
}

// ---------------------------------------------------------------------------
// Non-congruence
// ---------------------------------------------------------------------------

/// No two distinct poles of X_i^{+-} may have ratio in p^Z (|exponent| <= trunc).
inline bool is_non_congruent(const QLoopRep& rep, const ModularParams& mp) {
    for (int i = 0; i < rep.rank(); ++i)
        for (int sign : {+1, -1}) {
            const auto ps = rep.X(i, sign).pole_locations();
            for (size_t r = 0; r < ps.size(); ++r)
                for (size_t s = r + 1; s < ps.size(); ++s) {
                    const cx ratio = ps[r] / ps[s];
                    cx       pk    = 1.0;
                    for (int k = 0; k <= mp.trunc; ++k) {
                        if (std::abs(ratio - pk) < 1e-9 * std::max(1.0, std::abs(pk)) ||
                            std::abs(1.0 / ratio - pk) < 1e-9 * std::max(1.0, std::abs(pk)))
                            return false;
                        pk *= mp.p;
                    }
                }
        }
    return true;
}

// ---------------------------------------------------------------------------
// Relation checker (QL1)-(QL5), normalization and pole conditions
// ---------------------------------------------------------------------------

namespace detail {

inline cx sample_z(Rng& rng, const std::vector<cx>& avoid, double scale, double margin,
                   int max_attempts = 1000) {
    for (int attempt = 0; attempt < max_attempts; ++attempt) {
        const cx z = scale * std::exp(cx(rng.uniform(-0.7, 0.7), 0.0)) *
                     std::exp(iu * rng.uniform(0.0, 2.0 * pi));
        bool ok = std::abs(z) > margin;
        for (const cx& b : avoid) ok = ok && std::abs(z - b) > margin * std::max(1.0, std::abs(b));
        if (ok) return z;
    }
    throw sampling_error("sample_z: could not avoid poles");
}

}  // namespace detail

inline RelationReport check_qloop_relations(const QLoopRep& rep, const SamplePlan& plan) {
    RelationReport rr;
    rr.tol = rep.params.tol_check;
    Rng rng(plan.seed);

    std::vector<cx> avoid;
    for (int i = 0; i < rep.rank(); ++i) {
        for (const cx& z : rep.Psi[i].pole_locations()) avoid.push_back(z);
        for (const cx& z : rep.Xp[i].pole_locations()) avoid.push_back(z);
        for (const cx& z : rep.Xm[i].pole_locations()) avoid.push_back(z);
    }
    double scale = 1.0;
    for (const cx& z : avoid) scale = std::max(scale, std::abs(z));

    // Normalization conditions.
    for (int i = 0; i < rep.rank(); ++i) {
        const Mat Kinv = rep.K[i].fullPivLu().inverse();
        rr.add("QL-norm", rel_residual(rep.Psi[i].eval(0.0), Kinv), "Psi(0) vs K^-1, node " + std::to_string(i));
        rr.add("QL-norm", rel_residual(rep.Psi[i].value_at_inf, rep.K[i]),
               "Psi(inf) vs K, node " + std::to_string(i));
        rr.add("QL-norm", max_abs(rep.Xp[i].eval(0.0)), "X+(0), node " + std::to_string(i));
        rr.add("QL-norm", max_abs(rep.Xm[i].eval(0.0)), "X-(0), node " + std::to_string(i));
    }

    // Poles of Psi_i contained in poles of X_i^{+-}.
    for (int i = 0; i < rep.rank(); ++i)
        for (const cx& zp : rep.Psi[i].pole_locations()) {
            double dp = 1e300, dm = 1e300;
            for (const cx& zx : rep.Xp[i].pole_locations()) dp = std::min(dp, std::abs(zp - zx));
            for (const cx& zx : rep.Xm[i].pole_locations()) dm = std::min(dm, std::abs(zp - zx));
            rr.add("QL-poles-lemma", (dp < 1e-8 && dm < 1e-8) ? 0.0 : 1.0,
                   "Psi pole at " + std::to_string(zp.real()));
        }

    const int n = plan.count_for("QL");
    for (int s = 0; s < n; ++s) {
        const cx z = detail::sample_z(rng, avoid, scale, plan.margin);
        const cx w = detail::sample_z(rng, avoid, scale, plan.margin);
        for (int i = 0; i < rep.rank(); ++i) {
            // (QL1)
            for (int j = 0; j < rep.rank(); ++j) {
                const Mat Pi = rep.Psi[i].eval(z), Pj = rep.Psi[j].eval(w);
                rr.add("QL1", rel_residual(Pi * Pj, Pj * Pi),
                       describe_sample({{"z", z}, {"w", w}}));
            }
            // (QL2) for a random h (values alpha_j(h)).
            Vec hvals(rep.rank());
            for (int k = 0; k < rep.rank(); ++k) hvals[k] = rng.complex_box(-1, 1, -1, 1);
            const Mat H = rep.space.h_action(hvals);
            for (int sign : {+1, -1}) {
                const Mat X  = rep.X(i, sign).eval(z);
                const cx  ai = hvals[i];  // alpha_i(h)
                rr.add("QL2",
                       rel_residual(H * X - X * H, (static_cast<double>(sign) * ai) * X),
                       describe_sample({{"z", z}}));
            }
            for (int j = 0; j < rep.rank(); ++j) {
                const cx qa = std::pow(rep.q_i(i), static_cast<double>(rep.datum.A(i, j)));
                for (int sign : {+1, -1}) {
                    const cx e = (sign > 0) ? qa : 1.0 / qa;
                    if (rep.X(j, sign).pole_distance(z / e) < plan.margin) continue;
                    const Mat Pi = rep.Psi[i].eval(z);
                    const Mat Xw = rep.X(j, sign).eval(w);
                    // (QL3)
                    const Mat l3 = (z - e * w) * (Pi * Xw);
                    const Mat r3 = (e * z - w) * (Xw * Pi) -
                                   (e - 1.0 / e) * e * w * (rep.X(j, sign).eval(z / e) * Pi);
                    rr.add("QL3", rel_residual(l3, r3),
                           describe_sample({{"z", z}, {"w", w}}) + ", nodes " +
                               std::to_string(i) + "," + std::to_string(j) +
                               (sign > 0 ? " +" : " -"));
                    // (QL4)
                    const Mat Xi = rep.X(i, sign).eval(z);
                    const Mat Xinf_i = rep.X(i, sign).value_at_inf;
                    const Mat Xinf_j = rep.X(j, sign).value_at_inf;
                    const Mat l4 = (z - e * w) * (Xi * Xw) - (e * z - w) * (Xw * Xi);
                    const Mat r4 = z * (Xinf_i * Xw - e * Xw * Xinf_i) +
                                   w * (Xinf_j * Xi - e * Xi * Xinf_j);
                    rr.add("QL4", rel_residual(l4, r4),
                           describe_sample({{"z", z}, {"w", w}}) + ", nodes " +
                               std::to_string(i) + "," + std::to_string(j) +
                               (sign > 0 ? " +" : " -"));
                }
                // (QL5)
                const cx  qi = rep.q_i(i);
                const Mat Xpz = rep.Xp[i].eval(z), Xmw = rep.Xm[j].eval(w);
                const Mat l5  = (z - w) * (Xpz * Xmw - Xmw * Xpz);
                Mat       r5  = Mat::Zero(rep.space.total_dim, rep.space.total_dim);
                if (i == j)
                    r5 = (z * rep.Psi[i].eval(w) - w * rep.Psi[i].eval(z) -
                          (z - w) * rep.Psi[i].eval(0.0)) /
                         (qi - 1.0 / qi);
                rr.add("QL5", rel_residual(l5, r5),
                       describe_sample({{"z", z}, {"w", w}}) + ", nodes " + std::to_string(i) +
                           "," + std::to_string(j));
            }
        }
    }

    // (QL3) specialized at w = q_i^{-+a_ij} z: both sides evaluated directly,
    // no division blow-up.
    for (int s = 0; s < 20; ++s) {
        const cx z = detail::sample_z(rng, avoid, scale, plan.margin);
        for (int i = 0; i < rep.rank(); ++i)
            for (int j = 0; j < rep.rank(); ++j)
                for (int sign : {+1, -1}) {
                    const cx qa = std::pow(rep.q_i(i), static_cast<double>(rep.datum.A(i, j)));
                    const cx e  = (sign > 0) ? qa : 1.0 / qa;
                    const cx w  = z / e;
                    if (rep.X(j, sign).pole_distance(w) < plan.margin ||
                        rep.Psi[i].pole_distance(z) < plan.margin)
                        continue;
                    const Mat Pi = rep.Psi[i].eval(z);
                    const Mat Xw = rep.X(j, sign).eval(w);
                    const Mat l3 = (z - e * w) * (Pi * Xw);
                    const Mat r3 = (e * z - w) * (Xw * Pi) -
                                   (e - 1.0 / e) * e * w * (rep.X(j, sign).eval(z / e) * Pi);
                    rr.add("QL3-specialized", rel_residual(l3, r3),
                           describe_sample({{"z", z}}));
                }
    }
    return rr;
}

// ---------------------------------------------------------------------------
// Highest weight and Drinfeld data
// ---------------------------------------------------------------------------

/// Index of the top weight block (no weight equals mu + alpha_i), or -1.
inline int top_weight_block(const WeightGradedSpace& sp, const CartanDatum& cd) {
    for (size_t b = 0; b < sp.weights.size(); ++b) {
        bool top = true;
        for (int i = 0; i < cd.rank() && top; ++i)
            if (sp.find_weight(sp.weights[b] + cd.alpha(i)) >= 0) top = false;
        if (top) return static_cast<int>(b);
    }
    return -1;
}

/// Reads the eigenvalue of Psi_i(z) on the highest weight vector, checks the
/// form q_i^{-N} P(q_i^2 z)/P(z), and returns the roots of the Drinfeld
/// polynomials (pole locations of the eigenvalue, with orders).
inline DrinfeldData qloop_highest_weight(const QLoopRep& rep) {
    const int b = top_weight_block(rep.space, rep.datum);
    if (b < 0) throw not_highest_weight("no top weight block");
    if (rep.space.dims[b] != 1)
        throw not_highest_weight("top weight space has dimension " +
                                 std::to_string(rep.space.dims[b]));
    const int idx = rep.space.offsets[b];

    // X_i^+(z) Omega = 0 at a few sample points.
    for (int i = 0; i < rep.rank(); ++i)
        for (const cx z : {cx(0.73, 0.21), cx(-1.1, 0.4), cx(2.3, -0.9)}) {
            if (rep.Xp[i].pole_distance(z) < 1e-6) continue;
            if (rep.Xp[i].eval(z).col(idx).cwiseAbs().maxCoeff() > 1e-9)
                throw not_highest_weight("top vector not annihilated by raising fields");
        }

    DrinfeldData dd;
    dd.mu = rep.space.weights[b];
    for (int i = 0; i < rep.rank(); ++i) {
        const cx Ni = rep.datum.coweight_value(dd.mu, i);
        if (std::abs(Ni.imag()) > 1e-9 || std::abs(Ni.real() - std::round(Ni.real())) > 1e-9 ||
            Ni.real() < -1e-9)
            throw form_mismatch("mu(alpha_i^vee) is not a nonnegative integer");
        const int N = static_cast<int>(std::round(Ni.real()));

        std::vector<cx> roots;
        for (const auto& p : rep.Psi[i].poles) {
            int order = 0;
            for (int k = p.order(); k >= 1; --k)
                if (std::abs(p.coeffs[k - 1](idx, idx)) > 1e-10) {
                    order = k;
                    break;
                }
            for (int k = 0; k < order; ++k) roots.push_back(p.z0);
        }
        if (static_cast<int>(roots.size()) != N)
            throw form_mismatch("eigenvalue pole count disagrees with mu(alpha_i^vee)");

        // Verify gamma(z) = q_i^{-N} P(q_i^2 z)/P(z) at samples.
        const cx qi = rep.q_i(i);
        for (const cx z : {cx(0.37, 0.81), cx(-1.7, 0.2)}) {
            cx expect = std::pow(qi, -N);
            for (const cx& r : roots) expect *= (qi * qi * z - r) / (z - r);
            const cx got = rep.Psi[i].eval(z)(idx, idx);
            if (std::abs(expect - got) > 1e-8 * std::max(1.0, std::abs(got)))
                throw form_mismatch("Psi eigenvalue is not of Drinfeld-quotient form");
        }
        dd.roots.push_back(std::move(roots));
    }
    return dd;
}

}  // namespace ellq
