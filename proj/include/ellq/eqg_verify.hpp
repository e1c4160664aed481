#pragma once

#include <functional>
#include <string>
#include <vector>

#include "ellq/monodromy.hpp"
#include "ellq/verify_common.hpp"

namespace ellq {

// ---------------------------------------------------------------------------
// Numerical verification of the defining relations of the elliptic category
// on lambda-independent-Phi objects: (EQ1)-(EQ5), the variants EQ3'/EQ4' and
// the i=j special form, the periodicity axioms, the type-A Serre relation
// (EQ6), and the morphism conditions.
// ---------------------------------------------------------------------------

namespace detail {

struct EqgSampler {
    const EllipticRep& erep;
    Rng                rng;
    std::vector<cx>    avoid;
    double             margin;
    int                max_attempts;

    EqgSampler(const EllipticRep& e, const SamplePlan& plan)
        : erep(e), rng(plan.seed), avoid(e.pole_representatives()), margin(plan.margin),
          max_attempts(plan.max_attempts) {}

    cx u() { return sample_u(rng, erep.params, avoid, margin, max_attempts); }

    /// lambda in the root span with every (lambda, alpha_i) at distance
    /// >= margin from the lattice; extra pairings can be constrained too.
    Weight lambda(const std::vector<cx>& extra_offsets = {}) {
        for (int attempt = 0; attempt < max_attempts; ++attempt) {
            Weight lam = Weight::zero(erep.rank());
            for (int k = 0; k < erep.rank(); ++k)
                lam.coords[k] = rng.complex_box(-0.45, 0.45, -0.35, 0.35);
            bool ok = true;
            for (int k = 0; k < erep.rank() && ok; ++k) {
                const cx lk = erep.datum.pair_alpha(lam, k);
                ok          = lattice_distance(lk, erep.params.tau) > margin;
                for (const cx& off : extra_offsets)
                    ok = ok && lattice_distance(lk + off, erep.params.tau) > margin;
            }
            if (ok) return lam;
        }
        throw sampling_error("lambda sampler: pairings crowd the lattice");
    }

    bool u_clear(cx x) const {
        if (lattice_distance(x, erep.params.tau) <= margin) return false;
        for (const cx& b : avoid)
            if (lattice_distance(x - b, erep.params.tau) <= margin) return false;
        return true;
    }
};

inline Mat phi_tau_shift_operator(const EllipticRep& e, int i) {
    // e^{-2 pi i hbar d_i alpha_i^vee}: the scalar e^{-2 pi i hbar (mu, alpha_i)}
    // on each weight space V_mu.
    Mat D = Mat::Zero(e.dim(), e.dim());
    for (size_t b = 0; b < e.space.weights.size(); ++b) {
        const cx s = std::exp(-two_pi_i * e.params.hbar *
                              e.datum.pair_alpha(e.space.weights[b], i));
        for (int k = 0; k < e.space.dims[b]; ++k)
            D(e.space.offsets[b] + k, e.space.offsets[b] + k) = s;
    }
    return D;
}

}  // namespace detail

inline RelationReport check_eqg_relations(const EllipticRep& erep, const SamplePlan& plan) {
    RelationReport rr;
    rr.tol = erep.params.tol_check;
    detail::EqgSampler sampler(erep, plan);
    const ModularParams& mp = erep.params;
    const CartanDatum&   cd = erep.datum;
    const cx             hb = mp.hbar;
    auto                 th = [&](cx x) { return theta(x, mp); };

    const int n_samples = plan.count_for("EQ");
    for (int s = 0; s < n_samples; ++s) {
        const cx     u   = sampler.u();
        const cx     v   = sampler.u();
        const Weight lam = sampler.lambda();

        // --- (EQ1) ---
        for (int i = 0; i < erep.rank(); ++i) {
            const Mat Pi = erep.phi(i, u);
            for (int j = 0; j < erep.rank(); ++j) {
                const Mat Pj = erep.phi(j, v);
                rr.add("EQ1", rel_residual(Pi * Pj, Pj * Pi),
                       describe_sample({{"u", u}, {"v", v}}));
            }
            // [h, Phi] = 0: off-weight-block entries vanish.
            double off = 0.0;
            for (size_t a = 0; a < erep.space.weights.size(); ++a)
                for (size_t b = 0; b < erep.space.weights.size(); ++b)
                    if (a != b)
                        off = std::max(off, max_abs(erep.space.block(Pi, static_cast<int>(a),
                                                                     static_cast<int>(b))));
            rr.add("EQ1", off / std::max(1.0, max_abs(Pi)), "weight-block diagonality");
        }

        // --- (EQ2): weight shift by +-alpha_i ---
        for (int i = 0; i < erep.rank(); ++i)
            for (int sign : {+1, -1}) {
                const Mat X = erep.half(i, sign, u, lam);
                double    bad = 0.0;
                for (size_t a = 0; a < erep.space.weights.size(); ++a)
                    for (size_t b = 0; b < erep.space.weights.size(); ++b) {
                        const Weight expect = erep.space.weights[b] +
                                              cd.alpha(i).scaled(static_cast<double>(sign));
                        if ((erep.space.weights[a].coords - expect.coords).cwiseAbs().maxCoeff() <
                            1e-8)
                            continue;
                        bad = std::max(bad, max_abs(erep.space.block(X, static_cast<int>(a),
                                                                     static_cast<int>(b))));
                    }
                rr.add("EQ2", bad / std::max(1.0, max_abs(X)),
                       describe_sample({{"u", u}}) + (sign > 0 ? " +" : " -"));
            }

        // --- (EQ3), (EQ3'), and the Ad(Phi) shift identity ---
        for (int i = 0; i < erep.rank(); ++i)
            for (int j = 0; j < erep.rank(); ++j)
                for (int sign : {+1, -1}) {
                    const double sg = sign;
                    const cx     a  = static_cast<double>(cd.d[i] * cd.A(i, j)) * hb / 2.0;
                    const cx     lj = cd.pair_alpha(lam, j);
                    if (!sampler.u_clear(u - v - sg * a) || !sampler.u_clear(u - sg * a) ||
                        !sampler.u_clear(u - v + sg * a) || !sampler.u_clear(u + sg * a))
                        continue;
                    const Weight lam_up = lam + cd.alpha(i).scaled(sg * hb);
                    const Mat    Pi     = erep.phi(i, u);
                    const Mat    PiInv  = Pi.fullPivLu().inverse();

                    const Mat lhs3 = Pi * erep.half(j, sign, v, lam) * PiInv;
                    Mat       rhs3 = th(u - v + sg * a) / th(u - v - sg * a) *
                               erep.half(j, sign, v, lam_up);
                    if (std::abs(cd.A(i, j)) > 0)  // theta(2a) = 0 when a_ij = 0
                        rhs3 += th(2.0 * sg * a) * th(u - v - sg * a - lj) /
                                (th(lj) * th(u - v - sg * a)) *
                                erep.half(j, sign, u - sg * a, lam_up);
                    rr.add("EQ3", rel_residual(lhs3, rhs3),
                           describe_sample({{"u", u}, {"v", v}}) + ", nodes " +
                               std::to_string(i) + "," + std::to_string(j));

                    const Weight lam_dn = lam - cd.alpha(i).scaled(sg * hb);
                    const Mat    lhs3p  = PiInv * erep.half(j, sign, v, lam) * Pi;
                    Mat          rhs3p  = th(u - v - sg * a) / th(u - v + sg * a) *
                                erep.half(j, sign, v, lam_dn);
                    if (std::abs(cd.A(i, j)) > 0)
                        rhs3p -= th(2.0 * sg * a) * th(u - v + sg * a - lj) /
                                 (th(lj) * th(u - v + sg * a)) *
                                 erep.half(j, sign, u + sg * a, lam_dn);
                    rr.add("EQ3prime", rel_residual(lhs3p, rhs3p),
                           describe_sample({{"u", u}, {"v", v}}));

                    // Ad(Phi_i(u)) X_j(u +- a, lam) = th(lj +- 2a)/th(lj) X_j(u -+ a, lam_up)
                    if (sampler.u_clear(u + sg * a) && sampler.u_clear(u - sg * a)) {
                        const Mat lhs_s = Pi * erep.half(j, sign, u + sg * a, lam) * PiInv;
                        const Mat rhs_s = th(lj + 2.0 * sg * a) / th(lj) *
                                          erep.half(j, sign, u - sg * a, lam_up);
                        rr.add("EQ3-adshift", rel_residual(lhs_s, rhs_s),
                               describe_sample({{"u", u}}));
                    }
                }

        // --- (EQ4) ---
        for (int i = 0; i < erep.rank(); ++i)
            for (int j = 0; j < erep.rank(); ++j)
                for (int sign : {+1, -1}) {
                    const double sg = sign;
                    const cx     a  = static_cast<double>(cd.d[i] * cd.A(i, j)) * hb / 2.0;
                    const cx     li = cd.pair_alpha(lam, i), lj = cd.pair_alpha(lam, j);
                    if (!sampler.u_clear(u + li) || !sampler.u_clear(v + lj)) continue;
                    const Weight lpj = lam + cd.alpha(j).scaled(sg * hb / 2.0);
                    const Weight lmj = lam - cd.alpha(j).scaled(sg * hb / 2.0);
                    const Weight lpi = lam + cd.alpha(i).scaled(sg * hb / 2.0);
                    const Weight lmi = lam - cd.alpha(i).scaled(sg * hb / 2.0);

                    const Mat lhs = th(li + lj) * th(u - v - sg * a) *
                                        erep.half(i, sign, u, lpj) * erep.half(j, sign, v, lmi) -
                                    th(li + sg * a) * th(u - v - lj) *
                                        erep.half(i, sign, u, lpj) *
                                        erep.half(j, sign, u + li, lmi) -
                                    th(lj - sg * a) * th(u - v + li) *
                                        erep.half(i, sign, v + lj, lpj) *
                                        erep.half(j, sign, v, lmi);
                    const Mat rhs = th(li + lj) * th(u - v + sg * a) *
                                        erep.half(j, sign, v, lpi) * erep.half(i, sign, u, lmj) -
                                    th(li - sg * a) * th(u - v - lj) *
                                        erep.half(j, sign, u + li, lpi) *
                                        erep.half(i, sign, u, lmj) -
                                    th(lj + sg * a) * th(u - v + li) *
                                        erep.half(j, sign, v, lpi) *
                                        erep.half(i, sign, v + lj, lmj);
                    rr.add("EQ4", rel_residual(lhs, rhs),
                           describe_sample({{"u", u}, {"v", v}}) + ", nodes " +
                               std::to_string(i) + "," + std::to_string(j) +
                               (sign > 0 ? " +" : " -"));
                }

        // --- (EQ4') and the i = j special form ---
        for (int i = 0; i < erep.rank(); ++i)
            for (int sign : {+1, -1}) {
                const double sg = sign;
                const cx     hi = static_cast<double>(cd.d[i]) * hb;
                const cx     li = cd.pair_alpha(lam, i);
                const Weight lp = lam + cd.alpha(i).scaled(sg * hb / 2.0);
                const Weight lm = lam - cd.alpha(i).scaled(sg * hb / 2.0);
                if (!sampler.u_clear(u + li)) continue;

                const Mat Xup = erep.half(i, sign, u, lp), Xum = erep.half(i, sign, u, lm);
                const Mat Xvp = erep.half(i, sign, v, lp), Xvm = erep.half(i, sign, v, lm);
                const Mat lhs4p = th(u - v - sg * hi) * Xup * Xvm +
                                  sg * th(u - v - li) * th(hi) / th(li) * Xup * Xum;
                const Mat rhs4p = th(u - v + sg * hi) * Xvp * Xum +
                                  sg * th(u - v + li) * th(hi) / th(li) * Xvp * Xvm;
                rr.add("EQ4prime", rel_residual(lhs4p, rhs4p),
                       describe_sample({{"u", u}, {"v", v}}));

                const Mat Xsp = erep.half(i, sign, u + li, lp);
                const Mat Xsm = erep.half(i, sign, u + li, lm);
                const Mat lhs4s = th(li + sg * hi) * Xup * Xsm - th(li - sg * hi) * Xsp * Xum;
                const Mat rhs4s = sg * th(hi) * th(2.0 * li) / th(li) * Xup * Xum;
                rr.add("EQ4special", rel_residual(lhs4s, rhs4s),
                       describe_sample({{"u", u}}));
            }

        // --- (EQ5) on each weight space ---
        for (int i = 0; i < erep.rank(); ++i)
            for (int j = 0; j < erep.rank(); ++j) {
                for (size_t bmu = 0; bmu < erep.space.weights.size(); ++bmu) {
                    const Weight& mu = erep.space.weights[bmu];
                    const Weight  sum =
                        (mu + cd.alpha(i) - cd.alpha(j)).scaled(hb);  // lam1 + lam2
                    const Weight lam1 = sampler.lambda();
                    const Weight lam2 = sum - lam1;
                    const cx     l1i  = cd.pair_alpha(lam1, i);
                    const cx     l2i  = cd.pair_alpha(lam2, i);
                    if (on_lattice(l2i, mp.tau, plan.margin) ||
                        on_lattice(cd.pair_alpha(lam2, j), mp.tau, plan.margin))
                        continue;
                    const Mat Xp = erep.half(i, +1, u, lam1);
                    const Mat Xm = erep.half(j, -1, v, lam2);
                    const Mat comm = Xp * Xm - Xm * Xp;
                    const cx  hi   = static_cast<double>(cd.d[i]) * hb;
                    Mat       rhs  = Mat::Zero(erep.dim(), erep.dim());
                    if (i == j)
                        rhs = th(u - v + l1i) / (th(u - v) * th(l1i)) * erep.phi(i, v) +
                              th(u - v - l2i) / (th(u - v) * th(l2i)) * erep.phi(i, u);
                    // Restrict to columns of V_mu.
                    const int off = erep.space.offsets[bmu], d = erep.space.dims[bmu];
                    const Mat lhs_mu = (th(hi) * comm).middleCols(off, d);
                    const Mat rhs_mu = rhs.middleCols(off, d);
                    rr.add("EQ5", rel_residual(lhs_mu, rhs_mu),
                           describe_sample({{"u", u}, {"v", v}}) + ", nodes " +
                               std::to_string(i) + "," + std::to_string(j) + ", weight block " +
                               std::to_string(bmu));
                }
            }
    }

    // --- Periodicity axioms ---
    const int n_per = plan.count_for("periodicity");
    for (int s = 0; s < n_per; ++s) {
        const cx     u   = sampler.u();
        const Weight lam = sampler.lambda();
        for (int i = 0; i < erep.rank(); ++i) {
            rr.add("periodicity-phi", rel_residual(erep.phi(i, u + 1.0), erep.phi(i, u)),
                   describe_sample({{"u", u}}));
            rr.add("periodicity-phi",
                   rel_residual(erep.phi(i, u + mp.tau),
                                detail::phi_tau_shift_operator(erep, i) * erep.phi(i, u)),
                   describe_sample({{"u", u}}) + " (tau)");
            for (int sign : {+1, -1}) {
                const Mat X = erep.half(i, sign, u, lam);
                rr.add("periodicity-x",
                       rel_residual(erep.half(i, sign, u + 1.0, lam), X),
                       describe_sample({{"u", u}}));
                rr.add("periodicity-x",
                       rel_residual(erep.half(i, sign, u + mp.tau, lam),
                                    std::exp(-two_pi_i * cd.pair_alpha(lam, i)) * X),
                       describe_sample({{"u", u}}) + " (tau)");
                // lambda + gamma for gamma in Pbar_vee: gram * l = e_k.
                for (int k = 0; k < erep.rank(); ++k) {
                    Weight gamma = Weight::zero(erep.rank());
                    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(erep.rank());
                    rhs[k]              = 1.0;
                    gamma.coords        = cd.gram.fullPivLu().solve(rhs).cast<cx>();
                    rr.add("periodicity-lambda",
                           rel_residual(erep.half(i, sign, u, lam + gamma), X),
                           describe_sample({{"u", u}}));
                }
            }
        }
    }

    // --- Cross-check of (EQ5) against the partial-fraction (Tbar) form ---
    if (erep.functor_backed) {
        bool simple = true;
        for (int i = 0; i < erep.rank() && simple; ++i)
            for (const auto& p : erep.qrep.Psi[i].poles)
                if (p.order() != 1) simple = false;
        if (simple) {
            for (int s = 0; s < 5; ++s) {
                const cx u = sampler.u();
                for (int i = 0; i < erep.rank(); ++i) {
                    // Residue data of Phi_i at the (simple) poles of Psi_i.
                    std::vector<std::pair<cx, Mat>> residues;
                    for (const auto& p : erep.qrep.Psi[i].poles) {
                        const cx  b = log_over_2pii(p.z0);
                        const Mat R = g_factor(erep.qrep, i, +1, p.z0, erep.trunc) *
                                      p.coeffs[0] *
                                      g_factor(erep.qrep, i, -1, p.z0, erep.trunc) /
                                      (two_pi_i * p.z0);
                        residues.emplace_back(b, erep.phi_pre.empty()
                                                     ? R
                                                     : static_cast<Mat>(erep.phi_pre[i] * R));
                    }
                    for (size_t bmu = 0; bmu < erep.space.weights.size(); ++bmu) {
                        const cx  mui = cd.pair_alpha(erep.space.weights[bmu], i);
                        const int off = erep.space.offsets[bmu], d = erep.space.dims[bmu];
                        Mat       rec = Mat::Zero(erep.dim(), erep.dim());
                        if (on_lattice(hb * mui, mp.tau, 1e-9)) continue;
                        for (const auto& [b, R] : residues)
                            rec += kernel_plain(u - b, hb * mui, mp) * R;
                        rr.add("EQ5-Tbar-kernel",
                               rel_residual(rec.middleCols(off, d),
                                            erep.phi(i, u).middleCols(off, d)),
                               describe_sample({{"u", u}}) + ", node " + std::to_string(i));
                    }
                }
            }
        }
    }
    return rr;
}

// ---------------------------------------------------------------------------
// Serre relation (EQ6), Appendix-A form
// ---------------------------------------------------------------------------

namespace detail {

inline cx theta_integer(int n, cx hbar_i, const ModularParams& mp) {
    return theta(static_cast<double>(n) * hbar_i, mp) / theta(hbar_i, mp);
}

inline cx theta_binom(int m, int k, cx hbar_i, const ModularParams& mp) {
    cx num = 1.0, den = 1.0;
    for (int r = 1; r <= m; ++r) num *= theta_integer(r, hbar_i, mp);
    for (int r = 1; r <= k; ++r) den *= theta_integer(r, hbar_i, mp);
    for (int r = 1; r <= m - k; ++r) den *= theta_integer(r, hbar_i, mp);
    return num / den;
}

/// F_i(x, lam) = theta((lam, alpha_i)) X_i^-(x, lam).
inline Mat f_current(const EllipticRep& e, int i, cx x, const Weight& lam) {
    return theta(e.datum.pair_alpha(lam, i), e.params) * e.half(i, -1, x, lam);
}

/// S(u,v) of the Serre relation for the node pair (i,j), m = 1 - a_ij.
inline Mat serre_S(const EllipticRep& e, int i, int j, cx u, cx v, const Weight& lam) {
    const CartanDatum& cd = e.datum;
    const cx           hb = e.params.hbar;
    const int          m  = 1 - cd.A(i, j);
    const cx           li = cd.pair_alpha(lam, i), lj = cd.pair_alpha(lam, j);
    const cx           vt = v + li - lj;
    const cx           hbar_i = static_cast<double>(cd.d[i]) * hb;

    Mat S = Mat::Zero(e.dim(), e.dim());
    for (int k = 0; k <= m; ++k) {
        Mat T = Mat::Identity(e.dim(), e.dim());
        for (int r = 0; r <= k - 1; ++r)
            T = T * f_current(e, i, u, lam + cd.alpha(i).scaled(static_cast<double>(r) * hb));
        T = T * f_current(e, j, vt,
                          lam + cd.alpha(i).scaled(static_cast<double>(k - 1) * hb) +
                              (cd.alpha(i) + cd.alpha(j)).scaled(hb / 2.0));
        for (int r = k; r <= m - 1; ++r)
            T = T * f_current(e, i, u,
                              lam + cd.alpha(i).scaled(static_cast<double>(r) * hb) +
                                  cd.alpha(j).scaled(hb));
        const cx arg = lj + (static_cast<double>(k) - 0.5) * static_cast<double>(cd.d[i] * cd.A(i, j)) * hb +
                       static_cast<double>(cd.d[j]) * hb;
        const cx pref = theta(u - v + arg, e.params) /
                        (theta(u - v, e.params) * theta(arg, e.params));
        const double sign = ((m - k) % 2 == 0) ? 1.0 : -1.0;
        S += sign * theta_binom(m, k, hbar_i, e.params) * pref * T;
    }
    return S;
}

/// The v = u specialization of Remark howto-serre(2):
/// sum_k (-1)^{m-k} binom T_k(u,u) = 0. Returns (sum, largest term norm).
inline std::pair<Mat, double> serre_specialized(const EllipticRep& e, int i, int j, cx u,
                                                const Weight& lam) {
    const CartanDatum& cd     = e.datum;
    const cx           hb     = e.params.hbar;
    const int          m      = 1 - cd.A(i, j);
    const cx           li     = cd.pair_alpha(lam, i), lj = cd.pair_alpha(lam, j);
    const cx           ut     = u + li - lj;
    const cx           hbar_i = static_cast<double>(cd.d[i]) * hb;
    Mat                S      = Mat::Zero(e.dim(), e.dim());
    double             scale  = 0.0;
    for (int k = 0; k <= m; ++k) {
        Mat T = Mat::Identity(e.dim(), e.dim());
        for (int r = 0; r <= k - 1; ++r)
            T = T * f_current(e, i, u, lam + cd.alpha(i).scaled(static_cast<double>(r) * hb));
        T = T * f_current(e, j, ut,
                          lam + cd.alpha(i).scaled(static_cast<double>(k - 1) * hb) +
                              (cd.alpha(i) + cd.alpha(j)).scaled(hb / 2.0));
        for (int r = k; r <= m - 1; ++r)
            T = T * f_current(e, i, u,
                              lam + cd.alpha(i).scaled(static_cast<double>(r) * hb) +
                                  cd.alpha(j).scaled(hb));
        const double sign = ((m - k) % 2 == 0) ? 1.0 : -1.0;
        const Mat    term = sign * theta_binom(m, k, hbar_i, e.params) * T;
        scale             = std::max(scale, max_abs(term));
        S += term;
    }
    return {S, scale};
}

}  // namespace detail

/// Serre checker: (a) v-independence of S(u,v) over sampled v pairs,
/// (b) the v = u specialized identity, and for a_ij = 0 the reduction to the
/// (EQ4) commutation. Only a_ij in {0,-1} is in scope; larger |a_ij| needs
/// the experimental flag (the general Serre relation is conjectural).
inline RelationReport check_serre(const EllipticRep& erep, int i, int j, const SamplePlan& plan,
                                  bool experimental = false) {
    const int aij = erep.datum.A(i, j);
    if (i == j) throw invalid_input("check_serre needs i != j");
    if (aij < -1 && !experimental)
        throw invalid_input("check_serre: a_ij <= -2 is conjectural; pass experimental=true");

    RelationReport rr;
    rr.tol = erep.params.tol_check;
    detail::EqgSampler sampler(erep, plan);
    const cx           hb = erep.params.hbar;
    const CartanDatum& cd = erep.datum;

    const int n_u = plan.count_for("EQ6");
    const int n_v = std::max(2, plan.count_for("EQ6-v"));
    for (int s = 0; s < n_u; ++s) {
        const Weight lam = sampler.lambda({hb / 2.0, -hb / 2.0, hb, -hb, 1.5 * hb, -1.5 * hb});
        const cx     li  = cd.pair_alpha(lam, i), lj = cd.pair_alpha(lam, j);
        const cx     u   = sampler.u();

        std::vector<cx>  vs;
        std::vector<Mat> Ss;
        for (int t = 0; t < n_v && static_cast<int>(vs.size()) < n_v; ++t) {
            const cx v = sampler.u();
            if (!sampler.u_clear(v + li - lj) || !sampler.u_clear(u - v)) continue;
            vs.push_back(v);
            Ss.push_back(detail::serre_S(erep, i, j, u, v, lam));
        }
        for (size_t a = 0; a < Ss.size(); ++a)
            for (size_t b = a + 1; b < Ss.size(); ++b)
                rr.add("EQ6-v-independence", rel_residual(Ss[a], Ss[b]),
                       describe_sample({{"u", u}, {"v1", vs[a]}, {"v2", vs[b]}}));

        if (sampler.u_clear(u + li - lj)) {
            const auto [Z, scale] = detail::serre_specialized(erep, i, j, u, lam);
            rr.add("EQ6-specialized", max_abs(Z) / std::max(1.0, scale),
                   describe_sample({{"u", u}}));
        }

        if (aij == 0 && sampler.u_clear(vs.empty() ? u : vs.front())) {
            // S is proportional to the a_ij = 0 commutation (EQ4):
            // X_i^-(u, lam - h/2 a_j) X_j^-(v, lam + h/2 a_i)
            //   = X_j^-(v, lam - h/2 a_i) X_i^-(u, lam + h/2 a_j).
            const cx  v   = vs.empty() ? sampler.u() : vs.front();
            const Mat lhs = erep.half(i, -1, u, lam - cd.alpha(j).scaled(hb / 2.0)) *
                            erep.half(j, -1, v, lam + cd.alpha(i).scaled(hb / 2.0));
            const Mat rhs = erep.half(j, -1, v, lam - cd.alpha(i).scaled(hb / 2.0)) *
                            erep.half(i, -1, u, lam + cd.alpha(j).scaled(hb / 2.0));
            rr.add("EQ6-aij0-EQ4", rel_residual(lhs, rhs),
                   describe_sample({{"u", u}, {"v", v}}));
        }
    }
    return rr;
}

// ---------------------------------------------------------------------------
// Morphisms
// ---------------------------------------------------------------------------

/// phi: V -> W given as a weight-preserving evaluator of lambda. Checks the
/// two intertwining equations; the identity morphism always passes.
inline RelationReport check_morphism(const std::function<Mat(const Weight&)>& phi,
                                     const EllipticRep& V, const EllipticRep& W,
                                     const SamplePlan& plan) {
    RelationReport rr;
    rr.tol = V.params.tol_check;
    detail::EqgSampler sampler(V, plan);
    const CartanDatum& cd = V.datum;
    const cx           hb = V.params.hbar;
    if (V.dim() != W.dim()) throw invalid_input("check_morphism: weight structure mismatch");

    const int n = plan.count_for("morphism");
    for (int s = 0; s < n; ++s) {
        const cx     u   = sampler.u();
        const Weight lam = sampler.lambda();
        for (int i = 0; i < V.rank(); ++i) {
            const Mat lhs1 = phi(lam + cd.alpha(i).scaled(hb / 2.0)) * V.phi(i, u);
            const Mat rhs1 = W.phi(i, u) * phi(lam - cd.alpha(i).scaled(hb / 2.0));
            rr.add("morphism-phi", rel_residual(lhs1, rhs1), describe_sample({{"u", u}}));

            for (int sign : {+1, -1}) {
                const double sg = sign;
                const Mat    XV = V.half(i, sign, u, lam);
                const Mat    XW = W.half(i, sign, u, lam);
                for (size_t bmu = 0; bmu < V.space.weights.size(); ++bmu) {
                    const Weight& mu  = V.space.weights[bmu];
                    const Weight  tgt = mu + cd.alpha(i).scaled(sg);
                    const int     bt  = V.space.find_weight(tgt);
                    if (bt < 0) continue;
                    const Weight argL = lam.scaled(sg) + tgt.scaled(-sg * hb / 2.0) +
                                        cd.alpha(i).scaled(hb / 2.0);
                    const Weight argR =
                        lam.scaled(sg) + mu.scaled(-sg * hb / 2.0) + cd.alpha(i).scaled(-hb / 2.0);
                    const int ot = V.space.offsets[bt], dt = V.space.dims[bt];
                    const int om = V.space.offsets[bmu], dm = V.space.dims[bmu];
                    const Mat lhs2 = phi(argL).block(ot, ot, dt, dt) * XV.block(ot, om, dt, dm);
                    const Mat rhs2 = XW.block(ot, om, dt, dm) * phi(argR).block(om, om, dm, dm);
                    rr.add("morphism-x", rel_residual(lhs2, rhs2),
                           describe_sample({{"u", u}}) + ", node " + std::to_string(i) +
                               (sign > 0 ? " +" : " -"));
                }
            }
        }
    }
    return rr;
}

// ---------------------------------------------------------------------------
// Difference-equation and straightening checks on stored coefficients
// ---------------------------------------------------------------------------

/// Lemma xpm-difference on the stored partial-fraction coefficients:
/// Ad(Phi_i(u)) X_{j;b,n}(lam) = sum_k E_k(u) X_{j;b,n+k}(lam +- hbar alpha_i),
/// E_k = (d_v^k/k!) [theta(u-v +- a)/theta(u-v -+ a)] at v = b.
inline RelationReport check_xpm_difference(const EllipticRep& erep, const SamplePlan& plan) {
    RelationReport rr;
    rr.tol = erep.params.tol_check;
    detail::EqgSampler   sampler(erep, plan);
    const ModularParams& mp = erep.params;
    const CartanDatum&   cd = erep.datum;

    for (int s = 0; s < 10; ++s) {
        const cx     u   = sampler.u();
        const Weight lam = sampler.lambda();
        for (int i = 0; i < erep.rank(); ++i) {
            const Mat Pi    = erep.phi(i, u);
            const Mat PiInv = Pi.fullPivLu().inverse();
            for (int j = 0; j < erep.rank(); ++j)
                for (int sign : {+1, -1}) {
                    const double sg = sign;
                    const cx a = static_cast<double>(cd.d[i] * cd.A(i, j)) * mp.hbar / 2.0;
                    const Weight lam_sh = lam + cd.alpha(i).scaled(sg * mp.hbar);
                    const auto&  hc     = erep.hc(j, sign);
                    for (const auto& p : hc.poles) {
                        const int  nmax = static_cast<int>(p.coeffs.size());
                        const auto E =
                            cauchy_taylor([&](cx v) { return theta(u - v + sg * a, mp) /
                                                             theta(u - v - sg * a, mp); },
                                          p.b, nmax, 0.02);
                        for (int n = 0; n < nmax; ++n) {
                            const Mat lhs = Pi * p.coeffs[n].eval(lam) * PiInv;
                            Mat       rhs = Mat::Zero(erep.dim(), erep.dim());
                            for (int k = 0; n + k < nmax; ++k)
                                rhs += E[k] * p.coeffs[n + k].eval(lam_sh);
                            rr.add("xpm-difference", rel_residual(lhs, rhs),
                                   describe_sample({{"u", u}, {"b", p.b}}));
                        }
                    }
                }
        }
    }
    return rr;
}

/// Corollary class1-straight at the top stored order: the product
/// X_{i;a,N}(lam) X_{i;a,N}(lam -+ hbar alpha_i) vanishes.
inline RelationReport check_straightening(const EllipticRep& erep, const SamplePlan& plan) {
    RelationReport rr;
    rr.tol = erep.params.tol_check;
    detail::EqgSampler sampler(erep, plan);
    const Weight       lam = sampler.lambda();
    for (int i = 0; i < erep.rank(); ++i)
        for (int sign : {+1, -1}) {
            const double sg      = sign;
            const Weight lam_sh  = lam - erep.datum.alpha(i).scaled(sg * erep.params.hbar);
            const auto&  hc      = erep.hc(i, sign);
            for (const auto& p : hc.poles) {
                const Mat XN  = p.coeffs.back().eval(lam);
                const Mat XNs = p.coeffs.back().eval(lam_sh);
                rr.add("straightening-top", max_abs(XN * XNs) / std::max(1.0, max_abs(XN)),
                       "node " + std::to_string(i) + (sign > 0 ? " +" : " -"));
            }
        }
    return rr;
}

}  // namespace ellq
