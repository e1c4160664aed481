#pragma once

#include <string>
#include <vector>

#include "ellq/qloop.hpp"
#include "ellq/series.hpp"
#include "ellq/theta.hpp"

namespace ellq {

// ---------------------------------------------------------------------------
// The monodromy functor: from rational fields Psi_i, X_i^{+-} to elliptic
// commuting currents Phi_i(u) and dynamical half-currents X_i^{+-}(u,lambda).
//
// Contours never materialize: every integrand is meromorphic with known
// poles, so the defining contour integrals are evaluated as exact residue
// sums at one representative per pole class.
// ---------------------------------------------------------------------------

/// Matrix coefficient with exponential dependence on the dynamical
/// parameter: sum_k exp(2 pi i <e_k, l>) M_k, where l are the root-span
/// coordinates of lambda. Functor-built representations have a single term
/// with e = 0.
struct LambdaMat {
    struct Term {
        Vec e;
        Mat M;
    };
    std::vector<Term> terms;

    static LambdaMat constant(const Mat& M, int rank) {
        return {{Term{Vec::Zero(rank), M}}};
    }
    Mat eval(const Weight& lam) const {
        Mat out = Mat::Zero(terms.front().M.rows(), terms.front().M.cols());
        for (const auto& t : terms)
            out += std::exp(two_pi_i * (t.e.transpose() * lam.coords)(0, 0)) * t.M;
        return out;
    }
    bool lambda_independent(double tol = 1e-9) const {
        for (const auto& t : terms)
            if (t.e.cwiseAbs().maxCoeff() > tol && max_abs(t.M) > tol) return false;
        return true;
    }
    /// Collapses numerically equal exponents and drops zero matrices.
    void compress(double tol = 1e-12) {
        std::vector<Term> out;
        for (auto& t : terms) {
            if (max_abs(t.M) < tol) continue;
            bool merged = false;
            for (auto& o : out)
                if ((o.e - t.e).cwiseAbs().maxCoeff() < 1e-10) {
                    o.M += t.M;
                    merged = true;
                    break;
                }
            if (!merged) out.push_back(std::move(t));
        }
        if (out.empty() && !terms.empty())
            out.push_back({Vec::Zero(terms.front().e.size()),
                           Mat::Zero(terms.front().M.rows(), terms.front().M.cols())});
        terms = std::move(out);
    }
};

/// Partial-fraction data of one half-current: poles b (mod the lattice, with
/// e^{2 pi i b} equal to the underlying rational pole exactly) and
/// coefficients for kernel derivative orders n = 0..order-1.
struct DynamicalHalfCurrent {
    int node = 0;
    int sign = +1;
    struct PoleData {
        cx                     b;
        std::vector<LambdaMat> coeffs;  // index n
    };
    std::vector<PoleData> poles;

    Mat eval(cx u, cx lambda_i, const Weight& lam, const ModularParams& mp, int dim) const {
        Mat out = Mat::Zero(dim, dim);
        for (const auto& p : poles)
            for (size_t n = 0; n < p.coeffs.size(); ++n)
                out += p.coeffs[n].eval(lam) *
                       kernel_eval(u - p.b, lambda_i, static_cast<int>(n), mp);
        return out;
    }

    bool lambda_independent(double tol = 1e-9) const {
        for (const auto& p : poles)
            for (const auto& c : p.coeffs)
                if (!c.lambda_independent(tol)) return false;
        return true;
    }
    int max_order() const {
        int m = 0;
        for (const auto& p : poles) m = std::max(m, static_cast<int>(p.coeffs.size()));
        return m;
    }
};

// ---------------------------------------------------------------------------
// G factors and Phi
// ---------------------------------------------------------------------------

/// log(z)/(2 pi i) with real part reduced into [0,1); e^{2 pi i result} = z.
inline cx log_over_2pii(cx z) {
    cx v = std::log(z) / two_pi_i;
    return v - std::floor(v.real());
}

/// Truncated infinite product G_i^{+-}(z) = prod_{n>=1} K_i^{+-1} Psi_i(p^{+-n} z),
/// factors ordered n = 1..trunc left to right. G^+(0) = 1 exactly.
inline Mat g_factor(const QLoopRep& rep, int i, int sign, cx z, int trunc) {
    const int n = rep.space.total_dim;
    if (sign > 0 && std::abs(z) == 0.0) return Mat::Identity(n, n);
    const Mat Kf = (sign > 0) ? rep.K[i] : static_cast<Mat>(rep.K[i].fullPivLu().inverse());
    Mat       G  = Mat::Identity(n, n);
    cx        pn = 1.0;
    for (int k = 1; k <= trunc; ++k) {
        pn *= (sign > 0) ? rep.params.p : 1.0 / rep.params.p;
        const cx arg = pn * z;
        if (rep.Psi[i].pole_distance(arg) < 1e-9 * std::max(1.0, std::abs(arg)))
            throw pole_hit(arg, "g_factor: factor n=" + std::to_string(k) + " hits a pole of Psi");
        G = G * (Kf * rep.Psi[i].eval(arg));
    }
    return G;
}

/// Phi_i(u) = G^+(z) Psi_i(z) G^-(z) at z = e^{2 pi i u}.
inline Mat phi_current(const QLoopRep& rep, int i, cx u, int trunc) {
    const cx z = std::exp(two_pi_i * u);
    if (rep.Psi[i].pole_distance(z) < 1e-9 * std::max(1.0, std::abs(z)))
        throw pole_hit(z, "phi_current: e^{2 pi i u} hits a pole of Psi");
    return g_factor(rep, i, +1, z, trunc) * rep.Psi[i].eval(z) * g_factor(rep, i, -1, z, trunc);
}

// ---------------------------------------------------------------------------
// EllipticRep
// ---------------------------------------------------------------------------

struct EllipticRep {
    WeightGradedSpace space;
    CartanDatum       datum;
    ModularParams     params;

    // Phi backing: either the functor triple (G^+, Psi, G^-) with an optional
    // commuting per-node multiplier, or an analytic block form.
    bool             functor_backed = false;
    QLoopRep         qrep;
    int              trunc = 40;
    std::vector<Mat> phi_pre;  // per node; empty means identity

    struct PhiBlock {
        int                        offset = 0, dim = 1;
        std::vector<ThetaQuotient> tq;  // per node
    };
    Mat                   S, Sinv;  // eigenbasis for the analytic form
    std::vector<PhiBlock> phi_blocks;

    std::vector<DynamicalHalfCurrent> xplus, xminus;

    int rank() const { return datum.rank(); }
    int dim() const { return space.total_dim; }

    const DynamicalHalfCurrent& hc(int i, int sign) const {
        return sign > 0 ? xplus[i] : xminus[i];
    }
    DynamicalHalfCurrent& hc(int i, int sign) { return sign > 0 ? xplus[i] : xminus[i]; }

    Mat phi(int i, cx u) const {
        if (functor_backed) {
            Mat out = phi_current(qrep, i, u, trunc);
            if (!phi_pre.empty()) out = phi_pre[i] * out;
            return out;
        }
        Mat D = Mat::Zero(dim(), dim());
        for (const auto& b : phi_blocks) {
            const cx v = b.tq[i].eval(u, params);
            for (int k = 0; k < b.dim; ++k) D(b.offset + k, b.offset + k) = v;
        }
        return S * D * Sinv;
    }

    /// X_i^{+-}(u,lambda); weight-shifting V_mu -> V_{mu +- alpha_i}.
    Mat half(int i, int sign, cx u, const Weight& lam) const {
        const cx li = datum.pair_alpha(lam, i);
        if (on_lattice(li, params.tau, params.pole_tol)) throw lattice_lambda(li);
        return hc(i, sign).eval(u, li, lam, params, dim());
    }

    /// Representatives (mod the lattice) of every known pole in the spectral
    /// variable, for samplers: half-current poles plus their +-d_i hbar shifts
    /// (which covers the zeros and poles of the Phi eigenvalues).
    std::vector<cx> pole_representatives() const {
        std::vector<cx> out;
        for (int i = 0; i < rank(); ++i)
            for (int sign : {+1, -1})
                for (const auto& p : hc(i, sign).poles) {
                    const cx shift = static_cast<double>(datum.d[i]) * params.hbar;
                    out.push_back(p.b);
                    out.push_back(p.b + shift);
                    out.push_back(p.b - shift);
                }
        for (const auto& blk : phi_blocks)
            for (const auto& tq : blk.tq) {
                for (const cx& z : tq.poles) out.push_back(z);
                for (const cx& z : tq.zeros) out.push_back(z);
            }
        return out;
    }
};

inline Mat eval_half_current(const EllipticRep& erep, int i, int sign, cx u, const Weight& lam) {
    return erep.half(i, sign, u, lam);
}

/// One-dimensional representation with constant commuting currents
/// Phi_i = C_i and vanishing half-currents.
inline EllipticRep make_trivial_elliptic(const CartanDatum& cd, const ModularParams& mp,
                                         const std::vector<cx>& constants) {
    EllipticRep e;
    e.datum  = cd;
    e.params = mp;
    e.space  = WeightGradedSpace::make({Weight::zero(cd.rank())}, {1});
    e.S      = Mat::Identity(1, 1);
    e.Sinv   = Mat::Identity(1, 1);
    EllipticRep::PhiBlock blk;
    blk.offset = 0;
    blk.dim    = 1;
    for (int i = 0; i < cd.rank(); ++i) {
        ThetaQuotient tq;
        tq.constant = constants.empty() ? cx(1.0) : constants[i];
        blk.tq.push_back(tq);
    }
    e.phi_blocks.push_back(blk);
    for (int i = 0; i < cd.rank(); ++i) {
        DynamicalHalfCurrent hp, hm;
        hp.node = hm.node = i;
        hp.sign           = +1;
        hm.sign           = -1;
        e.xplus.push_back(hp);
        e.xminus.push_back(hm);
    }
    return e;
}

// ---------------------------------------------------------------------------
// The functor itself
// ---------------------------------------------------------------------------

namespace detail {

/// Taylor coefficients (orders 0..max_order) of v -> G_i^{+-}(e^{2 pi i v})
/// at v = b, by multiplying per-factor series.
inline MatSeries g_factor_series(const QLoopRep& rep, int i, int sign, cx b, int max_order,
                                 int trunc) {
    const int dim = rep.space.total_dim;
    const cx  z0  = std::exp(two_pi_i * b);
    const Mat Kf  = (sign > 0) ? rep.K[i] : static_cast<Mat>(rep.K[i].fullPivLu().inverse());

    MatSeries G{0, {Mat::Identity(dim, dim)}};
    cx        pn = 1.0;
    for (int k = 1; k <= trunc; ++k) {
        pn *= (sign > 0) ? rep.params.p : 1.0 / rep.params.p;
        const cx w0 = pn * z0;
        // Psi(p^{+-k} e^{2 pi i v}) = sum_m D_m s(delta)^m,  s = w0 (e^{2 pi i delta} - 1)
        auto D = rep.Psi[i].taylor(w0, max_order);
        for (auto& Dm : D) Dm = Kf * Dm;
        CSeries s = CSeries::expm1_over_delta(max_order);
        s.lo      = 1;  // multiply by delta
        for (auto& cc : s.c) cc *= w0;
        const MatSeries factor = compose_taylor(D, s, max_order, dim);
        G = mul(G, factor, max_order, dim);
    }
    return G;
}

}  // namespace detail

/// c_i^+ = c_i^- = 2 pi i theta^+(0)/theta^+(d_i hbar): the symmetric
/// solution of c^+ c^- = (2 pi i)^2 theta^+(0)^2 / theta^+(d_i hbar)^2.
inline cx functor_constant(const CartanDatum& cd, int i, const ModularParams& mp) {
    return two_pi_i * theta_plus(0.0, mp) /
           theta_plus(static_cast<double>(cd.d[i]) * mp.hbar, mp);
}

namespace detail {

inline std::vector<DynamicalHalfCurrent> build_half_currents(const QLoopRep& rep, int sign,
                                                             int trunc) {
    const int                         dim = rep.space.total_dim;
    std::vector<DynamicalHalfCurrent> out;
    for (int i = 0; i < rep.rank(); ++i) {
        const RationalMatFun& X = rep.X(i, sign);
        DynamicalHalfCurrent  hc;
        hc.node = i;
        hc.sign = sign;
        const cx c = functor_constant(rep.datum, i, rep.params);
        for (size_t pidx = 0; pidx < X.poles.size(); ++pidx) {
            const auto& pole  = X.poles[pidx];
            const int   order = pole.order();
            if (order > 6) throw unsupported_order("half-current pole order exceeds 6");
            const cx b  = log_over_2pii(pole.z0);
            const cx z0 = pole.z0;

            // Laurent series of G^{+-}(e^{2 pi i v}) X(e^{2 pi i v}) at v = b.
            const MatSeries G = g_factor_series(rep, i, sign, b, order - 1 + 1, trunc);

            // Singular part of X: sum_k A_k (z-z0)^{-k}, with
            // (z - z0)^{-k} = z0^{-k} delta^{-k} E(delta)^{-k}.
            const CSeries E = CSeries::expm1_over_delta(order + 1);
            MatSeries     Xsing{0, {}};
            for (int k = 1; k <= order; ++k) {
                CSeries Ek = pow_int(E, -k, order);
                Ek.lo -= k;  // delta^{-k}
                for (auto& cc : Ek.c) cc *= std::pow(z0, -k);
                MatSeries term = mul(MatSeries{0, {pole.coeffs[k - 1]}}, Ek, order, dim);
                add_in_place(Xsing, term, dim);
            }
            // Smooth part of X at b (other poles + value at infinity).
            RationalMatFun Xrest = X;
            Xrest.poles.erase(Xrest.poles.begin() + static_cast<long>(pidx));
            const auto DR = Xrest.taylor(z0, order);
            CSeries    s  = CSeries::expm1_over_delta(order);
            s.lo          = 1;
            for (auto& cc : s.c) cc *= z0;
            MatSeries Xsmooth = compose_taylor(DR, s, order, dim);

            MatSeries Xloc = Xsing;
            add_in_place(Xloc, Xsmooth, dim);
            const MatSeries F = mul(G, Xloc, 0, dim);

            DynamicalHalfCurrent::PoleData pd;
            pd.b = b;
            for (int n = 0; n < order; ++n) {
                const Mat coeff = c * F.at(-(n + 1), dim);
                pd.coeffs.push_back(LambdaMat::constant(coeff, rep.rank()));
            }
            // Trim trailing zero orders.
            while (!pd.coeffs.empty() &&
                   max_abs(pd.coeffs.back().terms.front().M) < 1e-14)
                pd.coeffs.pop_back();
            if (!pd.coeffs.empty()) hc.poles.push_back(std::move(pd));
        }
        out.push_back(std::move(hc));
    }
    return out;
}

}  // namespace detail

/// The monodromy functor. Refuses congruent representations; truncation is
/// doubled once if the internal difference-equation probe lands in the
/// truncation-dominated band (tol_check, 100*tol_check).
inline EllipticRep theta_functor(const QLoopRep& rep) {
    if (!is_non_congruent(rep, rep.params))
        throw functor_undefined("theta_functor: representation is congruent");

    int trunc = rep.params.trunc;
    for (int attempt = 0; attempt < 2; ++attempt) {
        EllipticRep e;
        e.space          = rep.space;
        e.datum          = rep.datum;
        e.params         = rep.params;
        e.functor_backed = true;
        e.qrep           = rep;
        e.trunc          = trunc;
        e.xplus          = detail::build_half_currents(rep, +1, trunc);
        e.xminus         = detail::build_half_currents(rep, -1, trunc);

        // Difference-equation probe G^+(p z) = [K Psi(p z)]^{-1} G^+(z).
        double probe = 0.0;
        const cx z   = cx(0.631, 0.2741);
        for (int i = 0; i < rep.rank(); ++i) {
            const Mat lhs = g_factor(rep, i, +1, rep.params.p * z, trunc);
            const Mat rhs = (rep.K[i] * rep.Psi[i].eval(rep.params.p * z)).fullPivLu().inverse() *
                            g_factor(rep, i, +1, z, trunc);
            probe = std::max(probe, rel_residual(lhs, rhs));
        }
        if (probe > rep.params.tol_check && probe <= 100.0 * rep.params.tol_check &&
            attempt == 0) {
            trunc *= 2;
            continue;
        }
        return e;
    }
    throw std::logic_error("theta_functor: unreachable");
}

}  // namespace ellq
