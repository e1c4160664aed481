#include <catch2/catch_amalgamated.hpp>

#include "ellq/eqg_verify.hpp"
#include "ellq/monodromy.hpp"

using namespace ellq;

namespace {
const ModularParams mp  = ModularParams::make(cx(0.0, 0.8), cx(0.31, 0.17));
const cx            b0  = cx(0.23, 0.31);  // evaluation point in u coordinates
const cx            a0  = std::exp(two_pi_i * b0);
}  // namespace

TEST_CASE("G factors") {
    const QLoopRep rep = make_sl2_evaluation(a0, mp);

    SECTION("G^+(0) = 1 exactly") {
        CHECK(max_abs(g_factor(rep, 0, +1, cx(0.0), 40) - Mat::Identity(2, 2)) == 0.0);
    }
    SECTION("G^-(z) -> 1 for large z") {
        CHECK(max_abs(g_factor(rep, 0, -1, cx(1e9, 2e8), 40) - Mat::Identity(2, 2)) < 1e-8);
    }
    SECTION("highest-weight eigenvalue is the half theta-quotient") {
        Rng rng(3);
        for (int s = 0; s < 5; ++s) {
            const cx u = rng.complex_box(0.0, 1.0, 0.0, 0.8);
            const cx z = std::exp(two_pi_i * u);
            const cx gp = g_factor(rep, 0, +1, z, 40)(0, 0);
            const cx gm = g_factor(rep, 0, -1, z, 40)(0, 0);
            const cx wantp = theta_plus(u - b0 + mp.hbar, mp) / theta_plus(u - b0, mp);
            const cx wantm = theta_minus(u - b0 + mp.hbar, mp) / theta_minus(u - b0, mp);
            CHECK(std::abs(gp - wantp) < 1e-9 * std::max(1.0, std::abs(wantp)));
            CHECK(std::abs(gm - wantm) < 1e-9 * std::max(1.0, std::abs(wantm)));
        }
    }
    SECTION("difference equation G^+(pz) = [K Psi(pz)]^{-1} G^+(z)") {
        Rng rng(5);
        for (int s = 0; s < 10; ++s) {
            const cx z   = std::exp(two_pi_i * rng.complex_box(0.0, 1.0, 0.0, 0.8));
            const Mat lhs = g_factor(rep, 0, +1, mp.p * z, 40);
            const Mat rhs = (rep.K[0] * rep.Psi[0].eval(mp.p * z)).fullPivLu().inverse() *
                            g_factor(rep, 0, +1, z, 40);
            CHECK(rel_residual(lhs, rhs) < 1e-9);
        }
    }
    SECTION("pole hits name the factor") {
        CHECK_THROWS_AS(g_factor(rep, 0, +1, a0 / mp.p, 40), pole_hit);
    }
}

TEST_CASE("Phi current") {
    const QLoopRep rep = make_sl2_evaluation(a0, mp);

    SECTION("trivial module gives Phi = 1") {
        const QLoopRep t = make_trivial_module(cartan_sl2(), mp);
        CHECK(std::abs(phi_current(t, 0, cx(0.4, 0.3), 40)(0, 0) - 1.0) < 1e-14);
    }
    SECTION("highest-weight eigenvalue theta(u - b + hbar)/theta(u - b)") {
        Rng rng(7);
        for (int s = 0; s < 5; ++s) {
            const cx u = rng.complex_box(0.0, 1.0, 0.0, 0.8);
            if (lattice_distance(u - b0, mp.tau) < 0.05) continue;
            const cx got  = phi_current(rep, 0, u, 40)(0, 0);
            const cx want = theta(u - b0 + mp.hbar, mp) / theta(u - b0, mp);
            CHECK(std::abs(got - want) < 1e-9 * std::max(1.0, std::abs(want)));
        }
    }
    SECTION("quasi-periodicity Phi(u + tau) = K^{-2} Phi(u)") {
        const cx  u   = cx(0.41, 0.13);
        const Mat lhs = phi_current(rep, 0, u + mp.tau, 40);
        const Mat rhs = (rep.K[0] * rep.K[0]).fullPivLu().inverse() * phi_current(rep, 0, u, 40);
        CHECK(rel_residual(lhs, rhs) < 1e-9);
        CHECK(rel_residual(phi_current(rep, 0, u + 1.0, 40), phi_current(rep, 0, u, 40)) <
              1e-11);
    }
}

TEST_CASE("theta functor on the trivial module") {
    const EllipticRep e = theta_functor(make_trivial_module(cartan_sl2(), mp));
    CHECK(e.dim() == 1);
    CHECK(e.xplus[0].poles.empty());
    CHECK(e.xminus[0].poles.empty());
    SamplePlan plan;
    const auto rr = check_eqg_relations(e, plan);
    CHECK(rr.pass());
    CHECK(rr.max_residual() < 1e-13);
}

TEST_CASE("theta functor on the sl2 evaluation module") {
    const QLoopRep    rep = make_sl2_evaluation(a0, mp);
    const EllipticRep e   = theta_functor(rep);

    SECTION("preserves dimension and weights") {
        CHECK(e.dim() == 2);
        CHECK(e.space.weights.size() == rep.space.weights.size());
    }
    SECTION("half current pole sits at the evaluation point") {
        REQUIRE(e.xplus[0].poles.size() == 1);
        CHECK(std::abs(std::exp(two_pi_i * e.xplus[0].poles[0].b) - a0) < 1e-12);
        CHECK(e.xplus[0].lambda_independent());
    }
    SECTION("raising current annihilates the highest-weight vector") {
        Rng rng(9);
        for (int s = 0; s < 5; ++s) {
            const cx     u = rng.complex_box(0.0, 1.0, 0.05, 0.7);
            if (lattice_distance(u - b0, mp.tau) < 0.05) continue;
            Weight lam = Weight::zero(1);
            lam.coords[0] = rng.complex_box(-0.4, 0.4, -0.3, 0.3);
            if (lattice_distance(e.datum.pair_alpha(lam, 0), mp.tau) < 0.05) continue;
            CHECK(e.half(0, +1, u, lam).col(0).cwiseAbs().maxCoeff() < 1e-10);
        }
    }
    SECTION("full relation suite at 30 samples") {
        SamplePlan plan;
        plan.seed = 7;
        const auto rr = check_eqg_relations(e, plan);
        for (const auto& entry : rr.entries) {
            INFO(entry.relation << " residual " << entry.max_residual << " at " << entry.worst);
            CHECK(entry.max_residual < 1e-8);
        }
    }
    SECTION("lambda shift by Pbar-vee elements") {
        Weight lam = Weight::zero(1);
        lam.coords[0] = cx(0.21, 0.13);
        Weight gamma  = Weight::zero(1);
        gamma.coords[0] = 0.5;  // (gamma, alpha) = 1
        REQUIRE(e.datum.in_pbar_vee(gamma));
        const cx u = cx(0.61, 0.22);
        CHECK(rel_residual(e.half(0, -1, u, lam + gamma), e.half(0, -1, u, lam)) < 1e-12);
    }
    SECTION("periodicity of the half currents in u") {
        Weight lam = Weight::zero(1);
        lam.coords[0] = cx(0.17, 0.09);
        const cx u = cx(0.57, 0.41);
        CHECK(rel_residual(e.half(0, -1, u + 1.0, lam), e.half(0, -1, u, lam)) < 1e-12);
        const cx fac = std::exp(-two_pi_i * e.datum.pair_alpha(lam, 0));
        CHECK(rel_residual(e.half(0, -1, u + mp.tau, lam), fac * e.half(0, -1, u, lam)) <
              1e-10);
    }
}

TEST_CASE("theta functor on the sl3 vector module") {
    const EllipticRep e = theta_functor(make_sl3_vector(a0, mp));
    SamplePlan        plan;
    plan.seed = 7;
    const auto rr = check_eqg_relations(e, plan);
    for (const auto& entry : rr.entries) {
        INFO(entry.relation << " residual " << entry.max_residual << " at " << entry.worst);
        CHECK(entry.max_residual < 1e-8);
    }
}

TEST_CASE("congruent representations are refused") {
    const QLoopRep bad =
        direct_sum(make_sl2_evaluation(a0, mp), make_sl2_evaluation(mp.p * a0, mp));
    CHECK_THROWS_AS(theta_functor(bad), functor_undefined);
}

TEST_CASE("contour independence: vacuous poles do not contribute") {
    const EllipticRep e = theta_functor(make_sl2_evaluation(a0, mp));
    EllipticRep       e2 = e;
    DynamicalHalfCurrent::PoleData fake;
    fake.b = cx(0.77, 0.19);
    fake.coeffs.push_back(LambdaMat::constant(Mat::Zero(2, 2), 1));
    e2.xplus[0].poles.push_back(fake);
    Weight lam = Weight::zero(1);
    lam.coords[0] = cx(0.19, 0.23);
    const cx u = cx(0.51, 0.33);
    CHECK(rel_residual(e2.half(0, +1, u, lam), e.half(0, +1, u, lam)) == 0.0);
}

TEST_CASE("Ad(Psi) on residue sums multiplies the kernel by the rational ratio") {
    // At 10 configurations, with the kernel as the holomorphic factor.
    const QLoopRep rep = make_sl2_evaluation(a0, mp);
    Rng            rng(15);
    const cx       lam0 = cx(0.23, 0.11);
    int            done = 0;
    for (int cfg = 0; cfg < 20 && done < 10; ++cfg) {
        const cx u = rng.complex_box(0.0, 1.0, 0.05, 0.75);
        const cx z = std::exp(two_pi_i * u);
        const int eps  = (cfg % 2 == 0) ? +1 : -1;
        const int sign = (cfg % 3 == 0) ? -1 : +1;  // the +-1 power of Ad
        const cx  a    = mp.hbar;                   // d_i a_ii hbar / 2 for i = j
        if (rep.Psi[0].pole_distance(z) < 0.05) continue;
        ++done;

        // Residue sum of f(v) X^eps(e^{2 pi i v}) over the poles of X^eps.
        auto residue_sum = [&](const std::function<cx(cx)>& f) {
            Mat out = Mat::Zero(2, 2);
            for (const auto& p : rep.X(0, eps).poles) {
                REQUIRE(p.order() == 1);
                out += f(log_over_2pii(p.z0)) * p.coeffs[0] / (two_pi_i * p.z0);
            }
            return out;
        };
        auto kernel = [&](cx v) { return kernel_plain(u - v, lam0, mp); };
        const Mat P    = rep.Psi[0].eval(z);
        const Mat Pinv = P.fullPivLu().inverse();
        const Mat lhs  = (sign > 0) ? Mat(P * residue_sum(kernel) * Pinv)
                                    : Mat(Pinv * residue_sum(kernel) * P);
        auto ratio = [&](cx v) {
            const cx r = (std::exp(two_pi_i * (u + static_cast<double>(eps) * a)) -
                          std::exp(two_pi_i * v)) /
                         (std::exp(two_pi_i * u) -
                          std::exp(two_pi_i * (v + static_cast<double>(eps) * a)));
            return (sign > 0) ? r : 1.0 / r;
        };
        const Mat rhs = residue_sum([&](cx v) { return kernel(v) * ratio(v); });
        CHECK(rel_residual(lhs, rhs) < 1e-10);
    }
    CHECK(done == 10);
}

TEST_CASE("Ad(Phi) on residue sums multiplies the kernel by the theta ratio") {
    const QLoopRep    rep = make_sl2_evaluation(a0, mp);
    const EllipticRep e   = theta_functor(rep);
    Rng               rng(25);
    const cx          lam0 = cx(0.29, 0.07);
    for (int cfg = 0; cfg < 6; ++cfg) {
        const cx u = rng.complex_box(0.0, 1.0, 0.05, 0.75);
        if (lattice_distance(u - b0, mp.tau) < 0.08 ||
            lattice_distance(u - b0 - mp.hbar, mp.tau) < 0.08 ||
            lattice_distance(u - b0 + mp.hbar, mp.tau) < 0.08)
            continue;
        const int eps = (cfg % 2 == 0) ? +1 : -1;
        const cx  a   = mp.hbar;

        auto residue_sum = [&](const std::function<cx(cx)>& f) {
            Mat out = Mat::Zero(2, 2);
            for (const auto& p : e.hc(0, eps).poles)
                out += f(p.b) * p.coeffs[0].terms.front().M;
            return out;
        };
        auto kernel = [&](cx v) { return kernel_plain(u - v, lam0, mp); };
        const Mat P   = e.phi(0, u);
        const Mat lhs = P * residue_sum(kernel) * P.fullPivLu().inverse();
        const Mat rhs = residue_sum([&](cx v) {
            return kernel(v) * theta(u - v + static_cast<double>(eps) * a, mp) /
                   theta(u - v - static_cast<double>(eps) * a, mp);
        });
        CHECK(rel_residual(lhs, rhs) < 1e-9);
    }
}
