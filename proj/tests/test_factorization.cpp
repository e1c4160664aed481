#include <catch2/catch_amalgamated.hpp>

#include "ellq/factorization.hpp"

using namespace ellq;

namespace {
const ModularParams mp = ModularParams::make(cx(0.0, 0.8), cx(0.31, 0.17));
const cx            b0 = cx(0.23, 0.31);
const cx            a0 = std::exp(two_pi_i * b0);

FactorizationProblem scalar_problem(const ThetaQuotient& tq, cx eta) {
    FactorizationProblem prob;
    prob.dim    = 1;
    prob.params = mp;
    prob.S = prob.Sinv = Mat::Identity(1, 1);
    prob.K             = eta * Mat::Identity(1, 1);
    FactorizationProblem::Block blk;
    blk.data.tq  = tq;
    blk.data.eta = eta;
    prob.blocks.push_back(blk);
    return prob;
}

}  // namespace

TEST_CASE("trivial problem") {
    ThetaQuotient one;
    const auto    sol = solve_factorization(scalar_problem(one, cx(1.0)));
    CHECK(std::abs(sol.Hminus(cx(1.3, 0.4))(0, 0) - 1.0) < 1e-14);
    CHECK(std::abs(sol.HplusInv(cx(1.3, 0.4))(0, 0) - 1.0) < 1e-14);
    CHECK(std::abs(sol.A.eval(cx(0.7, -0.2))(0, 0) - 1.0) < 1e-14);
}

TEST_CASE("scalar theta-quotient factorization") {
    // Phi(z) = theta(u - b + hbar)/theta(u - b), eta = q.
    ThetaQuotient tq;
    tq.zeros = {b0 - mp.hbar};
    tq.poles = {b0};
    const auto sol = solve_factorization(scalar_problem(tq, mp.q));

    SECTION("H^- is the theta^- quotient") {
        const cx u = cx(0.57, 0.21);
        const cx z = std::exp(two_pi_i * u);
        const cx want = theta_minus(u - b0 + mp.hbar, mp) / theta_minus(u - b0, mp);
        CHECK(std::abs(sol.Hminus(z)(0, 0) - want) < 1e-11 * std::max(1.0, std::abs(want)));
    }
    SECTION("F1 through the splitting identity at 20 samples") {
        Rng    rng(3);
        double worst = 0.0;
        for (int s = 0; s < 20; ++s) {
            const cx u = rng.complex_box(0.0, 1.0, 0.02, 0.78);
            if (lattice_distance(u - b0, mp.tau) < 0.05) continue;
            const cx z   = std::exp(two_pi_i * u);
            const cx phi = theta(u - b0 + mp.hbar, mp) / theta(u - b0, mp);
            const cx got = (sol.HplusInv(z) * sol.Hminus(z))(0, 0);
            worst        = std::max(worst, std::abs(got - phi) / std::max(1.0, std::abs(phi)));
        }
        CHECK(worst < 1e-10);
    }
    SECTION("coefficient matrix is the Drinfeld quotient") {
        const cx z = cx(1.9, 0.7);
        const cx want = (mp.q * z - a0 / mp.q) / (z - a0);
        CHECK(std::abs(sol.A.eval(z)(0, 0) - want) < 1e-10);
        CHECK(std::abs(sol.A.value_at_inf(0, 0) - mp.q) < 1e-10);
        CHECK(std::abs(sol.A.eval(cx(0.0))(0, 0) - 1.0 / mp.q) < 1e-10);
    }
    SECTION("G^+(0) equals the eigenvalue constant (here 1)") {
        const cx g0 = (sol.HplusInv(cx(1e-9, 0.0)) * sol.A.eval(cx(1e-9, 0.0)).inverse())(0, 0);
        CHECK(std::abs(g0 - 1.0) < 1e-10);
    }
}

TEST_CASE("eq:consistency handling") {
    ThetaQuotient tq;
    tq.zeros = {b0 - mp.hbar};
    tq.poles = {b0};
    SECTION("sign mismatch is absorbed by a representative shift") {
        // eta = -q is consistent with the same function Phi; the internal
        // representative shift must not change the factorized function.
        const auto sol = solve_factorization(scalar_problem(tq, -mp.q));
        const cx   u   = cx(0.61, 0.33);
        const cx   z   = std::exp(two_pi_i * u);
        const cx phi  = theta(u - b0 + mp.hbar, mp) / theta(u - b0, mp);
        const cx got  = (sol.HplusInv(z) * sol.Hminus(z))(0, 0);
        CHECK(std::abs(got - phi) < 1e-10 * std::max(1.0, std::abs(phi)));
        CHECK(std::abs(sol.A.value_at_inf(0, 0) + mp.q) < 1e-10);  // A(inf) = K = -q
    }
    SECTION("anything else is inconsistent data") {
        CHECK_THROWS_AS(solve_factorization(scalar_problem(tq, 1.7 * mp.q)),
                        inconsistent_data);
    }
}

TEST_CASE("unipotent 2x2 factorization") {
    // Phi = exp(phi(z) E12), phi = f d_u log theta(u - a), so that
    // phi(pz) - phi(z) = -2 pi i f =: k.
    const cx f(0.4, 0.15);
    const cx k = -two_pi_i * f;
    Mat      E12 = Mat::Zero(2, 2);
    E12(0, 1)    = 1.0;

    FactorizationProblem prob;
    prob.dim    = 2;
    prob.params = mp;
    prob.S = prob.Sinv = Mat::Identity(2, 2);
    prob.K             = Mat::Identity(2, 2) - k / 2.0 * E12;
    FactorizationProblem::Block blk;
    blk.dim      = 2;
    blk.data.eta = 1.0;
    UnipotentLogTerm t;
    t.a = b0;
    t.n = 0;
    t.f = f * E12;
    blk.data.logterms.push_back(t);
    prob.blocks.push_back(blk);
    const auto sol = solve_factorization(prob);

    auto phi = [&](cx z) -> Mat {
        const cx u = std::log(z) / two_pi_i;
        return Mat::Identity(2, 2) + f * theta_log_deriv(u - b0, mp) * E12;
    };
    SECTION("difference equation of the data") {
        const cx z(1.31, 0.41);
        CHECK(max_abs(phi(mp.p * z) - phi(z) - k * E12) < 1e-11);
    }
    SECTION("F1 at samples") {
        Rng    rng(5);
        double worst = 0.0;
        for (int s = 0; s < 20; ++s) {
            const cx u = rng.complex_box(0.0, 1.0, 0.03, 0.77);
            if (lattice_distance(u - b0, mp.tau) < 0.05) continue;
            const cx z = std::exp(two_pi_i * u);
            worst = std::max(worst, rel_residual(Mat(sol.HplusInv(z) * sol.Hminus(z)), phi(z)));
        }
        CHECK(worst < 1e-10);
    }
    SECTION("boundary values: h^-(inf) = 0 and h^+(0) = -k/2") {
        CHECK(max_abs(sol.Hminus(cx(1e7, 3e6)) - Mat::Identity(2, 2)) < 1e-7);
        // (H^+)^{-1}(0) = exp(-h^+(0)) = I + (k/2) E12. The sign is forced by
        // h^- - h^+ = log Phi_U together with pi cot(pi x) -> -i pi as z -> 0.
        const Mat got = sol.HplusInv(cx(1e-9, 0.0));
        CHECK(max_abs(got - (Mat::Identity(2, 2) + k / 2.0 * E12)) < 1e-7);
    }
    SECTION("coefficient matrix A(inf) = K = A(0)^{-1}") {
        CHECK(max_abs(sol.A.value_at_inf - prob.K) < 1e-9);
        CHECK(max_abs(Mat(sol.A.eval(cx(0.0)).fullPivLu().inverse()) - prob.K) < 1e-9);
    }
}

TEST_CASE("check_factorization pass and perturbation") {
    ThetaQuotient tq;
    tq.zeros = {b0 - mp.hbar};
    tq.poles = {b0};
    const auto sol = solve_factorization(scalar_problem(tq, mp.q));

    std::vector<std::pair<cx, Mat>> samples;
    Rng                             rng(7);
    while (samples.size() < 20) {
        const cx u = rng.complex_box(0.0, 1.0, 0.03, 0.77);
        if (lattice_distance(u - b0, mp.tau) < 0.05) continue;
        Mat P(1, 1);
        P(0, 0) = theta(u - b0 + mp.hbar, mp) / theta(u - b0, mp);
        samples.emplace_back(std::exp(two_pi_i * u), P);
    }
    const auto rep = check_factorization(sol, samples, mp.q * Mat::Identity(1, 1), 1e-8);
    CHECK(rep.pass);
    CHECK(rep.f1_residual < 1e-10);

    // 1% perturbation: F1 fails at the 1e-2 level.
    std::vector<std::pair<cx, Mat>> bad = samples;
    for (auto& [z, P] : bad) P /= 1.01;
    const auto rep2 = check_factorization(sol, bad, mp.q * Mat::Identity(1, 1), 1e-8);
    CHECK_FALSE(rep2.pass);
    CHECK(rep2.f1_residual > 5e-3);
}

TEST_CASE("uniqueness preconditions") {
    SECTION("single Drinfeld pair is fine") {
        ThetaQuotient tq;
        tq.zeros = {b0 - mp.hbar};
        tq.poles = {b0};
        const auto sol = solve_factorization(scalar_problem(tq, mp.q));
        CHECK(uniqueness_preconditions(sol.A, mp));
    }
    SECTION("p-congruent poles are flagged") {
        RationalMatFun A;
        A.dim          = 2;
        A.value_at_inf = Mat::Identity(2, 2);
        Mat C1 = Mat::Zero(2, 2), C2 = Mat::Zero(2, 2);
        C1(0, 0) = 1.0;
        C2(1, 1) = 1.0;
        A.add_pole_term(a0, 1, C1);
        A.add_pole_term(mp.p * a0, 1, C2);
        CHECK_FALSE(uniqueness_preconditions(A, mp));
    }
}

TEST_CASE("isomonodromy transformation") {
    // Two solutions differing by a rational gauge G with G(inf) = 1:
    // A2(z) = G(pz) A1(z) G(z)^{-1}.
    ThetaQuotient tq;
    tq.zeros = {b0 - mp.hbar};
    tq.poles = {b0};
    const auto sol = solve_factorization(scalar_problem(tq, mp.q));

    const cx w0(0.9, 0.4), g(0.3, -0.2);
    auto     G = [&](cx z) { return 1.0 + g / (z - w0); };
    Rng      rng(9);
    for (int s = 0; s < 10; ++s) {
        const cx z = rng.complex_box(-1.5, 1.5, -1.5, 1.5);
        if (std::abs(z - w0) < 0.2 || std::abs(mp.p * z - w0) < 0.2 ||
            std::abs(z - a0) < 0.2 || std::abs(z) < 0.1)
            continue;
        const cx A1 = sol.A.eval(z)(0, 0);
        // H2^- = G H1^-  =>  A2 = K H2^-(pz)/H2^-(z) = G(pz) A1 G(z)^{-1}.
        const cx H2pz = G(mp.p * z) * sol.Hminus(mp.p * z)(0, 0);
        const cx H2z  = G(z) * sol.Hminus(z)(0, 0);
        const cx A2   = mp.q * H2pz / H2z;
        CHECK(std::abs(A2 - G(mp.p * z) * A1 / G(z)) < 1e-9 * std::max(1.0, std::abs(A2)));
    }
}

TEST_CASE("block permutation does not change the solution") {
    ThetaQuotient tq1, tq2;
    tq1.zeros = {b0 - mp.hbar};
    tq1.poles = {b0};
    const cx b1 = cx(0.61, 0.13);
    tq2.zeros = {b1 - mp.hbar};
    tq2.poles = {b1};

    FactorizationProblem prob;
    prob.dim    = 2;
    prob.params = mp;
    prob.S = prob.Sinv = Mat::Identity(2, 2);
    Mat K              = Mat::Zero(2, 2);
    K(0, 0) = K(1, 1) = mp.q;
    prob.K            = K;
    FactorizationProblem::Block blkA, blkB;
    blkA.offset   = 0;
    blkA.data.tq  = tq1;
    blkA.data.eta = mp.q;
    blkB.offset   = 1;
    blkB.data.tq  = tq2;
    blkB.data.eta = mp.q;

    prob.blocks                = {blkA, blkB};
    const auto           sol1  = solve_factorization(prob);
    FactorizationProblem prob2 = prob;
    prob2.blocks               = {blkB, blkA};
    const auto sol2            = solve_factorization(prob2);

    CHECK(uniqueness_preconditions(sol1.A, mp));
    Rng rng(11);
    for (int s = 0; s < 10; ++s) {
        const cx u = rng.complex_box(0.0, 1.0, 0.03, 0.77);
        if (lattice_distance(u - b0, mp.tau) < 0.05 || lattice_distance(u - b1, mp.tau) < 0.05)
            continue;
        const cx z = std::exp(two_pi_i * u);
        CHECK(max_abs(sol1.Hminus(z) - sol2.Hminus(z)) < 1e-10);
        CHECK(max_abs(sol1.HplusInv(z) - sol2.HplusInv(z)) < 1e-10);
        CHECK(max_abs(sol1.A.eval(z) - sol2.A.eval(z)) < 1e-9);
    }
}
