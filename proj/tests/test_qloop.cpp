#include <catch2/catch_amalgamated.hpp>

#include "ellq/qloop.hpp"

using namespace ellq;

namespace {
const ModularParams mp = ModularParams::make(cx(0.0, 0.8), cx(0.31, 0.17));
const cx            a0 = std::exp(two_pi_i * cx(0.23, 0.31));  // generic, in the slice

SamplePlan plan50() {
    SamplePlan p;
    p.seed          = 7;
    p.default_count = 50;
    return p;
}
}  // namespace

TEST_CASE("trivial module") {
    const QLoopRep t = make_trivial_module(cartan_sl2(), mp);
    const auto     rr = check_qloop_relations(t, plan50());
    CHECK(rr.pass());
    CHECK(rr.max_residual() < 1e-14);
    const auto dd = qloop_highest_weight(t);
    CHECK(dd.roots[0].empty());
    CHECK(dd.mu.coords.cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("sl2 evaluation module") {
    const QLoopRep rep = make_sl2_evaluation(a0, mp);
    CHECK(rep.space.total_dim == 2);

    SECTION("highest weight eigenvalue (q z - q^-1 a)/(z - a)") {
        const cx z(1.7, 0.4);
        const cx got  = rep.Psi[0].eval(z)(0, 0);
        const cx want = (mp.q * z - a0 / mp.q) / (z - a0);
        CHECK(std::abs(got - want) < 1e-12);
        CHECK(std::abs(rep.datum.coweight_value(rep.space.weights[0], 0) - 1.0) < 1e-12);
    }
    SECTION("relations at 50 samples") {
        const auto rr = check_qloop_relations(rep, plan50());
        INFO("max residual " << rr.max_residual());
        CHECK(rr.pass());
        CHECK(rr.max_residual() < 1e-10);
    }
    SECTION("corrupted module fails loudly") {
        QLoopRep bad = rep;
        bad.Xp[0].value_at_inf *= 1.01;
        for (auto& p : bad.Xp[0].poles)
            for (auto& C : p.coeffs) C *= 1.01;
        const auto rr = check_qloop_relations(bad, plan50());
        CHECK_FALSE(rr.pass());
        CHECK(rr.max_residual("QL5") > 1e-3);
    }
    SECTION("Drinfeld data") {
        const auto dd = qloop_highest_weight(rep);
        REQUIRE(dd.roots[0].size() == 1);
        CHECK(std::abs(dd.roots[0][0] - a0) < 1e-10);
    }
}

TEST_CASE("sl3 vector module") {
    const QLoopRep rep = make_sl3_vector(a0, mp);
    CHECK(rep.space.total_dim == 3);
    const auto rr = check_qloop_relations(rep, plan50());
    INFO("max residual " << rr.max_residual());
    CHECK(rr.pass());
    CHECK(rr.max_residual() < 1e-10);

    const auto dd = qloop_highest_weight(rep);
    REQUIRE(dd.roots.size() == 2);
    CHECK(dd.roots[0].size() == 1);
    CHECK(dd.roots[1].empty());
    CHECK(std::abs(dd.roots[0][0] - a0) < 1e-9);
}

TEST_CASE("A1 x A1 tensor module") {
    const QLoopRep rep = make_a1xa1_tensor(a0, 1.31 * a0, mp);
    CHECK(rep.space.total_dim == 4);
    const auto rr = check_qloop_relations(rep, plan50());
    INFO("max residual " << rr.max_residual());
    CHECK(rr.pass());
}

TEST_CASE("direct sums") {
    const QLoopRep A = make_sl2_evaluation(a0, mp);
    const QLoopRep B = make_sl2_evaluation(cx(0.9, 0.31) * a0, mp);
    const QLoopRep S = direct_sum(A, B);
    CHECK(S.space.total_dim == 4);
    CHECK(S.space.weights.size() == 2);  // merged weight spaces, dims 2+2
    const auto rr = check_qloop_relations(S, plan50());
    CHECK(rr.pass());
    CHECK_THROWS_AS(qloop_highest_weight(S), not_highest_weight);
}

TEST_CASE("non-congruence") {
    const QLoopRep single = make_sl2_evaluation(a0, mp);
    CHECK(is_non_congruent(single, mp));

    const QLoopRep congruent = direct_sum(single, make_sl2_evaluation(mp.p * a0, mp));
    CHECK_FALSE(is_non_congruent(congruent, mp));

    const QLoopRep fine =
        direct_sum(single, make_sl2_evaluation(std::exp(iu * pi / 7.0) * a0, mp));
    CHECK(is_non_congruent(fine, mp));
}

TEST_CASE("root of unity guard") {
    // q = e^{pi i hbar} with hbar = 2/21: n hbar first hits the lattice at
    // n = 21 > n_max, so the params validate, but q^21 = 1.
    const ModularParams bad = ModularParams::make(cx(0.0, 0.8), cx(2.0 / 21.0, 0.0));
    CHECK_THROWS_AS(make_sl2_evaluation(a0, bad), invalid_params);
    CHECK_THROWS_AS(make_sl2_evaluation(cx(0.0), mp), invalid_params);
}
