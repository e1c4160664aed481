#include <catch2/catch_amalgamated.hpp>

#include "ellq/theta.hpp"
#include "oracle.hpp"

using namespace ellq;

namespace {
const ModularParams mp = ModularParams::make(cx(0.0, 0.8), cx(0.31, 0.17));
}

TEST_CASE("theta vanishes exactly on the lattice") {
    CHECK(std::abs(theta(cx(0.0), mp)) < 1e-14);
    CHECK(std::abs(theta(cx(1.0), mp)) < 1e-13);
    CHECK(std::abs(theta(mp.tau, mp)) < 1e-13);
    CHECK(std::abs(theta(3.0 + 2.0 * mp.tau, mp)) < 1e-12);
}

TEST_CASE("theta'(0) = 1") {
    const cx d = (theta(cx(1e-6), mp) - theta(cx(-1e-6), mp)) / 2e-6;
    CHECK(std::abs(d - 1.0) < 1e-6);
}

TEST_CASE("theta matches the extended-precision product oracle") {
    const cx u = cx(0.3, 0.2);
    const cx want = oracle::theta_highprec(u, mp.tau);
    CHECK(std::abs(theta(u, mp) - want) < 1e-12);

    // Frozen oracle value, so drift in either path is caught.
    const cx frozen(0.31405065619097511, 0.13448342649396378);
    CHECK(std::abs(want - frozen) < 1e-15);

    Rng rng(3);
    for (int s = 0; s < 25; ++s) {
        const cx x = rng.complex_box(-1.5, 1.5, -1.0, 2.2);
        CHECK(std::abs(theta(x, mp) - oracle::theta_highprec(x, mp.tau)) <
              1e-12 * std::max(1.0, std::abs(theta(x, mp))));
    }
}

TEST_CASE("quasi-periodicity, oddness, splitting identity over 200 samples") {
    Rng    rng(7);
    double qp = 0.0, odd = 0.0, split = 0.0;
    for (int s = 0; s < 200; ++s) {
        const cx u = rng.complex_box(-0.5, 0.5, 0.0, mp.tau.imag());
        const cx t = theta(u, mp);
        const double scale = std::max(1.0, std::abs(t));
        qp  = std::max(qp, std::abs(theta(u + 1.0, mp) + t) / scale);
        qp  = std::max(qp, std::abs(theta(u + mp.tau, mp) +
                                    std::exp(-iu * pi * mp.tau) * std::exp(-two_pi_i * u) * t) /
                               scale);
        odd = std::max(odd, std::abs(theta(-u, mp) + t) / scale);
        const cx sp = std::sin(pi * u) * theta_plus(u, mp) * theta_minus(u, mp) /
                      (pi * std::pow(theta_plus(cx(0.0), mp), 2.0));
        split = std::max(split, std::abs(t - sp) / scale);
    }
    CHECK(qp < 1e-10);
    CHECK(odd < 1e-12);
    CHECK(split < 1e-10);
}

TEST_CASE("splitting without the 1/pi normalization is off by exactly pi") {
    // The sin * theta^+ theta^- / theta^+(0)^2 form reproduces pi * theta(u)
    // when theta'(0) = 1; this pins the normalization convention.
    const cx u  = cx(0.31, 0.17);
    const cx sp = std::sin(pi * u) * theta_plus(u, mp) * theta_minus(u, mp) /
                  std::pow(theta_plus(cx(0.0), mp), 2.0);
    CHECK(std::abs(sp / theta(u, mp) - pi) < 1e-12);
}

TEST_CASE("Fay trisecant identity") {
    SECTION("degenerate c = d") {
        CHECK(fay_residual(cx(0.3, 0.1), cx(-0.2, 0.4), cx(0.11, 0.21), cx(0.11, 0.21), mp) <
              1e-13);
    }
    SECTION("degenerate a = b") {
        CHECK(fay_residual(cx(0.41, -0.13), cx(0.41, -0.13), cx(0.2, 0.3), cx(-0.1, 0.22), mp) <
              1e-12);
    }
    SECTION("100 random quadruples") {
        Rng    rng(11);
        double worst = 0.0;
        for (int s = 0; s < 100; ++s)
            worst = std::max(worst, fay_residual(rng.complex_box(-0.5, 0.5, 0, 0.8),
                                                 rng.complex_box(-0.5, 0.5, 0, 0.8),
                                                 rng.complex_box(-0.5, 0.5, 0, 0.8),
                                                 rng.complex_box(-0.5, 0.5, 0, 0.8), mp));
        CHECK(worst < 1e-10);
    }
}

TEST_CASE("theta quotient evaluation") {
    SECTION("zero/pole cancellation") {
        ThetaQuotient tq;
        tq.zeros = {cx(0.2, 0.1)};
        tq.poles = {cx(0.2, 0.1)};
        CHECK(std::abs(tq.eval(cx(0.7, 0.3), mp) - 1.0) < 1e-13);
    }
    SECTION("quasi-periodicity factor e^{-2 pi i hbar}") {
        ThetaQuotient tq;
        const cx b = cx(0.21, 0.35);
        tq.zeros   = {b - mp.hbar};
        tq.poles   = {b};
        const cx u = cx(0.55, 0.12);
        const cx r = tq.eval(u + mp.tau, mp) / tq.eval(u, mp);
        CHECK(std::abs(r - std::exp(-two_pi_i * mp.hbar)) < 1e-12);
    }
    SECTION("factor-by-factor oracle, 2 zeros / 2 poles") {
        Rng rng(5);
        for (int s = 0; s < 10; ++s) {
            ThetaQuotient tq;
            tq.constant = rng.complex_box(0.5, 1.5, -0.5, 0.5);
            for (int k = 0; k < 2; ++k) {
                tq.zeros.push_back(rng.complex_box(-0.4, 0.4, 0.05, 0.7));
                tq.poles.push_back(rng.complex_box(-0.4, 0.4, 0.05, 0.7));
            }
            const cx u    = rng.complex_box(-0.4, 0.4, 0.05, 0.7);
            cx       want = tq.constant;
            for (const cx& a : tq.zeros) want *= theta(u - a, mp);
            for (const cx& b : tq.poles) want /= theta(u - b, mp);
            CHECK(std::abs(tq.eval(u, mp) - want) < 1e-12 * std::max(1.0, std::abs(want)));
        }
    }
    SECTION("pole hit carries the offending pole") {
        ThetaQuotient tq;
        tq.zeros = {cx(0.4, 0.2)};
        tq.poles = {cx(0.1, 0.3)};
        CHECK_THROWS_AS(tq.eval(cx(0.1, 0.3) + 1.0 + mp.tau, mp), pole_hit);
    }
}

TEST_CASE("dynamical kernel") {
    const cx lam = cx(0.27, 0.08);
    SECTION("simple pole with unit residue at x = 0") {
        const cx x = cx(1e-5, 0.0);
        CHECK(std::abs(x * kernel_eval(x, lam, 0, mp) - 1.0) < 1e-3);
        const cx x2 = cx(1e-7, 0.0);
        CHECK(std::abs(x2 * kernel_eval(x2, lam, 0, mp) - 1.0) < 1e-5);
    }
    SECTION("1-periodicity in x") {
        const cx x = cx(0.23, 0.31);
        CHECK(std::abs(kernel_eval(x + 1.0, lam, 0, mp) - kernel_eval(x, lam, 0, mp)) < 1e-12);
    }
    SECTION("order 1 matches central finite differences") {
        const cx x  = cx(0.37, 0.21);
        const cx fd = -oracle::central_diff(
            [&](cx xx) { return kernel_eval(xx, lam, 0, mp); }, x, 1e-5);
        const cx got = kernel_eval(x, lam, 1, mp);
        CHECK(std::abs(got - fd) < 1e-6 * std::max(1.0, std::abs(got)));
    }
    SECTION("order 2 matches finite differences of order 1") {
        const cx x  = cx(0.37, 0.21);
        const cx fd = -oracle::central_diff(
                          [&](cx xx) { return kernel_eval(xx, lam, 1, mp); }, x, 1e-5) /
                      2.0;
        const cx got = kernel_eval(x, lam, 2, mp);
        CHECK(std::abs(got - fd) < 1e-5 * std::max(1.0, std::abs(got)));
    }
    SECTION("lattice arguments are rejected") {
        CHECK_THROWS_AS(kernel_eval(cx(0.0), lam, 0, mp), pole_hit);
        CHECK_THROWS_AS(kernel_eval(cx(0.3, 0.2), cx(1.0, 0.0) + mp.tau, 0, mp),
                        lattice_lambda);
        CHECK_THROWS_AS(kernel_eval(cx(0.3, 0.2), lam, 7, mp), unsupported_order);
    }
}

TEST_CASE("quasi-periodic partial fractions") {
    SECTION("single simple pole equals the kernel") {
        const cx a = cx(0.31, 0.17), b = cx(0.4, 0.33);
        const auto e = quasi_periodic_expand({{b, 0, cx(1.0)}}, a, mp);
        const cx   u = cx(0.11, 0.52);
        CHECK(std::abs(e.eval(u, mp) - kernel_eval(u - b, a, 0, mp)) < 1e-14);
    }
    SECTION("log-derivative of theta: one term, zero constant") {
        // f = theta'/theta has residue 1 at the lattice; a = 0.
        const auto e = quasi_periodic_expand({{cx(0.0), 0, cx(1.0)}}, cx(0.0), mp,
                                             {{cx(0.41, 0.23), theta_log_deriv(cx(0.41, 0.23), mp)}});
        CHECK(std::abs(e.constant) < 1e-11);
        Rng rng(13);
        for (int s = 0; s < 10; ++s) {
            const cx u = rng.complex_box(0.05, 0.95, 0.08, 0.72);
            CHECK(std::abs(e.eval(u, mp) - theta_log_deriv(u, mp)) <
                  1e-11 * std::max(1.0, std::abs(theta_log_deriv(u, mp))));
        }
    }
    SECTION("theta quotient: residue from quadrature, reconstruction to 1e-11") {
        const cx      b = cx(0.24, 0.4);
        ThetaQuotient tq;
        tq.zeros = {b - mp.hbar};
        tq.poles = {b};
        const cx res = oracle::residue_quadrature(
            [&](cx u) { return tq.eval(u, mp); }, b, 0.02);
        CHECK(std::abs(res - theta(mp.hbar, mp)) < 1e-11);

        const auto e = quasi_periodic_expand({{b, 0, res}}, mp.hbar, mp);
        Rng        rng(17);
        for (int s = 0; s < 10; ++s) {
            const cx u = rng.complex_box(0.0, 1.0, 0.05, 0.75);
            if (lattice_distance(u - b, mp.tau) < 0.05) continue;
            CHECK(std::abs(e.eval(u, mp) - tq.eval(u, mp)) <
                  1e-11 * std::max(1.0, std::abs(tq.eval(u, mp))));
        }
    }
    SECTION("congruent poles are rejected") {
        CHECK_THROWS_AS(
            quasi_periodic_expand({{cx(0.2, 0.1), 0, cx(1.0)}, {cx(1.2, 0.1), 0, cx(2.0)}},
                                  cx(0.3, 0.0), mp),
            invalid_input);
    }
    SECTION("expand after extracting principal parts is the identity") {
        Rng rng(19);
        for (int trial = 0; trial < 4; ++trial) {
            ThetaQuotient tq;
            const cx b1 = rng.complex_box(0.05, 0.45, 0.1, 0.3);
            const cx b2 = rng.complex_box(0.55, 0.95, 0.4, 0.7);
            tq.zeros    = {b1 - mp.hbar, b2 - mp.hbar};
            tq.poles    = {b1, b2};
            const cx r1 = oracle::residue_quadrature([&](cx u) { return tq.eval(u, mp); }, b1, 0.02);
            const cx r2 = oracle::residue_quadrature([&](cx u) { return tq.eval(u, mp); }, b2, 0.02);
            const auto e = quasi_periodic_expand({{b1, 0, r1}, {b2, 0, r2}}, 2.0 * mp.hbar, mp);
            for (int s = 0; s < 50; ++s) {
                const cx u = rng.complex_box(0.0, 1.0, 0.0, 0.8);
                if (lattice_distance(u - b1, mp.tau) < 0.05 ||
                    lattice_distance(u - b2, mp.tau) < 0.05)
                    continue;
                const cx want = tq.eval(u, mp);
                CHECK(std::abs(e.eval(u, mp) - want) < 1e-10 * std::max(1.0, std::abs(want)));
            }
        }
    }
}

TEST_CASE("parameter validation") {
    CHECK_THROWS_AS(ModularParams::make(cx(0.0, -0.5), cx(0.31, 0.17)), invalid_params);
    CHECK_THROWS_AS(ModularParams::make(cx(0.0, 0.8), cx(0.5, 0.0)), invalid_params);  // 2h = 1
    CHECK_THROWS_AS(ModularParams::make(cx(0.0, 0.8), cx(0.31, 0.17), 1), invalid_params);
    CHECK_THROWS_AS(theta(cx(std::nan(""), 0.0), mp), invalid_input);
}
