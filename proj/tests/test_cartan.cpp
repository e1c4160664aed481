#include <catch2/catch_amalgamated.hpp>

#include "ellq/cartan.hpp"
#include "oracle.hpp"

using namespace ellq;

TEST_CASE("symmetrizers") {
    SECTION("rank 1") {
        Eigen::MatrixXi A(1, 1);
        A << 2;
        CHECK(validate_cartan(A).d == std::vector<long>{1});
    }
    SECTION("sl3") {
        const CartanDatum cd = cartan_sl3();
        CHECK(cd.d == std::vector<long>({1, 1}));
        CHECK(cd.nondegenerate);
    }
    SECTION("B2-type, brute-force oracle") {
        Eigen::MatrixXi A(2, 2);
        A << 2, -2, -1, 2;
        const CartanDatum cd = validate_cartan(A);
        CHECK(cd.d == std::vector<long>({1, 2}));
        CHECK(cd.d == oracle::brute_force_symmetrizers(A));
    }
    SECTION("random symmetrizable matrices agree with brute force") {
        Rng rng(5);
        for (int trial = 0; trial < 20; ++trial) {
            Eigen::MatrixXi A(2, 2);
            const int a = 1 + static_cast<int>(rng.uniform() * 3);
            const int b = 1 + static_cast<int>(rng.uniform() * 3);
            A << 2, -a, -b, 2;
            CHECK(validate_cartan(A).d == oracle::brute_force_symmetrizers(A));
        }
    }
}

TEST_CASE("invalid Cartan matrices") {
    Eigen::MatrixXi bad_diag(1, 1);
    bad_diag << 3;
    CHECK_THROWS_AS(validate_cartan(bad_diag), invalid_cartan);

    Eigen::MatrixXi pos_off(2, 2);
    pos_off << 2, 1, 1, 2;
    CHECK_THROWS_AS(validate_cartan(pos_off), invalid_cartan);

    Eigen::MatrixXi asym_zero(2, 2);
    asym_zero << 2, -1, 0, 2;
    CHECK_THROWS_AS(validate_cartan(asym_zero), invalid_cartan);
}

TEST_CASE("pairings") {
    const CartanDatum sl3 = cartan_sl3();
    SECTION("(alpha_i, alpha_i) = 2 d_i") {
        for (int i = 0; i < 2; ++i)
            CHECK(std::abs(sl3.pair_alpha(sl3.alpha(i), i) - 2.0 * sl3.d[i]) < 1e-14);
    }
    SECTION("(alpha_1, alpha_2) = -1 for sl3") {
        CHECK(std::abs(sl3.pair_alpha(sl3.alpha(0), 1) - cx(-1.0)) < 1e-14);
    }
    SECTION("fundamental coweight duality in sl2") {
        const CartanDatum sl2 = cartan_sl2();
        const Weight      w1  = sl2.weight_from_coweight_values({cx(1.0)});
        CHECK(std::abs(sl2.coweight_value(w1, 0) - 1.0) < 1e-14);
        CHECK(std::abs(sl2.fund_coweight_value(sl2.alpha(0), 0) - 1.0) < 1e-14);
    }
    SECTION("symmetry of the form") {
        Rng rng(9);
        for (int t = 0; t < 10; ++t) {
            Weight a = Weight::zero(2), b = Weight::zero(2);
            for (int k = 0; k < 2; ++k) {
                a.coords[k] = rng.complex_box(-2, 2, -2, 2);
                b.coords[k] = rng.complex_box(-2, 2, -2, 2);
            }
            CHECK(std::abs(sl3.pair(a, b) - sl3.pair(b, a)) < 1e-12);
            for (int i = 0; i < 2; ++i)
                CHECK(std::abs(sl3.coweight_value(a, i) -
                               sl3.pair_alpha(a, i) / static_cast<double>(sl3.d[i])) < 1e-13);
        }
    }
}

TEST_CASE("degenerate Cartan matrices are typed but coweights refuse") {
    Eigen::MatrixXi A(2, 2);
    A << 2, -2, -2, 2;  // affine A1
    const CartanDatum cd = validate_cartan(A);
    CHECK(cd.d == std::vector<long>({1, 1}));
    CHECK_FALSE(cd.nondegenerate);
    CHECK_THROWS_AS(cd.fund_coweight_value(cd.alpha(0), 0), unsupported_cartan);
    CHECK_THROWS_AS(cd.weight_from_coweight_values({cx(1.0), cx(0.0)}), unsupported_cartan);
}

TEST_CASE("lattice membership predicates") {
    const CartanDatum sl2 = cartan_sl2();
    Weight            g   = Weight::zero(1);
    g.coords[0]           = 0.5;  // (g, alpha) = 1
    CHECK(sl2.in_pbar_vee(g));
    CHECK(!sl2.in_pbar_vee(g.scaled(0.7)));
    CHECK(sl2.in_weight_lattice(g));

    const CartanDatum sl3 = cartan_sl3();
    Weight            h   = Weight::zero(2);
    h.coords[0] = 2.0 / 3.0;
    h.coords[1] = 1.0 / 3.0;  // fundamental weight: (h, alpha_1) = 1, (h, alpha_2) = 0
    CHECK(sl3.in_pbar_vee(h));
}
