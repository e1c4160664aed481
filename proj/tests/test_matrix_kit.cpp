#include <catch2/catch_amalgamated.hpp>
#include <unsupported/Eigen/MatrixFunctions>

#include "ellq/matrix_kit.hpp"

using namespace ellq;

namespace {

Mat random_matrix(Rng& rng, int n) {
    Mat M(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) M(i, j) = rng.complex_box(-1, 1, -1, 1);
    return M;
}

}  // namespace

TEST_CASE("commuting_check") {
    const Mat I2 = Mat::Identity(2, 2);
    CHECK(commuting_check({I2, 2.0 * I2}, 1e-12).max_commutator == 0.0);

    Mat E12 = Mat::Zero(2, 2), E21 = Mat::Zero(2, 2);
    E12(0, 1) = 1.0;
    E21(1, 0) = 1.0;
    const auto r = commuting_check({E12, E21}, 1e-9);
    CHECK_FALSE(r.pass);
    CHECK(std::abs(r.max_commutator - 1.0) < 1e-14);
    CHECK(r.worst == std::pair<int, int>(0, 1));
}

TEST_CASE("joint_spectral_split basics") {
    SECTION("identity on dim 3") {
        const auto s = joint_spectral_split({Mat::Identity(3, 3)}, 1e-10);
        REQUIRE(s.blocks.size() == 1);
        CHECK(s.blocks[0].dim == 3);
        CHECK(std::abs(s.blocks[0].labels[0] - 1.0) < 1e-12);
    }
    SECTION("diagonal pair") {
        Mat A = Mat::Zero(2, 2), B = Mat::Zero(2, 2);
        A(0, 0) = 1.0;
        A(1, 1) = 2.0;
        B(0, 0) = B(1, 1) = 5.0;
        const auto s = joint_spectral_split({A, B}, 1e-10);
        REQUIRE(s.blocks.size() == 2);
        std::vector<cx> first{s.blocks[0].labels[0], s.blocks[1].labels[0]};
        std::sort(first.begin(), first.end(),
                  [](cx a, cx b) { return a.real() < b.real(); });
        CHECK(std::abs(first[0] - 1.0) < 1e-10);
        CHECK(std::abs(first[1] - 2.0) < 1e-10);
        CHECK(std::abs(s.blocks[0].labels[1] - 5.0) < 1e-10);
    }
    SECTION("non-commuting family is rejected") {
        Mat E12 = Mat::Zero(2, 2), E21 = Mat::Zero(2, 2);
        E12(0, 1) = 1.0;
        E21(1, 0) = 1.0;
        CHECK_THROWS_AS(joint_spectral_split({E12, E21}, 1e-9), commutator_too_large);
    }
}

TEST_CASE("joint split of p(M), q(M) agrees with the eigendecomposition of M") {
    Rng rng(21);
    for (int trial = 0; trial < 5; ++trial) {
        const int n = 4;
        const Mat M = random_matrix(rng, n);
        const Mat A = M * M + 2.0 * M;                 // p(M)
        const Mat B = M * M * M - 0.5 * Mat::Identity(n, n);  // q(M)
        const auto s = joint_spectral_split({A, B}, 1e-8);

        Eigen::ComplexEigenSolver<Mat> es(M);
        REQUIRE(s.blocks.size() == static_cast<size_t>(n));  // generic: all simple
        // Each eigenvector of M lies in the image of exactly one projector.
        for (int k = 0; k < n; ++k) {
            const Vec v   = es.eigenvectors().col(k);
            int       hit = 0;
            for (const auto& b : s.blocks)
                if ((b.projector * v - v).cwiseAbs().maxCoeff() < 1e-7) ++hit;
            CHECK(hit == 1);
        }
    }
}

TEST_CASE("projector invariants and basis independence") {
    Rng       rng(33);
    const int n = 4;
    const Mat M = random_matrix(rng, n);
    const Mat A = M * M + M;
    const auto s = joint_spectral_split({A}, 1e-8);

    Mat sum = Mat::Zero(n, n);
    for (const auto& b : s.blocks) {
        CHECK(max_abs(b.projector * b.projector - b.projector) < 1e-9);
        CHECK(max_abs(b.projector * A - A * b.projector) < 1e-8);
        sum += b.projector;
    }
    CHECK(max_abs(sum - Mat::Identity(n, n)) < 1e-9);
    for (size_t i = 0; i < s.blocks.size(); ++i)
        for (size_t j = i + 1; j < s.blocks.size(); ++j)
            CHECK(max_abs(s.blocks[i].projector * s.blocks[j].projector) < 1e-9);

    // Conjugating the input conjugates the projectors.
    const Mat S    = random_matrix(rng, n) + 3.0 * Mat::Identity(n, n);
    const Mat Sinv = S.fullPivLu().inverse();
    const auto s2  = joint_spectral_split({S * A * Sinv}, 1e-8);
    for (const auto& b : s.blocks) {
        const Mat P = S * b.projector * Sinv;
        double    best = 1e300;
        for (const auto& b2 : s2.blocks) best = std::min(best, max_abs(b2.projector - P));
        CHECK(best < 1e-6);
    }
}

TEST_CASE("unipotent_log") {
    SECTION("identity") { CHECK(max_abs(unipotent_log(Mat::Identity(3, 3), 1e-12)) == 0.0); }
    SECTION("I + E12") {
        Mat M = Mat::Identity(2, 2);
        M(0, 1) = 1.0;
        Mat want = Mat::Zero(2, 2);
        want(0, 1) = 1.0;
        CHECK(max_abs(unipotent_log(M, 1e-12) - want) < 1e-14);
    }
    SECTION("random unipotent 4x4 against the matrix exponential") {
        Rng rng(41);
        for (int trial = 0; trial < 5; ++trial) {
            Mat N = Mat::Zero(4, 4);
            for (int i = 0; i < 4; ++i)
                for (int j = i + 1; j < 4; ++j) N(i, j) = rng.complex_box(-1, 1, -1, 1);
            const Mat M = Mat::Identity(4, 4) + N;
            const Mat L = unipotent_log(M, 1e-10);
            CHECK(max_abs(Mat(L.exp()) - M) < 1e-12);
        }
    }
    SECTION("non-unipotent input is rejected") {
        CHECK_THROWS_AS(unipotent_log(2.0 * Mat::Identity(2, 2), 1e-10), invalid_input);
    }
}

TEST_CASE("semisimple-unipotent splitting") {
    // Phi = scalar * unipotent on each block.
    Mat Phi = Mat::Zero(4, 4);
    Phi.block(0, 0, 2, 2) << cx(2.0), cx(0.3), cx(0.0), cx(2.0);
    Phi.block(2, 2, 2, 2) << cx(-1.0, 1.0), cx(0.0), cx(0.0), cx(-1.0, 1.0);
    const auto split = joint_spectral_split({Phi}, 1e-9);
    const auto [S, U] = semisimple_unipotent_split(Phi, split);
    CHECK(max_abs(S * U - Phi) < 1e-10);
    Mat P = U - Mat::Identity(4, 4);
    CHECK(max_abs(Mat(P * P * P * P)) < 1e-10);  // unipotent
    CHECK(max_abs(S * U - U * S) < 1e-10);
}

TEST_CASE("weight graded space bookkeeping") {
    Weight w1 = Weight::zero(1), w2 = Weight::zero(1);
    w1.coords[0] = 0.5;
    w2.coords[0] = -0.5;
    const auto sp = WeightGradedSpace::make({w1, w2}, {2, 1});
    CHECK(sp.total_dim == 3);
    CHECK(sp.offsets == std::vector<int>({0, 2}));
    CHECK(sp.find_weight(w2) == 1);
    Weight other = Weight::zero(1);
    other.coords[0] = 0.25;
    CHECK(sp.find_weight(other) == -1);

    Vec hv(1);
    hv[0] = cx(2.0);
    const Mat H = sp.h_action(hv);
    CHECK(std::abs(H(0, 0) - 1.0) < 1e-14);
    CHECK(std::abs(H(2, 2) + 1.0) < 1e-14);
}
