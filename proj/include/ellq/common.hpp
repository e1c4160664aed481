#pragma once

#include <complex>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace ellq {

using cx  = std::complex<double>;
using Mat = Eigen::MatrixXcd;
using Vec = Eigen::VectorXcd;

inline constexpr double pi = 3.14159265358979323846;
inline constexpr cx     iu{0.0, 1.0};
inline constexpr cx     two_pi_i{0.0, 2.0 * pi};

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

struct invalid_params : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct invalid_cartan : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct invalid_input : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// A function was evaluated too close to one of its poles.
struct pole_hit : std::runtime_error {
    cx pole;
    explicit pole_hit(cx p, const std::string& what = "evaluation at a pole")
        : std::runtime_error(what), pole(p) {}
};

struct lattice_lambda : std::runtime_error {
    cx value;
    explicit lattice_lambda(cx v)
        : std::runtime_error("dynamical parameter pairing lies on the lattice"), value(v) {}
};

struct commutator_too_large : std::runtime_error {
    int a, b;
    double norm;
    commutator_too_large(int i, int j, double n)
        : std::runtime_error("family is not commuting"), a(i), b(j), norm(n) {}
};

struct not_highest_weight : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct form_mismatch : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct functor_undefined : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct unsupported_order : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct unsupported_cartan : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct sampling_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct inconsistent_data : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Deterministic sampling
// ---------------------------------------------------------------------------

/// Seeded generator with a portable uniform double, so that reports are
/// byte-identical across standard library implementations.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    double uniform() {  // in [0,1)
        return static_cast<double>(eng_() >> 11) * 0x1.0p-53;
    }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    cx     complex_box(double re_lo, double re_hi, double im_lo, double im_hi) {
        return {uniform(re_lo, re_hi), uniform(im_lo, im_hi)};
    }

private:
    std::mt19937_64 eng_;
};

// ---------------------------------------------------------------------------
// Norms and residuals
// ---------------------------------------------------------------------------

/// Max absolute entry; the norm used throughout the relation checkers.
inline double max_abs(const Mat& m) {
    return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

/// ||L - R|| / max(1, ||L||, ||R||)
inline double rel_residual(const Mat& lhs, const Mat& rhs) {
    return max_abs(lhs - rhs) / std::max({1.0, max_abs(lhs), max_abs(rhs)});
}

inline double rel_residual(cx lhs, cx rhs) {
    return std::abs(lhs - rhs) / std::max({1.0, std::abs(lhs), std::abs(rhs)});
}

inline bool is_finite(cx z) { return std::isfinite(z.real()) && std::isfinite(z.imag()); }

inline Mat identity(int n) { return Mat::Identity(n, n); }

}  // namespace ellq
