#pragma once

#include <algorithm>
#include <utility>
#include <vector>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "ellq/cartan.hpp"
#include "ellq/common.hpp"

namespace ellq {

// ---------------------------------------------------------------------------
// Weight-graded spaces
// ---------------------------------------------------------------------------

/// Finitely many weights, each with a finite-dimensional space; the basis of
/// the total space is grouped block-by-block in weight order.
struct WeightGradedSpace {
    std::vector<Weight> weights;
    std::vector<int>    dims;
    std::vector<int>    offsets;
    int                 total_dim = 0;

    static WeightGradedSpace make(std::vector<Weight> ws, std::vector<int> ds) {
        WeightGradedSpace s;
        s.weights = std::move(ws);
        s.dims    = std::move(ds);
        s.offsets.resize(s.dims.size());
        int off = 0;
        for (size_t i = 0; i < s.dims.size(); ++i) {
            s.offsets[i] = off;
            off += s.dims[i];
        }
        s.total_dim = off;
        return s;
    }

    int find_weight(const Weight& w, double tol = 1e-8) const {
        for (size_t i = 0; i < weights.size(); ++i)
            if ((weights[i].coords - w.coords).cwiseAbs().maxCoeff() < tol)
                return static_cast<int>(i);
        return -1;
    }

    /// Block of M mapping weight space `from` into weight space `to`.
    Mat block(const Mat& M, int to, int from) const {
        return M.block(offsets[to], offsets[from], dims[to], dims[from]);
    }

    /// Action of h on the total space, with h described by its values
    /// r_i = alpha_i(h); a weight mu = sum l_i alpha_i acts by sum l_i r_i.
    Mat h_action(const Vec& alpha_values) const {
        Mat H = Mat::Zero(total_dim, total_dim);
        for (size_t b = 0; b < weights.size(); ++b) {
            const cx v = (weights[b].coords.transpose() * alpha_values)(0, 0);
            for (int k = 0; k < dims[b]; ++k) H(offsets[b] + k, offsets[b] + k) = v;
        }
        return H;
    }
};

// ---------------------------------------------------------------------------
// Commuting checks
// ---------------------------------------------------------------------------

struct CommutingReport {
    double              max_commutator = 0.0;
    std::pair<int, int> worst{-1, -1};
    bool                pass = true;
};

inline CommutingReport commuting_check(const std::vector<Mat>& family, double tol) {
    CommutingReport r;
    double          scale = 1.0;
    for (const auto& m : family) scale = std::max(scale, max_abs(m));
    for (size_t i = 0; i < family.size(); ++i)
        for (size_t j = i + 1; j < family.size(); ++j) {
            const double c = max_abs(family[i] * family[j] - family[j] * family[i]) / scale;
            if (c > r.max_commutator) {
                r.max_commutator = c;
                r.worst          = {static_cast<int>(i), static_cast<int>(j)};
            }
        }
    r.pass = r.max_commutator < tol;
    return r;
}

// ---------------------------------------------------------------------------
// Joint generalized eigenspace decomposition of a commuting family
// ---------------------------------------------------------------------------

struct JointSpectralSplit {
    struct Block {
        Mat             basis;      // total_dim x block_dim, columns span the block
        Mat             projector;  // total_dim x total_dim
        std::vector<cx> labels;     // one generalized eigenvalue per family member
        int             dim = 0;
    };
    std::vector<Block> blocks;
    Mat                change_of_basis;  // columns: block bases in order
};

namespace detail {

/// Basis of the generalized eigenspace of M for the eigenvalue cluster
/// centered at lam with multiplicity m: the m smallest right singular
/// vectors of ((M - lam)/scale)^m.
inline Mat generalized_eigenspace(const Mat& M, cx lam, int mult) {
    const int n = static_cast<int>(M.rows());
    Mat       N = M - lam * Mat::Identity(n, n);
    double    s = std::max(1.0, max_abs(N));
    N /= s;
    Mat P = Mat::Identity(n, n);
    for (int k = 0; k < mult; ++k) P = P * N;
    Eigen::JacobiSVD<Mat> svd(P, Eigen::ComputeFullV);
    return svd.matrixV().rightCols(mult);
}

}  // namespace detail

/// Simultaneous generalized-eigenspace decomposition. Eigenvalues within
/// 1e-7 * scale are merged into one cluster (functor-built operators carry
/// ~1e-9 truncation noise).
inline JointSpectralSplit joint_spectral_split(const std::vector<Mat>& family, double tol) {
    if (family.empty()) throw invalid_input("joint_spectral_split: empty family");
    const int n = static_cast<int>(family.front().rows());

    const auto comm = commuting_check(family, tol);
    if (!comm.pass) throw commutator_too_large(comm.worst.first, comm.worst.second,
                                               comm.max_commutator);

    double scale = 1.0;
    for (const auto& m : family) scale = std::max(scale, max_abs(m));
    const double cluster_tol = 1e-7 * scale;

    // Refine a list of invariant subspaces by each family member in turn.
    std::vector<Mat> bases{Mat::Identity(n, n)};
    for (const auto& M : family) {
        std::vector<Mat> next;
        for (const auto& X : bases) {
            const int k = static_cast<int>(X.cols());
            // Restriction of M to the invariant subspace spanned by X.
            const Mat Mb = (X.adjoint() * X).ldlt().solve(X.adjoint() * (M * X));
            Eigen::ComplexEigenSolver<Mat> es(Mb, /*computeEigenvectors=*/false);
            std::vector<cx> evs(es.eigenvalues().data(), es.eigenvalues().data() + k);
            std::sort(evs.begin(), evs.end(), [](cx a, cx b) {
                return a.real() != b.real() ? a.real() < b.real() : a.imag() < b.imag();
            });
            std::vector<std::pair<cx, int>> clusters;
            for (const cx& e : evs) {
                bool merged = false;
                for (auto& c : clusters)
                    if (std::abs(e - c.first) < cluster_tol) {
                        c.first = (c.first * static_cast<double>(c.second) + e) /
                                  static_cast<double>(c.second + 1);
                        ++c.second;
                        merged = true;
                        break;
                    }
                if (!merged) clusters.emplace_back(e, 1);
            }
            if (clusters.size() == 1) {
                next.push_back(X);
                continue;
            }
            for (const auto& c : clusters)
                next.push_back(X * detail::generalized_eigenspace(Mb, c.first, c.second));
        }
        bases = std::move(next);
    }

    JointSpectralSplit out;
    out.change_of_basis.resize(n, n);
    int col = 0;
    for (const auto& X : bases) {
        JointSpectralSplit::Block b;
        b.basis = X;
        b.dim   = static_cast<int>(X.cols());
        out.change_of_basis.block(0, col, n, b.dim) = X;
        col += b.dim;
        out.blocks.push_back(std::move(b));
    }
    const Mat Sinv = out.change_of_basis.fullPivLu().inverse();
    col            = 0;
    for (auto& b : out.blocks) {
        Mat E = Mat::Zero(n, n);
        for (int k = 0; k < b.dim; ++k) E(col + k, col + k) = 1.0;
        b.projector = out.change_of_basis * E * Sinv;
        // Labels: mean eigenvalue of each family member on the block.
        for (const auto& M : family) {
            const Mat Mb = (b.basis.adjoint() * b.basis)
                               .ldlt()
                               .solve(b.basis.adjoint() * (M * b.basis));
            b.labels.push_back(Mb.trace() / static_cast<double>(b.dim));
        }
        col += b.dim;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Unipotent logarithm
// ---------------------------------------------------------------------------

/// Terminating Mercator series log(I + N) = sum (-1)^{k+1} N^k / k for
/// nilpotent N = M - I.
inline Mat unipotent_log(const Mat& M, double tol) {
    const int n = static_cast<int>(M.rows());
    const Mat N = M - Mat::Identity(n, n);
    Mat       P = N;
    for (int k = 1; k < n; ++k) P = P * N;
    const double scale = std::max(1.0, max_abs(M));
    if (max_abs(P) > tol * scale)
        throw invalid_input("unipotent_log: (M - I)^dim has norm " + std::to_string(max_abs(P)));
    Mat out = Mat::Zero(n, n);
    Mat Nk  = Mat::Identity(n, n);
    for (int k = 1; k <= n; ++k) {
        Nk = Nk * N;
        out += ((k % 2 == 1) ? 1.0 : -1.0) / static_cast<double>(k) * Nk;
    }
    return out;
}

/// Semisimple/unipotent splitting of a single sample of a commuting family:
/// Phi_S = sum lambda_block P_block, Phi_U = Phi_S^{-1} Phi.
inline std::pair<Mat, Mat> semisimple_unipotent_split(const Mat& M,
                                                      const JointSpectralSplit& split,
                                                      int label_index = -1) {
    const int n = static_cast<int>(M.rows());
    Mat       S = Mat::Zero(n, n);
    for (const auto& b : split.blocks) {
        const Mat Mb = (b.basis.adjoint() * b.basis).ldlt().solve(b.basis.adjoint() * (M * b.basis));
        cx        lam;
        if (label_index >= 0)
            lam = b.labels[label_index];
        else
            lam = Mb.trace() / static_cast<double>(b.dim);
        S += lam * b.projector;
    }
    const Mat U = S.fullPivLu().solve(M);
    return {S, U};
}

}  // namespace ellq
