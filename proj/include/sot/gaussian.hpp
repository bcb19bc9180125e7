#pragma once

#include "sot/common.hpp"
#include "sot/schatten.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>

namespace sot {

namespace detail {

inline void check_spd(const Matrix& sigma, const char* name) {
    if (sigma.rows() != sigma.cols())
        throw ShapeError(std::string(name) + ": covariance must be square");
    if ((sigma - sigma.transpose()).cwiseAbs().maxCoeff() > 1e-10)
        throw ArgumentError(std::string(name) + ": covariance must be symmetric");
    Eigen::SelfAdjointEigenSolver<Matrix> es(sigma);
    if (es.eigenvalues().minCoeff() <= 0)
        throw ArgumentError(std::string(name) + ": covariance must be positive definite");
}

inline Matrix spd_power(const Matrix& sigma, double power) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(sigma);
    return es.eigenvectors() *
           es.eigenvalues().array().pow(power).matrix().asDiagonal() *
           es.eigenvectors().transpose();
}

} // namespace detail

/// A pair of mean-zero Gaussians N(0, Sigma0), N(0, Sigma1).
struct GaussianPair {
    Matrix sigma0, sigma1;

    GaussianPair(Matrix s0, Matrix s1) : sigma0(std::move(s0)), sigma1(std::move(s1)) {
        detail::check_spd(sigma0, "GaussianPair");
        detail::check_spd(sigma1, "GaussianPair");
        if (sigma0.rows() != sigma1.rows())
            throw ShapeError("GaussianPair: dimension mismatch");
    }

    Eigen::Index dim() const { return sigma0.rows(); }

    bool commuting(double rel_tol = 1e-8) const {
        const double comm = (sigma0 * sigma1 - sigma1 * sigma0).norm();
        return comm <= rel_tol * sigma0.norm() * sigma1.norm();
    }
};

/// Feasibility of a cross-covariance K for the joint Gaussian: the block
/// covariance [Sigma0 K; K^T Sigma1] is PSD iff
/// |Sigma0^{-1/2} K Sigma1^{-1/2}|_2 <= 1.
inline bool gaussian_feasible(const GaussianPair& pair, const Matrix& k) {
    if (k.rows() != pair.dim() || k.cols() != pair.dim())
        throw ShapeError("gaussian_feasible: K must be d x d");
    const Matrix whitened = detail::spd_power(pair.sigma0, -0.5) * k *
                            detail::spd_power(pair.sigma1, -0.5);
    return schatten_norm(whitened, std::numeric_limits<double>::infinity()) <= 1.0 + 1e-9;
}

struct CrossCovSolution {
    Matrix k_lambda;
    int rank = 0;
    Vector sigma;      // singular values of S = Sigma1^{1/2} Sigma0^{1/2}
    Vector selectors;  // s_i* in {0,1}
};

/// Closed-form nuclear-penalized cross-covariance: hard thresholding of
/// the singular spectrum of S = Sigma1^{1/2} Sigma0^{1/2} at lambda/2.
/// Ties sigma_i = lambda/2 resolve to exclusion.
inline CrossCovSolution gaussian_cross_cov_solution(const GaussianPair& pair, double lambda) {
    require(lambda >= 0, "gaussian_cross_cov_solution: lambda must be nonnegative");
    const Matrix s0_half = detail::spd_power(pair.sigma0, 0.5);
    const Matrix s1_half = detail::spd_power(pair.sigma1, 0.5);
    const SvdFactors f = thin_svd(s1_half * s0_half);

    CrossCovSolution sol;
    sol.sigma = f.singular_values;
    sol.selectors = Vector::Zero(pair.dim());
    for (Eigen::Index i = 0; i < pair.dim(); ++i)
        if (f.singular_values[i] > lambda / 2.0) {
            sol.selectors[i] = 1.0;
            ++sol.rank;
        }
    sol.k_lambda = s0_half * f.u * sol.selectors.asDiagonal() * f.v.transpose() * s1_half;
    return sol;
}

/// Transport objective of the cross-covariance program, with the nuclear
/// penalty applied to the whitened factor M = Sigma0^{-1/2} K Sigma1^{-1/2}
/// (the parametrization under which the hard-thresholding solution is the
/// global minimizer).
inline double gaussian_cross_cov_objective(const GaussianPair& pair, const Matrix& k,
                                           double lambda) {
    const Matrix whitened = detail::spd_power(pair.sigma0, -0.5) * k *
                            detail::spd_power(pair.sigma1, -0.5);
    return pair.sigma0.trace() + pair.sigma1.trace() - 2.0 * k.trace() +
           lambda * schatten_norm(whitened, 1.0);
}

/// Joint eigenbasis of a commuting pair. Eigenvalue clusters of Sigma0
/// are handled by projecting Sigma1 into each eigenspace and
/// diagonalizing there.
struct JointEigen {
    Matrix basis; // orthogonal U
    Vector a;     // eigenvalues of Sigma0
    Vector b;     // eigenvalues of Sigma1
};

inline JointEigen joint_eigenbasis(const GaussianPair& pair) {
    if (!pair.commuting())
        throw ArgumentError("joint_eigenbasis: covariances do not commute");
    const Eigen::Index d = pair.dim();
    Eigen::SelfAdjointEigenSolver<Matrix> es0(pair.sigma0);
    const Vector eval0 = es0.eigenvalues();
    const Matrix evec0 = es0.eigenvectors();

    JointEigen out;
    out.basis = Matrix(d, d);
    out.a = Vector(d);
    out.b = Vector(d);

    const double cluster_tol = 1e-9 * (1.0 + std::abs(eval0[d - 1]));
    Eigen::Index start = 0;
    Eigen::Index written = 0;
    while (start < d) {
        Eigen::Index stop = start + 1;
        while (stop < d && eval0[stop] - eval0[stop - 1] <= cluster_tol) ++stop;
        const Eigen::Index w = stop - start;
        const Matrix block = evec0.middleCols(start, w);
        // Diagonalize Sigma1 restricted to this eigenspace of Sigma0.
        Eigen::SelfAdjointEigenSolver<Matrix> es1(block.transpose() * pair.sigma1 * block);
        const Matrix rotated = block * es1.eigenvectors();
        for (Eigen::Index c = 0; c < w; ++c) {
            out.basis.col(written) = rotated.col(c);
            out.a[written] = eval0[start + c];
            out.b[written] = es1.eigenvalues()[c];
            ++written;
        }
        start = stop;
    }
    return out;
}

struct DisplacementSolution {
    Matrix a_lambda;       // barycentric map A_lambda = U diag(alpha*) U^T
    int rank_deviation = 0; // rank of A_lambda - I
    Vector alpha;           // per-direction map coefficients
    Vector m_star;          // per-direction minimizers of the scalar problem
    JointEigen basis;
};

/// Scalar displacement objective phi(m) = -2 sqrt(ab) m + lambda |m sqrt(b) - sqrt(a)|
/// on [0, 1]; the separable piece of the commuting displacement program.
inline double displacement_scalar_objective(double a, double b, double lambda, double m) {
    return -2.0 * std::sqrt(a * b) * m + lambda * std::abs(m * std::sqrt(b) - std::sqrt(a));
}

/// Closed-form minimizer of the scalar displacement problem.
inline double displacement_scalar_minimizer(double a, double b, double lambda) {
    if (b <= a) return 1.0;
    if (lambda < 2.0 * std::sqrt(a)) return 1.0;
    return std::sqrt(a / b);
}

/// Commuting-case nuclear-penalized barycentric displacement: contractions
/// are kept, expansions are pruned back to the identity once lambda
/// crosses 2 sqrt(a_i).
inline DisplacementSolution gaussian_displacement_solution(const GaussianPair& pair,
                                                           double lambda) {
    require(lambda >= 0, "gaussian_displacement_solution: lambda must be nonnegative");
    if (!pair.commuting())
        throw ArgumentError(
            "gaussian_displacement_solution: non-commuting covariances are unsupported");

    DisplacementSolution sol;
    sol.basis = joint_eigenbasis(pair);
    const Eigen::Index d = pair.dim();
    sol.alpha = Vector(d);
    sol.m_star = Vector(d);
    for (Eigen::Index i = 0; i < d; ++i) {
        const double a = sol.basis.a[i], b = sol.basis.b[i];
        const double m = displacement_scalar_minimizer(a, b, lambda);
        sol.m_star[i] = m;
        sol.alpha[i] = m * std::sqrt(b / a);
        if (std::abs(sol.alpha[i] - 1.0) > 1e-12) ++sol.rank_deviation;
    }
    sol.a_lambda = sol.basis.basis * sol.alpha.asDiagonal() * sol.basis.basis.transpose();
    return sol;
}

/// Objective of the displacement program at a coupling aligned with the
/// joint eigenbasis, parameterized by per-direction m in [0,1]^d.
inline double gaussian_displacement_objective(const JointEigen& basis, const Vector& m,
                                              double lambda) {
    double value = 0.0;
    for (Eigen::Index i = 0; i < m.size(); ++i) {
        value += basis.a[i] + basis.b[i] +
                 displacement_scalar_objective(basis.a[i], basis.b[i], lambda, m[i]);
    }
    return value;
}

} // namespace sot
