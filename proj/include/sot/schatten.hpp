#pragma once

#include "sot/common.hpp"

#include <Eigen/SVD>
#include <cmath>
#include <limits>

namespace sot {

/// Thin SVD factors M = U diag(sigma) V^T with sigma nonincreasing.
struct SvdFactors {
    Matrix u;
    Vector singular_values;
    Matrix v;

    Matrix reconstruct() const {
        return u * singular_values.asDiagonal() * v.transpose();
    }
};

inline SvdFactors thin_svd(const Matrix& m) {
    if (!m.allFinite()) throw NumericalError("thin_svd: non-finite input");
    Eigen::BDCSVD<Matrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
    if (!svd.singularValues().allFinite())
        throw NumericalError("thin_svd: SVD failed to converge");
    return SvdFactors{svd.matrixU(), svd.singularValues(), svd.matrixV()};
}

/// Schatten-p norm: the l_p norm of the singular values. p may be any
/// positive real or infinity (operator norm); p = 2 is Frobenius.
inline double schatten_norm(const Matrix& m, double p) {
    if (!m.allFinite()) throw NumericalError("schatten_norm: non-finite input");
    if (!(p > 0)) throw ArgumentError("schatten_norm: p must be positive");
    const Vector sigma = thin_svd(m).singular_values;
    if (std::isinf(p)) return sigma.size() > 0 ? sigma[0] : 0.0;
    return std::pow(sigma.array().pow(p).sum(), 1.0 / p);
}

/// l_p norm of a diagonal's entries; Schatten norms of diagonal matrices
/// reduce to this.
inline double vector_lp_norm(const Vector& v, double p) {
    if (!(p > 0)) throw ArgumentError("vector_lp_norm: p must be positive");
    if (std::isinf(p)) return v.size() > 0 ? v.cwiseAbs().maxCoeff() : 0.0;
    return std::pow(v.array().abs().pow(p).sum(), 1.0 / p);
}

namespace detail {

// sigma^(p-1) with the 0^0 = 0 convention; singular values below
// 1e-12 * sigma_1 count as zero when p < 2 to avoid amplification.
inline Vector sigma_power(const Vector& sigma, double p) {
    Vector out = Vector::Zero(sigma.size());
    const double cut = sigma.size() > 0 ? 1e-12 * sigma[0] : 0.0;
    for (Eigen::Index i = 0; i < sigma.size(); ++i) {
        const double s = sigma[i];
        if (p < 2.0 && s <= cut) continue;
        if (s == 0.0) continue;
        out[i] = (p == 1.0) ? 1.0 : std::pow(s, p - 1.0);
    }
    return out;
}

} // namespace detail

/// An element of the subdifferential of |.|_{S_p}^q at M:
///   q |M|_{S_p}^{q-p} U Sigma^{p-1} V^T.
/// For p, q > 1 this is the gradient. M = 0 returns the zero matrix.
inline Matrix schatten_power_subgradient(const Matrix& m, double p, double q) {
    if (p < 1.0 || q < 1.0)
        throw ArgumentError("schatten_power_subgradient: p, q >= 1 required (convex regime)");
    if (std::isinf(p) || std::isinf(q))
        throw ArgumentError("schatten_power_subgradient: p and q must be finite");
    if (!m.allFinite())
        throw NumericalError("schatten_power_subgradient: non-finite input");

    const SvdFactors f = thin_svd(m);
    const Vector& sigma = f.singular_values;
    if (sigma.size() == 0 || sigma[0] == 0.0)
        return Matrix::Zero(m.rows(), m.cols());

    double scale = q;
    if (q != p) {
        const double norm = std::isinf(p) ? sigma[0]
                                          : std::pow(sigma.array().pow(p).sum(), 1.0 / p);
        if (norm == 0.0) return Matrix::Zero(m.rows(), m.cols());
        scale *= std::pow(norm, q - p);
    }
    return scale * f.u * detail::sigma_power(sigma, p).asDiagonal() * f.v.transpose();
}

/// Nuclear norm over operator norm; a smooth rank surrogate in [1, rank].
inline double effective_rank(const Matrix& m) {
    const Vector sigma = thin_svd(m).singular_values;
    if (sigma.size() == 0 || sigma[0] <= 0.0)
        throw DegenerateInputError("effective_rank: zero matrix");
    return sigma.sum() / sigma[0];
}

inline double effective_rank_of_diagonal(const Vector& diag) {
    const double top = diag.size() > 0 ? diag.cwiseAbs().maxCoeff() : 0.0;
    if (top <= 0.0) throw DegenerateInputError("effective_rank: zero diagonal");
    return diag.cwiseAbs().sum() / top;
}

} // namespace sot
