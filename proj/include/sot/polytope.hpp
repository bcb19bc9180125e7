#pragma once

#include "sot/common.hpp"
#include "sot/csv.hpp"

#include <cmath>
#include <string>

namespace sot {

/// L1 deviation of P from the prescribed marginals:
/// |P 1 - a|_1 + |P^T 1 - b|_1.
inline double marginal_error(const Matrix& plan, const Vector& a, const Vector& b) {
    if (plan.rows() != a.size() || plan.cols() != b.size())
        throw ShapeError("marginal_error: shape mismatch");
    const Vector row = plan.rowwise().sum();
    const Vector col = plan.colwise().sum().transpose();
    return (row - a).lpNorm<1>() + (col - b).lpNorm<1>();
}

/// Nonnegative m x n transport plan with its target marginals.
struct Coupling {
    Matrix plan;
    Vector row_marginal;
    Vector col_marginal;

    Coupling() = default;
    Coupling(Matrix p, Vector a, Vector b)
        : plan(std::move(p)), row_marginal(std::move(a)), col_marginal(std::move(b)) {
        if (plan.rows() != row_marginal.size() || plan.cols() != col_marginal.size())
            throw ShapeError("coupling: plan shape does not match marginals");
        if ((plan.array() < 0).any())
            throw DataError("coupling: negative entry");
    }

    double error() const { return sot::marginal_error(plan, row_marginal, col_marginal); }
    bool feasible(double tol = 1e-9) const { return error() <= tol; }

    void write_csv(const std::string& path) const {
        csv::write_matrix(path, plan, "coupling");
    }
};

/// Independent (product) coupling a b^T.
inline Coupling product_coupling(const Vector& a, const Vector& b) {
    return Coupling(a * b.transpose(), a, b);
}

struct KlProjection {
    Coupling coupling;
    int iterations = 0;
    double marginal_error = 0.0;
};

namespace detail {

// Row-wise log-sum-exp of L + shift broadcast over columns.
inline Vector lse_rows(const Matrix& logm, const Vector& col_shift) {
    const Eigen::Index m = logm.rows();
    Vector out(m);
    for (Eigen::Index i = 0; i < m; ++i) {
        const auto row = logm.row(i).transpose() + col_shift;
        const double mx = row.maxCoeff();
        out[i] = mx + std::log((row.array() - mx).exp().sum());
    }
    return out;
}

inline Vector lse_cols(const Matrix& logm, const Vector& row_shift) {
    const Eigen::Index n = logm.cols();
    Vector out(n);
    for (Eigen::Index j = 0; j < n; ++j) {
        const auto col = logm.col(j) + row_shift;
        const double mx = col.maxCoeff();
        out[j] = mx + std::log((col.array() - mx).exp().sum());
    }
    return out;
}

} // namespace detail

/// KL projection of a positive matrix onto U(a,b) via Sinkhorn scaling.
/// Scalings run in the log domain; entries are floored at 1e-300 first
/// so multiplicative-update underflow cannot stall the scaling.
inline KlProjection kl_project(const Matrix& m, const Vector& a, const Vector& b,
                               int max_iter = 500, double tol = 1e-12) {
    if (m.rows() != a.size() || m.cols() != b.size())
        throw ShapeError("kl_project: shape mismatch");
    if ((a.array() <= 0).any() || (b.array() <= 0).any())
        throw ArgumentError("kl_project: non-positive marginal entry");
    require(max_iter >= 1, "kl_project: max_iter must be >= 1");

    const Matrix logm = m.array().max(1e-300).log();
    const Vector loga = a.array().log();
    const Vector logb = b.array().log();

    Vector f = Vector::Zero(m.rows());
    Vector g = Vector::Zero(m.cols());

    Matrix plan;
    int it = 0;
    double err = std::numeric_limits<double>::infinity();
    for (it = 1; it <= max_iter; ++it) {
        f = loga - detail::lse_rows(logm, g);
        g = logb - detail::lse_cols(logm, f);
        plan = ((logm.colwise() + f).rowwise() + g.transpose()).array().exp();
        if (!plan.allFinite())
            throw NumericalError("kl_project: NaN at iteration " + std::to_string(it));
        err = marginal_error(plan, a, b);
        if (err <= tol) break;
    }
    if (it > max_iter) it = max_iter;
    return KlProjection{Coupling(std::move(plan), a, b), it, err};
}

/// Rounds a nonnegative matrix into U(a,b) exactly: cap rows, cap
/// columns, then add the rank-one correction err_a err_b^T / |err_a|_1.
inline Coupling round_to_polytope(const Matrix& p, const Vector& a, const Vector& b) {
    if (p.rows() != a.size() || p.cols() != b.size())
        throw ShapeError("round_to_polytope: shape mismatch");
    if ((p.array() < 0).any())
        throw ArgumentError("round_to_polytope: negative entry");
    if (p.sum() <= 0)
        throw DegenerateInputError("round_to_polytope: zero matrix");

    Matrix q = p;
    const Vector rows = q.rowwise().sum();
    for (Eigen::Index i = 0; i < q.rows(); ++i) {
        const double s = rows[i] > 0 ? std::min(1.0, a[i] / rows[i]) : 1.0;
        q.row(i) *= s;
    }
    const Vector cols = q.colwise().sum().transpose();
    for (Eigen::Index j = 0; j < q.cols(); ++j) {
        const double s = cols[j] > 0 ? std::min(1.0, b[j] / cols[j]) : 1.0;
        q.col(j) *= s;
    }

    Vector err_a = (a - q.rowwise().sum()).cwiseMax(0.0);
    Vector err_b = (b - q.colwise().sum().transpose()).cwiseMax(0.0);
    const double total = err_a.sum();
    if (total > 0) q += (err_a * err_b.transpose()) / total;
    return Coupling(std::move(q), a, b);
}

inline Coupling round_to_polytope(const Coupling& c) {
    return round_to_polytope(c.plan, c.row_marginal, c.col_marginal);
}

} // namespace sot
