#pragma once

// Shared test utilities: random data, independent oracles (KL
// divergence, permutation brute force, finite differences) that stay
// independent of the implementation paths they check.

#include "sot/sot.hpp"

#include <algorithm>
#include <numeric>
#include <random>
#include <vector>

namespace testsupport {

using sot::Matrix;
using sot::Vector;

inline Matrix random_matrix(sot::Rng& rng, Eigen::Index rows, Eigen::Index cols,
                            double lo = -1.0, double hi = 1.0) {
    Matrix m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = sot::uniform_in(rng, lo, hi);
    return m;
}

inline Matrix random_positive_matrix(sot::Rng& rng, Eigen::Index rows, Eigen::Index cols) {
    return random_matrix(rng, rows, cols, 0.05, 1.0);
}

inline Vector random_simplex_vector(sot::Rng& rng, Eigen::Index n) {
    Vector v(n);
    for (Eigen::Index i = 0; i < n; ++i) v[i] = sot::uniform_in(rng, 0.1, 1.0);
    return v / v.sum();
}

/// Random exactly-feasible coupling: round a random positive matrix.
inline Matrix random_feasible_plan(sot::Rng& rng, const Vector& a, const Vector& b) {
    return sot::round_to_polytope(random_positive_matrix(rng, a.size(), b.size()), a, b).plan;
}

/// KL(P || M) with the 0 log 0 = 0 convention.
inline double kl_divergence(const Matrix& p, const Matrix& m) {
    double kl = 0.0;
    for (Eigen::Index i = 0; i < p.rows(); ++i)
        for (Eigen::Index j = 0; j < p.cols(); ++j) {
            const double pij = p(i, j), mij = std::max(m(i, j), 1e-300);
            if (pij > 0) kl += pij * std::log(pij / mij) - pij;
            kl += mij;
        }
    return kl;
}

/// Minimum-cost assignment over all permutation couplings (uniform
/// marginals, m = n): Birkhoff brute force.
inline double permutation_brute_force(const Matrix& cost) {
    const Eigen::Index n = cost.rows();
    std::vector<int> perm(static_cast<std::size_t>(n));
    std::iota(perm.begin(), perm.end(), 0);
    double best = std::numeric_limits<double>::infinity();
    do {
        double total = 0;
        for (Eigen::Index i = 0; i < n; ++i) total += cost(i, perm[std::size_t(i)]);
        best = std::min(best, total);
    } while (std::next_permutation(perm.begin(), perm.end()));
    return best / double(n);
}

/// Central finite differences of f at m, entrywise.
template <typename F>
Matrix finite_difference_gradient(const F& f, const Matrix& m, double step = 1e-6) {
    Matrix g(m.rows(), m.cols());
    Matrix probe = m;
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            const double orig = probe(i, j);
            probe(i, j) = orig + step;
            const double up = f(probe);
            probe(i, j) = orig - step;
            const double down = f(probe);
            probe(i, j) = orig;
            g(i, j) = (up - down) / (2.0 * step);
        }
    return g;
}

/// Least-squares slope of y against x.
inline double fitted_slope(const std::vector<double>& x, const std::vector<double>& y) {
    const double n = double(x.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

} // namespace testsupport
