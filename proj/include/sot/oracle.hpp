#pragma once

#include "sot/common.hpp"
#include "sot/polytope.hpp"
#include "sot/solver.hpp"

#include <algorithm>
#include <deque>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

namespace sot {

/// Exact transportation-LP solution with its dual certificate.
struct OtLpResult {
    Coupling coupling;
    double value = 0.0;
    Vector dual_u, dual_v;
    int pivots = 0;
};

namespace detail {

// Transportation simplex on strictly positive marginals. Basic cells
// form a spanning tree of the bipartite row/column graph; Bland-style
// lowest-index rules are used for entering and leaving cells.
class TransportSimplex {
public:
    TransportSimplex(const Matrix& cost, const Vector& a, const Vector& b)
        : c_(cost), m_(int(a.size())), n_(int(b.size())) {
        flows_.reserve(std::size_t(m_ + n_ - 1));
        cells_.reserve(std::size_t(m_ + n_ - 1));
        northwest_corner(a, b);
        enter_tol_ = 1e-13 * (1.0 + c_.cwiseAbs().maxCoeff());
    }

    OtLpResult run(const Vector& a, const Vector& b) {
        const long cap = 200L * m_ * n_ + 1000;
        int pivots = 0;
        while (true) {
            compute_duals();
            int ei, ej;
            if (!find_entering(ei, ej)) break;
            pivot(ei, ej);
            if (++pivots > cap)
                throw NumericalError("exact_ot_lp: pivot cap exceeded (degenerate cycling?)");
        }
        compute_duals();

        Matrix plan = Matrix::Zero(m_, n_);
        double value = 0.0;
        for (std::size_t k = 0; k < cells_.size(); ++k) {
            const auto [i, j] = cells_[k];
            plan(i, j) = flows_[k];
            value += flows_[k] * c_(i, j);
        }
        OtLpResult res;
        res.coupling = Coupling(std::move(plan), a, b);
        res.value = value;
        res.dual_u = u_;
        res.dual_v = v_;
        res.pivots = pivots;
        return res;
    }

private:
    void northwest_corner(const Vector& a, const Vector& b) {
        Vector rem_a = a, rem_b = b;
        int i = 0, j = 0;
        while (true) {
            const double t = std::min(rem_a[i], rem_b[j]);
            cells_.emplace_back(i, j);
            flows_.push_back(std::max(t, 0.0));
            rem_a[i] -= t;
            rem_b[j] -= t;
            if (i == m_ - 1 && j == n_ - 1) break;
            if (rem_a[i] <= rem_b[j] && i < m_ - 1)
                ++i;
            else if (j < n_ - 1)
                ++j;
            else
                ++i;
        }
    }

    void compute_duals() {
        // Node ids: rows 0..m-1, columns m..m+n-1.
        adj_.assign(std::size_t(m_ + n_), {});
        for (std::size_t k = 0; k < cells_.size(); ++k) {
            adj_[std::size_t(cells_[k].first)].push_back(int(k));
            adj_[std::size_t(m_ + cells_[k].second)].push_back(int(k));
        }
        u_ = Vector::Zero(m_);
        v_ = Vector::Zero(n_);
        std::vector<char> seen(std::size_t(m_ + n_), 0);
        std::deque<int> queue{0};
        seen[0] = 1;
        while (!queue.empty()) {
            const int node = queue.front();
            queue.pop_front();
            for (int k : adj_[std::size_t(node)]) {
                const auto [i, j] = cells_[std::size_t(k)];
                const int other = (node < m_) ? m_ + j : i;
                if (seen[std::size_t(other)]) continue;
                seen[std::size_t(other)] = 1;
                if (other < m_)
                    u_[other] = c_(i, j) - v_[j];
                else
                    v_[other - m_] = c_(i, j) - u_[i];
                queue.push_back(other);
            }
        }
    }

    bool find_entering(int& ei, int& ej) const {
        std::vector<char> basic(std::size_t(m_ * n_), 0);
        for (const auto& [i, j] : cells_) basic[std::size_t(i * n_ + j)] = 1;
        for (int i = 0; i < m_; ++i)
            for (int j = 0; j < n_; ++j) {
                if (basic[std::size_t(i * n_ + j)]) continue;
                if (c_(i, j) - u_[i] - v_[j] < -enter_tol_) {
                    ei = i;
                    ej = j;
                    return true;
                }
            }
        return false;
    }

    // Tree path from row node ei to column node m+ej, as basis-cell indices.
    std::vector<int> tree_path(int ei, int ej) const {
        std::vector<int> parent_edge(std::size_t(m_ + n_), -1);
        std::vector<int> parent_node(std::size_t(m_ + n_), -1);
        std::vector<char> seen(std::size_t(m_ + n_), 0);
        std::deque<int> queue{ei};
        seen[std::size_t(ei)] = 1;
        const int target = m_ + ej;
        while (!queue.empty()) {
            const int node = queue.front();
            queue.pop_front();
            if (node == target) break;
            for (int k : adj_[std::size_t(node)]) {
                const auto [i, j] = cells_[std::size_t(k)];
                const int other = (node < m_) ? m_ + j : i;
                if (seen[std::size_t(other)]) continue;
                seen[std::size_t(other)] = 1;
                parent_edge[std::size_t(other)] = k;
                parent_node[std::size_t(other)] = node;
                queue.push_back(other);
            }
        }
        std::vector<int> path;
        for (int node = target; node != ei; node = parent_node[std::size_t(node)])
            path.push_back(parent_edge[std::size_t(node)]);
        std::reverse(path.begin(), path.end()); // from ei towards the column node
        return path;
    }

    void pivot(int ei, int ej) {
        const std::vector<int> path = tree_path(ei, ej);
        // Walking the cycle starting at the entering (+) edge, path edges
        // alternate -, +, -, ... from the entering row outward.
        std::vector<int> minus, plus;
        for (std::size_t idx = 0; idx < path.size(); ++idx)
            (idx % 2 == 0 ? minus : plus).push_back(path[idx]);

        double theta = std::numeric_limits<double>::infinity();
        for (int k : minus) theta = std::min(theta, flows_[std::size_t(k)]);
        int leaving = -1;
        for (int k : minus)
            if (flows_[std::size_t(k)] == theta &&
                (leaving < 0 || cell_index(k) < cell_index(leaving)))
                leaving = k;
        for (int k : plus) flows_[std::size_t(k)] += theta;
        for (int k : minus) flows_[std::size_t(k)] = std::max(flows_[std::size_t(k)] - theta, 0.0);
        cells_[std::size_t(leaving)] = {ei, ej};
        flows_[std::size_t(leaving)] = theta;
    }

    long cell_index(int k) const {
        return long(cells_[std::size_t(k)].first) * n_ + cells_[std::size_t(k)].second;
    }

    const Matrix& c_;
    int m_, n_;
    double enter_tol_ = 0.0;
    std::vector<std::pair<int, int>> cells_;
    std::vector<double> flows_;
    std::vector<std::vector<int>> adj_;
    Vector u_, v_;
};

} // namespace detail

/// Exact optimum of the transportation LP min <C,P> over U(a,b), via a
/// network-simplex method on the bipartite tree structure. Zero-mass
/// rows and columns are removed before solving and re-embedded after.
inline OtLpResult exact_ot_lp(const Matrix& cost, const Vector& a, const Vector& b) {
    if (cost.rows() != a.size() || cost.cols() != b.size())
        throw ShapeError("exact_ot_lp: shape mismatch");
    if (cost.rows() * cost.cols() > 10'000)
        throw CapacityError("exact_ot_lp: instance above the 10000-cell desk-scale guard");
    if ((a.array() < 0).any() || (b.array() < 0).any())
        throw ArgumentError("exact_ot_lp: negative marginal entry");
    if (!cost.allFinite()) throw NumericalError("exact_ot_lp: non-finite cost");

    std::vector<int> rows, cols;
    for (int i = 0; i < a.size(); ++i)
        if (a[i] > 0) rows.push_back(i);
    for (int j = 0; j < b.size(); ++j)
        if (b[j] > 0) cols.push_back(j);
    if (rows.empty() || cols.empty())
        throw ArgumentError("exact_ot_lp: all-zero marginals");

    Matrix rc(rows.size(), cols.size());
    Vector ra(rows.size()), rb(cols.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        ra[long(i)] = a[rows[i]];
        for (std::size_t j = 0; j < cols.size(); ++j) rc(long(i), long(j)) = cost(rows[i], cols[j]);
    }
    for (std::size_t j = 0; j < cols.size(); ++j) rb[long(j)] = b[cols[j]];

    detail::TransportSimplex simplex(rc, ra, rb);
    OtLpResult reduced = simplex.run(ra, rb);

    OtLpResult out;
    Matrix plan = Matrix::Zero(a.size(), b.size());
    out.dual_u = Vector::Zero(a.size());
    out.dual_v = Vector::Zero(b.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        out.dual_u[rows[i]] = reduced.dual_u[long(i)];
        for (std::size_t j = 0; j < cols.size(); ++j)
            plan(rows[i], cols[j]) = reduced.coupling.plan(long(i), long(j));
    }
    for (std::size_t j = 0; j < cols.size(); ++j) out.dual_v[cols[j]] = reduced.dual_v[long(j)];

    // Duals for removed columns, then removed rows, chosen so every
    // reduced cost stays nonnegative.
    for (int j = 0; j < b.size(); ++j) {
        if (b[j] > 0) continue;
        double best = std::numeric_limits<double>::infinity();
        for (int i : rows) best = std::min(best, cost(i, j) - out.dual_u[i]);
        out.dual_v[j] = best;
    }
    for (int i = 0; i < a.size(); ++i) {
        if (a[i] > 0) continue;
        double best = std::numeric_limits<double>::infinity();
        for (int j = 0; j < b.size(); ++j) best = std::min(best, cost(i, j) - out.dual_v[j]);
        out.dual_u[i] = best;
    }

    out.coupling = Coupling(std::move(plan), a, b);
    out.value = reduced.value;
    out.pivots = reduced.pivots;
    return out;
}

inline OtLpResult exact_ot_lp(const CostMatrix& cost, const Vector& a, const Vector& b) {
    return exact_ot_lp(cost.entries, a, b);
}

enum class CertificateStatus { Passed, Refuted, Inconclusive };

/// Optimality certificate built from the tilted cost S = C + sum lambda G:
/// the candidate is globally optimal iff it solves the plain OT problem
/// with cost S, for some subgradient selection G.
struct CertificateReport {
    Matrix tilted_cost;
    double lp_value = 0.0;
    double candidate_value = 0.0;
    double gap = 0.0;
    Vector dual_u, dual_v;
    bool passed = false;
    CertificateStatus status = CertificateStatus::Refuted;
    double lambda = 0.0; // first term's strength, for reporting

    std::string to_text() const {
        std::ostringstream os;
        os << "tilted-cost optimality certificate\n"
           << "  lambda          " << csv::format_number(lambda) << "\n"
           << "  candidate value " << csv::format_number(candidate_value) << "\n"
           << "  lp value        " << csv::format_number(lp_value) << "\n"
           << "  gap             " << csv::format_number(gap) << "\n"
           << "  verdict         "
           << (status == CertificateStatus::Passed
                   ? "passed"
                   : status == CertificateStatus::Inconclusive ? "inconclusive (canonical subgradient only)"
                                                               : "refuted")
           << "\n";
        return os.str();
    }

    std::vector<double> csv_row() const {
        return {lambda, candidate_value, lp_value, gap, passed ? 1.0 : 0.0};
    }
};

namespace detail {

// The canonical subgradient selection is non-unique when some term's
// image is rank-deficient (p = 1) or zero; a failed certificate is then
// only inconclusive.
inline bool subdifferential_non_unique(const Problem& problem, const Matrix& plan) {
    for (const auto& term : problem.terms) {
        if (term.strength == 0) continue;
        const MapImage img = term.map.apply(plan);
        if (img.is_zero()) return true;
        if (term.schatten_p != 1.0) continue;
        if (img.diagonal) {
            if ((img.diag.cwiseAbs().array() <= 1e-10 * img.diag.cwiseAbs().maxCoeff()).any())
                return true;
        } else {
            const Vector sigma = thin_svd(img.dense).singular_values;
            if (sigma[sigma.size() - 1] <= 1e-10 * sigma[0]) return true;
        }
    }
    return false;
}

} // namespace detail

/// Checks global optimality of a candidate coupling via the tilted-cost
/// LP. Passing certifies optimality; failing with the canonical
/// subgradient selection is inconclusive whenever the subdifferential
/// is non-unique at the candidate.
inline CertificateReport kkt_certificate(const Problem& problem, const Matrix& candidate,
                                         double tol = 1e-8) {
    if (candidate.rows() != problem.rows() || candidate.cols() != problem.cols())
        throw ShapeError("kkt_certificate: candidate shape mismatch");
    if (marginal_error(candidate, problem.a, problem.b) > 1e-6)
        throw ArgumentError("kkt_certificate: candidate is not feasible to 1e-6");

    CertificateReport report;
    report.tilted_cost = problem.cost.entries + subgradient(problem, candidate);
    report.lambda = problem.terms.empty() ? 0.0 : problem.terms.front().strength;

    OtLpResult lp = exact_ot_lp(report.tilted_cost, problem.a, problem.b);
    report.lp_value = lp.value;
    report.candidate_value = report.tilted_cost.cwiseProduct(candidate).sum();
    report.gap = report.candidate_value - report.lp_value;
    report.dual_u = std::move(lp.dual_u);
    report.dual_v = std::move(lp.dual_v);
    report.passed = report.gap <= tol;
    if (report.passed)
        report.status = CertificateStatus::Passed;
    else
        report.status = detail::subdifferential_non_unique(problem, candidate)
                            ? CertificateStatus::Inconclusive
                            : CertificateStatus::Refuted;
    return report;
}

/// One scalar problem on [0,1] for the separable brute-force oracle.
struct ScalarProblem {
    std::function<double(double)> objective;
    std::vector<double> breakpoints; // candidate minimizers to include in the scan
};

/// Brute-force scan of each one-dimensional problem on a uniform grid
/// over [0,1] plus any supplied breakpoints. Keeps the earliest strict
/// minimizer.
inline Vector separable_grid_oracle(const std::vector<ScalarProblem>& problems,
                                    int grid_points) {
    require(grid_points >= 2, "separable_grid_oracle: need at least two grid points");
    Vector out(Eigen::Index(problems.size()));
    for (std::size_t k = 0; k < problems.size(); ++k) {
        std::vector<double> candidates;
        candidates.reserve(std::size_t(grid_points) + problems[k].breakpoints.size());
        for (int i = 0; i < grid_points; ++i)
            candidates.push_back(double(i) / double(grid_points - 1));
        for (double bp : problems[k].breakpoints)
            if (bp >= 0.0 && bp <= 1.0) candidates.push_back(bp);
        std::sort(candidates.begin(), candidates.end());

        double best_m = candidates.front();
        double best_val = problems[k].objective(best_m);
        for (double mval : candidates) {
            const double val = problems[k].objective(mval);
            if (val < best_val) {
                best_val = val;
                best_m = mval;
            }
        }
        out[Eigen::Index(k)] = best_m;
    }
    return out;
}

} // namespace sot
