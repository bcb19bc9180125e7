#pragma once

#include "sot/common.hpp"
#include "sot/measures.hpp"
#include "sot/polytope.hpp"
#include "sot/regmaps.hpp"

#include <chrono>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

namespace sot {

/// Full problem instance: <C, P> + sum_i lambda_i |A_i(P)|_{S_{p_i}}^{q_i}
/// over U(a, b). Zero terms means plain OT.
struct Problem {
    CostMatrix cost;
    Vector a, b;
    std::vector<RegularizerTerm> terms;

    Problem(CostMatrix c, Vector row, Vector col,
            std::vector<RegularizerTerm> t = {})
        : cost(std::move(c)), a(std::move(row)), b(std::move(col)), terms(std::move(t)) {
        if (cost.entries.rows() != a.size() || cost.entries.cols() != b.size())
            throw ShapeError("problem: cost shape does not match marginals");
        for (const auto& term : terms)
            if (term.map.rows() != a.size() || term.map.cols() != b.size())
                throw ShapeError("problem: regularizer map shape does not match marginals");
    }

    Eigen::Index rows() const { return a.size(); }
    Eigen::Index cols() const { return b.size(); }
};

inline Problem make_problem(const DiscreteMeasure& source, const DiscreteMeasure& target,
                            std::vector<RegularizerTerm> terms = {},
                            double cost_exponent = 2.0) {
    return Problem(cost_matrix(source, target, cost_exponent), source.weights,
                   target.weights, std::move(terms));
}

/// Composite objective value at a plan.
inline double objective(const Problem& problem, const Matrix& plan) {
    if (plan.rows() != problem.rows() || plan.cols() != problem.cols())
        throw ShapeError("objective: plan shape mismatch");
    double value = problem.cost.entries.cwiseProduct(plan).sum();
    for (const auto& term : problem.terms) value += term.value(plan);
    return value;
}

/// Subgradient of the regularization part only (the cost C is added by
/// the solver when it forms the tilt).
inline Matrix subgradient(const Problem& problem, const Matrix& plan) {
    if (plan.rows() != problem.rows() || plan.cols() != problem.cols())
        throw ShapeError("subgradient: plan shape mismatch");
    Matrix g = Matrix::Zero(plan.rows(), plan.cols());
    for (std::size_t i = 0; i < problem.terms.size(); ++i) {
        try {
            g += problem.terms[i].subgradient(plan);
        } catch (const NumericalError& e) {
            throw NumericalError("subgradient of term " + std::to_string(i) + ": " +
                                 e.what());
        }
    }
    return g;
}

enum class StepSchedule { SqrtDecay, Geometric, Constant };

inline std::string schedule_name(StepSchedule s) {
    switch (s) {
        case StepSchedule::SqrtDecay: return "sqrt_decay";
        case StepSchedule::Geometric: return "geometric";
        case StepSchedule::Constant: return "constant";
    }
    return "unknown";
}

inline StepSchedule schedule_from_name(const std::string& name) {
    if (name == "sqrt_decay") return StepSchedule::SqrtDecay;
    if (name == "geometric") return StepSchedule::Geometric;
    if (name == "constant") return StepSchedule::Constant;
    throw ArgumentError("unknown step schedule: " + name);
}

struct SolverOptions {
    StepSchedule schedule = StepSchedule::SqrtDecay;
    double eta0 = 0.1;   // initial step size
    double ratio = 0.95; // geometric decay factor
    int max_outer_iters = 50;
    int sinkhorn_iters = 500;
    double sinkhorn_tol = 1e-12;
    bool round_each_iter = true;
    bool average_iterates = true;
    std::optional<Matrix> init; // product coupling when absent
    std::uint64_t seed = 0;     // recorded in outputs

    void validate() const {
        require(eta0 > 0, "solver options: eta0 must be positive");
        if (schedule == StepSchedule::Geometric)
            require(ratio > 0 && ratio < 1, "solver options: ratio must be in (0,1)");
        require(max_outer_iters >= 1, "solver options: need at least one iteration");
        require(sinkhorn_iters >= 1, "solver options: need at least one Sinkhorn iteration");
        require(sinkhorn_tol > 0, "solver options: Sinkhorn tolerance must be positive");
    }
};

/// Step size at iteration k >= 1.
inline double step_size(StepSchedule schedule, double eta0, double ratio, int k) {
    require(k >= 1, "step_size: k must be >= 1");
    switch (schedule) {
        case StepSchedule::SqrtDecay: return eta0 / std::sqrt(double(k));
        case StepSchedule::Geometric: return eta0 * std::pow(ratio, k - 1);
        case StepSchedule::Constant: return eta0;
    }
    throw ArgumentError("step_size: unknown schedule");
}

inline double step_size(const SolverOptions& opts, int k) {
    return step_size(opts.schedule, opts.eta0, opts.ratio, k);
}

struct SolveReport {
    Coupling final;
    Coupling averaged;
    std::vector<double> objective_trace;
    std::vector<double> marginal_error_trace;
    std::vector<double> step_trace;
    int iterations_used = 0;
    double wall_time_seconds = 0.0;

    /// Trace CSV with columns iter,tau,objective,marginal_error.
    void write_trace_csv(const std::string& path) const {
        csv::Writer w(path);
        w.row({"iter", "tau", "objective", "marginal_error"});
        for (int k = 0; k < iterations_used; ++k)
            w.numeric_row({double(k + 1), step_trace[std::size_t(k)],
                           objective_trace[std::size_t(k)],
                           marginal_error_trace[std::size_t(k)]});
    }
};

/// Mirror descent in KL geometry: tilt the iterate multiplicatively by
/// exp(-tau (C + G)), KL-project back onto U(a,b) via Sinkhorn, and
/// round. Runs exactly max_outer_iters iterations; the averaged iterate
/// is the uniform mean of all iterates, re-rounded to feasibility.
inline SolveReport solve(const Problem& problem, const SolverOptions& opts) {
    opts.validate();
    const auto t0 = std::chrono::steady_clock::now();

    const Eigen::Index m = problem.rows(), n = problem.cols();
    Matrix plan;
    if (opts.init) {
        if (opts.init->rows() != m || opts.init->cols() != n)
            throw ShapeError("solve: init coupling shape mismatch");
        if ((opts.init->array() <= 0).any())
            throw ArgumentError("solve: init coupling must be strictly positive");
        plan = *opts.init;
    } else {
        plan = problem.a * problem.b.transpose();
    }

    SolveReport report;
    report.objective_trace.reserve(std::size_t(opts.max_outer_iters));
    report.marginal_error_trace.reserve(std::size_t(opts.max_outer_iters));
    report.step_trace.reserve(std::size_t(opts.max_outer_iters));

    Matrix sum = Matrix::Zero(m, n);
    for (int k = 1; k <= opts.max_outer_iters; ++k) {
        const double tau = step_size(opts, k);
        const Matrix tilt = problem.cost.entries + subgradient(problem, plan);

        // Multiplicative update in the log domain, normalized to unit
        // mass before projection.
        Matrix logp = plan.array().max(1e-300).log().matrix() - tau * tilt;
        const double shift = logp.maxCoeff();
        Matrix updated = (logp.array() - shift).exp();
        const double mass = updated.sum();
        if (!std::isfinite(mass) || mass <= 0)
            throw NumericalError(
                "solve: divergent multiplicative update at iteration " +
                std::to_string(k) + " (tau=" + std::to_string(tau) +
                ", max tilt=" + std::to_string(tilt.cwiseAbs().maxCoeff()) + ")");
        updated /= mass;

        KlProjection proj =
            kl_project(updated, problem.a, problem.b, opts.sinkhorn_iters, opts.sinkhorn_tol);
        plan = opts.round_each_iter ? round_to_polytope(proj.coupling).plan
                                    : std::move(proj.coupling.plan);

        sum += plan;
        report.step_trace.push_back(tau);
        report.objective_trace.push_back(objective(problem, plan));
        report.marginal_error_trace.push_back(marginal_error(plan, problem.a, problem.b));
        report.iterations_used = k;
    }

    report.final = Coupling(plan, problem.a, problem.b);
    if (opts.average_iterates) {
        sum /= double(report.iterations_used);
        report.averaged = round_to_polytope(sum, problem.a, problem.b);
    } else {
        report.averaged = report.final;
    }

    report.wall_time_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return report;
}

} // namespace sot
