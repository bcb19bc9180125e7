// Acceptance suite: runs every acceptance criterion end to end and
// prints one PASS/FAIL line per criterion. Exits nonzero if any fail.

#include "sot/sot.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <random>
#include <string>
#include <vector>

using namespace sot;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
    bool ok = true;
    std::string detail;

    void fail(const std::string& why) {
        ok = false;
        if (!detail.empty()) detail += "; ";
        detail += why;
    }
};

std::vector<Vector> centers2(double x, double y0, double y1) {
    Vector c1(2), c2(2);
    c1 << x, y0;
    c2 << x, y1;
    return {c1, c2};
}

Matrix random_box_matrix(Rng& rng, Eigen::Index r, Eigen::Index c, double lo, double hi) {
    Matrix m(r, c);
    for (Eigen::Index i = 0; i < r; ++i)
        for (Eigen::Index j = 0; j < c; ++j) m(i, j) = uniform_in(rng, lo, hi);
    return m;
}

double permutation_brute_force(const Matrix& cost) {
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

double fitted_slope(const std::vector<double>& x, const std::vector<double>& y) {
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

char buffer[512];

// ---------------------------------------------------------------------------
// Criterion 1: Theorem-3 recovery on exact-mode clustered instances.
// ---------------------------------------------------------------------------
Outcome criterion_theorem3() {
    Outcome out;
    double worst_linf = 0, worst_rank_dev = 0, worst_time = 0;
    for (int idx = 0; idx < 20; ++idx) {
        const auto t0 = Clock::now();
        const double rho = idx < 10 ? 0.0 : 0.1;
        auto inst = gen_clustered_instance(2, 10, centers2(-2, 2, -2), centers2(2, 2, -2),
                                           rho, ClusterMode::Exact, 0.0,
                                           std::uint64_t(idx) + 1);
        for (double frac : {0.25, 0.5, 0.75}) {
            const double lambda = frac * inst.lambda_window_upper;
            std::vector<RegularizerTerm> terms;
            terms.emplace_back(lambda, 1.0, 1.0,
                               AffineCouplingMap(MapKind::Identity, inst.source, inst.target));
            Problem problem = make_problem(inst.source, inst.target, std::move(terms));

            SolverOptions opts;
            opts.schedule = StepSchedule::Geometric;
            opts.eta0 = 1.0;
            opts.ratio = 0.97;
            opts.max_outer_iters = 200;
            auto report = solve(problem, opts);

            const double linf =
                (report.final.plan - inst.ground_truth).cwiseAbs().maxCoeff();
            worst_linf = std::max(worst_linf, linf);
            if (linf > 1e-3)
                out.fail("linf " + std::to_string(linf) + " at instance " +
                         std::to_string(idx) + " lambda " + std::to_string(lambda));

            const double rank = effective_rank(report.final.plan);
            worst_rank_dev = std::max(worst_rank_dev, std::abs(rank - 2.0));
            if (rank < 2.0 - 1e-6 || rank > 2.05)
                out.fail("effective rank " + std::to_string(rank));

            auto cert = kkt_certificate(problem, inst.ground_truth, 1e-8);
            if (!cert.passed) out.fail("certificate failed at lambda " + std::to_string(lambda));
        }
        const double elapsed = seconds_since(t0);
        worst_time = std::max(worst_time, elapsed);
        if (elapsed > 10.0) out.fail("instance runtime " + std::to_string(elapsed) + " s");
    }
    std::snprintf(buffer, sizeof(buffer),
                  "max linf %.2e, max |rank-R| %.2e, max runtime %.2f s/instance",
                  worst_linf, worst_rank_dev, worst_time);
    out.detail = out.ok ? buffer : out.detail;
    return out;
}

// ---------------------------------------------------------------------------
// Criterion 2: Theorem-4 recovery on symmetric-pairs instances.
// ---------------------------------------------------------------------------
Outcome criterion_theorem4() {
    Outcome out;
    double worst_rank = 1.0, worst_split = 0.0;
    for (int idx = 0; idx < 20; ++idx) {
        const Eigen::Index R = (idx % 2 == 0) ? 2 : 3;
        const std::vector<Eigen::Index> sizes(std::size_t(R), 4);
        std::vector<double> mu;
        for (Eigen::Index t = 0; t < R; ++t) mu.push_back(5.0 * double(t));
        auto inst = gen_symmetric_pairs_instance(R, sizes, mu, 0.5, 1.0, 3,
                                                 std::uint64_t(idx) + 101);
        for (double frac : {0.25, 0.5, 0.9}) {
            const double lambda = frac * inst.lambda_max;
            std::vector<RegularizerTerm> terms;
            terms.emplace_back(lambda, 1.0, 1.0,
                               AffineCouplingMap(MapKind::BarycentricDisplacement,
                                                 inst.source, inst.target));
            Problem problem = make_problem(inst.source, inst.target, std::move(terms));

            SolverOptions opts;
            opts.schedule = StepSchedule::Geometric;
            opts.eta0 = 0.2;
            opts.ratio = 0.985;
            opts.max_outer_iters = 600;
            auto report = solve(problem, opts);

            AffineCouplingMap map(MapKind::BarycentricDisplacement, inst.source, inst.target);
            const double rank = map.apply(report.final.plan).effective_rank();
            worst_rank = std::max(worst_rank, rank);
            if (rank > 1.01)
                out.fail("map image effective rank " + std::to_string(rank) +
                         " at instance " + std::to_string(idx));

            for (Eigen::Index t = 0; t < R; ++t)
                for (auto i : inst.source_blocks[std::size_t(t)]) {
                    const double ai = inst.source.weights[i];
                    for (int sgn = 0; sgn < 2; ++sgn) {
                        const double split =
                            report.final.plan(i, 2 * t + sgn) / ai;
                        worst_split = std::max(worst_split, std::abs(split - 0.5));
                        if (std::abs(split - 0.5) > 1e-3)
                            out.fail("split " + std::to_string(split) + " at instance " +
                                     std::to_string(idx));
                    }
                }

            auto cert = kkt_certificate(problem, inst.ground_truth, 1e-8);
            if (!cert.passed)
                out.fail("certificate failed at instance " + std::to_string(idx) +
                         " lambda " + std::to_string(lambda));
        }
    }
    std::snprintf(buffer, sizeof(buffer), "max image rank %.6f, max |split-1/2| %.2e",
                  worst_rank, worst_split);
    out.detail = out.ok ? buffer : out.detail;
    return out;
}

// ---------------------------------------------------------------------------
// Criterion 3: lambda = 0 agreement with the exact LP, and the LP against
// the permutation brute force.
// ---------------------------------------------------------------------------
Outcome criterion_lp_agreement() {
    Outcome out;
    Rng rng = make_rng(505);
    double worst_rel = 0;
    for (int trial = 0; trial < 100; ++trial) {
        const Eigen::Index m = 2 + Eigen::Index(rng() % 19); // up to 20
        const Eigen::Index n = 2 + Eigen::Index(rng() % 19);
        Matrix xs = random_box_matrix(rng, 2, m, -1.5, 1.5);
        Matrix ys = random_box_matrix(rng, 2, n, -1.5, 1.5);
        ys.row(0).array() += 4.0;
        Problem problem = make_problem(DiscreteMeasure::uniform(std::move(xs)),
                                       DiscreteMeasure::uniform(std::move(ys)));
        const double lp = exact_ot_lp(problem.cost, problem.a, problem.b).value;

        SolverOptions opts;
        opts.schedule = StepSchedule::Constant;
        opts.eta0 = 10.0;
        opts.max_outer_iters = 400;
        opts.sinkhorn_iters = 400;
        opts.sinkhorn_tol = 1e-12;
        auto report = solve(problem, opts);
        const double avg = objective(problem, report.averaged.plan);
        const double rel = std::abs(avg - lp) / std::abs(lp);
        worst_rel = std::max(worst_rel, rel);
        if (rel > 1e-3)
            out.fail("relative gap " + std::to_string(rel) + " at trial " +
                     std::to_string(trial));
    }

    double worst_bf = 0;
    for (int trial = 0; trial < 50; ++trial) {
        const Eigen::Index n = (trial % 2 == 0) ? 4 : 5;
        const Matrix c = random_box_matrix(rng, n, n, 0.0, 10.0);
        const Vector marg = Vector::Constant(n, 1.0 / double(n));
        const double lp = exact_ot_lp(c, marg, marg).value;
        const double brute = permutation_brute_force(c);
        worst_bf = std::max(worst_bf, std::abs(lp - brute));
        if (std::abs(lp - brute) > 1e-12)
            out.fail("brute-force mismatch " + std::to_string(lp - brute));
    }
    std::snprintf(buffer, sizeof(buffer),
                  "max relative gap %.2e over 100 instances, max LP-vs-brute %.2e",
                  worst_rel, worst_bf);
    out.detail = out.ok ? buffer : out.detail;
    return out;
}

// ---------------------------------------------------------------------------
// Criterion 4: Gaussian closed forms against the separable grid oracle.
// ---------------------------------------------------------------------------
Outcome criterion_gaussian() {
    Outcome out;
    const auto t0 = Clock::now();
    Rng rng = make_rng(707);
    const std::vector<double> lambdas = {0.0, 0.5, 1.0, 2.0, 5.0};
    double worst = 0;
    for (int trial = 0; trial < 50; ++trial) {
        const Eigen::Index d = 4;
        const Matrix basis =
            Eigen::HouseholderQR<Matrix>(random_box_matrix(rng, d, d, -1, 1)).householderQ();
        Vector a(d), b(d);
        for (Eigen::Index i = 0; i < d; ++i) {
            a[i] = uniform_in(rng, 0.2, 3.0);
            b[i] = uniform_in(rng, 0.2, 3.0);
        }
        GaussianPair pair(basis * a.asDiagonal() * basis.transpose(),
                          basis * b.asDiagonal() * basis.transpose());

        for (double lambda : lambdas) {
            // Displacement program vs the grid oracle.
            auto disp = gaussian_displacement_solution(pair, lambda);
            std::vector<ScalarProblem> dprobs;
            for (Eigen::Index i = 0; i < d; ++i) {
                const double ai = disp.basis.a[i], bi = disp.basis.b[i];
                ScalarProblem sp;
                sp.objective = [ai, bi, lambda](double m) {
                    return displacement_scalar_objective(ai, bi, lambda, m);
                };
                sp.breakpoints = {std::sqrt(ai / bi)};
                dprobs.push_back(std::move(sp));
            }
            const Vector dgrid = separable_grid_oracle(dprobs, 10000);
            for (Eigen::Index i = 0; i < d; ++i) {
                const double err = std::abs(dgrid[i] - disp.m_star[i]);
                worst = std::max(worst, err);
                if (err > 1e-4) out.fail("displacement grid mismatch " + std::to_string(err));
            }

            // Cross-covariance program vs the grid oracle on the reduced
            // separable objective (lambda - 2 sigma_i) s.
            auto cross = gaussian_cross_cov_solution(pair, lambda);
            std::vector<ScalarProblem> cprobs;
            for (Eigen::Index i = 0; i < d; ++i) {
                const double coef = lambda - 2.0 * cross.sigma[i];
                ScalarProblem sp;
                sp.objective = [coef](double s) { return coef * s; };
                cprobs.push_back(std::move(sp));
            }
            const Vector cgrid = separable_grid_oracle(cprobs, 10000);
            for (Eigen::Index i = 0; i < d; ++i) {
                const double err = std::abs(cgrid[i] - cross.selectors[i]);
                worst = std::max(worst, err);
                if (err > 1e-4) out.fail("cross-cov grid mismatch " + std::to_string(err));
            }
        }
    }

    // Isotropic closed forms reproduce the hard thresholds exactly.
    {
        const double a = 1.2, b = 0.7;
        GaussianPair pair(a * a * Matrix::Identity(3, 3), b * b * Matrix::Identity(3, 3));
        auto below = gaussian_cross_cov_solution(pair, 2 * a * b - 1e-9);
        auto above = gaussian_cross_cov_solution(pair, 2 * a * b + 1e-9);
        if ((below.k_lambda - a * b * Matrix::Identity(3, 3)).cwiseAbs().maxCoeff() > 1e-9)
            out.fail("isotropic K below threshold");
        if (above.k_lambda.cwiseAbs().maxCoeff() > 1e-12) out.fail("isotropic K above threshold");

        const double s0 = 0.8, s1 = 1.4;
        GaussianPair iso(s0 * s0 * Matrix::Identity(3, 3), s1 * s1 * Matrix::Identity(3, 3));
        auto pre = gaussian_displacement_solution(iso, 2 * s0 - 1e-9);
        auto post = gaussian_displacement_solution(iso, 2 * s0);
        if ((pre.a_lambda - (s1 / s0) * Matrix::Identity(3, 3)).cwiseAbs().maxCoeff() > 1e-9)
            out.fail("isotropic A below threshold");
        if ((post.a_lambda - Matrix::Identity(3, 3)).cwiseAbs().maxCoeff() > 1e-9)
            out.fail("isotropic A at threshold");
    }

    const double elapsed = seconds_since(t0);
    if (elapsed > 5.0) out.fail("runtime " + std::to_string(elapsed) + " s > 5 s");
    std::snprintf(buffer, sizeof(buffer), "max grid deviation %.2e, runtime %.2f s", worst,
                  elapsed);
    out.detail = out.ok ? buffer : out.detail;
    return out;
}

// ---------------------------------------------------------------------------
// Criterion 5: convergence-rate signatures.
// ---------------------------------------------------------------------------
Outcome criterion_convergence() {
    Outcome out;

    // Hard regime: variance-1 mixture, lambda = 0.1, sqrt-decay steps.
    {
        auto source = gen_gaussian_mixture(centers2(-2, 2, -2), 1.0, 10, 801);
        auto target = gen_gaussian_mixture(centers2(2, 2, -2), 1.0, 10, 802);
        std::vector<RegularizerTerm> terms;
        terms.emplace_back(0.1, 1.0, 1.0,
                           AffineCouplingMap(MapKind::Identity, source, target));
        Problem problem = make_problem(source, target, std::move(terms));

        SolverOptions long_opts;
        long_opts.schedule = StepSchedule::Constant;
        long_opts.eta0 = 1.0;
        long_opts.max_outer_iters = 3000;
        long_opts.sinkhorn_iters = 300;
        long_opts.sinkhorn_tol = 1e-11;
        auto long_run = solve(problem, long_opts);
        const double reference = std::min(
            *std::min_element(long_run.objective_trace.begin(), long_run.objective_trace.end()),
            objective(problem, long_run.averaged.plan));

        SolverOptions opts = long_opts;
        opts.schedule = StepSchedule::SqrtDecay;
        opts.eta0 = 0.1;
        opts.max_outer_iters = 400;
        auto report = solve(problem, opts);

        std::vector<double> lx, ly;
        double best = std::numeric_limits<double>::infinity();
        bool positive = true;
        for (int k = 0; k < report.iterations_used; ++k) {
            best = std::min(best, report.objective_trace[std::size_t(k)]);
            if (k + 1 < 25) continue;
            const double excess = best - reference;
            if (excess <= 0) {
                positive = false;
                break;
            }
            lx.push_back(std::log(double(k + 1)));
            ly.push_back(std::log(excess));
        }
        if (!positive) {
            out.fail("running-best excess crossed the long-run reference");
        } else {
            const double slope = fitted_slope(lx, ly);
            std::snprintf(buffer, sizeof(buffer), "sublinear slope %.3f", slope);
            out.detail = buffer;
            if (slope < -1.1 || slope > -0.35)
                out.fail("sublinear slope " + std::to_string(slope) +
                         " outside [-1.1, -0.35]");
        }
    }

    // Sharp regime: strongly tilted clustered instance, geometric steps.
    {
        auto inst = gen_clustered_instance(2, 10, centers2(-2, 2, -2), centers2(2, 2, -2),
                                           0.1, ClusterMode::Exact, 0.0, 803);
        const double lambda = 10.0;
        std::vector<RegularizerTerm> terms;
        terms.emplace_back(lambda, 1.0, 1.0,
                           AffineCouplingMap(MapKind::Identity, inst.source, inst.target));
        Problem problem = make_problem(inst.source, inst.target, std::move(terms));
        const double reference = objective(problem, inst.ground_truth);

        SolverOptions opts;
        opts.schedule = StepSchedule::Geometric;
        opts.eta0 = 1.0;
        opts.ratio = 0.97;
        opts.max_outer_iters = 200;
        auto report = solve(problem, opts);
        double best = std::numeric_limits<double>::infinity();
        for (double v : report.objective_trace) best = std::min(best, v);
        const double excess = best - reference;
        std::snprintf(buffer, sizeof(buffer), "%s; linear-regime excess %.2e",
                      out.detail.c_str(), excess);
        if (excess >= 1e-8)
            out.fail("sharp-regime excess " + std::to_string(excess) + " >= 1e-8");
        else
            out.detail = buffer;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Criterion 6: property suites.
// ---------------------------------------------------------------------------
Outcome criterion_properties() {
    Outcome out;
    Rng rng = make_rng(909);

    // Shared random fixture.
    const auto source = DiscreteMeasure::uniform(random_box_matrix(rng, 3, 4, -1, 1));
    const auto target = DiscreteMeasure::uniform(random_box_matrix(rng, 3, 5, -1, 1));
    Vector dir(3);
    dir << 1, 0, 0;
    const Matrix projection = Matrix::Identity(3, 3) - dir * dir.transpose();

    const std::vector<MapKind> kinds = {
        MapKind::Identity,        MapKind::BarycentricMap,
        MapKind::BarycentricDisplacement, MapKind::ElasticL1Diag,
        MapKind::SubspaceElastic, MapKind::CrossCovariance,
        MapKind::DisplacementCovariance};

    // Adjoint identity, 100 random pairs per kind, relative 1e-9.
    for (MapKind kind : kinds) {
        AffineCouplingMap map(kind, source, target,
                              kind == MapKind::SubspaceElastic ? projection : Matrix());
        const MapImage offset = map.apply(Matrix::Zero(4, 5));
        for (int trial = 0; trial < 100; ++trial) {
            const Matrix p = random_box_matrix(rng, 4, 5, -1, 1);
            MapImage g;
            if (kind == MapKind::ElasticL1Diag || kind == MapKind::SubspaceElastic) {
                Vector diag(3 * 4 * 5);
                for (Eigen::Index i = 0; i < diag.size(); ++i)
                    diag[i] = uniform_in(rng, -1, 1);
                g = MapImage::from_diagonal(std::move(diag));
            } else {
                auto [r, c] = map.output_shape();
                g = MapImage::from_dense(random_box_matrix(rng, r, c, -1, 1));
            }
            const MapImage img = map.apply(p);
            const double lhs = img.diagonal ? (img.diag - offset.diag).dot(g.diag)
                                            : ((img.dense - offset.dense).array() *
                                               g.dense.array()).sum();
            const double rhs = (map.adjoint(g).array() * p.array()).sum();
            if (std::abs(lhs - rhs) > 1e-9 * std::max({1.0, std::abs(lhs), std::abs(rhs)}))
                out.fail("adjoint identity (" + map_kind_name(kind) + ")");
        }
    }

    // Subgradient convexity inequality for the required (p, q) pairs.
    for (auto [p, q] : std::vector<std::pair<double, double>>{
             {1, 1}, {2, 2}, {1, 2}, {2, 1}, {3, 1.5}}) {
        for (int trial = 0; trial < 100; ++trial) {
            const Matrix m = random_box_matrix(rng, 3, 4, -1, 1);
            const Matrix n = random_box_matrix(rng, 3, 4, -1, 1);
            const Matrix g = schatten_power_subgradient(m, p, q);
            const double lhs = std::pow(schatten_norm(n, p), q);
            const double rhs =
                std::pow(schatten_norm(m, p), q) + (g.array() * (n - m).array()).sum();
            if (lhs < rhs - 1e-9)
                out.fail("subgradient inequality p=" + std::to_string(p) +
                         " q=" + std::to_string(q));
        }
    }

    // Finite-difference gradient match for smooth p, q > 1.
    for (auto [p, q] : std::vector<std::pair<double, double>>{{2, 2}, {3, 1.5}, {1.5, 2}}) {
        for (int trial = 0; trial < 10; ++trial) {
            const Matrix m = random_box_matrix(rng, 4, 5, -1, 1);
            const Matrix g = schatten_power_subgradient(m, p, q);
            Matrix probe = m;
            for (Eigen::Index i = 0; i < 4 && out.ok; ++i)
                for (Eigen::Index j = 0; j < 5; ++j) {
                    const double orig = probe(i, j);
                    probe(i, j) = orig + 1e-6;
                    const double up = std::pow(schatten_norm(probe, p), q);
                    probe(i, j) = orig - 1e-6;
                    const double down = std::pow(schatten_norm(probe, p), q);
                    probe(i, j) = orig;
                    if (std::abs(g(i, j) - (up - down) / 2e-6) > 1e-4) {
                        out.fail("finite differences p=" + std::to_string(p));
                        break;
                    }
                }
        }
    }

    // Sinkhorn projection feasibility and idempotence.
    for (int trial = 0; trial < 20; ++trial) {
        const Matrix m = random_box_matrix(rng, 5, 6, 0.05, 1.0);
        Vector a(5), b(6);
        for (int i = 0; i < 5; ++i) a[i] = uniform_in(rng, 0.1, 1.0);
        for (int j = 0; j < 6; ++j) b[j] = uniform_in(rng, 0.1, 1.0);
        a /= a.sum();
        b /= b.sum();
        auto proj = kl_project(m, a, b, 5000, 1e-12);
        if (proj.marginal_error > 1e-12) out.fail("Sinkhorn feasibility");
        auto again = kl_project(proj.coupling.plan, a, b, 5000, 1e-12);
        if ((again.coupling.plan - proj.coupling.plan).cwiseAbs().maxCoeff() > 1e-9)
            out.fail("Sinkhorn idempotence");
    }

    // Rounding exact feasibility, including zero-row inputs.
    for (int trial = 0; trial < 20; ++trial) {
        Matrix p = random_box_matrix(rng, 4, 5, 0.0, 1.0);
        p.row(trial % 4).setZero();
        Vector a = Vector::Constant(4, 0.25);
        Vector b = Vector::Constant(5, 0.2);
        auto rounded = round_to_polytope(p, a, b);
        if (rounded.error() > 1e-12 * 5) out.fail("rounding feasibility");
        if ((rounded.plan.array() < 0).any()) out.fail("rounding negativity");
    }

    out.detail = out.ok ? "all property suites green" : out.detail;
    return out;
}

// ---------------------------------------------------------------------------
// Criterion 7: qualitative effective-rank-vs-lambda reproduction.
// ---------------------------------------------------------------------------
Outcome criterion_figure1() {
    Outcome out;
    const std::vector<double> lambdas = {0, 0.5, 1, 2, 4, 8, 16, 32};
    const int n_seeds = 5;

    std::vector<double> mean_rank(lambdas.size(), 0.0);
    std::vector<double> mean_cost(lambdas.size(), 0.0);
    for (int seed = 0; seed < n_seeds; ++seed) {
        auto source = gen_gaussian_mixture(centers2(-2, 2, -2), 0.04, 10,
                                           std::uint64_t(1000 + 2 * seed));
        auto target = gen_gaussian_mixture(centers2(2, 2, -2), 0.04, 10,
                                           std::uint64_t(1001 + 2 * seed));
        for (std::size_t li = 0; li < lambdas.size(); ++li) {
            std::vector<RegularizerTerm> terms;
            terms.emplace_back(lambdas[li], 1.0, 1.0,
                               AffineCouplingMap(MapKind::Identity, source, target));
            Problem problem = make_problem(source, target, std::move(terms));

            SolverOptions opts;
            opts.schedule = StepSchedule::Geometric;
            opts.eta0 = 1.0;
            opts.ratio = 0.98;
            opts.max_outer_iters = 300;
            auto report = solve(problem, opts);
            mean_rank[li] += effective_rank(report.final.plan) / n_seeds;
            mean_cost[li] +=
                problem.cost.entries.cwiseProduct(report.final.plan).sum() / n_seeds;
        }
    }

    for (std::size_t li = 1; li < lambdas.size(); ++li)
        if (mean_rank[li] > mean_rank[li - 1] + 0.1)
            out.fail("rank curve increases at lambda " + std::to_string(lambdas[li]));

    bool reached = false;
    for (std::size_t li = 0; li < lambdas.size(); ++li)
        if (mean_rank[li] <= 2.2 && mean_cost[li] <= 1.5 * mean_cost[0]) reached = true;
    if (!reached) out.fail("never reached rank <= 2.2 within 1.5x the lambda=0 cost");

    std::snprintf(buffer, sizeof(buffer),
                  "rank %.2f -> %.2f across the sweep, final cost ratio %.3f",
                  mean_rank.front(), mean_rank.back(), mean_cost.back() / mean_cost[0]);
    out.detail = out.ok ? buffer : out.detail;
    return out;
}

} // namespace

int main() {
    struct Entry {
        int id;
        const char* name;
        Outcome (*run)();
    };
    const std::vector<Entry> criteria = {
        {1, "Theorem-3 recovery", criterion_theorem3},
        {2, "Theorem-4 recovery", criterion_theorem4},
        {3, "exact-LP agreement", criterion_lp_agreement},
        {4, "Gaussian closed forms", criterion_gaussian},
        {5, "convergence regimes", criterion_convergence},
        {6, "property suites", criterion_properties},
        {7, "qualitative rank-vs-lambda sweep", criterion_figure1},
    };

    int failures = 0;
    for (const auto& entry : criteria) {
        const auto t0 = Clock::now();
        Outcome outcome;
        try {
            outcome = entry.run();
        } catch (const std::exception& e) {
            outcome.ok = false;
            outcome.detail = std::string("exception: ") + e.what();
        }
        std::printf("[%s] criterion %d — %s (%s) [%.1f s]\n", outcome.ok ? "PASS" : "FAIL",
                    entry.id, entry.name, outcome.detail.c_str(), seconds_since(t0));
        std::fflush(stdout);
        if (!outcome.ok) ++failures;
    }
    if (failures) std::printf("%d criterion(s) failed\n", failures);
    return failures == 0 ? 0 : 1;
}
