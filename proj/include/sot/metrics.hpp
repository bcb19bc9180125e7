#pragma once

#include "sot/common.hpp"
#include "sot/polytope.hpp"
#include "sot/schatten.hpp"
#include "sot/solver.hpp"

#include <optional>
#include <vector>

namespace sot {

/// Solution-quality summary for one coupling.
struct QualityReport {
    double transport_cost = 0.0;
    double effective_rank_coupling = 1.0;
    std::optional<double> effective_rank_map_image; // first regularizer term
    std::vector<double> effective_rank_map_images;  // all terms, in order
    double marginal_error = 0.0;
    long support_size = 0; // entries above 1e-10
};

inline QualityReport evaluate(const Problem& problem, const Matrix& plan) {
    if (plan.rows() != problem.rows() || plan.cols() != problem.cols())
        throw ShapeError("evaluate: plan shape mismatch");
    if (plan.cwiseAbs().maxCoeff() == 0.0)
        throw DegenerateInputError("evaluate: zero coupling");
    const double err = sot::marginal_error(plan, problem.a, problem.b);
    if (err > 1e-6)
        throw ArgumentError("evaluate: coupling is not feasible to 1e-6");

    QualityReport report;
    report.transport_cost = problem.cost.entries.cwiseProduct(plan).sum();
    report.effective_rank_coupling = effective_rank(plan);
    report.marginal_error = err;
    report.support_size = (plan.array() > 1e-10).count();
    for (const auto& term : problem.terms) {
        const MapImage img = term.map.apply(plan);
        // A zero image (e.g. zero displacement) has no spectrum to rank.
        report.effective_rank_map_images.push_back(img.is_zero() ? 0.0
                                                                 : img.effective_rank());
    }
    if (!report.effective_rank_map_images.empty())
        report.effective_rank_map_image = report.effective_rank_map_images.front();
    return report;
}

} // namespace sot
