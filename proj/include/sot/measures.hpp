#pragma once

#include "sot/common.hpp"
#include "sot/csv.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace sot {

/// A weighted point cloud. Support points are the columns of `points`
/// (d rows, k columns); `weights` is a probability vector over them.
struct DiscreteMeasure {
    Matrix points;  // d x k
    Vector weights; // k

    DiscreteMeasure() = default;

    DiscreteMeasure(Matrix pts, Vector w)
        : points(std::move(pts)), weights(std::move(w)) {
        validate();
    }

    Eigen::Index dim() const { return points.rows(); }
    Eigen::Index size() const { return points.cols(); }

    void validate() const {
        if (weights.size() != points.cols())
            throw ShapeError("measure: weight count does not match point count");
        if (weights.size() == 0)
            throw DataError("measure: empty support");
        if ((weights.array() < 0).any())
            throw DataError("measure: negative weight");
        if (std::abs(weights.sum() - 1.0) > 1e-12)
            throw DataError("measure: weights do not sum to 1");
        if (!points.allFinite() || !weights.allFinite())
            throw DataError("measure: non-finite entry");
    }

    static DiscreteMeasure uniform(Matrix pts) {
        const Eigen::Index k = pts.cols();
        if (k == 0) throw DataError("measure: empty support");
        return DiscreteMeasure(std::move(pts), Vector::Constant(k, 1.0 / double(k)));
    }
};

/// Pairwise ground costs: entries[i][j] = |x_i - y_j|^exponent.
struct CostMatrix {
    Matrix entries; // m x n
    double exponent = 2.0;
};

enum class WeightMode { Uniform, ColumnNamed };

/// Loads a point cloud from CSV (one point per row, columns x0..x{d-1},
/// optional `weight` column when weight_mode is ColumnNamed).
inline DiscreteMeasure load_point_cloud(const std::string& path,
                                        WeightMode weight_mode = WeightMode::Uniform) {
    auto table = csv::read_table(path);
    if (table.rows.empty()) throw DataError("empty input: " + path);

    long weight_col = -1;
    if (weight_mode == WeightMode::ColumnNamed) {
        for (std::size_t c = 0; c < table.header.size(); ++c)
            if (table.header[c] == "weight") weight_col = long(c);
        if (weight_col < 0)
            throw DataError("no column named 'weight' in " + path);
    }

    const std::size_t ncols = table.rows.front().size();
    const std::size_t k = table.rows.size();
    const std::size_t d = weight_col >= 0 ? ncols - 1 : ncols;
    if (d == 0) throw DataError("no coordinate columns in " + path);

    Matrix pts(d, k);
    Vector w = Vector::Constant(k, 1.0 / double(k));
    for (std::size_t r = 0; r < k; ++r) {
        const auto& row = table.rows[r];
        std::size_t ci = 0;
        for (std::size_t c = 0; c < ncols; ++c) {
            if (!std::isfinite(row[c]))
                throw DataError("non-finite value at data row " + std::to_string(r + 1));
            if (long(c) == weight_col)
                w[long(r)] = row[c];
            else
                pts(long(ci++), long(r)) = row[c];
        }
    }
    if (weight_col >= 0) {
        if ((w.array() < 0).any()) throw DataError("negative weight in " + path);
        const double s = w.sum();
        if (s <= 0) throw DataError("weights sum to zero in " + path);
        w /= s;
    }
    return DiscreteMeasure(std::move(pts), std::move(w));
}

/// Builds the m x n cost matrix with entries |x_i - y_j|^exponent.
inline CostMatrix cost_matrix(const DiscreteMeasure& source,
                              const DiscreteMeasure& target,
                              double exponent = 2.0) {
    if (source.dim() != target.dim())
        throw ShapeError("cost_matrix: dimension mismatch between measures");
    require(exponent > 0, "cost_matrix: exponent must be positive");

    const Eigen::Index m = source.size(), n = target.size();
    Matrix c(m, n);
    for (Eigen::Index i = 0; i < m; ++i)
        for (Eigen::Index j = 0; j < n; ++j) {
            const double dist = (source.points.col(i) - target.points.col(j)).norm();
            c(i, j) = std::pow(dist, exponent);
        }
    return CostMatrix{std::move(c), exponent};
}

/// Index partition into R consecutive blocks of size g.
inline std::vector<std::vector<Eigen::Index>> consecutive_blocks(Eigen::Index R,
                                                                 Eigen::Index g) {
    std::vector<std::vector<Eigen::Index>> blocks(static_cast<std::size_t>(R));
    for (Eigen::Index t = 0; t < R; ++t)
        for (Eigen::Index i = 0; i < g; ++i)
            blocks[std::size_t(t)].push_back(t * g + i);
    return blocks;
}

enum class ClusterMode { Exact, Jitter };

/// Two clustered measures with a block-uniform ground-truth coupling.
/// In exact mode the within-cluster equal-distance condition holds by
/// construction (all g target points of cluster t coincide at d_t).
struct ClusteredInstance {
    DiscreteMeasure source;
    DiscreteMeasure target;
    std::vector<std::vector<Eigen::Index>> source_blocks;
    std::vector<std::vector<Eigen::Index>> target_blocks;
    Matrix ground_truth;        // block-uniform coupling in U(a,b)
    double lambda_window_upper; // g * Delta_min; +inf when R == 1
    double rho;
    bool certified; // true only in exact mode (equal distances hold exactly)

    Eigen::Index rank() const { return Eigen::Index(source_blocks.size()); }
    Eigen::Index block_size() const {
        return source_blocks.empty() ? 0 : Eigen::Index(source_blocks.front().size());
    }

    /// Re-checks the separation margin Gamma > gamma + 4 rho on the
    /// generated geometry, with cluster centers taken as block means.
    bool check_separation() const {
        const Eigen::Index R = rank();
        if (R <= 1) return true;
        std::vector<Vector> c(static_cast<std::size_t>(R)), d(static_cast<std::size_t>(R));
        double max_dev = 0.0;
        for (Eigen::Index t = 0; t < R; ++t) {
            Vector cs = Vector::Zero(source.dim());
            for (auto i : source_blocks[std::size_t(t)]) cs += source.points.col(i);
            cs /= double(source_blocks[std::size_t(t)].size());
            Vector ct = Vector::Zero(target.dim());
            for (auto j : target_blocks[std::size_t(t)]) ct += target.points.col(j);
            ct /= double(target_blocks[std::size_t(t)].size());
            for (auto i : source_blocks[std::size_t(t)])
                max_dev = std::max(max_dev, (source.points.col(i) - cs).norm());
            for (auto j : target_blocks[std::size_t(t)])
                max_dev = std::max(max_dev, (target.points.col(j) - ct).norm());
            c[std::size_t(t)] = cs;
            d[std::size_t(t)] = ct;
        }
        double big_gamma = std::numeric_limits<double>::infinity();
        double small_gamma = 0.0;
        for (Eigen::Index s = 0; s < R; ++s)
            for (Eigen::Index t = 0; t < R; ++t) {
                const double dist = (c[std::size_t(t)] - d[std::size_t(s)]).norm();
                if (s == t)
                    small_gamma = std::max(small_gamma, dist);
                else
                    big_gamma = std::min(big_gamma, dist);
            }
        return big_gamma > small_gamma + 4.0 * max_dev;
    }
};

/// Smallest excess cost of a cross-cluster match over a within-cluster
/// one, min over i in S_t, j in T_s (s != t), j' in T_t.
inline double min_cross_cluster_excess(
    const DiscreteMeasure& source, const DiscreteMeasure& target,
    const std::vector<std::vector<Eigen::Index>>& src_blocks,
    const std::vector<std::vector<Eigen::Index>>& tgt_blocks) {
    const Eigen::Index R = Eigen::Index(src_blocks.size());
    double best = std::numeric_limits<double>::infinity();
    for (Eigen::Index t = 0; t < R; ++t)
        for (auto i : src_blocks[std::size_t(t)])
            for (Eigen::Index s = 0; s < R; ++s) {
                if (s == t) continue;
                for (auto j : tgt_blocks[std::size_t(s)])
                    for (auto jp : tgt_blocks[std::size_t(t)]) {
                        const double out =
                            (source.points.col(i) - target.points.col(j)).squaredNorm();
                        const double in =
                            (source.points.col(i) - target.points.col(jp)).squaredNorm();
                        best = std::min(best, out - in);
                    }
            }
    return best;
}

/// Generates a clustered instance: R source clusters sampled inside
/// B(c_t, rho) along one fixed line, and R target clusters that are g
/// coincident copies of d_t (exact mode) or jittered copies (jitter mode).
inline ClusteredInstance gen_clustered_instance(
    Eigen::Index R, Eigen::Index g, const std::vector<Vector>& centers_c,
    const std::vector<Vector>& centers_d, double rho, ClusterMode mode,
    double jitter_sigma, std::uint64_t seed) {
    require(R >= 1 && g >= 1, "gen_clustered_instance: R and g must be >= 1");
    require(rho >= 0, "gen_clustered_instance: rho must be nonnegative");
    if (Eigen::Index(centers_c.size()) != R || Eigen::Index(centers_d.size()) != R)
        throw ShapeError("gen_clustered_instance: need R source and R target centers");
    const Eigen::Index d = centers_c.front().size();
    for (const auto& c : centers_c)
        if (c.size() != d) throw ShapeError("gen_clustered_instance: center dims differ");
    for (const auto& c : centers_d)
        if (c.size() != d) throw ShapeError("gen_clustered_instance: center dims differ");

    // Separation margin on the supplied centers.
    double small_gamma = 0.0;
    for (Eigen::Index t = 0; t < R; ++t)
        small_gamma = std::max(small_gamma,
                               (centers_c[std::size_t(t)] - centers_d[std::size_t(t)]).norm());
    for (Eigen::Index s = 0; s < R; ++s)
        for (Eigen::Index t = 0; t < R; ++t) {
            if (s == t) continue;
            const double gap =
                (centers_c[std::size_t(t)] - centers_d[std::size_t(s)]).norm();
            if (gap <= small_gamma + 4.0 * rho)
                throw GenerationError(
                    "separation violated for cluster pair (s=" + std::to_string(s) +
                    ", t=" + std::to_string(t) + "): Gamma <= gamma + 4 rho");
        }

    Rng rng = make_rng(seed);
    Vector line = gaussian_vector(rng, d);
    if (line.norm() == 0) line[0] = 1.0;
    line.normalize();

    const Eigen::Index m = R * g, n = R * g;
    Matrix xs(d, m), ys(d, n);
    for (Eigen::Index t = 0; t < R; ++t) {
        for (Eigen::Index i = 0; i < g; ++i) {
            const double off = rho > 0 ? uniform_in(rng, -rho, rho) : 0.0;
            xs.col(t * g + i) = centers_c[std::size_t(t)] + off * line;
        }
        for (Eigen::Index j = 0; j < g; ++j) {
            Vector y = centers_d[std::size_t(t)];
            if (mode == ClusterMode::Jitter && jitter_sigma > 0)
                y += jitter_sigma * gaussian_vector(rng, d);
            ys.col(t * g + j) = y;
        }
    }

    ClusteredInstance inst;
    inst.source = DiscreteMeasure::uniform(std::move(xs));
    inst.target = DiscreteMeasure::uniform(std::move(ys));
    inst.source_blocks = consecutive_blocks(R, g);
    inst.target_blocks = consecutive_blocks(R, g);
    inst.rho = rho;
    inst.certified = (mode == ClusterMode::Exact);

    // Block-uniform coupling: each row spreads its mass 1/m evenly over
    // the g matched targets.
    inst.ground_truth = Matrix::Zero(m, n);
    const double entry = 1.0 / (double(m) * double(g));
    for (Eigen::Index t = 0; t < R; ++t)
        for (auto i : inst.source_blocks[std::size_t(t)])
            for (auto j : inst.target_blocks[std::size_t(t)])
                inst.ground_truth(i, j) = entry;

    if (R == 1) {
        inst.lambda_window_upper = std::numeric_limits<double>::infinity();
    } else {
        const double delta_min = min_cross_cluster_excess(
            inst.source, inst.target, inst.source_blocks, inst.target_blocks);
        inst.lambda_window_upper = double(g) * delta_min;
    }
    return inst;
}

/// Symmetric two-target clusters: sources on a line through mu_t * u,
/// targets at m_t +/- eps * v with equal masses.
struct SymmetricPairsInstance {
    DiscreteMeasure source;
    DiscreteMeasure target; // columns ordered y_{1,+}, y_{1,-}, y_{2,+}, ...
    std::vector<std::vector<Eigen::Index>> source_blocks;
    Vector u, v;        // orthonormal directions
    Vector cluster_mu;  // increasing scalars mu_1 < ... < mu_R
    Vector offsets;     // xi_i per source point
    double epsilon;
    double rho;
    double lambda_max;  // Lambda - 2 rho
    Matrix ground_truth; // equal split within clusters

    Eigen::Index rank() const { return cluster_mu.size(); }
    Eigen::Index target_plus(Eigen::Index t) const { return 2 * t; }
    Eigen::Index target_minus(Eigen::Index t) const { return 2 * t + 1; }

    bool check_margin() const {
        const Eigen::Index R = rank();
        double lam = std::numeric_limits<double>::infinity();
        for (Eigen::Index s = 0; s < R; ++s)
            for (Eigen::Index t = s + 1; t < R; ++t)
                lam = std::min(lam, std::abs(cluster_mu[t] - cluster_mu[s]));
        return lam > 2.0 * rho;
    }
};

inline SymmetricPairsInstance gen_symmetric_pairs_instance(
    Eigen::Index R, const std::vector<Eigen::Index>& cluster_sizes,
    const std::vector<double>& mu, double epsilon, double rho,
    Eigen::Index dim, std::uint64_t seed) {
    require(R >= 2, "gen_symmetric_pairs_instance: R must be >= 2");
    require(epsilon > 0, "gen_symmetric_pairs_instance: epsilon must be positive");
    require(rho >= 0, "gen_symmetric_pairs_instance: rho must be nonnegative");
    require(dim >= 2, "gen_symmetric_pairs_instance: dimension must be >= 2");
    if (Eigen::Index(cluster_sizes.size()) != R || Eigen::Index(mu.size()) != R)
        throw ShapeError("gen_symmetric_pairs_instance: need R cluster sizes and scalars");
    for (Eigen::Index t = 0; t + 1 < R; ++t)
        require(mu[std::size_t(t)] < mu[std::size_t(t + 1)],
                "gen_symmetric_pairs_instance: cluster scalars must be increasing");

    double lam = std::numeric_limits<double>::infinity();
    for (Eigen::Index s = 0; s < R; ++s)
        for (Eigen::Index t = s + 1; t < R; ++t)
            lam = std::min(lam, mu[std::size_t(t)] - mu[std::size_t(s)]);
    if (!(lam > 2.0 * rho))
        throw GenerationError("gen_symmetric_pairs_instance: Lambda <= 2 rho");

    Rng rng = make_rng(seed);
    Vector u = gaussian_vector(rng, dim).normalized();
    Vector v = gaussian_vector(rng, dim);
    v -= v.dot(u) * u;
    while (v.norm() < 1e-12) {
        v = gaussian_vector(rng, dim);
        v -= v.dot(u) * u;
    }
    v.normalize();

    Eigen::Index m = 0;
    for (auto s : cluster_sizes) {
        require(s >= 1, "gen_symmetric_pairs_instance: cluster sizes must be >= 1");
        m += s;
    }
    const Eigen::Index n = 2 * R;

    Matrix xs(dim, m), ys(dim, n);
    Vector offsets(m);
    std::vector<std::vector<Eigen::Index>> blocks(static_cast<std::size_t>(R));
    Vector a = Vector::Constant(m, 1.0 / double(m));
    Vector b(n);

    Eigen::Index idx = 0;
    for (Eigen::Index t = 0; t < R; ++t) {
        const Vector mt = mu[std::size_t(t)] * u;
        double mass_t = 0.0;
        for (Eigen::Index i = 0; i < cluster_sizes[std::size_t(t)]; ++i) {
            const double xi = rho > 0 ? uniform_in(rng, -rho, rho) : 0.0;
            xs.col(idx) = mt + xi * u;
            offsets[idx] = xi;
            blocks[std::size_t(t)].push_back(idx);
            mass_t += a[idx];
            ++idx;
        }
        ys.col(2 * t) = mt + epsilon * v;
        ys.col(2 * t + 1) = mt - epsilon * v;
        b[2 * t] = 0.5 * mass_t;
        b[2 * t + 1] = 0.5 * mass_t;
    }

    SymmetricPairsInstance inst;
    inst.source = DiscreteMeasure(std::move(xs), std::move(a));
    inst.target = DiscreteMeasure(std::move(ys), std::move(b));
    inst.source_blocks = std::move(blocks);
    inst.u = std::move(u);
    inst.v = std::move(v);
    inst.cluster_mu = Eigen::Map<const Vector>(mu.data(), Eigen::Index(mu.size()));
    inst.offsets = std::move(offsets);
    inst.epsilon = epsilon;
    inst.rho = rho;
    inst.lambda_max = lam - 2.0 * rho;

    inst.ground_truth = Matrix::Zero(m, n);
    for (Eigen::Index t = 0; t < R; ++t)
        for (auto i : inst.source_blocks[std::size_t(t)]) {
            inst.ground_truth(i, 2 * t) = 0.5 * inst.source.weights[i];
            inst.ground_truth(i, 2 * t + 1) = 0.5 * inst.source.weights[i];
        }
    return inst;
}

/// Isotropic Gaussian blobs around the given centers, uniform weights.
/// `variance` is per coordinate.
inline DiscreteMeasure gen_gaussian_mixture(const std::vector<Vector>& centers,
                                            double variance,
                                            Eigen::Index points_per_cluster,
                                            std::uint64_t seed) {
    require(variance >= 0, "gen_gaussian_mixture: variance must be nonnegative");
    require(points_per_cluster >= 1, "gen_gaussian_mixture: need at least one point");
    if (centers.empty()) throw ArgumentError("gen_gaussian_mixture: no centers");
    const Eigen::Index d = centers.front().size();
    for (const auto& c : centers)
        if (c.size() != d) throw ShapeError("gen_gaussian_mixture: center dims differ");

    Rng rng = make_rng(seed);
    const double stddev = std::sqrt(variance);
    const Eigen::Index k = Eigen::Index(centers.size()) * points_per_cluster;
    Matrix pts(d, k);
    Eigen::Index idx = 0;
    for (const auto& c : centers)
        for (Eigen::Index i = 0; i < points_per_cluster; ++i) {
            Vector p = c;
            if (stddev > 0) p += stddev * gaussian_vector(rng, d);
            pts.col(idx++) = p;
        }
    return DiscreteMeasure::uniform(std::move(pts));
}

} // namespace sot
