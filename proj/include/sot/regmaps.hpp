#pragma once

#include "sot/common.hpp"
#include "sot/measures.hpp"
#include "sot/schatten.hpp"

#include <cmath>
#include <string>

namespace sot {

enum class MapKind {
    Identity,
    BarycentricMap,
    BarycentricDisplacement,
    ElasticL1Diag,
    SubspaceElastic,
    CrossCovariance,
    DisplacementCovariance,
};

inline std::string map_kind_name(MapKind k) {
    switch (k) {
        case MapKind::Identity: return "identity";
        case MapKind::BarycentricMap: return "barycentric_map";
        case MapKind::BarycentricDisplacement: return "barycentric_displacement";
        case MapKind::ElasticL1Diag: return "elastic_l1_diag";
        case MapKind::SubspaceElastic: return "subspace_elastic";
        case MapKind::CrossCovariance: return "cross_covariance";
        case MapKind::DisplacementCovariance: return "displacement_covariance";
    }
    return "unknown";
}

inline MapKind map_kind_from_name(const std::string& name) {
    if (name == "identity") return MapKind::Identity;
    if (name == "barycentric_map") return MapKind::BarycentricMap;
    if (name == "barycentric_displacement") return MapKind::BarycentricDisplacement;
    if (name == "elastic_l1_diag") return MapKind::ElasticL1Diag;
    if (name == "subspace_elastic") return MapKind::SubspaceElastic;
    if (name == "cross_covariance") return MapKind::CrossCovariance;
    if (name == "displacement_covariance") return MapKind::DisplacementCovariance;
    throw ArgumentError("unknown map kind: " + name);
}

/// Image of an affine coupling map. Elastic kinds produce a diagonal
/// matrix of dimension d*m*n which is never materialized; only its
/// diagonal vector is stored and Schatten norms reduce to vector
/// l_p norms of it.
struct MapImage {
    Matrix dense;  // used when !diagonal
    Vector diag;   // used when diagonal
    bool diagonal = false;

    static MapImage from_dense(Matrix m) {
        MapImage img;
        img.dense = std::move(m);
        return img;
    }
    static MapImage from_diagonal(Vector d) {
        MapImage img;
        img.diag = std::move(d);
        img.diagonal = true;
        return img;
    }

    double schatten_norm(double p) const {
        return diagonal ? vector_lp_norm(diag, p) : sot::schatten_norm(dense, p);
    }

    double effective_rank() const {
        return diagonal ? effective_rank_of_diagonal(diag) : sot::effective_rank(dense);
    }

    /// U Sigma^{p-1} V^T of the image; for a diagonal image this is
    /// diag(sign(v) |v|^{p-1}) with the same zero conventions as the
    /// dense path.
    MapImage norm_subgradient_core(double p) const {
        if (!diagonal) {
            const SvdFactors f = thin_svd(dense);
            return from_dense(f.u * detail::sigma_power(f.singular_values, p).asDiagonal() *
                              f.v.transpose());
        }
        Vector out = Vector::Zero(diag.size());
        const double top = diag.size() > 0 ? diag.cwiseAbs().maxCoeff() : 0.0;
        const double cut = 1e-12 * top;
        for (Eigen::Index i = 0; i < diag.size(); ++i) {
            const double s = std::abs(diag[i]);
            if (s == 0.0 || (p < 2.0 && s <= cut)) continue;
            const double mag = (p == 1.0) ? 1.0 : std::pow(s, p - 1.0);
            out[i] = diag[i] > 0 ? mag : -mag;
        }
        return from_diagonal(std::move(out));
    }

    bool is_zero() const {
        return diagonal ? (diag.size() == 0 || diag.cwiseAbs().maxCoeff() == 0.0)
                        : (dense.size() == 0 || dense.cwiseAbs().maxCoeff() == 0.0);
    }
};

/// Affine map A from couplings to matrices, with the exact adjoint of
/// its linear part. The offset (apply(0)) is carried separately so the
/// adjoint identity <A(P) - A(0), G> = <P, adjoint(G)> is exact.
class AffineCouplingMap {
public:
    AffineCouplingMap(MapKind kind, const DiscreteMeasure& source,
                      const DiscreteMeasure& target,
                      const Matrix& subspace_projection = Matrix())
        : kind_(kind),
          x_(source.points),
          y_(target.points),
          a_(source.weights) {
        if (source.dim() != target.dim())
            throw ShapeError("coupling map: measures have different dimensions");
        if (needs_inverse_weights() && (a_.array() <= 0).any())
            throw ArgumentError("coupling map: A^{-1/2} requires strictly positive weights");
        sqrt_a_ = a_.array().sqrt();
        if (kind_ == MapKind::SubspaceElastic) {
            q_proj_ = subspace_projection;
            validate_projection();
        } else if (subspace_projection.size() != 0) {
            throw ArgumentError("coupling map: projection only applies to subspace_elastic");
        }
    }

    MapKind kind() const { return kind_; }
    Eigen::Index rows() const { return x_.cols(); }
    Eigen::Index cols() const { return y_.cols(); }
    Eigen::Index dim() const { return x_.rows(); }

    std::pair<Eigen::Index, Eigen::Index> output_shape() const {
        const Eigen::Index d = dim(), m = rows(), n = cols();
        switch (kind_) {
            case MapKind::Identity: return {m, n};
            case MapKind::BarycentricMap:
            case MapKind::BarycentricDisplacement: return {d, m};
            case MapKind::ElasticL1Diag:
            case MapKind::SubspaceElastic: return {d * m * n, d * m * n};
            case MapKind::CrossCovariance:
            case MapKind::DisplacementCovariance: return {d, d};
        }
        return {0, 0};
    }

    MapImage apply(const Matrix& plan) const {
        check_plan(plan);
        switch (kind_) {
            case MapKind::Identity:
                return MapImage::from_dense(plan);
            case MapKind::BarycentricMap:
                // Y P^T A^{-1/2}
                return MapImage::from_dense(
                    (y_ * plan.transpose()) * inv_sqrt_a().asDiagonal());
            case MapKind::BarycentricDisplacement:
                // Y P^T A^{-1/2} - X A^{1/2}
                return MapImage::from_dense(
                    (y_ * plan.transpose()) * inv_sqrt_a().asDiagonal() -
                    x_ * sqrt_a_.asDiagonal());
            case MapKind::ElasticL1Diag:
            case MapKind::SubspaceElastic: {
                Vector diag(dim() * rows() * cols());
                for (Eigen::Index i = 0; i < rows(); ++i)
                    for (Eigen::Index j = 0; j < cols(); ++j)
                        diag.segment(block_offset(i, j), dim()) =
                            plan(i, j) * displacement(i, j);
                return MapImage::from_diagonal(std::move(diag));
            }
            case MapKind::CrossCovariance: {
                // sum_ij P_ij x_i y_j^T = X P Y^T
                return MapImage::from_dense(x_ * plan * y_.transpose());
            }
            case MapKind::DisplacementCovariance: {
                Matrix out = Matrix::Zero(dim(), dim());
                for (Eigen::Index i = 0; i < rows(); ++i)
                    for (Eigen::Index j = 0; j < cols(); ++j) {
                        const Vector delta = x_.col(i) - y_.col(j);
                        out += plan(i, j) * (delta * delta.transpose());
                    }
                return MapImage::from_dense(std::move(out));
            }
        }
        throw ArgumentError("coupling map: unknown kind");
    }

    /// Adjoint of the linear part; offsets vanish under the adjoint.
    Matrix adjoint(const MapImage& grad) const {
        const Eigen::Index m = rows(), n = cols();
        switch (kind_) {
            case MapKind::Identity:
                check_dense(grad, m, n);
                return grad.dense;
            case MapKind::BarycentricMap:
            case MapKind::BarycentricDisplacement:
                check_dense(grad, dim(), m);
                // <G, Y P^T A^{-1/2}> = <A^{-1/2} G^T Y, P>
                return inv_sqrt_a().asDiagonal() * grad.dense.transpose() * y_;
            case MapKind::ElasticL1Diag:
            case MapKind::SubspaceElastic: {
                if (!grad.diagonal || grad.diag.size() != dim() * m * n)
                    throw ShapeError("coupling map adjoint: diagonal gradient expected");
                Matrix out(m, n);
                for (Eigen::Index i = 0; i < m; ++i)
                    for (Eigen::Index j = 0; j < n; ++j)
                        out(i, j) = grad.diag.segment(block_offset(i, j), dim())
                                        .dot(displacement(i, j));
                return out;
            }
            case MapKind::CrossCovariance:
                check_dense(grad, dim(), dim());
                // adjoint(G)_ij = x_i^T G y_j
                return x_.transpose() * grad.dense * y_;
            case MapKind::DisplacementCovariance: {
                check_dense(grad, dim(), dim());
                Matrix out(m, n);
                for (Eigen::Index i = 0; i < m; ++i)
                    for (Eigen::Index j = 0; j < n; ++j) {
                        const Vector delta = x_.col(i) - y_.col(j);
                        out(i, j) = delta.dot(grad.dense * delta);
                    }
                return out;
            }
        }
        throw ArgumentError("coupling map: unknown kind");
    }

private:
    bool needs_inverse_weights() const {
        return kind_ == MapKind::BarycentricMap ||
               kind_ == MapKind::BarycentricDisplacement;
    }

    Vector inv_sqrt_a() const { return sqrt_a_.cwiseInverse(); }

    Eigen::Index block_offset(Eigen::Index i, Eigen::Index j) const {
        return (i * cols() + j) * dim();
    }

    Vector displacement(Eigen::Index i, Eigen::Index j) const {
        Vector delta = x_.col(i) - y_.col(j);
        if (kind_ == MapKind::SubspaceElastic) delta = q_proj_ * delta;
        return delta;
    }

    void check_plan(const Matrix& plan) const {
        if (plan.rows() != rows() || plan.cols() != cols())
            throw ShapeError("coupling map: plan shape does not match measures");
    }

    static void check_dense(const MapImage& g, Eigen::Index r, Eigen::Index c) {
        if (g.diagonal || g.dense.rows() != r || g.dense.cols() != c)
            throw ShapeError("coupling map adjoint: gradient shape mismatch");
    }

    void validate_projection() const {
        const Eigen::Index d = dim();
        if (q_proj_.rows() != d || q_proj_.cols() != d)
            throw ShapeError("subspace_elastic: projection must be d x d");
        if ((q_proj_ - q_proj_.transpose()).cwiseAbs().maxCoeff() > 1e-10)
            throw ArgumentError("subspace_elastic: projection must be symmetric");
        if ((q_proj_ * q_proj_ - q_proj_).cwiseAbs().maxCoeff() > 1e-8)
            throw ArgumentError("subspace_elastic: projection must be idempotent");
    }

    MapKind kind_;
    Matrix x_, y_;
    Vector a_, sqrt_a_;
    Matrix q_proj_;
};

/// One penalty term lambda * |A(P)|_{S_p}^q of the composite objective.
struct RegularizerTerm {
    double strength;  // lambda >= 0
    double schatten_p; // >= 1
    double exponent;   // q >= 1
    AffineCouplingMap map;

    RegularizerTerm(double lambda, double p, double q, AffineCouplingMap m)
        : strength(lambda), schatten_p(p), exponent(q), map(std::move(m)) {
        require(lambda >= 0, "regularizer: lambda must be nonnegative");
        require(p >= 1 && q >= 1, "regularizer: p, q >= 1 required (convex regime)");
    }

    double value(const Matrix& plan) const {
        if (strength == 0) return 0.0;
        return strength * std::pow(map.apply(plan).schatten_norm(schatten_p), exponent);
    }

    /// lambda * q |A(P)|^{q-p} A*(U Sigma^{p-1} V^T), pulled back to plan space.
    Matrix subgradient(const Matrix& plan) const {
        if (strength == 0) return Matrix::Zero(plan.rows(), plan.cols());
        const MapImage img = map.apply(plan);
        if (img.is_zero()) return Matrix::Zero(plan.rows(), plan.cols());
        double scale = strength * exponent;
        if (exponent != schatten_p)
            scale *= std::pow(img.schatten_norm(schatten_p), exponent - schatten_p);
        return scale * map.adjoint(img.norm_subgradient_core(schatten_p));
    }
};

} // namespace sot
