#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

namespace sot {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Error taxonomy. Everything user-facing throws one of these so callers
// (CLI, tests) can map failures to exit codes and messages.

/// Malformed or inconsistent input data (bad CSV row, non-finite value).
struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Dimension or shape disagreement between operands.
struct ShapeError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// Parameter outside its documented domain.
struct ArgumentError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// Synthetic instance parameters violate the required geometry.
struct GenerationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// NaN/Inf or other floating-point breakdown mid-computation.
struct NumericalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Problem size exceeds a desk-scale guard.
struct CapacityError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Degenerate input (zero matrix where a nonzero one is required).
struct DegenerateInputError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// Experiment configuration problem; message carries the field path.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// The project-wide seeded generator. All synthetic data flows through
/// this one engine type so a recorded seed reproduces a run bit-for-bit
/// on the same build.
using Rng = std::mt19937_64;

inline Rng make_rng(std::uint64_t seed) { return Rng(seed); }

/// Uniform draw from [lo, hi].
inline double uniform_in(Rng& rng, double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
}

/// Standard normal draw.
inline double standard_normal(Rng& rng) {
    return std::normal_distribution<double>(0.0, 1.0)(rng);
}

/// Random d-vector with i.i.d. standard normal entries.
inline Vector gaussian_vector(Rng& rng, Eigen::Index d) {
    Vector v(d);
    for (Eigen::Index i = 0; i < d; ++i) v[i] = standard_normal(rng);
    return v;
}

inline void require(bool cond, const std::string& msg) {
    if (!cond) throw ArgumentError(msg);
}

} // namespace sot
