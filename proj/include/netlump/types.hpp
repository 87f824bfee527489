#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdlib>
#include <stdexcept>
#include <string>

namespace netlump {

using Index = Eigen::Index;

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using Matrix = MatrixX<double>;
using Vector = VectorX<double>;

/// Invalid inputs, malformed configs, violated preconditions.
class ValidationError : public std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// Failures inside a solver (singular systems, step-count overflow, ...).
class NumericalError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

namespace detail {
inline double& structural_tolerance_storage() {
    static double tol = [] {
        if (const char* env = std::getenv("NETLUMP_TOL")) {
            const double v = std::atof(env);
            if (v > 0.0) return v;
        }
        return 1e-12;
    }();
    return tol;
}
}  // namespace detail

/// Tolerance used for exact-zero structural conditions (Markov sums,
/// Kolmogorov column sums, rate bookkeeping). Defaults to 1e-12 and can be
/// overridden by the NETLUMP_TOL environment variable or set_structural_tolerance().
inline double structural_tolerance() { return detail::structural_tolerance_storage(); }
inline void set_structural_tolerance(double tol) {
    if (!(tol > 0.0)) throw ValidationError("structural tolerance must be positive");
    detail::structural_tolerance_storage() = tol;
}

/// Vector-valued function u : [0,1] -> R^m sampled at the uniform nodes
/// x_i = i / cells. One row per edge, cells+1 samples per row.
template <typename Scalar>
class GridFunctionT {
public:
    GridFunctionT() = default;

    GridFunctionT(Index edges, Index cells)
        : values_(MatrixX<Scalar>::Zero(edges, cells + 1)) {
        if (edges < 1 || cells < 1)
            throw ValidationError("GridFunction requires at least one edge and one cell");
    }

    template <typename Derived>
    explicit GridFunctionT(const Eigen::MatrixBase<Derived>& samples) : values_(samples) {
        if (values_.rows() < 1 || values_.cols() < 2)
            throw ValidationError("GridFunction samples must be m x (cells+1) with cells >= 1");
    }

    /// Sample a callable profile(edge, x) on the node grid.
    template <typename Profile>
    static GridFunctionT from_profile(Index edges, Index cells, Profile&& profile) {
        GridFunctionT u(edges, cells);
        for (Index j = 0; j < edges; ++j)
            for (Index i = 0; i <= cells; ++i)
                u.values_(j, i) = profile(j, static_cast<Scalar>(i) / static_cast<Scalar>(cells));
        return u;
    }

    /// Constant-in-x function with per-edge values c.
    static GridFunctionT from_constant(const VectorX<Scalar>& c, Index cells) {
        GridFunctionT u(c.size(), cells);
        u.values_.colwise() = c;
        return u;
    }

    Index edges() const { return values_.rows(); }
    Index cells() const { return values_.cols() - 1; }
    Scalar dx() const { return Scalar(1) / static_cast<Scalar>(cells()); }
    Scalar node(Index i) const { return static_cast<Scalar>(i) / static_cast<Scalar>(cells()); }

    Scalar operator()(Index edge, Index i) const { return values_(edge, i); }
    Scalar& operator()(Index edge, Index i) { return values_(edge, i); }

    const MatrixX<Scalar>& values() const { return values_; }
    MatrixX<Scalar>& values() { return values_; }

    bool all_finite() const { return values_.allFinite(); }

    void require_finite(const char* what = "GridFunction") const {
        if (!all_finite())
            throw ValidationError(std::string(what) + " contains non-finite samples");
    }

private:
    MatrixX<Scalar> values_;
};

using GridFunction = GridFunctionT<double>;

template <typename Scalar>
GridFunctionT<Scalar> operator+(const GridFunctionT<Scalar>& a, const GridFunctionT<Scalar>& b) {
    return GridFunctionT<Scalar>(a.values() + b.values());
}

template <typename Scalar>
GridFunctionT<Scalar> operator-(const GridFunctionT<Scalar>& a, const GridFunctionT<Scalar>& b) {
    return GridFunctionT<Scalar>(a.values() - b.values());
}

template <typename Scalar>
GridFunctionT<Scalar> operator*(Scalar s, const GridFunctionT<Scalar>& u) {
    return GridFunctionT<Scalar>(s * u.values());
}

/// Piecewise-linear evaluation of one edge at an arbitrary x in [0,1].
template <typename Scalar>
Scalar sample_linear(const GridFunctionT<Scalar>& u, Index edge, Scalar x) {
    const Index n = u.cells();
    if (x <= Scalar(0)) return u(edge, 0);
    if (x >= Scalar(1)) return u(edge, n);
    const Scalar pos = x * static_cast<Scalar>(n);
    Index i = static_cast<Index>(pos);
    if (i >= n) i = n - 1;
    const Scalar theta = pos - static_cast<Scalar>(i);
    // Snap arguments that are nodes up to rounding, so exact shifts stay exact.
    if (theta < Scalar(1e-9)) return u(edge, i);
    if (theta > Scalar(1) - Scalar(1e-9)) return u(edge, i + 1);
    return (Scalar(1) - theta) * u(edge, i) + theta * u(edge, i + 1);
}

}  // namespace netlump
