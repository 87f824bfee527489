#pragma once

#include "netlump/types.hpp"

namespace netlump {

/// Composite Simpson rule over [0,1] for row-vector samples at uniform nodes.
/// Requires an even, positive number of cells; exact for cubics.
template <typename Derived>
typename Derived::Scalar simpson(const Eigen::DenseBase<Derived>& samples) {
    using Scalar = typename Derived::Scalar;
    const Index n = samples.size() - 1;
    if (n < 2 || n % 2 != 0)
        throw ValidationError("Simpson quadrature needs an even cell count >= 2");
    Scalar odd = 0, even = 0;
    for (Index i = 1; i < n; i += 2) odd += samples(i);
    for (Index i = 2; i < n; i += 2) even += samples(i);
    const Scalar h = Scalar(1) / static_cast<Scalar>(n);
    return h / Scalar(3) * (samples(0) + samples(n) + Scalar(4) * odd + Scalar(2) * even);
}

/// Trapezoid rule over [0,1] for row-vector samples at uniform nodes.
template <typename Derived>
typename Derived::Scalar trapezoid(const Eigen::DenseBase<Derived>& samples) {
    using Scalar = typename Derived::Scalar;
    const Index n = samples.size() - 1;
    if (n < 1) throw ValidationError("trapezoid quadrature needs at least one cell");
    Scalar sum = (samples(0) + samples(n)) / Scalar(2);
    for (Index i = 1; i < n; ++i) sum += samples(i);
    return sum / static_cast<Scalar>(n);
}

/// Integral of u over one edge (composite Simpson).
template <typename Scalar>
Scalar integrate_edge(const GridFunctionT<Scalar>& u, Index edge) {
    if (edge < 0 || edge >= u.edges()) throw ValidationError("integrate_edge: edge index out of range");
    return simpson(u.values().row(edge));
}

/// Edge totals (int_0^1 u_j dx)_j, the aggregated state of u.
template <typename Scalar>
VectorX<Scalar> project_average(const GridFunctionT<Scalar>& u) {
    VectorX<Scalar> v(u.edges());
    for (Index j = 0; j < u.edges(); ++j) v(j) = integrate_edge(u, j);
    return v;
}

/// sum_j int_0^1 |u_j| dx, trapezoid on |samples|. Trapezoid rather than
/// Simpson: |u| is only piecewise smooth at sign changes.
template <typename Scalar>
Scalar norm_l1(const GridFunctionT<Scalar>& u) {
    Scalar sum = 0;
    for (Index j = 0; j < u.edges(); ++j) sum += trapezoid(u.values().row(j).cwiseAbs());
    return sum;
}

/// max over all nodes and edges of |u_j(x_i)|.
template <typename Scalar>
Scalar norm_sup(const GridFunctionT<Scalar>& u) {
    return u.values().cwiseAbs().maxCoeff();
}

}  // namespace netlump
