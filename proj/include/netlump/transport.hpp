#pragma once

#include "netlump/coupling.hpp"
#include "netlump/matfun.hpp"
#include "netlump/quadrature.hpp"
#include "netlump/types.hpp"

#include <cmath>
#include <functional>
#include <vector>

namespace netlump {

/// Fast transport on the network:
///   du/dt = -(1/eps) du/dx on each edge, u(0,t) = (I + eps B) u(1,t).
/// Initial data may additionally carry exact per-edge profiles; when present
/// they replace linear interpolation of the u0 samples.
struct TransportProblem {
    TransportCoupling coupling;
    double eps = 1.0;
    GridFunction u0;
    double t_final = 1.0;
    std::vector<std::function<double(double)>> profiles;  // optional, one per edge

    void validate() const {
        coupling.validate();
        u0.require_finite("TransportProblem initial data");
        if (coupling.edges() != u0.edges())
            throw ValidationError("TransportProblem: coupling dimension does not match initial data");
        if (!(eps > 0.0)) throw ValidationError("TransportProblem: eps must be positive");
        if (!profiles.empty() && static_cast<Index>(profiles.size()) != u0.edges())
            throw ValidationError("TransportProblem: profile count must match edge count");
    }

    double initial_value(Index edge, double x) const {
        if (!profiles.empty()) return profiles[static_cast<size_t>(edge)](x);
        return sample_linear(u0, edge, x);
    }
};

/// Characteristics evaluation of the transport semigroup: at node x the value
/// is (I + eps B)^n u0(n + x - t/eps) with n = ceil(t/eps - x) crossings,
/// clamped to n >= 0. At integer t/eps - x the smaller branch is taken, which
/// keeps the map right-continuous in x and the t = 0 evaluation exact.
inline GridFunction transport_exact(const TransportProblem& p, double t) {
    p.validate();
    if (!(t >= 0.0)) throw ValidationError("transport_exact: t must be nonnegative");
    const Index m = p.u0.edges(), n_cells = p.u0.cells();
    const double c = t / p.eps;
    const Matrix t_eps = p.coupling.boundary_matrix(p.eps);

    GridFunction out(m, n_cells);
    long long cached_n = -1;
    Matrix power;
    Vector data(m);
    for (Index i = 0; i <= n_cells; ++i) {
        const double x = static_cast<double>(i) / static_cast<double>(n_cells);
        long long crossings = static_cast<long long>(std::ceil(c - x));
        if (crossings < 0) crossings = 0;
        double arg = static_cast<double>(crossings) - c + x;
        arg = std::min(std::max(arg, 0.0), 1.0);
        if (crossings != cached_n) {
            power = matrix_power(t_eps, static_cast<unsigned long long>(crossings));
            cached_n = crossings;
        }
        for (Index j = 0; j < m; ++j) data(j) = p.initial_value(j, arg);
        out.values().col(i) = power * data;
    }
    return out;
}

/// Edge totals of the evolved solution, integrating the piecewise-linear
/// interpolant of u0 exactly. With a column-stochastic boundary matrix this
/// conserves total mass to rounding error.
inline Vector transport_projected(const TransportProblem& p, double t) {
    p.validate();
    if (!(t >= 0.0)) throw ValidationError("transport_projected: t must be nonnegative");
    const Index m = p.u0.edges(), n = p.u0.cells();
    const double c = t / p.eps;
    const double k_floor = std::floor(c);
    const double phi = c - k_floor;
    const auto k = static_cast<unsigned long long>(k_floor);

    // Prefix integral of the interpolant: I(a) = int_0^a u0, per edge.
    auto prefix_integral = [&](double a) {
        Vector result = Vector::Zero(m);
        if (a <= 0.0) return result;
        a = std::min(a, 1.0);
        const double h = 1.0 / static_cast<double>(n);
        const auto full = static_cast<Index>(std::floor(a * n + 1e-12));
        for (Index i = 0; i < std::min(full, n); ++i)
            result += 0.5 * h * (p.u0.values().col(i) + p.u0.values().col(i + 1));
        const double x_full = static_cast<double>(std::min(full, n)) / static_cast<double>(n);
        const double delta = a - x_full;
        if (delta > 0.0 && full < n) {
            const double theta = delta / h;
            const Vector left = p.u0.values().col(full);
            const Vector right = (1.0 - theta) * left + theta * p.u0.values().col(full + 1);
            result += 0.5 * delta * (left + right);
        }
        return result;
    };

    const Matrix t_eps = p.coupling.boundary_matrix(p.eps);
    const Matrix t_k = matrix_power(t_eps, k);
    const Vector lower = prefix_integral(1.0 - phi);
    const Vector upper = prefix_integral(1.0) - lower;
    return t_k * (lower + t_eps * upper);
}

/// First-order upwind cross-check with dt = cfl * eps * dx; the inflow node is
/// refreshed from the outflow node through (I + eps B) after every step.
inline GridFunction transport_upwind(const TransportProblem& p, double t, Index n_cells, double cfl) {
    p.validate();
    if (!(t >= 0.0)) throw ValidationError("transport_upwind: t must be nonnegative");
    if (!(cfl > 0.0 && cfl <= 1.0)) throw ValidationError("transport_upwind: cfl must be in (0,1]");
    if (n_cells < 1) throw ValidationError("transport_upwind: need at least one cell");

    const Index m = p.u0.edges();
    const double h = 1.0 / static_cast<double>(n_cells);
    const double dt = cfl * p.eps * h;
    const double steps_needed = t / dt;
    constexpr double max_steps = 2e8;
    if (steps_needed > max_steps)
        throw NumericalError("transport_upwind: step count overflow, would need " +
                             std::to_string(steps_needed) + " steps");

    Matrix u(m, n_cells + 1);
    for (Index j = 0; j < m; ++j)
        for (Index i = 0; i <= n_cells; ++i)
            u(j, i) = p.initial_value(j, static_cast<double>(i) / static_cast<double>(n_cells));

    const Matrix t_eps = p.coupling.boundary_matrix(p.eps);
    double elapsed = 0.0;
    while (elapsed < t - 1e-15 * std::max(1.0, t)) {
        const double step = std::min(dt, t - elapsed);
        const double nu = step / (p.eps * h);
        u.rightCols(n_cells) =
            ((1.0 - nu) * u.rightCols(n_cells) + nu * u.leftCols(n_cells)).eval();
        u.col(0) = t_eps * u.col(n_cells);
        elapsed += step;
    }
    return GridFunction(u);
}

/// Splitting of the stochastic-boundary pitfall: total mass rho, stationary
/// edge distribution N, and the zero-total kinetic remainder u0 - rho N.
struct StochasticDecomposition {
    double rho = 0.0;
    Vector stationary;
    GridFunction layer0;
};

inline StochasticDecomposition stochastic_decomposition(const Matrix& t, const GridFunction& u0) {
    const Vector n = perron_vector(t);
    if (n.size() != u0.edges())
        throw ValidationError("stochastic_decomposition: dimension mismatch");
    const double rho = project_average(u0).sum();
    const GridFunction layer = u0 - GridFunction::from_constant((rho * n).eval(), u0.cells());
    return {rho, n, layer};
}

}  // namespace netlump
