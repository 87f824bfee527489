#pragma once

#include "netlump/coupling.hpp"
#include "netlump/quadrature.hpp"
#include "netlump/types.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include <algorithm>
#include <vector>

namespace netlump {

/// Fast-diffusion network problem
///   du/dt = (1/eps) d2u/dx2 on each edge,
///   du/dx(0) = eps (k00 u(0) + k01 u(1)),
///   du/dx(1) = eps (k10 u(0) + k11 u(1)),
/// with initial data u0. The grid of u0 fixes the spatial resolution.
struct DiffusionProblem {
    DiffusionCoupling coupling;
    double eps = 1.0;
    GridFunction u0;
    double t_final = 1.0;
    double dt = 0.0;  // time-step target; 0 selects 1e-3 * t_final

    double dt_target() const { return dt > 0.0 ? dt : 1e-3 * t_final; }

    void validate() const {
        coupling.validate();
        u0.require_finite("DiffusionProblem initial data");
        if (coupling.edges() != u0.edges())
            throw ValidationError("DiffusionProblem: coupling dimension does not match initial data");
        if (!(eps > 0.0)) throw ValidationError("DiffusionProblem: eps must be positive");
        if (!(t_final >= 0.0)) throw ValidationError("DiffusionProblem: t_final must be nonnegative");
        if (dt < 0.0) throw ValidationError("DiffusionProblem: dt must be positive when given");
    }
};

struct DiffusionTrajectory {
    std::vector<double> times;
    std::vector<GridFunction> states;
};

namespace detail {

/// One-step implicit map for the network heat equation. theta = 1/2 gives
/// Crank-Nicolson interior rows, theta = 1 backward Euler. The two boundary
/// rows per edge impose the Robin condition with second-order one-sided
/// stencils at the new time level.
class DiffusionStepper {
public:
    DiffusionStepper(const DiffusionProblem& p)
        : m_(p.u0.edges()), n_(p.u0.cells()), eps_(p.eps), coupling_(p.coupling) {}

    void factor(double dt, double theta) {
        dt_ = dt;
        theta_ = theta;
        const double h = 1.0 / static_cast<double>(n_);
        const double mu = dt / (eps_ * h * h);
        const Index size = m_ * (n_ + 1);

        std::vector<Eigen::Triplet<double>> entries;
        entries.reserve(static_cast<size_t>(size * 4));
        for (Index j = 0; j < m_; ++j) {
            const Index base = j * (n_ + 1);
            for (Index i = 1; i < n_; ++i) {
                entries.emplace_back(base + i, base + i - 1, -theta * mu);
                entries.emplace_back(base + i, base + i, 1.0 + 2.0 * theta * mu);
                entries.emplace_back(base + i, base + i + 1, -theta * mu);
            }
            // Tail row: (-3 u0 + 4 u1 - u2)/(2h) = eps (k00 u(0) + k01 u(1)).
            entries.emplace_back(base, base, -3.0);
            entries.emplace_back(base, base + 1, 4.0);
            entries.emplace_back(base, base + 2, -1.0);
            // Head row: (3 un - 4 un-1 + un-2)/(2h) = eps (k10 u(0) + k11 u(1)).
            entries.emplace_back(base + n_, base + n_, 3.0);
            entries.emplace_back(base + n_, base + n_ - 1, -4.0);
            entries.emplace_back(base + n_, base + n_ - 2, 1.0);
            for (Index k = 0; k < m_; ++k) {
                const Index tail_k = k * (n_ + 1);
                const Index head_k = tail_k + n_;
                const double s = 2.0 * h * eps_;
                if (coupling_.k00(j, k) != 0.0) entries.emplace_back(base, tail_k, -s * coupling_.k00(j, k));
                if (coupling_.k01(j, k) != 0.0) entries.emplace_back(base, head_k, -s * coupling_.k01(j, k));
                if (coupling_.k10(j, k) != 0.0) entries.emplace_back(base + n_, tail_k, -s * coupling_.k10(j, k));
                if (coupling_.k11(j, k) != 0.0) entries.emplace_back(base + n_, head_k, -s * coupling_.k11(j, k));
            }
        }
        Eigen::SparseMatrix<double> lhs(size, size);
        lhs.setFromTriplets(entries.begin(), entries.end());
        lhs.makeCompressed();
        solver_.compute(lhs);
        if (solver_.info() != Eigen::Success)
            throw NumericalError("diffusion step matrix is singular (boundary system)");
        explicit_mu_ = (1.0 - theta) * mu;
    }

    double dt() const { return dt_; }
    double theta() const { return theta_; }

    void advance(Vector& u) const {
        Vector rhs(u.size());
        for (Index j = 0; j < m_; ++j) {
            const Index base = j * (n_ + 1);
            rhs(base) = 0.0;
            rhs(base + n_) = 0.0;
            for (Index i = 1; i < n_; ++i)
                rhs(base + i) = u(base + i) +
                                explicit_mu_ * (u(base + i - 1) - 2.0 * u(base + i) + u(base + i + 1));
        }
        u = solver_.solve(rhs);
        if (solver_.info() != Eigen::Success)
            throw NumericalError("diffusion linear solve failed");
    }

private:
    Index m_, n_;
    double eps_;
    DiffusionCoupling coupling_;
    double dt_ = 0.0, theta_ = 0.5, explicit_mu_ = 0.0;
    Eigen::SparseLU<Eigen::SparseMatrix<double>> solver_;
};

inline GridFunction unpack(const Vector& u, Index m, Index n) {
    GridFunction g(m, n);
    for (Index j = 0; j < m; ++j) g.values().row(j) = u.segment(j * (n + 1), n + 1).transpose();
    return g;
}

}  // namespace detail

/// Crank-Nicolson solve returning the solution at the requested output times.
/// Output times must be nondecreasing and start at >= 0; the solver substeps
/// each segment with steps no longer than the problem's dt target. The first
/// substep of the run is backward Euler to damp data that violate the
/// boundary condition at t = 0.
inline DiffusionTrajectory solve_diffusion(const DiffusionProblem& p,
                                           const std::vector<double>& output_times) {
    p.validate();
    if (output_times.empty()) throw ValidationError("solve_diffusion: no output times");
    for (size_t k = 0; k < output_times.size(); ++k) {
        if (output_times[k] < 0.0 || (k > 0 && output_times[k] < output_times[k - 1]))
            throw ValidationError("solve_diffusion: output times must be nondecreasing and >= 0");
    }

    const Index m = p.u0.edges(), n = p.u0.cells();
    if (n < 2 || n % 2 != 0)
        throw ValidationError("solve_diffusion: grid needs an even cell count >= 2");

    Vector u(m * (n + 1));
    for (Index j = 0; j < m; ++j) u.segment(j * (n + 1), n + 1) = p.u0.values().row(j).transpose();

    detail::DiffusionStepper stepper(p);
    DiffusionTrajectory out;
    double t = 0.0;
    bool first_step = true;
    const double target = p.dt_target();

    for (double t_out : output_times) {
        const double span = t_out - t;
        if (span > 1e-14 * std::max(1.0, t_out)) {
            const auto steps = static_cast<long>(std::ceil(span / target - 1e-12));
            const double dt = span / static_cast<double>(std::max<long>(steps, 1));
            try {
                for (long s = 0; s < std::max<long>(steps, 1); ++s) {
                    const double theta = first_step ? 1.0 : 0.5;
                    if (stepper.dt() != dt || stepper.theta() != theta)
                        stepper.factor(dt, theta);
                    stepper.advance(u);
                    first_step = false;
                }
            } catch (const NumericalError& err) {
                throw NumericalError(std::string(err.what()) + " near t = " + std::to_string(t));
            }
            t = t_out;
        }
        out.times.push_back(t_out);
        out.states.push_back(detail::unpack(u, m, n));
    }
    return out;
}

/// Residual of the projected balance d/dt (P u) = K v + minus0 w(0) + minus1 w(1)
/// along a stored trajectory, one value per output time (inf norm over edges).
/// Time derivatives use three-point difference formulas, so at least three
/// output times are required.
inline std::vector<double> mass_balance_residual(const DiffusionTrajectory& traj,
                                                 const DiffusionProblem& p) {
    const size_t count = traj.times.size();
    if (count < 3) throw ValidationError("mass_balance_residual: need at least 3 output times");
    const Index n = p.u0.cells();

    const Matrix k = aggregated_matrix(p.coupling);
    const AuxiliarySums sums = auxiliary_sums(p.coupling);

    std::vector<Vector> v(count);
    std::vector<Vector> w_tail(count), w_head(count);
    for (size_t s = 0; s < count; ++s) {
        v[s] = project_average(traj.states[s]);
        w_tail[s] = traj.states[s].values().col(0) - v[s];
        w_head[s] = traj.states[s].values().col(n) - v[s];
    }

    auto derivative = [&](size_t s) -> Vector {
        // Nonuniform three-point stencils, second order.
        if (s == 0) {
            const double h1 = traj.times[1] - traj.times[0];
            const double h2 = traj.times[2] - traj.times[1];
            return -(2 * h1 + h2) / (h1 * (h1 + h2)) * v[0] + (h1 + h2) / (h1 * h2) * v[1] -
                   h1 / (h2 * (h1 + h2)) * v[2];
        }
        if (s == count - 1) {
            const double h1 = traj.times[s - 1] - traj.times[s - 2];
            const double h2 = traj.times[s] - traj.times[s - 1];
            return h2 / (h1 * (h1 + h2)) * v[s - 2] - (h1 + h2) / (h1 * h2) * v[s - 1] +
                   (h1 + 2 * h2) / (h2 * (h1 + h2)) * v[s];
        }
        const double h1 = traj.times[s] - traj.times[s - 1];
        const double h2 = traj.times[s + 1] - traj.times[s];
        return -h2 / (h1 * (h1 + h2)) * v[s - 1] + (h2 - h1) / (h1 * h2) * v[s] +
               h1 / (h2 * (h1 + h2)) * v[s + 1];
    };

    std::vector<double> residual(count);
    for (size_t s = 0; s < count; ++s) {
        const Vector rhs = k * v[s] + sums.minus0 * w_tail[s] + sums.minus1 * w_head[s];
        residual[s] = (derivative(s) - rhs).cwiseAbs().maxCoeff();
    }
    return residual;
}

/// Cubic lift v(x) = -x(1-x)((alpha+beta)x - alpha): vanishes at both ends and
/// has endpoint slopes alpha, beta, so it absorbs inhomogeneous flux data for
/// any coupling matrices.
inline GridFunction boundary_lift(const Vector& alpha, const Vector& beta, Index cells) {
    if (alpha.size() != beta.size()) throw ValidationError("boundary_lift: length mismatch");
    return GridFunction::from_profile(alpha.size(), cells, [&](Index j, double x) {
        return -x * (1.0 - x) * ((alpha(j) + beta(j)) * x - alpha(j));
    });
}

}  // namespace netlump
