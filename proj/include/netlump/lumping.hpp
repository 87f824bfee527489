#pragma once

#include "netlump/coupling.hpp"
#include "netlump/diffusion.hpp"
#include "netlump/matfun.hpp"
#include "netlump/quadrature.hpp"
#include "netlump/transport.hpp"
#include "netlump/types.hpp"

#include <cmath>
#include <limits>
#include <vector>

namespace netlump {

/// Solution of the lumped edge-total ODE dv/dt = K v for the diffusion coupling.
inline Vector aggregated_solution_diffusion(const DiffusionCoupling& c, const Vector& v0, double t) {
    return matrix_exponential_apply(aggregated_matrix(c), t, v0);
}

/// Solution of the lumped ODE dv/dt = B v for the transport coupling.
inline Vector aggregated_solution_transport(const Matrix& b, const Vector& v0, double t) {
    return matrix_exponential_apply(b, t, v0);
}

/// First-order bulk corrector of the diffusion expansion:
///   w1(x) = x^2/2 K vbar + x plus0 vbar - (plus0/3 + plus1/6) vbar.
/// Quadratic in x, zero edge averages, endpoint slopes plus0 vbar and plus1 vbar.
inline GridFunction corrector_diffusion(const DiffusionCoupling& c, const Vector& vbar, Index cells) {
    if (vbar.size() != c.edges()) throw ValidationError("corrector_diffusion: dimension mismatch");
    const Vector quad = aggregated_matrix(c) * vbar;
    const AuxiliarySums sums = auxiliary_sums(c);
    const Vector lin = sums.plus0 * vbar;
    const Vector shift = -(sums.plus0 / 3.0 + sums.plus1 / 6.0) * vbar;
    return GridFunction::from_profile(c.edges(), cells, [&](Index j, double x) {
        return 0.5 * x * x * quad(j) + x * lin(j) + shift(j);
    });
}

/// Cosine-series solution of the fast Neumann relaxation on each edge,
/// d w/d tau = d2w/dx2 with no-flux ends, for zero-average data:
///   w(x, tau) = sum_n exp(-(n pi)^2 tau) a_n cos(n pi x),
///   a_n = 2 int_0^1 w0(x) cos(n pi x) dx.
/// Coefficients are computed once (Simpson) and reused across evaluations.
class DiffusionLayer {
public:
    DiffusionLayer(const GridFunction& w0, int n_terms) : edges_(w0.edges()), cells_(w0.cells()) {
        if (n_terms < 1) throw ValidationError("DiffusionLayer: need at least one term");
        require_zero_average(w0);
        // Modes above cells/2 alias against the quadrature weights; cap there
        // and fold the rest into the reported tail estimate.
        const Index nyquist = std::max<Index>(cells_ / 2, 1);
        n_terms_ = std::min<Index>(n_terms, nyquist);
        const Index extra = std::min<Index>(2 * n_terms_, nyquist);

        cos_table_.resize(extra, cells_ + 1);
        for (Index n = 1; n <= extra; ++n)
            for (Index i = 0; i <= cells_; ++i)
                cos_table_(n - 1, i) = std::cos(n * M_PI * w0.node(i));

        coefficients_.resize(edges_, extra);
        for (Index j = 0; j < edges_; ++j)
            for (Index n = 1; n <= extra; ++n)
                coefficients_(j, n - 1) =
                    2.0 * simpson((w0.values().row(j).array() * cos_table_.row(n - 1).array()).matrix());

        // Measured modes beyond the truncation plus an O(n^-2)-decay
        // continuation for everything past the last computed coefficient.
        tail_bound_ = 0.0;
        for (Index n = n_terms_ + 1; n <= extra; ++n)
            tail_bound_ += coefficients_.col(n - 1).cwiseAbs().maxCoeff();
        tail_bound_ += coefficients_.col(extra - 1).cwiseAbs().maxCoeff() * static_cast<double>(extra);
    }

    GridFunction eval(double tau) const {
        GridFunction out(edges_, cells_);
        for (Index n = 1; n <= n_terms_; ++n) {
            const double decay = std::exp(-(n * M_PI) * (n * M_PI) * tau);
            if (decay == 0.0) break;
            out.values().noalias() += decay * (coefficients_.col(n - 1) * cos_table_.row(n - 1));
        }
        return out;
    }

    /// Truncation estimate: sum of |a_n| over the next octave of modes.
    double tail_bound() const { return tail_bound_; }
    Index terms() const { return n_terms_; }
    const Matrix& coefficients() const { return coefficients_; }

    static void require_zero_average(const GridFunction& w0) {
        if (project_average(w0).cwiseAbs().maxCoeff() > 1e-8)
            throw ValidationError("initial layer data must have zero edge averages (subtract the mean first)");
    }

private:
    Index edges_, cells_, n_terms_ = 0;
    Matrix cos_table_;      // (n, i) -> cos(n pi x_i)
    Matrix coefficients_;   // (edge, n-1) -> a_n
    double tail_bound_ = 0.0;
};

struct LayerResult {
    GridFunction value;
    double tail_bound = 0.0;
};

inline LayerResult initial_layer_diffusion(const GridFunction& w0, double tau, int n_terms) {
    DiffusionLayer layer(w0, n_terms);
    return {layer.eval(tau), layer.tail_bound()};
}

/// First-order transport corrector w1(x) = (B vbar)(1/2 - x); zero mean by construction.
inline GridFunction corrector_transport(const Matrix& b, const Vector& vbar, Index cells) {
    if (b.rows() != b.cols() || b.rows() != vbar.size())
        throw ValidationError("corrector_transport: dimension mismatch");
    const Vector slope = b * vbar;
    return GridFunction::from_profile(vbar.size(), cells,
                                      [&](Index j, double x) { return slope(j) * (0.5 - x); });
}

/// Periodic unit-speed shift of zero-average data: w0((x - tau) mod 1).
inline GridFunction initial_layer_transport(const GridFunction& w0, double tau) {
    DiffusionLayer::require_zero_average(w0);
    if (tau == 0.0) return w0;
    GridFunction out(w0.edges(), w0.cells());
    for (Index i = 0; i <= w0.cells(); ++i) {
        double arg = std::fmod(w0.node(i) - tau, 1.0);
        if (arg < 0.0) arg += 1.0;
        for (Index j = 0; j < w0.edges(); ++j) out(j, i) = sample_linear(w0, j, arg);
    }
    return out;
}

/// The three pieces of the asymptotic approximation at one (t, eps): the
/// lumped state, the O(eps) bulk corrector (zero edge averages) and the fast
/// initial layer evaluated at tau = t / eps.
struct LayerExpansion {
    Vector vbar;
    GridFunction corrector;
    GridFunction layer;
    double eps = 0.0;

    GridFunction combined() const {
        return GridFunction::from_constant(vbar, corrector.cells()) + eps * corrector + layer;
    }
};

inline LayerExpansion expansion_components(const DiffusionProblem& p, double t, int n_terms = 200) {
    p.validate();
    const Vector v0 = project_average(p.u0);
    const Vector vbar = aggregated_solution_diffusion(p.coupling, v0, t);
    const GridFunction w0 = p.u0 - GridFunction::from_constant(v0, p.u0.cells());
    return {vbar, corrector_diffusion(p.coupling, vbar, p.u0.cells()),
            DiffusionLayer(w0, n_terms).eval(t / p.eps), p.eps};
}

inline LayerExpansion expansion_components(const TransportProblem& p, double t) {
    p.validate();
    const Vector v0 = project_average(p.u0);
    const Vector vbar = aggregated_solution_transport(p.coupling.b, v0, t);
    const GridFunction w0 = p.u0 - GridFunction::from_constant(v0, p.u0.cells());
    return {vbar, corrector_transport(p.coupling.b, vbar, p.u0.cells()),
            initial_layer_transport(w0, t / p.eps), p.eps};
}

/// Full asymptotic approximation vbar(t) + eps w1(t) + layer(t/eps), assembled
/// on the grid of the initial data.
inline GridFunction assemble_expansion(const DiffusionProblem& p, double t, int n_terms = 200) {
    return expansion_components(p, t, n_terms).combined();
}

inline GridFunction assemble_expansion(const TransportProblem& p, double t) {
    return expansion_components(p, t).combined();
}

struct ErrorNorms {
    double l1 = 0.0;
    double sup = 0.0;
};

inline ErrorNorms error_norms(const GridFunction& u, const GridFunction& approx) {
    if (u.edges() != approx.edges() || u.cells() != approx.cells())
        throw ValidationError("error_norms: dimension mismatch");
    const GridFunction diff = u - approx;
    return {norm_l1(diff), norm_sup(diff)};
}

/// Empirical convergence order from an eps sweep.
struct ConvergenceReport {
    std::vector<double> eps_list;
    std::vector<double> error_l1;
    std::vector<double> error_sup;  // optional companion series
    double fitted_order = std::numeric_limits<double>::quiet_NaN();
    double intercept = std::numeric_limits<double>::quiet_NaN();
    double band_lo = 0.0, band_hi = 0.0;
    bool degenerate = false;  // too few points or non-positive errors: no fit
    bool pass = false;
};

/// Least-squares slope of log(error) vs log(eps); pass iff the slope lies in
/// [band_lo, band_hi]. Fewer than three points or non-positive errors yield a
/// degenerate (unfitted) report rather than an error.
inline ConvergenceReport estimate_order(const std::vector<double>& eps_list,
                                        const std::vector<double>& errors,
                                        double band_lo, double band_hi,
                                        const std::vector<double>& errors_sup = {}) {
    if (eps_list.size() != errors.size())
        throw ValidationError("estimate_order: eps and error lists differ in length");
    if (!errors_sup.empty() && errors_sup.size() != errors.size())
        throw ValidationError("estimate_order: companion error list differs in length");
    for (size_t i = 0; i + 1 < eps_list.size(); ++i)
        if (!(eps_list[i] > eps_list[i + 1]))
            throw ValidationError("estimate_order: eps values must be strictly decreasing");
    for (double e : eps_list)
        if (!(e > 0.0)) throw ValidationError("estimate_order: eps values must be positive");

    ConvergenceReport report;
    report.eps_list = eps_list;
    report.error_l1 = errors;
    report.error_sup = errors_sup;
    report.band_lo = band_lo;
    report.band_hi = band_hi;

    bool positive = true;
    for (double e : errors) positive = positive && e > 0.0;
    if (eps_list.size() < 3 || !positive) {
        report.degenerate = true;
        return report;
    }

    const auto n = static_cast<double>(eps_list.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (size_t i = 0; i < eps_list.size(); ++i) {
        const double x = std::log(eps_list[i]);
        const double y = std::log(errors[i]);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    report.fitted_order = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    report.intercept = (sy - report.fitted_order * sx) / n;
    report.pass = report.fitted_order >= band_lo && report.fitted_order <= band_hi;
    return report;
}

}  // namespace netlump
