#pragma once

#include "netlump/coupling.hpp"
#include "netlump/matfun.hpp"
#include "netlump/types.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <utility>
#include <vector>

namespace netlump {

/// Age profile of a vital rate (fertility or mortality), nonnegative.
class VitalRate {
public:
    VitalRate() : fn_([](double) { return 0.0; }) {}
    explicit VitalRate(std::function<double(double)> fn) : fn_(std::move(fn)) {}

    double operator()(double age) const { return fn_(age); }

    static VitalRate constant(double value) {
        return VitalRate([value](double) { return value; });
    }

    /// Linear ramp from (a0, v0) to (a1, v1), clamped outside [a0, a1].
    static VitalRate ramp(double a0, double a1, double v0, double v1) {
        return VitalRate([=](double a) {
            if (a <= a0) return v0;
            if (a >= a1) return v1;
            return v0 + (v1 - v0) * (a - a0) / (a1 - a0);
        });
    }

    static VitalRate gaussian(double center, double width, double amplitude) {
        return VitalRate([=](double a) {
            const double z = (a - center) / width;
            return amplitude * std::exp(-0.5 * z * z);
        });
    }

    /// Piecewise-linear table (ages strictly increasing), clamped outside.
    static VitalRate table(std::vector<double> ages, std::vector<double> values) {
        if (ages.size() != values.size() || ages.size() < 2)
            throw ValidationError("VitalRate::table needs matching lists of at least two points");
        for (size_t i = 0; i + 1 < ages.size(); ++i)
            if (!(ages[i] < ages[i + 1]))
                throw ValidationError("VitalRate::table ages must be strictly increasing");
        return VitalRate([ages = std::move(ages), values = std::move(values)](double a) {
            if (a <= ages.front()) return values.front();
            if (a >= ages.back()) return values.back();
            const auto it = std::upper_bound(ages.begin(), ages.end(), a);
            const size_t hi = static_cast<size_t>(it - ages.begin());
            const double theta = (a - ages[hi - 1]) / (ages[hi] - ages[hi - 1]);
            return (1.0 - theta) * values[hi - 1] + theta * values[hi];
        });
    }

private:
    std::function<double(double)> fn_;
};

/// Age-and-patch structured population with fast migration:
///   dn/dt = -dn/da - mu_j(a) n + (1/eps) K n,
///   n_j(0, t) = int_0^amax beta_j(a) n_j(a, t) da.
/// Ages are truncated at a_max; the caller keeps survival or fertility beyond
/// a_max negligible.
struct StructuredPopulation {
    double a_max = 1.0;
    Index n_age = 128;
    std::vector<VitalRate> fertility;  // beta_j
    std::vector<VitalRate> mortality;  // mu_j
    Matrix migration;                  // Kolmogorov generator
    double eps = 1.0;
    Matrix n0;  // patches x (n_age + 1) initial densities

    Index patches() const { return n0.rows(); }
    double da() const { return a_max / static_cast<double>(n_age); }
    double age_node(Index i) const { return a_max * static_cast<double>(i) / static_cast<double>(n_age); }

    void validate() const {
        const Index m = patches();
        if (m < 1 || n_age < 2) throw ValidationError("StructuredPopulation: need >= 1 patch and >= 2 age cells");
        if (!(a_max > 0.0)) throw ValidationError("StructuredPopulation: a_max must be positive");
        if (!(eps > 0.0)) throw ValidationError("StructuredPopulation: eps must be positive");
        if (n0.cols() != n_age + 1) throw ValidationError("StructuredPopulation: n0 must be patches x (n_age+1)");
        if (!n0.allFinite()) throw ValidationError("StructuredPopulation: non-finite initial densities");
        if (static_cast<Index>(fertility.size()) != m || static_cast<Index>(mortality.size()) != m)
            throw ValidationError("StructuredPopulation: one fertility and one mortality profile per patch");
        if (migration.rows() != m || migration.cols() != m)
            throw ValidationError("StructuredPopulation: migration matrix must be patches x patches");
        if (!kolmogorov_check(migration))
            throw ValidationError("StructuredPopulation: migration matrix fails the Kolmogorov test");
        if (!is_strongly_connected(migration + Matrix::Identity(m, m)))
            throw ValidationError("StructuredPopulation: migration network must be strongly connected");
        for (Index j = 0; j < m; ++j)
            for (Index i = 0; i <= n_age; ++i) {
                if (fertility[static_cast<size_t>(j)](age_node(i)) < 0.0)
                    throw ValidationError("StructuredPopulation: fertility must be nonnegative");
                if (mortality[static_cast<size_t>(j)](age_node(i)) < 0.0)
                    throw ValidationError("StructuredPopulation: mortality must be nonnegative");
            }
    }
};

struct PopulationTrajectory {
    std::vector<double> times;
    std::vector<Matrix> densities;  // patches x (n_age + 1)
};

/// Stable patch distribution: the normalised nonnegative null vector of the
/// migration generator, obtained as the stationary vector of I + sigma K.
inline Vector stable_distribution(const Matrix& k) {
    if (k.rows() != k.cols()) throw ValidationError("stable_distribution: matrix must be square");
    double diag_max = 0.0;
    for (Index i = 0; i < k.rows(); ++i) diag_max = std::max(diag_max, std::abs(k(i, i)));
    const double sigma = diag_max > 0.0 ? 0.99 / diag_max : 1.0;
    const Matrix p = Matrix::Identity(k.rows(), k.cols()) + sigma * k;
    return perron_vector(p);
}

/// March the structured system with steps dt = da: exact shift along
/// characteristics with a trapezoid mortality integrating factor, renewal at
/// age zero by trapezoid over [0, a_max], then migration through the exact
/// one-step exponential. The Strang flag splits the migration step around the
/// demographic half for second-order splitting.
inline PopulationTrajectory solve_structured(const StructuredPopulation& p, double t_final,
                                             const std::vector<double>& output_times,
                                             bool strang = false) {
    p.validate();
    if (!(t_final >= 0.0)) throw ValidationError("solve_structured: t_final must be nonnegative");
    for (size_t s = 0; s < output_times.size(); ++s) {
        if (output_times[s] < 0.0 || output_times[s] > t_final + 1e-12)
            throw ValidationError("solve_structured: output times must lie in [0, t_final]");
        if (s > 0 && output_times[s] < output_times[s - 1])
            throw ValidationError("solve_structured: output times must be nondecreasing");
    }

    const Index m = p.patches(), n = p.n_age;
    const double dt = p.da();

    // Per-patch survival factor across one age cell and sampled fertility.
    Matrix survival(m, n);
    Matrix beta(m, n + 1);
    for (Index j = 0; j < m; ++j) {
        const auto& mu = p.mortality[static_cast<size_t>(j)];
        const auto& b = p.fertility[static_cast<size_t>(j)];
        for (Index i = 0; i < n; ++i)
            survival(j, i) = std::exp(-0.5 * dt * (mu(p.age_node(i)) + mu(p.age_node(i + 1))));
        for (Index i = 0; i <= n; ++i) beta(j, i) = b(p.age_node(i));
    }
    for (Index j = 0; j < m; ++j)
        if (0.5 * dt * beta(j, 0) >= 1.0)
            throw NumericalError("solve_structured: age step too large for the fertility at age 0");

    const Matrix full_step = matrix_exponential<double>((dt / p.eps) * p.migration);
    const Matrix half_step = strang ? matrix_exponential<double>((0.5 * dt / p.eps) * p.migration) : Matrix();

    auto demographic_step = [&](Matrix& state) {
        for (Index i = n; i >= 1; --i)
            state.col(i) = survival.col(i - 1).cwiseProduct(state.col(i - 1));
        for (Index j = 0; j < m; ++j) {
            double integral = 0.5 * dt * beta(j, n) * state(j, n);
            for (Index i = 1; i < n; ++i) integral += dt * beta(j, i) * state(j, i);
            state(j, 0) = integral / (1.0 - 0.5 * dt * beta(j, 0));
        }
    };

    const auto total_steps = static_cast<long>(std::llround(t_final / dt));
    std::vector<long> output_steps(output_times.size());
    for (size_t s = 0; s < output_times.size(); ++s)
        output_steps[s] = std::min<long>(std::llround(output_times[s] / dt), total_steps);

    PopulationTrajectory out;
    Matrix state = p.n0;
    size_t cursor = 0;
    auto record = [&](long step) {
        while (cursor < output_steps.size() && output_steps[cursor] == step) {
            out.times.push_back(static_cast<double>(step) * dt);
            out.densities.push_back(state);
            ++cursor;
        }
    };
    record(0);
    for (long step = 1; step <= total_steps; ++step) {
        if (strang) {
            state = half_step * state;
            demographic_step(state);
            state = half_step * state;
        } else {
            demographic_step(state);
            state = full_step * state;
        }
        record(step);
    }
    return out;
}

/// Convex combination of per-patch vital rates against a patch distribution:
/// mu*(a) = sum_j mu_j(a) N_j, beta*(a) = sum_j beta_j(a) N_j.
inline std::pair<VitalRate, VitalRate> aggregate_vital_rates(const Vector& n,
                                                             const std::vector<VitalRate>& mortality,
                                                             const std::vector<VitalRate>& fertility) {
    const auto m = static_cast<size_t>(n.size());
    if (mortality.size() != m || fertility.size() != m)
        throw ValidationError("aggregate_vital_rates: profile count must match distribution length");
    if (n.minCoeff() < -1e-12 || std::abs(n.sum() - 1.0) > 1e-10)
        throw ValidationError("aggregate_vital_rates: distribution must be nonnegative with unit sum");
    auto combine = [n](std::vector<VitalRate> rates) {
        return VitalRate([n, rates = std::move(rates)](double a) {
            double value = 0.0;
            for (Index j = 0; j < n.size(); ++j) value += n(j) * rates[static_cast<size_t>(j)](a);
            return value;
        });
    };
    return {combine(mortality), combine(fertility)};
}

/// Scalar McKendrick solve with aggregated rates; same scheme with one patch.
inline PopulationTrajectory solve_aggregated_mckendrick(const VitalRate& mu_star,
                                                        const VitalRate& beta_star,
                                                        const Vector& n0_total, double a_max,
                                                        double t_final,
                                                        const std::vector<double>& output_times) {
    StructuredPopulation scalar;
    scalar.a_max = a_max;
    scalar.n_age = n0_total.size() - 1;
    scalar.fertility = {beta_star};
    scalar.mortality = {mu_star};
    scalar.migration = Matrix::Zero(1, 1);
    scalar.eps = 1.0;
    scalar.n0 = n0_total.transpose();
    return solve_structured(scalar, t_final, output_times);
}

struct AggregationGap {
    double l1 = 0.0;   // sup over output times of the L1-in-age distance
    double sup = 0.0;  // same with the sup-in-age norm
};

/// Distance between the summed structured solution and the aggregated scalar
/// model with the stable patch distribution.
inline AggregationGap aggregation_gap_norms(const StructuredPopulation& p, double t_final,
                                            const std::vector<double>& output_times,
                                            bool strang = false) {
    const PopulationTrajectory full = solve_structured(p, t_final, output_times, strang);
    const Vector n = stable_distribution(p.migration);
    const auto [mu_star, beta_star] = aggregate_vital_rates(n, p.mortality, p.fertility);
    const Vector total0 = p.n0.colwise().sum().transpose();
    const PopulationTrajectory lumped =
        solve_aggregated_mckendrick(mu_star, beta_star, total0, p.a_max, t_final, output_times);

    const double da = p.da();
    AggregationGap gap;
    for (size_t s = 0; s < full.times.size(); ++s) {
        const Vector diff =
            (full.densities[s].colwise().sum().transpose() - lumped.densities[s].row(0).transpose())
                .cwiseAbs();
        double l1 = 0.5 * da * (diff(0) + diff(diff.size() - 1));
        for (Index i = 1; i + 1 < diff.size(); ++i) l1 += da * diff(i);
        gap.l1 = std::max(gap.l1, l1);
        gap.sup = std::max(gap.sup, diff.maxCoeff());
    }
    return gap;
}

inline double aggregation_gap(const StructuredPopulation& p, double t_final,
                              const std::vector<double>& output_times, bool strang = false) {
    return aggregation_gap_norms(p, t_final, output_times, strang).l1;
}

}  // namespace netlump
