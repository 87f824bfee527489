#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "netlump/matfun.hpp"
#include "netlump/quadrature.hpp"
#include "netlump/types.hpp"

#include <cmath>
#include <functional>
#include <random>

using namespace netlump;

namespace {

// Adaptive Simpson oracle, independent of the uniform-grid quadrature under test.
double adaptive_simpson(const std::function<double(double)>& f, double a, double b, double tol) {
    const double c = 0.5 * (a + b);
    const double coarse = (b - a) / 6.0 * (f(a) + 4.0 * f(c) + f(b));
    std::function<double(double, double, double, double, double, double, double)> recurse =
        [&](double lo, double hi, double flo, double fmid, double fhi, double whole, double eps) {
            const double mid = 0.5 * (lo + hi);
            const double lmid = 0.5 * (lo + mid), rmid = 0.5 * (mid + hi);
            const double flmid = f(lmid), frmid = f(rmid);
            const double left = (mid - lo) / 6.0 * (flo + 4.0 * flmid + fmid);
            const double right = (hi - mid) / 6.0 * (fmid + 4.0 * frmid + fhi);
            if (std::abs(left + right - whole) <= 15.0 * eps)
                return left + right + (left + right - whole) / 15.0;
            return recurse(lo, mid, flo, flmid, fmid, left, eps / 2.0) +
                   recurse(mid, hi, fmid, frmid, fhi, right, eps / 2.0);
        };
    return recurse(a, b, f(a), f(c), f(b), coarse, tol);
}

// Classical RK4 oracle for dv/dt = K v.
Vector rk4_expm(const Matrix& k, double t, Vector v, double dt) {
    const auto steps = static_cast<long>(std::ceil(t / dt));
    const double h = t / static_cast<double>(steps);
    for (long s = 0; s < steps; ++s) {
        const Vector k1 = k * v;
        const Vector k2 = k * (v + 0.5 * h * k1);
        const Vector k3 = k * (v + 0.5 * h * k2);
        const Vector k4 = k * (v + h * k3);
        v += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    return v;
}

Matrix random_matrix(Index m, std::mt19937& gen, double lo = -1.0, double hi = 1.0) {
    std::uniform_real_distribution<double> dist(lo, hi);
    Matrix a(m, m);
    for (Index i = 0; i < m; ++i)
        for (Index j = 0; j < m; ++j) a(i, j) = dist(gen);
    return a;
}

}  // namespace

TEST_CASE("integrate_edge: constants and polynomials are exact") {
    const auto constant = GridFunction::from_profile(2, 8, [](Index j, double) { return j == 0 ? 3.5 : -1.0; });
    CHECK(integrate_edge(constant, 0) == doctest::Approx(3.5).epsilon(1e-14));
    CHECK(integrate_edge(constant, 1) == doctest::Approx(-1.0).epsilon(1e-14));

    const auto linear = GridFunction::from_profile(1, 16, [](Index, double x) { return x; });
    CHECK(integrate_edge(linear, 0) == doctest::Approx(0.5).epsilon(1e-14));
}

TEST_CASE("integrate_edge: sine against the adaptive oracle") {
    const auto u = GridFunction::from_profile(1, 128, [](Index, double x) { return std::sin(M_PI * x); });
    const double oracle = adaptive_simpson([](double x) { return std::sin(M_PI * x); }, 0.0, 1.0, 1e-13);
    CHECK(oracle == doctest::Approx(2.0 / M_PI).epsilon(1e-12));
    CHECK(std::abs(integrate_edge(u, 0) - oracle) < 1e-8);
}

TEST_CASE("integrate_edge: rejects odd or tiny grids") {
    GridFunction odd(1, 5);
    CHECK_THROWS_AS(integrate_edge(odd, 0), ValidationError);
    CHECK_THROWS_AS(integrate_edge(GridFunction(1, 1), 0), ValidationError);
    GridFunction fine(1, 4);
    CHECK_THROWS_AS(integrate_edge(fine, 7), ValidationError);
}

TEST_CASE("project_average: trivial and polynomial data") {
    Vector c(3);
    c << 1.0, -2.0, 0.25;
    const auto u = GridFunction::from_constant(c, 32);
    CHECK((project_average(u) - c).cwiseAbs().maxCoeff() < 1e-14);

    const auto lin = GridFunction::from_profile(2, 64, [](Index j, double x) { return (j + 1) * x; });
    const Vector v = project_average(lin);
    CHECK(v(0) == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(v(1) == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("project_average: random cubics match the quadrature oracle") {
    std::mt19937 gen(7);
    std::uniform_real_distribution<double> dist(-2.0, 2.0);
    for (int rep = 0; rep < 5; ++rep) {
        double c0 = dist(gen), c1 = dist(gen), c2 = dist(gen), c3 = dist(gen);
        auto poly = [=](double x) { return c0 + x * (c1 + x * (c2 + x * c3)); };
        const auto u = GridFunction::from_profile(1, 16, [&](Index, double x) { return poly(x); });
        const double oracle = adaptive_simpson(poly, 0.0, 1.0, 1e-14);
        CHECK(std::abs(integrate_edge(u, 0) - oracle) < 1e-12);
    }
}

TEST_CASE("project_average is linear") {
    std::mt19937 gen(11);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    auto random_grid = [&] {
        return GridFunction::from_profile(3, 24, [&](Index, double) { return dist(gen); });
    };
    const GridFunction u = random_grid(), w = random_grid();
    const double alpha = dist(gen), beta = dist(gen);
    const GridFunction combo(alpha * u.values() + beta * w.values());
    const Vector lhs = project_average(combo);
    const Vector rhs = alpha * project_average(u) + beta * project_average(w);
    CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-13);
}

TEST_CASE("norms: trivial cases and the kinked line") {
    GridFunction zero(2, 10);
    CHECK(norm_l1(zero) == 0.0);
    CHECK(norm_sup(zero) == 0.0);

    const auto one = GridFunction::from_constant(Vector::Ones(1), 10);
    CHECK(norm_l1(one) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(norm_sup(one) == doctest::Approx(1.0).epsilon(1e-14));

    // |x - 1/2| has its kink on a node for even cell counts: trapezoid is exact.
    const auto line = GridFunction::from_profile(1, 64, [](Index, double x) { return x - 0.5; });
    CHECK(norm_l1(line) == doctest::Approx(0.25).epsilon(1e-14));
    CHECK(norm_sup(line) == doctest::Approx(0.5).epsilon(1e-14));
}

TEST_CASE("norm comparison: L1 bounded by m times sup") {
    std::mt19937 gen(23);
    std::uniform_real_distribution<double> dist(-3.0, 3.0);
    for (int rep = 0; rep < 10; ++rep) {
        const auto u = GridFunction::from_profile(4, 20, [&](Index, double) { return dist(gen); });
        CHECK(norm_l1(u) <= 4.0 * norm_sup(u) + 1e-14);
    }
}

TEST_CASE("matrix_exponential_apply: trivial cases") {
    Vector v(2);
    v << 0.0, 1.0;
    CHECK((matrix_exponential_apply<double>(Matrix::Zero(2, 2), 1.3, v) - v).norm() == 0.0);

    Matrix nilpotent(2, 2);
    nilpotent << 0, 1, 0, 0;
    const Vector result = matrix_exponential_apply<double>(nilpotent, 1.0, v);
    CHECK(result(0) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(result(1) == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("matrix_exponential_apply: RK4 oracle on a random 4x4 system") {
    std::mt19937 gen(42);
    const Matrix k = random_matrix(4, gen);
    Vector v0(4);
    v0 << 1.0, -0.5, 0.25, 2.0;
    const Vector pade = matrix_exponential_apply<double>(k, 0.7, v0);
    const Vector oracle = rk4_expm(k, 0.7, v0, 1e-4);
    CHECK((pade - oracle).cwiseAbs().maxCoeff() < 1e-7);
}

TEST_CASE("matrix_exponential_apply: large-norm argument stays accurate") {
    Matrix k(2, 2);
    k << -400.0, 100.0, 100.0, -400.0;  // ||tK|| up to ~1e3
    Vector v(2);
    v << 1.0, 0.0;
    // Symmetric: exact answer through the eigenbasis (1,1)/(1,-1).
    const double t = 2.0;
    const Vector got = matrix_exponential_apply<double>(k, t, v);
    const double lam1 = -300.0, lam2 = -500.0;
    const Vector expect = 0.5 * std::exp(lam1 * t) * Vector::Ones(2) +
                          0.5 * std::exp(lam2 * t) * (Vector(2) << 1.0, -1.0).finished();
    CHECK((got - expect).cwiseAbs().maxCoeff() < 1e-10 * std::exp(lam1 * t) + 1e-300);
}

TEST_CASE("matrix_exponential semigroup property") {
    std::mt19937 gen(5);
    const Matrix k = random_matrix(3, gen);
    Vector v(3);
    v << 0.3, -1.0, 0.8;
    const Vector direct = matrix_exponential_apply<double>(k, 0.9, v);
    const Vector chained =
        matrix_exponential_apply<double>(k, 0.5, matrix_exponential_apply<double>(k, 0.4, v));
    CHECK((direct - chained).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("matrix_exponential rejects non-finite input") {
    Matrix bad = Matrix::Zero(2, 2);
    bad(0, 1) = std::numeric_limits<double>::quiet_NaN();
    Vector v = Vector::Ones(2);
    CHECK_THROWS_AS(matrix_exponential_apply<double>(bad, 1.0, v), ValidationError);
    CHECK_THROWS_AS(matrix_exponential_apply<double>(Matrix::Zero(2, 2),
                                                     std::numeric_limits<double>::infinity(), v),
                    ValidationError);
}

TEST_CASE("matrix_power_apply: identity, scaling, naive oracle") {
    Vector v(2);
    v << 1.0, 1.0;
    Matrix two = 2.0 * Matrix::Identity(2, 2);
    CHECK((matrix_power_apply<double>(two, 0, v) - v).norm() == 0.0);
    const Vector cubed = matrix_power_apply<double>(two, 3, v);
    CHECK(cubed(0) == doctest::Approx(8.0));
    CHECK(cubed(1) == doctest::Approx(8.0));

    std::mt19937 gen(13);
    Matrix t = random_matrix(3, gen);
    t /= t.cwiseAbs().colwise().sum().maxCoeff();  // keep powers tame
    Vector w(3);
    w << 0.2, -0.7, 1.1;
    Vector naive = w;
    for (int i = 0; i < 13; ++i) naive = t * naive;
    CHECK((matrix_power_apply<double>(t, 13, w) - naive).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("matrix_power additivity") {
    std::mt19937 gen(17);
    Matrix t = random_matrix(4, gen);
    t /= 2.0 * t.cwiseAbs().colwise().sum().maxCoeff();
    Vector v(4);
    v << 1.0, 2.0, -1.0, 0.5;
    const Vector joint = matrix_power_apply<double>(t, 9, v);
    const Vector split = matrix_power_apply<double>(t, 4, matrix_power_apply<double>(t, 5, v));
    CHECK((joint - split).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("GridFunction: validation and interpolation") {
    CHECK_THROWS_AS(GridFunction(0, 4), ValidationError);
    GridFunction u(1, 4);
    u(0, 2) = std::numeric_limits<double>::infinity();
    CHECK_FALSE(u.all_finite());
    CHECK_THROWS_AS(u.require_finite(), ValidationError);

    const auto lin = GridFunction::from_profile(1, 10, [](Index, double x) { return 2.0 * x; });
    CHECK(sample_linear(lin, 0, 0.05) == doctest::Approx(0.1).epsilon(1e-14));
    CHECK(sample_linear(lin, 0, 1.0) == doctest::Approx(2.0).epsilon(1e-14));
    CHECK(sample_linear(lin, 0, -0.5) == doctest::Approx(0.0).epsilon(1e-14));
}
