#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "netlump/lumping.hpp"
#include "netlump/transport.hpp"

#include <cmath>
#include <random>

using namespace netlump;

namespace {

Matrix random_b(Index m, unsigned seed, double target_norm) {
    std::mt19937 gen(seed);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    Matrix b(m, m);
    for (Index i = 0; i < m; ++i)
        for (Index j = 0; j < m; ++j) b(i, j) = dist(gen);
    return b * (target_norm / b.cwiseAbs().colwise().sum().maxCoeff());
}

TransportProblem smooth_problem(Index m, Index cells, double eps, const Matrix& b) {
    TransportProblem p;
    p.coupling = TransportCoupling{b};
    p.eps = eps;
    p.profiles.resize(static_cast<size_t>(m));
    for (Index j = 0; j < m; ++j)
        p.profiles[static_cast<size_t>(j)] = [j](double x) {
            return 1.0 + 0.3 * (j + 1.0) * std::sin(2.0 * M_PI * x) +
                   0.2 * std::cos(2.0 * M_PI * (j + 1.0) * x);
        };
    p.u0 = GridFunction::from_profile(m, cells, [&](Index j, double x) {
        return p.profiles[static_cast<size_t>(j)](x);
    });
    return p;
}

}  // namespace

TEST_CASE("transport_exact: t = 0 reproduces the data at grid nodes") {
    const Matrix b = random_b(2, 1, 1.0);
    auto p = smooth_problem(2, 64, 0.1, b);
    const GridFunction u = transport_exact(p, 0.0);
    CHECK((u.values() - p.u0.values()).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("transport_exact: pure periodic shift with the stated branch rule") {
    TransportProblem p;
    p.coupling = TransportCoupling{Matrix::Zero(1, 1)};
    p.eps = 1.0;
    p.u0 = GridFunction::from_profile(1, 64, [](Index, double x) { return x; });
    const GridFunction u = transport_exact(p, 0.25);
    for (Index i = 0; i <= 64; ++i) {
        const double x = u.node(i);
        const double expect = x < 0.25 ? x + 0.75 : x - 0.25;
        CHECK(u(0, i) == doctest::Approx(expect).epsilon(1e-14));
    }
}

TEST_CASE("transport_exact: exactly periodic when B vanishes") {
    TransportProblem p;
    p.coupling = TransportCoupling{Matrix::Zero(1, 1)};
    p.eps = 0.25;
    p.u0 = GridFunction::from_profile(1, 128, [](Index, double x) { return std::sin(2.0 * M_PI * x); });
    for (int k = 1; k <= 3; ++k) {
        const GridFunction u = transport_exact(p, 0.25 * k);
        CHECK((u.values() - p.u0.values()).cwiseAbs().maxCoeff() < 1e-12);
    }
}

TEST_CASE("transport_exact agrees with the fine upwind oracle") {
    const Matrix b = random_b(3, 7, 1.5);
    TransportProblem p;
    p.coupling = TransportCoupling{b};
    p.eps = 0.1;
    p.profiles.resize(3);
    for (Index j = 0; j < 3; ++j)
        p.profiles[static_cast<size_t>(j)] = [j](double x) {
            return 1.0 + 0.25 * (j + 1.0) * std::sin(2.0 * M_PI * x);
        };
    p.u0 = GridFunction::from_profile(3, 4096, [&](Index j, double x) {
        return p.profiles[static_cast<size_t>(j)](x);
    });
    const double t = 0.3;
    const GridFunction exact = transport_exact(p, t);
    const GridFunction upwind = transport_upwind(p, t, 4096, 0.95);
    CHECK(norm_l1(exact - upwind) < 2e-3);
}

TEST_CASE("transport_upwind: trivial and full-period behaviour") {
    const Matrix zero = Matrix::Zero(1, 1);
    TransportProblem p;
    p.coupling = TransportCoupling{zero};
    p.eps = 0.5;
    p.u0 = GridFunction::from_profile(1, 128, [](Index, double x) { return std::sin(2.0 * M_PI * x); });

    const GridFunction still = transport_upwind(p, 0.0, 128, 0.8);
    CHECK((still.values() - p.u0.values()).cwiseAbs().maxCoeff() == 0.0);

    const GridFunction once = transport_upwind(p, p.eps, 128, 0.8);
    CHECK(norm_l1(once - p.u0) < 5.0 / 128.0);
}

TEST_CASE("transport_upwind: first-order refinement against the exact solution") {
    const Matrix b = random_b(2, 11, 1.0);
    const double t = 0.2, eps = 0.2;
    double previous = -1.0;
    for (Index cells : {128, 256, 512}) {
        auto p = smooth_problem(2, cells, eps, b);
        const double err = norm_l1(transport_exact(p, t) - transport_upwind(p, t, cells, 0.8));
        if (previous > 0.0) CHECK(err < 0.7 * previous);
        previous = err;
    }
}

TEST_CASE("transport_upwind: guards against absurd step counts") {
    TransportProblem p;
    p.coupling = TransportCoupling{Matrix::Zero(1, 1)};
    p.eps = 1e-9;
    p.u0 = GridFunction(1, 64);
    CHECK_THROWS_AS(transport_upwind(p, 1.0, 4096, 0.5), NumericalError);
}

TEST_CASE("transport_exact: approximate semigroup property on smooth data") {
    const Matrix b = random_b(2, 13, 0.8);
    auto p = smooth_problem(2, 1024, 0.3, b);
    const double t = 0.37, s = 0.21;
    const GridFunction joint = transport_exact(p, t + s);

    TransportProblem restart = p;
    restart.u0 = transport_exact(p, t);
    restart.profiles.clear();  // continue from grid samples
    const GridFunction chained = transport_exact(restart, s);
    CHECK(norm_l1(joint - chained) < 2e-3);
}

TEST_CASE("transport growth bound") {
    // ||u_eps(t)||_L1 <= (1 + eps ||B||) e^{t ||B||} ||u0||_L1.
    for (unsigned seed : {3u, 4u, 5u}) {
        const Matrix b = random_b(3, seed, 1.2);
        const double eps = 0.15;
        auto p = smooth_problem(3, 512, eps, b);
        const double bnorm = b.cwiseAbs().colwise().sum().maxCoeff();
        for (double t : {0.3, 0.9, 1.7}) {
            const double lhs = norm_l1(transport_exact(p, t));
            const double rhs = (1.0 + eps * bnorm) * std::exp(t * bnorm) * norm_l1(p.u0);
            CHECK(lhs <= rhs * (1.0 + 1e-10));
        }
    }
}

TEST_CASE("stochastic_decomposition: constant stationary data has no layer") {
    Matrix t(2, 2);
    t << 0.9, 0.2, 0.1, 0.8;
    const Vector n = perron_vector(t);
    const GridFunction u0 = GridFunction::from_constant(n, 32);
    const auto split = stochastic_decomposition(t, u0);
    CHECK(split.rho == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(norm_sup(split.layer0) < 1e-12);
}

TEST_CASE("stochastic_decomposition: symmetric swap network") {
    Matrix t(2, 2);
    t << 0, 1, 1, 0;
    const GridFunction u0 =
        GridFunction::from_constant((Vector(2) << 1.0, 0.0).finished(), 16);
    const auto split = stochastic_decomposition(t, u0);
    CHECK(split.rho == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(split.stationary(0) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(split.layer0(0, 0) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(split.layer0(1, 0) == doctest::Approx(-0.5).epsilon(1e-12));
    CHECK(std::abs(project_average(split.layer0).sum()) < 1e-12);
}

TEST_CASE("stochastic boundary matrix conserves total mass") {
    Matrix t(3, 3);
    t << 0.5, 0.3, 0.2, 0.25, 0.4, 0.3, 0.25, 0.3, 0.5;
    REQUIRE((t.colwise().sum().array() - 1.0).abs().maxCoeff() < 1e-15);

    // Unscaled evolution with boundary matrix T: eps = 1, B = T - I.
    TransportProblem p;
    p.coupling = TransportCoupling::from_boundary_matrix(t, 1.0);
    p.eps = 1.0;
    p.u0 = GridFunction::from_profile(3, 256, [](Index j, double x) {
        return 0.5 + 0.5 * std::cos(2.0 * M_PI * x + static_cast<double>(j));
    });
    const double rho = transport_projected(p, 0.0).sum();
    for (double time : {0.13, 0.47, 1.0, 2.31}) {
        CHECK(std::abs(transport_projected(p, time).sum() - rho) < 1e-10);
    }
}
