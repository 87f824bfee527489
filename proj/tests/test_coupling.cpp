#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "netlump/coupling.hpp"

#include <algorithm>
#include <numeric>
#include <random>

using namespace netlump;

namespace {

Matrix random_matrix(Index m, std::mt19937& gen, double lo = -1.0, double hi = 1.0) {
    std::uniform_real_distribution<double> dist(lo, hi);
    Matrix a(m, m);
    for (Index i = 0; i < m; ++i)
        for (Index j = 0; j < m; ++j) a(i, j) = dist(gen);
    return a;
}

DiffusionCoupling random_coupling(Index m, std::mt19937& gen) {
    return {random_matrix(m, gen), random_matrix(m, gen), random_matrix(m, gen), random_matrix(m, gen)};
}

// Two-edge chain: tail of edge 1 and head of edge 2 share a vertex, substance
// flows both ways across it.
EdgeExchangeRates chain_rates() {
    EdgeExchangeRates rates;
    rates.left_exit = (Vector(2) << 1.0, 0.0).finished();
    rates.right_exit = (Vector(2) << 0.0, 1.0).finished();
    rates.left_in.push_back({0, 1, 1, 1.0});   // into tail of edge 1 from edge 2 (head side)
    rates.right_in.push_back({1, 0, 0, 1.0});  // into head of edge 2 from edge 1 (tail side)
    return rates;
}

// Exhaustive reachability oracle: Floyd-Warshall closure on the pattern.
bool connected_oracle(const Matrix& t) {
    const Index m = t.rows();
    std::vector<std::vector<char>> reach(m, std::vector<char>(m, 0));
    for (Index i = 0; i < m; ++i)
        for (Index j = 0; j < m; ++j) reach[i][j] = (i == j) || t(j, i) != 0.0;  // arc i -> j
    for (Index k = 0; k < m; ++k)
        for (Index i = 0; i < m; ++i)
            for (Index j = 0; j < m; ++j)
                if (reach[i][k] && reach[k][j]) reach[i][j] = 1;
    for (Index i = 0; i < m; ++i)
        for (Index j = 0; j < m; ++j)
            if (!reach[i][j]) return false;
    return true;
}

}  // namespace

TEST_CASE("aggregated_matrix: zero and single-block cases") {
    const auto zero = DiffusionCoupling::zero(3);
    CHECK(aggregated_matrix(zero).cwiseAbs().maxCoeff() == 0.0);

    auto c = DiffusionCoupling::zero(2);
    c.k10 = Matrix::Identity(2, 2);
    CHECK((aggregated_matrix(c) - Matrix::Identity(2, 2)).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("aggregated_matrix of the balanced chain has zero column sums") {
    const auto coupling = coupling_from_rates(chain_rates());
    const Matrix k = aggregated_matrix(coupling);
    CHECK(k.colwise().sum().cwiseAbs().maxCoeff() < 1e-14);
    CHECK(kolmogorov_check(lumped_markov_generator(coupling)));
}

TEST_CASE("auxiliary_sums: definitions and aggregate identity") {
    auto c = DiffusionCoupling::zero(2);
    c.k11 = Matrix::Identity(2, 2);
    const auto sums = auxiliary_sums(c);
    CHECK((sums.plus1 - Matrix::Identity(2, 2)).cwiseAbs().maxCoeff() == 0.0);
    CHECK((sums.minus1 - Matrix::Identity(2, 2)).cwiseAbs().maxCoeff() == 0.0);
    CHECK(sums.plus0.cwiseAbs().maxCoeff() == 0.0);
    CHECK(sums.minus0.cwiseAbs().maxCoeff() == 0.0);

    std::mt19937 gen(3);
    for (int rep = 0; rep < 5; ++rep) {
        const auto rc = random_coupling(3, gen);
        const auto s = auxiliary_sums(rc);
        CHECK((aggregated_matrix(rc) - (s.minus0 + s.minus1)).cwiseAbs().maxCoeff() < 1e-15);
    }
}

TEST_CASE("check_diffusion_positivity") {
    CHECK(check_diffusion_positivity(DiffusionCoupling::zero(2)).ok);

    auto c = DiffusionCoupling::zero(2);
    c.k01 << 0, 0, 1, 0;
    const auto report = check_diffusion_positivity(c);
    CHECK_FALSE(report.ok);
    REQUIRE(report.violations.size() == 1);
    CHECK(report.violations[0].block == "K01");
    CHECK(report.violations[0].i == 1);
    CHECK(report.violations[0].j == 0);

    CHECK(check_diffusion_positivity(coupling_from_rates(chain_rates())).ok);
}

TEST_CASE("check_diffusion_positivity is permutation invariant") {
    std::mt19937 gen(19);
    const Index m = 4;
    for (int rep = 0; rep < 10; ++rep) {
        auto c = random_coupling(m, gen);
        std::vector<Index> perm(m);
        std::iota(perm.begin(), perm.end(), 0);
        std::shuffle(perm.begin(), perm.end(), gen);
        Matrix p = Matrix::Zero(m, m);
        for (Index i = 0; i < m; ++i) p(i, perm[static_cast<size_t>(i)]) = 1.0;
        const DiffusionCoupling permuted{p * c.k00 * p.transpose(), p * c.k01 * p.transpose(),
                                         p * c.k10 * p.transpose(), p * c.k11 * p.transpose()};
        CHECK(check_diffusion_positivity(c).ok == check_diffusion_positivity(permuted).ok);
        CHECK(check_diffusion_positivity(c).violations.size() ==
              check_diffusion_positivity(permuted).violations.size());
    }
}

TEST_CASE("check_markov_conditions") {
    CHECK(check_markov_conditions(DiffusionCoupling::zero(3)));

    auto c = DiffusionCoupling::zero(2);
    c.k00 = Matrix::Identity(2, 2);
    CHECK_FALSE(check_markov_conditions(c));

    CHECK(check_markov_conditions(coupling_from_rates(chain_rates())));
    CHECK(check_markov_conditions(coupling_from_rates(chain_rates().with_balanced_exits())));
}

TEST_CASE("Markov couplings from rates induce a Kolmogorov lumped generator") {
    std::mt19937 gen(29);
    std::uniform_real_distribution<double> rate(0.1, 2.0);
    std::bernoulli_distribution flip(0.5);
    for (int rep = 0; rep < 20; ++rep) {
        // Random network on 4 edges: each ordered pair gets an l or an r rate.
        EdgeExchangeRates rates;
        rates.left_exit = Vector::Zero(4);
        rates.right_exit = Vector::Zero(4);
        for (Index i = 0; i < 4; ++i)
            for (Index j = 0; j < 4; ++j) {
                if (i == j || flip(gen)) continue;
                EdgeExchangeRates::Entry e{i, j, flip(gen) ? 1 : 0, rate(gen)};
                if (flip(gen))
                    rates.left_in.push_back(e);
                else
                    rates.right_in.push_back(e);
            }
        const auto balanced = rates.with_balanced_exits();
        const auto coupling = coupling_from_rates(balanced);
        CHECK(check_markov_conditions(coupling));
        CHECK(kolmogorov_check(lumped_markov_generator(coupling)));
        CHECK(check_diffusion_positivity(coupling).ok);
    }
}

TEST_CASE("kolmogorov_check") {
    CHECK(kolmogorov_check(Matrix::Zero(2, 2)));
    Matrix good(2, 2);
    good << -1, 1, 1, -1;
    CHECK(kolmogorov_check(good));
    Matrix bad(2, 2);
    bad << -1, 0, 1, -1;
    CHECK_FALSE(kolmogorov_check(bad));
}

TEST_CASE("coupling_from_rates: trivial cases") {
    EdgeExchangeRates none;
    none.left_exit = Vector::Zero(2);
    none.right_exit = Vector::Zero(2);
    const auto zero = coupling_from_rates(none);
    CHECK(aggregated_matrix(zero).cwiseAbs().maxCoeff() == 0.0);

    EdgeExchangeRates single;
    single.left_exit = Vector::Ones(1);
    single.right_exit = Vector::Ones(1);
    const auto c = coupling_from_rates(single);
    CHECK(c.k00(0, 0) == 1.0);
    CHECK(c.k11(0, 0) == -1.0);
    CHECK(c.k01.cwiseAbs().maxCoeff() == 0.0);
    CHECK(c.k10.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("coupling_from_rates rejects double-booked pairs") {
    EdgeExchangeRates rates;
    rates.left_exit = Vector::Zero(2);
    rates.right_exit = Vector::Zero(2);
    rates.left_in.push_back({0, 1, 0, 1.0});
    rates.right_in.push_back({0, 1, 1, 0.5});
    CHECK_THROWS_AS(coupling_from_rates(rates), ValidationError);
}

TEST_CASE("perron_vector: swap, identity, and a 2x2 chain") {
    Matrix swap(2, 2);
    swap << 0, 1, 1, 0;
    const Vector n = perron_vector(swap);
    CHECK(n(0) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(n(1) == doctest::Approx(0.5).epsilon(1e-12));

    CHECK(perron_vector(Matrix::Identity(1, 1))(0) == doctest::Approx(1.0));

    Matrix t(2, 2);
    t << 0.9, 0.2, 0.1, 0.8;
    const Vector stat = perron_vector(t);
    // Null space of T - I solved directly: (-0.1 a + 0.2 b = 0) -> a = 2b.
    CHECK(stat(0) == doctest::Approx(2.0 / 3.0).epsilon(1e-10));
    CHECK(stat(1) == doctest::Approx(1.0 / 3.0).epsilon(1e-10));
    CHECK((t * stat - stat).cwiseAbs().maxCoeff() <= 1e-10);
    CHECK(stat.sum() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("perron_vector rejects bad inputs with distinct codes") {
    Matrix reducible(2, 2);
    reducible << 1, 0.5, 0, 0.5;
    try {
        perron_vector(reducible);
        FAIL("expected PerronError");
    } catch (const PerronError& err) {
        CHECK(err.status() == PerronStatus::reducible);
    }

    Matrix drift(2, 2);
    drift << 0.5, 0.5, 0.4, 0.5;
    try {
        perron_vector(drift);
        FAIL("expected PerronError");
    } catch (const PerronError& err) {
        CHECK(err.status() == PerronStatus::not_stochastic);
    }

    Matrix negative(2, 2);
    negative << 1.2, 0.0, -0.2, 1.0;
    try {
        perron_vector(negative);
        FAIL("expected PerronError");
    } catch (const PerronError& err) {
        CHECK(err.status() == PerronStatus::negative_entries);
    }
}

TEST_CASE("is_strongly_connected") {
    Matrix swap(2, 2);
    swap << 0, 1, 1, 0;
    CHECK(is_strongly_connected(swap));

    Matrix upper(3, 3);
    upper << 1, 1, 1, 0, 1, 1, 0, 0, 1;
    CHECK_FALSE(is_strongly_connected(upper));

    // 5-node cyclic permutation.
    Matrix cycle = Matrix::Zero(5, 5);
    for (Index i = 0; i < 5; ++i) cycle((i + 1) % 5, i) = 1.0;
    CHECK(is_strongly_connected(cycle));
    CHECK(connected_oracle(cycle));

    std::mt19937 gen(31);
    std::bernoulli_distribution edge(0.3);
    for (int rep = 0; rep < 30; ++rep) {
        Matrix t = Matrix::Zero(5, 5);
        for (Index i = 0; i < 5; ++i)
            for (Index j = 0; j < 5; ++j)
                if (edge(gen)) t(i, j) = 1.0;
        CHECK(is_strongly_connected(t) == connected_oracle(t));
    }
}
