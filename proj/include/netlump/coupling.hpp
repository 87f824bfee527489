#pragma once

#include "netlump/types.hpp"

#include <string>
#include <vector>

namespace netlump {

/// The four m x m boundary blocks of the diffusion interface condition
///   du/dx(0) = eps (k00 u(0) + k01 u(1)),
///   du/dx(1) = eps (k10 u(0) + k11 u(1)).
struct DiffusionCoupling {
    Matrix k00, k01, k10, k11;

    Index edges() const { return k00.rows(); }

    static DiffusionCoupling zero(Index m) {
        return {Matrix::Zero(m, m), Matrix::Zero(m, m), Matrix::Zero(m, m), Matrix::Zero(m, m)};
    }

    void validate() const {
        const Index m = k00.rows();
        for (const Matrix* k : {&k00, &k01, &k10, &k11}) {
            if (k->rows() != m || k->cols() != m)
                throw ValidationError("DiffusionCoupling: all four blocks must be m x m");
            if (!k->allFinite())
                throw ValidationError("DiffusionCoupling: non-finite entries");
        }
    }
};

/// Boundary perturbation of the transport interface condition
/// u(0) = (I + eps B) u(1).
struct TransportCoupling {
    Matrix b;

    Index edges() const { return b.rows(); }

    Matrix boundary_matrix(double eps) const {
        return Matrix::Identity(b.rows(), b.cols()) + eps * b;
    }

    /// Build from a fixed boundary matrix T, so that I + eps B = T.
    static TransportCoupling from_boundary_matrix(const Matrix& t, double eps) {
        if (!(eps > 0)) throw ValidationError("TransportCoupling: eps must be positive");
        return {(t - Matrix::Identity(t.rows(), t.cols())) / eps};
    }

    void validate() const {
        if (b.rows() != b.cols()) throw ValidationError("TransportCoupling: B must be square");
        if (!b.allFinite()) throw ValidationError("TransportCoupling: non-finite entries");
    }
};

/// Exit/entry rates of a physical edge network. An entry (i, j, endpoint, rate)
/// feeds edge i at the named end from edge j, read off edge j at its endpoint
/// (0 = tail, 1 = head). left_in covers the tails, right_in the heads.
struct EdgeExchangeRates {
    struct Entry {
        Index i = 0, j = 0;
        int endpoint = 0;  // which end of edge j faces the shared vertex
        double rate = 0.0;
    };

    Vector left_exit;   // l_i: exit rate through the tail of edge i
    Vector right_exit;  // r_i: exit rate through the head of edge i
    std::vector<Entry> left_in;
    std::vector<Entry> right_in;

    Index edges() const { return left_exit.size(); }

    void validate() const {
        const Index m = edges();
        if (right_exit.size() != m)
            throw ValidationError("EdgeExchangeRates: exit-rate vectors must have equal length");
        for (const auto* list : {&left_in, &right_in})
            for (const Entry& e : *list) {
                if (e.i < 0 || e.i >= m || e.j < 0 || e.j >= m)
                    throw ValidationError("EdgeExchangeRates: pair index out of range");
                if (e.endpoint != 0 && e.endpoint != 1)
                    throw ValidationError("EdgeExchangeRates: endpoint tag must be 0 or 1");
            }
        // At most one of r_ij, l_ij may be nonzero for each ordered pair.
        for (const Entry& l : left_in)
            for (const Entry& r : right_in)
                if (l.i == r.i && l.j == r.j && l.rate != 0.0 && r.rate != 0.0)
                    throw ValidationError(
                        "EdgeExchangeRates: pair (" + std::to_string(l.i + 1) + "," +
                        std::to_string(l.j + 1) + ") has both l and r rates set");
    }

    /// Copy with exit rates balanced against the pair rates:
    /// l_i = sum_j l_ij, r_i = sum_j r_ij.
    EdgeExchangeRates with_balanced_exits() const {
        EdgeExchangeRates out = *this;
        out.left_exit.setZero();
        out.right_exit.setZero();
        for (const Entry& e : left_in) out.left_exit(e.i) += e.rate;
        for (const Entry& e : right_in) out.right_exit(e.i) += e.rate;
        return out;
    }
};

/// Generator of the lumped edge-total dynamics: K = k10 - k00 + k11 - k01.
inline Matrix aggregated_matrix(const DiffusionCoupling& c) {
    c.validate();
    return c.k10 - c.k00 + c.k11 - c.k01;
}

/// The four combination blocks used by the expansion machinery.
struct AuxiliarySums {
    Matrix plus0;   // k01 + k00
    Matrix plus1;   // k10 + k11
    Matrix minus0;  // k10 - k00
    Matrix minus1;  // k11 - k01
};

inline AuxiliarySums auxiliary_sums(const DiffusionCoupling& c) {
    c.validate();
    return {c.k01 + c.k00, c.k10 + c.k11, c.k10 - c.k00, c.k11 - c.k01};
}

/// Sign pattern under which the diffusion semigroup is positivity preserving:
/// -k00 and k11 nonnegative off-diagonal, -k01 and k10 nonnegative everywhere.
struct PositivityReport {
    struct Violation {
        std::string block;
        Index i, j;
        double value;
    };
    bool ok = true;
    std::vector<Violation> violations;
};

inline PositivityReport check_diffusion_positivity(const DiffusionCoupling& c) {
    c.validate();
    PositivityReport report;
    const Index m = c.edges();
    auto scan = [&](const Matrix& k, double sign, bool off_diagonal_only, const char* name) {
        for (Index i = 0; i < m; ++i)
            for (Index j = 0; j < m; ++j) {
                if (off_diagonal_only && i == j) continue;
                if (sign * k(i, j) < 0.0) {
                    report.ok = false;
                    report.violations.push_back({name, i, j, k(i, j)});
                }
            }
    };
    scan(c.k00, -1.0, true, "K00");
    scan(c.k11, +1.0, true, "K11");
    scan(c.k01, -1.0, false, "K01");
    scan(c.k10, +1.0, false, "K10");
    return report;
}

/// Mass conservation of the density formulation: for every edge i the row sums
/// sum_j (k00_ij + k01_ij) and sum_j (k10_ij + k11_ij) must vanish.
inline bool check_markov_conditions(const DiffusionCoupling& c, double tol = -1.0) {
    c.validate();
    if (tol < 0) tol = structural_tolerance();
    const Vector tail = (c.k00 + c.k01).rowwise().sum();
    const Vector head = (c.k10 + c.k11).rowwise().sum();
    return tail.cwiseAbs().maxCoeff() <= tol && head.cwiseAbs().maxCoeff() <= tol;
}

/// Kolmogorov (CTMC generator) test: off-diagonal nonnegative, columns sum to 0.
inline bool kolmogorov_check(const Matrix& k, double tol = -1.0) {
    if (k.rows() != k.cols()) throw ValidationError("kolmogorov_check: matrix must be square");
    if (tol < 0) tol = structural_tolerance();
    for (Index i = 0; i < k.rows(); ++i)
        for (Index j = 0; j < k.cols(); ++j)
            if (i != j && k(i, j) < -tol) return false;
    return k.colwise().sum().cwiseAbs().maxCoeff() <= tol;
}

/// Generator of the lumped vertex Markov chain in the density formulation;
/// Kolmogorov whenever the coupling satisfies the Markov conditions.
inline Matrix lumped_markov_generator(const DiffusionCoupling& c) {
    return aggregated_matrix(c).transpose();
}

/// Boundary blocks from network exchange rates:
///   k00_ij = -l_ij (tag 0), k01_ij = -l_ij (tag 1), k00_ii = l_i,
///   k10_ij =  r_ij (tag 0), k11_ij =  r_ij (tag 1), k11_ii = -r_i.
inline DiffusionCoupling coupling_from_rates(const EdgeExchangeRates& rates) {
    rates.validate();
    const Index m = rates.edges();
    DiffusionCoupling c = DiffusionCoupling::zero(m);
    for (Index i = 0; i < m; ++i) {
        c.k00(i, i) = rates.left_exit(i);
        c.k11(i, i) = -rates.right_exit(i);
    }
    for (const auto& e : rates.left_in)
        (e.endpoint == 0 ? c.k00 : c.k01)(e.i, e.j) -= e.rate;
    for (const auto& e : rates.right_in)
        (e.endpoint == 0 ? c.k10 : c.k11)(e.i, e.j) += e.rate;
    return c;
}

/// Strong connectivity of the digraph with an arc j -> i whenever T_ij != 0.
inline bool is_strongly_connected(const Matrix& t) {
    if (t.rows() != t.cols()) throw ValidationError("is_strongly_connected: matrix must be square");
    const Index m = t.rows();
    auto reaches_all = [&](bool transpose) {
        std::vector<char> seen(static_cast<size_t>(m), 0);
        std::vector<Index> stack{0};
        seen[0] = 1;
        Index count = 1;
        while (!stack.empty()) {
            const Index u = stack.back();
            stack.pop_back();
            for (Index w = 0; w < m; ++w) {
                const double entry = transpose ? t(u, w) : t(w, u);
                if (entry != 0.0 && !seen[static_cast<size_t>(w)]) {
                    seen[static_cast<size_t>(w)] = 1;
                    ++count;
                    stack.push_back(w);
                }
            }
        }
        return count == m;
    };
    return reaches_all(false) && reaches_all(true);
}

enum class PerronStatus { ok, not_square, negative_entries, not_stochastic, reducible, no_convergence };

class PerronError : public ValidationError {
public:
    PerronError(PerronStatus status, const std::string& what)
        : ValidationError(what), status_(status) {}
    PerronStatus status() const { return status_; }

private:
    PerronStatus status_;
};

/// Stationary vector N >= 0 of an irreducible column-stochastic matrix,
/// normalised so that 1 . N = 1, by power iteration on (T + I)/2 to residual
/// ||TN - N||_inf <= 1e-12.
inline Vector perron_vector(const Matrix& t) {
    if (t.rows() != t.cols())
        throw PerronError(PerronStatus::not_square, "perron_vector: matrix must be square");
    const Index m = t.rows();
    if (t.minCoeff() < -structural_tolerance())
        throw PerronError(PerronStatus::negative_entries, "perron_vector: negative entries");
    if ((t.colwise().sum().array() - 1.0).abs().maxCoeff() > 1e-10)
        throw PerronError(PerronStatus::not_stochastic,
                          "perron_vector: columns must sum to 1 within 1e-10");
    if (!is_strongly_connected(t))
        throw PerronError(PerronStatus::reducible, "perron_vector: matrix is reducible");

    // (T + I)/2 removes periodicity while keeping the same fixed vector.
    Vector n = Vector::Constant(m, 1.0 / static_cast<double>(m));
    constexpr int max_iterations = 100000;
    constexpr double residual_target = 1e-12;
    for (int it = 0; it < max_iterations; ++it) {
        Vector next = 0.5 * (t * n + n);
        next /= next.sum();
        n = next;
        if ((t * n - n).cwiseAbs().maxCoeff() <= residual_target) return n;
    }
    throw PerronError(PerronStatus::no_convergence,
                      "perron_vector: power iteration did not reach residual 1e-12");
}

}  // namespace netlump
