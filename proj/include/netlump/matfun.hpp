#pragma once

#include "netlump/types.hpp"

#include <Eigen/LU>

namespace netlump {

/// Dense matrix exponential, scaling-and-squaring with the degree-13 Pade
/// approximant and 1-norm based scaling. Suited to the small (m <= ~10),
/// possibly non-normal coupling matrices used here.
template <typename Scalar>
MatrixX<Scalar> matrix_exponential(MatrixX<Scalar> a) {
    if (a.rows() != a.cols()) throw ValidationError("matrix_exponential: matrix must be square");
    if (!a.allFinite()) throw ValidationError("matrix_exponential: non-finite entries");

    static constexpr double theta13 = 5.371920351148152;
    static constexpr double b[] = {64764752532480000.0, 32382376266240000.0, 7771770303897600.0,
                                   1187353796428800.0,  129060195264000.0,  10559470521600.0,
                                   670442572800.0,      33522128640.0,      1323241920.0,
                                   40840800.0,          960960.0,           16380.0,
                                   182.0,               1.0};

    const Index m = a.rows();
    const MatrixX<Scalar> id = MatrixX<Scalar>::Identity(m, m);

    const double norm1 = a.cwiseAbs().colwise().sum().maxCoeff();
    if (norm1 == 0.0) return id;
    int squarings = 0;
    if (norm1 > theta13) {
        squarings = static_cast<int>(std::ceil(std::log2(norm1 / theta13)));
        a /= std::pow(Scalar(2), squarings);
    }

    const MatrixX<Scalar> a2 = a * a;
    const MatrixX<Scalar> a4 = a2 * a2;
    const MatrixX<Scalar> a6 = a4 * a2;

    const MatrixX<Scalar> u =
        a * (a6 * (Scalar(b[13]) * a6 + Scalar(b[11]) * a4 + Scalar(b[9]) * a2) +
             Scalar(b[7]) * a6 + Scalar(b[5]) * a4 + Scalar(b[3]) * a2 + Scalar(b[1]) * id);
    const MatrixX<Scalar> v =
        a6 * (Scalar(b[12]) * a6 + Scalar(b[10]) * a4 + Scalar(b[8]) * a2) +
        Scalar(b[6]) * a6 + Scalar(b[4]) * a4 + Scalar(b[2]) * a2 + Scalar(b[0]) * id;

    MatrixX<Scalar> f = (v - u).partialPivLu().solve(v + u);
    for (int k = 0; k < squarings; ++k) f = f * f;
    return f;
}

/// e^{tK} v0.
template <typename Scalar>
VectorX<Scalar> matrix_exponential_apply(const MatrixX<Scalar>& k, Scalar t, const VectorX<Scalar>& v0) {
    if (k.rows() != k.cols() || k.rows() != v0.size())
        throw ValidationError("matrix_exponential_apply: dimension mismatch");
    if (!std::isfinite(t) || !v0.allFinite())
        throw ValidationError("matrix_exponential_apply: non-finite inputs");
    if (t == Scalar(0)) return v0;
    return matrix_exponential<Scalar>(t * k) * v0;
}

/// T^n by repeated squaring.
template <typename Scalar>
MatrixX<Scalar> matrix_power(MatrixX<Scalar> t, unsigned long long n) {
    if (t.rows() != t.cols()) throw ValidationError("matrix_power: matrix must be square");
    MatrixX<Scalar> result = MatrixX<Scalar>::Identity(t.rows(), t.cols());
    while (n > 0) {
        if (n & 1ull) result = result * t;
        n >>= 1;
        if (n > 0) t = t * t;
    }
    return result;
}

/// T^n v; n = 0 returns v unchanged.
template <typename Scalar>
VectorX<Scalar> matrix_power_apply(const MatrixX<Scalar>& t, unsigned long long n, const VectorX<Scalar>& v) {
    if (t.rows() != t.cols() || t.rows() != v.size())
        throw ValidationError("matrix_power_apply: dimension mismatch");
    if (n == 0) return v;
    return matrix_power(t, n) * v;
}

}  // namespace netlump
