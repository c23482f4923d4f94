// pauli.hpp - Pauli basis and small helpers for 2x2 operator algebra

#pragma once

#include <Eigen/Dense>
#include <array>
#include <complex>

namespace spinbath {

using Complex = std::complex<double>;
using Matrix2c = Eigen::Matrix2cd;
using Matrix4d = Eigen::Matrix4d;
using Matrix3cd = Eigen::Matrix3cd;

namespace pauli {

inline const Matrix2c& identity() {
    static const Matrix2c m = Matrix2c::Identity();
    return m;
}

inline const Matrix2c& sigma_x() {
    static const Matrix2c m = (Matrix2c() << 0, 1, 1, 0).finished();
    return m;
}

inline const Matrix2c& sigma_y() {
    static const Matrix2c m =
        (Matrix2c() << 0, Complex(0, -1), Complex(0, 1), 0).finished();
    return m;
}

inline const Matrix2c& sigma_z() {
    static const Matrix2c m = (Matrix2c() << 1, 0, 0, -1).finished();
    return m;
}

// sigma(0) = identity, sigma(1..3) = x, y, z
inline const Matrix2c& sigma(int mu) {
    static const std::array<Matrix2c, 4> basis = {identity(), sigma_x(),
                                                  sigma_y(), sigma_z()};
    return basis[static_cast<std::size_t>(mu)];
}

inline Matrix2c commutator(const Matrix2c& a, const Matrix2c& b) {
    return a * b - b * a;
}

inline Matrix2c anticommutator(const Matrix2c& a, const Matrix2c& b) {
    return a * b + b * a;
}

inline double hermitian_defect(const Matrix2c& a) {
    return (a - a.adjoint()).cwiseAbs().maxCoeff();
}

// 1/2 (v0*I + vx*sx + vy*sy + vz*sz); v0=1 gives a unit-trace state
inline Matrix2c from_bloch(double v0, double vx, double vy, double vz) {
    return 0.5 * (v0 * identity() + vx * sigma_x() + vy * sigma_y() +
                  vz * sigma_z());
}

inline double expectation(const Matrix2c& rho, int mu) {
    return (rho * sigma(mu)).trace().real();
}

}  // namespace pauli

// 2x2 complex operator with an optional Hermiticity tag.
struct TwoLevelOperator {
    Matrix2c matrix = Matrix2c::Zero();
    bool hermitian = false;

    static TwoLevelOperator hermitian_op(const Matrix2c& m,
                                         double tol = 1e-12);
    static TwoLevelOperator general_op(const Matrix2c& m) {
        return {m, false};
    }
};

}  // namespace spinbath
