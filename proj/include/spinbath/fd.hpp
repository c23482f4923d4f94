// fd.hpp - finite differences and quadrature on uniform matrix-valued grids

#pragma once

#include <vector>

#include "spinbath/pauli.hpp"

namespace spinbath {

enum class FdOrder {
    second,  // 3-point centered, 2nd-order one-sided at the ends
    fourth   // 5-point centered (Richardson-refined), one-sided at the ends
};

// d/dt of a matrix series sampled at spacing dt.
std::vector<Matrix4d> derivative_series(const std::vector<Matrix4d>& f,
                                        double dt,
                                        FdOrder order = FdOrder::second);

// Cumulative trapezoidal integral of a scalar series; out[0] = 0.
std::vector<double> cumulative_trapezoid(const std::vector<double>& f,
                                         double dt);

// Trapezoidal integral of a matrix series over the whole grid.
Matrix4d trapezoid(const std::vector<Matrix4d>& f, double dt);

}  // namespace spinbath
