#include "spinbath/fd.hpp"

#include "spinbath/errors.hpp"

namespace spinbath {

std::vector<Matrix4d> derivative_series(const std::vector<Matrix4d>& f,
                                        double dt, FdOrder order) {
    const std::size_t n = f.size();
    if (n < 3) throw NumericalError("derivative_series: need >= 3 samples");
    std::vector<Matrix4d> d(n);

    auto one_sided = [&](std::size_t k, int dir) {
        // 2nd-order: (-3 f0 + 4 f1 - f2) / (2h) toward dir
        const auto s = static_cast<std::ptrdiff_t>(k);
        const Matrix4d& f0 = f[k];
        const Matrix4d& f1 = f[static_cast<std::size_t>(s + dir)];
        const Matrix4d& f2 = f[static_cast<std::size_t>(s + 2 * dir)];
        return (dir / (2.0 * dt)) * (-3.0 * f0 + 4.0 * f1 - f2);
    };

    if (order == FdOrder::second || n < 5) {
        d[0] = one_sided(0, +1);
        for (std::size_t k = 1; k + 1 < n; ++k) {
            d[k] = (f[k + 1] - f[k - 1]) / (2.0 * dt);
        }
        d[n - 1] = one_sided(n - 1, -1);
        return d;
    }

    // 4th-order interior; 4th-order one-sided at the first/last two points
    auto one_sided4 = [&](std::size_t k, int dir) {
        const auto s = static_cast<std::ptrdiff_t>(k);
        const Matrix4d& f0 = f[k];
        const Matrix4d& f1 = f[static_cast<std::size_t>(s + dir)];
        const Matrix4d& f2 = f[static_cast<std::size_t>(s + 2 * dir)];
        const Matrix4d& f3 = f[static_cast<std::size_t>(s + 3 * dir)];
        const Matrix4d& f4 = f[static_cast<std::size_t>(s + 4 * dir)];
        return (dir / (12.0 * dt)) *
               (-25.0 * f0 + 48.0 * f1 - 36.0 * f2 + 16.0 * f3 - 3.0 * f4);
    };
    auto skewed4 = [&](std::size_t k, int dir) {
        // one point on the short side: (-3 f[-1] - 10 f0 + 18 f1 - 6 f2 + f3)/(12h)
        const auto s = static_cast<std::ptrdiff_t>(k);
        const Matrix4d& fm = f[static_cast<std::size_t>(s - dir)];
        const Matrix4d& f0 = f[k];
        const Matrix4d& f1 = f[static_cast<std::size_t>(s + dir)];
        const Matrix4d& f2 = f[static_cast<std::size_t>(s + 2 * dir)];
        const Matrix4d& f3 = f[static_cast<std::size_t>(s + 3 * dir)];
        return (dir / (12.0 * dt)) *
               (-3.0 * fm - 10.0 * f0 + 18.0 * f1 - 6.0 * f2 + f3);
    };

    d[0] = one_sided4(0, +1);
    d[1] = skewed4(1, +1);
    for (std::size_t k = 2; k + 2 < n; ++k) {
        d[k] = (-f[k + 2] + 8.0 * f[k + 1] - 8.0 * f[k - 1] + f[k - 2]) /
               (12.0 * dt);
    }
    d[n - 2] = skewed4(n - 2, -1);
    d[n - 1] = one_sided4(n - 1, -1);
    return d;
}

std::vector<double> cumulative_trapezoid(const std::vector<double>& f,
                                         double dt) {
    std::vector<double> out(f.size(), 0.0);
    for (std::size_t k = 1; k < f.size(); ++k) {
        out[k] = out[k - 1] + 0.5 * dt * (f[k - 1] + f[k]);
    }
    return out;
}

Matrix4d trapezoid(const std::vector<Matrix4d>& f, double dt) {
    Matrix4d acc = Matrix4d::Zero();
    if (f.size() < 2) return acc;
    for (std::size_t k = 0; k < f.size(); ++k) {
        const double w = (k == 0 || k + 1 == f.size()) ? 0.5 : 1.0;
        acc += w * f[k];
    }
    return dt * acc;
}

}  // namespace spinbath
