#include "spinbath/gqme.hpp"

#include <algorithm>
#include <cmath>

#include <unsupported/Eigen/MatrixFunctions>

#include "spinbath/errors.hpp"
#include "spinbath/io.hpp"

namespace spinbath {

Matrix4d drift_matrix(const ModelParams& p, double t) {
    const double eps = drive_bias(t, p);
    Matrix4d x = Matrix4d::Zero();
    x(1, 2) = 2.0 * eps;
    x(2, 1) = -2.0 * eps;
    x(2, 3) = 2.0 * p.delta;
    x(3, 2) = -2.0 * p.delta;
    return x;
}

const Matrix4d& DriftMatrix::stationary() const {
    if (!constant || x.empty()) {
        throw ConfigError("drift matrix is not stationary (epsd != 0?)");
    }
    return x.front();
}

DriftMatrix drift_series(const ModelParams& p, double t0, double dt,
                         std::size_t n) {
    DriftMatrix out;
    out.t0 = t0;
    out.dt = dt;
    out.constant = p.epsd == 0.0;
    out.x.reserve(n);
    for (std::size_t k = 0; k < n; ++k) {
        out.x.push_back(drift_matrix(p, t0 + static_cast<double>(k) * dt));
    }
    return out;
}

Matrix4d closure_drift(const BathExpansion& bath) {
    Matrix4d d = Matrix4d::Zero();
    d(1, 1) = -4.0 * bath.delta_term;
    d(2, 2) = -4.0 * bath.delta_term;
    return d;
}

DriftMatrix effective_drift(const ModelParams& p, const BathExpansion& bath,
                            double t0, double dt, std::size_t n) {
    DriftMatrix out = drift_series(p, t0, dt, n);
    const Matrix4d closure = closure_drift(bath);
    for (auto& x : out.x) x += closure;
    return out;
}

namespace {

void require_stationary(const StcfTrajectory& traj) {
    if (traj.model.epsd != 0.0) {
        throw ConfigError(
            "kernel extraction requires the stationary case (epsd = 0); "
            "driven two-time extraction is not available in v1");
    }
}

}  // namespace

std::vector<Matrix4d> kernel_k3(const StcfTrajectory& traj,
                               const DriftMatrix& x, FdOrder order) {
    require_stationary(traj);
    const Matrix4d& xs = x.stationary();
    const auto cdot = derivative_series(traj.c, traj.dt, order);
    std::vector<Matrix4d> k3(traj.size());
    for (std::size_t j = 0; j < traj.size(); ++j) {
        k3[j] = -cdot[j] + xs * traj.c[j];
    }
    return k3;
}

std::vector<Matrix4d> kernel_k1(const std::vector<Matrix4d>& k3, double dt,
                               const DriftMatrix& x, FdOrder order) {
    const Matrix4d& xs = x.stationary();
    const auto k3dot = derivative_series(k3, dt, order);
    std::vector<Matrix4d> k1(k3.size());
    for (std::size_t j = 0; j < k3.size(); ++j) {
        k1[j] = k3dot[j] - k3[j] * xs;
    }
    return k1;
}

KernelTrajectory solve_volterra(const std::vector<Matrix4d>& k1,
                                const std::vector<Matrix4d>& k3, double dt) {
    if (k1.size() != k3.size() || k1.empty()) {
        throw ConfigError("solve_volterra: kernel series mismatch");
    }
    const std::size_t n = k1.size();
    KernelTrajectory out;
    out.dt = dt;
    out.k.resize(n);
    out.k1 = k1;
    out.k3 = k3;
    out.k[0] = k1[0];

    // implicit factor from the trapezoid weight of the u = 0 endpoint
    const Matrix4d a = Matrix4d::Identity() - 0.5 * dt * k3[0];
    Eigen::FullPivLU<Matrix4d> lu(a);
    if (lu.rcond() < 1e-10) {
        throw NumericalError("solve_volterra: implicit solve ill-conditioned");
    }

    for (std::size_t j = 1; j < n; ++j) {
        Matrix4d rhs = k1[j] + 0.5 * dt * k3[j] * out.k[0];
        for (std::size_t m = 1; m < j; ++m) {
            rhs += dt * k3[m] * out.k[j - m];
        }
        out.k[j] = lu.solve(rhs);
    }
    // the last two lags carry the nested one-sided stencils of K1; drop
    // them so downstream consumers see centered-stencil data only
    const std::size_t keep = n > 4 ? n - 2 : n;
    out.k.resize(keep);
    out.k1.resize(keep);
    out.k3.resize(keep);
    out.norm_series.resize(keep);
    for (std::size_t j = 0; j < keep; ++j) {
        out.norm_series[j] = out.k[j].cwiseAbs().maxCoeff();
    }
    return out;
}

double gqme_residual(const StcfTrajectory& traj, const DriftMatrix& x,
                     const KernelTrajectory& kernel) {
    require_stationary(traj);
    if (std::abs(kernel.dt - traj.dt) > 1e-12) {
        throw ConfigError("gqme_residual: kernel and trajectory grids differ");
    }
    const Matrix4d& xs = x.stationary();
    const auto cdot = derivative_series(traj.c, traj.dt, FdOrder::second);
    const std::size_t n = std::min(traj.size(), kernel.size());

    double residual = 0.0;
    // skip the one-sided boundary stencils at both grid ends
    for (std::size_t j = 2; j + 2 < n; ++j) {
        Matrix4d conv = Matrix4d::Zero();
        for (std::size_t m = 0; m <= j; ++m) {
            const double w = (m == 0 || m == j) ? 0.5 : 1.0;
            conv += w * traj.c[m] * kernel.k[j - m];
        }
        conv *= traj.dt;
        const Matrix4d r = cdot[j] - traj.c[j] * xs + conv;
        residual = std::max(residual, r.cwiseAbs().maxCoeff());
    }
    return residual;
}

Matrix4d bm_generator(const DriftMatrix& x, const KernelTrajectory& kernel) {
    if (kernel.size() < 10) {
        throw ConfigError("bm_generator: kernel grid too short");
    }
    const double peak =
        *std::max_element(kernel.norm_series.begin(), kernel.norm_series.end());
    const std::size_t tail_from =
        kernel.size() - std::max<std::size_t>(1, kernel.size() / 10);
    double tail = 0.0;
    for (std::size_t j = tail_from; j < kernel.size(); ++j) {
        tail = std::max(tail, kernel.norm_series[j]);
    }
    const double x_scale = 1.0 + x.stationary().cwiseAbs().maxCoeff();
    if (peak > 1e-6 * x_scale && tail > 0.01 * peak) {
        // decay-rate estimate from the observed tail/peak ratio
        const double t_last = kernel.lag(kernel.size() - 1);
        const double ratio = tail / peak;
        const double needed = ratio < 1.0
            ? t_last * std::log(100.0) / std::log(1.0 / ratio)
            : 4.0 * t_last;
        throw NumericalError(
            "bm_generator: kernel tail not decayed (tail/peak = " +
            format_double(ratio) +
            "); extend the lag grid to roughly t_final ~ " +
            format_double(needed));
    }
    return x.stationary() - trapezoid(kernel.k, kernel.dt);
}

StcfTrajectory bm_propagate(const Matrix4d& m_bm, double dt, std::size_t n) {
    StcfTrajectory out;
    out.t0 = 0.0;
    out.dt = dt;
    out.c.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
        const Matrix4d a = static_cast<double>(k) * dt * m_bm;
        out.c[k] = a.exp();
    }
    return out;
}

std::optional<double> kernel_timescale(const KernelTrajectory& kernel,
                                       double delta) {
    if (!(delta > 0.0 && delta < 1.0)) {
        throw ConfigError("kernel_timescale: delta must be in (0, 1)");
    }
    if (kernel.size() < 2) {
        throw ConfigError("kernel_timescale: kernel grid too short");
    }
    double global_peak = 0.0;
    for (double v : kernel.norm_series) global_peak = std::max(global_peak, v);
    if (global_peak <= 0.0) return std::nullopt;

    std::optional<double> tau_max;
    bool any_unconverged = false;
    for (int mu = 0; mu < 4; ++mu) {
        for (int nu = 0; nu < 4; ++nu) {
            std::vector<double> abs_k(kernel.size());
            double peak = 0.0;
            for (std::size_t j = 0; j < kernel.size(); ++j) {
                abs_k[j] = std::abs(kernel.k[j](mu, nu));
                peak = std::max(peak, abs_k[j]);
            }
            if (peak < 1e-10 * global_peak) continue;  // silent channel
            const auto cum = cumulative_trapezoid(abs_k, kernel.dt);
            // a channel only yields a trustworthy timescale once its
            // cumulative integral has converged on the grid; channels
            // wandering at the extraction noise floor are excluded
            const std::size_t k80 = kernel.size() * 4 / 5;
            if (cum.back() - cum[k80] > 0.05 * cum.back()) {
                any_unconverged = true;
                continue;
            }
            const double target = delta * cum.back();
            for (std::size_t j = 1; j < cum.size(); ++j) {
                if (cum[j] >= target) {
                    const double frac = cum[j] > cum[j - 1]
                        ? (target - cum[j - 1]) / (cum[j] - cum[j - 1])
                        : 0.0;
                    const double tau =
                        kernel.lag(j - 1) + frac * kernel.dt;
                    if (!tau_max || tau > *tau_max) tau_max = tau;
                    break;
                }
            }
        }
    }
    if (!tau_max && any_unconverged) {
        throw NumericalError(
            "kernel_timescale: no channel's cumulative integral converged; "
            "extend the lag grid");
    }
    return tau_max;
}

}  // namespace spinbath
