// gqme.hpp - Nakajima-Zwanzig memory-kernel extraction from projection-free
// STCF input, GQME closure check, Born-Markov reduction and kernel timescale

#pragma once

#include <optional>
#include <vector>

#include "spinbath/fd.hpp"
#include "spinbath/model.hpp"
#include "spinbath/stcf.hpp"

namespace spinbath {

// X(t) = i <<rho_0 s_mu| L_t |s_nu>>; only H_s survives the bath trace,
// leaving +-2 eps(t) on the (x,y) block and +-2 delta on the (y,z) block.
Matrix4d drift_matrix(const ModelParams& p, double t);

struct DriftMatrix {
    double t0 = 0.0;
    double dt = 0.0;
    std::vector<Matrix4d> x;
    bool constant = false;

    // the single matrix of the stationary (epsd = 0) case
    const Matrix4d& stationary() const;
};

DriftMatrix drift_series(const ModelParams& p, double t0, double dt,
                         std::size_t n);

// Bloch-space generator of the Ishizaki-Tanimura closure dissipator,
// diag(0, -4 delta_term, -4 delta_term, 0). The closure is a Markovian
// piece of the simulated Liouvillian, so kernel extraction against the
// simulated C(t) must fold it into the drift.
Matrix4d closure_drift(const BathExpansion& bath);

// drift_series plus the closure generator: the exact time-local part of
// the simulated model. K3 built against it vanishes at zero lag.
DriftMatrix effective_drift(const ModelParams& p, const BathExpansion& bath,
                            double t0, double dt, std::size_t n);

struct KernelTrajectory {
    double dt = 0.0;                // lag spacing
    std::vector<Matrix4d> k;        // memory kernel K(s)
    std::vector<Matrix4d> k1, k3;   // auxiliary kernels on the same grid
    std::vector<double> norm_series;  // max-abs entry of K per lag
    bool boundary_one_sided = true;   // derivative convention at grid ends

    std::size_t size() const { return k.size(); }
    double lag(std::size_t j) const { return static_cast<double>(j) * dt; }
};

// K3(s) = -dC/ds + X C(s); stationary case (epsd = 0) only in v1.
// order selects the finite-difference stencil (second by default, the
// Richardson-refined fourth behind the flag).
std::vector<Matrix4d> kernel_k3(const StcfTrajectory& traj,
                               const DriftMatrix& x,
                               FdOrder order = FdOrder::second);

// K1(s) = dK3/ds - K3(s) X
std::vector<Matrix4d> kernel_k1(const std::vector<Matrix4d>& k3, double dt,
                               const DriftMatrix& x,
                               FdOrder order = FdOrder::second);

// Volterra equation K(s) = K1(s) + int_0^s K3(u) K(s-u) du, marched with
// trapezoidal quadrature and a 4x4 solve for the implicit diagonal term.
// The two boundary lags contaminated by one-sided stencils are dropped
// from the output.
KernelTrajectory solve_volterra(const std::vector<Matrix4d>& k1,
                                const std::vector<Matrix4d>& k3, double dt);

// max-abs residual of dC/dt = C X - int_0^t C(u) K(t-u) du over the
// centered-stencil interior of the grid.
double gqme_residual(const StcfTrajectory& traj, const DriftMatrix& x,
                     const KernelTrajectory& kernel);

// M_BM = X - int_0^inf K; requires a decayed kernel tail.
Matrix4d bm_generator(const DriftMatrix& x, const KernelTrajectory& kernel);

// C_BM(t) = exp(t M_BM) on a fresh uniform grid.
StcfTrajectory bm_propagate(const Matrix4d& m_bm, double dt, std::size_t n);

// Lag where the cumulative integral of |K_mu_nu| reaches fraction delta of
// its total, maximized over entries; nullopt when no channel carries a
// kernel (e.g. eta = 0).
std::optional<double> kernel_timescale(const KernelTrajectory& kernel,
                                       double delta = 0.9);

}  // namespace spinbath
