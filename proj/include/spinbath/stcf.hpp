// stcf.hpp - spin time-correlation matrix C_{mu nu}(t), Bloch-vector
// propagation, stationarity and drive-washout checks

#pragma once

#include <string>
#include <vector>

#include "spinbath/heom.hpp"
#include "spinbath/model.hpp"
#include "spinbath/pauli.hpp"

namespace spinbath {

struct BlochVector {
    double v0 = 1.0;
    double vx = 0.0;
    double vy = 0.0;
    double vz = 0.0;

    double spatial_norm() const;
};

// 4x4 real C_{mu nu}(t) on the uniform grid t0 + k*dt. C(t0) = identity;
// column 0 stays delta_{mu 0}. For two-time objects t0 is the start time
// tau (the drive phase enters through it).
struct StcfTrajectory {
    double t0 = 0.0;
    double dt = 0.0;
    std::vector<Matrix4d> c;
    ModelParams model;
    HeomConfig heom;
    double max_imag_residue = 0.0;

    std::size_t size() const { return c.size(); }
    double time(std::size_t k) const { return t0 + static_cast<double>(k) * dt; }
    std::size_t grid_index(double t, double tol = 1e-9) const;
};

// Four HEOM propagations with tier-0 operators sigma_mu/2;
// C_{mu nu}(t) = tr[rho^mu(t) sigma_nu].
StcfTrajectory compute_stcf(const ModelParams& p, const HeomConfig& cfg);

// Same propagation started at absolute time tau.
StcfTrajectory two_time_stcf(const ModelParams& p, const HeomConfig& cfg,
                             double tau);

// v(t) = C^T(t) v(0); t must lie on the grid.
BlochVector bloch_propagate(const BlochVector& v0, const StcfTrajectory& traj,
                            double t);

struct StationarityReport {
    double window = 0.0;     // tail span inspected
    double tolerance = 0.0;
    double max_tail = 0.0;   // max |C_{i nu}| over the tail, i != 0
    bool pass = false;
};

// Necessary long-time condition C_{i nu}(t -> inf) = 0 for i != 0,
// checked over a tail window (default: last 20% of the trajectory).
StationarityReport stationarity_check(const StcfTrajectory& traj,
                                      double window = 0.0,
                                      double tolerance = 0.02);

struct WashoutReport {
    std::vector<double> omegas;
    std::vector<double> deviation;  // d(omega) vs the undriven trajectory
    bool strictly_decreasing = false;
};

// d(omega) = max over t and entries of |C^(omega) - C^(epsd=0)|; the
// drive washes out as omega grows.
WashoutReport washout_check(const ModelParams& p, const HeomConfig& cfg,
                            const std::vector<double>& omegas);

// 17-column CSV (t plus the 16 entries in row-major mu-nu order).
std::string stcf_to_csv(const StcfTrajectory& traj);
StcfTrajectory stcf_from_csv(const std::string& csv);

}  // namespace spinbath
