// diagnostics.hpp - non-Markovianity witnesses computed from the STCF:
// trace distance / BLP measure, accessible volume, damping and decoherence
// matrices, canonical rates and the canonical Lindblad decomposition

#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "spinbath/fd.hpp"
#include "spinbath/stcf.hpp"

namespace spinbath {

// D(t) = 1/2 |(v1 - v2)^T C_3(t)| for the antipodal pair of initial states.
std::vector<double> trace_distance_traj(const BlochVector& v1,
                                        const BlochVector& v2,
                                        const StcfTrajectory& traj);

struct BlpResult {
    double n_blp = 0.0;
    BlochVector argmax;            // unit Bloch vector maximizing the measure
    std::vector<double> d_max;     // distance series of the maximizer
    int n_samples = 0;
    std::uint64_t seed = 0;
};

// Monte Carlo maximization of the positive trace-distance variation over
// antipodal pure pairs; uniform sphere sampling from the given seed.
BlpResult blp_measure(const StcfTrajectory& traj, int n_samples,
                      std::uint64_t seed, int threads = 1);

struct VolumeTrajectory {
    double t0 = 0.0;
    double dt = 0.0;
    std::vector<double> v;  // |det C^T(t)|
    double tau_th = 0.0;    // first time with v <= 1e-3 (inf if never)

    std::size_t size() const { return v.size(); }
    double time(std::size_t k) const { return t0 + static_cast<double>(k) * dt; }
};

VolumeTrajectory volume_traj(const StcfTrajectory& traj);

// Positive-increment integral of V, normalized by V(0).
double nv_measure(const VolumeTrajectory& vol);

// Damping matrix Xi(t_k) = dC^T/dt [C^T]^{-1} with finite-difference dC.
Matrix4d damping_matrix(const StcfTrajectory& traj, std::size_t k,
                        FdOrder order = FdOrder::second);

// Xi on the grid up to and including index k_last.
std::vector<Matrix4d> damping_matrix_series(const StcfTrajectory& traj,
                                            std::size_t k_last,
                                            FdOrder order = FdOrder::second);

// Decoherence matrix xi_ij = 1/4 tr[s_l s_i s_r s_j] Xi_rl restricted to
// the spatial block; Hermitian by construction for real Xi, symmetrized
// after a residual check.
Matrix3cd decoherence_matrix(const Matrix4d& xi_damping);

// Full 4x4 version (mu, nu over {0,x,y,z}); row/column 0 feeds the
// canonical Hamiltonian.
Eigen::Matrix4cd decoherence_matrix_full(const Matrix4d& xi_damping);

struct RateTrajectory {
    double t0 = 0.0;
    double dt = 0.0;
    std::vector<Eigen::Vector3d> gamma;  // ascending per time
    double valid_until = 0.0;            // tau_th (or earlier numeric stop)

    std::size_t size() const { return gamma.size(); }
    double time(std::size_t k) const { return t0 + static_cast<double>(k) * dt; }
};

// Eigenvalues of xi(t) on t <= tau_th, sorted ascending.
RateTrajectory canonical_rates(const StcfTrajectory& traj,
                               FdOrder order = FdOrder::second);

struct CanonicalDecomposition {
    double t0 = 0.0;
    double dt = 0.0;
    std::vector<TwoLevelOperator> h_c;                  // canonical Hamiltonian
    std::vector<std::array<Matrix2c, 3>> lindblad_ops;  // tr[L_i L_j^+] = 2 d_ij
    RateTrajectory gamma;

    std::size_t size() const { return h_c.size(); }
};

// Eigendecomposition of xi(t): channel operators L_i from the eigenvectors,
// H_c from the mu=0 components. Eigenvector phases fixed deterministically;
// near-degenerate channels ordered by overlap with the previous time step.
CanonicalDecomposition canonical_decomposition(const StcfTrajectory& traj,
                                               FdOrder order = FdOrder::second);

// Action of the reconstructed time-local generator on a state, used to
// validate the decomposition against the damping matrix.
Matrix2c canonical_generator_action(const CanonicalDecomposition& d,
                                    std::size_t k, const Matrix2c& rho);

struct EternalNmReport {
    bool eternal = false;
    double t_from = 0.0;
    double t_to = 0.0;
    double max_min_rate = 0.0;  // max over the window of the lowest rate
};

// True iff the lowest rate stays below -tol_neg on [t_min, valid_until].
EternalNmReport eternal_nm_detector(const RateTrajectory& rates, double t_min,
                                    double tol_neg = 1e-4);

}  // namespace spinbath
