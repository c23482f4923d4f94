// heom.hpp - hierarchical equations of motion for the driven spin-boson model
// (Drude-Lorentz bath, sz coupling, scaled auxiliary density operators)

#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "spinbath/model.hpp"
#include "spinbath/pauli.hpp"

namespace spinbath {

enum class Terminator { drop, markovian_closure };

struct HeomConfig {
    int max_tier = 10;      // L
    int n_matsubara = 2;    // K
    double dt = 0.01;
    double t_final = 10.0;
    Terminator terminator = Terminator::drop;
    std::size_t max_ados = 2'000'000;  // memory budget for the hierarchy
    // subdivide dt internally to keep RK4 inside its stability region
    // (the output grid stays dt); disable only for integrator studies
    bool auto_substep = true;

    void validate() const;
    std::size_t n_steps() const;
};

// Multi-index of one auxiliary density operator: one occupation per bath
// expansion term; tier = sum of occupations.
struct HierarchyIndex {
    std::vector<int> occupations;
    int tier = 0;
};

// Enumerates all multi-indices with tier <= L over (K+1) terms in
// lexicographic order; count = C(L+K+1, K+1).
std::vector<HierarchyIndex> enumerate_hierarchy(const HeomConfig& cfg,
                                                const BathExpansion& bath);

// Precomputed hierarchy layout: indices plus neighbor tables and the
// coupling coefficients of the scaled HEOM.
class Hierarchy {
  public:
    Hierarchy(const HeomConfig& cfg, const BathExpansion& bath);

    std::size_t size() const { return indices_.size(); }
    std::size_t n_terms() const { return n_terms_; }
    const std::vector<HierarchyIndex>& indices() const { return indices_; }
    const BathExpansion& bath() const { return bath_; }
    const HeomConfig& config() const { return cfg_; }

    // -1 when the neighbor leaves the hierarchy
    std::ptrdiff_t up(std::size_t i, std::size_t k) const {
        return up_[i * n_terms_ + k];
    }
    std::ptrdiff_t down(std::size_t i, std::size_t k) const {
        return down_[i * n_terms_ + k];
    }
    double damping(std::size_t i) const { return damping_[i]; }
    double up_coef(std::size_t i, std::size_t k) const {
        return up_coef_[i * n_terms_ + k];
    }
    Complex down_coef_left(std::size_t i, std::size_t k) const {
        return down_left_[i * n_terms_ + k];
    }
    Complex down_coef_right(std::size_t i, std::size_t k) const {
        return down_right_[i * n_terms_ + k];
    }
    // nonzero only on tier-L rows under the markovian_closure terminator
    double boundary_coef(std::size_t i, std::size_t k) const {
        return boundary_coef_[i * n_terms_ + k];
    }

  private:
    HeomConfig cfg_;
    BathExpansion bath_;
    std::size_t n_terms_ = 0;
    std::vector<HierarchyIndex> indices_;
    std::vector<std::ptrdiff_t> up_, down_;
    std::vector<double> damping_, up_coef_, boundary_coef_;
    std::vector<Complex> down_left_, down_right_;
};

// Full stack of (scaled) auxiliary density operators at one time.
struct AdoState {
    double time = 0.0;
    std::vector<Matrix2c> ados;
};

// Factorized Feynman-Vernon initial condition: tier-0 operator (x) thermal
// bath, all higher ADOs zero. The tier-0 operator may be any 2x2 operator
// (sigma_mu/2 for STCF rows, a density matrix for state propagation).
struct InitialCondition {
    Matrix2c system_operator = Matrix2c::Zero();
};

// Tier-0 trajectory on the uniform grid t0 + k*dt.
struct OperatorTrajectory {
    double t0 = 0.0;
    double dt = 0.0;
    std::vector<Matrix2c> op;

    std::size_t size() const { return op.size(); }
    double time(std::size_t k) const { return t0 + static_cast<double>(k) * dt; }
};

// d(state)/dt of the scaled hierarchy at absolute time t.
void heom_rhs(double t, const std::vector<Matrix2c>& state,
              const ModelParams& p, const Hierarchy& h,
              std::vector<Matrix2c>& deriv);

// Fixed-step RK4 propagation from absolute time t_start; the tier-0
// operator is sampled every dt. Deterministic for fixed inputs.
OperatorTrajectory propagate(const InitialCondition& ic, const ModelParams& p,
                             const Hierarchy& h, double t_start = 0.0);

OperatorTrajectory propagate(const InitialCondition& ic, const ModelParams& p,
                             const BathExpansion& bath, const HeomConfig& cfg,
                             double t_start = 0.0);

// One row of a hierarchy convergence scan.
struct ConvergenceRow {
    int max_tier = 0;
    int n_matsubara = 0;
    // max-over-time deviation of the tier-0 trajectory vs the previous row
    // at the same n_matsubara; empty for the first row of each K.
    std::optional<double> deviation;
    bool converged = false;
};

struct ConvergenceReport {
    std::vector<ConvergenceRow> rows;
    double tolerance = 1e-6;
    // first (L, K) whose deviation dropped below tolerance, if any
    std::optional<std::pair<int, int>> converged_at;
};

ConvergenceReport convergence_scan(const InitialCondition& ic,
                                   const ModelParams& p, HeomConfig cfg,
                                   const std::vector<int>& tiers,
                                   const std::vector<int>& matsubaras,
                                   double tolerance = 1e-6);

// max-abs difference of two tier-0 trajectories on their common grid
double trajectory_deviation(const OperatorTrajectory& a,
                            const OperatorTrajectory& b);

// CSV form of a tier-0 trajectory: t plus Re/Im of the four matrix
// entries in row-major order.
std::string trajectory_to_csv(const OperatorTrajectory& traj);

}  // namespace spinbath
