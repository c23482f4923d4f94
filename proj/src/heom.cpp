#include "spinbath/heom.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include "spinbath/errors.hpp"
#include "spinbath/io.hpp"

namespace spinbath {

void HeomConfig::validate() const {
    if (max_tier < 1) throw ConfigError("max_tier must be >= 1");
    if (n_matsubara < 0) throw ConfigError("n_matsubara must be >= 0");
    if (!(dt > 0.0)) throw ConfigError("dt must be > 0");
    if (t_final < dt) throw ConfigError("t_final must be >= dt");
}

std::size_t HeomConfig::n_steps() const {
    return static_cast<std::size_t>(std::llround(t_final / dt));
}

std::vector<HierarchyIndex> enumerate_hierarchy(const HeomConfig& cfg,
                                                const BathExpansion& bath) {
    cfg.validate();
    const std::size_t n_terms = bath.size();

    // count = C(L + n_terms, n_terms), checked against the memory budget
    double count = 1.0;
    for (std::size_t j = 1; j <= n_terms; ++j) {
        count *= static_cast<double>(cfg.max_tier + j) / static_cast<double>(j);
    }
    if (count > static_cast<double>(cfg.max_ados)) {
        throw ConfigError("hierarchy size " +
                          std::to_string(static_cast<std::size_t>(count)) +
                          " exceeds max_ados budget " +
                          std::to_string(cfg.max_ados));
    }

    std::vector<HierarchyIndex> out;
    out.reserve(static_cast<std::size_t>(count));
    std::vector<int> occ(n_terms, 0);
    while (true) {
        int tier = 0;
        for (int n : occ) tier += n;
        if (tier <= cfg.max_tier) {
            out.push_back({occ, tier});
        }
        // odometer increment, bounded per digit by max_tier
        std::size_t pos = n_terms;
        while (pos > 0) {
            --pos;
            if (occ[pos] < cfg.max_tier) {
                ++occ[pos];
                std::fill(occ.begin() + static_cast<std::ptrdiff_t>(pos) + 1,
                          occ.end(), 0);
                break;
            }
            if (pos == 0) return out;
        }
        if (n_terms == 0) return out;
    }
}

Hierarchy::Hierarchy(const HeomConfig& cfg, const BathExpansion& bath)
    : cfg_(cfg), bath_(bath), n_terms_(bath.size()) {
    indices_ = enumerate_hierarchy(cfg, bath);
    const std::size_t n = indices_.size();

    std::map<std::vector<int>, std::size_t> lookup;
    for (std::size_t i = 0; i < n; ++i) lookup[indices_[i].occupations] = i;

    up_.assign(n * n_terms_, -1);
    down_.assign(n * n_terms_, -1);
    damping_.assign(n, 0.0);
    up_coef_.assign(n * n_terms_, 0.0);
    down_left_.assign(n * n_terms_, Complex(0.0, 0.0));
    down_right_.assign(n * n_terms_, Complex(0.0, 0.0));
    boundary_coef_.assign(n * n_terms_, 0.0);

    for (std::size_t i = 0; i < n; ++i) {
        const auto& occ = indices_[i].occupations;
        double damp = 0.0;
        for (std::size_t k = 0; k < n_terms_; ++k) {
            damp += occ[k] * bath_.terms[k].nu;
        }
        damping_[i] = damp;

        std::vector<int> probe = occ;
        for (std::size_t k = 0; k < n_terms_; ++k) {
            const Complex c = bath_.terms[k].c;
            const double scale = std::max(std::abs(c), 1e-300);
            if (indices_[i].tier == cfg.max_tier &&
                cfg.terminator == Terminator::markovian_closure) {
                // adiabatic elimination of the dropped tier-(L+1) neighbor
                boundary_coef_[i * n_terms_ + k] =
                    (occ[k] + 1) / (damp + bath_.terms[k].nu);
            }
            if (indices_[i].tier < cfg.max_tier) {
                probe[k] = occ[k] + 1;
                auto it = lookup.find(probe);
                if (it != lookup.end()) {
                    up_[i * n_terms_ + k] =
                        static_cast<std::ptrdiff_t>(it->second);
                    // scaled-ADO raising weight sqrt((n_k+1)|c_k|)
                    up_coef_[i * n_terms_ + k] =
                        std::sqrt((occ[k] + 1) * std::abs(c));
                }
                probe[k] = occ[k];
            }
            if (occ[k] > 0) {
                probe[k] = occ[k] - 1;
                auto it = lookup.find(probe);
                if (it != lookup.end()) {
                    down_[i * n_terms_ + k] =
                        static_cast<std::ptrdiff_t>(it->second);
                    const double w = std::sqrt(occ[k] / scale);
                    down_left_[i * n_terms_ + k] = w * c;
                    down_right_[i * n_terms_ + k] = w * std::conj(c);
                }
                probe[k] = occ[k];
            }
        }
    }
}

namespace {

// sz * m and m * sz as cheap row/column sign flips
inline Matrix2c sz_left(const Matrix2c& m) {
    Matrix2c r = m;
    r.row(1) = -r.row(1);
    return r;
}

inline Matrix2c sz_right(const Matrix2c& m) {
    Matrix2c r = m;
    r.col(1) = -r.col(1);
    return r;
}

}  // namespace

void heom_rhs(double t, const std::vector<Matrix2c>& state,
              const ModelParams& p, const Hierarchy& h,
              std::vector<Matrix2c>& deriv) {
    const std::size_t n = h.size();
    const std::size_t n_terms = h.n_terms();
    deriv.resize(n);

    const Matrix2c hs = p.delta * pauli::sigma_x() +
                        drive_bias(t, p) * pauli::sigma_z();
    const Complex mi(0.0, -1.0);
    const double closure = h.bath().delta_term;

    for (std::size_t i = 0; i < n; ++i) {
        const Matrix2c& m = state[i];
        Matrix2c d = mi * (hs * m - m * hs) - h.damping(i) * m;
        if (closure != 0.0) {
            // Ishizaki-Tanimura closure of the truncated Matsubara tail:
            // -delta * [sz, [sz, m]] = -2*delta*(m - sz m sz)
            d -= 2.0 * closure * (m - sz_left(sz_right(m)));
        }
        for (std::size_t k = 0; k < n_terms; ++k) {
            const std::ptrdiff_t iu = h.up(i, k);
            if (iu >= 0) {
                const Matrix2c& a = state[static_cast<std::size_t>(iu)];
                d += (mi * h.up_coef(i, k)) * (sz_left(a) - sz_right(a));
            }
            const std::ptrdiff_t id = h.down(i, k);
            if (id >= 0) {
                const Matrix2c& b = state[static_cast<std::size_t>(id)];
                d += mi * (h.down_coef_left(i, k) * sz_left(b) -
                           h.down_coef_right(i, k) * sz_right(b));
            }
            const double bc = h.boundary_coef(i, k);
            if (bc != 0.0) {
                const Complex c = h.bath().terms[k].c;
                const Matrix2c inner =
                    c * sz_left(m) - std::conj(c) * sz_right(m);
                d -= bc * (sz_left(inner) - sz_right(inner));
            }
        }
        deriv[i] = d;
    }
}

namespace {

void check_finite(const std::vector<Matrix2c>& state, const Hierarchy& h,
                  double t) {
    for (std::size_t i = 0; i < state.size(); ++i) {
        if (!state[i].allFinite()) {
            std::ostringstream msg;
            msg << "heom: non-finite value at t=" << format_double(t)
                << ", tier=" << h.indices()[i].tier << ", ado=" << i;
            throw NumericalError(msg.str());
        }
    }
}

}  // namespace

namespace {

// RK4 is only conditionally stable; deep hierarchy indices carry damping
// rates sum_k n_k nu_k far above the physical frequencies, so the sampling
// step dt is subdivided until lambda*h sits inside the stability region.
int stable_substeps(const ModelParams& p, const Hierarchy& h, double dt) {
    double max_damping = 0.0;
    for (std::size_t i = 0; i < h.size(); ++i) {
        max_damping = std::max(max_damping, h.damping(i));
    }
    const double h_norm =
        2.0 * (p.delta + std::abs(p.eps0) + p.epsd);
    const double closure = 4.0 * std::abs(h.bath().delta_term);
    const double bound = max_damping + h_norm + closure;
    return std::max(1, static_cast<int>(std::ceil(bound * dt / 2.0)));
}

}  // namespace

OperatorTrajectory propagate(const InitialCondition& ic, const ModelParams& p,
                             const Hierarchy& h, double t_start) {
    const HeomConfig& cfg = h.config();
    cfg.validate();
    p.validate();

    const std::size_t n = h.size();
    const std::size_t n_steps = cfg.n_steps();
    const double dt = cfg.dt;
    const int n_sub = cfg.auto_substep ? stable_substeps(p, h, dt) : 1;
    const double hstep = dt / n_sub;

    std::vector<Matrix2c> y(n, Matrix2c::Zero());
    y[0] = ic.system_operator;

    std::vector<Matrix2c> k1(n), k2(n), k3(n), k4(n), tmp(n);

    OperatorTrajectory traj;
    traj.t0 = t_start;
    traj.dt = dt;
    traj.op.reserve(n_steps + 1);
    traj.op.push_back(y[0]);

    for (std::size_t step = 0; step < n_steps; ++step) {
        for (int sub = 0; sub < n_sub; ++sub) {
            const double t = t_start + static_cast<double>(step) * dt +
                             static_cast<double>(sub) * hstep;
            heom_rhs(t, y, p, h, k1);
            for (std::size_t i = 0; i < n; ++i) {
                tmp[i] = y[i] + 0.5 * hstep * k1[i];
            }
            heom_rhs(t + 0.5 * hstep, tmp, p, h, k2);
            for (std::size_t i = 0; i < n; ++i) {
                tmp[i] = y[i] + 0.5 * hstep * k2[i];
            }
            heom_rhs(t + 0.5 * hstep, tmp, p, h, k3);
            for (std::size_t i = 0; i < n; ++i) {
                tmp[i] = y[i] + hstep * k3[i];
            }
            heom_rhs(t + hstep, tmp, p, h, k4);
            for (std::size_t i = 0; i < n; ++i) {
                y[i] += hstep / 6.0 *
                        (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            }
        }

        if (step % 50 == 49 || step + 1 == n_steps) {
            check_finite(y, h, t_start + static_cast<double>(step + 1) * dt);
        }
        traj.op.push_back(y[0]);
    }
    return traj;
}

OperatorTrajectory propagate(const InitialCondition& ic, const ModelParams& p,
                             const BathExpansion& bath, const HeomConfig& cfg,
                             double t_start) {
    Hierarchy h(cfg, bath);
    return propagate(ic, p, h, t_start);
}

std::string trajectory_to_csv(const OperatorTrajectory& traj) {
    std::ostringstream out;
    out << "t,Re00,Im00,Re01,Im01,Re10,Im10,Re11,Im11\n";
    for (std::size_t k = 0; k < traj.size(); ++k) {
        out << format_double(traj.time(k));
        for (int r = 0; r < 2; ++r) {
            for (int c = 0; c < 2; ++c) {
                out << ',' << format_double(traj.op[k](r, c).real()) << ','
                    << format_double(traj.op[k](r, c).imag());
            }
        }
        out << "\n";
    }
    return out.str();
}

double trajectory_deviation(const OperatorTrajectory& a,
                            const OperatorTrajectory& b) {
    const std::size_t n = std::min(a.size(), b.size());
    double dev = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        dev = std::max(dev, (a.op[k] - b.op[k]).cwiseAbs().maxCoeff());
    }
    return dev;
}

ConvergenceReport convergence_scan(const InitialCondition& ic,
                                   const ModelParams& p, HeomConfig cfg,
                                   const std::vector<int>& tiers,
                                   const std::vector<int>& matsubaras,
                                   double tolerance) {
    ConvergenceReport report;
    report.tolerance = tolerance;
    for (int km : matsubaras) {
        cfg.n_matsubara = km;
        const BathExpansion bath = bath_expansion(p, km);
        std::optional<OperatorTrajectory> prev;
        for (int tier : tiers) {
            cfg.max_tier = tier;
            OperatorTrajectory traj = propagate(ic, p, bath, cfg);
            ConvergenceRow row;
            row.max_tier = tier;
            row.n_matsubara = km;
            if (prev) {
                row.deviation = trajectory_deviation(*prev, traj);
                row.converged = *row.deviation < tolerance;
                if (row.converged && !report.converged_at) {
                    report.converged_at = std::make_pair(tier, km);
                }
            }
            report.rows.push_back(row);
            prev = std::move(traj);
        }
    }
    return report;
}

}  // namespace spinbath
