#include "spinbath/stcf.hpp"

#include <cmath>
#include <future>
#include <sstream>

#include "spinbath/errors.hpp"
#include "spinbath/io.hpp"

namespace spinbath {

double BlochVector::spatial_norm() const {
    return std::sqrt(vx * vx + vy * vy + vz * vz);
}

std::size_t StcfTrajectory::grid_index(double t, double tol) const {
    const double k = (t - t0) / dt;
    const auto idx = static_cast<std::ptrdiff_t>(std::llround(k));
    if (idx < 0 || static_cast<std::size_t>(idx) >= size() ||
        std::abs(t - time(static_cast<std::size_t>(idx))) > tol) {
        throw ConfigError("time " + format_double(t) +
                          " is not on the trajectory grid");
    }
    return static_cast<std::size_t>(idx);
}

StcfTrajectory two_time_stcf(const ModelParams& p, const HeomConfig& cfg,
                             double tau) {
    if (tau < 0.0) throw ConfigError("tau must be >= 0");
    p.validate();
    cfg.validate();

    const BathExpansion bath = bath_expansion(p, cfg.n_matsubara);
    const Hierarchy hierarchy(cfg, bath);

    auto run_row = [&](int mu) {
        InitialCondition ic{0.5 * pauli::sigma(mu)};
        return propagate(ic, p, hierarchy, tau);
    };

    // the four mu-rows are independent; run them concurrently
    std::future<OperatorTrajectory> rows[3];
    for (int mu = 1; mu < 4; ++mu) {
        rows[mu - 1] = std::async(std::launch::async, run_row, mu);
    }
    OperatorTrajectory traj_mu[4];
    traj_mu[0] = run_row(0);
    for (int mu = 1; mu < 4; ++mu) {
        try {
            traj_mu[mu] = rows[mu - 1].get();
        } catch (const NumericalError& e) {
            throw NumericalError("stcf row mu=" + std::to_string(mu) + ": " +
                                 e.what());
        }
    }

    StcfTrajectory out;
    out.t0 = tau;
    out.dt = cfg.dt;
    out.model = p;
    out.heom = cfg;
    out.c.resize(traj_mu[0].size());
    double residue = 0.0;
    for (std::size_t k = 0; k < out.c.size(); ++k) {
        Matrix4d& m = out.c[k];
        for (int mu = 0; mu < 4; ++mu) {
            for (int nu = 0; nu < 4; ++nu) {
                const Complex e =
                    (traj_mu[mu].op[k] * pauli::sigma(nu)).trace();
                m(mu, nu) = e.real();
                residue = std::max(residue, std::abs(e.imag()));
            }
        }
    }
    out.max_imag_residue = residue;
    return out;
}

StcfTrajectory compute_stcf(const ModelParams& p, const HeomConfig& cfg) {
    return two_time_stcf(p, cfg, 0.0);
}

BlochVector bloch_propagate(const BlochVector& v0, const StcfTrajectory& traj,
                            double t) {
    const Matrix4d& c = traj.c[traj.grid_index(t)];
    const Eigen::Vector4d in(v0.v0, v0.vx, v0.vy, v0.vz);
    const Eigen::Vector4d out = c.transpose() * in;
    return {out(0), out(1), out(2), out(3)};
}

StationarityReport stationarity_check(const StcfTrajectory& traj,
                                      double window, double tolerance) {
    const double span = traj.dt * static_cast<double>(traj.size() - 1);
    if (window <= 0.0) window = 0.2 * span;
    if (window > span) {
        throw ConfigError("stationarity window exceeds trajectory span");
    }
    const double t_from = traj.time(traj.size() - 1) - window;
    StationarityReport report;
    report.window = window;
    report.tolerance = tolerance;
    for (std::size_t k = 0; k < traj.size(); ++k) {
        if (traj.time(k) < t_from) continue;
        for (int i = 1; i < 4; ++i) {
            for (int nu = 0; nu < 4; ++nu) {
                report.max_tail =
                    std::max(report.max_tail, std::abs(traj.c[k](i, nu)));
            }
        }
    }
    report.pass = report.max_tail < tolerance;
    return report;
}

WashoutReport washout_check(const ModelParams& p, const HeomConfig& cfg,
                            const std::vector<double>& omegas) {
    for (std::size_t i = 0; i + 1 < omegas.size(); ++i) {
        if (!(omegas[i] < omegas[i + 1])) {
            throw ConfigError("washout omegas must be ascending");
        }
    }
    if (!omegas.empty() && !(omegas.front() > 0.0)) {
        throw ConfigError("washout omegas must be > 0");
    }

    ModelParams undriven = p;
    undriven.epsd = 0.0;
    undriven.omega_drive = 0.0;
    const StcfTrajectory base = compute_stcf(undriven, cfg);

    WashoutReport report;
    report.omegas = omegas;
    for (double omega : omegas) {
        ModelParams driven = p;
        driven.omega_drive = omega;
        const StcfTrajectory run = compute_stcf(driven, cfg);
        double dev = 0.0;
        for (std::size_t k = 0; k < run.size(); ++k) {
            dev = std::max(dev,
                           (run.c[k] - base.c[k]).cwiseAbs().maxCoeff());
        }
        report.deviation.push_back(dev);
    }
    report.strictly_decreasing = report.deviation.size() >= 2;
    for (std::size_t i = 0; i + 1 < report.deviation.size(); ++i) {
        if (!(report.deviation[i + 1] < report.deviation[i])) {
            report.strictly_decreasing = false;
        }
    }
    return report;
}

namespace {
const char* kStcfHeader =
    "t,C00,C0x,C0y,C0z,Cx0,Cxx,Cxy,Cxz,Cy0,Cyx,Cyy,Cyz,Cz0,Czx,Czy,Czz";
}

std::string stcf_to_csv(const StcfTrajectory& traj) {
    std::ostringstream out;
    out << kStcfHeader << "\n";
    for (std::size_t k = 0; k < traj.size(); ++k) {
        out << format_double(traj.time(k));
        for (int mu = 0; mu < 4; ++mu) {
            for (int nu = 0; nu < 4; ++nu) {
                out << ',' << format_double(traj.c[k](mu, nu));
            }
        }
        out << "\n";
    }
    return out.str();
}

StcfTrajectory stcf_from_csv(const std::string& csv) {
    std::istringstream in(csv);
    std::string line;
    if (!std::getline(in, line) || trim(line) != kStcfHeader) {
        throw ConfigError("stcf csv: missing or malformed header");
    }
    StcfTrajectory traj;
    std::vector<double> times;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        const auto fields = split(line, ',');
        if (fields.size() != 17) {
            throw ConfigError("stcf csv: expected 17 columns, got " +
                              std::to_string(fields.size()));
        }
        times.push_back(parse_double(fields[0], "t"));
        Matrix4d m;
        for (int mu = 0; mu < 4; ++mu) {
            for (int nu = 0; nu < 4; ++nu) {
                m(mu, nu) = parse_double(
                    fields[static_cast<std::size_t>(1 + 4 * mu + nu)], "C");
            }
        }
        traj.c.push_back(m);
    }
    if (times.size() < 2) {
        throw ConfigError("stcf csv: need at least two rows");
    }
    traj.t0 = times.front();
    traj.dt = times[1] - times[0];
    for (std::size_t k = 0; k + 1 < times.size(); ++k) {
        if (std::abs(times[k + 1] - times[k] - traj.dt) > 1e-9) {
            throw ConfigError("stcf csv: non-uniform time grid");
        }
    }
    return traj;
}

}  // namespace spinbath
