#include "spinbath/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>
#include <random>

#include "spinbath/errors.hpp"
#include "spinbath/io.hpp"

namespace spinbath {

namespace {

Eigen::Matrix3d spatial_block(const Matrix4d& c) {
    return c.block<3, 3>(1, 1);
}

Eigen::Vector3d spatial(const BlochVector& v) {
    return {v.vx, v.vy, v.vz};
}

}  // namespace

std::vector<double> trace_distance_traj(const BlochVector& v1,
                                        const BlochVector& v2,
                                        const StcfTrajectory& traj) {
    const Eigen::Vector3d dv = spatial(v1) - spatial(v2);
    if (dv.norm() == 0.0 && v1.v0 == v2.v0) {
        throw ConfigError("trace_distance_traj: states must differ");
    }
    std::vector<double> d(traj.size());
    for (std::size_t k = 0; k < traj.size(); ++k) {
        d[k] = 0.5 * (spatial_block(traj.c[k]).transpose() * dv).norm();
    }
    return d;
}

namespace {

double positive_variation(const std::vector<double>& d) {
    double acc = 0.0;
    for (std::size_t k = 0; k + 1 < d.size(); ++k) {
        acc += std::max(0.0, d[k + 1] - d[k]);
    }
    return acc;
}

// Uniform unit vectors via normalized Gaussian triples; hand-rolled
// Box-Muller so the stream is identical across platforms. Four uniform
// draws per sample keep prefixes stable for nested sample sets.
std::vector<Eigen::Vector3d> sample_sphere(int n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    auto uniform = [&rng]() {
        return static_cast<double>(rng() >> 11) * 0x1.0p-53;
    };
    std::vector<Eigen::Vector3d> out(static_cast<std::size_t>(n));
    for (auto& v : out) {
        const double u1 = 1.0 - uniform();  // (0, 1]
        const double u2 = uniform();
        const double u3 = 1.0 - uniform();
        const double u4 = uniform();
        const double r1 = std::sqrt(-2.0 * std::log(u1));
        const double r2 = std::sqrt(-2.0 * std::log(u3));
        v = {r1 * std::cos(2.0 * M_PI * u2), r1 * std::sin(2.0 * M_PI * u2),
             r2 * std::cos(2.0 * M_PI * u4)};
        const double norm = v.norm();
        v = norm > 1e-300 ? Eigen::Vector3d(v / norm)
                          : Eigen::Vector3d(0, 0, 1);
    }
    return out;
}

}  // namespace

BlpResult blp_measure(const StcfTrajectory& traj, int n_samples,
                      std::uint64_t seed, int threads) {
    if (n_samples < 1) throw ConfigError("blp_measure: n_samples must be >= 1");
    threads = std::max(1, threads);

    const auto samples = sample_sphere(n_samples, seed);
    const std::size_t nt = traj.size();
    std::vector<Eigen::Matrix3d> c3(nt);
    for (std::size_t k = 0; k < nt; ++k) c3[k] = spatial_block(traj.c[k]);

    struct Best {
        double value = -1.0;
        std::size_t index = 0;
    };
    auto eval_range = [&](std::size_t lo, std::size_t hi) {
        Best best;
        std::vector<double> d(nt);
        for (std::size_t s = lo; s < hi; ++s) {
            for (std::size_t k = 0; k < nt; ++k) {
                d[k] = (c3[k].transpose() * samples[s]).norm();
            }
            const double value = positive_variation(d);
            if (value > best.value) best = {value, s};
        }
        return best;
    };

    Best best;
    if (threads == 1) {
        best = eval_range(0, samples.size());
    } else {
        const std::size_t chunk =
            (samples.size() + static_cast<std::size_t>(threads) - 1) /
            static_cast<std::size_t>(threads);
        std::vector<std::future<Best>> futs;
        for (std::size_t lo = 0; lo < samples.size(); lo += chunk) {
            const std::size_t hi = std::min(lo + chunk, samples.size());
            futs.push_back(
                std::async(std::launch::async, eval_range, lo, hi));
        }
        for (auto& f : futs) {
            const Best b = f.get();
            // ties resolve to the lowest sample index for determinism
            if (b.value > best.value ||
                (b.value == best.value && b.index < best.index)) {
                best = b;
            }
        }
    }

    BlpResult result;
    result.n_samples = n_samples;
    result.seed = seed;
    const Eigen::Vector3d v = samples[best.index];
    result.argmax = {1.0, v(0), v(1), v(2)};
    result.d_max.resize(nt);
    for (std::size_t k = 0; k < nt; ++k) {
        result.d_max[k] = (c3[k].transpose() * v).norm();
    }
    result.n_blp = positive_variation(result.d_max);
    return result;
}

VolumeTrajectory volume_traj(const StcfTrajectory& traj) {
    VolumeTrajectory vol;
    vol.t0 = traj.t0;
    vol.dt = traj.dt;
    vol.v.resize(traj.size());
    for (std::size_t k = 0; k < traj.size(); ++k) {
        vol.v[k] = std::abs(spatial_block(traj.c[k]).determinant());
    }
    constexpr double threshold = 1e-3;
    vol.tau_th = std::numeric_limits<double>::infinity();
    for (std::size_t k = 1; k < vol.v.size(); ++k) {
        if (vol.v[k] <= threshold && vol.v[k - 1] > threshold) {
            const double frac =
                (vol.v[k - 1] - threshold) / (vol.v[k - 1] - vol.v[k]);
            vol.tau_th = vol.time(k - 1) + frac * vol.dt;
            break;
        }
    }
    if (!vol.v.empty() && vol.v.front() <= threshold) vol.tau_th = vol.t0;
    return vol;
}

double nv_measure(const VolumeTrajectory& vol) {
    if (vol.v.empty() || vol.v.front() <= 0.0) {
        throw ConfigError("nv_measure: V(0) must be positive");
    }
    return positive_variation(vol.v) / vol.v.front();
}

namespace {

Matrix4d damping_from(const Matrix4d& c, const Matrix4d& cdot, double t) {
    const Matrix4d ct = c.transpose();
    Eigen::JacobiSVD<Matrix4d> svd(ct);
    const double smin = svd.singularValues().minCoeff();
    const double smax = svd.singularValues().maxCoeff();
    if (!(smin > 0.0) || smax / smin > 1e8) {
        throw NumericalError(
            "damping_matrix: C^T singular (condition > 1e8) at t=" +
            format_double(t));
    }
    return cdot.transpose() * ct.inverse();
}

}  // namespace

Matrix4d damping_matrix(const StcfTrajectory& traj, std::size_t k,
                        FdOrder order) {
    if (k >= traj.size()) throw ConfigError("damping_matrix: index off grid");
    // local stencil around k (series reused when many times are needed)
    const std::size_t n = traj.size();
    const std::size_t width = (order == FdOrder::fourth && n >= 5) ? 5u : 3u;
    std::size_t lo = k >= width / 2 ? k - width / 2 : 0;
    lo = std::min(lo, n - width);
    std::vector<Matrix4d> window(traj.c.begin() + static_cast<std::ptrdiff_t>(lo),
                                 traj.c.begin() +
                                     static_cast<std::ptrdiff_t>(lo + width));
    const auto d = derivative_series(window, traj.dt, order);
    return damping_from(traj.c[k], d[k - lo], traj.time(k));
}

std::vector<Matrix4d> damping_matrix_series(const StcfTrajectory& traj,
                                            std::size_t k_last,
                                            FdOrder order) {
    if (k_last >= traj.size()) {
        throw ConfigError("damping_matrix_series: index off grid");
    }
    const auto cdot = derivative_series(traj.c, traj.dt, order);
    std::vector<Matrix4d> xi(k_last + 1);
    for (std::size_t k = 0; k <= k_last; ++k) {
        xi[k] = damping_from(traj.c[k], cdot[k], traj.time(k));
    }
    return xi;
}

namespace {

// tr[s_l s_m s_r s_n], precomputed once
struct PauliTraceTensor {
    Complex t[4][4][4][4];
    PauliTraceTensor() {
        for (int l = 0; l < 4; ++l)
            for (int m = 0; m < 4; ++m)
                for (int r = 0; r < 4; ++r)
                    for (int n = 0; n < 4; ++n)
                        t[l][m][r][n] = (pauli::sigma(l) * pauli::sigma(m) *
                                         pauli::sigma(r) * pauli::sigma(n))
                                            .trace();
    }
};

const PauliTraceTensor& pauli_traces() {
    static const PauliTraceTensor tensor;
    return tensor;
}

}  // namespace

Eigen::Matrix4cd decoherence_matrix_full(const Matrix4d& xi_damping) {
    const auto& tt = pauli_traces();
    Eigen::Matrix4cd xi = Eigen::Matrix4cd::Zero();
    for (int m = 0; m < 4; ++m) {
        for (int n = 0; n < 4; ++n) {
            Complex acc(0.0, 0.0);
            for (int l = 0; l < 4; ++l) {
                for (int r = 0; r < 4; ++r) {
                    acc += tt.t[l][m][r][n] * xi_damping(r, l);
                }
            }
            xi(m, n) = 0.25 * acc;
        }
    }
    return xi;
}

Matrix3cd decoherence_matrix(const Matrix4d& xi_damping) {
    const Eigen::Matrix4cd full = decoherence_matrix_full(xi_damping);
    const Matrix3cd sp = full.block<3, 3>(1, 1);
    const double residual = (sp - sp.adjoint()).cwiseAbs().maxCoeff();
    if (residual > 1e-6) {
        throw NumericalError(
            "decoherence_matrix: anti-Hermitian residual " +
            format_double(residual));
    }
    return 0.5 * (sp + sp.adjoint().eval());
}

namespace {

std::size_t rate_window_end(const StcfTrajectory& traj) {
    const VolumeTrajectory vol = volume_traj(traj);
    std::size_t k_last = traj.size() - 1;
    if (std::isfinite(vol.tau_th)) {
        k_last = static_cast<std::size_t>(
            std::floor((vol.tau_th - traj.t0) / traj.dt + 1e-12));
        k_last = std::min(k_last, traj.size() - 1);
    }
    return k_last;
}

void fix_phase(Matrix3cd& u) {
    for (int i = 0; i < 3; ++i) {
        int arg = 0;
        u.col(i).cwiseAbs().maxCoeff(&arg);
        const Complex pivot = u(arg, i);
        if (std::abs(pivot) > 0.0) u.col(i) *= std::conj(pivot) / std::abs(pivot);
    }
}

// eigenpairs ascending; near-degenerate channels keep their identity by
// overlap with the previous step's eigenvectors
void order_channels(Eigen::Vector3d& lam, Matrix3cd& u,
                    const Matrix3cd* u_prev) {
    if (u_prev == nullptr) return;
    const double gap =
        std::min(lam(1) - lam(0), lam(2) - lam(1));
    if (gap >= 1e-8) return;
    std::array<int, 3> pick = {-1, -1, -1};
    std::array<bool, 3> used = {false, false, false};
    for (int a = 0; a < 3; ++a) {
        double best = -1.0;
        for (int b = 0; b < 3; ++b) {
            if (used[static_cast<std::size_t>(b)]) continue;
            const double ov = std::abs(u_prev->col(a).dot(u.col(b)));
            if (ov > best) {
                best = ov;
                pick[static_cast<std::size_t>(a)] = b;
            }
        }
        used[static_cast<std::size_t>(pick[static_cast<std::size_t>(a)])] = true;
    }
    const Eigen::Vector3d lam_old = lam;
    const Matrix3cd u_old = u;
    for (int a = 0; a < 3; ++a) {
        lam(a) = lam_old(pick[static_cast<std::size_t>(a)]);
        u.col(a) = u_old.col(pick[static_cast<std::size_t>(a)]);
    }
}

}  // namespace

RateTrajectory canonical_rates(const StcfTrajectory& traj, FdOrder order) {
    RateTrajectory rates;
    rates.t0 = traj.t0;
    rates.dt = traj.dt;
    const std::size_t k_last = rate_window_end(traj);
    std::vector<Matrix4d> xi;
    try {
        xi = damping_matrix_series(traj, k_last, order);
    } catch (const NumericalError&) {
        // invertibility lost before tau_th: stop at the last good index
        std::size_t k = 0;
        while (k <= k_last) {
            try {
                xi.push_back(damping_matrix(traj, k, order));
            } catch (const NumericalError&) {
                break;
            }
            ++k;
        }
    }
    if (xi.empty()) {
        throw NumericalError("canonical_rates: dynamical map not invertible "
                             "at the initial time");
    }
    rates.gamma.reserve(xi.size());
    for (const auto& x : xi) {
        Eigen::SelfAdjointEigenSolver<Matrix3cd> es(decoherence_matrix(x));
        rates.gamma.push_back(es.eigenvalues());
    }
    rates.valid_until = rates.time(rates.gamma.size() - 1);
    return rates;
}

CanonicalDecomposition canonical_decomposition(const StcfTrajectory& traj,
                                               FdOrder order) {
    CanonicalDecomposition out;
    out.t0 = traj.t0;
    out.dt = traj.dt;
    out.gamma.t0 = traj.t0;
    out.gamma.dt = traj.dt;

    const std::size_t k_last = rate_window_end(traj);
    const auto xi_series = damping_matrix_series(traj, k_last, order);

    Matrix3cd u_prev;
    bool have_prev = false;
    for (std::size_t k = 0; k < xi_series.size(); ++k) {
        const Eigen::Matrix4cd full = decoherence_matrix_full(xi_series[k]);
        const Matrix3cd sp = decoherence_matrix(xi_series[k]);

        Eigen::SelfAdjointEigenSolver<Matrix3cd> es(sp);
        Eigen::Vector3d lam = es.eigenvalues();
        Matrix3cd u = es.eigenvectors();
        order_channels(lam, u, have_prev ? &u_prev : nullptr);
        fix_phase(u);
        u_prev = u;
        have_prev = true;

        std::array<Matrix2c, 3> ops;
        for (int i = 0; i < 3; ++i) {
            Matrix2c l = Matrix2c::Zero();
            for (int j = 0; j < 3; ++j) l += u(j, i) * pauli::sigma(j + 1);
            ops[static_cast<std::size_t>(i)] = l;
        }
        out.lindblad_ops.push_back(ops);
        out.gamma.gamma.push_back(lam);

        // The decoherence matrix of Eq-(xi) normalization is twice the
        // Gorini-Kossakowski weight matrix; the physical h_c uses half.
        Matrix2c hc = Matrix2c::Zero();
        for (int i = 0; i < 3; ++i) {
            hc += -0.5 * full(i + 1, 0).imag() * pauli::sigma(i + 1);
        }
        out.h_c.push_back(TwoLevelOperator::hermitian_op(hc, 1e-10));
    }
    out.gamma.valid_until = out.gamma.time(out.gamma.gamma.size() - 1);
    return out;
}

Matrix2c canonical_generator_action(const CanonicalDecomposition& d,
                                    std::size_t k, const Matrix2c& rho) {
    if (k >= d.size()) {
        throw ConfigError("canonical_generator_action: index off grid");
    }
    const Complex mi(0.0, -1.0);
    const Matrix2c& hc = d.h_c[k].matrix;
    Matrix2c out = mi * (hc * rho - rho * hc);
    for (int i = 0; i < 3; ++i) {
        const Matrix2c& l = d.lindblad_ops[k][static_cast<std::size_t>(i)];
        const double g_phys = 0.5 * d.gamma.gamma[k](i);
        const Matrix2c ldl = l.adjoint() * l;
        out += g_phys * (l * rho * l.adjoint() -
                         0.5 * (ldl * rho + rho * ldl));
    }
    return out;
}

EternalNmReport eternal_nm_detector(const RateTrajectory& rates, double t_min,
                                    double tol_neg) {
    if (rates.gamma.empty() || rates.valid_until <= t_min) {
        throw ConfigError(
            "eternal_nm_detector: rates not computed past t_min");
    }
    EternalNmReport report;
    report.t_from = t_min;
    report.t_to = rates.valid_until;
    report.max_min_rate = -std::numeric_limits<double>::infinity();
    bool any = false;
    for (std::size_t k = 0; k < rates.size(); ++k) {
        const double t = rates.time(k);
        if (t < t_min) continue;
        any = true;
        report.max_min_rate =
            std::max(report.max_min_rate, rates.gamma[k].minCoeff());
    }
    report.eternal = any && report.max_min_rate < -tol_neg;
    return report;
}

}  // namespace spinbath
