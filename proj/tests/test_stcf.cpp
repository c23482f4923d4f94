#include <doctest.h>

#include <cmath>
#include <numbers>

#include "oracles.hpp"
#include "spinbath/errors.hpp"
#include "spinbath/stcf.hpp"

using namespace spinbath;

namespace {

ModelParams fig1_params(double omega) {
    ModelParams p;
    p.beta = 0.3;
    p.eps0 = 0.0;
    p.epsd = 1.0;
    p.omega_drive = omega;
    p.eta = 1.0;
    p.omega_c = 1.0;
    return p;
}

HeomConfig cfg_of(int tier, int matsubara, double t_final, double dt = 0.01) {
    HeomConfig cfg;
    cfg.max_tier = tier;
    cfg.n_matsubara = matsubara;
    cfg.dt = dt;
    cfg.t_final = t_final;
    return cfg;
}

}  // namespace

TEST_CASE("stcf starts at the identity and keeps column 0 trivial") {
    ModelParams p = fig1_params(1.0);
    const StcfTrajectory traj = compute_stcf(p, cfg_of(8, 1, 4.0));
    CHECK((traj.c.front() - Matrix4d::Identity()).cwiseAbs().maxCoeff() <
          1e-12);
    for (std::size_t k = 0; k < traj.size(); k += 20) {
        for (int mu = 0; mu < 4; ++mu) {
            const double expected = mu == 0 ? 1.0 : 0.0;
            CHECK(std::abs(traj.c[k](mu, 0) - expected) < 1e-8);
        }
    }
    CHECK(traj.max_imag_residue < 1e-8);
}

TEST_CASE("undriven unitary C_zz(t) = cos(2t)") {
    ModelParams p;
    p.eta = 0.0;
    p.beta = 0.3;
    p.eps0 = 0.0;
    p.epsd = 0.0;
    const StcfTrajectory traj = compute_stcf(p, cfg_of(1, 0, 6.0, 0.005));
    double worst = 0.0;
    for (std::size_t k = 0; k < traj.size(); ++k) {
        worst = std::max(worst, std::abs(traj.c[k](3, 3) -
                                         std::cos(2.0 * traj.time(k))));
    }
    CHECK(worst < 1e-6);
}

TEST_CASE("driven damped stcf reproduces the long-time panel structure") {
    // damped oscillations; spatial rows relax to zero while row 0 keeps a
    // periodic non-unital tail
    ModelParams p = fig1_params(1.0);
    const StcfTrajectory traj = compute_stcf(p, cfg_of(10, 2, 20.0));

    bool crossed_zero = false;
    for (std::size_t k = 1; k < traj.size(); ++k) {
        if (traj.c[k](3, 3) < 0.0) crossed_zero = true;
    }
    CHECK(crossed_zero);  // oscillatory, not overdamped

    const StationarityReport tail = stationarity_check(traj, 3.0, 0.02);
    CHECK(tail.pass);
    CHECK(tail.max_tail < 0.02);

    // entry bounds on the Bloch contraction
    for (std::size_t k = 0; k < traj.size(); k += 10) {
        for (int mu = 1; mu < 4; ++mu) {
            for (int nu = 1; nu < 4; ++nu) {
                CHECK(std::abs(traj.c[k](mu, nu)) <= 1.0 + 1e-6);
            }
        }
    }
}

TEST_CASE("two_time_stcf") {
    SUBCASE("tau = 0 equals compute_stcf") {
        ModelParams p = fig1_params(2.0);
        const HeomConfig cfg = cfg_of(6, 1, 2.0);
        const StcfTrajectory a = compute_stcf(p, cfg);
        const StcfTrajectory b = two_time_stcf(p, cfg, 0.0);
        for (std::size_t k = 0; k < a.size(); k += 10) {
            CHECK((a.c[k] - b.c[k]).cwiseAbs().maxCoeff() == 0.0);
        }
    }

    SUBCASE("undriven dynamics are stationary: C(t, tau) = C(t - tau)") {
        ModelParams p = fig1_params(0.0);
        p.epsd = 0.0;
        const HeomConfig cfg = cfg_of(8, 1, 3.0);
        const StcfTrajectory base = compute_stcf(p, cfg);
        const StcfTrajectory shifted = two_time_stcf(p, cfg, 1.7);
        for (std::size_t k = 0; k < base.size(); k += 10) {
            CHECK((base.c[k] - shifted.c[k]).cwiseAbs().maxCoeff() < 1e-8);
        }
    }

    SUBCASE("drive-periodic start time reproduces the tau = 0 map") {
        ModelParams p = fig1_params(1.0);
        const HeomConfig cfg = cfg_of(8, 1, 3.0);
        const double period = 2.0 * std::numbers::pi / p.omega_drive;
        const StcfTrajectory base = compute_stcf(p, cfg);
        const StcfTrajectory shifted = two_time_stcf(p, cfg, period);
        double worst = 0.0;
        for (std::size_t k = 0; k < base.size(); k += 5) {
            worst = std::max(worst,
                             (base.c[k] - shifted.c[k]).cwiseAbs().maxCoeff());
        }
        CHECK(worst < 1e-8);
    }

    SUBCASE("negative tau rejected") {
        ModelParams p = fig1_params(1.0);
        CHECK_THROWS_AS((void)two_time_stcf(p, cfg_of(4, 1, 1.0), -0.5),
                        ConfigError);
    }
}

TEST_CASE("bloch_propagate") {
    ModelParams p = fig1_params(1.0);
    p.eps0 = 0.4;
    const HeomConfig cfg = cfg_of(8, 1, 3.0);
    const StcfTrajectory traj = compute_stcf(p, cfg);

    SUBCASE("t = 0 returns the input") {
        const BlochVector v0{1.0, 0.3, -0.2, 0.5};
        const BlochVector v = bloch_propagate(v0, traj, 0.0);
        CHECK(v.v0 == doctest::Approx(v0.v0));
        CHECK(v.vx == doctest::Approx(v0.vx));
        CHECK(v.vy == doctest::Approx(v0.vy));
        CHECK(v.vz == doctest::Approx(v0.vz));
    }

    SUBCASE("row pick-off for the maximally mixed state") {
        const BlochVector v0{1.0, 0.0, 0.0, 0.0};
        const double t = 2.0;
        const BlochVector v = bloch_propagate(v0, traj, t);
        const Matrix4d& c = traj.c[traj.grid_index(t)];
        CHECK(v.v0 == doctest::Approx(1.0));
        CHECK(v.vx == doctest::Approx(c(0, 1)));
        CHECK(v.vy == doctest::Approx(c(0, 2)));
        CHECK(v.vz == doctest::Approx(c(0, 3)));
    }

    SUBCASE("linearity cross-check vs a direct HEOM run") {
        const BlochVector v0{1.0, 0.6, -0.1, -0.7};
        InitialCondition ic{pauli::from_bloch(v0.v0, v0.vx, v0.vy, v0.vz)};
        const auto direct =
            propagate(ic, p, bath_expansion(p, cfg.n_matsubara), cfg);
        for (std::size_t k = 0; k < direct.size(); k += 30) {
            const BlochVector v = bloch_propagate(v0, traj, traj.time(k));
            CHECK(pauli::expectation(direct.op[k], 1) ==
                  doctest::Approx(v.vx).epsilon(1e-8));
            CHECK(pauli::expectation(direct.op[k], 2) ==
                  doctest::Approx(v.vy).epsilon(1e-8));
            CHECK(pauli::expectation(direct.op[k], 3) ==
                  doctest::Approx(v.vz).epsilon(1e-8));
        }
    }

    SUBCASE("off-grid times are rejected") {
        const BlochVector v0{1.0, 0.0, 0.0, 1.0};
        CHECK_THROWS_AS((void)bloch_propagate(v0, traj, 0.0051), ConfigError);
    }
}

TEST_CASE("stationarity_check flags unitary dynamics as non-ergodic") {
    ModelParams p = fig1_params(0.0);
    p.eta = 0.0;
    p.epsd = 0.0;
    const StcfTrajectory traj = compute_stcf(p, cfg_of(1, 0, 10.0));
    const StationarityReport report = stationarity_check(traj);
    CHECK(!report.pass);
    CHECK(report.max_tail > 0.5);
}

TEST_CASE("undriven eta = 1 relaxes within 0.02 past t = 15") {
    ModelParams p = fig1_params(0.0);
    p.epsd = 0.0;
    const StcfTrajectory traj = compute_stcf(p, cfg_of(10, 2, 20.0));
    const StationarityReport report = stationarity_check(traj, 5.0, 0.02);
    CHECK(report.pass);
}

TEST_CASE("washout of the drive with increasing frequency") {
    ModelParams p = fig1_params(0.0);
    const HeomConfig cfg = cfg_of(8, 1, 6.0);

    SUBCASE("epsd = 0 gives zero deviation at any omega") {
        ModelParams q = p;
        q.epsd = 0.0;
        const WashoutReport report = washout_check(q, cfg, {3.0});
        CHECK(report.deviation[0] == 0.0);
    }

    SUBCASE("deviation decreases along an ascending omega ladder") {
        const WashoutReport report =
            washout_check(p, cfg, {2.0, 5.0, 10.0, 20.0});
        CHECK(report.strictly_decreasing);
        CHECK(report.deviation[3] < 0.5 * report.deviation[1]);
    }

    SUBCASE("non-ascending ladders are rejected") {
        CHECK_THROWS_AS((void)washout_check(p, cfg, {5.0, 2.0}), ConfigError);
    }
}

TEST_CASE("stcf csv round-trip and determinism") {
    ModelParams p = fig1_params(1.0);
    const HeomConfig cfg = cfg_of(6, 1, 2.0);
    const StcfTrajectory a = compute_stcf(p, cfg);
    const StcfTrajectory b = compute_stcf(p, cfg);
    const std::string csv_a = stcf_to_csv(a);
    CHECK(csv_a == stcf_to_csv(b));  // bit-identical rerun

    const StcfTrajectory parsed = stcf_from_csv(csv_a);
    CHECK(parsed.size() == a.size());
    CHECK(parsed.dt == doctest::Approx(a.dt));
    double worst = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
        worst = std::max(worst, (parsed.c[k] - a.c[k]).cwiseAbs().maxCoeff());
    }
    CHECK(worst == 0.0);  // 17 significant digits round-trip doubles

    CHECK_THROWS_AS((void)stcf_from_csv("bad header\n1,2\n"), ConfigError);
}
