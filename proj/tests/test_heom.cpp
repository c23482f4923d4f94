#include <doctest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "spinbath/errors.hpp"
#include "spinbath/heom.hpp"

using namespace spinbath;

namespace {

ModelParams ohmic_params(double eta, double beta) {
    ModelParams p;
    p.eta = eta;
    p.beta = beta;
    p.omega_c = 1.0;
    return p;
}

HeomConfig quick_cfg(int tier, int matsubara, double t_final,
                     double dt = 0.01) {
    HeomConfig cfg;
    cfg.max_tier = tier;
    cfg.n_matsubara = matsubara;
    cfg.dt = dt;
    cfg.t_final = t_final;
    return cfg;
}

Eigen::Vector3d rabi_rotation(const Eigen::Vector3d& v0, double delta,
                              double eps0, double t) {
    const Eigen::Vector3d b(2.0 * delta, 0.0, 2.0 * eps0);
    const double norm = b.norm();
    if (norm == 0.0) return v0;
    const Eigen::Vector3d n = b / norm;
    const double th = norm * t;
    return v0 * std::cos(th) + n.cross(v0) * std::sin(th) +
           n * n.dot(v0) * (1.0 - std::cos(th));
}

}  // namespace

TEST_CASE("enumerate_hierarchy counts") {
    const ModelParams p = ohmic_params(1.0, 0.3);
    CHECK(enumerate_hierarchy(quick_cfg(1, 0, 1.0), bath_expansion(p, 0))
              .size() == 2);
    CHECK(enumerate_hierarchy(quick_cfg(2, 1, 1.0), bath_expansion(p, 1))
              .size() == 6);
    CHECK(enumerate_hierarchy(quick_cfg(20, 2, 1.0), bath_expansion(p, 2))
              .size() == 1771);

    SUBCASE("lexicographic order") {
        const auto idx =
            enumerate_hierarchy(quick_cfg(2, 1, 1.0), bath_expansion(p, 1));
        for (std::size_t i = 0; i + 1 < idx.size(); ++i) {
            CHECK(idx[i].occupations < idx[i + 1].occupations);
        }
    }

    SUBCASE("memory budget") {
        HeomConfig cfg = quick_cfg(20, 2, 1.0);
        cfg.max_ados = 100;
        CHECK_THROWS_AS(
            (void)enumerate_hierarchy(cfg, bath_expansion(p, 2)),
            ConfigError);
    }
}

TEST_CASE("heom_rhs decoupled limit and structure") {
    ModelParams p = ohmic_params(0.0, 0.3);
    p.eps0 = 0.4;
    p.epsd = 0.7;
    p.omega_drive = 2.0;
    const HeomConfig cfg = quick_cfg(3, 1, 1.0);
    const Hierarchy h(cfg, bath_expansion(p, 1));

    std::vector<Matrix2c> state(h.size(), Matrix2c::Zero());
    state[0] = pauli::from_bloch(1.0, 0.3, -0.2, 0.5);
    std::vector<Matrix2c> deriv;
    heom_rhs(0.7, state, p, h, deriv);

    const Matrix2c hs = p.delta * pauli::sigma_x() +
                        drive_bias(0.7, p) * pauli::sigma_z();
    const Matrix2c expected =
        Complex(0.0, -1.0) * pauli::commutator(hs, state[0]);
    CHECK((deriv[0] - expected).cwiseAbs().maxCoeff() < 1e-14);
    for (std::size_t i = 1; i < h.size(); ++i) {
        CHECK(deriv[i].cwiseAbs().maxCoeff() == 0.0);
    }
}

TEST_CASE("heom_rhs preserves hermitian stacks") {
    ModelParams p = ohmic_params(0.8, 0.5);
    p.eps0 = 1.0;
    const HeomConfig cfg = quick_cfg(3, 1, 1.0);
    const Hierarchy h(cfg, bath_expansion(p, 1));

    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<Matrix2c> state(h.size());
    for (auto& m : state) {
        m = pauli::from_bloch(u(rng), u(rng), u(rng), u(rng));
    }
    std::vector<Matrix2c> deriv;
    heom_rhs(0.0, state, p, h, deriv);
    for (const auto& d : deriv) {
        CHECK(pauli::hermitian_defect(d) < 1e-13);
    }
}

TEST_CASE("unitary limit: Rabi rotation to 1e-6") {
    ModelParams p = ohmic_params(0.0, 0.3);
    p.eps0 = 0.5;
    const HeomConfig cfg = quick_cfg(1, 0, 10.0, 0.005);
    const BathExpansion bath = bath_expansion(p, 0);

    SUBCASE("maximally mixed stays maximally mixed") {
        InitialCondition ic{pauli::from_bloch(1.0, 0.0, 0.0, 0.0)};
        const auto traj = propagate(ic, p, bath, cfg);
        for (std::size_t k = 0; k < traj.size(); k += 100) {
            for (int mu = 1; mu < 4; ++mu) {
                CHECK(std::abs(pauli::expectation(traj.op[k], mu)) < 1e-12);
            }
            CHECK(pauli::expectation(traj.op[k], 0) ==
                  doctest::Approx(1.0).epsilon(1e-12));
        }
    }

    SUBCASE("Bloch precession about (delta, 0, eps0)") {
        const Eigen::Vector3d v0(0.0, 0.0, 1.0);
        InitialCondition ic{pauli::from_bloch(1.0, v0(0), v0(1), v0(2))};
        const auto traj = propagate(ic, p, bath, cfg);
        double worst = 0.0;
        for (std::size_t k = 0; k < traj.size(); k += 50) {
            const Eigen::Vector3d expect =
                rabi_rotation(v0, p.delta, p.eps0, traj.time(k));
            for (int i = 0; i < 3; ++i) {
                worst = std::max(
                    worst, std::abs(pauli::expectation(traj.op[k], i + 1) -
                                    expect(i)));
            }
        }
        CHECK(worst < 1e-6);
    }
}

TEST_CASE("unitary limit equals ordered-exponential oracle under drive") {
    ModelParams p = ohmic_params(0.0, 0.3);
    p.eps0 = 0.5;
    p.epsd = 1.0;
    p.omega_drive = 1.0;
    const HeomConfig cfg = quick_cfg(1, 0, 10.0, 0.005);
    InitialCondition ic{pauli::from_bloch(1.0, 1.0, 0.0, 0.0)};
    const auto traj = propagate(ic, p, bath_expansion(p, 0), cfg);

    const auto u = oracles::unitary_ordered_propagators(
        p, 0.0, cfg.dt, cfg.n_steps(), 50);
    double worst = 0.0;
    for (std::size_t k = 0; k < traj.size(); ++k) {
        const Matrix2c exact = u[k] * ic.system_operator * u[k].adjoint();
        worst = std::max(worst, (traj.op[k] - exact).cwiseAbs().maxCoeff());
    }
    CHECK(worst < 1e-6);
}

TEST_CASE("pure dephasing") {
    ModelParams p = ohmic_params(1.0, 0.3);
    p.delta = 0.0;

    SUBCASE("populations frozen, coherence decays") {
        p.eps0 = 0.7;
        const HeomConfig cfg = quick_cfg(12, 2, 5.0);
        InitialCondition ic{pauli::from_bloch(1.0, 1.0, 0.0, 0.0)};
        const auto traj = propagate(ic, p, bath_expansion(p, 2), cfg);
        for (std::size_t k = 0; k < traj.size(); k += 100) {
            CHECK(std::abs(pauli::expectation(traj.op[k], 3)) < 1e-8);
            CHECK(std::abs(traj.op[k].trace().real() - 1.0) < 1e-8);
        }
        const double c_mid = std::abs(pauli::expectation(traj.op[200], 1));
        const double c_end =
            std::abs(pauli::expectation(traj.op[traj.size() - 1], 1));
        CHECK(c_mid < 1.0);
        CHECK(c_end < c_mid);
    }

    SUBCASE("coherence matches the analytic dephasing exponent") {
        p.eps0 = 0.0;
        const HeomConfig cfg = quick_cfg(15, 2, 4.0);
        InitialCondition ic{0.5 * pauli::sigma_x()};
        const auto traj = propagate(ic, p, bath_expansion(p, 2), cfg);
        double worst = 0.0;
        for (std::size_t k = 20; k < traj.size(); k += 20) {
            const double gamma =
                oracles::dephasing_gamma_quadrature(p, traj.time(k));
            const double exact = std::exp(-gamma);
            if (exact < 1e-6) continue;
            const double heom =
                (traj.op[k] * pauli::sigma_x()).trace().real();
            worst = std::max(worst, std::abs(heom - exact) / exact);
        }
        CHECK(worst < 1e-2);
    }
}

TEST_CASE("trace conservation, hermiticity, positivity at eta = 1") {
    ModelParams p = ohmic_params(1.0, 0.3);
    p.eps0 = 1.0;
    const HeomConfig cfg = quick_cfg(10, 1, 5.0);
    const Hierarchy h(cfg, bath_expansion(p, 1));

    SUBCASE("trace constant for every sigma_mu row") {
        for (int mu = 0; mu < 4; ++mu) {
            InitialCondition ic{0.5 * pauli::sigma(mu)};
            const auto traj = propagate(ic, p, h);
            const double expected = mu == 0 ? 1.0 : 0.0;
            for (std::size_t k = 0; k < traj.size(); k += 50) {
                CHECK(std::abs(traj.op[k].trace().real() - expected) < 1e-8);
                CHECK(std::abs(traj.op[k].trace().imag()) < 1e-12);
            }
        }
    }

    SUBCASE("hermiticity preserved") {
        InitialCondition ic{pauli::from_bloch(1.0, 0.6, -0.3, 0.4)};
        const auto traj = propagate(ic, p, h);
        for (std::size_t k = 0; k < traj.size(); k += 50) {
            CHECK(pauli::hermitian_defect(traj.op[k]) < 1e-8);
        }
    }

    SUBCASE("positivity on and inside the Bloch ball") {
        const Eigen::Vector3d dirs[] = {{0, 0, 1},
                                        {1, 0, 0},
                                        {0, 1, 0},
                                        {-0.5, 0.5, 0.6},
                                        {0.9, 0, -0.4}};
        for (const auto& d : dirs) {
            const Eigen::Vector3d v = d.norm() > 1.0 ? d.normalized() : d;
            InitialCondition ic{pauli::from_bloch(1.0, v(0), v(1), v(2))};
            const auto traj = propagate(ic, p, h);
            for (std::size_t k = 0; k < traj.size(); k += 100) {
                Eigen::SelfAdjointEigenSolver<Matrix2c> es(traj.op[k]);
                CHECK(es.eigenvalues()(0) > -1e-6);
            }
        }
    }
}

TEST_CASE("linearity of the hierarchy") {
    ModelParams p = ohmic_params(1.0, 0.3);
    p.eps0 = 0.3;
    const HeomConfig cfg = quick_cfg(8, 1, 3.0);
    const Hierarchy h(cfg, bath_expansion(p, 1));

    const Matrix2c a = 0.5 * pauli::sigma_x();
    const Matrix2c b = 0.5 * pauli::sigma_z();
    const double ca = 0.3, cb = -1.2;
    const auto traj_a = propagate({a}, p, h);
    const auto traj_b = propagate({b}, p, h);
    const auto traj_ab = propagate({ca * a + cb * b}, p, h);
    double worst = 0.0;
    for (std::size_t k = 0; k < traj_ab.size(); k += 20) {
        worst = std::max(
            worst, (traj_ab.op[k] - ca * traj_a.op[k] - cb * traj_b.op[k])
                       .cwiseAbs()
                       .maxCoeff());
    }
    CHECK(worst < 1e-8);
}

TEST_CASE("weak-coupling cross-validation vs Ehrenfest oracle") {
    // population-difference correlation C_zz(t): the up/down combination
    // cancels the mean-field detailed-balance drift, leaving the oracle
    // exact to well below the tolerance at this coupling
    ModelParams p = ohmic_params(0.1, 0.3);
    p.eps0 = 1.0;
    const HeomConfig cfg = quick_cfg(8, 2, 5.0);
    InitialCondition ic{0.5 * pauli::sigma_z()};
    const auto traj = propagate(ic, p, bath_expansion(p, 2), cfg);

    oracles::EhrenfestSpec spec;
    spec.n_traj = 8000;
    spec.dt = 0.005;
    spec.t_final = 5.0;
    const auto oracle = oracles::ehrenfest_czz(p, spec);

    // oracle grid is twice as fine as the HEOM grid
    double worst = 0.0;
    for (std::size_t k = 0; k < traj.size(); ++k) {
        const double heom = pauli::expectation(traj.op[k], 3);
        worst = std::max(worst, std::abs(heom - oracle[2 * k]));
    }
    CHECK(worst < 0.02);
}

TEST_CASE("convergence scan") {
    SUBCASE("eta = 0 converges at the lowest tier") {
        ModelParams p = ohmic_params(0.0, 0.3);
        const auto report =
            convergence_scan({0.5 * pauli::sigma_z()}, p,
                             quick_cfg(1, 0, 2.0), {1, 2, 3}, {0});
        REQUIRE(report.rows.size() == 3);
        CHECK(!report.rows[0].deviation.has_value());
        CHECK(*report.rows[1].deviation == 0.0);
        CHECK(*report.rows[2].deviation == 0.0);
        CHECK(report.converged_at.has_value());
        CHECK(report.converged_at->first == 2);
    }

    SUBCASE("deviation decreases monotonically with L at strong coupling") {
        ModelParams p = ohmic_params(1.0, 0.3);
        p.eps0 = 1.0;
        const auto report =
            convergence_scan({0.5 * pauli::sigma_z()}, p,
                             quick_cfg(1, 1, 5.0), {2, 4, 6, 8, 10}, {1});
        double prev = 1e300;
        for (std::size_t i = 1; i < report.rows.size(); ++i) {
            CHECK(*report.rows[i].deviation < prev);
            prev = *report.rows[i].deviation;
        }
    }

    SUBCASE("weak coupling converges at smaller L than strong coupling") {
        const std::vector<int> tiers = {2, 4, 6, 8, 10, 12, 14};
        auto first_converged = [&](double eta, double beta) {
            ModelParams p = ohmic_params(eta, beta);
            p.eps0 = 1.0;
            const auto report =
                convergence_scan({0.5 * pauli::sigma_z()}, p,
                                 quick_cfg(1, 2, 5.0), tiers, {2});
            REQUIRE(report.converged_at.has_value());
            return report.converged_at->first;
        };
        const int l_weak = first_converged(0.1, 1.6);
        const int l_strong = first_converged(1.0, 1.6);
        CHECK(l_weak < l_strong);
    }
}

TEST_CASE("divergence is caught with a tier diagnostic") {
    ModelParams p = ohmic_params(1.0, 0.3);
    HeomConfig cfg = quick_cfg(6, 2, 50.0, 0.5);  // nu*dt far beyond stability
    cfg.auto_substep = false;
    try {
        (void)propagate({0.5 * pauli::sigma_z()}, p, bath_expansion(p, 2),
                        cfg);
        FAIL("expected NumericalError");
    } catch (const NumericalError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("tier") != std::string::npos);
        CHECK(msg.find("t=") != std::string::npos);
    }
}

TEST_CASE("markovian closure terminator stays consistent with deep drop") {
    ModelParams p = ohmic_params(1.0, 0.3);
    p.eps0 = 1.0;
    InitialCondition ic{0.5 * pauli::sigma_z()};

    HeomConfig deep = quick_cfg(16, 1, 5.0);
    const auto reference = propagate(ic, p, bath_expansion(p, 1), deep);

    HeomConfig shallow = quick_cfg(8, 1, 5.0);
    const auto dropped = propagate(ic, p, bath_expansion(p, 1), shallow);
    shallow.terminator = Terminator::markovian_closure;
    const auto closed = propagate(ic, p, bath_expansion(p, 1), shallow);

    const double err_closed = trajectory_deviation(closed, reference);
    const double err_dropped = trajectory_deviation(dropped, reference);
    CHECK(err_closed < 1e-3);
    CHECK(err_dropped < 1e-3);
    // the boundary closure must not destabilize the shallow hierarchy
    CHECK(err_closed < 10.0 * err_dropped + 1e-12);
}

TEST_CASE("tier-0 trajectory csv carries t plus Re/Im entries") {
    ModelParams p = ohmic_params(0.0, 0.3);
    const HeomConfig cfg = quick_cfg(1, 0, 0.05);
    const auto traj =
        propagate({0.5 * pauli::sigma_y()}, p, bath_expansion(p, 0), cfg);
    const std::string csv = trajectory_to_csv(traj);
    CHECK(csv.rfind("t,Re00,Im00,Re01,Im01,Re10,Im10,Re11,Im11", 0) == 0);
    // sigma_y/2 at t=0: entry (0,1) = -i/2
    const auto first_row = csv.substr(csv.find('\n') + 1);
    const auto fields = first_row.substr(0, first_row.find('\n'));
    CHECK(fields.find(",-0.5,") != std::string::npos);
}
