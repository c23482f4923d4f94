#include "spinbath/model.hpp"

#include <cmath>
#include <map>
#include <numbers>
#include <sstream>

#include "spinbath/io.hpp"

namespace spinbath {

namespace {
constexpr double kPi = std::numbers::pi;
}

void ModelParams::validate() const {
    // delta = 0 is the pure-dephasing edge case; negative is rejected
    if (delta < 0.0) throw ConfigError("delta must be >= 0");
    if (epsd < 0.0) throw ConfigError("epsd must be >= 0");
    if (omega_drive < 0.0) throw ConfigError("omega must be >= 0");
    if (eta < 0.0) throw ConfigError("eta must be >= 0");
    if (!(omega_c > 0.0)) throw ConfigError("omega_c must be > 0");
    if (!(beta > 0.0)) throw ConfigError("beta must be > 0");
}

ModelParams ModelParams::from_text(const std::string& text) {
    ModelParams p;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const std::string stripped = trim(line);
        if (stripped.empty()) continue;
        const std::size_t eq = stripped.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("expected key=value, got '" + stripped + "'");
        }
        const std::string key = trim(stripped.substr(0, eq));
        const std::string value = stripped.substr(eq + 1);
        if (key == "delta") p.delta = parse_double(value, key);
        else if (key == "eps0") p.eps0 = parse_double(value, key);
        else if (key == "epsd") p.epsd = parse_double(value, key);
        else if (key == "omega") p.omega_drive = parse_double(value, key);
        else if (key == "eta") p.eta = parse_double(value, key);
        else if (key == "omega_c") p.omega_c = parse_double(value, key);
        else if (key == "beta") p.beta = parse_double(value, key);
        else throw ConfigError("unknown model key '" + key + "'");
    }
    p.validate();
    return p;
}

std::string ModelParams::to_text() const {
    std::ostringstream out;
    out << "delta=" << format_double(delta) << "\n"
        << "eps0=" << format_double(eps0) << "\n"
        << "epsd=" << format_double(epsd) << "\n"
        << "omega=" << format_double(omega_drive) << "\n"
        << "eta=" << format_double(eta) << "\n"
        << "omega_c=" << format_double(omega_c) << "\n"
        << "beta=" << format_double(beta) << "\n";
    return out.str();
}

double drive_bias(double t, const ModelParams& p) {
    return p.eps0 + p.epsd * std::cos(p.omega_drive * t);
}

TwoLevelOperator system_hamiltonian(double t, const ModelParams& p) {
    const Matrix2c h =
        p.delta * pauli::sigma_x() + drive_bias(t, p) * pauli::sigma_z();
    return TwoLevelOperator::hermitian_op(h);
}

TwoLevelOperator TwoLevelOperator::hermitian_op(const Matrix2c& m,
                                                double tol) {
    if (pauli::hermitian_defect(m) >= tol) {
        throw NumericalError("operator tagged hermitian has defect >= tol");
    }
    return {m, true};
}

double spectral_density(double omega, const ModelParams& p) {
    return (p.eta / kPi) * p.omega_c * omega /
           (p.omega_c * p.omega_c + omega * omega);
}

Complex BathExpansion::correlation(double t) const {
    Complex acc(0.0, 0.0);
    for (const auto& term : terms) {
        acc += term.c * std::exp(-term.nu * t);
    }
    return acc;
}

BathExpansion bath_expansion(const ModelParams& p, int n_matsubara) {
    p.validate();
    if (n_matsubara < 0) throw ConfigError("n_matsubara must be >= 0");

    BathExpansion bath;
    bath.n_matsubara = n_matsubara;
    bath.terms.reserve(static_cast<std::size_t>(n_matsubara) + 1);

    const double wc = p.omega_c;
    const double beta = p.beta;
    const double x = 0.5 * beta * wc;
    // cot(beta*wc/2) and the Matsubara denominators degenerate when
    // beta*wc is a multiple of 2*pi.
    if (std::abs(std::sin(x)) < 1e-12) {
        throw NumericalError(
            "bath_expansion: beta*omega_c hits a Matsubara resonance");
    }
    const double cot_x = std::cos(x) / std::sin(x);

    // Drude pole
    bath.terms.push_back(
        {p.eta * wc / (2.0 * kPi) * Complex(cot_x, -1.0), wc});

    // Matsubara poles nu_k = 2 pi k / beta
    double partial_residue = 0.0;  // sum_{k<=K} c_k / nu_k
    for (int k = 1; k <= n_matsubara; ++k) {
        const double nu = 2.0 * kPi * k / beta;
        const double denom = nu * nu - wc * wc;
        if (std::abs(denom) < 1e-12 * wc * wc) {
            throw NumericalError(
                "bath_expansion: Matsubara frequency degenerate with cutoff");
        }
        const double c = 2.0 * p.eta * wc / (kPi * beta) * nu / denom;
        bath.terms.push_back({Complex(c, 0.0), nu});
        partial_residue += c / nu;
    }

    // Closed-form full residue sum_{k>=1} c_k/nu_k, minus the explicit part.
    const double full_residue =
        p.eta / (kPi * beta * wc) * (1.0 - x * cot_x);
    bath.delta_term = full_residue - partial_residue;

    const double c0_abs = std::abs(bath.terms.front().c);
    if (p.eta > 0.0 && std::abs(bath.delta_term) > 0.1 * c0_abs) {
        throw ConfigError(
            "bath_expansion: Markovian closure residue exceeds 10% of |c_0|; "
            "raise n_matsubara (beta*omega_c too small for K=" +
            std::to_string(n_matsubara) + ")");
    }
    return bath;
}

std::vector<DiscreteMode> discretize_bath(const ModelParams& p, int n_modes) {
    p.validate();
    if (n_modes <= 0) throw ConfigError("n_modes must be > 0");
    // Nodes equidistributed in the CDF of J(w)/w on [0, w_max]; the cap
    // keeps the sparse UV nodes from carrying spurious weight while the
    // neglected tail is negligible in every time-integrated kernel.
    const double w_max = 50.0 * p.omega_c;
    const double span = std::atan(w_max / p.omega_c);
    const double cell = p.eta / (kPi * kPi) * span /
                        static_cast<double>(n_modes);  // J/(pi w) weight
    std::vector<DiscreteMode> modes(static_cast<std::size_t>(n_modes));
    for (int a = 0; a < n_modes; ++a) {
        const double w =
            p.omega_c * std::tan((a + 0.5) * span / n_modes);
        // c_a^2 = cell * w_a (coefficient of a+adag);
        // q-convention coupling is c_a * sqrt(2 w_a).
        modes[static_cast<std::size_t>(a)] = {w, w * std::sqrt(2.0 * cell)};
    }
    return modes;
}

}  // namespace spinbath
