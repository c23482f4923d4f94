// model.hpp - driven spin-boson Hamiltonian, Drude-cutoff Ohmic bath and its
// exponential (Matsubara) expansion

#pragma once

#include <complex>
#include <string>
#include <vector>

#include "spinbath/errors.hpp"
#include "spinbath/pauli.hpp"

namespace spinbath {

// All physical constants of the driven spin-boson model, in units of the
// state-state coupling delta (hbar = 1).
struct ModelParams {
    double delta = 1.0;        // state-state coupling, sets the energy unit
                               // (0 admitted for the pure-dephasing limit)
    double eps0 = 0.0;         // static bias
    double epsd = 0.0;         // drive amplitude
    double omega_drive = 0.0;  // drive frequency
    double eta = 0.0;          // system-bath coupling
    double omega_c = 1.0;      // Drude cutoff frequency
    double beta = 1.0;         // inverse temperature

    void validate() const;

    // Flat key=value text form (keys: delta, eps0, epsd, omega, eta,
    // omega_c, beta). Unknown keys are rejected with the offending name.
    static ModelParams from_text(const std::string& text);
    std::string to_text() const;
};

// eps(t) = eps0 + epsd*cos(omega*t)
double drive_bias(double t, const ModelParams& p);

// H_s(t) = delta*sx + eps(t)*sz
TwoLevelOperator system_hamiltonian(double t, const ModelParams& p);

// J(w) = (eta/pi) * omega_c*w / (omega_c^2 + w^2), for w >= 0
double spectral_density(double omega, const ModelParams& p);

// One exponential term c*exp(-nu*t) of the bath correlation function.
struct BathTerm {
    Complex c;
    double nu = 0.0;
};

// Exponential decomposition of the bath correlation function:
//   C(t) ~ sum_k c_k exp(-nu_k t) + 2*delta_term*dirac(t)
// terms[0] is the Drude pole (nu_0 = omega_c), terms[k>=1] the Matsubara
// poles at nu_k = 2 pi k / beta. delta_term is the Markovian closure
// residue of the truncated Matsubara tail, sum_{k>K} c_k/nu_k.
struct BathExpansion {
    std::vector<BathTerm> terms;
    int n_matsubara = 0;
    double delta_term = 0.0;

    std::size_t size() const { return terms.size(); }

    // Reconstructed correlation sum_k c_k exp(-nu_k t)
    Complex correlation(double t) const;
};

// Builds the Drude + Matsubara expansion for the model's J and beta.
// Fails if the closure residue exceeds 10% of |c_0| (insufficient K).
BathExpansion bath_expansion(const ModelParams& p, int n_matsubara);

// One discrete bath mode, q-coordinate convention (m = 1):
//   H_sb = sz  (x)  sum_a couple_q * q_a
struct DiscreteMode {
    double omega = 0.0;
    double couple_q = 0.0;  // coefficient of q in H_sb
};

// F-mode discretization of J with mode density following J(w)/w, so that
// sum_a c_a^2 f(w_a) ~ (1/pi) int dw J(w) f(w). Documentation-level mirror
// of the continuum form; used as a weak-coupling oracle in tests.
std::vector<DiscreteMode> discretize_bath(const ModelParams& p, int n_modes);

}  // namespace spinbath
