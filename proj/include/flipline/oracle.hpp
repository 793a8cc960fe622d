#pragma once

#include <vector>

#include <Eigen/Dense>

#include "flipline/params.hpp"

namespace flipline {

// Detuning used inside the number-basis Hamiltonian. Bare keeps mu as given,
// so the Weyl symbol of the operator is g(Q, P) - lambda^2 / 4 and
// Bohr-Sommerfeld levels err at O(lambda^2). Renormalized uses mu + 2 lambda,
// the detuning measured from the undriven level spacing; with it the exact
// localization <1|a|0> = 0 falls at alpha_d = mu.
enum class DetuningConvention { Bare, Renormalized };

enum class StateLabel { Left = -1, Delocalized = 0, Right = 1 };

struct OracleOptions {
    int N = 0;          // 0: smallest multiple of 50 passing the tail test
    int max_N = 2000;   // truncation budget for the automatic choice
    double tail_tol = 1e-12;         // weight on the last 10 basis states
    double convergence_tol = 1e-10;  // top retained eigenvalue shift for N -> N + 50
    double window_above = 0.25;      // retained states: g < g_s + window (g_c + window in one well)
    double cluster_tol = 1e-3;       // doublet grouping, in units of lambda
    double delocalized_band = 0.1;   // |<Q>| < band * |q_min| is delocalized
    DetuningConvention convention = DetuningConvention::Bare;
};

struct OracleSpectrum {
    ModelParams params;
    DetuningConvention convention = DetuningConvention::Bare;
    int dimension = 0;
    // Retained states only (g below the cap), sorted by energy. Near-degenerate
    // interwell doublets are rotated to diagonalize Q within the doublet and
    // carry <psi|g|psi> as their level.
    std::vector<double> eigenvalues;
    std::vector<StateLabel> well_labels;
    std::vector<double> q_expect;
    Eigen::MatrixXd vectors;            // dimension x retained, number basis of b = -i a
    Eigen::MatrixXd lowering_elements;  // |<i|a|j>| between retained states
    double energy_cap = 0.0;
    double max_tail = 0.0;
    double convergence_shift = 0.0;
    double classification_margin = 0.0;  // min |<Q>| / |q_min| over labeled intrawell states
};

// Real symmetric matrix of g-hat in the basis of b = -i a (Q = -sqrt(lambda / 2) (b + b^dagger)),
// constant shifted so eigenvalues compare directly with g(Q, P).
Eigen::MatrixXd oracle_hamiltonian(const ModelParams& p, int N, DetuningConvention convention);

OracleSpectrum build_and_diagonalize(const ModelParams& p, const OracleOptions& opt = {});

// |<i|a|j>| between all retained states; the matrix is also stored in the spectrum.
Eigen::MatrixXd exact_matrix_elements(const OracleSpectrum& s);

// Retained indices labeled with the well, in increasing energy; position k is
// the intrawell quantum number n = k.
std::vector<int> well_states(const OracleSpectrum& s, WellId well);

struct PauliResult {
    std::vector<double> rho;     // stationary populations over retained states
    double slowest_rate = 0.0;   // smallest nonzero |Re| eigenvalue of the rate generator
    bool resonant_window = false;  // alpha_d = m lambda (m != 0): interwell tunneling outside the Pauli picture
    std::vector<int> resonances;
};

// Pauli balance with W(i -> j) = 2 kappa |<j|a|i>|^2 over the retained states.
// The relaxation spectrum is computed in 50-digit arithmetic because the
// slowest rate sits far below double-precision resolution of the generator.
PauliResult pauli_steady_state(const OracleSpectrum& s, double kappa);

struct AlignmentPair {
    int shallow_index;
    int deep_index;
    double mismatch;  // |E_shallow - E_deep| / local deep-well spacing
};

struct AlignmentReport {
    std::vector<AlignmentPair> pairs;
    double max_mismatch = 0.0;
    double median_mismatch = 0.0;
};

// Pairs each shallow-well level below g_s with the nearest deep-well level.
AlignmentReport level_alignment(const ModelParams& p, const OracleSpectrum& s);

}  // namespace flipline
