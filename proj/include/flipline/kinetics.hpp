#pragma once

#include <array>
#include <vector>

#include "flipline/params.hpp"
#include "flipline/semiclassics.hpp"

namespace flipline {

struct RPrimeSample {
    double g;
    double r_prime;
};

struct DistributionProfile {
    WellId well{1};
    std::vector<RPrimeSample> samples;  // at the ladder levels g_n
    std::vector<double> R;              // R(g_n) = integral of R' from g_min
    std::vector<double> rho;            // from the R' integral, sum = 1
    std::vector<double> rho_balance;    // null vector of the intrawell balance operator, sum = 1
    double normalization = 0.0;         // C_w for rho
    double max_slope_discrepancy = 0.0; // max relative difference of d ln(rho)/dg between routes
    int compared_pairs = 0;             // level pairs entering the discrepancy (away from g_c)
};

struct ActivationResult {
    std::array<double, 2> R_A{};  // indexed like LandscapeGeometry (sigma = -1, +1)
    double delta_R_A = 0.0;       // R_A(deep) - R_A(shallow)
    double population_ratio_exponent = 0.0;  // (R_A(+1) - R_A(-1)) / lambda
    std::array<double, 2> switching_exponent{};  // R_A / lambda
    std::array<double, 2> switching_rate{};      // prefactor * exp(-R_A / lambda)
    double prefactor_estimate = 0.0;             // kappa; order of magnitude only
    bool prefactor_is_order_of_magnitude = true;
};

// 2 Im(tau2 - tau* - tau**); CriticalPoint near g_c.
double r_prime(const ModelParams& p, double g, const Tolerances& tol = {});

// 2 Im tau_- on the minus sheet: an independent route to the same function.
double r_prime_minus_sheet(const ModelParams& p, double g, const Tolerances& tol = {});

// Harmonic-limit closed form at the bottom of the well.
double r_prime_at_minimum(const ModelParams& p, WellId well);

// True when g_c coincides with the bottom of the well (alpha_d = +-mu).
bool is_localization_point(const ModelParams& p, WellId well);

struct ActivationOptions {
    Tolerances tol{};
    double outer_rel = 1e-9;   // relative tolerance of the g quadrature
    double log_window = 20.0;  // |g - g_c| < e^{-log_window} handled by the asymptotic tail
};

// Integral of R' over [a, b] inside one well's orbit range, split at g_c and
// at the shallow-well minimum.
double integrate_r_prime(const ModelParams& p, double a, double b, const ActivationOptions& opt = {});

double activation_energy(const ModelParams& p, WellId well, const ActivationOptions& opt = {});

// Integral of R' from g_min(+1) to g_min(-1), i.e. R_A(+1) - R_A(-1); odd in alpha_d.
double delta_activation(const ModelParams& p, const ActivationOptions& opt = {});

DistributionProfile quasistationary_distribution(const ModelParams& p, const LevelLadder& ladder,
                                                 const RateTable& rates, const ActivationOptions& opt = {});

// Stationary vector of a rate matrix W(i, j) = rate i -> j by state reduction
// (Grassmann-Taksar-Heyman); no subtractions, so tiny populations keep full
// relative accuracy. NullSpaceDegenerate when the chain is reducible.
std::vector<double> stationary_distribution(const std::vector<std::vector<double>>& W);

// R_A^(1)(mu) = (1/2) log[(mu + 2 + 2 sqrt(1 + mu)) / (mu + 2 - 2 sqrt(1 + mu))].
double log_susceptibility(double mu);

// (8 / (2 - mu)) |delta_alpha|^{3/2} / [3 (1 + mu)]^{1/4} for delta_alpha < 0.
double prebifurcation_activation(double mu, double delta_alpha);

// R' = 2 M / N with M the area inside g(Q, P) = g and N = (1/2) integral of the
// Laplacian of g over that area.
double area_formula_rprime(const ModelParams& p, double g, WellId well, const Tolerances& tol = {});

std::vector<int> resonance_offsets(const ModelParams& p, double window = 1e-6);

ActivationResult switching_rate_estimate(const ModelParams& p, const ActivationOptions& opt = {});

}  // namespace flipline
