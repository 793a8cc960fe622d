#pragma once

#include <complex>
#include <map>
#include <utility>
#include <vector>

#include "flipline/complex_orbits.hpp"
#include "flipline/params.hpp"

namespace flipline {

struct Level {
    int n;
    double g;
    double action;
    double omega;
};

struct LevelLadder {
    WellId well{1};
    std::vector<Level> levels;
    double g_top = 0.0;  // upper end of the quantized range (g_s in the double-well regime)
};

struct QuantizeOptions {
    // Single-well landscapes have no saddle; the ladder stops at this count.
    int max_levels_single_well = 12;
    Tolerances tol{};
};

// Solves I(g_n) = lambda (n + 1/2) for every level below the saddle.
LevelLadder quantize_well(const ModelParams& p, WellId well, const QuantizeOptions& opt = {});

struct FourierElement {
    std::complex<double> value;
    bool resonant = false;  // |1 - exp(-i m phi2)| below 1e-10
};

// Semiclassical <n+m|a|n> at quasienergy g: the m-th Fourier component of
// a = (P - iQ) / sqrt(2 lambda) over the real orbit started at the turning
// point nearest the saddle. m != 0 from the pole data; m = 0 is the orbit
// average, a diagnostic only.
FourierElement fourier_matrix_element(const ModelParams& p, double g, int m, WellId well,
                                      const Tolerances& tol = {});
FourierElement fourier_matrix_element(const ModelParams& p, const OrbitData& od, int m, WellId well);

// Where a_m is evaluated for the pair (n, n + m): the initial level g_n, or
// the mean (g_n + g_{n+m}) / 2, which makes W_{n,n+m} and W_{n+m,n} share one
// orbit and removes the O(1/n) error near the well bottom.
enum class RatePoint { LevelEnergy, Midpoint };

struct RateOptions {
    int m_max = 12;
    RatePoint point = RatePoint::Midpoint;
    double relative_floor = 1e-12;
    Tolerances tol{};
};

struct RateTable {
    WellId well{1};
    int m_max = 12;
    double kappa = 0.0;
    // (n, n + m) -> W_{n, n+m}, the rate of the transition n -> n + m.
    std::map<std::pair<int, int>, double> entries;

    double rate(int from, int to) const;
};

RateTable transition_rates(const ModelParams& p, const LevelLadder& ladder, const RateOptions& opt = {});

// W_{n-m,n} / W_{n+m,n} = exp(2 m Im(phi** + phi* - phi2)) = exp(-m omega R').
double detailed_balance_ratio(const ModelParams& p, double g, int m, const Tolerances& tol = {});

}  // namespace flipline
