#pragma once

namespace flipline {

// Dimensionless rotating-frame parameters: detuning, bias amplitude,
// scaled Planck constant and decay rate.
struct ModelParams {
    double mu = 0.0;
    double alpha_d = 0.0;
    double lambda = 0.05;
    double kappa = 0.01;
};

// Throws DomainError unless lambda > 0 and kappa > 0.
void validate(const ModelParams& p);

enum class WellRole { Deep, Shallow, Symmetric };

// sigma = -1 is the well at Q < 0, sigma = +1 the well at Q > 0.
struct WellId {
    int sigma = 1;
    static WellId left() { return {-1}; }
    static WellId right() { return {1}; }
};

WellRole role(WellId well, double alpha_d);

// The deep well for the given bias; the right well when alpha_d = 0.
WellId deep_well(double alpha_d);
WellId shallow_well(double alpha_d);

struct Tolerances {
    double root = 1e-12;            // polynomial root residuals
    double quad_rel = 1e-10;        // adaptive Gauss-Kronrod relative tolerance
    double critical_cutoff = 1e-9;  // |g - g_c| below this raises CriticalPoint
    double ode_rel = 1e-12;
    double ode_abs = 1e-12;
    double pole_cutoff = 1e-3;      // minimum distance of an integration path to a pole
    double blowup_bound = 1e6;      // |Q| above this is treated as reaching a pole
};

}  // namespace flipline
