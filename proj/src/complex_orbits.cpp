#include "flipline/complex_orbits.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <boost/numeric/odeint.hpp>

#include "flipline/errors.hpp"
#include "flipline/numerics.hpp"

namespace flipline {

namespace {

constexpr double pi = std::numbers::pi;
const cplx I1(0.0, 1.0);

// Working frame with alpha_d >= 0: the mirror Q -> -Q, P -> -P maps alpha_d to
// -alpha_d and swaps the wells. Period and pole data are mirror invariant.
struct Frame {
    ModelParams p;
    int mirror = 1;
    LandscapeGeometry geo;
};

Frame make_frame(const ModelParams& in, double root_tol) {
    Frame f;
    f.p = in;
    if (in.alpha_d < 0.0) {
        f.p.alpha_d = -in.alpha_d;
        f.mirror = -1;
    }
    f.geo = stationary_points(f.p, root_tol);
    if (f.geo.regime == Regime::DoubleWell) {
        if (!double_well_condition(f.p, f.geo))
            throw Error(ErrorKind::DomainError,
                        "parameters violate -1 + 3(|alpha_d|/2)^(2/3) < mu < Q_s^2 + 1");
    } else if (f.p.mu >= 1.0 + f.geo.q_c * f.geo.q_c) {
        throw Error(ErrorKind::DomainError,
                    "mu too large: the region between the wells is classically allowed");
    }
    return f;
}

WellId to_frame(WellId w, const Frame& f) { return WellId{w.sigma * f.mirror}; }

// Orbit geometry at fixed g in the alpha_d >= 0 frame.
struct Geometry {
    ModelParams p;
    double g = 0.0;
    OrbitRegime regime = OrbitRegime::DoubleWell;
    bool below_gc = false;
    double gc = 0.0, qc = 0.0;
    double d = 0.0;  // sqrt|g - g_c|
    double qm = 0.0, qp = 0.0;  // real branch points when below_gc
    // Real turning points; q1, q2 only meaningful in the double-well regime.
    double q1 = 0.0, q2 = 0.0, q3 = 0.0, q4 = 0.0;
    cplx qz;  // complex turning point with Im > 0 (single-well regime)
    double rel = 1e-10;

    double B(double Q) const {
        const double x = Q - qc;
        return 4.0 * (x * x + (g - gc));
    }
    double dplus(double Q, double sqrtB) const { return Q * Q + 1.0 - p.mu + sqrtB; }
    // (Q - q1)(Q - q2): real pair or |Q - qz|^2.
    double pair12(double Q) const {
        if (regime == OrbitRegime::DoubleWell) return (Q - q1) * (Q - q2);
        return std::norm(cplx(Q) - qz);
    }
};

Geometry make_geometry(const Frame& f, double g, const Tolerances& tol) {
    Geometry G;
    G.p = f.p;
    G.g = g;
    G.rel = tol.quad_rel;
    G.gc = f.geo.g_c;
    G.qc = f.geo.q_c;
    if (std::abs(g - G.gc) < tol.critical_cutoff)
        throw Error(ErrorKind::CriticalPoint, "g is within the critical cutoff of g_c");
    G.below_gc = g < G.gc;
    G.d = std::sqrt(std::abs(g - G.gc));
    G.qm = G.qc - G.d;
    G.qp = G.qc + G.d;

    const bool dw = f.geo.regime == Regime::DoubleWell;
    // With alpha_d >= 0 the deep (or only) well is the right one.
    const double gdeep = f.geo.g_min[1];
    if (!(g > gdeep)) throw Error(ErrorKind::OutsideWellRange, "g is below the deep-well minimum");
    if (dw && !(g < f.geo.g_s))
        throw Error(ErrorKind::OutsideWellRange, "g is above the saddle quasienergy");
    G.regime = (dw && g > f.geo.g_min[0]) ? OrbitRegime::DoubleWell : OrbitRegime::SingleWell;

    const double mu = f.p.mu, a = f.p.alpha_d;
    auto r = num::poly_roots({-4.0 * g, -4.0 * a, -2.0 * (1.0 + mu), 0.0, 1.0});
    std::sort(r.begin(), r.end(), [](cplx x, cplx y) { return std::abs(x.imag()) < std::abs(y.imag()); });
    auto polish = [&](double x) {
        for (int it = 0; it < 3; ++it) {
            const double F = ((x * x - 2.0 * (1.0 + mu)) * x - 4.0 * a) * x - 4.0 * g;
            const double dF = (4.0 * x * x - 4.0 * (1.0 + mu)) * x - 4.0 * a;
            if (dF == 0.0) break;
            const double s = F / dF;
            if (std::abs(s) > 1e-6) break;
            x -= s;
        }
        return x;
    };
    if (G.regime == OrbitRegime::DoubleWell) {
        std::array<double, 4> x{r[0].real(), r[1].real(), r[2].real(), r[3].real()};
        std::sort(x.begin(), x.end());
        for (auto& v : x) v = polish(v);
        G.q1 = x[0];
        G.q2 = x[1];
        G.q3 = x[2];
        G.q4 = x[3];
    } else {
        // Just below the shallow minimum the complex pair is a near-double root
        // whose imaginary part is only sqrt(eps) accurate; when the |Im| order
        // is not decisive the pair is the two mutually closest roots.
        if (std::abs(r[2].imag()) < 1e-6 * (1.0 + std::abs(r[2]))) {
            int bi = 0, bj = 1;
            for (int i = 0; i < 4; ++i)
                for (int j = i + 1; j < 4; ++j)
                    if (std::abs(r[i] - r[j]) < std::abs(r[bi] - r[bj])) bi = i, bj = j;
            std::array<cplx, 4> re;
            int k = 0;
            for (int i = 0; i < 4; ++i)
                if (i != bi && i != bj) re[k++] = r[i];
            const cplx mid = 0.5 * (r[bi] + r[bj]);
            re[2] = cplx(mid.real(), std::max(std::abs(r[bi].imag()), 1e-300));
            re[3] = std::conj(re[2]);
            r.assign(re.begin(), re.end());
        }
        std::array<double, 2> x{r[0].real(), r[1].real()};
        std::sort(x.begin(), x.end());
        G.q3 = polish(x[0]);
        G.q4 = polish(x[1]);
        G.qz = r[2].imag() > 0 ? r[2] : r[3];
        G.qz = cplx(G.qz.real(), std::abs(G.qz.imag()));
    }
    // For mu > 1 a turning point inside Q^2 + P^2 = mu - 1 lies on the minus
    // branch of P^2: the orbit folds at a real branch point and the
    // single-branch loop integrals no longer describe it.
    if (mu > 1.0) {
        double inner = std::min(std::abs(G.q3), std::abs(G.q4));
        if (G.regime == OrbitRegime::DoubleWell) inner = std::min({inner, std::abs(G.q1), std::abs(G.q2)});
        if (inner * inner < mu - 1.0)
            throw Error(ErrorKind::DomainError, "turning point inside Q^2 + P^2 = mu - 1: the orbit folds at a branch point");
    }
    return G;
}

// Period of the deep (right) well, the loop integral of dQ / (P B^{1/2}).
double deep_period(const Geometry& G) {
    auto h = [&](double Q, double, double) {
        const double sB = std::sqrt(G.B(Q));
        return std::sqrt(G.dplus(Q, sB)) / (sB * std::sqrt(G.pair12(Q)));
    };
    return 2.0 * num::integrate_arc(h, G.q3, G.q4, G.rel);
}

double shallow_period(const Geometry& G) {
    auto h = [&](double Q, double, double) {
        const double sB = std::sqrt(G.B(Q));
        return std::sqrt(G.dplus(Q, sB)) / (sB * std::sqrt((G.q3 - Q) * (G.q4 - Q)));
    };
    return 2.0 * num::integrate_arc(h, G.q1, G.q2, G.rel);
}

// Time averages of Q: the period integrands weighted by Q.
double deep_mean_q(const Geometry& G, double tau1) {
    auto h = [&](double Q, double, double) {
        const double sB = std::sqrt(G.B(Q));
        return Q * std::sqrt(G.dplus(Q, sB)) / (sB * std::sqrt(G.pair12(Q)));
    };
    return 2.0 * num::integrate_arc(h, G.q3, G.q4, G.rel) / tau1;
}

double shallow_mean_q(const Geometry& G, double tau1) {
    auto h = [&](double Q, double, double) {
        const double sB = std::sqrt(G.B(Q));
        return Q * std::sqrt(G.dplus(Q, sB)) / (sB * std::sqrt((G.q3 - Q) * (G.q4 - Q)));
    };
    return 2.0 * num::integrate_arc(h, G.q1, G.q2, G.rel) / tau1;
}

double deep_action(const Geometry& G) {
    auto h = [&](double Q, double da, double db) {
        const double sB = std::sqrt(G.B(Q));
        return da * db * std::sqrt(G.pair12(Q)) / std::sqrt(G.dplus(Q, sB));
    };
    return num::integrate_arc(h, G.q3, G.q4, G.rel) / pi;
}

double shallow_action(const Geometry& G) {
    auto h = [&](double Q, double da, double db) {
        const double sB = std::sqrt(G.B(Q));
        return da * db * std::sqrt((G.q3 - Q) * (G.q4 - Q)) / std::sqrt(G.dplus(Q, sB));
    };
    return num::integrate_arc(h, G.q1, G.q2, G.rel) / pi;
}

// Imaginary travel time from q4 to +inf through the forbidden region.
double right_forbidden(const Geometry& G) {
    auto h = [&](double Q, double) {
        const double sB = std::sqrt(G.B(Q));
        return std::sqrt(G.dplus(Q, sB)) / (sB * std::sqrt((Q - G.q3) * G.pair12(Q)));
    };
    return num::integrate_right_tail(h, G.q4, G.rel);
}

// Imaginary travel time from -inf to q1 (double-well regime).
double left_forbidden(const Geometry& G) {
    auto h = [&](double Q, double) {
        const double sB = std::sqrt(G.B(Q));
        return std::sqrt(G.dplus(Q, sB)) / (sB * std::sqrt((G.q2 - Q) * (G.q3 - Q) * (G.q4 - Q)));
    };
    return num::integrate_left_tail(h, G.q1, G.rel);
}

// Segment of the real axis where B < 0, on the plus sheet (b = +i sqrt(-B)) or
// the minus sheet (b = -i sqrt(-B)); returns the integral of dQ / (P b).
cplx inner_segment(const Geometry& G, Sheet sheet) {
    const double s = sheet == Sheet::Plus ? 1.0 : -1.0;
    auto h = [&](double Q, double da, double db) -> cplx {
        const cplx b = s * I1 * 2.0 * std::sqrt(da * db);
        const cplx p2 = -Q * Q - 1.0 + G.p.mu + b;
        const cplx P = I1 * std::sqrt(-p2);
        // dQ / sqrt((Q - Q-)(Q+ - Q)) = dtheta and b = 2 i s sqrt(...)
        return 1.0 / (P * s * I1 * 2.0);
    };
    return num::integrate_arc(h, G.qm, G.qp, G.rel);
}

// Forbidden-region integral of 1 / (|P| B^{1/2}) from a turning point ql to the
// branch point Q- (both ends singular), with B = 4 (Q+ - Q)(Q- - Q).
double turning_to_branch(const Geometry& G, double ql,
                         const std::function<double(double)>& rest) {
    auto h = [&](double Q, double, double db) {
        const double qplus_off = db + 2.0 * G.d;
        const double sB = 2.0 * std::sqrt(qplus_off * db);
        return std::sqrt(G.dplus(Q, sB)) / (2.0 * std::sqrt(qplus_off) * std::sqrt(rest(Q)));
    };
    return num::integrate_arc(h, ql, G.qm, G.rel);
}

// Same from the branch point Q+ to a turning point qr.
double branch_to_turning(const Geometry& G, double qr,
                         const std::function<double(double)>& rest) {
    auto h = [&](double Q, double da, double) {
        const double qminus_off = da + 2.0 * G.d;
        const double sB = 2.0 * std::sqrt(qminus_off * da);
        return std::sqrt(G.dplus(Q, sB)) / (2.0 * std::sqrt(qminus_off) * std::sqrt(rest(Q)));
    };
    return num::integrate_arc(h, G.qp, qr, G.rel);
}

// Travel time from the deep well (q3) to the shallow well (q2).
cplx half_trip(const Geometry& G) {
    if (!G.below_gc) {
        auto h = [&](double Q, double, double) {
            const double sB = std::sqrt(G.B(Q));
            return std::sqrt(G.dplus(Q, sB)) / (sB * std::sqrt((Q - G.q1) * (G.q4 - Q)));
        };
        return I1 * num::integrate_arc(h, G.q2, G.q3, G.rel);
    }
    const double left = turning_to_branch(G, G.q2, [&](double Q) {
        return (Q - G.q1) * (G.q3 - Q) * (G.q4 - Q);
    });
    const double right = branch_to_turning(G, G.q3, [&](double Q) {
        return (Q - G.q1) * (Q - G.q2) * (G.q4 - Q);
    });
    return I1 * (left + right) - inner_segment(G, Sheet::Plus);
}

// Single-well regime: travel time from q3 to -inf on the plus sheet.
cplx single_well_tau_ss(const Geometry& G) {
    if (!G.below_gc) {
        auto h = [&](double Q, double) {
            const double sB = std::sqrt(G.B(Q));
            return std::sqrt(G.dplus(Q, sB)) / (sB * std::sqrt((G.q4 - Q) * G.pair12(Q)));
        };
        return I1 * num::integrate_left_tail(h, G.q3, G.rel);
    }
    auto tail = [&](double Q, double off) {
        const double qplus_off = off + 2.0 * G.d;
        const double sB = 2.0 * std::sqrt(qplus_off * off);
        const double F = (G.q3 - Q) * (G.q4 - Q) * G.pair12(Q);
        return std::sqrt(G.dplus(Q, sB)) / (2.0 * std::sqrt(qplus_off) * std::sqrt(F));
    };
    const double left = num::integrate_left_tail(tail, G.qm, G.rel);
    const double right = branch_to_turning(G, G.q3, [&](double Q) {
        return (G.q4 - Q) * G.pair12(Q);
    });
    return I1 * (left + right) - inner_segment(G, Sheet::Plus);
}

// Full-line integral of dQ / (P_- B_-^{1/2}) on the minus sheet.
cplx minus_sheet_period(const Geometry& G) {
    if (!G.below_gc) {
        auto h = [&](double Q) {
            const double sB = std::sqrt(G.B(Q));
            return 1.0 / (std::sqrt(G.dplus(Q, sB)) * sB);
        };
        return I1 * (num::integrate_ray(h, G.qc, 1, G.rel) + num::integrate_ray(h, G.qc, -1, G.rel));
    }
    auto left = [&](double Q, double off) {
        const double qplus_off = off + 2.0 * G.d;
        const double sB = 2.0 * std::sqrt(qplus_off * off);
        return 1.0 / (std::sqrt(G.dplus(Q, sB)) * 2.0 * std::sqrt(qplus_off));
    };
    auto right = [&](double Q, double off) {
        const double qminus_off = off + 2.0 * G.d;
        const double sB = 2.0 * std::sqrt(qminus_off * off);
        return 1.0 / (std::sqrt(G.dplus(Q, sB)) * 2.0 * std::sqrt(qminus_off));
    };
    const double outer = num::integrate_left_tail(left, G.qm, G.rel) +
                         num::integrate_right_tail(right, G.qp, G.rel);
    return I1 * outer + inner_segment(G, Sheet::Minus);
}

cplx reduce(cplx z, double period) { return {reduce_mod(z.real(), period), z.imag()}; }

OrbitData compute(const Frame& f, double g, WellId well, const Tolerances& tol) {
    const Geometry G = make_geometry(f, g, tol);
    OrbitData out;
    out.g = g;
    out.well = well;
    out.regime = G.regime;
    out.branch_state = G.below_gc ? BranchState::RealPair : BranchState::ComplexPair;

    const double tau1 = deep_period(G);
    out.tau1 = tau1;
    out.omega = 2.0 * pi / tau1;

    const WellId fw = to_frame(well, f);
    if (fw.sigma > 0 || f.geo.regime == Regime::SingleWell) {
        if (fw.sigma < 0 && f.geo.regime == Regime::SingleWell)
            throw Error(ErrorKind::OutsideWellRange, "requested well does not exist");
        out.action = deep_action(G);
    } else {
        if (G.regime != OrbitRegime::DoubleWell)
            throw Error(ErrorKind::OutsideWellRange, "g is below the shallow-well minimum");
        out.action = shallow_action(G);
    }

    const double jr = right_forbidden(G);
    const cplx tau_star = 0.5 * tau1 + I1 * jr;
    out.tau_minus = minus_sheet_period(G);
    if (G.regime == OrbitRegime::DoubleWell) {
        const cplx h = half_trip(G);
        const double jl = left_forbidden(G);
        out.half_trip = h;
        out.tau2 = 2.0 * h;
        out.tau_star = tau_star;
        out.tau_star_star = h + 0.5 * tau1 + I1 * jl;
    } else {
        const cplx tss = single_well_tau_ss(G);
        out.tau_star = tau_star;
        out.tau_star_star = tss;
        out.tau2 = tau_star + out.tau_minus + tss;
        out.half_trip = 0.5 * out.tau2;
    }
    out.tau2 = reduce(out.tau2, tau1);
    out.tau_star = reduce(out.tau_star, tau1);
    out.tau_star_star = reduce(out.tau_star_star, tau1);
    out.half_trip = reduce(out.half_trip, tau1);
    out.tau_minus = reduce(out.tau_minus, tau1);

    // Frame wells: deep on the right; the mirror swaps them back.
    const int deep_idx = f.mirror > 0 ? 1 : 0;
    out.mean_q[deep_idx] = f.mirror * deep_mean_q(G, tau1);
    if (G.regime == OrbitRegime::DoubleWell && f.geo.regime == Regime::DoubleWell)
        out.mean_q[1 - deep_idx] = f.mirror * shallow_mean_q(G, tau1);
    return out;
}

}  // namespace

double reduce_mod(double x, double period) {
    double r = std::fmod(x, period);
    if (r < 0) r += period;
    // Values within rounding of a full period fold back to zero.
    if (period - r < 1e-9 * period) r = 0.0;
    if (r < 1e-9 * period) r = 0.0;
    return r;
}

TurningPoints turning_points(const ModelParams& p, double g, double root_tol) {
    (void)root_tol;
    TurningPoints tp;
    auto r = num::poly_roots({-4.0 * g, -4.0 * p.alpha_d, -2.0 * (1.0 + p.mu), 0.0, 1.0});
    std::vector<cplx> re, cx;
    const double scale = 1.0 + std::abs(p.mu);
    for (auto z : r) (std::abs(z.imag()) < 1e-7 * scale ? re : cx).push_back(z);
    std::sort(re.begin(), re.end(), [](cplx a, cplx b) { return a.real() < b.real(); });
    tp.n_real = int(re.size());
    if (re.size() == 4) {
        for (int i = 0; i < 4; ++i) tp.q[i] = re[i].real();
    } else if (re.size() == 2) {
        cplx z = cx[0].imag() > 0 ? cx[0] : cx[1];
        tp.q = {z, std::conj(z), re[0].real(), re[1].real()};
    } else {
        std::sort(r.begin(), r.end(), [](cplx a, cplx b) { return a.real() < b.real(); });
        for (int i = 0; i < 4; ++i) tp.q[i] = r[i];
    }
    const auto cq = critical_quasienergy(p);
    const double disc = cq.g_c - g;
    if (disc > 0) {
        tp.q_plus = cq.q_c + std::sqrt(disc);
        tp.q_minus = cq.q_c - std::sqrt(disc);
        tp.branch_state = BranchState::RealPair;
    } else if (disc < 0) {
        tp.q_plus = cplx(cq.q_c, std::sqrt(-disc));
        tp.q_minus = cplx(cq.q_c, -std::sqrt(-disc));
        tp.branch_state = BranchState::ComplexPair;
    } else {
        tp.q_plus = tp.q_minus = cq.q_c;
        tp.branch_state = BranchState::Degenerate;
    }
    return tp;
}

cplx momentum_branch(const ModelParams& p, double g, cplx Q, Sheet sheet) {
    const double sgn = sheet == Sheet::Plus ? 1.0 : -1.0;
    const double base = (1.0 - p.mu) * (1.0 - p.mu);
    if (Q.imag() == 0.0) {
        const double x = Q.real();
        const double B = 4.0 * x * x + 4.0 * p.alpha_d * x + 4.0 * g + base;
        if (B >= 0.0) {
            const double P2 = -x * x - 1.0 + p.mu + sgn * std::sqrt(B);
            return P2 >= 0.0 ? cplx(std::sqrt(P2), 0.0) : cplx(0.0, -std::sqrt(-P2));
        }
        const cplx P2 = -x * x - 1.0 + p.mu + sgn * I1 * std::sqrt(-B);
        return -I1 * std::sqrt(-P2);
    }
    const cplx B = 4.0 * Q * Q + 4.0 * p.alpha_d * Q + 4.0 * g + base;
    const cplx P2 = -Q * Q - 1.0 + p.mu + sgn * std::sqrt(B);
    return -I1 * std::sqrt(-P2);
}

std::array<double, 2> orbit_range(const ModelParams& p, WellId well) {
    const auto geo = stationary_points(p);
    if (!geo.has_well(well)) throw Error(ErrorKind::OutsideWellRange, "requested well does not exist");
    const double upper = geo.regime == Regime::DoubleWell ? geo.g_s
                                                          : std::numeric_limits<double>::infinity();
    return {geo.gmin(well), upper};
}

OrbitData orbit_data(const ModelParams& p, double g, WellId well, const Tolerances& tol) {
    const Frame f = make_frame(p, tol.root);
    return compute(f, g, well, tol);
}

OrbitData orbit_data(const ModelParams& p, double g, const Tolerances& tol) {
    return orbit_data(p, g, deep_well(p.alpha_d), tol);
}

ActionPeriod action_and_period(const ModelParams& p, double g, WellId well, const Tolerances& tol) {
    const Frame f = make_frame(p, tol.root);
    Tolerances t = tol;
    t.critical_cutoff = 0.0;  // the intrawell loop does not see g_c
    const Geometry G = make_geometry(f, g, t);
    const WellId fw = to_frame(well, f);
    if (fw.sigma < 0 && f.geo.regime == Regime::DoubleWell) {
        if (G.regime != OrbitRegime::DoubleWell)
            throw Error(ErrorKind::OutsideWellRange, "g is below the shallow-well minimum");
        const double tau1 = shallow_period(G);
        return {shallow_action(G), tau1, 2.0 * pi / tau1};
    }
    if (fw.sigma < 0) throw Error(ErrorKind::OutsideWellRange, "requested well does not exist");
    const double tau1 = deep_period(G);
    return {deep_action(G), tau1, 2.0 * pi / tau1};
}

double action_derivative(const ModelParams& p, double g, WellId well, double step, const Tolerances& tol) {
    const double ip = action_and_period(p, g + step, well, tol).action;
    const double im = action_and_period(p, g - step, well, tol).action;
    return (ip - im) / (2.0 * step);
}

cplx complex_period(const ModelParams& p, double g, const Tolerances& tol) {
    return orbit_data(p, g, tol).tau2;
}

PolePositions pole_positions(const ModelParams& p, double g, const Tolerances& tol) {
    const auto od = orbit_data(p, g, tol);
    return {od.tau_star, od.tau_star_star};
}

// ---------------------------------------------------------------------------
// Complex-time flow

namespace {

namespace ode = boost::numeric::odeint;
using State2 = std::array<cplx, 2>;
using State3 = std::array<cplx, 3>;

struct Blowup {};

template <class State, class Rhs>
void run_segment(State& x, Rhs rhs, const Tolerances& tol) {
    auto stepper = ode::make_controlled(tol.ode_abs, tol.ode_rel, ode::runge_kutta_fehlberg78<State>());
    std::size_t steps = 0;
    auto obs = [&](const State& s, double) {
        if (!(std::abs(s[0]) < tol.blowup_bound) || !(std::abs(s[1]) < tol.blowup_bound)) throw Blowup{};
        if (++steps > 2000000) throw Blowup{};
    };
    try {
        ode::integrate_adaptive(stepper, rhs, x, 0.0, 1.0, 1e-3, obs);
    } catch (const Blowup&) {
        throw Error(ErrorKind::PoleProximity, "trajectory blew up: path passes near a pole");
    } catch (const ode::step_adjustment_error&) {
        throw Error(ErrorKind::PoleProximity, "step size collapsed near a pole");
    }
}

TrajectorySample flow(const ModelParams& p, cplx Q0, cplx P0, cplx t0, cplx t1, const Tolerances& tol) {
    const cplx dt = t1 - t0;
    State2 x{Q0, P0};
    auto rhs = [&](const State2& z, State2& dz, double) {
        const cplx Q = z[0], P = z[1];
        const cplx r = Q * Q + P * P - p.mu;
        dz[0] = dt * P * (r + 1.0);
        dz[1] = dt * (-Q * (r - 1.0) + p.alpha_d);
    };
    run_segment(x, rhs, tol);
    return {t1, x[0], x[1]};
}

struct Anchor {
    OrbitData od;
    cplx Q0;
};

Anchor anchor(const ModelParams& p, double g, const Tolerances& tol) {
    const Frame f = make_frame(p, tol.root);
    Anchor a{compute(f, g, deep_well(p.alpha_d), tol), 0.0};
    const Geometry G = make_geometry(f, g, tol);
    a.Q0 = double(f.mirror) * G.q3;
    return a;
}

double segment_distance(cplx a, cplx b, cplx z) {
    const cplx ab = b - a;
    const double len2 = std::norm(ab);
    double s = len2 > 0 ? ((z - a) * std::conj(ab)).real() / len2 : 0.0;
    s = std::clamp(s, 0.0, 1.0);
    return std::abs(a + s * ab - z);
}

void check_path(const OrbitData& od, const std::vector<cplx>& path, double cutoff) {
    for (int k = -4; k <= 4; ++k)
        for (int l = -4; l <= 4; ++l)
            for (cplx pole : {od.tau_star, od.tau_star_star}) {
                const cplx z = pole + double(k) * od.tau1 + double(l) * od.tau2;
                for (std::size_t i = 0; i + 1 < path.size(); ++i)
                    if (segment_distance(path[i], path[i + 1], z) < cutoff)
                        throw Error(ErrorKind::PoleProximity, "integration path passes within the pole cutoff");
            }
}

// Path 0 -> tau1/4 -> tau1/4 + i Im(tau) -> tau; every pole has real part 0 or
// tau1/2 modulo tau1, so the vertical leg keeps a distance tau1/4 from them.
std::vector<cplx> approach_path(const OrbitData& od, cplx tau) {
    const double q = 0.25 * od.tau1;
    return {0.0, q, cplx(q, tau.imag()), tau};
}

}  // namespace

TrajectorySample propagate(const ModelParams& p, cplx Q0, cplx P0, cplx t0, cplx t1, const Tolerances& tol) {
    return flow(p, Q0, P0, t0, t1, tol);
}

std::vector<TrajectorySample> integrate_orbit(const ModelParams& p, double g, cplx tau0, int n_samples,
                                              const Tolerances& tol) {
    if (n_samples < 2) throw Error(ErrorKind::DomainError, "n_samples must be at least 2");
    const Anchor a = anchor(p, g, tol);
    auto path = approach_path(a.od, tau0);
    auto full = path;
    full.push_back(tau0 + a.od.tau1);
    check_path(a.od, full, tol.pole_cutoff);

    TrajectorySample s{0.0, a.Q0, 0.0};
    for (std::size_t i = 0; i + 1 < path.size(); ++i)
        if (path[i] != path[i + 1]) s = flow(p, s.Q, s.P, path[i], path[i + 1], tol);
    std::vector<TrajectorySample> out;
    out.push_back({tau0, s.Q, s.P});
    const double h = a.od.tau1 / double(n_samples - 1);
    for (int k = 1; k < n_samples; ++k) {
        const cplx t0 = tau0 + double(k - 1) * h, t1 = tau0 + double(k) * h;
        s = flow(p, s.Q, s.P, t0, t1, tol);
        out.push_back({t1, s.Q, s.P});
    }
    return out;
}

double action_of_imag_time(const ModelParams& p, double g, cplx tau, const Tolerances& tol) {
    const Anchor a = anchor(p, g, tol);
    auto path = approach_path(a.od, tau);
    auto full = path;
    full.push_back(tau + a.od.tau1);
    check_path(a.od, full, tol.pole_cutoff);

    TrajectorySample s{0.0, a.Q0, 0.0};
    for (std::size_t i = 0; i + 1 < path.size(); ++i)
        if (path[i] != path[i + 1]) s = flow(p, s.Q, s.P, path[i], path[i + 1], tol);

    const double dt = a.od.tau1;
    State3 x{s.Q, s.P, 0.0};
    auto rhs = [&](const State3& z, State3& dz, double) {
        const cplx Q = z[0], P = z[1];
        const cplx r = Q * Q + P * P - p.mu;
        dz[0] = dt * P * (r + 1.0);
        dz[1] = dt * (-Q * (r - 1.0) + p.alpha_d);
        dz[2] = P * dz[0];
    };
    run_segment(x, rhs, tol);
    return x[2].real() / (2.0 * pi);
}

}  // namespace flipline
