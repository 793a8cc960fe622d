#include "flipline/cli/run.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "flipline/cli/svg.hpp"
#include "flipline/complex_orbits.hpp"
#include "flipline/errors.hpp"
#include "flipline/kinetics.hpp"
#include "flipline/landscape.hpp"
#include "flipline/oracle.hpp"
#include "flipline/semiclassics.hpp"

namespace flipline::cli {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string short_num(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", x);
    return buf;
}

double& param_ref(ModelParams& p, const std::string& name) {
    if (name == "mu") return p.mu;
    if (name == "alpha_d") return p.alpha_d;
    if (name == "lambda") return p.lambda;
    return p.kappa;
}

// Evaluates f over [0, n) on a worker pool. Results keep their index, so the
// output order never depends on scheduling; the lowest-index failure wins.
template <class T>
std::vector<T> parallel_map(std::size_t n, const std::function<T(std::size_t)>& f) {
    std::vector<T> out(n);
    std::vector<std::exception_ptr> errs(n);
    std::atomic<std::size_t> next{0};
    auto work = [&] {
        for (std::size_t i; (i = next++) < n;) {
            try {
                out[i] = f(i);
            } catch (...) {
                errs[i] = std::current_exception();
            }
        }
    };
    const unsigned nw = std::max(1u, std::min<unsigned>(worker_count(), unsigned(n)));
    std::vector<std::thread> pool;
    for (unsigned k = 1; k < nw; ++k) pool.emplace_back(work);
    work();
    for (auto& t : pool) t.join();
    for (auto& e : errs)
        if (e) std::rethrow_exception(e);
    return out;
}

std::vector<double> g_grid(const RunConfig& c, double lo, double hi) {
    std::vector<double> g(c.grid.count);
    if (c.grid.g_lo || c.grid.g_hi) {
        const double a = c.grid.g_lo.value_or(lo), b = c.grid.g_hi.value_or(hi);
        if (!(a < b)) throw Error(ErrorKind::DomainError, "empty g grid");
        for (int i = 0; i < c.grid.count; ++i) g[i] = a + (b - a) * i / double(c.grid.count - 1);
    } else {
        // Cell centres keep the open interval open.
        for (int i = 0; i < c.grid.count; ++i) g[i] = lo + (hi - lo) * (i + 0.5) / double(c.grid.count);
    }
    return g;
}

std::array<double, 2> deep_orbit_range(const ModelParams& p) {
    auto r = orbit_range(p, deep_well(p.alpha_d));
    if (!std::isfinite(r[1])) r[1] = r[0] + 1.0;  // single well: one unit of g above the bottom
    return r;
}

ResultTable landscape_table(const RunConfig& c) {
    const auto& p = c.params;
    const auto geo = stationary_points(p, c.tol.root);
    ResultTable t;
    t.columns = {"mu", "alpha_d", "lambda", "kappa", "n_wells", "q_min_left", "q_min_right", "g_min_left",
                 "g_min_right", "q_s", "g_s", "q_c", "g_c", "alpha_B", "double_well_condition"};
    t.diagnostic = {5, 6, 7, 8, 9, 10};
    t.rows.push_back({p.mu, p.alpha_d, p.lambda, p.kappa, geo.regime == Regime::DoubleWell ? 2.0 : 1.0,
                      geo.q_min[0], geo.q_min[1], geo.g_min[0], geo.g_min[1], geo.q_s, geo.g_s, geo.q_c, geo.g_c,
                      geo.alpha_B, double_well_condition(p, geo) ? 1.0 : 0.0});
    return t;
}

ResultTable orbits_table(const RunConfig& c) {
    const auto& p = c.params;
    const auto r = deep_orbit_range(p);
    const auto grid = g_grid(c, r[0], r[1]);
    using Row = std::vector<double>;
    // Points within the critical cutoff of g_c have no orbit data; they come
    // back empty and are dropped.
    auto rows = parallel_map<Row>(grid.size(), [&](std::size_t i) -> Row {
        const double g = grid[i];
        try {
            const auto od = orbit_data(p, g, c.tol);
            const double rp = r_prime(p, g, c.tol);
            return {g, od.regime == OrbitRegime::DoubleWell ? 2.0 : 1.0, od.tau1, od.omega, od.action,
                    od.tau2.real(), od.tau2.imag(), od.tau_star.real(), od.tau_star.imag(),
                    od.tau_star_star.real(), od.tau_star_star.imag(), od.tau_minus.imag(), rp};
        } catch (const Error& e) {
            if (e.kind() == ErrorKind::CriticalPoint) return {};
            throw;
        }
    });
    ResultTable t;
    t.columns = {"g", "orbit_wells", "tau1", "omega", "action", "re_tau2", "im_tau2", "re_tau_star",
                 "im_tau_star", "re_tau_star_star", "im_tau_star_star", "im_tau_minus", "r_prime"};
    for (auto& row : rows)
        if (!row.empty()) t.rows.push_back(std::move(row));
    return t;
}

ResultTable rates_table(const RunConfig& c) {
    const auto& p = c.params;
    const auto geo = stationary_points(p, c.tol.root);
    ResultTable t;
    t.columns = {"well", "n_from", "n_to", "g_from", "g_to", "omega_from", "rate"};
    for (WellId w : {WellId::left(), WellId::right()}) {
        if (!geo.has_well(w)) continue;
        QuantizeOptions qo;
        qo.tol = c.tol;
        const auto ladder = quantize_well(p, w, qo);
        RateOptions ro;
        ro.m_max = c.m_max;
        ro.point = c.rate_point;
        ro.tol = c.tol;
        const auto rates = transition_rates(p, ladder, ro);
        for (const auto& [key, rate] : rates.entries) {
            const auto& a = ladder.levels[key.first];
            const auto& b = ladder.levels[key.second];
            t.rows.push_back({double(w.sigma), double(key.first), double(key.second), a.g, b.g, a.omega, rate});
        }
    }
    return t;
}

ResultTable activation_table(const RunConfig& c) {
    const auto& p = c.params;
    ActivationOptions ao;
    ao.tol = c.tol;
    const auto r = switching_rate_estimate(p, ao);
    double chi = kNaN;
    if (std::abs(p.mu) >= 0.05) chi = log_susceptibility(p.mu);
    double rp[2];
    for (WellId w : {WellId::left(), WellId::right()})
        rp[well_index(w)] = is_localization_point(p, w) ? kNaN : r_prime_at_minimum(p, w);
    ResultTable t;
    t.columns = {"mu", "alpha_d", "lambda", "kappa", "R_A_left", "R_A_right", "delta_R_A",
                 "population_ratio_exponent", "switching_exponent_left", "switching_exponent_right",
                 "switching_rate_left", "switching_rate_right", "prefactor_estimate", "log_susceptibility",
                 "r_prime_min_left", "r_prime_min_right"};
    t.diagnostic = {13, 14, 15};
    t.rows.push_back({p.mu, p.alpha_d, p.lambda, p.kappa, r.R_A[0], r.R_A[1], r.delta_R_A,
                      r.population_ratio_exponent, r.switching_exponent[0], r.switching_exponent[1],
                      r.switching_rate[0], r.switching_rate[1], r.prefactor_estimate, chi, rp[0], rp[1]});
    return t;
}

ResultTable sweep_table(const RunConfig& c) {
    const auto vals = c.sweep->values();
    using Row = std::vector<double>;
    auto rows = parallel_map<Row>(vals.size(), [&](std::size_t i) -> Row {
        ModelParams p = c.params;
        param_ref(p, c.sweep->parameter) = vals[i];
        validate(p);
        const auto geo = stationary_points(p, c.tol.root);
        double ra[2] = {kNaN, kNaN};
        const bool dw = double_well_condition(p, geo);
        if (dw) {
            ActivationOptions ao;
            ao.tol = c.tol;
            ra[0] = activation_energy(p, WellId::left(), ao);
            ra[1] = activation_energy(p, WellId::right(), ao);
        }
        const int deep = well_index(deep_well(p.alpha_d));
        return {vals[i], geo.regime == Regime::DoubleWell ? 2.0 : 1.0, dw ? 1.0 : 0.0, geo.g_min[0], geo.g_min[1],
                geo.g_s, geo.g_c, ra[0], ra[1], ra[deep] - ra[1 - deep]};
    });
    std::sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) { return a[0] < b[0]; });
    ResultTable t;
    t.columns = {c.sweep->parameter, "n_wells", "double_well_condition", "g_min_left", "g_min_right", "g_s",
                 "g_c", "R_A_left", "R_A_right", "delta_R_A"};
    t.diagnostic = {3, 4, 5, 7, 8, 9};
    t.rows = std::move(rows);
    return t;
}

ResultTable oracle_table(const RunConfig& c) {
    OracleOptions oo;
    oo.N = c.oracle.N;
    oo.max_N = c.oracle.max_N;
    oo.convention = c.oracle.convention;
    const auto s = build_and_diagonalize(c.params, oo);
    const auto pauli = pauli_steady_state(s, c.params.kappa);
    ResultTable t;
    t.columns = {"index", "energy", "q_expect", "well_label", "population", "slowest_rate", "resonant_window",
                 "dimension"};
    for (std::size_t i = 0; i < s.eigenvalues.size(); ++i)
        t.rows.push_back({double(i), s.eigenvalues[i], s.q_expect[i], double(int(s.well_labels[i])), pauli.rho[i],
                          pauli.slowest_rate, pauli.resonant_window ? 1.0 : 0.0, double(s.dimension)});
    return t;
}

struct FigureOutput {
    ResultTable table;
    Plot plot;
};

FigureOutput fig5(const RunConfig& c) {
    const auto& p = c.params;
    const auto geo = double_well_geometry(p, c.tol.root);
    const WellId deep = deep_well(p.alpha_d), shallow = shallow_well(p.alpha_d);
    const auto grid = g_grid(c, geo.gmin(deep), geo.g_s);
    using Row = std::vector<double>;
    auto rows = parallel_map<Row>(grid.size(), [&](std::size_t i) -> Row {
        try {
            const auto od = orbit_data(p, grid[i], c.tol);
            return {grid[i], od.tau2.imag(), r_prime(p, grid[i], c.tol)};
        } catch (const Error& e) {
            if (e.kind() == ErrorKind::CriticalPoint) return {};
            throw;
        }
    });
    FigureOutput f;
    f.table.columns = {"g", "im_tau2", "r_prime"};
    Series s1{"Im τ2", {}, {}}, s2{"R′", {}, {}};
    s2.dashed = true;
    for (auto& r : rows) {
        if (r.empty()) continue;
        s1.x.push_back(r[0]);
        s1.y.push_back(r[1]);
        s2.x.push_back(r[0]);
        s2.y.push_back(r[2]);
        f.table.rows.push_back(std::move(r));
    }
    f.plot.title = "Imaginary period and R′, μ = " + short_num(p.mu) + ", α_d = " + short_num(p.alpha_d);
    f.plot.xlabel = "g";
    f.plot.ylabel = "Im τ2, R′";
    f.plot.series = {s1, s2};
    f.plot.markers = {{geo.gmin(deep), "g_min deep"}, {geo.gmin(shallow), "g_min shallow"}, {geo.g_c, "g_c"}};
    return f;
}

FigureOutput fig6(const RunConfig& c) {
    struct Point {
        double mu, alpha, deep, shallow;
    };
    std::vector<std::pair<double, double>> pts;
    for (double mu : c.figure_mu) {
        const double ab = bifurcation_amplitude(mu);
        for (int k = 0; k < c.grid.count; ++k) pts.push_back({mu, ab * k / double(c.grid.count)});
    }
    auto vals = parallel_map<Point>(pts.size(), [&](std::size_t i) -> Point {
        ModelParams p = c.params;
        p.mu = pts[i].first;
        p.alpha_d = pts[i].second;
        ActivationOptions ao;
        ao.tol = c.tol;
        const double d = activation_energy(p, deep_well(p.alpha_d), ao);
        const double s = activation_energy(p, shallow_well(p.alpha_d), ao);
        return {p.mu, p.alpha_d, d, s};
    });
    FigureOutput f;
    f.table.columns = {"mu", "alpha_d", "R_A_deep", "R_A_shallow"};
    for (double mu : c.figure_mu) {
        Series d{"deep, μ = " + short_num(mu), {}, {}};
        Series s{"shallow, μ = " + short_num(mu), {}, {}};
        s.dashed = true;
        for (const auto& v : vals) {
            if (v.mu != mu) continue;
            d.x.push_back(v.alpha);
            d.y.push_back(v.deep);
            s.x.push_back(v.alpha);
            s.y.push_back(v.shallow);
            f.table.rows.push_back({v.mu, v.alpha, v.deep, v.shallow});
        }
        f.plot.series.push_back(d);
        f.plot.series.push_back(s);
        // Where the shallow minimum meets g_c.
        if (mu > 0.0 && mu < bifurcation_amplitude(mu))
            f.plot.markers.push_back({mu, "μ = " + short_num(mu), true});
    }
    f.plot.title = "Activation energies of the two wells";
    f.plot.xlabel = "α_d";
    f.plot.ylabel = "R_A";
    return f;
}

FigureOutput fig7(const RunConfig& c) {
    // Closed form away from |mu| < 0.05, plus finite-difference checks.
    const double lo = -0.95, hi = 2.0;
    std::vector<double> mus;
    for (int i = 0; i < c.grid.count; ++i) {
        const double mu = lo + (hi - lo) * i / double(c.grid.count - 1);
        if (std::abs(mu) >= 0.05) mus.push_back(mu);
    }
    const std::vector<double> fd_mu = {0.25, 0.5, 0.75, 1.0};
    const double da = 1e-3;
    auto fd = parallel_map<double>(fd_mu.size(), [&](std::size_t i) {
        ModelParams p = c.params;
        p.mu = fd_mu[i];
        ActivationOptions ao;
        ao.tol = c.tol;
        p.alpha_d = 0.0;
        const double r0 = activation_energy(p, WellId::right(), ao);
        p.alpha_d = da;
        return (activation_energy(p, deep_well(da), ao) - r0) / da;
    });
    FigureOutput f;
    f.table.columns = {"mu", "log_susceptibility", "finite_difference"};
    f.table.diagnostic = {2};
    Series neg{"closed form", {}, {}}, pos{"closed form, μ > 0", {}, {}}, pts{"finite difference", {}, {}};
    pts.markers = true;
    std::vector<std::vector<double>> rows;
    for (double mu : mus) {
        const double v = log_susceptibility(mu);
        (mu < 0 ? neg : pos).x.push_back(mu);
        (mu < 0 ? neg : pos).y.push_back(v);
        rows.push_back({mu, v, kNaN});
    }
    for (std::size_t i = 0; i < fd_mu.size(); ++i) {
        pts.x.push_back(fd_mu[i]);
        pts.y.push_back(fd[i]);
        rows.push_back({fd_mu[i], log_susceptibility(fd_mu[i]), fd[i]});
    }
    std::stable_sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) { return a[0] < b[0]; });
    f.table.rows = std::move(rows);
    f.plot.title = "Logarithmic susceptibility R_A^(1)";
    f.plot.xlabel = "μ";
    f.plot.ylabel = "R_A^(1)";
    f.plot.series = {neg, pos, pts};
    f.plot.y_lo = 0.0;
    f.plot.y_hi = 4.0;
    return f;
}

std::string fmt17(double x) {
    if (std::isnan(x)) return "nan";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

}  // namespace

std::string to_csv(const ResultTable& t, const std::string& hash) {
    std::string out = "# config_hash=" + hash + " version=" + kVersion + "\n";
    for (std::size_t i = 0; i < t.columns.size(); ++i) out += (i ? "," : "") + t.columns[i];
    out += "\n";
    for (const auto& row : t.rows) {
        if (row.size() != t.columns.size())
            throw Error(ErrorKind::DomainError, "result row width differs from the column count");
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (!std::isfinite(row[i]) && !t.diagnostic.count(i))
                throw Error(ErrorKind::DomainError, "non-finite value in column " + t.columns[i]);
            out += (i ? "," : "") + fmt17(row[i]);
        }
        out += "\n";
    }
    return out;
}

std::vector<OutputFile> run(const RunConfig& c) {
    validate(c.params);
    const std::string hash = config_hash(c);
    std::vector<OutputFile> files;
    const std::string csv = c.command + "-" + hash + ".csv";
    if (c.command == "landscape") {
        files.push_back({csv, to_csv(landscape_table(c), hash)});
    } else if (c.command == "orbits") {
        files.push_back({csv, to_csv(orbits_table(c), hash)});
    } else if (c.command == "rates") {
        files.push_back({csv, to_csv(rates_table(c), hash)});
    } else if (c.command == "activation") {
        files.push_back({csv, to_csv(activation_table(c), hash)});
    } else if (c.command == "sweep") {
        files.push_back({csv, to_csv(sweep_table(c), hash)});
    } else if (c.command == "oracle") {
        files.push_back({csv, to_csv(oracle_table(c), hash)});
    } else if (c.command == "figure") {
        const auto f = c.figure_id == "fig5" ? fig5(c) : c.figure_id == "fig6" ? fig6(c) : fig7(c);
        files.push_back({csv, to_csv(f.table, hash)});
        files.push_back({c.figure_id + "-" + hash + ".svg", render_svg(f.plot, hash)});
    } else {
        throw Error(ErrorKind::ValidationError, "unknown command " + c.command);
    }
    return files;
}

void write_outputs(const RunConfig& c, const std::vector<OutputFile>& files) {
    namespace fs = std::filesystem;
    const fs::path dir(c.output_dir);
    const std::string hash = config_hash(c);
    std::vector<fs::path> written;
    try {
        fs::create_directories(dir);
        nlohmann::json manifest;
        manifest["config_hash"] = hash;
        manifest["version"] = kVersion;
        manifest["config"] = nlohmann::json::parse(canonical_json(c));
        const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
        char ts[32];
        std::strftime(ts, sizeof ts, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
        manifest["timestamp"] = ts;
        manifest["files"] = nlohmann::json::array();
        std::vector<OutputFile> all = files;
        for (const auto& f : files) manifest["files"].push_back(f.name);
        all.push_back({c.command + "-" + hash + ".manifest.json", manifest.dump(2) + "\n"});
        for (const auto& f : all) {
            const fs::path target = dir / f.name;
            std::ofstream os(target, std::ios::binary);
            if (os.is_open()) written.push_back(target);
            os << f.contents;
            os.close();
            if (!os) throw Error(ErrorKind::DomainError, "cannot write " + target.string());
        }
    } catch (...) {
        std::error_code ec;
        for (const auto& p : written) fs::remove(p, ec);
        throw;
    }
}

unsigned worker_count() {
    unsigned n = std::max(1u, std::thread::hardware_concurrency());
    if (const char* env = std::getenv("FLIPLINE_THREADS")) {
        const long v = std::strtol(env, nullptr, 10);
        if (v >= 1) n = std::min<unsigned>(n, unsigned(v));
    }
    return n;
}

namespace {

void emit_error(const std::string& kind, const std::string& message, const std::string& command) {
    nlohmann::json rec{{"error", kind}, {"message", message}, {"command", command}};
    std::cerr << rec.dump() << "\n";
}

}  // namespace

int main_entry(int argc, char** argv) {
    CLI::App app{"Quantum activation in a parametrically driven oscillator: batch front end"};
    std::string command, config_path;
    double mu = 0, alpha = 0, lambda = 0, kappa = 0;
    std::string out;
    app.add_option("command", command, "landscape, orbits, rates, activation, sweep, oracle or figure")
        ->required();
    app.add_option("--config", config_path, "JSON run configuration");
    auto* o_mu = app.add_option("--mu", mu, "scaled detuning");
    auto* o_alpha = app.add_option("--alpha-d", alpha, "scaled bias amplitude");
    auto* o_lambda = app.add_option("--lambda", lambda, "scaled Planck constant");
    auto* o_kappa = app.add_option("--kappa", kappa, "scaled decay rate");
    auto* o_out = app.add_option("--out", out, "output directory");
    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        emit_error("ParseError", e.what(), command);
        return 2;
    }
    try {
        std::string text;
        if (!config_path.empty()) {
            std::ifstream is(config_path, std::ios::binary);
            if (!is) throw Error(ErrorKind::ParseError, "cannot read config file " + config_path);
            std::ostringstream ss;
            ss << is.rdbuf();
            text = ss.str();
        }
        Overrides ov;
        if (*o_mu) ov.mu = mu;
        if (*o_alpha) ov.alpha_d = alpha;
        if (*o_lambda) ov.lambda = lambda;
        if (*o_kappa) ov.kappa = kappa;
        if (*o_out) ov.out = out;
        const RunConfig cfg = parse_config(text, command, ov);
        const auto files = run(cfg);
        write_outputs(cfg, files);
        for (const auto& f : files) std::cout << (std::filesystem::path(cfg.output_dir) / f.name).string() << "\n";
        return 0;
    } catch (const Error& e) {
        emit_error(to_string(e.kind()), e.what(), command);
        return 1;
    } catch (const std::exception& e) {
        emit_error("InternalError", e.what(), command);
        return 3;
    }
}

}  // namespace flipline::cli
