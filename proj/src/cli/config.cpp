#include "flipline/cli/config.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <set>

#include <json.hpp>

#include "flipline/errors.hpp"

namespace flipline::cli {

using nlohmann::json;

const std::vector<std::string> kCommands = {"landscape", "orbits", "rates", "activation",
                                            "sweep",     "oracle", "figure"};

namespace {

const std::vector<std::string> kParamFields = {"mu", "alpha_d", "lambda", "kappa"};
const std::vector<double> kFig6Mu = {-0.5, 0.1, 0.5};

struct Collector {
    std::vector<std::string> violations;
    void add(const std::string& s) { violations.push_back(s); }
};

void reject_unknown(const json& obj, const std::string& where, const std::set<std::string>& allowed,
                    Collector& c) {
    for (auto it = obj.begin(); it != obj.end(); ++it)
        if (!allowed.count(it.key()))
            c.add((where.empty() ? "" : where + ".") + it.key() + ": unknown key");
}

// Type mismatches are reported as parse errors naming the field.
double get_number(const json& v, const std::string& field) {
    if (!v.is_number()) throw Error(ErrorKind::ParseError, "field " + field + ": expected a number");
    return v.get<double>();
}

int get_int(const json& v, const std::string& field) {
    if (!v.is_number_integer())
        throw Error(ErrorKind::ParseError, "field " + field + ": expected an integer");
    return v.get<int>();
}

std::string get_string(const json& v, const std::string& field) {
    if (!v.is_string()) throw Error(ErrorKind::ParseError, "field " + field + ": expected a string");
    return v.get<std::string>();
}

const json& get_object(const json& v, const std::string& field) {
    if (!v.is_object()) throw Error(ErrorKind::ParseError, "field " + field + ": expected an object");
    return v;
}

json parse_text(const std::string& text) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        // Locate the byte offset as line and column.
        std::size_t line = 1, col = 1;
        const std::size_t end = std::min<std::size_t>(e.byte == 0 ? 0 : e.byte - 1, text.size());
        for (std::size_t i = 0; i < end; ++i) {
            if (text[i] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
        throw Error(ErrorKind::ParseError, "line " + std::to_string(line) + ", column " +
                                               std::to_string(col) + ": " + e.what());
    }
}

double& param_ref(ModelParams& p, const std::string& name) {
    if (name == "mu") return p.mu;
    if (name == "alpha_d") return p.alpha_d;
    if (name == "lambda") return p.lambda;
    return p.kappa;
}

}  // namespace

std::vector<double> SweepSpec::values() const {
    std::vector<double> v(count);
    for (int i = 0; i < count; ++i) {
        const double t = double(i) / double(count - 1);
        v[i] = log_spacing ? start * std::pow(stop / start, t) : start + (stop - start) * t;
    }
    v.back() = stop;
    return v;
}

RunConfig parse_config(const std::string& text, const std::string& command_hint, const Overrides& ov) {
    const json doc = text.empty() ? json::object() : parse_text(text);
    if (!doc.is_object()) throw Error(ErrorKind::ParseError, "line 1: top level must be a JSON object");

    Collector c;
    RunConfig cfg;
    reject_unknown(doc, "",
                   {"command", "params", "sweep", "grid", "output_dir", "tolerances", "figure_id",
                    "figure_mu", "oracle", "rates"},
                   c);

    if (doc.contains("command")) cfg.command = get_string(doc["command"], "command");
    if (!command_hint.empty()) {
        if (!cfg.command.empty() && cfg.command != command_hint)
            c.add("command: config says '" + cfg.command + "' but '" + command_hint + "' was requested");
        cfg.command = command_hint;
    }
    if (cfg.command.empty())
        c.add("command: missing");
    else if (std::find(kCommands.begin(), kCommands.end(), cfg.command) == kCommands.end())
        c.add("command: '" + cfg.command + "' is not one of landscape, orbits, rates, activation, sweep, "
              "oracle, figure");
    const bool figure = cfg.command == "figure";

    if (doc.contains("figure_id")) cfg.figure_id = get_string(doc["figure_id"], "figure_id");
    if (figure) {
        if (cfg.figure_id.empty())
            c.add("figure_id: missing (fig5, fig6 or fig7)");
        else if (cfg.figure_id != "fig5" && cfg.figure_id != "fig6" && cfg.figure_id != "fig7")
            c.add("figure_id: '" + cfg.figure_id + "' is not one of fig5, fig6, fig7");
    } else if (!cfg.figure_id.empty()) {
        c.add("figure_id: only valid with the figure command");
    }

    // Parameters. Figure commands carry their own parameter set as defaults.
    cfg.params = ModelParams{0.2, 0.1, 0.05, 0.01};
    std::set<std::string> given;
    if (doc.contains("params")) {
        const json& pj = get_object(doc["params"], "params");
        reject_unknown(pj, "params", {kParamFields.begin(), kParamFields.end()}, c);
        for (const auto& f : kParamFields)
            if (pj.contains(f)) {
                param_ref(cfg.params, f) = get_number(pj[f], "params." + f);
                given.insert(f);
            }
    }
    const std::pair<const std::optional<double>*, const char*> ovs[] = {
        {&ov.mu, "mu"}, {&ov.alpha_d, "alpha_d"}, {&ov.lambda, "lambda"}, {&ov.kappa, "kappa"}};
    for (const auto& [v, name] : ovs)
        if (*v) {
            param_ref(cfg.params, name) = **v;
            given.insert(name);
        }
    if (!figure) {
        const bool swept_param = doc.contains("sweep") && doc["sweep"].is_object() &&
                                 doc["sweep"].contains("parameter") && doc["sweep"]["parameter"].is_string();
        const std::string swept = swept_param ? doc["sweep"]["parameter"].get<std::string>() : "";
        for (const char* f : {"mu", "alpha_d", "lambda"})
            if (!given.count(f) && swept != f) c.add(std::string("params.") + f + ": missing");
    }
    if (!(cfg.params.lambda > 0.0)) c.add("params.lambda: must be > 0");
    if (!(cfg.params.kappa > 0.0)) c.add("params.kappa: must be > 0");
    if (!(cfg.params.mu > -1.0 && cfg.params.mu <= 2.0)) c.add("params.mu: must lie in (-1, 2]");
    if (!std::isfinite(cfg.params.alpha_d)) c.add("params.alpha_d: must be finite");

    if (doc.contains("sweep")) {
        const json& sj = get_object(doc["sweep"], "sweep");
        reject_unknown(sj, "sweep", {"parameter", "start", "stop", "count", "spacing"}, c);
        SweepSpec s;
        for (const char* k : {"parameter", "start", "stop", "count"})
            if (!sj.contains(k)) c.add(std::string("sweep.") + k + ": missing");
        if (sj.contains("parameter")) s.parameter = get_string(sj["parameter"], "sweep.parameter");
        if (sj.contains("start")) s.start = get_number(sj["start"], "sweep.start");
        if (sj.contains("stop")) s.stop = get_number(sj["stop"], "sweep.stop");
        if (sj.contains("count")) s.count = get_int(sj["count"], "sweep.count");
        std::string spacing = "linear";
        if (sj.contains("spacing")) spacing = get_string(sj["spacing"], "sweep.spacing");
        if (spacing != "linear" && spacing != "log") c.add("sweep.spacing: must be linear or log");
        s.log_spacing = spacing == "log";
        if (sj.contains("parameter") &&
            std::find(kParamFields.begin(), kParamFields.end(), s.parameter) == kParamFields.end())
            c.add("sweep.parameter: '" + s.parameter + "' is not a model parameter");
        if (sj.contains("count") && s.count < 2) c.add("sweep.count: must be >= 2");
        if (sj.contains("start") && sj.contains("stop") && s.start == s.stop)
            c.add("sweep.start: must differ from sweep.stop");
        if (s.log_spacing && !(s.start > 0.0 && s.stop > 0.0))
            c.add("sweep.spacing: log spacing needs positive start and stop");
        if (cfg.command != "sweep") c.add("sweep: only valid with the sweep command");
        cfg.sweep = s;
    } else if (cfg.command == "sweep") {
        c.add("sweep: missing axis specification");
    }

    if (doc.contains("grid")) {
        const json& gj = get_object(doc["grid"], "grid");
        reject_unknown(gj, "grid", {"count", "g_lo", "g_hi"}, c);
        if (gj.contains("count")) cfg.grid.count = get_int(gj["count"], "grid.count");
        if (gj.contains("g_lo")) cfg.grid.g_lo = get_number(gj["g_lo"], "grid.g_lo");
        if (gj.contains("g_hi")) cfg.grid.g_hi = get_number(gj["g_hi"], "grid.g_hi");
    }
    if (cfg.grid.count < 2) c.add("grid.count: must be >= 2");
    if (cfg.grid.g_lo && cfg.grid.g_hi && !(*cfg.grid.g_lo < *cfg.grid.g_hi))
        c.add("grid.g_lo: must be below grid.g_hi");

    if (doc.contains("output_dir")) cfg.output_dir = get_string(doc["output_dir"], "output_dir");
    if (ov.out) cfg.output_dir = *ov.out;
    if (cfg.output_dir.empty()) c.add("output_dir: must not be empty");

    if (doc.contains("tolerances")) {
        const json& tj = get_object(doc["tolerances"], "tolerances");
        const std::pair<const char*, double*> fields[] = {
            {"root", &cfg.tol.root},       {"quad_rel", &cfg.tol.quad_rel},
            {"critical_cutoff", &cfg.tol.critical_cutoff},
            {"ode_rel", &cfg.tol.ode_rel}, {"ode_abs", &cfg.tol.ode_abs},
            {"pole_cutoff", &cfg.tol.pole_cutoff}, {"blowup_bound", &cfg.tol.blowup_bound}};
        std::set<std::string> names;
        for (const auto& [k, ptr] : fields) names.insert(k);
        reject_unknown(tj, "tolerances", names, c);
        for (const auto& [k, ptr] : fields)
            if (tj.contains(k)) {
                *ptr = get_number(tj[k], std::string("tolerances.") + k);
                if (!(*ptr > 0.0)) c.add(std::string("tolerances.") + k + ": must be > 0");
            }
    }

    if (doc.contains("oracle")) {
        const json& oj = get_object(doc["oracle"], "oracle");
        reject_unknown(oj, "oracle", {"N", "max_N", "convention"}, c);
        if (oj.contains("N")) cfg.oracle.N = get_int(oj["N"], "oracle.N");
        if (oj.contains("max_N")) cfg.oracle.max_N = get_int(oj["max_N"], "oracle.max_N");
        if (oj.contains("convention")) {
            const auto conv = get_string(oj["convention"], "oracle.convention");
            if (conv == "bare")
                cfg.oracle.convention = DetuningConvention::Bare;
            else if (conv == "renormalized")
                cfg.oracle.convention = DetuningConvention::Renormalized;
            else
                c.add("oracle.convention: must be bare or renormalized");
        }
    }
    if (cfg.oracle.N < 0 || (cfg.oracle.N > 0 && cfg.oracle.N < 20)) c.add("oracle.N: must be 0 (auto) or >= 20");
    if (cfg.oracle.max_N < 50) c.add("oracle.max_N: must be >= 50");

    if (doc.contains("rates")) {
        const json& rj = get_object(doc["rates"], "rates");
        reject_unknown(rj, "rates", {"m_max", "point"}, c);
        if (rj.contains("m_max")) cfg.m_max = get_int(rj["m_max"], "rates.m_max");
        if (rj.contains("point")) {
            const auto pt = get_string(rj["point"], "rates.point");
            if (pt == "midpoint")
                cfg.rate_point = RatePoint::Midpoint;
            else if (pt == "level")
                cfg.rate_point = RatePoint::LevelEnergy;
            else
                c.add("rates.point: must be midpoint or level");
        }
    }
    if (cfg.m_max < 1) c.add("rates.m_max: must be >= 1");

    if (doc.contains("figure_mu")) {
        if (!doc["figure_mu"].is_array()) throw Error(ErrorKind::ParseError, "field figure_mu: expected an array");
        if (cfg.figure_id != "fig6") c.add("figure_mu: only valid with figure fig6");
    }

    if (!c.violations.empty()) {
        std::string msg = std::to_string(c.violations.size()) + " violation(s): ";
        for (std::size_t i = 0; i < c.violations.size(); ++i) msg += (i ? "; " : "") + c.violations[i];
        throw Error(ErrorKind::ValidationError, msg);
    }
    if (doc.contains("figure_mu"))
        for (std::size_t i = 0; i < doc["figure_mu"].size(); ++i)
            cfg.figure_mu.push_back(get_number(doc["figure_mu"][i], "figure_mu[" + std::to_string(i) + "]"));
    else if (cfg.figure_id == "fig6")
        cfg.figure_mu = kFig6Mu;
    return cfg;
}

std::string canonical_json(const RunConfig& c) {
    json j;
    j["command"] = c.command;
    j["params"] = {{"mu", c.params.mu}, {"alpha_d", c.params.alpha_d}, {"lambda", c.params.lambda},
                   {"kappa", c.params.kappa}};
    if (c.sweep)
        j["sweep"] = {{"parameter", c.sweep->parameter}, {"start", c.sweep->start}, {"stop", c.sweep->stop},
                      {"count", c.sweep->count}, {"spacing", c.sweep->log_spacing ? "log" : "linear"}};
    j["grid"] = {{"count", c.grid.count}};
    if (c.grid.g_lo) j["grid"]["g_lo"] = *c.grid.g_lo;
    if (c.grid.g_hi) j["grid"]["g_hi"] = *c.grid.g_hi;
    j["tolerances"] = {{"root", c.tol.root}, {"quad_rel", c.tol.quad_rel},
                       {"critical_cutoff", c.tol.critical_cutoff}, {"ode_rel", c.tol.ode_rel},
                       {"ode_abs", c.tol.ode_abs}, {"pole_cutoff", c.tol.pole_cutoff},
                       {"blowup_bound", c.tol.blowup_bound}};
    if (!c.figure_id.empty()) j["figure_id"] = c.figure_id;
    if (!c.figure_mu.empty()) j["figure_mu"] = c.figure_mu;
    j["oracle"] = {{"N", c.oracle.N}, {"max_N", c.oracle.max_N},
                   {"convention", c.oracle.convention == DetuningConvention::Bare ? "bare" : "renormalized"}};
    j["rates"] = {{"m_max", c.m_max}, {"point", c.rate_point == RatePoint::Midpoint ? "midpoint" : "level"}};
    // output_dir is where results go, not what they are; it stays out of the hash.
    return j.dump();
}

std::string config_hash(const RunConfig& c) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char ch : canonical_json(c)) {
        h ^= ch;
        h *= 1099511628211ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace flipline::cli
