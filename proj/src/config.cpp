#include "fracrte/config.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include <json.hpp>

#include "fracrte/error.hpp"
#include "fracrte/io.hpp"

namespace fracrte {

using nlohmann::json;

namespace {

/// Reads members of one JSON object, recording type errors and unknown keys.
class Reader {
public:
    Reader(const json& obj, std::string where, std::vector<std::string>& diags)
        : obj_(obj), where_(std::move(where)), diags_(diags) {
        if (!obj_.is_object()) diags_.push_back(where_ + ": expected an object");
    }

    ~Reader() {
        if (!obj_.is_object()) return;
        for (auto it = obj_.begin(); it != obj_.end(); ++it)
            if (!seen_.count(it.key())) diags_.push_back(where_ + ": unknown key '" + it.key() + "'");
    }

    bool has(const std::string& key) const { return obj_.is_object() && obj_.contains(key); }

    const json* child(const std::string& key) {
        seen_.insert(key);
        if (!has(key)) return nullptr;
        return &obj_.at(key);
    }

    std::string path(const std::string& key) const { return where_ + "." + key; }

    void number(const std::string& key, double& out) {
        if (const json* j = child(key)) {
            if (j->is_number()) out = j->get<double>();
            else diags_.push_back(path(key) + ": expected a number");
        }
    }

    template <class Int>
    void count(const std::string& key, Int& out) {
        if (const json* j = child(key)) {
            if (j->is_number_integer() && j->get<long long>() >= 0) out = static_cast<Int>(j->get<long long>());
            else if (j->is_number_integer()) diags_.push_back(path(key) + ": must not be negative");
            else diags_.push_back(path(key) + ": expected an integer");
        }
    }

    void integer(const std::string& key, int& out) {
        if (const json* j = child(key)) {
            if (j->is_number_integer()) out = j->get<int>();
            else diags_.push_back(path(key) + ": expected an integer");
        }
    }

    void text(const std::string& key, std::string& out) {
        if (const json* j = child(key)) {
            if (j->is_string()) out = j->get<std::string>();
            else diags_.push_back(path(key) + ": expected a string");
        }
    }

    void boolean(const std::string& key, bool& out) {
        if (const json* j = child(key)) {
            if (j->is_boolean()) out = j->get<bool>();
            else diags_.push_back(path(key) + ": expected true or false");
        }
    }

    void numbers(const std::string& key, std::vector<double>& out) {
        if (const json* j = child(key)) {
            if (j->is_number()) {
                out = {j->get<double>()};
                return;
            }
            if (!j->is_array()) {
                diags_.push_back(path(key) + ": expected a list of numbers");
                return;
            }
            out.clear();
            for (const auto& e : *j) {
                if (!e.is_number()) {
                    diags_.push_back(path(key) + ": expected a list of numbers");
                    return;
                }
                out.push_back(e.get<double>());
            }
        }
    }

private:
    const json& obj_;
    std::string where_;
    std::vector<std::string>& diags_;
    std::set<std::string> seen_;
};

void read_sigma(const json& j, const std::string& where, SigmaSpec& s,
                std::vector<std::string>& diags) {
    Reader r(j, where, diags);
    r.text("preset", s.preset);
    r.number("value", s.value);
    r.number("slope", s.slope);
    r.number("amplitude", s.amplitude);
    r.number("center", s.center);
    r.number("width", s.width);
    r.text("file", s.file);
}

}  // namespace

RunConfig parse_config(const std::string& text, std::vector<std::string>& diags) {
    RunConfig cfg;
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        diags.push_back(std::string("config is not valid JSON: ") + e.what());
        return cfg;
    }
    Reader top(root, "config", diags);
    if (!top.has("schema_version")) diags.push_back("config: missing schema_version");
    top.integer("schema_version", cfg.schema_version);
    top.text("scenario", cfg.scenario);

    if (const json* g = top.child("grid")) {
        Reader r(*g, "grid", diags);
        r.number("ell", cfg.grid.ell);
        r.count("nx", cfg.grid.nx);
        r.number("v0", cfg.grid.v0);
        r.number("v1", cfg.grid.v1);
        r.count("nv", cfg.grid.nv);
        r.number("t_final", cfg.grid.t_final);
        r.count("nt", cfg.grid.nt);
        std::string q = "gauss_legendre";
        r.text("quadrature", q);
        if (q == "gauss_legendre") cfg.grid.rule = VelocityQuadrature::GaussLegendre;
        else if (q == "trapezoid") cfg.grid.rule = VelocityQuadrature::Trapezoid;
        else diags.push_back("grid.quadrature: unknown rule '" + q + "' (gauss_legendre or trapezoid)");
    }

    if (const json* c = top.child("coefficients")) {
        Reader r(*c, "coefficients", diags);
        if (const json* s = r.child("sigma_t")) read_sigma(*s, "coefficients.sigma_t", cfg.sigma_t, diags);
        if (const json* s = r.child("sigma_s")) read_sigma(*s, "coefficients.sigma_s", cfg.sigma_s, diags);
        if (const json* p = r.child("p")) {
            Reader rp(*p, "coefficients.p", diags);
            rp.text("preset", cfg.p.preset);
            rp.number("g", cfg.p.g);
            rp.text("file", cfg.p.file);
        }
        r.number("bound_M", cfg.bound_M);
    }

    if (const json* s = top.child("solver")) {
        Reader r(*s, "solver", diags);
        r.number("tolerance", cfg.solver.tolerance);
        r.integer("max_iterations", cfg.solver.max_iterations);
        std::string scheme = to_string(cfg.solver.x_scheme);
        r.text("x_scheme", scheme);
        try {
            cfg.solver.x_scheme = parse_x_scheme(scheme);
        } catch (const Error& e) {
            diags.push_back(std::string("solver.x_scheme: ") + e.what());
        }
    }

    if (const json* ex = top.child("experiments")) {
        if (!ex->is_array()) {
            diags.push_back("experiments: expected a list");
        } else {
            for (std::size_t i = 0; i < ex->size(); ++i) {
                ExperimentSpec e;
                const std::string where = "experiments[" + std::to_string(i) + "]";
                Reader r(ex->at(i), where, diags);
                if (const json* a = r.child("initial")) {
                    Reader ra(*a, where + ".initial", diags);
                    ra.number("value", e.initial_value);
                    ra.number("tilt", e.initial_tilt);
                }
                if (const json* b = r.child("inflow")) {
                    Reader rb(*b, where + ".inflow", diags);
                    rb.text("kind", e.inflow);
                    rb.number("value", e.inflow_value);
                    rb.number("oscillation", e.oscillation);
                    rb.number("frequency", e.frequency);
                    rb.number("rate", e.rate);
                }
                cfg.experiments.push_back(e);
            }
        }
    }

    if (const json* p = top.child("perturbation")) {
        Reader r(*p, "perturbation", diags);
        r.text("shape", cfg.perturbation.shape);
        r.numbers("amplitudes", cfg.perturbation.amplitudes);
        r.number("tilt", cfg.perturbation.tilt);
        r.text("pin", cfg.perturbation.pin);
    }

    if (const json* w = top.child("weights")) {
        Reader r(*w, "weights", diags);
        r.numbers("lambda", cfg.lambdas);
        r.numbers("s", cfg.s_values);
        r.number("t0", cfg.t0);
        r.number("delta", cfg.delta);
        r.number("eps_det", cfg.eps_det);
        if (const json* d = r.child("d")) {
            Reader rd(*d, "weights.d", diags);
            std::string kind = "linear";
            rd.text("kind", kind);
            rd.number("kappa_fraction", cfg.d.kappa_fraction);
            rd.text("file", cfg.d_file);
            if (kind == "linear") cfg.d.kind = DSpec::Kind::Linear;
            else if (kind == "tabulated") cfg.d.kind = DSpec::Kind::Tabulated;
            else diags.push_back("weights.d.kind: unknown kind '" + kind + "' (linear or tabulated)");
        }
    }

    if (const json* inv = top.child("inverse")) {
        Reader r(*inv, "inverse", diags);
        std::string mode = to_string(cfg.mode);
        r.text("mode", mode);
        try {
            cfg.mode = parse_inverse_mode(mode);
        } catch (const Error& e) {
            diags.push_back(std::string("inverse.mode: ") + e.what());
        }
        std::string march = "trapezoid";
        r.text("march", march);
        if (march == "trapezoid") cfg.march.scheme = MarchScheme::Trapezoid;
        else if (march == "implicit_euler") cfg.march.scheme = MarchScheme::ImplicitEuler;
        else diags.push_back("inverse.march: unknown scheme '" + march + "' (trapezoid or implicit_euler)");
        r.number("tolerance", cfg.march.tolerance);
        r.integer("max_iterations", cfg.march.max_iterations);
        r.number("damping", cfg.march.damping);
        r.boolean("remark_variant", cfg.remark_variant);
    }

    if (const json* c = top.child("carleman")) {
        Reader r(*c, "carleman", diags);
        r.text("estimate", cfg.carleman_estimate);
        std::string domain = "q_delta";
        r.text("domain", domain);
        if (domain == "q_delta") cfg.carleman_domain = CarlemanDomain::QDelta;
        else if (domain == "q") cfg.carleman_domain = CarlemanDomain::Q;
        else diags.push_back("carleman.domain: unknown domain '" + domain + "' (q or q_delta)");
        int seed = static_cast<int>(cfg.seed);
        r.integer("seed", seed);
        cfg.seed = static_cast<unsigned>(seed);
    }

    if (const json* red = top.child("reduce")) {
        Reader r(*red, "reduce", diags);
        if (const json* lv = r.child("refinement")) {
            bool ok = lv->is_array();
            if (ok)
                for (const auto& e : *lv) {
                    if (!e.is_array() || e.size() != 3 || !e[0].is_number_unsigned() ||
                        !e[1].is_number_unsigned() || !e[2].is_number_unsigned()) {
                        ok = false;
                        break;
                    }
                    cfg.refinement.push_back({e[0].get<std::size_t>(), e[1].get<std::size_t>(),
                                              e[2].get<std::size_t>()});
                }
            if (!ok) diags.push_back("reduce.refinement: expected a list of [nx, nv, nt] triples");
        }
    }

    if (const json* o = top.child("output")) {
        Reader r(*o, "output", diags);
        r.text("field_format", cfg.field_format);
        r.text("run_log", cfg.run_log);
    }
    return cfg;
}

RunConfig load_config(const std::filesystem::path& path, std::vector<std::string>& diags) {
    std::string text;
    try {
        text = io::read_text(path);
    } catch (const Error& e) {
        diags.push_back(e.what());
        return RunConfig{};
    }
    RunConfig cfg = parse_config(text, diags);
    cfg.base_dir = path.has_parent_path() ? path.parent_path() : std::filesystem::path(".");
    return cfg;
}

std::vector<std::string> validate(const RunConfig& cfg, const std::string& sub) {
    std::vector<std::string> d;
    auto need = [&](bool ok, const std::string& msg) {
        if (!ok) d.push_back(msg);
    };
    auto finite = [](double x) { return std::isfinite(x); };

    need(cfg.schema_version == kSchemaVersion,
         "schema_version " + std::to_string(cfg.schema_version) + " is not supported (expected " +
             std::to_string(kSchemaVersion) + ")");

    const auto& g = cfg.grid;
    const bool needs_three = sub == "reduce" || sub == "invert" || sub == "stability" ||
                             (sub == "carleman" && cfg.carleman_estimate == "parabolic");
    need(finite(g.ell) && g.ell > 0.0, "grid.ell must be positive");
    need(g.nx >= (needs_three ? 3u : 2u),
         needs_three ? "grid.nx must be at least 3 for this subcommand" : "grid.nx must be at least 2");
    need(g.nv >= 2, "grid.nv must be at least 2");
    need(g.nt >= 2, "grid.nt must be at least 2");
    need(finite(g.v0) && g.v0 > 0.0, "grid.v0 must be positive");
    need(finite(g.v1) && g.v0 < g.v1, "grid.v0 must be smaller than grid.v1");
    need(finite(g.t_final) && g.t_final > 0.0, "grid.t_final must be positive");

    static const std::set<std::string> sigma_presets{"constant", "linear", "bump", "tabulated"};
    for (const auto* s : {&cfg.sigma_t, &cfg.sigma_s}) {
        const std::string name = s == &cfg.sigma_t ? "coefficients.sigma_t" : "coefficients.sigma_s";
        if (!sigma_presets.count(s->preset)) {
            d.push_back(name + ": unknown preset '" + s->preset +
                        "' (constant, linear, bump or tabulated)");
            continue;
        }
        if (s->preset == "tabulated" && s->file.empty()) d.push_back(name + ": tabulated preset needs a file");
        if (s->preset == "bump") need(s->width > 0.0, name + ": bump width must be positive");
    }
    static const std::set<std::string> p_presets{"isotropic", "linear_anisotropic", "zero", "tabulated"};
    if (!p_presets.count(cfg.p.preset))
        d.push_back("coefficients.p: unknown preset '" + cfg.p.preset +
                    "' (isotropic, linear_anisotropic, zero or tabulated)");
    if (cfg.p.preset == "tabulated" && cfg.p.file.empty())
        d.push_back("coefficients.p: tabulated preset needs a file");
    if (cfg.p.preset == "linear_anisotropic")
        need(std::abs(cfg.p.g) <= 1.0, "coefficients.p: anisotropy g must lie in [-1, 1] so p >= 0");
    need(finite(cfg.bound_M) && cfg.bound_M > 0.0, "coefficients.bound_M must be positive");

    need(cfg.solver.tolerance > 0.0, "solver.tolerance must be positive");
    need(cfg.solver.max_iterations >= 1, "solver.max_iterations must be at least 1");

    static const std::set<std::string> inflows{"from_initial", "constant", "zero", "mittag_leffler"};
    for (std::size_t i = 0; i < cfg.experiments.size(); ++i) {
        const auto& e = cfg.experiments[i];
        const std::string where = "experiments[" + std::to_string(i) + "]";
        if (!inflows.count(e.inflow))
            d.push_back(where + ".inflow: unknown kind '" + e.inflow +
                        "' (from_initial, constant, zero or mittag_leffler)");
        need(finite(e.initial_value) && finite(e.initial_tilt) && finite(e.oscillation) &&
                 finite(e.frequency) && finite(e.rate) && finite(e.inflow_value),
             where + ": values must be finite");
    }
    const std::size_t needed = cfg.mode == InverseMode::Full ? 2 : 1;
    if (sub == "forward") need(!cfg.experiments.empty(), "experiments: at least one experiment is required");
    if (sub == "reduce" || sub == "invert" || sub == "stability" ||
        (sub == "carleman" && cfg.carleman_estimate == "parabolic"))
        need(cfg.experiments.size() >= needed,
             "experiments: mode " + to_string(cfg.mode) + " needs " + std::to_string(needed) +
                 " experiment(s)");

    static const std::set<std::string> shapes{"sin2", "poly", "linear", "zero"};
    if (!shapes.count(cfg.perturbation.shape))
        d.push_back("perturbation.shape: unknown shape '" + cfg.perturbation.shape + "' (sin2, poly, linear or zero)");
    static const std::set<std::string> pins{"none", "sigma_t", "sigma_s"};
    if (!pins.count(cfg.perturbation.pin))
        d.push_back("perturbation.pin: unknown value '" + cfg.perturbation.pin + "' (none, sigma_t or sigma_s)");
    if (sub == "stability" || sub == "invert" || sub == "reduce")
        need(!cfg.perturbation.amplitudes.empty(), "perturbation.amplitudes must not be empty");
    for (double a : cfg.perturbation.amplitudes)
        need(finite(a), "perturbation.amplitudes must be finite");

    // weights
    if (sub == "carleman") {
        need(!cfg.lambdas.empty(), "weights.lambda must not be empty");
        need(!cfg.s_values.empty(), "weights.s must not be empty");
    }
    for (double l : cfg.lambdas) need(finite(l) && l > 0.0, "weights.lambda values must be positive");
    for (double s : cfg.s_values) need(finite(s) && s > 0.0, "weights.s values must be positive");
    const double T = g.t_final;
    need(cfg.t0 > 0.0 && cfg.t0 < T, "weights.t0 must lie in (0, T)");
    need(cfg.delta > 0.0 && cfg.delta < std::min(cfg.t0, T - cfg.t0),
         "window violates 0<delta<min(t0,T-t0)");
    if (cfg.d.kind == DSpec::Kind::Linear) need(cfg.d.kappa_fraction > 0.0, "weights.d.kappa_fraction must be positive");
    else need(!cfg.d_file.empty(), "weights.d: tabulated d needs a file");
    need(cfg.eps_det >= 0.0, "weights.eps_det must not be negative");

    // time-node placement of t0 and the window for the data-driven subcommands
    if ((sub == "invert" || sub == "stability" || sub == "reduce") && g.nt >= 2 && T > 0.0 &&
        cfg.delta > 0.0 && cfg.delta < std::min(cfg.t0, T - cfg.t0)) {
        const double dt = T / static_cast<double>(g.nt);
        const auto k0 = static_cast<long long>(std::llround(cfg.t0 / dt));
        const auto kd = static_cast<long long>(std::llround(cfg.delta / dt));
        const auto nt = static_cast<long long>(g.nt);
        need(k0 >= 2 && k0 + 2 <= nt, "weights.t0 falls on or next to an end of the time grid");
        need(kd >= 1 && k0 - kd >= 1 && k0 + kd + 1 <= nt,
             "observation window needs at least one time step inside (0, T) on each side");
    }

    need(cfg.march.tolerance > 0.0, "inverse.tolerance must be positive");
    need(cfg.march.max_iterations >= 1, "inverse.max_iterations must be at least 1");
    need(cfg.march.damping > 0.0 && cfg.march.damping <= 1.0, "inverse.damping must lie in (0, 1]");

    static const std::set<std::string> estimates{"parabolic", "stationary", "conjugation"};
    if (!estimates.count(cfg.carleman_estimate))
        d.push_back("carleman.estimate: unknown estimate '" + cfg.carleman_estimate +
                    "' (parabolic, stationary or conjugation)");

    for (const auto& lv : cfg.refinement)
        need(lv[0] >= 3 && lv[1] >= 2 && lv[2] >= 2, "reduce.refinement levels need nx >= 3, nv >= 2, nt >= 2");

    static const std::set<std::string> formats{"csv", "binary", "both", "none"};
    if (!formats.count(cfg.field_format))
        d.push_back("output.field_format: unknown format '" + cfg.field_format + "' (csv, binary, both or none)");
    return d;
}

}  // namespace fracrte
