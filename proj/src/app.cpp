#include "fracrte/app.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <random>
#include <set>

#include <json.hpp>

#include "fracrte/carleman.hpp"
#include "fracrte/config.hpp"
#include "fracrte/error.hpp"
#include "fracrte/forward.hpp"
#include "fracrte/inverse.hpp"
#include "fracrte/io.hpp"
#include "fracrte/reduction.hpp"
#include "fracrte/scenario.hpp"

namespace fracrte {

namespace fs = std::filesystem;
using nlohmann::json;
using io::format_double;

namespace {

struct Context {
    const CommandOptions& opt;
    const RunConfig& cfg;
    CommandResult& result;

    fs::path path(const std::string& name) {
        result.artifacts.push_back(name);
        return opt.out_dir / name;
    }
};

std::string fmt(double x) { return format_double(x); }

std::vector<std::string> run_log_header() {
    return {"scenario", "subcommand", "config_hash", "amplitude", "c_emp",
            "det_min", "det_threshold", "relative_error"};
}

void log_run(Context& ctx, double amplitude, double c_emp, const DetMargin& det, double err) {
    fs::path log(ctx.cfg.run_log);
    if (ctx.cfg.run_log.empty()) return;
    const bool fresh = std::find(ctx.result.artifacts.begin(), ctx.result.artifacts.end(),
                                 ctx.cfg.run_log) == ctx.result.artifacts.end();
    if (log.is_relative()) log = ctx.opt.out_dir / log;
    io::append_run_log(log, run_log_header(),
                       {ctx.cfg.scenario, ctx.opt.subcommand, ctx.result.config_hash, fmt(amplitude),
                        fmt(c_emp), fmt(det.min_abs_det), fmt(det.threshold), fmt(err)});
    if (fresh) ctx.result.artifacts.push_back(ctx.cfg.run_log);
}

void write_field(Context& ctx, const PhaseSpaceGrid& g, const Field& u, const std::string& stem) {
    const auto& f = ctx.cfg.field_format;
    if (f == "csv" || f == "both") io::write_field_csv(ctx.path(stem + ".csv"), g, u);
    if (f == "binary" || f == "both") io::write_field_binary(ctx.path(stem + ".bin"), u);
}

void append(std::vector<std::string>& to, const std::vector<std::string>& from) {
    to.insert(to.end(), from.begin(), from.end());
}

double first_amplitude(const RunConfig& cfg) {
    return cfg.perturbation.amplitudes.empty() ? 0.0 : cfg.perturbation.amplitudes.front();
}

void cmd_forward(Context& ctx) {
    const auto& cfg = ctx.cfg;
    const auto g = make_grid(cfg.grid);
    const auto coeffs = make_reference(g, cfg);
    const auto exps = make_experiments(g, cfg);
    std::vector<std::vector<std::string>> rows;
    for (std::size_t j = 0; j < exps.size(); ++j) {
        SolveResult res = solve_frte(g, coeffs, exps[j], cfg.solver);
        for (auto& w : res.warnings)
            ctx.result.warnings.push_back("experiment " + std::to_string(j + 1) + ": " + w);
        const double defect = residual_frte(g, res.u, coeffs, exps[j], cfg.solver.x_scheme);
        write_field(ctx, g, res.u, "forward_u" + std::to_string(j + 1));
        rows.push_back({std::to_string(j + 1), std::to_string(res.max_source_iterations),
                        fmt(defect), fmt(max_abs(res.u.values()))});
    }
    io::write_table_csv(ctx.path("forward_summary.csv"),
                        {"experiment", "source_iterations", "residual", "max_abs_u"}, rows);
}

/// Twin solutions and the pieces of the reduced system built from them.
struct ReducedTwin {
    PhaseSpaceGrid g;
    CoefficientSet reference;
    TwinSolution twin;
    RMatrixField R;
    std::vector<Slice> comps;
};

ReducedTwin reduced_twin(Context& ctx, const GridSpec& spec) {
    const auto& cfg = ctx.cfg;
    ReducedTwin t;
    t.g = make_grid(spec);
    t.reference = make_reference(t.g, cfg);
    const auto exps = make_experiments(t.g, cfg);
    const auto r = make_perturbation(t.g, cfg.perturbation, t.reference, first_amplitude(cfg));
    t.twin = solve_twin(t.g, t.reference, r, exps, cfg.mode, cfg.solver, ctx.opt.threads);
    append(ctx.result.warnings, t.twin.warnings);
    t.R = build_R(t.g, t.twin.reference_solutions, t.reference, cfg.mode);
    t.comps = t.twin.r.components(cfg.mode);
    return t;
}

void cmd_reduce(Context& ctx) {
    const auto& cfg = ctx.cfg;
    std::vector<GridSpec> levels{cfg.grid};
    for (const auto& lv : cfg.refinement) {
        GridSpec s = cfg.grid;
        s.nx = lv[0];
        s.nv = lv[1];
        s.nt = lv[2];
        levels.push_back(s);
    }
    std::vector<std::vector<std::string>> rows;
    double last = std::numeric_limits<double>::infinity();
    for (const auto& spec : levels) {
        ReducedTwin t = reduced_twin(ctx, spec);
        const ReducedOperators ops(t.g, t.twin.perturbed);
        const SourceBuilder sb(t.g, t.twin.perturbed, t.R);
        const std::size_t k0 = t.g.t.index_of(cfg.t0);
        const auto kd = static_cast<std::size_t>(std::llround(cfg.delta / t.g.t.dt));
        const auto res = residual_reduced(
            ops, t.twin.differences, [&](std::size_t k) { return sb.f(t.comps, k); }, k0 - kd, k0 + kd);
        if (res.relative_max() >= last)
            ctx.result.warnings.push_back("reduction residual did not decrease at nx=" +
                                          std::to_string(spec.nx));
        last = res.relative_max();
        rows.push_back({std::to_string(spec.nx), std::to_string(spec.nv), std::to_string(spec.nt),
                        fmt(t.g.x.h), fmt(t.g.t.dt), fmt(res.max_defect), fmt(res.l2_defect),
                        fmt(res.max_dtu), fmt(res.l2_dtu), fmt(res.relative_max()),
                        fmt(res.relative_l2())});
    }
    io::write_table_csv(ctx.path("reduce_residual.csv"),
                        {"nx", "nv", "nt", "h", "dt", "max_defect", "l2_defect", "max_dtu", "l2_dtu",
                         "relative_max", "relative_l2"},
                        rows);
}

/// Smooth pseudo-random test function for the conjugation identity.
Field random_smooth(const PhaseSpaceGrid& g, unsigned seed) {
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    double c[6];
    for (double& x : c) x = U(rng);
    Field u = g.make_field();
    const double pi = std::numbers::pi;
    for (std::size_t ix = 0; ix < g.nx(); ++ix)
        for (std::size_t iv = 0; iv < g.nv(); ++iv)
            for (std::size_t k = 0; k < g.nt_nodes(); ++k) {
                const double x = g.x.nodes[ix] / g.x.ell;
                const double t = g.t.time(k) / g.t.t_final;
                const double v = g.v.nodes[iv] / g.v.v1;
                u(ix, iv, k) = c[0] + c[1] * std::sin(pi * x + c[2]) * std::cos(2 * pi * t) +
                               c[3] * x * t * (1 + 0.1 * v) + c[4] * std::cos(3 * x + c[5] * t);
            }
    return u;
}

void write_knees(Context& ctx, const std::vector<CarlemanReport>& rows) {
    std::vector<std::vector<std::string>> knees;
    for (double lam : ctx.cfg.lambdas) {
        const auto k = find_knee(rows, lam);
        knees.push_back({fmt(lam), k ? fmt(*k) : "none"});
        if (!k)
            ctx.result.warnings.push_back("no knee found for lambda=" + fmt(lam) +
                                          " (c_emp not non-increasing on the s lattice)");
    }
    io::write_table_csv(ctx.path("carleman_knee.csv"), {"lambda", "s0"}, knees);
}

void cmd_carleman(Context& ctx) {
    const auto& cfg = ctx.cfg;
    const auto lattice = make_lattice(cfg.lambdas, cfg.s_values);

    if (cfg.carleman_estimate == "conjugation") {
        const auto g = make_grid(cfg.grid);
        const Field u = random_smooth(g, cfg.seed);
        std::vector<std::vector<std::string>> rows;
        for (const auto& pt : lattice) {
            const auto w = build_weights(g, make_weight_params(g, cfg, pt.lambda, pt.s));
            rows.push_back({fmt(pt.lambda), fmt(pt.s), fmt(conjugation_defect(g, u, w, pt.s))});
        }
        io::write_table_csv(ctx.path("carleman_conjugation.csv"), {"lambda", "s", "defect"}, rows);
        return;
    }

    std::map<double, WeightField> weights;
    std::vector<CarlemanReport> rows;
    if (cfg.carleman_estimate == "stationary") {
        const auto g = make_grid(cfg.grid);
        const auto reference = make_reference(g, cfg);
        const auto r = make_perturbation(g, cfg.perturbation, reference, first_amplitude(cfg));
        const Slice w = cfg.perturbation.pin == "sigma_t" ? r.r_s : r.r_t;
        const Slice b = g.make_slice();
        const Kernel c = g.make_kernel();
        rows = sweep(lattice, [&](double lam, double s) {
            auto it = weights.find(lam);
            if (it == weights.end())
                it = weights.emplace(lam, build_weights(g, make_weight_params(g, cfg, lam, s))).first;
            return evaluate_stationary_estimate(g, w, std::nullopt, b, c, it->second, s);
        });
    } else {
        ReducedTwin t = reduced_twin(ctx, cfg.grid);
        const SourceBuilder sb(t.g, t.twin.perturbed, t.R);
        std::vector<Field> y;
        for (const auto& d : t.twin.differences) y.push_back(time_derivative(t.g, d));
        rows = sweep(lattice, [&](double lam, double s) {
            auto it = weights.find(lam);
            if (it == weights.end())
                it = weights.emplace(lam, build_weights(t.g, make_weight_params(t.g, cfg, lam, s))).first;
            return evaluate_parabolic_estimate(
                t.g, y, [&](std::size_t k) { return sb.ft(t.comps, k); }, it->second, s,
                cfg.carleman_domain);
        });
    }
    for (const auto& r : rows)
        if (!std::isfinite(r.c_emp))
            ctx.result.warnings.push_back("c_emp is not finite at lambda=" + fmt(r.lambda) +
                                          ", s=" + fmt(r.s));
    io::write_sweep_csv(ctx.path("carleman_sweep.csv"), rows);
    write_knees(ctx, rows);
}

void cmd_invert(Context& ctx) {
    const auto& cfg = ctx.cfg;
    const auto g = make_grid(cfg.grid);
    const auto reference = make_reference(g, cfg);
    const auto exps = make_experiments(g, cfg);
    const double amp = first_amplitude(cfg);
    const auto r = make_perturbation(g, cfg.perturbation, reference, amp);
    const auto out = run_stability_experiment(g, reference, r, exps, make_stability_options(cfg, ctx.opt.threads));
    append(ctx.result.warnings, out.warnings);
    const auto& rec = *out.reconstruction;
    io::write_reconstruction_csv(ctx.path("reconstruction.csv"), g, rec.recovered, rec.truth);
    io::write_table_csv(ctx.path("invert_summary.csv"),
                        {"amplitude", "relative_error", "det_min", "det_threshold",
                         "picard_iterations", "direct_steps", "contraction"},
                        {{fmt(amp), fmt(rec.relative_error), fmt(rec.det.min_abs_det),
                          fmt(rec.det.threshold), std::to_string(rec.march.max_picard_iterations),
                          std::to_string(rec.march.direct_steps), fmt(rec.march.contraction)}});
    log_run(ctx, amp, out.report.c_emp, rec.det, rec.relative_error);
}

void cmd_stability(Context& ctx) {
    const auto& cfg = ctx.cfg;
    const auto g = make_grid(cfg.grid);
    const auto reference = make_reference(g, cfg);
    const auto exps = make_experiments(g, cfg);
    const auto sopt = make_stability_options(cfg, ctx.opt.threads);
    std::vector<std::vector<std::string>> rows;
    bool degenerate = true;
    double cmin = std::numeric_limits<double>::infinity();
    double cmax = 0.0;
    for (double amp : cfg.perturbation.amplitudes) {
        const auto r = make_perturbation(g, cfg.perturbation, reference, amp);
        const auto out = run_stability_experiment(g, reference, r, exps, sopt);
        for (const auto& w : out.warnings)
            if (std::find(ctx.result.warnings.begin(), ctx.result.warnings.end(), w) == ctx.result.warnings.end())
                ctx.result.warnings.push_back(w);
        const auto& rep = out.report;
        const auto& rec = *out.reconstruction;
        if (rep.lhs > 0.0) {
            degenerate = false;
            cmin = std::min(cmin, rep.c_emp);
            cmax = std::max(cmax, rep.c_emp);
        }
        rows.push_back({fmt(amp), fmt(rep.lhs), fmt(rep.rhs_interior), fmt(rep.rhs_boundary),
                        fmt(rep.rhs_trace0), fmt(rep.rhs()), fmt(rep.c_emp),
                        fmt(rec.det.min_abs_det), fmt(rec.det.threshold), fmt(rec.relative_error)});
        log_run(ctx, amp, rep.c_emp, rec.det, rec.relative_error);
    }
    if (degenerate)
        ctx.result.warnings.push_back("degenerate report: every amplitude gives a zero perturbation, c_emp set to 0");
    else if (cmax > 2.0 * cmin)
        ctx.result.warnings.push_back("c_emp varies by more than a factor of 2 over the amplitude sweep");
    io::write_table_csv(ctx.path("stability.csv"),
                        {"amplitude", "lhs", "rhs_interior", "rhs_boundary", "rhs_trace0", "rhs",
                         "c_emp", "det_min", "det_threshold", "relative_error"},
                        rows);
}

void write_json(const fs::path& path, const json& j) {
    fs::create_directories(path.parent_path().empty() ? fs::path(".") : path.parent_path());
    std::ofstream out(path);
    if (!out) throw Error("cannot open " + path.string() + " for writing");
    out << j.dump(2) << '\n';
}

json to_record(const CommandResult& r) {
    json j;
    j["status"] = r.exit_code == kExitOk ? "ok" : "error";
    j["exit_code"] = r.exit_code;
    if (!r.error_kind.empty()) {
        j["kind"] = r.error_kind;
        j["message"] = r.error_message;
    }
    j["diagnostics"] = r.diagnostics;
    j["warnings"] = r.warnings;
    return j;
}

void fail(CommandResult& r, int code, const std::string& kind, const std::string& msg) {
    r.exit_code = code;
    r.error_kind = kind;
    r.error_message = msg;
}

}  // namespace

const std::vector<std::string>& subcommands() {
    static const std::vector<std::string> names{"forward", "reduce", "carleman", "invert", "stability", "validate"};
    return names;
}

std::string result_json(const CommandResult& r) { return to_record(r).dump(); }

CommandResult run_command(const CommandOptions& opt) {
    CommandResult result;
    const auto& names = subcommands();
    if (std::find(names.begin(), names.end(), opt.subcommand) == names.end()) {
        fail(result, kExitConfig, "config", "unknown subcommand '" + opt.subcommand + "'");
        return result;
    }
    if (opt.threads < 1) {
        fail(result, kExitConfig, "config", "--threads must be at least 1");
        return result;
    }

    std::string text;
    try {
        text = io::read_text(opt.config);
    } catch (const Error& e) {
        fail(result, kExitConfig, "config", e.what());
        return result;
    }
    result.config_hash = io::hex64(io::fnv1a64(text));

    RunConfig cfg = parse_config(text, result.diagnostics);
    cfg.base_dir = opt.config.has_parent_path() ? opt.config.parent_path() : fs::path(".");
    const std::string target = opt.subcommand == "validate" ? "" : opt.subcommand;
    for (auto& d : validate(cfg, target))
        if (std::find(result.diagnostics.begin(), result.diagnostics.end(), d) == result.diagnostics.end())
            result.diagnostics.push_back(d);
    if (!result.diagnostics.empty()) {
        fail(result, kExitConfig, "config",
             std::to_string(result.diagnostics.size()) + " configuration problem(s)");
    }
    if (opt.subcommand == "validate" || opt.validate_only) return result;
    if (result.exit_code != kExitOk) {
        try {
            write_json(opt.out_dir / "error.json", to_record(result));
        } catch (const std::exception&) {
        }
        return result;
    }

    Context ctx{opt, cfg, result};
    try {
        if (opt.subcommand == "forward") cmd_forward(ctx);
        else if (opt.subcommand == "reduce") cmd_reduce(ctx);
        else if (opt.subcommand == "carleman") cmd_carleman(ctx);
        else if (opt.subcommand == "invert") cmd_invert(ctx);
        else if (opt.subcommand == "stability") cmd_stability(ctx);
    } catch (const HypothesisError& e) {
        fail(result, kExitHypothesis, "hypothesis", e.what());
    } catch (const ConvergenceError& e) {
        fail(result, kExitConvergence, "convergence", e.what());
    } catch (const PreconditionError& e) {
        fail(result, kExitConfig, "precondition", e.what());
    } catch (const std::exception& e) {
        fail(result, kExitFailure, "internal", e.what());
    }

    try {
        if (result.exit_code != kExitOk) write_json(opt.out_dir / "error.json", to_record(result));
        json m;
        m["schema_version"] = kSchemaVersion;
        m["subcommand"] = opt.subcommand;
        m["scenario"] = cfg.scenario;
        m["config_hash"] = "fnv1a64:" + result.config_hash;
        m["status"] = result.exit_code == kExitOk ? "ok" : "error";
        m["artifacts"] = result.artifacts;
        m["warnings"] = result.warnings;
        write_json(opt.out_dir / "manifest.json", m);
    } catch (const std::exception& e) {
        if (result.exit_code == kExitOk) fail(result, kExitFailure, "internal", e.what());
    }
    return result;
}

}  // namespace fracrte
