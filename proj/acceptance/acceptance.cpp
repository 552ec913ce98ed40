// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.
// Usage: fracrte_acceptance [CONFIG_DIR]   (CONFIG_DIR holds p_zero_invert.json)

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "fracrte/app.hpp"
#include "fracrte/carleman.hpp"
#include "fracrte/fraccalc.hpp"
#include "fracrte/forward.hpp"
#include "fracrte/inverse.hpp"
#include "fracrte/reduction.hpp"
#include "twin.hpp"

using namespace fracrte;
namespace fs = std::filesystem;

namespace {

int failures = 0;

void report(int id, bool ok, const std::string& what, const std::string& detail) {
    if (!ok) ++failures;
    std::printf("%s C%d %s: %s\n", ok ? "PASS" : "FAIL", id, what.c_str(), detail.c_str());
    std::fflush(stdout);
}

std::string sci(double x) {
    char b[32];
    std::snprintf(b, sizeof b, "%.3e", x);
    return b;
}

std::string list(const std::vector<double>& v) {
    std::string s;
    for (double x : v) s += (s.empty() ? "" : " ") + sci(x);
    return "[" + s + "]";
}

bool decreasing(const std::vector<double>& v) {
    for (std::size_t i = 1; i < v.size(); ++i)
        if (!(v[i] < v[i - 1])) return false;
    return true;
}

double min_order(const std::vector<double>& err) {
    double m = INFINITY;
    for (std::size_t i = 1; i < err.size(); ++i) m = std::min(m, std::log2(err[i - 1] / err[i]));
    return m;
}

TimeGrid tgrid(std::size_t nt) {
    TimeGrid t;
    t.t_final = 1.0;
    t.nt = nt;
    t.dt = 1.0 / static_cast<double>(nt);
    return t;
}

std::vector<double> sampled(const TimeGrid& t, double (*f)(double)) {
    std::vector<double> out;
    for (std::size_t k = 0; k < t.nodes(); ++k) out.push_back(f(t.time(k)));
    return out;
}

// Caputo half derivative on power functions.
void criterion1() {
    const double sqrt_exact = 0.5 * std::sqrt(std::numbers::pi);
    auto t1000 = tgrid(1000);
    const double e_sqrt =
        std::abs(frac::caputo_half(t1000, sampled(t1000, [](double x) { return std::sqrt(x); }), 1000) - sqrt_exact);
    const double t2_exact = std::tgamma(3.0) / std::tgamma(2.5);
    std::vector<double> err;
    double e_t2_1000 = 0.0;
    for (std::size_t nt : {250u, 500u, 1000u, 2000u}) {
        auto t = tgrid(nt);
        err.push_back(std::abs(frac::caputo_half(t, sampled(t, [](double x) { return x * x; }), nt) - t2_exact));
        if (nt == 1000) e_t2_1000 = err.back();
    }
    const double order = min_order(err);
    report(1, e_sqrt <= 1e-2 && e_t2_1000 <= 1e-3 && order >= 1.4, "Caputo special values",
           "|err sqrt(t)|=" + sci(e_sqrt) + " (tol 1e-2), |err t^2|@1000=" + sci(e_t2_1000) +
               " (tol 1e-3), t^2 errors " + list(err) + ", min order " + sci(order) + " (>= 1.4)");
}

// Composition of two half derivatives on t^2, relative to max|2t| = 2.
void criterion2() {
    std::vector<double> dev;
    bool ok = true;
    for (std::size_t nt : {500u, 1000u, 2000u}) {
        auto t = tgrid(nt);
        const auto rep = frac::check_composition(t, sampled(t, [](double x) { return x * x; }), 0.1);
        ok = ok && rep.hypothesis_ok;
        dev.push_back(rep.max_deviation / 2.0);
    }
    ok = ok && dev.back() <= 0.02 && decreasing(dev);
    report(2, ok, "composition", "relative max deviation on [0.1,1] " + list(dev) + " (<= 2e-2 at nt=2000, decreasing)");
}

CoefficientSet slab(const PhaseSpaceGrid& g) {
    Slice st = g.make_slice();
    for (std::size_t ix = 0; ix < g.nx(); ++ix)
        for (std::size_t iv = 0; iv < g.nv(); ++iv) st(ix, iv) = 1.0 + 0.2 * g.x.nodes[ix];
    return CoefficientSet(st, g.make_slice(0.5), g.make_kernel(1.0 / g.v.measure()), 5.0);
}

// Max error of the forward solver on u = t^2 (1 + x), source built with the solver's transport stencil.
double mms_error(std::size_t nx, std::size_t nt) {
    auto g = build_grid({1.0, nx, 1.0, 2.0, 4, 1.0, nt});
    const auto c = slab(g);
    Field exact = g.make_field();
    for (std::size_t ix = 0; ix < g.nx(); ++ix)
        for (std::size_t iv = 0; iv < g.nv(); ++iv)
            for (std::size_t k = 0; k < g.nt_nodes(); ++k)
                exact(ix, iv, k) = std::pow(g.t.time(k), 2) * (1.0 + g.x.nodes[ix]);
    ProblemData d = zero_data(g);
    for (std::size_t iv = 0; iv < g.nv(); ++iv)
        for (std::size_t k = 0; k < g.nt_nodes(); ++k) {
            d.inflow(Side::Left, iv, k) = exact(0, iv, k);
            d.inflow(Side::Right, iv, k) = exact(g.nx() - 1, iv, k);
        }
    const double gam = std::tgamma(3.0) / std::tgamma(2.5);
    Field q = g.make_field();
    for (std::size_t k = 1; k < g.nt_nodes(); ++k) {
        const Slice uk = exact.slice(k);
        const Slice adv = upwind_transport(g, uk, XScheme::Upwind1);
        const Slice scat = c.scatter(g.v, uk);
        for (std::size_t ix = 0; ix < g.nx(); ++ix)
            for (std::size_t iv = 0; iv < g.nv(); ++iv)
                q(ix, iv, k) = gam * std::pow(g.t.time(k), 1.5) * (1.0 + g.x.nodes[ix]) + adv(ix, iv) +
                                      c.sigma_t()(ix, iv) * uk(ix, iv) - scat(ix, iv);
    }
    d.source = std::move(q);
    const auto u = solve_frte(g, c, d).u;
    double e = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) e = std::max(e, std::abs(u.values()[i] - exact.values()[i]));
    return e;
}

void criterion3() {
    auto g = build_grid({1.0, 21, 1.0, 2.0, 4, 1.0, 50});
    const auto vac = solve_frte(g, vacuum_coefficients(g), zero_data(g));
    const double vac_max = max_abs(vac.u.values());

    auto ga = build_grid({1.0, 11, 1.0, 2.0, 2, 1.0, 1000});
    ProblemData d = zero_data(ga);
    for (double& x : d.initial.values()) x = 1.0;
    for (std::size_t iv = 0; iv < ga.nv(); ++iv)
        for (std::size_t k = 0; k < ga.nt_nodes(); ++k) {
            const double e = frac::mittag_leffler_half(-std::sqrt(ga.t.time(k)));
            d.inflow(Side::Left, iv, k) = e;
            d.inflow(Side::Right, iv, k) = e;
        }
    const auto abs = solve_frte(ga, constant_coefficients(ga, 1.0, 0.0, 2.0), d);
    const double target = std::exp(1.0) * std::erfc(1.0);
    double ml_err = 0.0;
    for (std::size_t ix = 0; ix < ga.nx(); ++ix)
        for (std::size_t iv = 0; iv < ga.nv(); ++iv)
            ml_err = std::max(ml_err, std::abs(abs.u(ix, iv, ga.t.nt) - target));

    std::vector<double> err;
    for (std::size_t lvl = 0; lvl < 3; ++lvl) err.push_back(mms_error(10u << lvl, 50u << lvl));
    const double order = min_order(err);
    report(3, vac_max == 0.0 && ml_err <= 1e-2 && order >= 0.9, "forward solver",
           "vacuum max|u|=" + sci(vac_max) + ", absorber |u(1)-e*erfc(1)|=" + sci(ml_err) +
               " (tol 1e-2), MMS errors " + list(err) + " order " + sci(order) + " (>= 0.9)");
}

// Reduced system residual on the observation window over three levels.
void criterion4() {
    std::vector<double> rel, rel_l2;
    for (auto lv : {std::array<std::size_t, 3>{50, 8, 250}, {100, 8, 500}, {200, 8, 1000}}) {
        twin::Data d;
        twin::build(d, twin::config(lv[0], lv[1], lv[2], 0.05, "sin2", XScheme::Upwind2));
        const ReducedOperators ops(d.g, d.twin.perturbed);
        const SourceBuilder sb(d.g, d.twin.perturbed, d.R);
        const auto res = residual_reduced(
            ops, d.twin.differences, [&](std::size_t k) { return sb.f(d.comps, k); }, d.k0 - d.kd, d.k0 + d.kd);
        rel.push_back(res.relative_max());
        rel_l2.push_back(res.relative_l2());
    }
    report(4, decreasing(rel) && rel.back() < 5e-2, "reduction consistency",
           "relative max residual " + list(rel) + " (decreasing, < 5e-2), relative L2 " + list(rel_l2));
}

// Conjugation identity for a smooth pseudo-random field.
void criterion5() {
    const double T = 25.0;
    auto g = build_grid({1.0, 200, 1.0, 2.0, 2, T, 1000});
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    double c[6];
    for (double& x : c) x = U(rng);
    const double pi = std::numbers::pi;
    Field u = g.make_field();
    for (std::size_t ix = 0; ix < g.nx(); ++ix)
        for (std::size_t iv = 0; iv < g.nv(); ++iv)
            for (std::size_t k = 0; k < g.nt_nodes(); ++k) {
                const double x = g.x.nodes[ix], t = g.t.time(k) / T, v = g.v.nodes[iv] / g.v.v1;
                u(ix, iv, k) = c[0] + c[1] * std::sin(pi * x + c[2]) * std::cos(2 * pi * t) +
                               c[3] * x * t * (1 + 0.1 * v) + c[4] * std::cos(3 * x + c[5] * t);
            }
    std::vector<double> defect;
    for (auto [s, lam] : {std::pair{20.0, 1.0}, std::pair{50.0, 2.0}}) {
        WeightParams p;
        p.lambda = lam;
        p.t0 = T / 2;
        p.delta = T / 4;
        defect.push_back(conjugation_defect(g, u, build_weights(g, p), s));
    }
    const bool ok = std::all_of(defect.begin(), defect.end(), [](double d) { return std::isfinite(d) && d <= 5e-2; });
    report(5, ok, "Carleman conjugation", "relative defect at (s,lambda)=(20,1),(50,2): " + list(defect) + " (<= 5e-2, T=25)");
}

WeightParams wparams(double lambda) {
    WeightParams p;
    p.lambda = lambda;
    return p;
}

void criterion6() {
    auto g = build_grid({1.0, 200, 1.0, 2.0, 4, 1.0, 100});
    Slice w = g.make_slice();
    for (std::size_t ix = 0; ix < g.nx(); ++ix)
        for (std::size_t iv = 0; iv < g.nv(); ++iv) w(ix, iv) = g.x.nodes[ix];
    const Slice b = g.make_slice();
    const Kernel c = g.make_kernel();
    bool ok = true;
    std::string detail;
    for (double lam : {1.0, 2.0}) {
        const auto W = build_weights(g, wparams(lam));
        const auto rows = sweep(make_lattice({lam}, {5, 10, 20, 40, 80}), [&](double, double s) {
            return evaluate_stationary_estimate(g, w, std::nullopt, b, c, W, s);
        });
        std::vector<double> ce;
        for (const auto& r : rows) ce.push_back(r.c_emp);
        const auto knee = find_knee(rows, lam);
        const bool bounded = std::all_of(ce.begin(), ce.end(), [](double x) { return std::isfinite(x); });
        ok = ok && bounded && knee.has_value();
        detail += "lambda=" + sci(lam) + " c_emp " + list(ce) + " s0=" + (knee ? sci(*knee) : "none") + "; ";
    }

    // plain summation on a 5-node grid; small s keeps every weight representable
    auto gs = build_grid({1.0, 5, 1.0, 2.0, 2, 1.0, 10});
    Slice ws = gs.make_slice();
    for (std::size_t ix = 0; ix < gs.nx(); ++ix)
        for (std::size_t iv = 0; iv < gs.nv(); ++iv)
            ws(ix, iv) = gs.x.nodes[ix] * (1 + gs.x.nodes[ix]) * (1 + 0.1 * gs.v.nodes[iv]);
    const auto Ws = build_weights(gs, wparams(1.0));
    double worst = 0.0;
    for (double s : {0.5, 1.0, 2.0}) {
        const auto rep = evaluate_stationary_estimate(gs, ws, std::nullopt, gs.make_slice(), gs.make_kernel(), Ws, s);
        double lhs = 0.0, rhs = 0.0;
        const double h = 0.25;
        for (std::size_t ix = 0; ix < 5; ++ix) {
            const double x = h * ix;
            const double a = (std::exp(1.1 - x) - std::exp(2.2)) / (0.25 * 0.25);
            const double q = (ix == 0 || ix == 4 ? 0.5 : 1.0) * h;
            for (std::size_t iv = 0; iv < gs.nv(); ++iv) {
                const double vf = 1 + 0.1 * gs.v.nodes[iv];
                const double wx = (1 + 2 * x) * vf;  // the stencils are exact on quadratics
                const double wv = x * (1 + x) * vf;
                const double e = q * gs.v.weights[iv] * std::exp(2 * s * a);
                lhs += e * (wx * wx + s * s * wv * wv);
                rhs += e * wx * wx;
            }
        }
        worst = std::max({worst, std::abs(rep.lhs() / lhs - 1), std::abs(rep.rhs_interior() / rhs - 1)});
    }
    ok = ok && worst <= 1e-12;
    report(6, ok, "stationary Carleman", detail + "brute-force relative mismatch " + sci(worst) + " (<= 1e-12)");
}

void criterion7() {
    twin::Data d;
    twin::build(d, twin::config(100, 8, 500));
    const SourceBuilder sb(d.g, d.twin.perturbed, d.R);
    std::vector<Field> y;
    for (const auto& u : d.twin.differences) y.push_back(time_derivative(d.g, u));
    bool finite = true;
    std::string detail;
    double c10 = 0.0, c80 = 0.0;
    for (double lam : {1.0, 2.0}) {
        WeightParams p = wparams(lam);
        const auto W = build_weights(d.g, p);
        std::vector<double> ce;
        for (double s : {10.0, 20.0, 40.0, 80.0}) {
            const auto r = evaluate_parabolic_estimate(
                d.g, y, [&](std::size_t k) { return sb.ft(d.comps, k); }, W, s, CarlemanDomain::QDelta);
            finite = finite && std::isfinite(r.c_emp);
            ce.push_back(r.c_emp);
        }
        if (lam == 2.0) {
            c10 = ce.front();
            c80 = ce.back();
        }
        detail += "lambda=" + sci(lam) + " c_emp(s=10..80) " + list(ce) + "; ";
    }
    report(7, finite && c80 <= c10, "parabolic Carleman on Q_delta", detail + "need c(80) <= c(10) at lambda=2");
}

void criterion8() {
    std::vector<double> err;
    for (auto lv : {std::array<std::size_t, 3>{50, 16, 250}, {100, 16, 500}, {200, 16, 1000}}) {
        twin::Data d;
        twin::build(d, twin::config(lv[0], lv[1], lv[2]));
        const ReducedOperators ops(d.g, d.twin.perturbed);
        const auto f = recover_f_at_t0(ops, d.twin.differences, d.k0);
        const auto res = solve_r_system(d.g, f, d.R, d.reference, d.k0);
        err.push_back(relative_l2_error(d.g, res.march.w, d.comps));
    }
    report(8, decreasing(err) && err.back() <= 0.1, "closed-loop reconstruction",
           "relative L2 error at 50x16x250, 100x16x500, 200x16x1000: " + list(err) + " (decreasing, <= 1e-1)");
}

void criterion9(const fs::path& config_dir) {
    std::vector<double> ce;
    double worst_margin = INFINITY;
    bool det_ok = true;
    for (double amp : {0.01, 0.02, 0.05, 0.1}) {
        const auto cfg = twin::config(100, 8, 500, amp);
        const auto g = make_grid(cfg.grid);
        const auto ref = make_reference(g, cfg);
        const auto exps = make_experiments(g, cfg);
        StabilityOptions opt;
        opt.forward = cfg.solver;
        const auto out = run_stability_experiment(g, ref, make_perturbation(g, cfg.perturbation, ref, amp), exps, opt);
        ce.push_back(out.report.c_emp);
        const auto& det = out.reconstruction->det;
        det_ok = det_ok && det.passed;
        worst_margin = std::min(worst_margin, det.min_abs_det / det.threshold);
    }
    const double ratio = *std::max_element(ce.begin(), ce.end()) / *std::min_element(ce.begin(), ce.end());

    CommandOptions o;
    o.subcommand = "invert";
    o.config = config_dir / "p_zero_invert.json";
    o.out_dir = fs::temp_directory_path() / "fracrte_acceptance_pzero";
    const auto r = run_command(o);
    const bool refused = r.exit_code == kExitHypothesis && r.error_message.find("det R") != std::string::npos;
    report(9, ratio <= 2.0 && det_ok && refused, "Lipschitz stability",
           "c_emp over amplitudes 0.01..0.1 " + list(ce) + " max/min " + sci(ratio) +
               " (<= 2), min det margin " + sci(worst_margin) + "x eps_det scale, p=0 exit code " +
               std::to_string(r.exit_code) + (refused ? " (det R refusal)" : " (not refused)"));
}

// Both pipelines fed the source that is exact for the discrete r-system, so any
// gap comes from the mode handling itself. The gap on forward-solver data is
// printed for reference.
void criterion10() {
    double worst = 0.0, data_gap = 0.0, leak = 0.0;
    for (auto [mode, pin] : {std::pair{InverseMode::SigmaTOnly, "sigma_s"}, std::pair{InverseMode::SigmaSOnly, "sigma_t"}}) {
        auto cfg = twin::config(20, 8, 200);
        cfg.perturbation.pin = pin;
        twin::Data full;
        twin::build(full, cfg);
        cfg.mode = mode;
        twin::Data sc;
        twin::build(sc, cfg);
        const std::size_t c = mode == InverseMode::SigmaTOnly ? 0 : 1;
        const auto rf = solve_r_system(full.g, r_system_source(full.g, full.R, full.reference, full.comps, full.k0),
                                       full.R, full.reference, full.k0);
        const auto rs = solve_r_system(sc.g, r_system_source(sc.g, sc.R, sc.reference, sc.comps, sc.k0), sc.R,
                                       sc.reference, sc.k0);
        worst = std::max(worst, relative_l2_error(sc.g, {rs.march.w[0]}, {rf.march.w[c]}));
        leak = std::max(leak, max_abs(rf.march.w[1 - c].values()));

        auto rec = [](const twin::Data& d) {
            const ReducedOperators ops(d.g, d.twin.perturbed);
            return solve_r_system(d.g, recover_f_at_t0(ops, d.twin.differences, d.k0), d.R, d.reference, d.k0);
        };
        const auto a = rec(full);
        const auto b = rec(sc);
        data_gap = std::max(data_gap, relative_l2_error(sc.g, {b.march.w[0]}, {a.march.w[c]}));
    }
    report(10, worst <= 1e-6, "scalar modes",
           "scalar vs 2x2 component, relative L2 " + sci(worst) + " (<= 1e-6), pinned component max " + sci(leak) +
               "; on forward-solver data the gap is " + sci(data_gap));
}

}  // namespace

int main(int argc, char** argv) {
    const fs::path config_dir = argc > 1 ? fs::path(argv[1]) : fs::path("configs");
    const std::vector<std::function<void()>> all{
        criterion1, criterion2, criterion3, criterion4, criterion5, criterion6,
        criterion7, criterion8, [&] { criterion9(config_dir); }, criterion10};
    for (std::size_t i = 0; i < all.size(); ++i) {
        try {
            all[i]();
        } catch (const std::exception& e) {
            report(static_cast<int>(i + 1), false, "exception", e.what());
        }
    }
    std::printf("%d of %zu criteria failed\n", failures, all.size());
    return failures == 0 ? 0 : 1;
}
