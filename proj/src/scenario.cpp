#include "fracrte/scenario.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "fracrte/error.hpp"
#include "fracrte/fraccalc.hpp"

namespace fracrte {

namespace {

std::filesystem::path resolve(const RunConfig& cfg, const std::string& file) {
    std::filesystem::path p(file);
    if (p.is_relative() && !cfg.base_dir.empty()) p = cfg.base_dir / p;
    return p;
}

Slice sample_sigma(const PhaseSpaceGrid& g, const RunConfig& cfg, const SigmaSpec& s,
                   const char* name) {
    Slice out = g.make_slice();
    if (s.preset == "tabulated") {
        const auto vals = read_table_column(resolve(cfg, s.file), g.nx() * g.nv());
        std::copy(vals.begin(), vals.end(), out.values().begin());
        return out;
    }
    const double ell = g.x.ell;
    for (std::size_t ix = 0; ix < g.nx(); ++ix) {
        const double x = g.x.nodes[ix];
        double val = s.value;
        if (s.preset == "linear") {
            val += s.slope * x / ell;
        } else if (s.preset == "bump") {
            const double z = (x - s.center) / s.width;
            val += s.amplitude * std::exp(-z * z);
        } else if (s.preset != "constant") {
            throw PreconditionError(std::string(name) + ": unknown preset '" + s.preset + "'");
        }
        for (std::size_t iv = 0; iv < g.nv(); ++iv) out(ix, iv) = val;
    }
    return out;
}

Kernel sample_phase(const PhaseSpaceGrid& g, const RunConfig& cfg) {
    const auto& p = cfg.p;
    const double inv = 1.0 / g.v.measure();
    if (p.preset == "isotropic") return g.make_kernel(inv);
    if (p.preset == "zero") return g.make_kernel(0.0);
    Kernel k = g.make_kernel();
    if (p.preset == "tabulated") {
        const auto vals = read_table_column(resolve(cfg, p.file), g.nx() * g.nv() * g.nv());
        std::copy(vals.begin(), vals.end(), k.values().begin());
        return k;
    }
    if (p.preset != "linear_anisotropic")
        throw PreconditionError("p: unknown preset '" + p.preset + "'");
    const double v1 = g.v.v1;
    for (std::size_t ix = 0; ix < g.nx(); ++ix)
        for (std::size_t iv = 0; iv < g.nv(); ++iv)
            for (std::size_t jv = 0; jv < g.nv(); ++jv)
                k(ix, iv, jv) = (1.0 + p.g * g.v.nodes[iv] * g.v.nodes[jv] / (v1 * v1)) * inv;
    return k;
}

}  // namespace

std::vector<double> read_table_column(const std::filesystem::path& path, std::size_t expected_rows) {
    std::ifstream in(path);
    if (!in) throw PreconditionError("cannot read table " + path.string());
    std::string line;
    std::getline(in, line);  // header
    std::vector<double> vals;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto comma = line.find_last_of(',');
        const std::string cell = comma == std::string::npos ? line : line.substr(comma + 1);
        char* end = nullptr;
        const double x = std::strtod(cell.c_str(), &end);
        if (end == cell.c_str() || !std::isfinite(x))
            throw PreconditionError(path.string() + ":" + std::to_string(lineno) + ": bad value '" + cell + "'");
        vals.push_back(x);
    }
    if (vals.size() != expected_rows)
        throw PreconditionError(path.string() + ": expected " + std::to_string(expected_rows) +
                                " data rows, found " + std::to_string(vals.size()));
    return vals;
}

PhaseSpaceGrid make_grid(const GridSpec& spec) { return build_grid(spec); }

CoefficientSet make_reference(const PhaseSpaceGrid& g, const RunConfig& cfg) {
    Slice st = sample_sigma(g, cfg, cfg.sigma_t, "sigma_t");
    Slice ss = sample_sigma(g, cfg, cfg.sigma_s, "sigma_s");
    try {
        return CoefficientSet(std::move(st), std::move(ss), sample_phase(g, cfg), cfg.bound_M);
    } catch (const PreconditionError&) {
        throw;
    } catch (const Error& e) {
        throw PreconditionError(std::string("coefficients: ") + e.what());
    }
}

ProblemData make_experiment(const PhaseSpaceGrid& g, const ExperimentSpec& e) {
    ProblemData d = zero_data(g);
    const double v1 = g.v.v1;
    for (std::size_t ix = 0; ix < g.nx(); ++ix)
        for (std::size_t iv = 0; iv < g.nv(); ++iv)
            d.initial(ix, iv) = e.initial_value * (1.0 + e.initial_tilt * g.v.nodes[iv] / v1);

    for (std::size_t iv = 0; iv < g.nv(); ++iv) {
        // only the inflow end of each velocity is read by the solver
        const Side side = g.v.positive(iv) ? Side::Left : Side::Right;
        const std::size_t ix = side == Side::Left ? 0 : g.nx() - 1;
        for (std::size_t k = 0; k < g.nt_nodes(); ++k) {
            const double t = g.t.time(k);
            double val = 0.0;
            if (e.inflow == "from_initial")
                val = d.initial(ix, iv) * (1.0 + e.oscillation * std::sin(e.frequency * t));
            else if (e.inflow == "constant")
                val = e.inflow_value;
            else if (e.inflow == "mittag_leffler")
                val = e.inflow_value * frac::mittag_leffler_half(-e.rate * std::sqrt(t));
            else if (e.inflow != "zero")
                throw PreconditionError("unknown inflow kind '" + e.inflow + "'");
            d.inflow(side, iv, k) = val;
        }
    }
    return d;
}

std::vector<ProblemData> make_experiments(const PhaseSpaceGrid& g, const RunConfig& cfg) {
    std::vector<ProblemData> out;
    for (const auto& e : cfg.experiments) out.push_back(make_experiment(g, e));
    return out;
}

CoefficientPerturbation make_perturbation(const PhaseSpaceGrid& g, const PerturbationSpec& spec,
                                          const CoefficientSet& reference, double amplitude) {
    const double scale = std::max(max_abs(reference.sigma_t().values()),
                                  max_abs(reference.sigma_s().values()));
    const double ell = g.x.ell;
    const double v1 = g.v.v1;
    CoefficientPerturbation r{g.make_slice(), g.make_slice()};
    for (std::size_t ix = 0; ix < g.nx(); ++ix) {
        const double x = g.x.nodes[ix];
        double b = 0.0;
        if (spec.shape == "sin2") {
            const double sn = std::sin(std::numbers::pi * x / (2.0 * ell));
            b = sn * sn;
        } else if (spec.shape == "poly") {
            b = 16.0 * x * x * (ell - x) * (ell - x) / std::pow(ell, 4);
        } else if (spec.shape == "linear") {
            b = x / ell;
        } else if (spec.shape != "zero") {
            throw PreconditionError("unknown perturbation shape '" + spec.shape + "'");
        }
        for (std::size_t iv = 0; iv < g.nv(); ++iv) {
            const double tv = spec.tilt * g.v.nodes[iv] / v1;
            r.r_t(ix, iv) = amplitude * scale * b * (1.0 + tv);
            r.r_s(ix, iv) = amplitude * scale * b * (1.0 - tv);
        }
    }
    if (spec.pin == "sigma_t") r.r_t = g.make_slice();
    if (spec.pin == "sigma_s") r.r_s = g.make_slice();
    return r;
}

WeightParams make_weight_params(const PhaseSpaceGrid& g, const RunConfig& cfg, double lambda,
                                double s) {
    WeightParams p;
    p.lambda = lambda;
    p.s = s;
    p.t0 = cfg.t0;
    p.delta = cfg.delta;
    p.d = cfg.d;
    if (p.d.kind == DSpec::Kind::Tabulated && p.d.table.empty())
        p.d.table = read_table_column(resolve(cfg, cfg.d_file), g.nx());
    return p;
}

StabilityOptions make_stability_options(const RunConfig& cfg, int threads) {
    StabilityOptions o;
    o.t0 = cfg.t0;
    o.delta = cfg.delta;
    o.mode = cfg.mode;
    o.remark_variant = cfg.remark_variant;
    o.eps_det = cfg.eps_det;
    o.forward = cfg.solver;
    o.march = cfg.march;
    o.threads = threads;
    return o;
}

}  // namespace fracrte
