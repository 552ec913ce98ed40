#pragma once

// Shared twin-experiment setup for the tests and the acceptance run.

#include <cmath>
#include <numbers>
#include <vector>

#include "fracrte/config.hpp"
#include "fracrte/inverse.hpp"
#include "fracrte/reduction.hpp"
#include "fracrte/scenario.hpp"

namespace twin {

using namespace fracrte;

/// sigma_t = 1 + 0.2 x, sigma_s = 0.5, isotropic p; two experiments with
/// a = 1 and a = 1 + 0.5 v / v1, inflow a (1 + 0.5 sin 2 pi t).
inline RunConfig config(std::size_t nx, std::size_t nv, std::size_t nt, double amplitude = 0.05,
                        const std::string& shape = "sin2", XScheme scheme = XScheme::Upwind2) {
    RunConfig cfg;
    cfg.grid = {1.0, nx, 1.0, 2.0, nv, 1.0, nt, VelocityQuadrature::GaussLegendre};
    cfg.solver.x_scheme = scheme;
    for (double tilt : {0.0, 0.5}) {
        ExperimentSpec e;
        e.initial_value = 1.0;
        e.initial_tilt = tilt;
        e.inflow = "from_initial";
        e.oscillation = 0.5;
        e.frequency = 2.0 * std::numbers::pi;
        cfg.experiments.push_back(e);
    }
    cfg.perturbation.shape = shape;
    cfg.perturbation.amplitudes = {amplitude};
    return cfg;
}

/// Everything derived from one twin run. Owns the objects the operators point to.
struct Data {
    RunConfig cfg;
    PhaseSpaceGrid g;
    CoefficientSet reference;
    std::vector<ProblemData> experiments;
    TwinSolution twin;
    RMatrixField R;
    std::vector<Slice> comps;
    std::size_t k0 = 0;
    std::size_t kd = 0;
};

inline void build(Data& d, const RunConfig& cfg) {
    d.cfg = cfg;
    d.g = make_grid(cfg.grid);
    d.reference = make_reference(d.g, cfg);
    d.experiments = make_experiments(d.g, cfg);
    const auto r = make_perturbation(d.g, cfg.perturbation, d.reference, cfg.perturbation.amplitudes.front());
    d.twin = solve_twin(d.g, d.reference, r, d.experiments, cfg.mode, cfg.solver);
    d.R = build_R(d.g, d.twin.reference_solutions, d.reference, cfg.mode);
    d.comps = d.twin.r.components(cfg.mode);
    d.k0 = d.g.t.index_of(cfg.t0);
    d.kd = static_cast<std::size_t>(std::llround(cfg.delta / d.g.t.dt));
}

}  // namespace twin
