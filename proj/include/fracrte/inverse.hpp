#pragma once

// Coefficient recovery for the fractional transport problem.
//
// Two coefficient sets sigma^(1) = sigma^(2) + r share the phase function.
// With u_j = u_j^(1) - u_j^(2) and R built from the reference solutions
// u_j^(2), the perturbation r solves the first-order system in x
//
//   d_x r + A r + int_V D r' dv' = -(1/v) R^{-1} f(., ., t0),
//   A = (1/v) R^{-1} [v d_x R + sigma_t R - D^{1/2} R - R(.,.,0) / (Gamma(1/2) sqrt(t0))],
//   D = -(sigma_s / v) p R^{-1}(x,v,t0) R(x,v',t0),
//
// with r(0, v) = 0, where f(., ., t0) is recovered from the snapshot data.

#include <optional>
#include <string>
#include <vector>

#include "fracrte/coefficients.hpp"
#include "fracrte/field.hpp"
#include "fracrte/forward.hpp"
#include "fracrte/grid.hpp"
#include "fracrte/reduction.hpp"
#include "fracrte/rmatrix.hpp"

namespace fracrte {

/// R from the reference solutions u_j^(2). Full mode needs two experiments,
/// the scalar modes use the first one.
RMatrixField build_R(const PhaseSpaceGrid& g, const std::vector<Field>& reference_solutions,
                     const CoefficientSet& coeffs, InverseMode mode);

struct DetMargin {
    double min_abs_det = 0.0;
    /// Scale the threshold is relative to: (max_{x,v} |R(x,v,t0)|_F)^dim.
    double scale = 0.0;
    double threshold = 0.0;
    std::size_t worst_ix = 0;
    std::size_t worst_iv = 0;
    bool passed = false;
};

/// min |det R(., ., t_k0)| against eps_det times the R scale.
DetMargin check_detR(const RMatrixField& R, std::size_t k0, double eps_det = 1e-8);

/// f_j(., ., t0) = d_t u_j - v^2 d_x^2 u_j - L1 u_j - int K u_j at t_k0, with a
/// centered time difference. `ops` carries sigma^(1).
std::vector<Slice> recover_f_at_t0(const ReducedOperators& ops, const std::vector<Field>& u,
                                   std::size_t k0);

enum class MarchScheme { ImplicitEuler, Trapezoid };

struct MarchOptions {
    MarchScheme scheme = MarchScheme::Trapezoid;
    double tolerance = 1e-12;
    int max_iterations = 500;
    double damping = 1.0;
};

/// d_x w + A w + int_V D w' dv' = G on the x-v grid with w(0, v) = 0.
/// A is dim x dim per (x, v), D is dim x dim per (x, v, v').
struct FirstOrderSystem {
    std::size_t dim = 1;
    std::size_t nx = 0;
    std::size_t nv = 0;
    std::vector<double> A;
    std::vector<double> D;
    std::vector<double> G;

    FirstOrderSystem() = default;
    FirstOrderSystem(std::size_t dim, std::size_t nx, std::size_t nv);

    double& a(std::size_t ix, std::size_t iv, std::size_t r, std::size_t c) {
        return A[((ix * nv + iv) * dim + r) * dim + c];
    }
    double a(std::size_t ix, std::size_t iv, std::size_t r, std::size_t c) const {
        return A[((ix * nv + iv) * dim + r) * dim + c];
    }
    double& d(std::size_t ix, std::size_t iv, std::size_t jv, std::size_t r, std::size_t c) {
        return D[(((ix * nv + iv) * nv + jv) * dim + r) * dim + c];
    }
    double d(std::size_t ix, std::size_t iv, std::size_t jv, std::size_t r, std::size_t c) const {
        return D[(((ix * nv + iv) * nv + jv) * dim + r) * dim + c];
    }
    double& rhs(std::size_t ix, std::size_t iv, std::size_t r) {
        return G[(ix * nv + iv) * dim + r];
    }
    double rhs(std::size_t ix, std::size_t iv, std::size_t r) const {
        return G[(ix * nv + iv) * dim + r];
    }
};

struct MarchResult {
    std::vector<Slice> w;
    int max_picard_iterations = 0;
    /// Largest observed ratio of successive Picard updates.
    double contraction = 0.0;
    std::size_t direct_steps = 0;
};

MarchResult march_system(const PhaseSpaceGrid& g, const FirstOrderSystem& sys,
                         const MarchOptions& opt = {});

/// The discrete left-hand side of the marched system applied to w: the G for
/// which march_system reproduces w exactly (w(0, .) must vanish).
std::vector<double> march_operator(const PhaseSpaceGrid& g, const FirstOrderSystem& sys,
                                   const std::vector<Slice>& w, MarchScheme scheme);

/// Builds A and D (G left zero) from R at t_k0 and the coefficients.
FirstOrderSystem assemble_r_system(const PhaseSpaceGrid& g, const RMatrixField& R,
                                   const SourceBuilder& sources, const CoefficientSet& coeffs,
                                   std::size_t k0);

struct RSolveResult {
    CoefficientPerturbation r;
    MarchResult march;
    DetMargin det;
};

RSolveResult solve_r_system(const PhaseSpaceGrid& g, const std::vector<Slice>& f_t0,
                            const RMatrixField& R, const CoefficientSet& coeffs, std::size_t k0,
                            double eps_det = 1e-8, const MarchOptions& opt = {});

/// f at t_k0 for which solve_r_system returns r exactly (up to its tolerance):
/// the marched system's discrete operator mapped back through -v R.
std::vector<Slice> r_system_source(const PhaseSpaceGrid& g, const RMatrixField& R,
                                   const CoefficientSet& coeffs, const std::vector<Slice>& r,
                                   std::size_t k0, MarchScheme scheme = MarchScheme::Trapezoid);

/// Perturbed coefficients sigma^(1) = sigma^(2) + r; p is shared.
CoefficientSet perturb(const CoefficientSet& reference, const CoefficientPerturbation& r);

/// Relative L2(Omega x V) error over all components.
double relative_l2_error(const PhaseSpaceGrid& g, const std::vector<Slice>& approx,
                         const std::vector<Slice>& exact);

/// Forward solutions of a twin experiment: both coefficient sets, the first
/// m experiments (m = 2 in Full mode, 1 otherwise).
struct TwinSolution {
    /// The perturbation actually used (the other component zeroed in scalar modes).
    CoefficientPerturbation r;
    CoefficientSet perturbed;
    /// u_j^(2), solved with the reference coefficients.
    std::vector<Field> reference_solutions;
    /// u_j^(1) - u_j^(2)
    std::vector<Field> differences;
    std::vector<std::string> warnings;
};

/// Checks r(0, v) = 0 and runs the 2m forward solves (concurrently when threads > 1).
TwinSolution solve_twin(const PhaseSpaceGrid& g, const CoefficientSet& reference,
                        const CoefficientPerturbation& r,
                        const std::vector<ProblemData>& experiments, InverseMode mode,
                        const SolverOptions& forward = {}, int threads = 1);

struct StabilityReport {
    double lhs = 0.0;
    double rhs_interior = 0.0;
    double rhs_boundary = 0.0;
    double rhs_trace0 = 0.0;
    double c_emp = 0.0;

    double rhs() const { return rhs_interior + rhs_boundary + rhs_trace0; }
};

struct ReconstructionResult {
    CoefficientPerturbation recovered;
    CoefficientPerturbation truth;
    double relative_error = 0.0;
    DetMargin det;
    MarchResult march;
};

struct StabilityOptions {
    double t0 = 0.5;
    double delta = 0.25;
    InverseMode mode = InverseMode::Full;
    /// Drop the x = 0 trace term and use the H^1(Gamma_+; H^2) boundary norm.
    bool remark_variant = false;
    double eps_det = 1e-8;
    bool reconstruct = true;
    SolverOptions forward;
    MarchOptions march;
    /// Solve the four forward problems concurrently.
    int threads = 1;
};

struct StabilityOutcome {
    StabilityReport report;
    std::optional<ReconstructionResult> reconstruction;
    std::vector<std::string> warnings;
};

/// Sum over components of ||r_c||^2_{H^1(Omega; L2(V))}.
double perturbation_norm(const PhaseSpaceGrid& g, const CoefficientPerturbation& r,
                         InverseMode mode);

/// Right-hand side norms of the stability estimate for the solution differences.
StabilityReport stability_rhs(const PhaseSpaceGrid& g, const std::vector<Field>& u,
                              std::size_t k0, std::size_t half_window, bool remark_variant);

/// Forward-solves both experiments for both coefficient sets, evaluates every
/// norm of the stability estimate and (optionally) reconstructs r.
StabilityOutcome run_stability_experiment(const PhaseSpaceGrid& g,
                                          const CoefficientSet& reference,
                                          const CoefficientPerturbation& r,
                                          const std::vector<ProblemData>& experiments,
                                          const StabilityOptions& opt);

}  // namespace fracrte
