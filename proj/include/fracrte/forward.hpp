#pragma once

// Forward solver for the half-order fractional transport problem
//
//   (D_t^{1/2} + v d_x + sigma_t) u = sigma_s int_V p u dv' + q   in (0,ell) x V x (0,T)
//   u(x,v,0) = a(x,v),   u = g on the inflow boundary.
//
// L1 scheme in time (implicit in the transport and attenuation part), first
// order upwind in x (second order optional), scattering by source iteration.

#include <optional>
#include <string>
#include <vector>

#include "fracrte/coefficients.hpp"
#include "fracrte/field.hpp"
#include "fracrte/grid.hpp"
#include "fracrte/rmatrix.hpp"

namespace fracrte {

/// Inflow data on Gamma_-: stored for both ends and every velocity, only the
/// inflow entries are read. Layout: side (0 = x=0, 1 = x=ell), velocity, time.
class InflowData {
public:
    InflowData() = default;
    explicit InflowData(const PhaseSpaceGrid& g) : values_(2, g.nv(), g.nt_nodes()) {}

    double& operator()(Side side, std::size_t iv, std::size_t it) {
        return values_(side == Side::Left ? 0 : 1, iv, it);
    }
    double operator()(Side side, std::size_t iv, std::size_t it) const {
        return values_(side == Side::Left ? 0 : 1, iv, it);
    }
    const Field& raw() const { return values_; }

private:
    Field values_;
};

struct ProblemData {
    Slice initial;
    InflowData inflow;
    std::optional<Field> source;
};

/// Zero initial value, zero inflow, no source.
ProblemData zero_data(const PhaseSpaceGrid& g);

/// x-differencing of the transport term. Upwind2 is the three-point backward
/// (in the sweep direction) stencil, with a box step on the first cell.
enum class XScheme { Upwind1, Upwind2 };

std::string to_string(XScheme s);
XScheme parse_x_scheme(const std::string& name);

struct SolverOptions {
    double tolerance = 1e-10;
    int max_iterations = 200;
    XScheme x_scheme = XScheme::Upwind1;
};

struct SolveResult {
    Field u;
    int max_source_iterations = 0;
    std::vector<std::string> warnings;
};

SolveResult solve_frte(const PhaseSpaceGrid& g, const CoefficientSet& coeffs,
                       const ProblemData& data, const SolverOptions& opt = {});

/// Solves the vector problem with zero initial/inflow data and source R r,
/// one scalar solve per row of R.
std::vector<Field> solve_difference_system(const PhaseSpaceGrid& g, const CoefficientSet& coeffs,
                                           const RMatrixField& R,
                                           const CoefficientPerturbation& r,
                                           const SolverOptions& opt = {});

/// Source R r for row j of R.
Field difference_source(const RMatrixField& R, const std::vector<Slice>& r, std::size_t row);

/// Max over non-inflow nodes with t > 0 of the discrete defect of the
/// equation, using the solver's own operators.
double residual_frte(const PhaseSpaceGrid& g, const Field& u, const CoefficientSet& coeffs,
                     const ProblemData& data, XScheme scheme = XScheme::Upwind1);

/// First order upwind derivative v d_x u at the non-inflow nodes (the inflow
/// nodes carry 0).
Slice upwind_transport(const PhaseSpaceGrid& g, const Slice& u,
                       XScheme scheme = XScheme::Upwind1);

}  // namespace fracrte
