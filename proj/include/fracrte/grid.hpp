#pragma once

// Phase-space discretization of the slab (0, ell) x V x (0, T), where
// V = [-v1, -v0] u [v0, v1] is the two-branch velocity set.

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "fracrte/field.hpp"

namespace fracrte {

struct SpatialGrid {
    double ell = 1.0;
    std::size_t nx = 0;
    double h = 0.0;
    std::vector<double> nodes;

    /// Composite trapezoid weights on the nodes.
    std::vector<double> weights() const;
};

enum class VelocityQuadrature { GaussLegendre, Trapezoid };

/// Velocity nodes are ordered negative branch first (ascending from -v1 to
/// -v0), then the positive branch (ascending from v0 to v1). Each branch has
/// `nv` nodes, so `nodes.size() == 2 * nv`.
struct VelocityGrid {
    double v0 = 0.0;
    double v1 = 0.0;
    std::size_t nv = 0;
    VelocityQuadrature rule = VelocityQuadrature::GaussLegendre;
    std::vector<double> nodes;
    std::vector<double> weights;

    std::size_t size() const { return nodes.size(); }
    bool positive(std::size_t iv) const { return iv >= nv; }
    /// |V| = 2 (v1 - v0).
    double measure() const { return 2.0 * (v1 - v0); }
};

struct TimeGrid {
    double t_final = 1.0;
    std::size_t nt = 0;
    double dt = 0.0;

    std::size_t nodes() const { return nt + 1; }
    double time(std::size_t k) const { return static_cast<double>(k) * dt; }
    /// Index of the node closest to t.
    std::size_t index_of(double t) const;
};

enum class Side { Left, Right };

/// One half of a boundary set: the velocities attached to one end of the slab.
struct BoundarySet {
    Side side = Side::Left;
    /// Outward normal: -1 at x = 0, +1 at x = ell.
    int nu = -1;
    std::vector<std::size_t> velocities;
};

struct PhaseSpaceGrid {
    SpatialGrid x;
    VelocityGrid v;
    TimeGrid t;

    std::size_t nx() const { return x.nx; }
    std::size_t nv() const { return v.size(); }
    std::size_t nt_nodes() const { return t.nodes(); }

    Slice make_slice(double fill = 0.0) const { return Slice(nx(), nv(), fill); }
    Field make_field(double fill = 0.0) const { return Field(nx(), nv(), nt_nodes(), fill); }
    Kernel make_kernel(double fill = 0.0) const { return Kernel(nx(), nv(), fill); }

    /// Outflow boundary: (0, v<0) and (ell, v>0).
    std::vector<BoundarySet> gamma_plus() const;
    /// Inflow boundary: (0, v>0) and (ell, v<0).
    std::vector<BoundarySet> gamma_minus() const;
    /// True when (x_ix, v_iv) lies on the inflow boundary.
    bool is_inflow(std::size_t ix, std::size_t iv) const;
    bool is_outflow(std::size_t ix, std::size_t iv) const;
};

struct GridSpec {
    double ell = 1.0;
    std::size_t nx = 0;
    double v0 = 0.0;
    double v1 = 0.0;
    std::size_t nv = 0;
    double t_final = 1.0;
    std::size_t nt = 0;
    VelocityQuadrature rule = VelocityQuadrature::GaussLegendre;
};

PhaseSpaceGrid build_grid(const GridSpec& spec);

/// Gauss-Legendre nodes and weights on [-1, 1].
void gauss_legendre(std::size_t n, std::vector<double>& nodes, std::vector<double>& weights);

/// Quadrature approximation of the integral over V.
double integrate_velocity(const VelocityGrid& v, std::span<const double> samples);

enum class NormKind { L2, H1, H2 };

NormKind parse_norm_kind(const std::string& name);

/// Squared discrete norm of an x-v slice: L2(Omega x V), H1(Omega; L2(V)) or
/// H2(Omega; L2(V)). Trapezoid rule in x, velocity quadrature in v.
double discrete_norm(const PhaseSpaceGrid& g, const Slice& f, NormKind kind);

// Finite differences in x on a slice. Central in the interior, second-order
// one-sided at the endpoints (first order when nx == 2).
Slice ddx(const Slice& f, double h);
Slice d2dx2(const Slice& f, double h);

/// Same stencils on a single sampled function.
std::vector<double> ddx(std::span<const double> f, double h);
std::vector<double> d2dx2(std::span<const double> f, double h);

}  // namespace fracrte
