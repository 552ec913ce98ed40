#pragma once

#include "fracrte/field.hpp"
#include "fracrte/grid.hpp"

namespace fracrte {

/// sigma_t, sigma_s and the phase function p sampled on the grid.
///
/// p may vanish (a p = 0 configuration is how the det R gate is exercised),
/// but it may not be negative. `strictly_positive_phase()` reports whether the
/// p > 0 hypothesis of the stability theory holds.
class CoefficientSet {
public:
    CoefficientSet() = default;
    CoefficientSet(Slice sigma_t, Slice sigma_s, Kernel p, double bound_M);

    const Slice& sigma_t() const { return sigma_t_; }
    const Slice& sigma_s() const { return sigma_s_; }
    const Kernel& p() const { return p_; }
    double bound_M() const { return bound_M_; }

    std::size_t nx() const { return sigma_t_.nx(); }
    std::size_t nv() const { return sigma_t_.nv(); }

    bool strictly_positive_phase() const;

    /// sigma_s(x,v) * int_V p(x,v,v') u(x,v') dv'
    Slice scatter(const VelocityGrid& v, const Slice& u) const;
    /// int_V p(x,v,v') u(x,v') dv' (no sigma_s factor)
    Slice phase_integral(const VelocityGrid& v, const Slice& u) const;

private:
    Slice sigma_t_;
    Slice sigma_s_;
    Kernel p_;
    double bound_M_ = 0.0;
};

/// Vacuum: sigma_t = sigma_s = 0, p = 1/|V|.
CoefficientSet vacuum_coefficients(const PhaseSpaceGrid& g);

/// Spatially and angularly constant coefficients with isotropic p = 1/|V|.
CoefficientSet constant_coefficients(const PhaseSpaceGrid& g, double sigma_t, double sigma_s,
                                     double bound_M);

}  // namespace fracrte
