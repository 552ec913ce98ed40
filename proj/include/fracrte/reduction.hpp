#pragma once

// First-order-in-time form of the difference problem. Applying D^{1/2} to the
// half-order equation gives
//
//   d_t u - v^2 d_x^2 u - L1 u - int_V K u dv' = f,
//
//   L1 u = 2 v sigma_t d_x u + (v d_x sigma_t + sigma_t^2) u,
//   K u  = -v d_x(sigma_s p) u' - sigma_s p ((v+v') d_x + sigma_t + sigma_t') u'
//          + sigma_s u' int_V sigma_s(v'') p(v,v'') p(v'',v') dv'',
//
// with the source f assembled from R, r and the coefficients.

#include <functional>
#include <vector>

#include "fracrte/coefficients.hpp"
#include "fracrte/field.hpp"
#include "fracrte/grid.hpp"
#include "fracrte/rmatrix.hpp"

namespace fracrte {

/// L1, K and v^2 d_x^2 for one coefficient set, with the coefficient
/// derivatives and the double-scattering kernel precomputed.
class ReducedOperators {
public:
    ReducedOperators(const PhaseSpaceGrid& g, const CoefficientSet& coeffs);
    // keeps pointers to both arguments
    ReducedOperators(const PhaseSpaceGrid&, CoefficientSet&&) = delete;
    ReducedOperators(PhaseSpaceGrid&&, const CoefficientSet&) = delete;

    const PhaseSpaceGrid& grid() const { return *grid_; }
    const CoefficientSet& coeffs() const { return *coeffs_; }

    const Slice& dsigma_t_dx() const { return dsigma_t_; }
    const Kernel& dsigma_s_p_dx() const { return dsp_; }
    /// int_V sigma_s(x,v'') p(x,v,v'') p(x,v'',v') dv''
    const Kernel& double_scatter() const { return double_; }

    Slice apply_L1(const Slice& u) const;
    /// int_V K(x,v,v') u(x,v') dv'
    Slice apply_K(const Slice& u) const;
    /// v^2 d_x^2 u, second-order central (one-sided at the ends).
    Slice diffusion(const Slice& u) const;
    /// v^2 d_x^2 u + L1 u + int K u
    Slice spatial(const Slice& u) const;

private:
    const PhaseSpaceGrid* grid_;
    const CoefficientSet* coeffs_;
    Slice dsigma_t_;
    Kernel dsp_;
    Kernel double_;
};

/// u_hat = u - (2 sqrt(t) / Gamma(1/2)) R(x,v,0) r. Vanishes at t = 0 whenever u does.
std::vector<Field> hat_transform(const PhaseSpaceGrid& g, const std::vector<Field>& u,
                                 const RMatrixField& R, const std::vector<Slice>& r);

/// Assembles f and d_t f from R, r and the coefficients. The half-order time
/// derivative of R is computed once per lane at construction.
class SourceBuilder {
public:
    SourceBuilder(const PhaseSpaceGrid& g, const CoefficientSet& coeffs, const RMatrixField& R);
    SourceBuilder(const PhaseSpaceGrid&, CoefficientSet&&, const RMatrixField&) = delete;
    SourceBuilder(const PhaseSpaceGrid&, const CoefficientSet&, RMatrixField&&) = delete;

    /// f(., ., t_k) for each row of R. k >= 1.
    std::vector<Slice> f(const std::vector<Slice>& r, std::size_t k) const;
    /// d_t f(., ., t_k) for each row of R. k >= 1.
    std::vector<Slice> ft(const std::vector<Slice>& r, std::size_t k) const;

    const RMatrixField& R() const { return *R_; }
    /// D^{1/2} R entry (j, c).
    const Field& half_derivative(std::size_t j, std::size_t c) const {
        return half_[j * R_->dim + c];
    }

private:
    /// f-type assembly shared by f and ft: the caller supplies the R-like slices.
    std::vector<Slice> assemble(const std::vector<Slice>& r, const std::vector<Slice>& Rk,
                                const std::vector<Slice>& halfk, double singular) const;

    const PhaseSpaceGrid* grid_;
    const CoefficientSet* coeffs_;
    const RMatrixField* R_;
    std::vector<Field> half_;
};

std::vector<Slice> build_f(const PhaseSpaceGrid& g, const RMatrixField& R,
                           const std::vector<Slice>& r, const CoefficientSet& coeffs,
                           std::size_t k);
std::vector<Slice> build_ft(const PhaseSpaceGrid& g, const RMatrixField& R,
                            const std::vector<Slice>& r, const CoefficientSet& coeffs,
                            std::size_t k);

struct ReducedResidual {
    double max_defect = 0.0;
    double l2_defect = 0.0;
    double max_dtu = 0.0;
    double l2_dtu = 0.0;

    double relative_max() const { return max_dtu > 0.0 ? max_defect / max_dtu : max_defect; }
    double relative_l2() const { return l2_dtu > 0.0 ? l2_defect / l2_dtu : l2_defect; }
};

/// Defect of the first-order system over time nodes k_first..k_last and
/// interior x nodes, using a backward difference for d_t and the operators
/// above. `source(k)` returns f at t_k for each component.
ReducedResidual residual_reduced(const ReducedOperators& ops, const std::vector<Field>& u,
                                 const std::function<std::vector<Slice>(std::size_t)>& source,
                                 std::size_t k_first, std::size_t k_last);

}  // namespace fracrte
