#pragma once

// Half-order Caputo derivative on uniform time series (L1 scheme).

#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "fracrte/grid.hpp"

namespace fracrte::frac {

/// Gamma(1/2) = sqrt(pi).
inline const double kGammaHalf = std::sqrt(std::numbers::pi);
/// Gamma(3/2) = sqrt(pi) / 2.
inline const double kGammaThreeHalves = 0.5 * std::sqrt(std::numbers::pi);

/// Convolution weights of the L1 discretization of the half-order Caputo
/// derivative:
///
///   D u(t_k) = scale * sum_{j<k} b_{k-1-j} (u_{j+1} - u_j),
///   b_m = sqrt(m+1) - sqrt(m),  scale = dt^{-1/2} / Gamma(3/2).
struct CaputoWeights {
    double dt = 0.0;
    double scale = 0.0;
    std::vector<double> b;

    CaputoWeights() = default;
    CaputoWeights(double dt, std::size_t steps);

    /// Weight multiplying the newest increment u_k - u_{k-1}.
    double leading() const { return scale * b[0]; }

    /// History part of D u(t_k): everything except the newest increment.
    double history(std::span<const double> series, std::size_t k) const;
};

/// L1 approximation of the half-order Caputo derivative at t_k, k >= 1.
double caputo_half(const TimeGrid& grid, std::span<const double> series, std::size_t k);

/// caputo_half at every node; the value at t = 0 is 0 by convention.
std::vector<double> caputo_half_series(const TimeGrid& grid, std::span<const double> series);

struct CompositionReport {
    bool hypothesis_ok = true;
    std::string violation;
    double max_deviation = 0.0;
    double l2_deviation = 0.0;
    /// Deviation sampled at the interior nodes that were compared.
    std::vector<double> deviation;
};

/// Compares D^{1/2} D^{1/2} u with the centered difference of u at interior
/// nodes with t >= t_from. Requires u(0) = 0 and a vanishing half-derivative at
/// t = 0 (checked on the first step: |D u(t_1)| <= start_tol * max_k |D u(t_k)|).
/// On violation the report is flagged and no deviation is computed.
CompositionReport check_composition(const TimeGrid& grid, std::span<const double> series,
                                    double t_from = 0.0, double start_tol = 0.1);

/// E_{1/2}(z) = e^{z^2} erfc(-z) for real z. D^{1/2} u = -c u, u(0) = 1 is solved by
/// E_{1/2}(-c sqrt(t)).
double mittag_leffler_half(double z);

}  // namespace fracrte::frac
