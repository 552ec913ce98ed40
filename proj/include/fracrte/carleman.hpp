#pragma once

// Carleman weights and empirical evaluation of the weighted estimates.
//
//   alpha = (e^{lambda d} - e^{2 lambda |d|}) / (t (T - t)),  phi = e^{lambda d} / (t (T - t))
//
// and the window versions alpha_delta, phi_delta with (t - t0 + delta)(t0 + delta - t)
// in the denominator. e^{2 s alpha} underflows for any realistic s, so every
// weighted integral is accumulated in log space and reported as a natural log.

#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "fracrte/field.hpp"
#include "fracrte/grid.hpp"

namespace fracrte {

/// d(x) choice. Linear is d = ell - x + kappa with kappa = kappa_fraction * ell;
/// Tabulated takes one value per x node (d > 0 and d' < 0 are checked).
struct DSpec {
    enum class Kind { Linear, Tabulated };
    Kind kind = Kind::Linear;
    double kappa_fraction = 0.1;
    std::vector<double> table;
};

struct WeightParams {
    double lambda = 1.0;
    double s = 1.0;
    double t0 = 0.5;
    double delta = 0.25;
    DSpec d;
};

void validate_weight_params(const WeightParams& p, double t_final);

/// alpha, phi on Q and alpha_delta, phi_delta on Q_delta, tabulated per (x, t) node.
/// Excluded nodes (t = 0, T, and outside the open window for the delta
/// versions) carry alpha = -inf and phi = +inf, so e^{2 s alpha} is exactly 0.
struct WeightField {
    double lambda = 1.0;
    double t0 = 0.5;
    double delta = 0.25;
    TimeGrid t;
    std::vector<double> d, d_x, d_xx;
    double d_norm = 0.0;
    std::size_t nx = 0;
    /// e^{lambda d} - e^{2 lambda |d|}, the common numerator (negative).
    std::vector<double> numerator;
    std::vector<double> alpha, phi, alpha_delta, phi_delta;

    std::size_t at(std::size_t ix, std::size_t k) const { return ix * t.nodes() + k; }
    bool interior(std::size_t k) const { return k > 0 && k < t.nt; }
    bool in_window(std::size_t k) const;
    /// d_t alpha at an interior node.
    double alpha_t(std::size_t ix, std::size_t k) const;
    /// alpha_delta(x, t0): the stationary weight.
    double alpha_delta_t0(std::size_t ix) const {
        return numerator[ix] / (delta * delta);
    }
    /// Largest alpha over the interior of Q.
    double max_alpha() const;
};

WeightField build_weights(const PhaseSpaceGrid& g, const WeightParams& p);

/// z = e^{s alpha - log_shift} u; zero on the excluded time nodes. A shift of
/// s * max_alpha() keeps z representable.
Field conjugate(const PhaseSpaceGrid& g, const Field& u, const WeightField& w, double s,
                double log_shift = 0.0);

struct SplitOperator {
    Field p1, p2, r0;
};

/// P1 z = -v^2 z_xx - s^2 lambda^2 phi^2 d_x^2 v^2 z - s alpha_t z,
/// P2 z = z_t + 2 s lambda phi d_x v^2 z_x,
/// R0 z = -s lambda^2 phi d_x^2 v^2 z - s lambda phi d_xx v^2 z.
/// Central differences; zero on the time-boundary nodes.
SplitOperator split_operator(const PhaseSpaceGrid& g, const Field& z, const WeightField& w,
                             double s);

/// Relative L2 defect of P1 + P2 - R0 against e^{s alpha} L0 (e^{-s alpha} z)
/// for z = e^{s alpha - shift} u, over interior (x, t) nodes.
double conjugation_defect(const PhaseSpaceGrid& g, const Field& u, const WeightField& w, double s);

/// Running log(sum exp(.)) with a fixed accumulation order.
class LogSum {
public:
    void add(double log_term);
    double value() const;

private:
    double max_ = -std::numeric_limits<double>::infinity();
    double sum_ = 0.0;
};

double log_add(double a, double b);

/// All terms as natural logs; -inf means exactly zero.
struct CarlemanReport {
    double lambda = 0.0;
    double s = 0.0;
    double log_lhs = 0.0;
    double log_rhs_interior = 0.0;
    double log_rhs_boundary = 0.0;
    double log_rhs_trace0 = 0.0;
    /// Unweighted boundary integrals and the weight that replaces e^{C(lambda) s}.
    double raw_boundary = 0.0;
    double raw_trace0 = 0.0;
    double log_boundary_weight = 0.0;
    double c_emp = 0.0;

    double log_rhs() const;
    double lhs() const { return std::exp(log_lhs); }
    double rhs_interior() const { return std::exp(log_rhs_interior); }
    double rhs_boundary() const { return std::exp(log_rhs_boundary); }
    double rhs_trace0() const { return std::exp(log_rhs_trace0); }
};

enum class CarlemanDomain { Q, QDelta };

/// Weighted estimate for u solving the reduced parabolic system with right-hand side f
/// (one Field per component; `f(k)` returns the slices at t_k).
///
/// LHS = int [1/(s phi) |u_t|^2 + s lambda^2 phi |u_x|^2 + s^3 lambda^4 phi^3 |u|^2] e^{2 s alpha}
/// RHS = int |f|^2 e^{2 s alpha} + W_b int_{Gamma_+} (|u|^2 + |u_t|^2 + |u_x|^2)
///       + W_b int_V int |u_x(0, v, t)|^2,
/// with W_b the largest s^3 lambda^4 phi^3 e^{2 s alpha} over boundary nodes in the time range.
CarlemanReport evaluate_parabolic_estimate(
    const PhaseSpaceGrid& g, const std::vector<Field>& u,
    const std::function<std::vector<Slice>(std::size_t)>& f, const WeightField& w, double s,
    CarlemanDomain domain);

/// LHS = int (|w_x|^2 + s^2 |w|^2) e^{2 s alpha_delta(x, t0)}, RHS = int |F|^2 e^{2 s alpha_delta(x, t0)}.
/// When F is absent it is computed from w_x + b w + int c w.
CarlemanReport evaluate_stationary_estimate(const PhaseSpaceGrid& g, const Slice& w,
                                            const std::optional<Slice>& F, const Slice& b,
                                            const Kernel& c, const WeightField& weights, double s);

struct SweepPoint {
    double lambda = 1.0;
    double s = 1.0;
};

/// Evaluates `eval(lambda, s)` over the lattice in the given order.
std::vector<CarlemanReport> sweep(const std::vector<SweepPoint>& lattice,
                                  const std::function<CarlemanReport(double, double)>& eval);

/// Smallest s (for one lambda) from which c_emp is non-increasing along the
/// increasing s lattice; empty when only the last point qualifies.
std::optional<double> find_knee(const std::vector<CarlemanReport>& rows, double lambda);

/// Lattice from lambda and s lists (lambda outer, s inner).
std::vector<SweepPoint> make_lattice(const std::vector<double>& lambdas,
                                     const std::vector<double>& s_values);

/// Centered time derivative of every lane (one-sided at the ends).
Field time_derivative(const PhaseSpaceGrid& g, const Field& u);

}  // namespace fracrte
