#include "fracrte/coefficients.hpp"

#include <cmath>

namespace fracrte {

CoefficientSet::CoefficientSet(Slice sigma_t, Slice sigma_s, Kernel p, double bound_M)
    : sigma_t_(std::move(sigma_t)), sigma_s_(std::move(sigma_s)), p_(std::move(p)),
      bound_M_(bound_M) {
    require(sigma_t_.same_shape(sigma_s_), "sigma_t and sigma_s shapes differ");
    require(p_.nx() == sigma_t_.nx() && p_.nv() == sigma_t_.nv(),
            "phase function shape does not match the coefficients");
    require(bound_M_ > 0.0, "bound M must be positive");
    for (double x : sigma_t_.values()) require(std::isfinite(x), "sigma_t is not finite");
    for (double x : sigma_s_.values()) require(std::isfinite(x), "sigma_s is not finite");
    for (double x : p_.values()) {
        require(std::isfinite(x), "phase function is not finite");
        require(x >= 0.0, "phase function must be non-negative");
    }
    require(max_abs(sigma_t_.values()) <= bound_M_, "||sigma_t||_inf exceeds M");
    require(max_abs(sigma_s_.values()) <= bound_M_, "||sigma_s||_inf exceeds M");
}

bool CoefficientSet::strictly_positive_phase() const {
    for (double x : p_.values())
        if (!(x > 0.0)) return false;
    return true;
}

Slice CoefficientSet::phase_integral(const VelocityGrid& v, const Slice& u) const {
    require(u.same_shape(sigma_t_), "field slice does not match the coefficients");
    Slice out(u.nx(), u.nv());
    for (std::size_t ix = 0; ix < u.nx(); ++ix) {
        const auto urow = u.row(ix);
        for (std::size_t iv = 0; iv < u.nv(); ++iv) {
            const auto prow = p_.row(ix, iv);
            double acc = 0.0;
            for (std::size_t jv = 0; jv < u.nv(); ++jv) acc += v.weights[jv] * prow[jv] * urow[jv];
            out(ix, iv) = acc;
        }
    }
    return out;
}

Slice CoefficientSet::scatter(const VelocityGrid& v, const Slice& u) const {
    Slice out = phase_integral(v, u);
    for (std::size_t ix = 0; ix < u.nx(); ++ix)
        for (std::size_t iv = 0; iv < u.nv(); ++iv) out(ix, iv) *= sigma_s_(ix, iv);
    return out;
}

CoefficientSet constant_coefficients(const PhaseSpaceGrid& g, double sigma_t, double sigma_s,
                                     double bound_M) {
    return CoefficientSet(g.make_slice(sigma_t), g.make_slice(sigma_s),
                          g.make_kernel(1.0 / g.v.measure()), bound_M);
}

CoefficientSet vacuum_coefficients(const PhaseSpaceGrid& g) {
    return constant_coefficients(g, 0.0, 0.0, 1.0);
}

}  // namespace fracrte
