#include "fracrte/reduction.hpp"

#include <algorithm>
#include <cmath>

#include "fracrte/error.hpp"
#include "fracrte/fraccalc.hpp"

namespace fracrte {

ReducedOperators::ReducedOperators(const PhaseSpaceGrid& g, const CoefficientSet& coeffs)
    : grid_(&g), coeffs_(&coeffs) {
    require(coeffs.nx() == g.nx() && coeffs.nv() == g.nv(), "coefficients do not match the grid");
    require(g.nx() >= 3, "reduced operators need at least three x nodes");
    const std::size_t nx = g.nx();
    const std::size_t nv = g.nv();
    const auto& st = coeffs.sigma_t();
    const auto& ss = coeffs.sigma_s();
    const auto& p = coeffs.p();

    dsigma_t_ = ddx(st, g.x.h);

    dsp_ = g.make_kernel();
    std::vector<double> col(nx);
    for (std::size_t iv = 0; iv < nv; ++iv)
        for (std::size_t jv = 0; jv < nv; ++jv) {
            for (std::size_t ix = 0; ix < nx; ++ix) col[ix] = ss(ix, iv) * p(ix, iv, jv);
            const auto d = ddx(col, g.x.h);
            for (std::size_t ix = 0; ix < nx; ++ix) dsp_(ix, iv, jv) = d[ix];
        }

    double_ = g.make_kernel();
    for (std::size_t ix = 0; ix < nx; ++ix)
        for (std::size_t iv = 0; iv < nv; ++iv)
            for (std::size_t jv = 0; jv < nv; ++jv) {
                double acc = 0.0;
                for (std::size_t kv = 0; kv < nv; ++kv)
                    acc += g.v.weights[kv] * ss(ix, kv) * p(ix, iv, kv) * p(ix, kv, jv);
                double_(ix, iv, jv) = acc;
            }
}

Slice ReducedOperators::apply_L1(const Slice& u) const {
    const auto& g = *grid_;
    require(u.nx() == g.nx() && u.nv() == g.nv(), "slice does not match the grid");
    const auto& st = coeffs_->sigma_t();
    const Slice ux = ddx(u, g.x.h);
    Slice out(u.nx(), u.nv());
    for (std::size_t ix = 0; ix < u.nx(); ++ix)
        for (std::size_t iv = 0; iv < u.nv(); ++iv) {
            const double v = g.v.nodes[iv];
            const double s = st(ix, iv);
            out(ix, iv) = 2.0 * v * s * ux(ix, iv) + (v * dsigma_t_(ix, iv) + s * s) * u(ix, iv);
        }
    return out;
}

Slice ReducedOperators::apply_K(const Slice& u) const {
    const auto& g = *grid_;
    require(u.nx() == g.nx() && u.nv() == g.nv(), "slice does not match the grid");
    const auto& st = coeffs_->sigma_t();
    const auto& ss = coeffs_->sigma_s();
    const auto& p = coeffs_->p();
    const Slice ux = ddx(u, g.x.h);
    Slice out(u.nx(), u.nv());
    for (std::size_t ix = 0; ix < u.nx(); ++ix)
        for (std::size_t iv = 0; iv < u.nv(); ++iv) {
            const double v = g.v.nodes[iv];
            double acc = 0.0;
            for (std::size_t jv = 0; jv < u.nv(); ++jv) {
                const double vp = g.v.nodes[jv];
                double k = -v * dsp_(ix, iv, jv) * u(ix, jv);
                k -= ss(ix, iv) * p(ix, iv, jv) *
                     ((v + vp) * ux(ix, jv) + (st(ix, iv) + st(ix, jv)) * u(ix, jv));
                k += ss(ix, iv) * u(ix, jv) * double_(ix, iv, jv);
                acc += g.v.weights[jv] * k;
            }
            out(ix, iv) = acc;
        }
    return out;
}

Slice ReducedOperators::diffusion(const Slice& u) const {
    const auto& g = *grid_;
    Slice out = d2dx2(u, g.x.h);
    for (std::size_t ix = 0; ix < u.nx(); ++ix)
        for (std::size_t iv = 0; iv < u.nv(); ++iv) {
            const double v = g.v.nodes[iv];
            out(ix, iv) *= v * v;
        }
    return out;
}

Slice ReducedOperators::spatial(const Slice& u) const {
    Slice out = diffusion(u);
    out += apply_L1(u);
    out += apply_K(u);
    return out;
}

std::vector<Field> hat_transform(const PhaseSpaceGrid& g, const std::vector<Field>& u,
                                 const RMatrixField& R, const std::vector<Slice>& r) {
    require(u.size() == R.dim && r.size() == R.dim, "component count mismatch");
    std::vector<Field> out = u;
    for (std::size_t j = 0; j < R.dim; ++j) {
        require(u[j].same_shape(R.at(j, 0)), "field does not match R");
        for (std::size_t ix = 0; ix < g.nx(); ++ix)
            for (std::size_t iv = 0; iv < g.nv(); ++iv) {
                double rr = 0.0;
                for (std::size_t c = 0; c < R.dim; ++c) rr += R.at(j, c)(ix, iv, 0) * r[c](ix, iv);
                auto lane = out[j].lane(ix, iv);
                for (std::size_t k = 0; k < lane.size(); ++k)
                    lane[k] -= 2.0 * std::sqrt(g.t.time(k)) / frac::kGammaHalf * rr;
            }
    }
    return out;
}

SourceBuilder::SourceBuilder(const PhaseSpaceGrid& g, const CoefficientSet& coeffs,
                             const RMatrixField& R)
    : grid_(&g), coeffs_(&coeffs), R_(&R) {
    require(R.nx() == g.nx() && R.nv() == g.nv() && R.nt_nodes() == g.nt_nodes(),
            "R does not match the grid");
    for (const Field& e : R.entries) {
        Field h = g.make_field();
        for (std::size_t ix = 0; ix < g.nx(); ++ix)
            for (std::size_t iv = 0; iv < g.nv(); ++iv) {
                const auto d = frac::caputo_half_series(g.t, e.lane(ix, iv));
                std::copy(d.begin(), d.end(), h.lane(ix, iv).begin());
            }
        half_.push_back(std::move(h));
    }
}

std::vector<Slice> SourceBuilder::assemble(const std::vector<Slice>& r,
                                           const std::vector<Slice>& Rk,
                                           const std::vector<Slice>& halfk,
                                           double singular) const {
    const auto& g = *grid_;
    const std::size_t m = R_->dim;
    require(r.size() == m, "perturbation has the wrong number of components");
    const auto& st = coeffs_->sigma_t();
    const auto& ss = coeffs_->sigma_s();
    const auto& p = coeffs_->p();

    std::vector<Slice> rx;
    for (const auto& rc : r) rx.push_back(ddx(rc, g.x.h));
    std::vector<Slice> Rx;
    for (const auto& e : Rk) Rx.push_back(ddx(e, g.x.h));

    std::vector<Slice> out;
    for (std::size_t j = 0; j < m; ++j) {
        Slice fj(g.nx(), g.nv());
        // sum_c R_jc(x,v') r_c(x,v'), integrated against p below
        Slice Rr(g.nx(), g.nv());
        for (std::size_t ix = 0; ix < g.nx(); ++ix)
            for (std::size_t iv = 0; iv < g.nv(); ++iv) {
                const double v = g.v.nodes[iv];
                double acc = 0.0;
                double rr = 0.0;
                for (std::size_t c = 0; c < m; ++c) {
                    const std::size_t e = j * m + c;
                    const double R0 = R_->at(j, c)(ix, iv, 0);
                    const double bracket = v * Rx[e](ix, iv) + st(ix, iv) * Rk[e](ix, iv) -
                                           halfk[e](ix, iv) - singular * R0;
                    acc += -v * Rk[e](ix, iv) * rx[c](ix, iv) - bracket * r[c](ix, iv);
                    rr += Rk[e](ix, iv) * r[c](ix, iv);
                }
                fj(ix, iv) = acc;
                Rr(ix, iv) = rr;
            }
        for (std::size_t ix = 0; ix < g.nx(); ++ix)
            for (std::size_t iv = 0; iv < g.nv(); ++iv) {
                double integral = 0.0;
                for (std::size_t jv = 0; jv < g.nv(); ++jv)
                    integral += g.v.weights[jv] * p(ix, iv, jv) * Rr(ix, jv);
                fj(ix, iv) += ss(ix, iv) * integral;
            }
        out.push_back(std::move(fj));
    }
    return out;
}

std::vector<Slice> SourceBuilder::f(const std::vector<Slice>& r, std::size_t k) const {
    const auto& g = *grid_;
    require(k >= 1, "f is singular at t = 0");
    require(k <= g.t.nt, "time index out of range");
    std::vector<Slice> Rk;
    std::vector<Slice> halfk;
    for (std::size_t e = 0; e < R_->entries.size(); ++e) {
        Rk.push_back(R_->entries[e].slice(k));
        halfk.push_back(half_[e].slice(k));
    }
    const double singular = 1.0 / (frac::kGammaHalf * std::sqrt(g.t.time(k)));
    return assemble(r, Rk, halfk, singular);
}

namespace {

Slice time_derivative(const Field& f, const TimeGrid& t, std::size_t k) {
    const std::size_t nt = t.nt;
    Slice out(f.nx(), f.nv());
    for (std::size_t ix = 0; ix < f.nx(); ++ix)
        for (std::size_t iv = 0; iv < f.nv(); ++iv) {
            const auto lane = f.lane(ix, iv);
            out(ix, iv) = k < nt ? (lane[k + 1] - lane[k - 1]) / (2.0 * t.dt)
                                 : (lane[k] - lane[k - 1]) / t.dt;
        }
    return out;
}

}  // namespace

std::vector<Slice> SourceBuilder::ft(const std::vector<Slice>& r, std::size_t k) const {
    const auto& g = *grid_;
    require(k >= 1, "d_t f is singular at t = 0");
    require(k <= g.t.nt, "time index out of range");
    std::vector<Slice> Rk;
    std::vector<Slice> halfk;
    for (std::size_t e = 0; e < R_->entries.size(); ++e) {
        Rk.push_back(time_derivative(R_->entries[e], g.t, k));
        halfk.push_back(time_derivative(half_[e], g.t, k));
    }
    const double t = g.t.time(k);
    const double singular = -1.0 / (2.0 * frac::kGammaHalf * t * std::sqrt(t));
    return assemble(r, Rk, halfk, singular);
}

std::vector<Slice> build_f(const PhaseSpaceGrid& g, const RMatrixField& R,
                           const std::vector<Slice>& r, const CoefficientSet& coeffs,
                           std::size_t k) {
    return SourceBuilder(g, coeffs, R).f(r, k);
}

std::vector<Slice> build_ft(const PhaseSpaceGrid& g, const RMatrixField& R,
                            const std::vector<Slice>& r, const CoefficientSet& coeffs,
                            std::size_t k) {
    return SourceBuilder(g, coeffs, R).ft(r, k);
}

ReducedResidual residual_reduced(const ReducedOperators& ops, const std::vector<Field>& u,
                                 const std::function<std::vector<Slice>(std::size_t)>& source,
                                 std::size_t k_first, std::size_t k_last) {
    const auto& g = ops.grid();
    require(k_first >= 1 && k_first <= k_last && k_last <= g.t.nt, "invalid time window");
    ReducedResidual res;
    double sq_def = 0.0;
    double sq_dt = 0.0;
    const auto wx = g.x.weights();
    for (std::size_t k = k_first; k <= k_last; ++k) {
        const auto f = source(k);
        require(f.size() == u.size(), "source has the wrong number of components");
        for (std::size_t j = 0; j < u.size(); ++j) {
            const Slice uk = u[j].slice(k);
            const Slice prev = u[j].slice(k - 1);
            const Slice rhs = ops.spatial(uk);
            for (std::size_t ix = 1; ix + 1 < g.nx(); ++ix)
                for (std::size_t iv = 0; iv < g.nv(); ++iv) {
                    const double dtu = (uk(ix, iv) - prev(ix, iv)) / g.t.dt;
                    const double d = dtu - rhs(ix, iv) - f[j](ix, iv);
                    const double w = wx[ix] * g.v.weights[iv] * g.t.dt;
                    res.max_defect = std::max(res.max_defect, std::abs(d));
                    res.max_dtu = std::max(res.max_dtu, std::abs(dtu));
                    sq_def += w * d * d;
                    sq_dt += w * dtu * dtu;
                }
        }
    }
    res.l2_defect = std::sqrt(sq_def);
    res.l2_dtu = std::sqrt(sq_dt);
    return res;
}

}  // namespace fracrte
