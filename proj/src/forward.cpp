#include "fracrte/forward.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "fracrte/error.hpp"
#include "fracrte/fraccalc.hpp"

namespace fracrte {

std::string to_string(XScheme s) { return s == XScheme::Upwind1 ? "upwind1" : "upwind2"; }

XScheme parse_x_scheme(const std::string& name) {
    if (name == "upwind1") return XScheme::Upwind1;
    if (name == "upwind2") return XScheme::Upwind2;
    throw PreconditionError("unknown x scheme '" + name + "' (expected upwind1 or upwind2)");
}

ProblemData zero_data(const PhaseSpaceGrid& g) {
    return ProblemData{g.make_slice(), InflowData(g), std::nullopt};
}

namespace {

void check_shapes(const PhaseSpaceGrid& g, const CoefficientSet& c, const ProblemData& d) {
    require(c.nx() == g.nx() && c.nv() == g.nv(), "coefficients do not match the grid");
    require(d.initial.nx() == g.nx() && d.initial.nv() == g.nv(),
            "initial value does not match the grid");
    require(d.inflow.raw().nv() == g.nv() && d.inflow.raw().nt_nodes() == g.nt_nodes(),
            "inflow data does not match the grid");
    if (d.source) {
        require(d.source->nx() == g.nx() && d.source->nv() == g.nv() &&
                    d.source->nt_nodes() == g.nt_nodes(),
                "source does not match the grid");
    }
}

}  // namespace

SolveResult solve_frte(const PhaseSpaceGrid& g, const CoefficientSet& coeffs,
                       const ProblemData& data, const SolverOptions& opt) {
    check_shapes(g, coeffs, data);
    const std::size_t nx = g.nx();
    const std::size_t nv = g.nv();
    const std::size_t nt = g.t.nt;
    const double h = g.x.h;

    SolveResult res;
    res.u = g.make_field();
    Field& u = res.u;
    u.set_slice(0, data.initial);

    for (std::size_t iv = 0; iv < nv; ++iv) {
        const std::size_t ix = g.v.positive(iv) ? 0 : nx - 1;
        const Side side = g.v.positive(iv) ? Side::Left : Side::Right;
        const double a = data.initial(ix, iv);
        const double g0 = data.inflow(side, iv, 0);
        if (std::abs(a - g0) > 1e-12 * std::max({1.0, std::abs(a), std::abs(g0)})) {
            res.warnings.push_back("initial value and inflow data differ at t = 0 on Gamma_-");
            break;
        }
    }

    const frac::CaputoWeights w(g.t.dt, nt);
    const double lead = w.leading();
    const bool second = opt.x_scheme == XScheme::Upwind2;
    Slice base(nx, nv);
    Slice cur(nx, nv);
    Slice next(nx, nv);

    for (std::size_t k = 1; k <= nt; ++k) {
        // right-hand side without scattering: lead*u_{k-1} - history + q_k
        for (std::size_t ix = 0; ix < nx; ++ix) {
            for (std::size_t iv = 0; iv < nv; ++iv) {
                const auto lane = u.lane(ix, iv);
                double b = lead * lane[k - 1] - w.history(lane, k);
                if (data.source) b += (*data.source)(ix, iv, k);
                base(ix, iv) = b;
                cur(ix, iv) = lane[k - 1];
            }
        }

        // floor for the relative stopping test, so an exactly zero step still terminates
        const double prev_norm = max_abs(cur.values());
        std::vector<double> trace;
        int iter = 0;
        for (;;) {
            const Slice scat = coeffs.scatter(g.v, cur);
            for (std::size_t iv = 0; iv < nv; ++iv) {
                const double speed = std::abs(g.v.nodes[iv]) / h;
                const bool pos = g.v.positive(iv);
                // march away from the inflow end; n counts nodes from it
                auto at = [&](std::size_t n) -> double& { return next(pos ? n : nx - 1 - n, iv); };
                auto idx = [&](std::size_t n) { return pos ? n : nx - 1 - n; };
                at(0) = data.inflow(pos ? Side::Left : Side::Right, iv, k);
                for (std::size_t n = 1; n < nx; ++n) {
                    const std::size_t ix = idx(n);
                    const double b = base(ix, iv) + scat(ix, iv);
                    const double st = coeffs.sigma_t()(ix, iv);
                    if (second && n >= 2) {
                        at(n) = (speed * (2.0 * at(n - 1) - 0.5 * at(n - 2)) + b) /
                                (lead + st + 1.5 * speed);
                    } else if (second) {
                        // box step on the first cell: equation averaged over both nodes
                        const std::size_t i0 = idx(0);
                        const double b0 = base(i0, iv) + scat(i0, iv);
                        const double c0 = lead + coeffs.sigma_t()(i0, iv);
                        at(n) = (speed * at(0) - 0.5 * c0 * at(0) + 0.5 * (b0 + b)) /
                                (speed + 0.5 * (lead + st));
                    } else {
                        at(n) = (speed * at(n - 1) + b) / (lead + st + speed);
                    }
                }
            }
            ++iter;
            double diff = 0.0;
            double norm = 0.0;
            for (std::size_t i = 0; i < next.size(); ++i) {
                const double x = next.values()[i];
                if (!std::isfinite(x)) {
                    std::ostringstream msg;
                    msg << "non-finite value in forward solve at step " << k;
                    throw ConvergenceError(msg.str());
                }
                diff = std::max(diff, std::abs(x - cur.values()[i]));
                norm = std::max(norm, std::abs(x));
            }
            trace.push_back(diff);
            std::swap(cur, next);
            if (diff <= opt.tolerance * std::max(norm, prev_norm) || diff == 0.0) break;
            if (iter >= opt.max_iterations) {
                std::ostringstream msg;
                msg << "source iteration did not converge at step " << k << " after " << iter
                    << " iterations; update history:";
                const std::size_t first = trace.size() > 8 ? trace.size() - 8 : 0;
                for (std::size_t i = first; i < trace.size(); ++i) msg << ' ' << trace[i];
                throw ConvergenceError(msg.str());
            }
        }
        res.max_source_iterations = std::max(res.max_source_iterations, iter);
        u.set_slice(k, cur);
    }
    return res;
}

Field difference_source(const RMatrixField& R, const std::vector<Slice>& r, std::size_t row) {
    require(r.size() == R.dim, "perturbation has the wrong number of components");
    Field q(R.nx(), R.nv(), R.nt_nodes());
    for (std::size_t c = 0; c < R.dim; ++c) {
        const Field& Rc = R.at(row, c);
        require(r[c].nx() == R.nx() && r[c].nv() == R.nv(), "perturbation shape mismatch");
        for (std::size_t ix = 0; ix < R.nx(); ++ix)
            for (std::size_t iv = 0; iv < R.nv(); ++iv) {
                const double rc = r[c](ix, iv);
                const auto src = Rc.lane(ix, iv);
                auto dst = q.lane(ix, iv);
                for (std::size_t it = 0; it < dst.size(); ++it) dst[it] += src[it] * rc;
            }
    }
    return q;
}

std::vector<Field> solve_difference_system(const PhaseSpaceGrid& g, const CoefficientSet& coeffs,
                                           const RMatrixField& R,
                                           const CoefficientPerturbation& r,
                                           const SolverOptions& opt) {
    require(R.nx() == g.nx() && R.nv() == g.nv() && R.nt_nodes() == g.nt_nodes(),
            "R does not match the grid");
    const auto comps = r.components(R.mode);
    std::vector<Field> out;
    for (std::size_t j = 0; j < R.dim; ++j) {
        ProblemData data = zero_data(g);
        data.source = difference_source(R, comps, j);
        out.push_back(solve_frte(g, coeffs, data, opt).u);
    }
    return out;
}

Slice upwind_transport(const PhaseSpaceGrid& g, const Slice& u, XScheme scheme) {
    const std::size_t nx = g.nx();
    Slice out(nx, g.nv());
    for (std::size_t iv = 0; iv < g.nv(); ++iv) {
        const bool pos = g.v.positive(iv);
        const double speed = std::abs(g.v.nodes[iv]) / g.x.h;
        auto at = [&](std::size_t n) { return u(pos ? n : nx - 1 - n, iv); };
        for (std::size_t n = 1; n < nx; ++n) {
            // |v| times the derivative along the sweep direction equals v d_x u
            const double d = scheme == XScheme::Upwind2 && n >= 2
                                 ? 1.5 * at(n) - 2.0 * at(n - 1) + 0.5 * at(n - 2)
                                 : at(n) - at(n - 1);
            out(pos ? n : nx - 1 - n, iv) = speed * d;
        }
    }
    return out;
}

double residual_frte(const PhaseSpaceGrid& g, const Field& u, const CoefficientSet& coeffs,
                     const ProblemData& data, XScheme scheme) {
    check_shapes(g, coeffs, data);
    require(u.nx() == g.nx() && u.nv() == g.nv() && u.nt_nodes() == g.nt_nodes(),
            "field does not match the grid");
    Field half = g.make_field();
    for (std::size_t ix = 0; ix < g.nx(); ++ix)
        for (std::size_t iv = 0; iv < g.nv(); ++iv) {
            const auto d = frac::caputo_half_series(g.t, u.lane(ix, iv));
            std::copy(d.begin(), d.end(), half.lane(ix, iv).begin());
        }
    double worst = 0.0;
    const std::size_t nx = g.nx();
    for (std::size_t k = 1; k < g.nt_nodes(); ++k) {
        const Slice uk = u.slice(k);
        const Slice adv = upwind_transport(g, uk, scheme);
        const Slice scat = coeffs.scatter(g.v, uk);
        // everything but the transport term, per node
        Slice rest(nx, g.nv());
        for (std::size_t ix = 0; ix < nx; ++ix)
            for (std::size_t iv = 0; iv < g.nv(); ++iv) {
                double d = half(ix, iv, k) + coeffs.sigma_t()(ix, iv) * uk(ix, iv) - scat(ix, iv);
                if (data.source) d -= (*data.source)(ix, iv, k);
                rest(ix, iv) = d;
            }
        for (std::size_t iv = 0; iv < g.nv(); ++iv) {
            const bool pos = g.v.positive(iv);
            for (std::size_t n = 1; n < nx; ++n) {
                const std::size_t ix = pos ? n : nx - 1 - n;
                double d = adv(ix, iv) + rest(ix, iv);
                if (scheme == XScheme::Upwind2 && n == 1) {
                    const std::size_t i0 = pos ? 0 : nx - 1;
                    d = adv(ix, iv) + 0.5 * (rest(ix, iv) + rest(i0, iv));
                }
                worst = std::max(worst, std::abs(d));
            }
        }
    }
    return worst;
}

}  // namespace fracrte
