#include "fracrte/inverse.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <sstream>

#include <Eigen/Dense>

#include "fracrte/error.hpp"
#include "fracrte/fraccalc.hpp"

namespace fracrte {

namespace {

/// Dense m x m matrix with m <= 2, row-major.
struct Small {
    std::size_t m = 1;
    double a[4] = {0.0, 0.0, 0.0, 0.0};

    double& operator()(std::size_t r, std::size_t c) { return a[r * m + c]; }
    double operator()(std::size_t r, std::size_t c) const { return a[r * m + c]; }

    double det() const { return m == 1 ? a[0] : a[0] * a[3] - a[1] * a[2]; }

    Small inverse() const {
        Small inv;
        inv.m = m;
        const double dt = det();
        if (m == 1) {
            inv.a[0] = 1.0 / dt;
        } else {
            inv.a[0] = a[3] / dt;
            inv.a[1] = -a[1] / dt;
            inv.a[2] = -a[2] / dt;
            inv.a[3] = a[0] / dt;
        }
        return inv;
    }

    Small operator*(const Small& o) const {
        Small out;
        out.m = m;
        for (std::size_t r = 0; r < m; ++r)
            for (std::size_t c = 0; c < m; ++c) {
                double acc = 0.0;
                for (std::size_t k = 0; k < m; ++k) acc += (*this)(r, k) * o(k, c);
                out(r, c) = acc;
            }
        return out;
    }
};

Small r_at(const RMatrixField& R, std::size_t ix, std::size_t iv, std::size_t it) {
    Small s;
    s.m = R.dim;
    for (std::size_t j = 0; j < R.dim; ++j)
        for (std::size_t c = 0; c < R.dim; ++c) s(j, c) = R.at(j, c)(ix, iv, it);
    return s;
}

void phase_integral_field(const PhaseSpaceGrid& g, const CoefficientSet& coeffs, const Field& u,
                          Field& out) {
    const auto& p = coeffs.p();
    for (std::size_t ix = 0; ix < g.nx(); ++ix)
        for (std::size_t iv = 0; iv < g.nv(); ++iv) {
            auto dst = out.lane(ix, iv);
            std::fill(dst.begin(), dst.end(), 0.0);
            for (std::size_t jv = 0; jv < g.nv(); ++jv) {
                const double c = g.v.weights[jv] * p(ix, iv, jv);
                if (c == 0.0) continue;
                const auto src = u.lane(ix, jv);
                for (std::size_t it = 0; it < dst.size(); ++it) dst[it] += c * src[it];
            }
        }
}

}  // namespace

RMatrixField build_R(const PhaseSpaceGrid& g, const std::vector<Field>& ref,
                     const CoefficientSet& coeffs, InverseMode mode) {
    const std::size_t needed = mode == InverseMode::Full ? 2 : 1;
    if (ref.size() < needed) {
        throw PreconditionError("build_R: mode " + to_string(mode) + " needs " +
                                std::to_string(needed) + " reference experiment(s)");
    }
    for (std::size_t j = 0; j < needed; ++j)
        require(ref[j].nx() == g.nx() && ref[j].nv() == g.nv() &&
                    ref[j].nt_nodes() == g.nt_nodes(),
                "reference solution does not match the grid");

    RMatrixField R;
    R.mode = mode;
    R.dim = needed;
    R.entries.assign(needed * needed, g.make_field());
    for (std::size_t j = 0; j < needed; ++j) {
        Field minus_u = -1.0 * ref[j];
        Field pu = g.make_field();
        phase_integral_field(g, coeffs, ref[j], pu);
        switch (mode) {
            case InverseMode::Full:
                R.at(j, 0) = std::move(minus_u);
                R.at(j, 1) = std::move(pu);
                break;
            case InverseMode::SigmaTOnly: R.at(0, 0) = std::move(minus_u); break;
            case InverseMode::SigmaSOnly: R.at(0, 0) = std::move(pu); break;
        }
    }
    return R;
}

DetMargin check_detR(const RMatrixField& R, std::size_t k0, double eps_det) {
    require(k0 < R.nt_nodes(), "t0 index out of range");
    DetMargin m;
    m.min_abs_det = std::numeric_limits<double>::infinity();
    for (std::size_t ix = 0; ix < R.nx(); ++ix)
        for (std::size_t iv = 0; iv < R.nv(); ++iv) {
            const Small s = r_at(R, ix, iv, k0);
            double fro = 0.0;
            for (std::size_t e = 0; e < R.dim * R.dim; ++e) fro += s.a[e] * s.a[e];
            m.scale = std::max(m.scale, std::sqrt(fro));
            const double d = std::abs(s.det());
            if (d < m.min_abs_det) {
                m.min_abs_det = d;
                m.worst_ix = ix;
                m.worst_iv = iv;
            }
        }
    m.scale = std::pow(m.scale, static_cast<double>(R.dim));
    m.threshold = eps_det * m.scale;
    m.passed = m.scale > 0.0 && m.min_abs_det >= m.threshold;
    return m;
}

std::vector<Slice> recover_f_at_t0(const ReducedOperators& ops, const std::vector<Field>& u,
                                   std::size_t k0) {
    const auto& g = ops.grid();
    require(k0 >= 2 && k0 + 2 <= g.t.nt,
            "t0 must not be at or adjacent to the ends of the time grid");
    std::vector<Slice> out;
    for (const Field& uj : u) {
        require(uj.nx() == g.nx() && uj.nv() == g.nv() && uj.nt_nodes() == g.nt_nodes(),
                "field does not match the grid");
        Slice y(g.nx(), g.nv());
        for (std::size_t ix = 0; ix < g.nx(); ++ix)
            for (std::size_t iv = 0; iv < g.nv(); ++iv)
                y(ix, iv) = (uj(ix, iv, k0 + 1) - uj(ix, iv, k0 - 1)) / (2.0 * g.t.dt);
        y -= ops.spatial(uj.slice(k0));
        out.push_back(std::move(y));
    }
    return out;
}

FirstOrderSystem::FirstOrderSystem(std::size_t dim_, std::size_t nx_, std::size_t nv_)
    : dim(dim_), nx(nx_), nv(nv_), A(nx_ * nv_ * dim_ * dim_, 0.0),
      D(nx_ * nv_ * nv_ * dim_ * dim_, 0.0), G(nx_ * nv_ * dim_, 0.0) {
    require(dim_ == 1 || dim_ == 2, "system dimension must be 1 or 2");
}

namespace {

/// A w + int D w' at node ix, for all velocities; result layout (iv, r).
std::vector<double> apply_operator(const PhaseSpaceGrid& g, const FirstOrderSystem& s,
                                   const std::vector<double>& w, std::size_t ix) {
    const std::size_t m = s.dim;
    std::vector<double> out(s.nv * m, 0.0);
    for (std::size_t iv = 0; iv < s.nv; ++iv)
        for (std::size_t r = 0; r < m; ++r) {
            double acc = 0.0;
            for (std::size_t c = 0; c < m; ++c) acc += s.a(ix, iv, r, c) * w[iv * m + c];
            for (std::size_t jv = 0; jv < s.nv; ++jv)
                for (std::size_t c = 0; c < m; ++c)
                    acc += g.v.weights[jv] * s.d(ix, iv, jv, r, c) * w[jv * m + c];
            out[iv * m + r] = acc;
        }
    return out;
}

double theta_of(MarchScheme s) { return s == MarchScheme::ImplicitEuler ? 1.0 : 0.5; }

}  // namespace

MarchResult march_system(const PhaseSpaceGrid& g, const FirstOrderSystem& s,
                         const MarchOptions& opt) {
    require(s.nx == g.nx() && s.nv == g.nv(), "system does not match the grid");
    const std::size_t m = s.dim;
    const std::size_t nv = s.nv;
    const double h = g.x.h;
    const double theta = theta_of(opt.scheme);

    MarchResult res;
    std::vector<std::vector<double>> w(s.nx, std::vector<double>(nv * m, 0.0));

    for (std::size_t ix = 1; ix < s.nx; ++ix) {
        std::vector<double> b(nv * m);
        std::vector<double> prev_op;
        if (theta < 1.0) prev_op = apply_operator(g, s, w[ix - 1], ix - 1);
        for (std::size_t iv = 0; iv < nv; ++iv)
            for (std::size_t r = 0; r < m; ++r) {
                const std::size_t k = iv * m + r;
                double val = w[ix - 1][k] +
                             h * (theta * s.rhs(ix, iv, r) + (1.0 - theta) * s.rhs(ix - 1, iv, r));
                if (theta < 1.0) val -= (1.0 - theta) * h * prev_op[k];
                b[k] = val;
            }

        // local matrices I + theta h A
        std::vector<Small> local_inv(nv);
        for (std::size_t iv = 0; iv < nv; ++iv) {
            Small M;
            M.m = m;
            for (std::size_t r = 0; r < m; ++r)
                for (std::size_t c = 0; c < m; ++c)
                    M(r, c) = (r == c ? 1.0 : 0.0) + theta * h * s.a(ix, iv, r, c);
            local_inv[iv] = M.inverse();
        }

        std::vector<double> cur = w[ix - 1];
        std::vector<double> next(nv * m);
        bool converged = false;
        double last_diff = 0.0;
        int iter = 0;
        while (iter < opt.max_iterations) {
            ++iter;
            for (std::size_t iv = 0; iv < nv; ++iv) {
                double rhs[2] = {0.0, 0.0};
                for (std::size_t r = 0; r < m; ++r) {
                    double coupling = 0.0;
                    for (std::size_t jv = 0; jv < nv; ++jv)
                        for (std::size_t c = 0; c < m; ++c)
                            coupling += g.v.weights[jv] * s.d(ix, iv, jv, r, c) * cur[jv * m + c];
                    rhs[r] = b[iv * m + r] - theta * h * coupling;
                }
                for (std::size_t r = 0; r < m; ++r) {
                    double acc = 0.0;
                    for (std::size_t c = 0; c < m; ++c) acc += local_inv[iv](r, c) * rhs[c];
                    next[iv * m + r] = cur[iv * m + r] + opt.damping * (acc - cur[iv * m + r]);
                }
            }
            double diff = 0.0;
            double norm = 0.0;
            for (std::size_t k = 0; k < next.size(); ++k) {
                diff = std::max(diff, std::abs(next[k] - cur[k]));
                norm = std::max(norm, std::abs(next[k]));
            }
            std::swap(cur, next);
            if (iter > 1 && last_diff > 0.0)
                res.contraction = std::max(res.contraction, diff / last_diff);
            if (diff <= opt.tolerance * norm || diff == 0.0) {
                converged = true;
                break;
            }
            // stalled or diverging: stop and solve directly
            if (iter > 3 && last_diff > 0.0 && diff >= last_diff) break;
            last_diff = diff;
        }
        res.max_picard_iterations = std::max(res.max_picard_iterations, iter);

        bool finite = std::all_of(cur.begin(), cur.end(), [](double x) { return std::isfinite(x); });
        if (!converged || !finite) {
            const std::size_t n = nv * m;
            Eigen::MatrixXd N = Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(n),
                                                          static_cast<Eigen::Index>(n));
            Eigen::VectorXd rhs(static_cast<Eigen::Index>(n));
            for (std::size_t iv = 0; iv < nv; ++iv)
                for (std::size_t r = 0; r < m; ++r) {
                    const auto row = static_cast<Eigen::Index>(iv * m + r);
                    rhs(row) = b[iv * m + r];
                    for (std::size_t c = 0; c < m; ++c)
                        N(row, static_cast<Eigen::Index>(iv * m + c)) += theta * h * s.a(ix, iv, r, c);
                    for (std::size_t jv = 0; jv < nv; ++jv)
                        for (std::size_t c = 0; c < m; ++c)
                            N(row, static_cast<Eigen::Index>(jv * m + c)) +=
                                theta * h * g.v.weights[jv] * s.d(ix, iv, jv, r, c);
                }
            const Eigen::VectorXd sol = N.partialPivLu().solve(rhs);
            for (std::size_t k = 0; k < n; ++k) cur[k] = sol(static_cast<Eigen::Index>(k));
            ++res.direct_steps;
            finite = std::all_of(cur.begin(), cur.end(), [](double x) { return std::isfinite(x); });
            if (!finite) {
                std::ostringstream msg;
                msg << "r-system march produced non-finite values at x index " << ix
                    << " (Picard contraction estimate " << res.contraction << ")";
                throw ConvergenceError(msg.str());
            }
        }
        w[ix] = cur;
    }

    res.w.assign(m, Slice(s.nx, nv));
    for (std::size_t ix = 0; ix < s.nx; ++ix)
        for (std::size_t iv = 0; iv < nv; ++iv)
            for (std::size_t r = 0; r < m; ++r) res.w[r](ix, iv) = w[ix][iv * m + r];
    return res;
}

std::vector<double> march_operator(const PhaseSpaceGrid& g, const FirstOrderSystem& s,
                                   const std::vector<Slice>& w_in, MarchScheme scheme) {
    require(w_in.size() == s.dim, "component count mismatch");
    const std::size_t m = s.dim;
    const std::size_t nv = s.nv;
    const double h = g.x.h;
    const double theta = theta_of(scheme);
    std::vector<std::vector<double>> w(s.nx, std::vector<double>(nv * m));
    for (std::size_t ix = 0; ix < s.nx; ++ix)
        for (std::size_t iv = 0; iv < nv; ++iv)
            for (std::size_t r = 0; r < m; ++r) w[ix][iv * m + r] = w_in[r](ix, iv);

    std::vector<double> G(s.G.size(), 0.0);
    auto put = [&](std::size_t ix, const std::vector<double>& v) {
        std::copy(v.begin(), v.end(), G.begin() + static_cast<std::ptrdiff_t>(ix * nv * m));
    };
    std::vector<double> op_prev = apply_operator(g, s, w[0], 0);
    std::vector<double> g_prev(nv * m);
    for (std::size_t k = 0; k < nv * m; ++k)
        g_prev[k] = op_prev[k] + (s.nx > 1 ? (w[1][k] - w[0][k]) / h : 0.0);
    put(0, g_prev);
    for (std::size_t ix = 1; ix < s.nx; ++ix) {
        const auto op = apply_operator(g, s, w[ix], ix);
        std::vector<double> gi(nv * m);
        for (std::size_t k = 0; k < nv * m; ++k) {
            const double lhs =
                (w[ix][k] - w[ix - 1][k]) / h + theta * op[k] + (1.0 - theta) * op_prev[k];
            gi[k] = (lhs - (1.0 - theta) * g_prev[k]) / theta;
        }
        put(ix, gi);
        op_prev = op;
        g_prev = gi;
    }
    return G;
}

FirstOrderSystem assemble_r_system(const PhaseSpaceGrid& g, const RMatrixField& R,
                                   const SourceBuilder& sources, const CoefficientSet& coeffs,
                                   std::size_t k0) {
    require(k0 >= 1 && k0 <= g.t.nt, "t0 index out of range");
    const std::size_t m = R.dim;
    FirstOrderSystem s(m, g.nx(), g.nv());
    const double singular = 1.0 / (frac::kGammaHalf * std::sqrt(g.t.time(k0)));
    std::vector<Slice> Rx;
    for (const Field& e : R.entries) Rx.push_back(ddx(e.slice(k0), g.x.h));
    const auto& st = coeffs.sigma_t();
    const auto& ss = coeffs.sigma_s();
    const auto& p = coeffs.p();

    for (std::size_t ix = 0; ix < g.nx(); ++ix)
        for (std::size_t iv = 0; iv < g.nv(); ++iv) {
            const double v = g.v.nodes[iv];
            const Small Rt = r_at(R, ix, iv, k0);
            const Small Rinv = Rt.inverse();
            Small B;
            B.m = m;
            for (std::size_t j = 0; j < m; ++j)
                for (std::size_t c = 0; c < m; ++c)
                    B(j, c) = v * Rx[j * m + c](ix, iv) + st(ix, iv) * Rt(j, c) -
                              sources.half_derivative(j, c)(ix, iv, k0) -
                              singular * R.at(j, c)(ix, iv, 0);
            const Small A = Rinv * B;
            for (std::size_t r = 0; r < m; ++r)
                for (std::size_t c = 0; c < m; ++c) s.a(ix, iv, r, c) = A(r, c) / v;
            for (std::size_t jv = 0; jv < g.nv(); ++jv) {
                const Small Dm = Rinv * r_at(R, ix, jv, k0);
                const double factor = -ss(ix, iv) / v * p(ix, iv, jv);
                for (std::size_t r = 0; r < m; ++r)
                    for (std::size_t c = 0; c < m; ++c) s.d(ix, iv, jv, r, c) = factor * Dm(r, c);
            }
        }
    return s;
}

RSolveResult solve_r_system(const PhaseSpaceGrid& g, const std::vector<Slice>& f_t0,
                            const RMatrixField& R, const CoefficientSet& coeffs, std::size_t k0,
                            double eps_det, const MarchOptions& opt) {
    require(f_t0.size() == R.dim, "f has the wrong number of components");
    RSolveResult out;
    out.det = check_detR(R, k0, eps_det);
    if (!out.det.passed) {
        std::ostringstream msg;
        msg << "det R(.,.,t0) hypothesis fails: min |det R| = " << out.det.min_abs_det
            << " < threshold " << out.det.threshold << " at x index " << out.det.worst_ix
            << ", v index " << out.det.worst_iv;
        throw HypothesisError(msg.str());
    }
    const SourceBuilder sources(g, coeffs, R);
    FirstOrderSystem s = assemble_r_system(g, R, sources, coeffs, k0);
    for (std::size_t ix = 0; ix < g.nx(); ++ix)
        for (std::size_t iv = 0; iv < g.nv(); ++iv) {
            const double v = g.v.nodes[iv];
            const Small Rinv = r_at(R, ix, iv, k0).inverse();
            for (std::size_t r = 0; r < R.dim; ++r) {
                double acc = 0.0;
                for (std::size_t c = 0; c < R.dim; ++c) acc += Rinv(r, c) * f_t0[c](ix, iv);
                s.rhs(ix, iv, r) = -acc / v;
            }
        }
    out.march = march_system(g, s, opt);
    out.r = CoefficientPerturbation::from_components(R.mode, out.march.w);
    return out;
}

std::vector<Slice> r_system_source(const PhaseSpaceGrid& g, const RMatrixField& R,
                                   const CoefficientSet& coeffs, const std::vector<Slice>& r,
                                   std::size_t k0, MarchScheme scheme) {
    const SourceBuilder sources(g, coeffs, R);
    const FirstOrderSystem s = assemble_r_system(g, R, sources, coeffs, k0);
    const auto G = march_operator(g, s, r, scheme);
    const std::size_t m = R.dim;
    std::vector<Slice> f(m, Slice(g.nx(), g.nv()));
    for (std::size_t ix = 0; ix < g.nx(); ++ix)
        for (std::size_t iv = 0; iv < g.nv(); ++iv) {
            const double v = g.v.nodes[iv];
            const Small Rt = r_at(R, ix, iv, k0);
            for (std::size_t j = 0; j < m; ++j) {
                double acc = 0.0;
                for (std::size_t c = 0; c < m; ++c) acc += Rt(j, c) * G[(ix * g.nv() + iv) * m + c];
                f[j](ix, iv) = -v * acc;
            }
        }
    return f;
}

CoefficientSet perturb(const CoefficientSet& ref, const CoefficientPerturbation& r) {
    return CoefficientSet(ref.sigma_t() + r.r_t, ref.sigma_s() + r.r_s, ref.p(), ref.bound_M());
}

double relative_l2_error(const PhaseSpaceGrid& g, const std::vector<Slice>& approx,
                         const std::vector<Slice>& exact) {
    require(approx.size() == exact.size(), "component count mismatch");
    double num = 0.0;
    double den = 0.0;
    for (std::size_t c = 0; c < exact.size(); ++c) {
        num += discrete_norm(g, approx[c] - exact[c], NormKind::L2);
        den += discrete_norm(g, exact[c], NormKind::L2);
    }
    if (den == 0.0) return std::sqrt(num);
    return std::sqrt(num / den);
}

double perturbation_norm(const PhaseSpaceGrid& g, const CoefficientPerturbation& r,
                         InverseMode mode) {
    double total = 0.0;
    for (const Slice& c : r.components(mode)) total += discrete_norm(g, c, NormKind::H1);
    return total;
}

StabilityReport stability_rhs(const PhaseSpaceGrid& g, const std::vector<Field>& u,
                              std::size_t k0, std::size_t half_window, bool remark_variant) {
    require(half_window >= 1 && k0 >= half_window + 1 && k0 + half_window + 1 <= g.t.nt,
            "observation window must lie strictly inside (0, T)");
    StabilityReport rep;
    const double dt = g.t.dt;
    const std::size_t nx = g.nx();
    for (const Field& uj : u) {
        rep.rhs_interior += discrete_norm(g, uj.slice(k0), NormKind::H2);
        for (std::size_t k = k0 - half_window; k <= k0 + half_window; ++k) {
            const double wt = (k == k0 - half_window || k == k0 + half_window) ? 0.5 * dt : dt;
            // derivatives on the three nodes next to each end
            auto at = [&](std::size_t ix, std::size_t iv, std::size_t kk) { return uj(ix, iv, kk); };
            auto ut = [&](std::size_t ix, std::size_t iv) {
                return (at(ix, iv, k + 1) - at(ix, iv, k - 1)) / (2.0 * dt);
            };
            auto utt = [&](std::size_t ix, std::size_t iv) {
                return (at(ix, iv, k + 1) - 2.0 * at(ix, iv, k) + at(ix, iv, k - 1)) / (dt * dt);
            };
            auto dx_of = [&](auto fn, std::size_t ix, std::size_t iv) {
                const double h = g.x.h;
                if (ix == 0) return (-3.0 * fn(0, iv) + 4.0 * fn(1, iv) - fn(2, iv)) / (2.0 * h);
                return (3.0 * fn(nx - 1, iv) - 4.0 * fn(nx - 2, iv) + fn(nx - 3, iv)) / (2.0 * h);
            };
            auto u0 = [&](std::size_t ix, std::size_t iv) { return at(ix, iv, k); };
            for (std::size_t iv = 0; iv < g.nv(); ++iv) {
                const double wv = g.v.weights[iv];
                const std::size_t ixo = g.v.positive(iv) ? nx - 1 : 0;
                const double a1 = ut(ixo, iv);
                const double a2 = utt(ixo, iv);
                const double a3 = dx_of(ut, ixo, iv);
                double b = a1 * a1 + a2 * a2 + a3 * a3;
                if (remark_variant) {
                    const double z0 = u0(ixo, iv);
                    const double zx = dx_of(u0, ixo, iv);
                    const double zxtt = dx_of(utt, ixo, iv);
                    b += z0 * z0 + zx * zx + zxtt * zxtt;
                } else {
                    const double tr = dx_of(ut, 0, iv);
                    rep.rhs_trace0 += wt * wv * tr * tr;
                }
                rep.rhs_boundary += wt * wv * b;
            }
        }
    }
    return rep;
}

TwinSolution solve_twin(const PhaseSpaceGrid& g, const CoefficientSet& reference,
                        const CoefficientPerturbation& r_in,
                        const std::vector<ProblemData>& experiments, InverseMode mode,
                        const SolverOptions& forward, int threads) {
    TwinSolution out;
    out.r = r_in;
    const Slice zero = g.make_slice();
    if (mode == InverseMode::SigmaTOnly && max_abs(out.r.r_s.values()) > 0.0) {
        out.warnings.push_back("sigma_t_only mode: r_s ignored (set to zero)");
        out.r.r_s = zero;
    }
    if (mode == InverseMode::SigmaSOnly && max_abs(out.r.r_t.values()) > 0.0) {
        out.warnings.push_back("sigma_s_only mode: r_t ignored (set to zero)");
        out.r.r_t = zero;
    }
    for (const Slice* c : {&out.r.r_t, &out.r.r_s})
        for (std::size_t iv = 0; iv < g.nv(); ++iv)
            if ((*c)(0, iv) != 0.0)
                throw HypothesisError("perturbation must vanish at x = 0: r(0,v) != 0");

    const std::size_t m = mode == InverseMode::Full ? 2 : 1;
    require(experiments.size() >= m, "not enough experiments for the inverse mode");
    out.perturbed = perturb(reference, out.r);

    std::vector<std::future<SolveResult>> jobs;
    const auto launch = threads > 1 ? std::launch::async : std::launch::deferred;
    for (std::size_t j = 0; j < m; ++j) {
        jobs.push_back(std::async(launch, [&, j] {
            return solve_frte(g, out.perturbed, experiments[j], forward);
        }));
        jobs.push_back(std::async(launch, [&, j] {
            return solve_frte(g, reference, experiments[j], forward);
        }));
    }
    for (std::size_t j = 0; j < m; ++j) {
        SolveResult a = jobs[2 * j].get();
        SolveResult b = jobs[2 * j + 1].get();
        for (auto& w : a.warnings) out.warnings.push_back("experiment " + std::to_string(j + 1) + ": " + w);
        for (auto& w : b.warnings) out.warnings.push_back("experiment " + std::to_string(j + 1) + ": " + w);
        out.differences.push_back(a.u - b.u);
        out.reference_solutions.push_back(std::move(b.u));
    }
    return out;
}

StabilityOutcome run_stability_experiment(const PhaseSpaceGrid& g,
                                          const CoefficientSet& reference,
                                          const CoefficientPerturbation& r_in,
                                          const std::vector<ProblemData>& experiments,
                                          const StabilityOptions& opt) {
    const double T = g.t.t_final;
    require(opt.t0 > 0.0 && opt.t0 < T, "t0 must lie in (0, T)");
    require(opt.delta > 0.0 && opt.delta < std::min(opt.t0, T - opt.t0),
            "window violates 0<delta<min(t0,T-t0)");
    StabilityOutcome out;
    TwinSolution twin = solve_twin(g, reference, r_in, experiments, opt.mode, opt.forward, opt.threads);
    out.warnings = twin.warnings;
    const CoefficientPerturbation& r = twin.r;

    const std::size_t k0 = g.t.index_of(opt.t0);
    const auto half = static_cast<std::size_t>(std::llround(opt.delta / g.t.dt));
    out.report = stability_rhs(g, twin.differences, k0, half, opt.remark_variant);
    out.report.lhs = perturbation_norm(g, r, opt.mode);
    const double rhs = out.report.rhs();
    if (out.report.lhs == 0.0)
        out.report.c_emp = 0.0;
    else
        out.report.c_emp = rhs > 0.0 ? out.report.lhs / rhs : std::numeric_limits<double>::infinity();

    if (opt.reconstruct) {
        const RMatrixField R = build_R(g, twin.reference_solutions, reference, opt.mode);
        const ReducedOperators ops(g, twin.perturbed);
        const auto f = recover_f_at_t0(ops, twin.differences, k0);
        RSolveResult sol = solve_r_system(g, f, R, twin.perturbed, k0, opt.eps_det, opt.march);
        ReconstructionResult rec;
        rec.truth = r;
        rec.recovered = sol.r;
        rec.det = sol.det;
        rec.march = sol.march;
        rec.relative_error = relative_l2_error(g, sol.r.components(opt.mode), r.components(opt.mode));
        out.reconstruction = std::move(rec);
    }
    return out;
}

}  // namespace fracrte
