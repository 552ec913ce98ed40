#include "fracrte/carleman.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "fracrte/error.hpp"

namespace fracrte {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kInf = std::numeric_limits<double>::infinity();

double log_sq(double x) { return x == 0.0 ? kNegInf : 2.0 * std::log(std::abs(x)); }

}  // namespace

void validate_weight_params(const WeightParams& p, double t_final) {
    require(p.lambda > 0.0, "lambda must be positive");
    require(p.s > 0.0, "s must be positive");
    require(p.t0 > 0.0 && p.t0 < t_final, "t0 must lie in (0, T)");
    require(p.delta > 0.0 && p.delta < std::min(p.t0, t_final - p.t0),
            "window violates 0<delta<min(t0,T-t0)");
}

bool WeightField::in_window(std::size_t k) const {
    const double tk = t.time(k);
    const double eps = 1e-12 * t.t_final;
    return tk > t0 - delta + eps && tk < t0 + delta - eps;
}

double WeightField::alpha_t(std::size_t ix, std::size_t k) const {
    const double tk = t.time(k);
    const double T = t.t_final;
    const double q = tk * (T - tk);
    return -numerator[ix] * (T - 2.0 * tk) / (q * q);
}

double WeightField::max_alpha() const {
    double m = kNegInf;
    for (std::size_t ix = 0; ix < nx; ++ix)
        for (std::size_t k = 1; k < t.nt; ++k) m = std::max(m, alpha[at(ix, k)]);
    return m;
}

WeightField build_weights(const PhaseSpaceGrid& g, const WeightParams& p) {
    require(p.lambda > 0.0, "lambda must be positive");
    require(p.delta > 0.0 && p.t0 - p.delta > 0.0 && p.t0 + p.delta < g.t.t_final,
            "window violates 0<delta<min(t0,T-t0)");
    WeightField w;
    w.lambda = p.lambda;
    w.t0 = p.t0;
    w.delta = p.delta;
    w.t = g.t;
    w.nx = g.nx();
    const double ell = g.x.ell;
    if (p.d.kind == DSpec::Kind::Linear) {
        require(p.d.kappa_fraction > 0.0, "d offset must be positive");
        for (double x : g.x.nodes) {
            w.d.push_back(ell - x + p.d.kappa_fraction * ell);
            w.d_x.push_back(-1.0);
            w.d_xx.push_back(0.0);
        }
    } else {
        require(p.d.table.size() == g.nx(), "tabulated d needs one value per x node");
        w.d = p.d.table;
        w.d_x = ddx(std::span<const double>(w.d), g.x.h);
        w.d_xx = d2dx2(std::span<const double>(w.d), g.x.h);
        for (std::size_t ix = 0; ix < g.nx(); ++ix) {
            require(w.d[ix] > 0.0, "tabulated d must be positive");
            require(w.d_x[ix] < 0.0, "tabulated d must be strictly decreasing");
        }
    }
    for (double v : w.d) w.d_norm = std::max(w.d_norm, std::abs(v));
    const double top = std::exp(2.0 * p.lambda * w.d_norm);
    const double T = g.t.t_final;
    const std::size_t nodes = g.t.nodes();
    w.alpha.assign(w.nx * nodes, kNegInf);
    w.phi.assign(w.nx * nodes, kInf);
    w.alpha_delta.assign(w.nx * nodes, kNegInf);
    w.phi_delta.assign(w.nx * nodes, kInf);
    for (std::size_t ix = 0; ix < w.nx; ++ix) {
        const double e = std::exp(p.lambda * w.d[ix]);
        w.numerator.push_back(e - top);
        for (std::size_t k = 0; k < nodes; ++k) {
            const double tk = g.t.time(k);
            if (w.interior(k)) {
                const double q = tk * (T - tk);
                w.alpha[w.at(ix, k)] = (e - top) / q;
                w.phi[w.at(ix, k)] = e / q;
            }
            if (w.in_window(k)) {
                const double q = (tk - p.t0 + p.delta) * (p.t0 + p.delta - tk);
                w.alpha_delta[w.at(ix, k)] = (e - top) / q;
                w.phi_delta[w.at(ix, k)] = e / q;
            }
        }
    }
    return w;
}

Field conjugate(const PhaseSpaceGrid& g, const Field& u, const WeightField& w, double s,
                double log_shift) {
    require(u.nx() == g.nx() && u.nv() == g.nv() && u.nt_nodes() == g.nt_nodes(),
            "field does not match the grid");
    Field z = g.make_field();
    for (std::size_t ix = 0; ix < g.nx(); ++ix)
        for (std::size_t k = 0; k < g.nt_nodes(); ++k) {
            if (!w.interior(k)) continue;
            const double f = std::exp(s * w.alpha[w.at(ix, k)] - log_shift);
            for (std::size_t iv = 0; iv < g.nv(); ++iv) z(ix, iv, k) = f * u(ix, iv, k);
        }
    return z;
}

SplitOperator split_operator(const PhaseSpaceGrid& g, const Field& z, const WeightField& w,
                             double s) {
    require(z.nx() == g.nx() && z.nv() == g.nv() && z.nt_nodes() == g.nt_nodes(),
            "field does not match the grid");
    SplitOperator out{g.make_field(), g.make_field(), g.make_field()};
    const double lam = w.lambda;
    const double dt = g.t.dt;
    for (std::size_t k = 1; k < g.t.nt; ++k) {
        const Slice zk = z.slice(k);
        const Slice zx = ddx(zk, g.x.h);
        const Slice zxx = d2dx2(zk, g.x.h);
        for (std::size_t ix = 0; ix < g.nx(); ++ix) {
            const double phi = w.phi[w.at(ix, k)];
            const double at = w.alpha_t(ix, k);
            const double dx = w.d_x[ix];
            const double dxx = w.d_xx[ix];
            for (std::size_t iv = 0; iv < g.nv(); ++iv) {
                const double v2 = g.v.nodes[iv] * g.v.nodes[iv];
                const double zz = zk(ix, iv);
                const double zt = (z(ix, iv, k + 1) - z(ix, iv, k - 1)) / (2.0 * dt);
                out.p1(ix, iv, k) = -v2 * zxx(ix, iv) -
                                    s * s * lam * lam * phi * phi * dx * dx * v2 * zz - s * at * zz;
                out.p2(ix, iv, k) = zt + 2.0 * s * lam * phi * dx * v2 * zx(ix, iv);
                out.r0(ix, iv, k) =
                    -s * lam * lam * phi * dx * dx * v2 * zz - s * lam * phi * dxx * v2 * zz;
            }
        }
    }
    return out;
}

double conjugation_defect(const PhaseSpaceGrid& g, const Field& u, const WeightField& w, double s) {
    const double shift = s * w.max_alpha();
    const Field z = conjugate(g, u, w, s, shift);
    const SplitOperator sp = split_operator(g, z, w, s);
    const double dt = g.t.dt;
    const auto wx = g.x.weights();
    double num = 0.0;
    double den = 0.0;
    for (std::size_t k = 1; k < g.t.nt; ++k) {
        const Slice uxx = d2dx2(u.slice(k), g.x.h);
        for (std::size_t ix = 1; ix + 1 < g.nx(); ++ix) {
            const double e = std::exp(s * w.alpha[w.at(ix, k)] - shift);
            for (std::size_t iv = 0; iv < g.nv(); ++iv) {
                const double v2 = g.v.nodes[iv] * g.v.nodes[iv];
                const double ut = (u(ix, iv, k + 1) - u(ix, iv, k - 1)) / (2.0 * dt);
                const double oracle = e * (ut - v2 * uxx(ix, iv));
                const double lhs = sp.p1(ix, iv, k) + sp.p2(ix, iv, k) - sp.r0(ix, iv, k);
                const double wt = wx[ix] * g.v.weights[iv];
                num += wt * (lhs - oracle) * (lhs - oracle);
                den += wt * oracle * oracle;
            }
        }
    }
    return den > 0.0 ? std::sqrt(num / den) : std::sqrt(num);
}

void LogSum::add(double x) {
    if (x == kNegInf) return;
    if (x > max_) {
        sum_ = sum_ * std::exp(max_ - x) + 1.0;
        max_ = x;
    } else {
        sum_ += std::exp(x - max_);
    }
}

double LogSum::value() const { return max_ == kNegInf ? kNegInf : max_ + std::log(sum_); }

double log_add(double a, double b) {
    LogSum l;
    l.add(a);
    l.add(b);
    return l.value();
}

double CarlemanReport::log_rhs() const {
    LogSum l;
    l.add(log_rhs_interior);
    l.add(log_rhs_boundary);
    l.add(log_rhs_trace0);
    return l.value();
}

namespace {

double empirical_constant(double log_lhs, double log_rhs) {
    if (log_lhs == kNegInf) return 0.0;
    if (log_rhs == kNegInf) return kInf;
    return std::exp(log_lhs - log_rhs);
}

}  // namespace

CarlemanReport evaluate_parabolic_estimate(
    const PhaseSpaceGrid& g, const std::vector<Field>& u,
    const std::function<std::vector<Slice>(std::size_t)>& f, const WeightField& w, double s,
    CarlemanDomain domain) {
    require(s > 0.0, "s must be positive");
    require(w.lambda > 0.0, "lambda must be positive");
    require(!u.empty(), "no components to evaluate");
    for (const Field& c : u)
        require(c.nx() == g.nx() && c.nv() == g.nv() && c.nt_nodes() == g.nt_nodes(),
                "field does not match the grid");
    const bool window = domain == CarlemanDomain::QDelta;
    const auto& alpha = window ? w.alpha_delta : w.alpha;
    const auto& phi = window ? w.phi_delta : w.phi;
    const double lam = w.lambda;
    const double dt = g.t.dt;
    const auto wx = g.x.weights();
    const std::size_t nx = g.nx();

    CarlemanReport rep;
    rep.lambda = lam;
    rep.s = s;
    LogSum lhs, rhs_f;
    double log_wb = kNegInf;
    const double log_s3l4 = 3.0 * std::log(s) + 4.0 * std::log(lam);

    for (std::size_t k = 1; k < g.t.nt; ++k) {
        if (window ? !w.in_window(k) : !w.interior(k)) continue;
        for (std::size_t ix : {std::size_t{0}, nx - 1})
            log_wb = std::max(log_wb, log_s3l4 + 3.0 * std::log(phi[w.at(ix, k)]) +
                                          2.0 * s * alpha[w.at(ix, k)]);
        const auto fk = f(k);
        require(fk.size() == u.size(), "source has the wrong number of components");
        for (std::size_t j = 0; j < u.size(); ++j) {
            const Slice uk = u[j].slice(k);
            const Slice ux = ddx(uk, g.x.h);
            for (std::size_t ix = 0; ix < nx; ++ix) {
                const double a = alpha[w.at(ix, k)];
                const double ph = phi[w.at(ix, k)];
                for (std::size_t iv = 0; iv < g.nv(); ++iv) {
                    const double base = std::log(wx[ix] * g.v.weights[iv] * dt) + 2.0 * s * a;
                    const double ut = (u[j](ix, iv, k + 1) - u[j](ix, iv, k - 1)) / (2.0 * dt);
                    lhs.add(base - std::log(s * ph) + log_sq(ut));
                    lhs.add(base + std::log(s * lam * lam * ph) + log_sq(ux(ix, iv)));
                    lhs.add(base + log_s3l4 + 3.0 * std::log(ph) + log_sq(uk(ix, iv)));
                    rhs_f.add(base + log_sq(fk[j](ix, iv)));
                }
            }
            // unweighted traces
            for (std::size_t iv = 0; iv < g.nv(); ++iv) {
                const std::size_t ixo = g.v.positive(iv) ? nx - 1 : 0;
                const double ut = (u[j](ixo, iv, k + 1) - u[j](ixo, iv, k - 1)) / (2.0 * dt);
                const double wv = g.v.weights[iv] * dt;
                rep.raw_boundary +=
                    wv * (uk(ixo, iv) * uk(ixo, iv) + ut * ut + ux(ixo, iv) * ux(ixo, iv));
                rep.raw_trace0 += wv * ux(0, iv) * ux(0, iv);
            }
        }
    }
    rep.log_lhs = lhs.value();
    rep.log_rhs_interior = rhs_f.value();
    rep.log_boundary_weight = log_wb;
    rep.log_rhs_boundary = rep.raw_boundary > 0.0 ? log_wb + std::log(rep.raw_boundary) : kNegInf;
    rep.log_rhs_trace0 = rep.raw_trace0 > 0.0 ? log_wb + std::log(rep.raw_trace0) : kNegInf;
    rep.c_emp = empirical_constant(rep.log_lhs, rep.log_rhs());
    return rep;
}

CarlemanReport evaluate_stationary_estimate(const PhaseSpaceGrid& g, const Slice& w,
                                            const std::optional<Slice>& F, const Slice& b,
                                            const Kernel& c, const WeightField& weights,
                                            double s) {
    require(s > 0.0, "s must be positive");
    require(weights.lambda > 0.0, "lambda must be positive");
    require(w.nx() == g.nx() && w.nv() == g.nv(), "w does not match the grid");
    double scale = 1.0;
    for (double x : w.values()) scale = std::max(scale, std::abs(x));
    for (std::size_t iv = 0; iv < g.nv(); ++iv)
        if (std::abs(w(0, iv)) > 1e-12 * scale)
            throw PreconditionError("stationary estimate needs w(0, v) = 0");

    const Slice wx = ddx(w, g.x.h);
    Slice rhs;
    if (F) {
        require(F->nx() == g.nx() && F->nv() == g.nv(), "F does not match the grid");
        rhs = *F;
    } else {
        require(b.nx() == g.nx() && b.nv() == g.nv(), "b does not match the grid");
        require(c.nx() == g.nx() && c.nv() == g.nv(), "c does not match the grid");
        rhs = Slice(g.nx(), g.nv());
        for (std::size_t ix = 0; ix < g.nx(); ++ix)
            for (std::size_t iv = 0; iv < g.nv(); ++iv) {
                double acc = wx(ix, iv) + b(ix, iv) * w(ix, iv);
                for (std::size_t jv = 0; jv < g.nv(); ++jv)
                    acc += g.v.weights[jv] * c(ix, iv, jv) * w(ix, jv);
                rhs(ix, iv) = acc;
            }
    }

    const auto qx = g.x.weights();
    LogSum lhs, rhs_f;
    for (std::size_t ix = 0; ix < g.nx(); ++ix) {
        const double a = weights.alpha_delta_t0(ix);
        for (std::size_t iv = 0; iv < g.nv(); ++iv) {
            const double base = std::log(qx[ix] * g.v.weights[iv]) + 2.0 * s * a;
            lhs.add(base + log_sq(wx(ix, iv)));
            lhs.add(base + 2.0 * std::log(s) + log_sq(w(ix, iv)));
            rhs_f.add(base + log_sq(rhs(ix, iv)));
        }
    }
    CarlemanReport rep;
    rep.lambda = weights.lambda;
    rep.s = s;
    rep.log_lhs = lhs.value();
    rep.log_rhs_interior = rhs_f.value();
    rep.log_rhs_boundary = kNegInf;
    rep.log_rhs_trace0 = kNegInf;
    rep.log_boundary_weight = kNegInf;
    rep.c_emp = empirical_constant(rep.log_lhs, rep.log_rhs());
    return rep;
}

std::vector<CarlemanReport> sweep(const std::vector<SweepPoint>& lattice,
                                  const std::function<CarlemanReport(double, double)>& eval) {
    require(!lattice.empty(), "empty (s, lambda) lattice");
    std::vector<CarlemanReport> rows;
    rows.reserve(lattice.size());
    for (const auto& pt : lattice) rows.push_back(eval(pt.lambda, pt.s));
    return rows;
}

std::optional<double> find_knee(const std::vector<CarlemanReport>& rows, double lambda) {
    std::vector<const CarlemanReport*> sel;
    for (const auto& r : rows)
        if (std::abs(r.lambda - lambda) <= 1e-12 * std::max(1.0, std::abs(lambda)))
            sel.push_back(&r);
    std::stable_sort(sel.begin(), sel.end(),
                     [](const CarlemanReport* a, const CarlemanReport* b) { return a->s < b->s; });
    sel.erase(std::unique(sel.begin(), sel.end(),
                          [](const CarlemanReport* a, const CarlemanReport* b) { return a->s == b->s; }),
              sel.end());
    if (sel.size() < 2) return std::nullopt;
    std::size_t i = sel.size() - 1;
    while (i > 0 && sel[i]->c_emp <= sel[i - 1]->c_emp * (1.0 + 1e-12)) --i;
    if (i == sel.size() - 1) return std::nullopt;
    return sel[i]->s;
}

std::vector<SweepPoint> make_lattice(const std::vector<double>& lambdas,
                                     const std::vector<double>& s_values) {
    std::vector<SweepPoint> out;
    for (double l : lambdas)
        for (double s : s_values) out.push_back({l, s});
    return out;
}

Field time_derivative(const PhaseSpaceGrid& g, const Field& u) {
    require(u.nt_nodes() >= 2, "need at least two time nodes");
    Field out(u.nx(), u.nv(), u.nt_nodes());
    const double dt = g.t.dt;
    const std::size_t n = u.nt_nodes();
    for (std::size_t ix = 0; ix < u.nx(); ++ix)
        for (std::size_t iv = 0; iv < u.nv(); ++iv) {
            const auto src = u.lane(ix, iv);
            auto dst = out.lane(ix, iv);
            dst[0] = (src[1] - src[0]) / dt;
            dst[n - 1] = (src[n - 1] - src[n - 2]) / dt;
            for (std::size_t k = 1; k + 1 < n; ++k) dst[k] = (src[k + 1] - src[k - 1]) / (2.0 * dt);
        }
    return out;
}

}  // namespace fracrte
