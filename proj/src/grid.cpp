#include "fracrte/grid.hpp"

#include <cmath>
#include <numbers>

#include "fracrte/error.hpp"

namespace fracrte {

std::vector<double> SpatialGrid::weights() const {
    std::vector<double> w(nx, h);
    w.front() *= 0.5;
    w.back() *= 0.5;
    return w;
}

std::size_t TimeGrid::index_of(double t) const {
    require(t >= 0.0 && t <= t_final * (1.0 + 1e-12), "time outside [0, T]");
    auto k = static_cast<std::size_t>(std::llround(t / dt));
    return std::min(k, nt);
}

void gauss_legendre(std::size_t n, std::vector<double>& nodes, std::vector<double>& weights) {
    require(n >= 1, "Gauss-Legendre needs at least one node");
    nodes.assign(n, 0.0);
    weights.assign(n, 0.0);
    const std::size_t m = (n + 1) / 2;
    for (std::size_t i = 0; i < m; ++i) {
        double z = std::cos(std::numbers::pi * (static_cast<double>(i) + 0.75) /
                            (static_cast<double>(n) + 0.5));
        double dp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p0 = 1.0;
            double p1 = z;
            for (std::size_t k = 2; k <= n; ++k) {
                const double kk = static_cast<double>(k);
                const double p2 = ((2.0 * kk - 1.0) * z * p1 - (kk - 1.0) * p0) / kk;
                p0 = p1;
                p1 = p2;
            }
            dp = static_cast<double>(n) * (z * p1 - p0) / (z * z - 1.0);
            const double dz = p1 / dp;
            z -= dz;
            if (std::abs(dz) < 1e-16) break;
        }
        nodes[i] = -z;
        nodes[n - 1 - i] = z;
        weights[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        weights[n - 1 - i] = weights[i];
    }
}

PhaseSpaceGrid build_grid(const GridSpec& s) {
    require(s.nx >= 2, "nx must be at least 2");
    require(s.nv >= 2, "nv must be at least 2");
    require(s.nt >= 2, "nt must be at least 2");
    require(s.ell > 0.0, "ell must be positive");
    require(s.t_final > 0.0, "T must be positive");
    require(s.v0 > 0.0, "v0 must be positive");
    require(s.v0 < s.v1, "v0 must be smaller than v1");

    PhaseSpaceGrid g;
    g.x.ell = s.ell;
    g.x.nx = s.nx;
    g.x.h = s.ell / static_cast<double>(s.nx - 1);
    g.x.nodes.resize(s.nx);
    for (std::size_t i = 0; i < s.nx; ++i) g.x.nodes[i] = static_cast<double>(i) * g.x.h;
    g.x.nodes.back() = s.ell;

    g.v.v0 = s.v0;
    g.v.v1 = s.v1;
    g.v.nv = s.nv;
    g.v.rule = s.rule;
    std::vector<double> ref_nodes;
    std::vector<double> ref_weights;
    const double half = 0.5 * (s.v1 - s.v0);
    const double mid = 0.5 * (s.v1 + s.v0);
    if (s.rule == VelocityQuadrature::GaussLegendre) {
        gauss_legendre(s.nv, ref_nodes, ref_weights);
        for (auto& w : ref_weights) w *= half;
        for (auto& z : ref_nodes) z = mid + half * z;
    } else {
        const double hv = (s.v1 - s.v0) / static_cast<double>(s.nv - 1);
        ref_nodes.resize(s.nv);
        ref_weights.assign(s.nv, hv);
        ref_weights.front() *= 0.5;
        ref_weights.back() *= 0.5;
        for (std::size_t i = 0; i < s.nv; ++i) ref_nodes[i] = s.v0 + static_cast<double>(i) * hv;
        ref_nodes.back() = s.v1;
    }
    g.v.nodes.resize(2 * s.nv);
    g.v.weights.resize(2 * s.nv);
    for (std::size_t i = 0; i < s.nv; ++i) {
        // negative branch mirrors the positive one, ascending order
        g.v.nodes[i] = -ref_nodes[s.nv - 1 - i];
        g.v.weights[i] = ref_weights[s.nv - 1 - i];
        g.v.nodes[s.nv + i] = ref_nodes[i];
        g.v.weights[s.nv + i] = ref_weights[i];
    }

    g.t.t_final = s.t_final;
    g.t.nt = s.nt;
    g.t.dt = s.t_final / static_cast<double>(s.nt);
    return g;
}

std::vector<BoundarySet> PhaseSpaceGrid::gamma_plus() const {
    BoundarySet left{Side::Left, -1, {}};
    BoundarySet right{Side::Right, +1, {}};
    for (std::size_t iv = 0; iv < v.size(); ++iv) {
        if (v.positive(iv))
            right.velocities.push_back(iv);
        else
            left.velocities.push_back(iv);
    }
    return {left, right};
}

std::vector<BoundarySet> PhaseSpaceGrid::gamma_minus() const {
    BoundarySet left{Side::Left, -1, {}};
    BoundarySet right{Side::Right, +1, {}};
    for (std::size_t iv = 0; iv < v.size(); ++iv) {
        if (v.positive(iv))
            left.velocities.push_back(iv);
        else
            right.velocities.push_back(iv);
    }
    return {left, right};
}

bool PhaseSpaceGrid::is_inflow(std::size_t ix, std::size_t iv) const {
    if (ix == 0) return v.positive(iv);
    if (ix + 1 == x.nx) return !v.positive(iv);
    return false;
}

bool PhaseSpaceGrid::is_outflow(std::size_t ix, std::size_t iv) const {
    if (ix == 0) return !v.positive(iv);
    if (ix + 1 == x.nx) return v.positive(iv);
    return false;
}

double integrate_velocity(const VelocityGrid& v, std::span<const double> samples) {
    require(samples.size() == v.size(), "velocity sample count does not match the grid");
    double acc = 0.0;
    for (std::size_t i = 0; i < samples.size(); ++i) acc += v.weights[i] * samples[i];
    return acc;
}

NormKind parse_norm_kind(const std::string& name) {
    if (name == "L2") return NormKind::L2;
    if (name == "H1") return NormKind::H1;
    if (name == "H2") return NormKind::H2;
    throw PreconditionError("unknown norm kind '" + name + "'");
}

std::vector<double> ddx(std::span<const double> f, double h) {
    const std::size_t n = f.size();
    require(n >= 2, "ddx needs at least two nodes");
    std::vector<double> d(n);
    if (n == 2) {
        d[0] = d[1] = (f[1] - f[0]) / h;
        return d;
    }
    for (std::size_t i = 1; i + 1 < n; ++i) d[i] = (f[i + 1] - f[i - 1]) / (2.0 * h);
    d[0] = (-3.0 * f[0] + 4.0 * f[1] - f[2]) / (2.0 * h);
    d[n - 1] = (3.0 * f[n - 1] - 4.0 * f[n - 2] + f[n - 3]) / (2.0 * h);
    return d;
}

std::vector<double> d2dx2(std::span<const double> f, double h) {
    const std::size_t n = f.size();
    require(n >= 3, "d2dx2 needs at least three nodes");
    std::vector<double> d(n);
    const double h2 = h * h;
    for (std::size_t i = 1; i + 1 < n; ++i) d[i] = (f[i + 1] - 2.0 * f[i] + f[i - 1]) / h2;
    if (n >= 4) {
        d[0] = (2.0 * f[0] - 5.0 * f[1] + 4.0 * f[2] - f[3]) / h2;
        d[n - 1] = (2.0 * f[n - 1] - 5.0 * f[n - 2] + 4.0 * f[n - 3] - f[n - 4]) / h2;
    } else {
        d[0] = d[2] = d[1];
    }
    return d;
}

namespace {

template <typename Stencil>
Slice apply_x(const Slice& f, Stencil stencil) {
    Slice out(f.nx(), f.nv());
    std::vector<double> col(f.nx());
    for (std::size_t iv = 0; iv < f.nv(); ++iv) {
        for (std::size_t ix = 0; ix < f.nx(); ++ix) col[ix] = f(ix, iv);
        const auto d = stencil(col);
        for (std::size_t ix = 0; ix < f.nx(); ++ix) out(ix, iv) = d[ix];
    }
    return out;
}

}  // namespace

Slice ddx(const Slice& f, double h) {
    return apply_x(f, [h](std::span<const double> c) { return ddx(c, h); });
}

Slice d2dx2(const Slice& f, double h) {
    return apply_x(f, [h](std::span<const double> c) { return d2dx2(c, h); });
}

double discrete_norm(const PhaseSpaceGrid& g, const Slice& f, NormKind kind) {
    require(f.nx() == g.nx() && f.nv() == g.nv(), "slice does not match the grid");
    const auto wx = g.x.weights();
    auto integrate_sq = [&](const Slice& s) {
        double acc = 0.0;
        for (std::size_t ix = 0; ix < s.nx(); ++ix) {
            double row = 0.0;
            for (std::size_t iv = 0; iv < s.nv(); ++iv) row += g.v.weights[iv] * s(ix, iv) * s(ix, iv);
            acc += wx[ix] * row;
        }
        return acc;
    };
    double total = integrate_sq(f);
    if (kind == NormKind::H1 || kind == NormKind::H2) total += integrate_sq(ddx(f, g.x.h));
    if (kind == NormKind::H2) total += integrate_sq(d2dx2(f, g.x.h));
    return total;
}

}  // namespace fracrte
