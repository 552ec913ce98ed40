#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <optional>
#include <vector>

#include "fracrte/carleman.hpp"
#include "fracrte/error.hpp"

using namespace fracrte;

namespace {

PhaseSpaceGrid grid(std::size_t nx, std::size_t nv, std::size_t nt, double T = 1.0) {
    return build_grid({1.0, nx, 1.0, 2.0, nv, T, nt, VelocityQuadrature::GaussLegendre});
}

WeightParams params(double lambda, double t0 = 0.5, double delta = 0.25) {
    WeightParams p;
    p.lambda = lambda;
    p.t0 = t0;
    p.delta = delta;
    return p;
}

template <class F>
Field sample(const PhaseSpaceGrid& g, F f) {
    Field u = g.make_field();
    for (std::size_t ix = 0; ix < g.nx(); ++ix)
        for (std::size_t iv = 0; iv < g.nv(); ++iv)
            for (std::size_t k = 0; k < g.nt_nodes(); ++k)
                u(ix, iv, k) = f(g.x.nodes[ix], g.v.nodes[iv], g.t.time(k));
    return u;
}

Slice x_slice(const PhaseSpaceGrid& g) {
    Slice w = g.make_slice();
    for (std::size_t ix = 0; ix < g.nx(); ++ix)
        for (std::size_t iv = 0; iv < g.nv(); ++iv) w(ix, iv) = g.x.nodes[ix];
    return w;
}

CarlemanReport row(double lambda, double s, double c) {
    CarlemanReport r;
    r.lambda = lambda;
    r.s = s;
    r.c_emp = c;
    return r;
}

}  // namespace

TEST_CASE("weights: signs and d") {
    auto g = grid(21, 2, 40);
    for (double lam : {0.5, 1.0, 3.0}) {
        const auto w = build_weights(g, params(lam));
        for (std::size_t ix = 0; ix < g.nx(); ++ix) {
            CHECK(w.d[ix] > 0.0);
            CHECK(w.d_x[ix] < 0.0);
            CHECK(w.d[ix] == doctest::Approx(1.1 - g.x.nodes[ix]));
            CHECK(w.numerator[ix] < 0.0);
            for (std::size_t k = 1; k < g.t.nt; ++k) {
                CHECK(w.alpha[w.at(ix, k)] < 0.0);
                CHECK(w.phi[w.at(ix, k)] > 0.0);
            }
            CHECK(std::isinf(w.alpha[w.at(ix, 0)]));
            CHECK(std::exp(w.alpha[w.at(ix, g.t.nt)]) == 0.0);
        }
        CHECK(w.d_norm == doctest::Approx(1.1));
    }
}

TEST_CASE("weights: window form peaks at t0") {
    auto g = grid(11, 2, 40);
    const auto w = build_weights(g, params(2.0, 0.5, 0.25));
    const std::size_t k0 = g.t.index_of(0.5);
    for (std::size_t ix = 0; ix < g.nx(); ++ix) {
        const double a0 = w.alpha_delta_t0(ix);
        CHECK(a0 == doctest::Approx(w.numerator[ix] / 0.0625));
        CHECK(w.alpha_delta[w.at(ix, k0)] == doctest::Approx(a0).epsilon(1e-14));
        for (std::size_t k = 0; k < g.t.nodes(); ++k) {
            if (!w.in_window(k)) {
                CHECK(std::exp(w.alpha_delta[w.at(ix, k)]) == 0.0);
                continue;
            }
            CHECK(w.alpha_delta[w.at(ix, k)] <= a0 * (1.0 - 1e-14));
        }
    }
    // window ends are excluded: 0.25 and 0.75 are grid nodes here
    CHECK_FALSE(w.in_window(g.t.index_of(0.25)));
    CHECK_FALSE(w.in_window(g.t.index_of(0.75)));
    CHECK(w.in_window(g.t.index_of(0.275)));
}

TEST_CASE("weights: bad parameters") {
    auto g = grid(11, 2, 40);
    CHECK_THROWS_WITH_AS(build_weights(g, params(1.0, 0.5, 0.6)), "window violates 0<delta<min(t0,T-t0)",
                         PreconditionError);
    CHECK_THROWS_AS(build_weights(g, params(1.0, 0.2, 0.2)), PreconditionError);
    CHECK_THROWS_AS(build_weights(g, params(0.0)), PreconditionError);
    CHECK_THROWS_AS(validate_weight_params(params(1.0, 1.0, 0.1), 1.0), PreconditionError);

    WeightParams p = params(1.0);
    p.d.kind = DSpec::Kind::Tabulated;
    p.d.table.assign(g.nx(), 1.0);  // not decreasing
    CHECK_THROWS_AS(build_weights(g, p), PreconditionError);
    p.d.table.resize(3);
    CHECK_THROWS_AS(build_weights(g, p), PreconditionError);
    p.d.table.clear();
    for (double x : g.x.nodes) p.d.table.push_back(2.0 - x * x);
    p.d.table[0] = 2.0 + 1e-3;  // keeps d_x < 0 at the one-sided end
    const auto w = build_weights(g, p);
    CHECK(w.d_xx[5] == doctest::Approx(-2.0));
}

TEST_CASE("conjugation") {
    auto g = grid(11, 2, 20);
    const auto w = build_weights(g, params(1.0));
    const Field one = sample(g, [](double, double, double) { return 1.0; });
    const double s = 0.7;
    const Field z = conjugate(g, one, w, s);
    const Field same = conjugate(g, one, w, 0.0);
    for (std::size_t ix = 0; ix < g.nx(); ++ix)
        for (std::size_t iv = 0; iv < g.nv(); ++iv) {
            for (std::size_t k = 1; k < g.t.nt; ++k) {
                CHECK(z(ix, iv, k) == doctest::Approx(std::exp(s * w.alpha[w.at(ix, k)])).epsilon(1e-14));
                CHECK(same(ix, iv, k) == 1.0);
            }
            CHECK(z(ix, iv, 0) == 0.0);
            CHECK(z(ix, iv, g.t.nt) == 0.0);
        }
    // z vanishes at t = 0 and T, so does its x derivative
    for (std::size_t k : {std::size_t{0}, g.t.nt}) {
        const Slice zx = ddx(z.slice(k), g.x.h);
        for (double x : zx.values()) CHECK(x == 0.0);
    }
    // the shift only rescales
    const Field zs = conjugate(g, one, w, s, 2.0);
    CHECK(zs(4, 1, 7) == doctest::Approx(z(4, 1, 7) * std::exp(-2.0)).epsilon(1e-14));
}

TEST_CASE("split operator special cases") {
    auto g = grid(11, 2, 20);
    const auto w = build_weights(g, params(1.5));
    const Field zero = g.make_field();
    const auto sp0 = split_operator(g, zero, w, 3.0);
    for (const Field* f : {&sp0.p1, &sp0.p2, &sp0.r0})
        for (double x : f->values()) CHECK(x == 0.0);

    const Field z = sample(g, [](double x, double v, double t) { return std::sin(2 * x + t) * (1 + 0.2 * v); });
    const auto sp = split_operator(g, z, w, 0.0);
    for (std::size_t k = 1; k < g.t.nt; ++k) {
        const Slice zxx = d2dx2(z.slice(k), g.x.h);
        for (std::size_t ix = 0; ix < g.nx(); ++ix)
            for (std::size_t iv = 0; iv < g.nv(); ++iv) {
                const double v2 = g.v.nodes[iv] * g.v.nodes[iv];
                CHECK(sp.p1(ix, iv, k) == doctest::Approx(-v2 * zxx(ix, iv)).epsilon(1e-13));
                CHECK(sp.p2(ix, iv, k) ==
                      doctest::Approx((z(ix, iv, k + 1) - z(ix, iv, k - 1)) / (2 * g.t.dt)).epsilon(1e-13));
                CHECK(sp.r0(ix, iv, k) == 0.0);
            }
    }
}

TEST_CASE("conjugation defect shrinks with the mesh") {
    // long horizon keeps the weight gradients resolvable
    auto u_of = [](double x, double v, double t) {
        return 0.3 + std::sin(std::numbers::pi * x + 0.4) * std::cos(2 * std::numbers::pi * t / 25.0) +
               0.5 * x * (t / 25.0) * (1 + 0.1 * v);
    };
    for (double lam : {1.0, 2.0}) {
        double last = 1e300;
        for (std::size_t n : {50u, 100u, 200u}) {
            auto g = grid(n, 2, 5 * n, 25.0);
            const auto w = build_weights(g, params(lam, 12.5, 6.25));
            const double d = conjugation_defect(g, sample(g, u_of), w, 20.0);
            CHECK(std::isfinite(d));
            CHECK(d < last);
            last = d;
        }
        CHECK(last < (lam == 1.0 ? 1e-4 : 1e-2));
    }
}

TEST_CASE("log-space sums") {
    LogSum l;
    CHECK(std::isinf(l.value()));
    l.add(-std::numeric_limits<double>::infinity());
    CHECK(std::isinf(l.value()));
    l.add(std::log(2.0));
    l.add(std::log(3.0));
    CHECK(l.value() == doctest::Approx(std::log(5.0)).epsilon(1e-15));
    // far below the double range
    CHECK(log_add(-2000.0, -2000.0) == doctest::Approx(-2000.0 + std::log(2.0)).epsilon(1e-15));
    CHECK(log_add(-1e4, 0.0) == 0.0);
}

TEST_CASE("parabolic estimate: zero field and scaling") {
    auto g = grid(11, 2, 40);
    const auto w = build_weights(g, params(1.0));
    const std::vector<Field> zero{g.make_field()};
    auto f0 = [&](std::size_t) { return std::vector<Slice>{g.make_slice()}; };
    for (auto dom : {CarlemanDomain::Q, CarlemanDomain::QDelta}) {
        const auto r = evaluate_parabolic_estimate(g, zero, f0, w, 5.0, dom);
        CHECK(r.c_emp == 0.0);
        CHECK(std::isinf(r.log_lhs));
    }

    const Field u = sample(g, [](double x, double v, double t) { return x * t * (1 + 0.1 * v) + t * t; });
    const Field f = sample(g, [](double x, double, double t) { return std::cos(x + t); });
    auto fs = [&](double c) {
        return [&, c](std::size_t k) {
            Slice s = f.slice(k);
            for (double& x : s.values()) x *= c;
            return std::vector<Slice>{s};
        };
    };
    Field u3 = u;
    for (double& x : u3.values()) x *= 3.0;
    for (auto dom : {CarlemanDomain::Q, CarlemanDomain::QDelta}) {
        const auto a = evaluate_parabolic_estimate(g, {u}, fs(1.0), w, 4.0, dom);
        const auto b = evaluate_parabolic_estimate(g, {u3}, fs(3.0), w, 4.0, dom);
        CHECK(std::isfinite(a.c_emp));
        CHECK(a.c_emp > 0.0);
        CHECK(b.c_emp == doctest::Approx(a.c_emp).epsilon(1e-12));
        CHECK(b.log_lhs == doctest::Approx(a.log_lhs + 2 * std::log(3.0)).epsilon(1e-12));
    }
    CHECK_THROWS_AS(evaluate_parabolic_estimate(g, {}, f0, w, 1.0, CarlemanDomain::Q), PreconditionError);
    CHECK_THROWS_AS(evaluate_parabolic_estimate(g, {u}, f0, w, 0.0, CarlemanDomain::Q), PreconditionError);
}

TEST_CASE("parabolic estimate against direct summation on a 5 x 2 grid") {
    // u = (x^2 + 0.3x + 1)(1 + v/4)(t + t^2): every stencil used is exact on it,
    // so the oracle can use the analytic derivatives.
    auto g = grid(5, 2, 10);
    REQUIRE(g.nv() == 4);
    const double lam = 1.0;
    const double s = 1.0;
    const auto w = build_weights(g, params(lam));
    auto U = [](double x, double v, double t) { return (x * x + 0.3 * x + 1) * (1 + v / 4) * (t + t * t); };
    auto Ux = [](double x, double v, double t) { return (2 * x + 0.3) * (1 + v / 4) * (t + t * t); };
    auto Ut = [](double x, double v, double t) { return (x * x + 0.3 * x + 1) * (1 + v / 4) * (1 + 2 * t); };
    auto Fn = [](double x, double v, double t) { return std::sin(x + t) * v; };
    const Field u = sample(g, U);
    const Field f = sample(g, Fn);

    for (auto dom : {CarlemanDomain::Q, CarlemanDomain::QDelta}) {
        const bool win = dom == CarlemanDomain::QDelta;
        const double T = 1.0;
        double lhs = 0, rhs_f = 0, wb = 0, raw_b = 0, raw_0 = 0;
        for (std::size_t k = 1; k < 10; ++k) {
            const double t = 0.1 * k;
            if (win && !(t > 0.25 + 1e-12 && t < 0.75 - 1e-12)) continue;
            const double q = win ? (t - 0.25) * (0.75 - t) : t * (T - t);
            for (std::size_t ix = 0; ix < 5; ++ix) {
                const double x = 0.25 * ix;
                const double d = 1.1 - x;
                const double a = (std::exp(lam * d) - std::exp(2 * lam * 1.1)) / q;
                const double ph = std::exp(lam * d) / q;
                const double e = std::exp(2 * s * a);
                const double qx = (ix == 0 || ix == 4) ? 0.125 : 0.25;
                if (ix == 0 || ix == 4) wb = std::max(wb, s * s * s * std::pow(lam, 4) * ph * ph * ph * e);
                for (std::size_t iv = 0; iv < g.nv(); ++iv) {
                    const double v = g.v.nodes[iv];
                    const double wt = qx * g.v.weights[iv] * 0.1 * e;
                    const double uu = U(x, v, t), ux = Ux(x, v, t), ut = Ut(x, v, t);
                    lhs += wt * (ut * ut / (s * ph) + s * lam * lam * ph * ux * ux +
                                 s * s * s * std::pow(lam, 4) * ph * ph * ph * uu * uu);
                    rhs_f += wt * Fn(x, v, t) * Fn(x, v, t);
                }
            }
            for (std::size_t iv = 0; iv < g.nv(); ++iv) {
                const double v = g.v.nodes[iv];
                const double xo = v > 0 ? 1.0 : 0.0;
                const double wv = g.v.weights[iv] * 0.1;
                raw_b += wv * (std::pow(U(xo, v, t), 2) + std::pow(Ut(xo, v, t), 2) + std::pow(Ux(xo, v, t), 2));
                raw_0 += wv * std::pow(Ux(0.0, v, t), 2);
            }
        }
        const auto rep = evaluate_parabolic_estimate(
            g, {u}, [&](std::size_t k) { return std::vector<Slice>{f.slice(k)}; }, w, s, dom);
        CHECK(rep.raw_boundary == doctest::Approx(raw_b).epsilon(1e-12));
        CHECK(rep.raw_trace0 == doctest::Approx(raw_0).epsilon(1e-12));
        CHECK(std::exp(rep.log_boundary_weight) == doctest::Approx(wb).epsilon(1e-12));
        CHECK(rep.lhs() == doctest::Approx(lhs).epsilon(1e-12));
        CHECK(rep.rhs_interior() == doctest::Approx(rhs_f).epsilon(1e-12));
        CHECK(rep.rhs_boundary() == doctest::Approx(wb * raw_b).epsilon(1e-12));
        CHECK(rep.rhs_trace0() == doctest::Approx(wb * raw_0).epsilon(1e-12));
        CHECK(rep.c_emp == doctest::Approx(lhs / (rhs_f + wb * (raw_b + raw_0))).epsilon(1e-12));
    }
}

TEST_CASE("stationary estimate: w = x with b = c = 0") {
    auto g = grid(201, 4, 100);
    const Slice w = x_slice(g);
    const Slice b = g.make_slice();
    const Kernel c = g.make_kernel();
    for (double lam : {1.0, 2.0}) {
        const auto W = build_weights(g, params(lam));
        for (double s : {5.0, 20.0, 80.0}) {
            const auto rep = evaluate_stationary_estimate(g, w, std::nullopt, b, c, W, s);
            // F = w_x = 1: c = int (1 + s^2 x^2) E / int E, E = e^{2 s alpha_delta(x, t0)}
            double num = 0, den = 0;
            const double a0 = W.alpha_delta_t0(0);
            for (std::size_t ix = 0; ix < g.nx(); ++ix) {
                const double x = g.x.nodes[ix];
                const double q = (ix == 0 || ix + 1 == g.nx()) ? 0.5 : 1.0;
                const double e = q * std::exp(2 * s * (W.alpha_delta_t0(ix) - a0));
                num += (1 + s * s * x * x) * e;
                den += e;
            }
            CHECK(rep.c_emp == doctest::Approx(num / den).epsilon(1e-10));
            CHECK(rep.c_emp >= 1.0);
            CHECK(std::isinf(rep.log_rhs_boundary));

            // passing F explicitly gives the same numbers
            Slice F = g.make_slice(1.0);
            const auto rf = evaluate_stationary_estimate(g, w, F, b, c, W, s);
            CHECK(rf.c_emp == doctest::Approx(rep.c_emp).epsilon(1e-12));
        }
    }
}

TEST_CASE("stationary estimate: zero field, w(0) != 0, and the kernel term") {
    auto g = grid(21, 2, 20);
    const auto W = build_weights(g, params(1.0));
    const Slice zero = g.make_slice();
    const Kernel c0 = g.make_kernel();
    CHECK(evaluate_stationary_estimate(g, zero, std::nullopt, zero, c0, W, 10.0).c_emp == 0.0);

    const Slice one = g.make_slice(1.0);
    CHECK_THROWS_AS(evaluate_stationary_estimate(g, one, std::nullopt, zero, c0, W, 10.0), PreconditionError);

    // F = w_x + b w + int c w assembled by hand
    const Slice w = x_slice(g);
    Slice b = g.make_slice();
    Kernel c = g.make_kernel();
    for (std::size_t ix = 0; ix < g.nx(); ++ix)
        for (std::size_t iv = 0; iv < g.nv(); ++iv) {
            b(ix, iv) = 1.0 + g.x.nodes[ix];
            for (std::size_t jv = 0; jv < g.nv(); ++jv) c(ix, iv, jv) = 0.1 * (iv + 1) * (jv + 2);
        }
    Slice F = g.make_slice();
    for (std::size_t ix = 0; ix < g.nx(); ++ix)
        for (std::size_t iv = 0; iv < g.nv(); ++iv) {
            double acc = 1.0 + b(ix, iv) * w(ix, iv);
            for (std::size_t jv = 0; jv < g.nv(); ++jv) acc += g.v.weights[jv] * c(ix, iv, jv) * w(ix, jv);
            F(ix, iv) = acc;
        }
    const auto a = evaluate_stationary_estimate(g, w, std::nullopt, b, c, W, 10.0);
    const auto e = evaluate_stationary_estimate(g, w, F, b, c, W, 10.0);
    CHECK(a.c_emp == doctest::Approx(e.c_emp).epsilon(1e-12));
}

TEST_CASE("sweep and knee") {
    CHECK_THROWS_AS(sweep({}, [](double l, double s) { return row(l, s, 1.0); }), PreconditionError);

    const auto one = sweep({{2.0, 10.0}}, [](double l, double s) { return row(l, s, 1.0 / s); });
    REQUIRE(one.size() == 1);
    CHECK(one[0].lambda == 2.0);
    CHECK_FALSE(find_knee(one, 2.0).has_value());

    const auto lat = make_lattice({1.0, 2.0}, {10.0, 20.0, 40.0, 80.0});
    REQUIRE(lat.size() == 8);
    CHECK(lat[4].lambda == 2.0);
    CHECK(lat[4].s == 10.0);
    const auto rows = sweep(lat, [](double l, double s) {
        // lambda = 1 rises then falls after s = 20; lambda = 2 falls throughout
        if (l == 1.0) return row(l, s, s <= 20.0 ? s : 400.0 / s);
        return row(l, s, 1.0 / s);
    });
    REQUIRE(rows.size() == 8);
    CHECK(*find_knee(rows, 1.0) == 20.0);
    CHECK(*find_knee(rows, 2.0) == 10.0);
    CHECK_FALSE(find_knee(rows, 3.0).has_value());

    // rising at the end: no knee
    std::vector<CarlemanReport> up{row(1, 10, 1.0), row(1, 20, 0.5), row(1, 40, 0.7)};
    CHECK_FALSE(find_knee(up, 1.0).has_value());

    // duplicates and unsorted input
    std::vector<CarlemanReport> dup{row(1, 40, 0.2), row(1, 10, 1.0), row(1, 10, 1.0), row(1, 20, 0.5)};
    CHECK(*find_knee(dup, 1.0) == 10.0);
}

TEST_CASE("time derivative") {
    auto g = grid(3, 2, 10);
    const Field u = sample(g, [](double x, double, double t) { return x + 3 * t * t; });
    const Field d = time_derivative(g, u);
    for (std::size_t k = 1; k < g.t.nt; ++k) CHECK(d(1, 0, k) == doctest::Approx(6 * g.t.time(k)));
    CHECK(d(1, 0, 0) == doctest::Approx(3 * g.t.dt));
}
