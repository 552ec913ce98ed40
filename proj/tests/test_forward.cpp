#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "fracrte/coefficients.hpp"
#include "fracrte/error.hpp"
#include "fracrte/fraccalc.hpp"
#include "fracrte/forward.hpp"
#include "fracrte/inverse.hpp"

using namespace fracrte;

namespace {

CoefficientSet slab_coeffs(const PhaseSpaceGrid& g) {
    Slice st = g.make_slice();
    for (std::size_t ix = 0; ix < g.nx(); ++ix)
        for (std::size_t iv = 0; iv < g.nv(); ++iv) st(ix, iv) = 1.0 + 0.2 * g.x.nodes[ix];
    return CoefficientSet(st, g.make_slice(0.5), g.make_kernel(1.0 / g.v.measure()), 5.0);
}

// Inflow copied from a full field on Gamma_-.
void set_inflow_from(const PhaseSpaceGrid& g, const Field& u, ProblemData& d) {
    for (std::size_t iv = 0; iv < g.nv(); ++iv)
        for (std::size_t k = 0; k < g.nt_nodes(); ++k) {
            d.inflow(Side::Left, iv, k) = u(0, iv, k);
            d.inflow(Side::Right, iv, k) = u(g.nx() - 1, iv, k);
        }
}

// u_e = t^2 (1 + x) with the source built from the solver's own transport
// operator and the analytic half derivative Gamma(3)/Gamma(5/2) t^{3/2} (1 + x).
struct Manufactured {
    PhaseSpaceGrid g;
    CoefficientSet c;
    Field exact;
    ProblemData data;
};

Manufactured manufactured(std::size_t nx, std::size_t nt, XScheme scheme) {
    Manufactured m;
    m.g = build_grid({1.0, nx, 1.0, 2.0, 4, 1.0, nt});
    const auto& g = m.g;
    m.c = slab_coeffs(g);
    m.exact = g.make_field();
    for (std::size_t ix = 0; ix < g.nx(); ++ix)
        for (std::size_t iv = 0; iv < g.nv(); ++iv)
            for (std::size_t k = 0; k < g.nt_nodes(); ++k) {
                const double t = g.t.time(k);
                m.exact(ix, iv, k) = t * t * (1.0 + g.x.nodes[ix]);
            }
    m.data = zero_data(g);
    set_inflow_from(g, m.exact, m.data);
    Field q = g.make_field();
    const double c = std::tgamma(3.0) / std::tgamma(2.5);
    for (std::size_t k = 1; k < g.nt_nodes(); ++k) {
        const Slice uk = m.exact.slice(k);
        const Slice adv = upwind_transport(g, uk, scheme);
        const Slice scat = m.c.scatter(g.v, uk);
        const double t = g.t.time(k);
        for (std::size_t ix = 0; ix < g.nx(); ++ix)
            for (std::size_t iv = 0; iv < g.nv(); ++iv)
                q(ix, iv, k) = c * std::pow(t, 1.5) * (1.0 + g.x.nodes[ix]) + adv(ix, iv) +
                               m.c.sigma_t()(ix, iv) * uk(ix, iv) - scat(ix, iv);
    }
    m.data.source = std::move(q);
    return m;
}

double max_diff(const Field& a, const Field& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a.values()[i] - b.values()[i]));
    return m;
}

ProblemData smooth_data(const PhaseSpaceGrid& g, double tilt) {
    ProblemData d = zero_data(g);
    for (std::size_t ix = 0; ix < g.nx(); ++ix)
        for (std::size_t iv = 0; iv < g.nv(); ++iv) d.initial(ix, iv) = 1.0 + tilt * g.v.nodes[iv] / g.v.v1;
    for (std::size_t iv = 0; iv < g.nv(); ++iv)
        for (std::size_t k = 0; k < g.nt_nodes(); ++k) {
            const double osc = 1.0 + 0.5 * std::sin(2.0 * M_PI * g.t.time(k));
            d.inflow(Side::Left, iv, k) = d.initial(0, iv) * osc;
            d.inflow(Side::Right, iv, k) = d.initial(g.nx() - 1, iv) * osc;
        }
    return d;
}

}  // namespace

TEST_CASE("vacuum with zero data gives exactly zero") {
    auto g = build_grid({1.0, 11, 1.0, 2.0, 3, 1.0, 20});
    for (auto scheme : {XScheme::Upwind1, XScheme::Upwind2}) {
        SolverOptions o;
        o.x_scheme = scheme;
        const auto res = solve_frte(g, vacuum_coefficients(g), zero_data(g), o);
        for (double x : res.u.values()) CHECK(x == 0.0);
        CHECK(residual_frte(g, res.u, vacuum_coefficients(g), zero_data(g), scheme) == 0.0);
    }
    // zero data with scattering is zero as well
    const auto res = solve_frte(g, slab_coeffs(g), zero_data(g));
    for (double x : res.u.values()) CHECK(x == 0.0);
}

TEST_CASE("x-homogeneous absorber follows the Mittag-Leffler decay") {
    auto g = build_grid({1.0, 11, 1.0, 2.0, 2, 1.0, 1000});
    const auto c = constant_coefficients(g, 1.0, 0.0, 2.0);
    ProblemData d = zero_data(g);
    for (std::size_t ix = 0; ix < g.nx(); ++ix)
        for (std::size_t iv = 0; iv < g.nv(); ++iv) d.initial(ix, iv) = 1.0;
    for (std::size_t iv = 0; iv < g.nv(); ++iv)
        for (std::size_t k = 0; k < g.nt_nodes(); ++k) {
            const double e = frac::mittag_leffler_half(-std::sqrt(g.t.time(k)));
            d.inflow(Side::Left, iv, k) = e;
            d.inflow(Side::Right, iv, k) = e;
        }
    const auto res = solve_frte(g, c, d);
    CHECK(res.warnings.empty());
    const double target = std::exp(1.0) * std::erfc(1.0);
    CHECK(target == doctest::Approx(0.4275836).epsilon(1e-7));
    for (std::size_t ix = 0; ix < g.nx(); ++ix)
        for (std::size_t iv = 0; iv < g.nv(); ++iv)
            CHECK(std::abs(res.u(ix, iv, g.t.nt) - target) <= 1e-2);
}

TEST_CASE("manufactured solution: joint refinement order") {
    for (auto scheme : {XScheme::Upwind1, XScheme::Upwind2}) {
        std::vector<double> err;
        for (std::size_t lvl = 0; lvl < 3; ++lvl) {
            const std::size_t nx = 10u << lvl;
            const std::size_t nt = 50u << lvl;
            auto m = manufactured(nx, nt, scheme);
            SolverOptions o;
            o.x_scheme = scheme;
            const auto res = solve_frte(m.g, m.c, m.data, o);
            err.push_back(max_diff(res.u, m.exact));
        }
        for (std::size_t i = 1; i < err.size(); ++i) CHECK(std::log2(err[i - 1] / err[i]) >= 0.9);
    }
}

TEST_CASE("residual of the exact manufactured field decreases under refinement") {
    // u_e = t^2 (1 + x^2) with an analytic source: the discrete defect is truncation error
    double last = INFINITY;
    for (std::size_t nx : {11u, 21u, 41u}) {
        auto g = build_grid({1.0, nx, 1.0, 2.0, 4, 1.0, 5 * (nx - 1)});
        const auto c = slab_coeffs(g);
        Field u = g.make_field();
        Field q = g.make_field();
        const double gam = std::tgamma(3.0) / std::tgamma(2.5);
        for (std::size_t ix = 0; ix < g.nx(); ++ix)
            for (std::size_t iv = 0; iv < g.nv(); ++iv)
                for (std::size_t k = 0; k < g.nt_nodes(); ++k) {
                    const double x = g.x.nodes[ix];
                    const double t = g.t.time(k);
                    u(ix, iv, k) = t * t * (1.0 + x * x);
                }
        for (std::size_t k = 0; k < g.nt_nodes(); ++k) {
            const Slice scat = c.scatter(g.v, u.slice(k));
            const double t = g.t.time(k);
            for (std::size_t ix = 0; ix < g.nx(); ++ix)
                for (std::size_t iv = 0; iv < g.nv(); ++iv) {
                    const double x = g.x.nodes[ix];
                    q(ix, iv, k) = gam * std::pow(t, 1.5) * (1.0 + x * x) +
                                   g.v.nodes[iv] * t * t * 2.0 * x + c.sigma_t()(ix, iv) * u(ix, iv, k) -
                                   scat(ix, iv);
                }
        }
        ProblemData d = zero_data(g);
        set_inflow_from(g, u, d);
        d.source = q;
        const double r = residual_frte(g, u, c, d);
        CHECK(r < last);
        last = r;
    }
}

TEST_CASE("solver output satisfies its own discrete equation") {
    auto g = build_grid({1.0, 21, 1.0, 2.0, 4, 1.0, 100});
    const auto c = slab_coeffs(g);
    const auto d = smooth_data(g, 0.5);
    for (auto scheme : {XScheme::Upwind1, XScheme::Upwind2}) {
        SolverOptions o;
        o.x_scheme = scheme;
        const auto res = solve_frte(g, c, d, o);
        CHECK(res.max_source_iterations >= 2);
        // source iteration stops at a relative update of 1e-10
        CHECK(residual_frte(g, res.u, c, d, scheme) <= 1e-10 * max_abs(res.u.values()) * 10.0);
    }
}

TEST_CASE("inflow trace is imposed exactly") {
    auto g = build_grid({1.0, 15, 1.0, 2.0, 3, 1.0, 40});
    const auto d = smooth_data(g, 0.3);
    const auto res = solve_frte(g, slab_coeffs(g), d);
    for (std::size_t iv = 0; iv < g.nv(); ++iv)
        for (std::size_t k = 0; k < g.nt_nodes(); ++k) {
            if (g.v.positive(iv))
                CHECK(res.u(0, iv, k) == d.inflow(Side::Left, iv, k));
            else
                CHECK(res.u(g.nx() - 1, iv, k) == d.inflow(Side::Right, iv, k));
        }
}

TEST_CASE("non-negative data give a non-negative solution") {
    auto g = build_grid({1.0, 21, 1.0, 2.0, 4, 1.0, 60});
    std::mt19937 rng(42);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    for (int trial = 0; trial < 3; ++trial) {
        ProblemData d = zero_data(g);
        for (double& x : d.initial.values()) x = U(rng);
        Field q = g.make_field();
        for (double& x : q.values()) x = U(rng);
        d.source = q;
        for (std::size_t iv = 0; iv < g.nv(); ++iv)
            for (std::size_t k = 0; k < g.nt_nodes(); ++k) {
                d.inflow(Side::Left, iv, k) = U(rng);
                d.inflow(Side::Right, iv, k) = U(rng);
            }
        const auto res = solve_frte(g, slab_coeffs(g), d);
        CHECK_FALSE(res.warnings.empty());  // a and g disagree at t = 0
        double lowest = 0.0;
        for (double x : res.u.values()) lowest = std::min(lowest, x);
        CHECK(lowest == 0.0);
    }
}

TEST_CASE("causality: later inflow does not change earlier steps") {
    auto g = build_grid({1.0, 15, 1.0, 2.0, 3, 1.0, 50});
    const auto c = slab_coeffs(g);
    const auto d = smooth_data(g, 0.2);
    auto d2 = d;
    const std::size_t kstar = 30;
    for (std::size_t iv = 0; iv < g.nv(); ++iv)
        for (std::size_t k = kstar; k < g.nt_nodes(); ++k) {
            d2.inflow(Side::Left, iv, k) += 1.0;
            d2.inflow(Side::Right, iv, k) -= 0.5;
        }
    const auto a = solve_frte(g, c, d).u;
    const auto b = solve_frte(g, c, d2).u;
    bool later_differs = false;
    for (std::size_t ix = 0; ix < g.nx(); ++ix)
        for (std::size_t iv = 0; iv < g.nv(); ++iv) {
            for (std::size_t k = 0; k < kstar; ++k) CHECK(a(ix, iv, k) == b(ix, iv, k));
            if (a(ix, iv, kstar) != b(ix, iv, kstar)) later_differs = true;
        }
    CHECK(later_differs);
}

TEST_CASE("repeated solves are bit-identical") {
    auto g = build_grid({1.0, 15, 1.0, 2.0, 3, 1.0, 30});
    const auto c = slab_coeffs(g);
    const auto d = smooth_data(g, 0.4);
    const auto a = solve_frte(g, c, d).u;
    const auto b = solve_frte(g, c, d).u;
    CHECK(max_diff(a, b) == 0.0);
}

TEST_CASE("a != g at t = 0 is a warning") {
    auto g = build_grid({1.0, 5, 1.0, 2.0, 2, 1.0, 5});
    ProblemData d = zero_data(g);
    d.initial(0, g.nv() - 1) = 1.0;
    const auto res = solve_frte(g, slab_coeffs(g), d);
    REQUIRE(res.warnings.size() == 1);
}

TEST_CASE("source iteration reports non-convergence") {
    auto g = build_grid({1.0, 11, 1.0, 2.0, 3, 1.0, 10});
    SolverOptions o;
    o.max_iterations = 1;
    o.tolerance = 1e-14;
    CHECK_THROWS_AS(solve_frte(g, slab_coeffs(g), smooth_data(g, 0.5), o), ConvergenceError);
}

TEST_CASE("shape mismatches are rejected") {
    auto g = build_grid({1.0, 11, 1.0, 2.0, 3, 1.0, 10});
    auto g2 = build_grid({1.0, 12, 1.0, 2.0, 3, 1.0, 10});
    CHECK_THROWS_AS(solve_frte(g, slab_coeffs(g2), zero_data(g)), PreconditionError);
    CHECK_THROWS_AS(parse_x_scheme("upwind3"), PreconditionError);
    CHECK(parse_x_scheme(to_string(XScheme::Upwind2)) == XScheme::Upwind2);
}

TEST_CASE("difference system") {
    auto g = build_grid({1.0, 21, 1.0, 2.0, 4, 1.0, 80});
    const auto ref = slab_coeffs(g);
    CoefficientPerturbation r{g.make_slice(), g.make_slice()};
    for (std::size_t ix = 0; ix < g.nx(); ++ix)
        for (std::size_t iv = 0; iv < g.nv(); ++iv) {
            const double x = g.x.nodes[ix];
            r.r_t(ix, iv) = 0.06 * x * x * (1 - x) * (1 - x) * 16 * (1 + 0.1 * g.v.nodes[iv] / 2);
            r.r_s(ix, iv) = 0.06 * x * x * (1 - x) * (1 - x) * 16 * (1 - 0.1 * g.v.nodes[iv] / 2);
        }
    const auto pert = perturb(ref, r);
    std::vector<ProblemData> ex{smooth_data(g, 0.0), smooth_data(g, 0.5)};
    std::vector<Field> u2, diff;
    for (const auto& d : ex) {
        const auto a = solve_frte(g, pert, d).u;
        const auto b = solve_frte(g, ref, d).u;
        diff.push_back(a - b);
        u2.push_back(b);
    }
    const auto R = build_R(g, u2, ref, InverseMode::Full);

    SUBCASE("zero perturbation gives zero fields") {
        CoefficientPerturbation zero{g.make_slice(), g.make_slice()};
        for (const auto& f : solve_difference_system(g, pert, R, zero))
            for (double x : f.values()) CHECK(x == 0.0);
    }
    SUBCASE("matches the difference of two forward solves") {
        const auto w = solve_difference_system(g, pert, R, r);
        REQUIRE(w.size() == 2);
        for (std::size_t j = 0; j < 2; ++j)
            CHECK(max_diff(w[j], diff[j]) <= 1e-8 * max_abs(diff[j].values()));
    }
    SUBCASE("linear in r") {
        CoefficientPerturbation r2{2.0 * r.r_t, 2.0 * r.r_s};
        const auto w1 = solve_difference_system(g, pert, R, r);
        const auto w2 = solve_difference_system(g, pert, R, r2);
        for (std::size_t j = 0; j < 2; ++j)
            CHECK(max_diff(w2[j], 2.0 * w1[j]) <= 1e-12 * max_abs(w2[j].values()));
    }
}
