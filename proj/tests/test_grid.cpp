#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "fracrte/error.hpp"
#include "fracrte/grid.hpp"

using namespace fracrte;

namespace {

PhaseSpaceGrid small(std::size_t nx = 3, std::size_t nv = 2,
                     VelocityQuadrature rule = VelocityQuadrature::GaussLegendre) {
    return build_grid({1.0, nx, 1.0, 2.0, nv, 1.0, 4, rule});
}

std::vector<double> sample(const VelocityGrid& v, double (*f)(double)) {
    std::vector<double> out;
    for (double x : v.nodes) out.push_back(f(x));
    return out;
}

}  // namespace

TEST_CASE("uniform x nodes include both endpoints") {
    auto g = small();
    REQUIRE(g.x.nodes.size() == 3);
    CHECK(g.x.nodes[0] == 0.0);
    CHECK(g.x.nodes[1] == doctest::Approx(0.5));
    CHECK(g.x.nodes[2] == 1.0);
    CHECK(g.t.dt * g.t.nt == doctest::Approx(g.t.t_final));
    CHECK(g.nt_nodes() == 5);
}

TEST_CASE("velocity nodes: two ordered branches inside [v0, v1]") {
    for (auto rule : {VelocityQuadrature::GaussLegendre, VelocityQuadrature::Trapezoid}) {
        auto g = small(3, 5, rule);
        REQUIRE(g.nv() == 10);
        for (std::size_t iv = 0; iv < g.nv(); ++iv) {
            const double v = g.v.nodes[iv];
            CHECK(std::abs(v) >= 1.0 - 1e-14);
            CHECK(std::abs(v) <= 2.0 + 1e-14);
            CHECK(g.v.weights[iv] > 0.0);
            CHECK(g.v.positive(iv) == (v > 0));
            if (iv > 0) CHECK(g.v.nodes[iv] > g.v.nodes[iv - 1]);
        }
    }
}

TEST_CASE("velocity weights sum to |V|") {
    for (std::size_t nv : {2u, 3u, 8u, 16u}) {
        for (auto rule : {VelocityQuadrature::GaussLegendre, VelocityQuadrature::Trapezoid}) {
            auto g = small(3, nv, rule);
            double s = 0.0;
            for (double w : g.v.weights) s += w;
            CHECK(s == doctest::Approx(2.0).epsilon(1e-14));
        }
    }
}

TEST_CASE("build_grid rejects bad sizes") {
    CHECK_THROWS_AS(build_grid({1.0, 1, 1.0, 2.0, 2, 1.0, 4}), PreconditionError);
    CHECK_THROWS_AS(build_grid({1.0, 3, 1.0, 2.0, 1, 1.0, 4}), PreconditionError);
    CHECK_THROWS_AS(build_grid({1.0, 3, 1.0, 2.0, 2, 1.0, 1}), PreconditionError);
    CHECK_THROWS_AS(build_grid({1.0, 3, 2.0, 2.0, 2, 1.0, 4}), PreconditionError);
    CHECK_THROWS_AS(build_grid({1.0, 3, 0.0, 2.0, 2, 1.0, 4}), PreconditionError);
    CHECK_THROWS_AS(build_grid({0.0, 3, 1.0, 2.0, 2, 1.0, 4}), PreconditionError);
    CHECK_THROWS_AS(build_grid({1.0, 3, 1.0, 2.0, 2, -1.0, 4}), PreconditionError);
}

TEST_CASE("boundary sets partition the end nodes") {
    auto g = small(3, 4);
    const auto plus = g.gamma_plus();
    const auto minus = g.gamma_minus();
    for (const auto& b : plus) CHECK(b.nu == (b.side == Side::Left ? -1 : 1));
    for (const auto& b : minus) CHECK(b.nu == (b.side == Side::Left ? -1 : 1));
    for (std::size_t ix : {std::size_t{0}, g.nx() - 1})
        for (std::size_t iv = 0; iv < g.nv(); ++iv) {
            CHECK(g.is_inflow(ix, iv) != g.is_outflow(ix, iv));
            const double v = g.v.nodes[iv];
            // outflow: v < 0 at x = 0, v > 0 at x = ell
            CHECK(g.is_outflow(ix, iv) == (ix == 0 ? v < 0 : v > 0));
        }
    for (std::size_t iv = 0; iv < g.nv(); ++iv) {
        CHECK_FALSE(g.is_inflow(1, iv));
        CHECK_FALSE(g.is_outflow(1, iv));
    }
    std::size_t count = 0;
    for (const auto& b : plus) count += b.velocities.size();
    for (const auto& b : minus) count += b.velocities.size();
    CHECK(count == 2 * g.nv());
}

TEST_CASE("(0, -1.5) lies on the outflow set") {
    // trapezoid with 3 nodes per branch puts -1.5 on the grid
    auto g = small(3, 3, VelocityQuadrature::Trapezoid);
    std::size_t found = g.nv();
    for (std::size_t iv = 0; iv < g.nv(); ++iv)
        if (std::abs(g.v.nodes[iv] + 1.5) < 1e-14) found = iv;
    REQUIRE(found < g.nv());
    CHECK(g.is_outflow(0, found));
    CHECK(g.is_inflow(g.nx() - 1, found));
}

TEST_CASE("integrate_velocity") {
    auto g = small(3, 4);
    CHECK(integrate_velocity(g.v, sample(g.v, [](double) { return 1.0; })) == doctest::Approx(2.0));
    CHECK(std::abs(integrate_velocity(g.v, sample(g.v, [](double v) { return v; }))) < 1e-14);
    CHECK(integrate_velocity(g.v, sample(g.v, [](double v) { return v * v; })) ==
          doctest::Approx(14.0 / 3.0).epsilon(1e-14));
    std::vector<double> wrong(3, 1.0);
    CHECK_THROWS_AS(integrate_velocity(g.v, wrong), PreconditionError);
}

TEST_CASE("integrate_velocity converges at the rule's order") {
    // int_V e^v dv = e^2 - e + e^{-1} - e^{-2}
    const double exact = std::exp(2.0) - std::exp(1.0) + std::exp(-1.0) - std::exp(-2.0);
    auto err = [&](std::size_t nv, VelocityQuadrature rule) {
        auto g = build_grid({1.0, 3, 1.0, 2.0, nv, 1.0, 4, rule});
        return std::abs(integrate_velocity(g.v, sample(g.v, [](double v) { return std::exp(v); })) - exact);
    };
    const double e8 = err(8, VelocityQuadrature::Trapezoid);
    const double e16 = err(16, VelocityQuadrature::Trapezoid);
    const double e32 = err(32, VelocityQuadrature::Trapezoid);
    CHECK(std::log2(e8 / e16) > 1.9);
    CHECK(std::log2(e16 / e32) > 1.9);
    CHECK(err(2, VelocityQuadrature::GaussLegendre) < 1e-2);
    CHECK(err(4, VelocityQuadrature::GaussLegendre) < 1e-6);
    CHECK(err(8, VelocityQuadrature::GaussLegendre) < 1e-13);
}

TEST_CASE("discrete norms") {
    auto g = build_grid({1.0, 201, 1.0, 2.0, 4, 1.0, 4});
    Slice zero = g.make_slice();
    CHECK(discrete_norm(g, zero, NormKind::L2) == 0.0);
    CHECK(discrete_norm(g, zero, NormKind::H2) == 0.0);

    Slice c = g.make_slice(3.0);
    CHECK(discrete_norm(g, c, NormKind::L2) == doctest::Approx(9.0 * 1.0 * 2.0));

    Slice x = g.make_slice();
    for (std::size_t ix = 0; ix < g.nx(); ++ix)
        for (std::size_t iv = 0; iv < g.nv(); ++iv) x(ix, iv) = g.x.nodes[ix];
    // (int x^2 + int 1) * |V| = 8/3; trapezoid error is O(h^2)
    CHECK(discrete_norm(g, x, NormKind::H1) == doctest::Approx(8.0 / 3.0).epsilon(1e-4));
    CHECK(discrete_norm(g, x, NormKind::H2) == doctest::Approx(8.0 / 3.0).epsilon(1e-4));

    // homogeneous of degree 2
    Slice y = g.make_slice();
    for (std::size_t ix = 0; ix < g.nx(); ++ix)
        for (std::size_t iv = 0; iv < g.nv(); ++iv)
            y(ix, iv) = std::sin(3.0 * g.x.nodes[ix]) * g.v.nodes[iv];
    for (auto k : {NormKind::L2, NormKind::H1, NormKind::H2})
        CHECK(discrete_norm(g, -2.5 * y, k) == doctest::Approx(6.25 * discrete_norm(g, y, k)).epsilon(1e-13));

    CHECK(parse_norm_kind("H1") == NormKind::H1);
    CHECK_THROWS_AS(parse_norm_kind("H3"), PreconditionError);
}

TEST_CASE("H1 norm of x converges to 8/3 under refinement") {
    double last = 1.0;
    for (std::size_t nx : {11u, 21u, 41u}) {
        auto g = build_grid({1.0, nx, 1.0, 2.0, 2, 1.0, 4});
        Slice x = g.make_slice();
        for (std::size_t ix = 0; ix < g.nx(); ++ix)
            for (std::size_t iv = 0; iv < g.nv(); ++iv) x(ix, iv) = g.x.nodes[ix];
        const double e = std::abs(discrete_norm(g, x, NormKind::H1) - 8.0 / 3.0);
        CHECK(e < last);
        last = e;
    }
}

TEST_CASE("finite differences are exact on quadratics") {
    std::vector<double> f;
    const double h = 0.1;
    for (int i = 0; i < 7; ++i) f.push_back(1.0 + 2.0 * i * h + 3.0 * (i * h) * (i * h));
    const auto d1 = ddx(f, h);
    const auto d2 = d2dx2(f, h);
    for (int i = 0; i < 7; ++i) {
        CHECK(d1[i] == doctest::Approx(2.0 + 6.0 * i * h).epsilon(1e-12));
        CHECK(d2[i] == doctest::Approx(6.0).epsilon(1e-10));
    }
}
