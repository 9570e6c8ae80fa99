#include <gtest/gtest.h>

#include <cmath>
#include <string>
#include <vector>

#include "kvf/catalog.hpp"
#include "kvf/curvature.hpp"
#include "kvf/dsl.hpp"
#include "oracles.hpp"

namespace {

const char* kPolar = "manifold polar { coordinates: r, th; metric: [[1, 0], [r^2]]; base_point: (1.3, 0.2); }";

double rel_err(double a, double ref) { return std::abs(a - ref) / std::max(1.0, std::abs(ref)); }

void expect_christoffel_matches(const kvf::ManifoldSpec& s, const std::vector<double>& p, double tol) {
    const auto curv = kvf::connection_at(s, p);
    const auto fd = oracle::christoffel_fd(s, p);
    const std::size_t n = s.dimension();
    for (std::size_t a = 0; a < n; ++a)
        for (std::size_t b = 0; b < n; ++b)
            for (std::size_t c = 0; c < n; ++c)
                EXPECT_LE(rel_err(curv.christoffel()({a, b, c}), fd[a](b, c)), tol)
                    << s.name << " Gamma^" << a << "_" << b << c;
}

void expect_riemann_matches(const kvf::ManifoldSpec& s, const std::vector<double>& p, double tol) {
    const auto curv = kvf::compute_curvature(s, p, 0);
    const std::size_t n = s.dimension();
    for (std::size_t l = 0; l < n; ++l)
        for (std::size_t k = 0; k < n; ++k)
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = 0; j < n; ++j)
                    EXPECT_LE(rel_err(curv.riemann()({l, k, i, j}), oracle::riemann_fd(s, p, l, k, i, j)), tol)
                        << s.name << " R^" << l << "_" << k << i << j;
}

std::vector<std::string> catalog_refs() {
    return {"euclidean:n=3", "minkowski:p=1,q=2", "sphere2", "sphere2:r=3", "hyperbolic2", "cahen_wallach:q=1",
            "cahen_wallach:q=1/-1", "walker_recurrent"};
}

}  // namespace

TEST(Christoffel, PolarClosedForm) {
    const auto s = kvf::parse_manifold(kPolar);
    const auto curv = kvf::connection_at(s, s.base_point);
    const double r = 1.3;
    EXPECT_NEAR(curv.christoffel()({0, 1, 1}), -r, 1e-14);
    EXPECT_NEAR(curv.christoffel()({1, 0, 1}), 1 / r, 1e-14);
    EXPECT_NEAR(curv.christoffel()({1, 1, 0}), 1 / r, 1e-14);
    EXPECT_NEAR(curv.christoffel()({0, 0, 0}), 0.0, 1e-14);
    EXPECT_LE(curv.riemann().max_abs(), 1e-13);
}

TEST(Christoffel, MatchesFiniteDifferences) {
    expect_christoffel_matches(kvf::parse_manifold(kPolar), {1.3, 0.2}, 1e-8);
    expect_christoffel_matches(kvf::builtin("sphere2"), {0.9, 0.4}, 1e-8);
    expect_christoffel_matches(kvf::builtin("hyperbolic2"), {0.3, 1.7}, 1e-8);
    expect_christoffel_matches(kvf::builtin("walker_recurrent"), {0.1, 0.5, -0.3}, 1e-8);
}

TEST(Christoffel, RandomMetricsMatchFiniteDifferences) {
    for (unsigned seed = 1; seed <= 20; ++seed) {
        oracle::RandomExpr gen(2, seed);
        kvf::ManifoldSpec s;
        s.name = "random";
        s.coords = {"x", "y"};
        using namespace kvf::expr;
        // positive definite: diagonal 2 + u^2, off-diagonal sin(w) / 2
        auto d0 = add(constant(2.0), power(gen.make(3), 2));
        auto d1 = add(constant(2.0), power(gen.make(3), 2));
        auto off = mul(constant(0.5), call(kvf::Function::sin, gen.make(3)));
        s.metric = {{d0, off}, {off, d1}};
        s.base_point = gen.point();
        expect_christoffel_matches(s, s.base_point, 1e-6);
    }
}

TEST(Riemann, SphereClosedForm) {
    for (double r : {1.0, 2.5}) {
        const auto s = kvf::builtin("sphere2", {{"r", {r}}});
        const double th = 0.8;
        const auto curv = kvf::compute_curvature(s, std::vector<double>{th, 0.3}, 0);
        EXPECT_NEAR(curv.riemann()({0, 1, 0, 1}), std::sin(th) * std::sin(th), 1e-12);
        EXPECT_NEAR(curv.riemann()({1, 0, 0, 1}), -1.0, 1e-12);
        const auto low = kvf::lowered_riemann(curv);
        EXPECT_NEAR(low({0, 1, 0, 1}), r * r * std::sin(th) * std::sin(th), 1e-11);
    }
}

TEST(Riemann, MatchesFiniteDifferences) {
    expect_riemann_matches(kvf::builtin("sphere2"), {0.9, 0.4}, 1e-5);
    expect_riemann_matches(kvf::builtin("hyperbolic2"), {0.3, 1.7}, 1e-5);
    expect_riemann_matches(kvf::builtin("cahen_wallach:q=1/-1"), {0.2, 0.1, 0.4, -0.6}, 1e-5);
    expect_riemann_matches(kvf::builtin("walker_recurrent"), {0.1, 0.5, -0.3}, 1e-5);
    expect_riemann_matches(kvf::parse_manifold("manifold m { coordinates: x, y; metric: [[1, 0], [(1 + x^2)^2]]; }"),
                           {0.4, 0.0}, 1e-5);
}

TEST(Riemann, IdentitiesOnCatalog) {
    for (const auto& ref : catalog_refs()) {
        const auto s = kvf::builtin(std::string_view(ref));
        const auto curv = kvf::compute_curvature(s, s.base_point, 0);
        const auto res = kvf::curvature_identities(curv);
        const double scale = std::max(1.0, res.norm);
        EXPECT_LE(res.max_curvature_residual(), 1e-12 * scale) << ref;
        EXPECT_LE(res.metric_compatibility, 1e-12 * std::max(1.0, res.compatibility_scale)) << ref;
    }
}

TEST(Riemann, FlatMetricsVanish) {
    for (const char* ref : {"euclidean:n=3", "minkowski:p=1,q=3"}) {
        const auto s = kvf::builtin(ref);
        EXPECT_EQ(kvf::compute_curvature(s, s.base_point, 2).riemann().max_abs(), 0.0) << ref;
    }
    const auto polar = kvf::parse_manifold(kPolar);
    const auto curv = kvf::compute_curvature(polar, polar.base_point, 2);
    for (std::size_t m = 0; m <= 2; ++m) EXPECT_LE(curv.cov_riemann(m).max_abs(), 1e-12) << m;
}

TEST(CovariantDerivative, LocallySymmetricSpaces) {
    for (const char* ref : {"sphere2", "hyperbolic2", "cahen_wallach:q=1", "cahen_wallach:q=1/-1"}) {
        const auto s = kvf::builtin(ref);
        const auto curv = kvf::compute_curvature(s, s.base_point, 3);
        EXPECT_GT(curv.riemann().max_abs(), 0.1) << ref;
        for (std::size_t m = 1; m <= 3; ++m) EXPECT_LE(curv.cov_riemann(m).max_abs(), 1e-11) << ref << " m=" << m;
    }
}

TEST(CovariantDerivative, WalkerIsNotSymmetric) {
    const auto s = kvf::builtin("walker_recurrent");
    const auto curv = kvf::compute_curvature(s, s.base_point, 1);
    EXPECT_GT(curv.cov_riemann(1).max_abs(), 1e-3);
}

TEST(CovariantDerivative, SecondBianchi) {
    for (const char* ref : {"walker_recurrent", "sphere2"}) {
        const auto s = kvf::builtin(ref);
        const auto curv = kvf::compute_curvature(s, s.base_point, 1);
        const auto& d = curv.cov_riemann(1);
        const std::size_t n = s.dimension();
        double worst = 0.0;
        for (std::size_t l = 0; l < n; ++l)
            for (std::size_t k = 0; k < n; ++k)
                for (std::size_t i = 0; i < n; ++i)
                    for (std::size_t j = 0; j < n; ++j)
                        for (std::size_t c = 0; c < n; ++c)
                            worst = std::max(worst, std::abs(d({l, k, i, j, c}) + d({l, k, j, c, i}) +
                                                             d({l, k, c, i, j})));
        EXPECT_LE(worst, 1e-11 * std::max(1.0, d.max_abs())) << ref;
    }
    const auto bumpy = kvf::parse_manifold("manifold m { coordinates: x, y; metric: [[1, 0], [(1 + x^2)^2]]; }");
    const auto curv = kvf::compute_curvature(bumpy, std::vector<double>{0.4, 0.0}, 1);
    const auto& d = curv.cov_riemann(1);
    for (std::size_t c = 0; c < 2; ++c)
        EXPECT_LE(std::abs(d({0, 1, 0, 1, c}) + d({0, 1, 1, c, 0}) + d({0, 1, c, 0, 1})), 1e-11);
}

TEST(CovariantDerivative, FirstDerivativeMatchesFiniteDifferences) {
    // central differences of R plus connection terms
    const auto s = kvf::parse_manifold("manifold m { coordinates: x, y; metric: [[1, 0], [(1 + x^2)^2]]; }");
    const std::vector<double> p{0.4, 0.2};
    const auto curv = kvf::compute_curvature(s, p, 1);
    const std::size_t n = 2;
    const double h = 1e-4;
    for (std::size_t c = 0; c < n; ++c) {
        std::vector<double> a = p, b = p;
        a[c] += h;
        b[c] -= h;
        const auto ra = kvf::compute_curvature(s, a, 0).riemann();
        const auto rb = kvf::compute_curvature(s, b, 0).riemann();
        const auto& g = curv.christoffel();
        const auto& r = curv.riemann();
        for (std::size_t l = 0; l < n; ++l)
            for (std::size_t k = 0; k < n; ++k)
                for (std::size_t i = 0; i < n; ++i)
                    for (std::size_t j = 0; j < n; ++j) {
                        double v = (ra({l, k, i, j}) - rb({l, k, i, j})) / (2 * h);
                        for (std::size_t e = 0; e < n; ++e)
                            v += g({l, c, e}) * r({e, k, i, j}) - g({e, c, k}) * r({l, e, i, j}) -
                                 g({e, c, i}) * r({l, k, e, j}) - g({e, c, j}) * r({l, k, i, e});
                        EXPECT_LE(rel_err(curv.cov_riemann(1)({l, k, i, j, c}), v), 1e-6);
                    }
    }
}

TEST(Errors, OrderBeyondRecord) {
    const auto s = kvf::builtin("sphere2");
    const auto curv = kvf::compute_curvature(s, s.base_point, 1);
    EXPECT_NO_THROW(curv.cov_riemann(1));
    EXPECT_THROW(curv.cov_riemann(2), kvf::OrderError);
}

TEST(Errors, DenseArrayLimit) {
    EXPECT_TRUE(kvf::covariant_order_feasible(4, 6));
    EXPECT_FALSE(kvf::covariant_order_feasible(8, 6));
    const auto s = kvf::builtin("euclidean:n=8");
    EXPECT_THROW(kvf::compute_curvature(s, s.base_point, 6), kvf::OrderError);
}

TEST(Errors, PointDimension) {
    const auto s = kvf::builtin("sphere2");
    EXPECT_THROW(kvf::compute_curvature(s, std::vector<double>{1.0}, 0), kvf::StructuralError);
}
