#include <gtest/gtest.h>

#include <Eigen/Dense>

#include <algorithm>
#include <fstream>
#include <sstream>
#include <cmath>
#include <string>
#include <vector>

#include "kvf/catalog.hpp"
#include "kvf/killing.hpp"
#include "oracles.hpp"

namespace {

kvf::ManifoldSpec load(const std::string& file) {
    std::ifstream in(std::string(KVF_SOURCE_DIR) + "/manifolds/" + file);
    std::stringstream ss;
    ss << in.rdbuf();
    return kvf::parse_manifold(ss.str());
}

// -(d_j xi^i + Gamma^i_jk xi^k) from central differences.
kvf::KillingGerm germ_fd(const kvf::ManifoldSpec& s, const std::vector<kvf::ExprPtr>& f, const std::vector<double>& p) {
    const std::size_t n = s.dimension();
    const auto gamma = oracle::christoffel_fd(s, p);
    kvf::KillingGerm g{Eigen::VectorXd(n), Eigen::MatrixXd(n, n)};
    for (std::size_t i = 0; i < n; ++i) g.xi(i) = oracle::eval(*f[i], p);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            double v = oracle::central_first(*f[i], p, j, 1e-5);
            for (std::size_t k = 0; k < n; ++k) v += gamma[i](j, k) * g.xi(k);
            g.A(i, j) = -v;
        }
    return g;
}

std::vector<std::vector<double>> square_loop(const std::vector<double>& c, double h) {
    return {{c[0], c[1]}, {c[0] + h, c[1]}, {c[0] + h, c[1] + h}, {c[0], c[1] + h}, {c[0], c[1]}};
}

struct DimCase {
    const char* ref;
    std::size_t dim;
};

}  // namespace

TEST(KillingDimension, Catalog) {
    const DimCase cases[] = {{"euclidean:n=2", 3},     {"euclidean:n=3", 6},     {"minkowski:p=1,q=2", 6},
                             {"sphere2", 3},           {"sphere2:r=2", 3},       {"hyperbolic2", 3},
                             {"cahen_wallach:q=1", 4}, {"cahen_wallach:q=-1", 4}, {"cahen_wallach:q=1/-1", 6},
                             {"cahen_wallach:q=1/1", 7}, {"walker_recurrent", 1}};
    for (const auto& c : cases) {
        const auto s = kvf::builtin(c.ref);
        const auto rep = kvf::killing_dimension(s, s.base_point);
        EXPECT_TRUE(rep.stabilized) << c.ref;
        EXPECT_EQ(rep.stabilized_dim, c.dim) << c.ref;
        EXPECT_EQ(rep.kernel.size(), c.dim) << c.ref;
        EXPECT_FALSE(rep.upper_bound_only) << c.ref;
        const std::size_t n = s.dimension();
        EXPECT_EQ(rep.bundle_dim, n + n * (n - 1) / 2) << c.ref;
        EXPECT_LE(rep.stabilized_dim, rep.bundle_dim);
    }
}

TEST(KillingDimension, FlatStabilizesImmediately) {
    const auto s = kvf::builtin("euclidean:n=2");
    const auto rep = kvf::killing_dimension(s, s.base_point);
    EXPECT_EQ(rep.stabilization_order, 0u);
    EXPECT_EQ(rep.dims, (std::vector<std::size_t>{3}));
}

TEST(KillingDimension, WalkerSequence) {
    const auto s = kvf::builtin("walker_recurrent");
    const auto rep = kvf::killing_dimension(s, s.base_point);
    ASSERT_GE(rep.dims.size(), 2u);
    EXPECT_EQ(rep.dims.back(), rep.dims[rep.dims.size() - 2]);
    EXPECT_TRUE(std::is_sorted(rep.dims.rbegin(), rep.dims.rend()));
    EXPECT_EQ(rep.stabilized_dim, 1u);
}

TEST(KillingDimension, SingularGapsAreReported) {
    const auto s = kvf::builtin("cahen_wallach:q=1");
    const auto rep = kvf::killing_dimension(s, s.base_point);
    ASSERT_EQ(rep.gaps.size(), rep.dims.size());
    for (const auto& g : rep.gaps) {
        EXPECT_GT(g.smallest_retained, g.threshold);
        EXPECT_LE(g.largest_discarded, g.threshold);
    }
}

TEST(KillingDimension, UnstableWarning) {
    const auto s = kvf::builtin("walker_recurrent");
    const auto rep = kvf::killing_dimension(s, s.base_point, {1, 1e-8});
    EXPECT_FALSE(rep.stabilized);
    ASSERT_FALSE(rep.warnings.empty());
    EXPECT_NE(rep.warnings.front().find("unstable"), std::string::npos);
}

TEST(KillingDimension, NonAnalyticChartIsUpperBound) {
    const auto s = kvf::parse_manifold(
        "manifold polar { coordinates: r, phi; metric: [[1, 0], [r^2]]; base_point: (1.5, 0.3); }");
    const auto rep = kvf::killing_dimension(s, s.base_point);
    EXPECT_EQ(rep.stabilized_dim, 3u);
    EXPECT_TRUE(rep.upper_bound_only);
    EXPECT_TRUE(std::any_of(rep.warnings.begin(), rep.warnings.end(),
                            [](const std::string& w) { return w.find("upper bound") != std::string::npos; }));
}

TEST(KillingDimension, BumpySurface) {
    const auto s = load("bumpy_surface.man");
    const auto rep = kvf::killing_dimension(s, s.base_point);
    EXPECT_TRUE(rep.stabilized);
    EXPECT_EQ(rep.stabilized_dim, 1u);
}

TEST(KillingDimension, KernelContainsKnownFields) {
    for (const char* ref : {"sphere2", "hyperbolic2", "cahen_wallach:q=1/-1", "walker_recurrent"}) {
        const auto [name, params] = kvf::parse_builtin_ref(ref);
        const auto entry = kvf::catalog_entry(name, params);
        const auto s = kvf::parse_manifold(entry.source);
        const auto rep = kvf::killing_dimension(s, s.base_point);
        const auto g = kvf::metric_values(s, s.base_point);
        for (const auto& f : entry.fields) {
            std::string text;
            for (const auto& c : f.components) text += (text.empty() ? "" : ", ") + c;
            const auto field = kvf::parse_field(text, s);
            const auto germ = kvf::A_of_field(s, field, s.base_point).germ;
            EXPECT_LE(kvf::kernel_distance(rep, germ, g), 1e-8) << ref << " " << f.label;
        }
    }
}

TEST(KillingDimension, MultiPoint) {
    const auto s = kvf::builtin("sphere2");
    const auto mp = kvf::killing_dimension_multi(s);
    EXPECT_EQ(mp.reports.size(), 5u);
    EXPECT_EQ(mp.min_dim, 3u);
    EXPECT_TRUE(mp.stabilized);
    const auto again = kvf::perturbed_points(s.base_point, 5);
    for (std::size_t k = 0; k < 5; ++k) EXPECT_EQ(mp.reports[k].point, again[k]);
}

TEST(Fields, VerifyCatalogFields) {
    for (const char* ref : {"sphere2", "hyperbolic2", "cahen_wallach:q=1", "cahen_wallach:q=-1/2"}) {
        const auto [name, params] = kvf::parse_builtin_ref(ref);
        const auto entry = kvf::catalog_entry(name, params);
        const auto s = kvf::parse_manifold(entry.source);
        auto pts = kvf::perturbed_points(s.base_point, 4);
        pts.insert(pts.begin(), s.base_point);
        for (const auto& f : entry.fields) {
            std::string text;
            for (const auto& c : f.components) text += (text.empty() ? "" : ", ") + c;
            const auto field = kvf::parse_field(text, s);
            const auto rep = kvf::verify_killing(s, field, pts, 1e-10);
            EXPECT_TRUE(rep.passed) << ref << " " << f.label << " " << rep.max_residual;
            EXPECT_TRUE(kvf::check_nabA(s, field, pts, 1e-8).passed) << ref << " " << f.label;
        }
    }
}

TEST(Fields, NonKillingRejected) {
    const auto s = kvf::builtin("euclidean:n=2");
    const auto field = kvf::parse_field("x, 0", s);
    const std::vector<std::vector<double>> pts{{0.1, 0.2}};
    const auto rep = kvf::verify_killing(s, field, pts, 1e-10);
    EXPECT_FALSE(rep.passed);
    EXPECT_NEAR(rep.max_residual, 2.0, 1e-12);
    EXPECT_THROW(kvf::check_nabA(s, field, pts, 1e-8), kvf::PreconditionError);
    EXPECT_FALSE(kvf::A_of_field(s, field, pts[0]).in_so);
}

TEST(Fields, GermMatchesFiniteDifferences) {
    const auto s = kvf::builtin("sphere2");
    const auto field = kvf::parse_field("sin(phi), cos(theta) / sin(theta) * cos(phi)", s);
    const std::vector<double> p{0.9, 0.4};
    const auto fg = kvf::A_of_field(s, field, p);
    const auto ref = germ_fd(s, field, p);
    EXPECT_LE(kvf::germ_distance(fg.germ, ref), 1e-7);
    EXPECT_TRUE(fg.in_so);
}

TEST(Fields, EuclideanRotationGerm) {
    const auto s = kvf::builtin("euclidean:n=2");
    const auto fg = kvf::A_of_field(s, kvf::parse_field("-y, x", s), std::vector<double>{0.3, -0.7});
    EXPECT_DOUBLE_EQ(fg.germ.xi(0), 0.7);
    EXPECT_DOUBLE_EQ(fg.germ.xi(1), 0.3);
    EXPECT_DOUBLE_EQ(fg.germ.A(0, 1), 1.0);
    EXPECT_DOUBLE_EQ(fg.germ.A(1, 0), -1.0);
}

TEST(Basis, CoordinatesRoundTrip) {
    const auto s = kvf::builtin("cahen_wallach:q=1/-1");
    const kvf::KillingBasis basis(kvf::metric_values(s, std::vector<double>{0.2, 0, 0.3, -0.4}));
    EXPECT_EQ(basis.size(), 10u);
    Eigen::VectorXd c = Eigen::VectorXd::LinSpaced(10, -1.0, 2.0);
    const auto germ = basis.from_coordinates(c);
    EXPECT_LE(kvf::so_residual(germ.A, basis.metric()), 1e-14);
    EXPECT_LE((basis.coordinates(germ) - c).norm(), 1e-13);
}

TEST(Integrability, DerivationKillsIdentity) {
    const auto g = kvf::metric_values(kvf::builtin("minkowski:p=1,q=2"), std::vector<double>{0, 0, 0});
    const kvf::KillingBasis basis(g);
    kvf::ValueTensor delta(3, 2);
    for (std::size_t i = 0; i < 3; ++i) delta({i, i}) = 1.0;
    for (std::size_t k = 3; k < basis.size(); ++k)
        EXPECT_LE(kvf::derivation_action(basis.element(k).A, delta).max_abs(), 1e-15);
}

TEST(Integrability, MatrixShapesAndKernel) {
    const auto s = kvf::builtin("sphere2");
    const auto curv = kvf::compute_curvature(s, s.base_point, 3);
    const auto ts = kvf::integrability_tensors(curv, 2);
    ASSERT_EQ(ts.size(), 3u);
    for (std::size_t m = 0; m < 3; ++m) {
        EXPECT_EQ(ts[m].rows(), static_cast<Eigen::Index>(kvf::int_pow(2, 4 + m)));
        EXPECT_EQ(ts[m].cols(), 3);
        EXPECT_LE(ts[m].cwiseAbs().maxCoeff(), 1e-12);  // every germ extends on the round sphere
    }
    EXPECT_THROW(kvf::integrability_tensors(curv, 3), kvf::OrderError);
}

TEST(Integrability, KappaAntisymmetricAndZeroOnKernel) {
    const auto s = kvf::builtin("walker_recurrent");
    const auto curv = kvf::compute_curvature(s, s.base_point, 1);
    const kvf::KillingBasis basis(curv.metric);
    const auto rep = kvf::killing_dimension(s, s.base_point);
    for (std::size_t k = 0; k < basis.size(); ++k) {
        const auto germ = basis.element(k);
        for (std::size_t x = 0; x < 3; ++x)
            for (std::size_t y = 0; y < 3; ++y)
                EXPECT_LE((kvf::kappa(curv, germ, x, y) + kvf::kappa(curv, germ, y, x)).cwiseAbs().maxCoeff(), 1e-13);
    }
    for (const auto& germ : rep.kernel)
        for (std::size_t x = 0; x < 3; ++x)
            for (std::size_t y = 0; y < 3; ++y) EXPECT_LE(kvf::kappa(curv, germ, x, y).cwiseAbs().maxCoeff(), 1e-9);
    EXPECT_THROW(kvf::kappa(curv, rep.kernel.front(), 3, 0), kvf::StructuralError);
}

TEST(Transport, EuclideanRotation) {
    const auto s = kvf::builtin("euclidean:n=2");
    const auto field = kvf::parse_field("-y, x", s);
    const std::vector<std::vector<double>> path{{0.3, -0.2}, {1.1, 0.4}, {-0.5, 1.0}};
    const auto start = kvf::A_of_field(s, field, path.front()).germ;
    const auto end = kvf::killing_transport(s, start, path, 1000);
    EXPECT_LE(kvf::germ_distance(end, kvf::A_of_field(s, field, path.back()).germ), 1e-8);
}

TEST(Transport, SphereRotationMatchesField) {
    const auto s = kvf::builtin("sphere2");
    const auto field = kvf::parse_field("sin(phi), cos(theta) / sin(theta) * cos(phi)", s);
    const std::vector<std::vector<double>> path{{1.0, 0.0}, {1.4, 0.5}, {0.8, 1.2}};
    const auto start = kvf::A_of_field(s, field, path.front()).germ;
    const auto end = kvf::killing_transport(s, start, path, 1000);
    EXPECT_LE(kvf::germ_distance(end, kvf::A_of_field(s, field, path.back()).germ), 1e-8);
}

TEST(Transport, PreservesSoCondition) {
    const auto s = load("bumpy_surface.man");
    const kvf::KillingBasis basis(kvf::metric_values(s, s.base_point));
    Eigen::VectorXd c(3);
    c << 0.3, -1.2, 0.7;
    const auto start = basis.from_coordinates(c);
    const std::vector<std::vector<double>> path{{0.4, 0.0}, {0.9, 0.6}, {-0.2, 1.1}};
    const auto end = kvf::killing_transport(s, start, path, 500);
    EXPECT_LE(kvf::so_residual(end.A, kvf::metric_values(s, path.back())), 1e-9);
}

TEST(Transport, PathIndependentOnSphere) {
    const auto s = kvf::builtin("sphere2");
    const kvf::KillingBasis basis(kvf::metric_values(s, std::vector<double>{1.0, 0.0}));
    Eigen::VectorXd c(3);
    c << 0.2, 0.5, -0.8;
    const auto start = basis.from_coordinates(c);
    const auto a = kvf::killing_transport(s, start, {{1.0, 0.0}, {1.5, 0.0}, {1.5, 0.9}}, 800);
    const auto b = kvf::killing_transport(s, start, {{1.0, 0.0}, {1.0, 0.9}, {1.5, 0.9}}, 800);
    EXPECT_LE(kvf::germ_distance(a, b), 1e-9);
}

TEST(Transport, LoopDefectOffKernel) {
    const auto s = load("bumpy_surface.man");
    const auto loop = square_loop(s.base_point, 0.3);
    const kvf::KillingBasis basis(kvf::metric_values(s, s.base_point));
    // d/dy is Killing and returns to itself
    const auto dy = kvf::A_of_field(s, kvf::parse_field("0, 1", s), s.base_point).germ;
    EXPECT_LE(kvf::germ_distance(kvf::killing_transport(s, dy, loop, 400), dy), 1e-9);
    // a germ outside the kernel does not
    const auto germ = basis.element(0);
    EXPECT_GT(kvf::germ_distance(kvf::killing_transport(s, germ, loop, 400), germ), 1e-4);
}

TEST(Transport, InvalidArguments) {
    const auto s = kvf::builtin("euclidean:n=2");
    const kvf::KillingGerm g{Eigen::VectorXd::Zero(2), Eigen::MatrixXd::Zero(2, 2)};
    EXPECT_THROW(kvf::killing_transport(s, g, {}, 10), kvf::PreconditionError);
    EXPECT_THROW(kvf::killing_transport(s, g, {{0, 0}, {1, 1}}, 0), kvf::PreconditionError);
    EXPECT_THROW(kvf::killing_transport(s, g, {{0, 0}, {1}}, 5), kvf::StructuralError);
}
