#include <gtest/gtest.h>

#include <Eigen/Dense>

#include <string>
#include <vector>

#include "kvf/catalog.hpp"
#include "kvf/holonomy.hpp"
#include "oracles.hpp"

namespace {

struct HolCase {
    const char* ref;
    std::size_t dim;
    std::size_t candidates;
    kvf::Verdict verdict;
};

// max over i, j of |Gamma^i_{j v}| for the coordinate field d/d(x_v), by finite differences.
double coordinate_field_derivative(const kvf::ManifoldSpec& s, const std::vector<double>& p, std::size_t v) {
    const auto gamma = oracle::christoffel_fd(s, p);
    double worst = 0.0;
    for (std::size_t i = 0; i < s.dimension(); ++i)
        for (std::size_t j = 0; j < s.dimension(); ++j) worst = std::max(worst, std::abs(gamma[i](j, v)));
    return worst;
}

}  // namespace

TEST(Holonomy, Catalog) {
    const HolCase cases[] = {{"euclidean:n=2", 0, 2, kvf::Verdict::has_parallel_field},
                             {"minkowski:p=1,q=1", 0, 2, kvf::Verdict::has_parallel_field},
                             {"sphere2", 1, 0, kvf::Verdict::no_parallel_field},
                             {"hyperbolic2", 1, 0, kvf::Verdict::no_parallel_field},
                             {"cahen_wallach:q=1", 1, 1, kvf::Verdict::has_parallel_field},
                             {"cahen_wallach:q=1/-1", 2, 1, kvf::Verdict::has_parallel_field},
                             {"walker_recurrent", 2, 0, kvf::Verdict::no_parallel_field}};
    for (const auto& c : cases) {
        const auto s = kvf::builtin(c.ref);
        const auto h = kvf::hypothesis_check(s);
        EXPECT_TRUE(h.holonomy.stabilized) << c.ref;
        EXPECT_EQ(h.holonomy.dimension, c.dim) << c.ref;
        EXPECT_EQ(static_cast<std::size_t>(h.basis.cols()), c.candidates) << c.ref;
        EXPECT_EQ(h.verdict, c.verdict) << c.ref;
        EXPECT_EQ(h.raw_verdict, c.verdict) << c.ref;
        EXPECT_LE(h.holonomy.so_residual, 1e-10) << c.ref;
        EXPECT_TRUE(h.holonomy.bracket_closed) << c.ref;
    }
}

TEST(Holonomy, GeneratorsAnnihilateCandidates) {
    for (const char* ref : {"cahen_wallach:q=1", "cahen_wallach:q=2/-1/0.5"}) {
        const auto s = kvf::builtin(ref);
        const auto h = kvf::infinitesimal_holonomy(s, 10);
        const Eigen::MatrixXd c = kvf::parallel_vector_candidates(h);
        ASSERT_EQ(c.cols(), 1) << ref;
        for (const auto& g : h.generators) EXPECT_LE((g * c).cwiseAbs().maxCoeff(), 1e-10) << ref;
        // the candidate is d/dv
        Eigen::VectorXd ev = Eigen::VectorXd::Zero(c.rows());
        ev(1) = 1.0;
        EXPECT_NEAR(std::abs(c.col(0).dot(ev)), 1.0, 1e-10) << ref;
    }
}

TEST(Holonomy, CandidateIsParallelByFiniteDifferences) {
    const auto s = kvf::builtin("cahen_wallach:q=1/-1");
    EXPECT_LE(coordinate_field_derivative(s, {0.3, -0.2, 0.5, 0.1}, 1), 1e-8);
}

TEST(Holonomy, WalkerNullFieldIsRecurrentNotParallel) {
    const auto s = kvf::builtin("walker_recurrent");
    const std::vector<double> p = s.base_point;
    const auto gamma = oracle::christoffel_fd(s, p);
    // nabla_j d/dv = Gamma^i_{jv} d_i is proportional to d/dv and nonzero
    EXPECT_GT(coordinate_field_derivative(s, p, 1), 1e-3);
    for (std::size_t i : {0u, 2u})
        for (std::size_t j = 0; j < 3; ++j) EXPECT_LE(std::abs(gamma[i](j, 1)), 1e-8);
    const auto h = kvf::hypothesis_check(s);
    EXPECT_EQ(h.verdict, kvf::Verdict::no_parallel_field);
    EXPECT_EQ(h.holonomy.nullity, 0u);
}

TEST(Holonomy, GeneratorsAreOrthonormal) {
    const auto h = kvf::infinitesimal_holonomy(kvf::builtin("cahen_wallach:q=1/-1"), 10);
    for (std::size_t a = 0; a < h.generators.size(); ++a)
        for (std::size_t b = 0; b < h.generators.size(); ++b)
            EXPECT_NEAR((h.generators[a].array() * h.generators[b].array()).sum(), a == b ? 1.0 : 0.0, 1e-12);
}

TEST(Holonomy, NullityOfCurvature) {
    const auto cw = kvf::builtin("cahen_wallach:q=1");
    EXPECT_EQ(kvf::nullity(kvf::compute_curvature(cw, cw.base_point, 0)), 1u);
    const auto e = kvf::builtin("euclidean:n=3");
    EXPECT_EQ(kvf::nullity(kvf::compute_curvature(e, e.base_point, 0)), 3u);
    const auto sp = kvf::builtin("sphere2");
    EXPECT_EQ(kvf::nullity(kvf::compute_curvature(sp, sp.base_point, 0)), 0u);
}

TEST(Holonomy, StabilizationNeedsOneDerivative) {
    const auto s = kvf::builtin("walker_recurrent");
    const auto h = kvf::infinitesimal_holonomy(s, 10);
    EXPECT_EQ(h.dims, (std::vector<std::size_t>{2, 2}));
    EXPECT_EQ(h.stabilization_order, 1u);
    const auto curv = kvf::compute_curvature(s, s.base_point, 0);
    const auto r0 = kvf::infinitesimal_holonomy(curv, 0);
    EXPECT_FALSE(r0.stabilized);
}

TEST(Hypothesis, NonAnalyticDowngrades) {
    const auto s = kvf::parse_manifold("manifold m { coordinates: x, y; metric: [[1, 0], [1 + x^2]]; base_point: (0.5, 0); }");
    const auto h = kvf::hypothesis_check(s);
    EXPECT_EQ(h.verdict, kvf::Verdict::inconclusive);
    EXPECT_EQ(h.raw_verdict, kvf::Verdict::no_parallel_field);
    EXPECT_STREQ(kvf::verdict_name(h.verdict), "inconclusive");
    EXPECT_FALSE(h.warnings.empty());
}

TEST(Hypothesis, UnstabilizedDowngrades) {
    const auto s = kvf::builtin("walker_recurrent");
    const auto h = kvf::hypothesis_check(s, 0);
    EXPECT_FALSE(h.holonomy.stabilized);
    EXPECT_EQ(h.verdict, kvf::Verdict::inconclusive);
}
