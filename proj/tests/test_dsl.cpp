#include <gtest/gtest.h>

#include <Eigen/Dense>

#include <string>
#include <vector>

#include "kvf/catalog.hpp"
#include "kvf/dsl.hpp"

using Alpha = std::vector<unsigned>;

namespace {

const char* kEuclid = R"(
manifold plane {
  coordinates: x, y;
  metric: [[1, 0], [0, 1]];
}
)";

std::vector<std::string> catalog_refs() {
    return {"euclidean:n=1", "euclidean:n=2", "euclidean:n=3", "euclidean:n=4", "minkowski:p=1,q=1",
            "minkowski:p=1,q=3", "sphere2", "sphere2:r=2", "hyperbolic2", "cahen_wallach:q=1",
            "cahen_wallach:q=-1", "cahen_wallach:q=1/-1", "cahen_wallach:n=2", "walker_recurrent"};
}

}  // namespace

TEST(Parse, EuclideanPlane) {
    const auto s = kvf::parse_manifold(kEuclid);
    EXPECT_EQ(s.name, "plane");
    EXPECT_EQ(s.coords, (std::vector<std::string>{"x", "y"}));
    EXPECT_EQ(s.base_point, (std::vector<double>{0, 0}));
    EXPECT_TRUE(kvf::metric_values(s, s.base_point).isApprox(Eigen::Matrix2d::Identity()));
    EXPECT_FALSE(s.assumptions.analytic);
}

TEST(Parse, CahenWallachSource) {
    const auto s = kvf::parse_manifold(R"(
# Cahen-Wallach, n = 1
manifold cw {
  coordinates: t, v, x1;
  parameters: q = 1;
  metric: [[2 * q * x1^2, 1, 0],
           [0, 0],
           [1]];
  assume: analytic, simply_connected;
}
)");
    ASSERT_EQ(s.dimension(), 3u);
    EXPECT_EQ(s.params.at("q"), 1.0);
    const auto g = kvf::metric_jets(s, s.base_point, 2);
    EXPECT_DOUBLE_EQ(g[0][0].coefficient(Alpha{0, 0, 2}), 2.0);
    EXPECT_DOUBLE_EQ(g[0][0].value(), 0.0);
    EXPECT_DOUBLE_EQ(g[0][1].value(), 1.0);
    EXPECT_DOUBLE_EQ(g[1][0].value(), 1.0);
    EXPECT_TRUE(s.assumptions.analytic && s.assumptions.simply_connected);
}

TEST(Parse, AsymmetricGridRejected) {
    EXPECT_THROW(kvf::parse_manifold("manifold m { coordinates: x, y; metric: [[1, x], [y, 1]]; }"), kvf::SpecError);
}

TEST(Parse, SymmetricFullGridAccepted) {
    const auto s = kvf::parse_manifold("manifold m { coordinates: x, y; metric: [[1, x], [x, 2]]; }");
    EXPECT_EQ(kvf::metric_values(s, std::vector<double>{0.5, 0})(1, 0), 0.5);
}

TEST(Parse, UpperTriangleMirrored) {
    const auto s = kvf::parse_manifold("manifold m { coordinates: x, y; metric: [[1, 0.25 * y], [3]]; }");
    const auto g = kvf::metric_values(s, std::vector<double>{0, 2});
    EXPECT_DOUBLE_EQ(g(1, 0), 0.5);
    EXPECT_DOUBLE_EQ(g(0, 1), 0.5);
}

TEST(Parse, SyntaxErrorCarriesPosition) {
    try {
        kvf::parse_manifold("manifold m {\n  coordinates: x, y;\n  metric: [[1, 0], [0, 1 +]];\n}\n");
        FAIL() << "expected a parse error";
    } catch (const kvf::ParseError& e) {
        EXPECT_EQ(e.line(), 3u);
        EXPECT_EQ(e.column(), 27u);
        EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos);
    }
}

TEST(Parse, ColumnsCountCodePoints) {
    try {
        kvf::parse_manifold("# é\nmanifold m { coordinates: x; metric: [[é]]; }\n");
        FAIL() << "expected a parse error";
    } catch (const kvf::ParseError& e) {
        EXPECT_EQ(e.line(), 2u);
        EXPECT_EQ(e.column(), 40u);
    }
}

TEST(Parse, UnknownIdentifier) {
    EXPECT_THROW(kvf::parse_manifold("manifold m { coordinates: x; metric: [[1 + z]]; }"), kvf::ParseError);
}

TEST(Parse, StructuralErrors) {
    EXPECT_THROW(kvf::parse_manifold("manifold m { coordinates: x, y; metric: [[1, 0]]; }"), kvf::SpecError);
    EXPECT_THROW(kvf::parse_manifold("manifold m { coordinates: x, y; metric: [[1, 0], [1]]; base_point: (1); }"),
                 kvf::SpecError);
    EXPECT_THROW(kvf::parse_manifold("manifold m { metric: [[1]]; }"), kvf::ParseError);
    EXPECT_THROW(kvf::parse_manifold("manifold m { coordinates: x; metric: [[1]]; assume: smooth; }"),
                 kvf::ParseError);
    EXPECT_THROW(kvf::parse_manifold("manifold m { coordinates: x, x; metric: [[1, 0], [1]]; }"), kvf::ParseError);
}

TEST(Parse, DegenerateBasePoint) {
    EXPECT_THROW(kvf::parse_manifold("manifold m { coordinates: x, y; metric: [[1, 0], [x^2]]; }"),
                 kvf::DegenerateMetricError);
}

TEST(Parse, IndefiniteMetricIsNondegenerate) {
    const auto s = kvf::parse_manifold("manifold m { coordinates: t, x; metric: [[-1, 0], [1]]; }");
    const auto g = kvf::metric_jets(s, s.base_point, 2);
    EXPECT_DOUBLE_EQ(g[0][0].value() * g[1][1].value() - g[0][1].value() * g[1][0].value(), -1.0);
}

TEST(Parse, ParametersFoldInOrder) {
    const auto s = kvf::parse_manifold(
        "manifold m { coordinates: x; parameters: a = 2, b = a^2 - 1; metric: [[b * exp(x)]]; base_point: (a / 4); }");
    EXPECT_DOUBLE_EQ(s.base_point[0], 0.5);
    EXPECT_DOUBLE_EQ(kvf::metric_values(s, std::vector<double>{0.0})(0, 0), 3.0);
}

TEST(RoundTrip, SerializeParseIsStructurallyEqual) {
    std::vector<kvf::ManifoldSpec> specs{kvf::parse_manifold(kEuclid)};
    for (const auto& r : catalog_refs()) specs.push_back(kvf::builtin(std::string_view(r)));
    specs.push_back(kvf::parse_manifold(
        "manifold odd { coordinates: a, b; parameters: k = -0.5; metric: [[sqrt(1 + a^2), -b], [cosh(k * a) / 3]]; "
        "base_point: (-1, 0.25); assume: analytic; }"));
    for (const auto& s : specs) {
        const auto text = kvf::serialize(s);
        const auto back = kvf::parse_manifold(text);
        EXPECT_TRUE(kvf::structurally_equal(s, back)) << text;
        EXPECT_EQ(kvf::serialize(back), text);
    }
}

TEST(MetricJets, CatalogSymmetryCoefficientwise) {
    for (const auto& r : catalog_refs()) {
        const auto s = kvf::builtin(std::string_view(r));
        const auto g = kvf::metric_jets(s, s.base_point, 3);
        for (std::size_t i = 0; i < s.dimension(); ++i)
            for (std::size_t j = 0; j < s.dimension(); ++j) EXPECT_EQ(g[i][j], g[j][i]) << r;
    }
}

TEST(MetricJets, EuclideanJetsAreConstant) {
    const auto s = kvf::builtin("euclidean:n=3");
    const auto g = kvf::metric_jets(s, std::vector<double>{0.3, -1, 2}, 2);
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 3; ++j) {
            EXPECT_DOUBLE_EQ(g[i][j].value(), i == j ? 1.0 : 0.0);
            for (std::size_t k = 1; k < g[i][j].coefficients().size(); ++k)
                EXPECT_EQ(g[i][j].coefficients()[k], 0.0);
        }
}

TEST(Builtin, Euclidean3) {
    const auto s = kvf::builtin("euclidean:n=3");
    EXPECT_TRUE(kvf::metric_values(s, s.base_point).isApprox(Eigen::Matrix3d::Identity()));
}

TEST(Builtin, CahenWallachIsLorentzian) {
    for (const char* r : {"cahen_wallach:q=1", "cahen_wallach:q=1/-1", "cahen_wallach:q=2/-1/0.5"}) {
        const auto s = kvf::builtin(r);
        const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(kvf::metric_values(s, s.base_point));
        int neg = 0, pos = 0;
        for (Eigen::Index i = 0; i < eig.eigenvalues().size(); ++i) (eig.eigenvalues()(i) < 0 ? neg : pos)++;
        EXPECT_EQ(neg, 1) << r;
        EXPECT_EQ(pos, static_cast<int>(s.dimension()) - 1) << r;
    }
    EXPECT_EQ(kvf::builtin("cahen_wallach:q=1/-1").dimension(), 4u);
}

TEST(Builtin, ParameterErrors) {
    EXPECT_THROW(kvf::builtin("cahen_wallach:q=0"), kvf::ParameterError);
    EXPECT_THROW(kvf::builtin("cahen_wallach:n=2,q=1/2/3"), kvf::ParameterError);
    EXPECT_THROW(kvf::builtin("sphere2:r=-1"), kvf::ParameterError);
    EXPECT_THROW(kvf::builtin("sphere2:radius=1"), kvf::ParameterError);
    EXPECT_THROW(kvf::builtin("torus"), kvf::ParameterError);
    EXPECT_THROW(kvf::builtin("euclidean:n=x"), kvf::ParameterError);
}

TEST(Builtin, WalkerRecurrentNullField) {
    const auto s = kvf::builtin("walker_recurrent");
    const auto g = kvf::metric_values(s, s.base_point);
    EXPECT_DOUBLE_EQ(g(1, 1), 0.0);  // d/dv is null
    EXPECT_DOUBLE_EQ(g(0, 1), 1.0);
}

TEST(Field, ParseFieldComponents) {
    const auto s = kvf::builtin("euclidean:n=2");
    const auto f = kvf::parse_field("-y, x", s);
    ASSERT_EQ(f.size(), 2u);
    EXPECT_DOUBLE_EQ(kvf::evaluate(*f[0], std::vector<double>{1, 2}), -2.0);
    EXPECT_THROW(kvf::parse_field("1, 2, 3", s), kvf::SpecError);
    EXPECT_THROW(kvf::parse_field("x, q", s), kvf::ParseError);
}
