#pragma once

// Infinitesimal holonomy algebra at a point: the span of the curvature endomorphisms
// (nabla^m R)(d_i, d_j; d_c1 .. d_cm) acting on T_pM. Lie brackets of generators are not
// added to the span; whether they would enlarge it is reported as a diagnostic.

#include <Eigen/Dense>

#include <algorithm>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "kvf/curvature.hpp"
#include "kvf/dsl.hpp"
#include "kvf/error.hpp"
#include "kvf/killing.hpp"
#include "kvf/linalg.hpp"
#include "kvf/tensor.hpp"

namespace kvf {

struct HolonomyReport {
    std::vector<double> point;
    std::vector<Eigen::MatrixXd> generators;  // orthonormal in the Frobenius inner product on n x n arrays
    std::size_t dimension = 0;
    std::vector<std::size_t> dims;  // span dimension using nabla^0..nabla^m
    std::size_t stabilization_order = 0;
    bool stabilized = false;
    Eigen::MatrixXd parallel_candidates;  // n x k, orthonormal columns
    std::size_t nullity = 0;
    double so_residual = 0.0;       // max over generators of |g G + (g G)^T|
    bool bracket_closed = true;     // brackets of generators stay in the span
    double bracket_residual = 0.0;  // largest distance of a bracket from the span
    double rank_tol = kDefaultRankTol;
    std::vector<std::string> warnings;
};

namespace detail {

// Rows: one flattened endomorphism (a, b) per slot choice (i, j, c1..cm).
inline Eigen::MatrixXd curvature_endomorphisms(const ValueTensor& s) {
    const std::size_t n = s.n;
    const std::size_t slots = s.data.size() / (n * n);
    Eigen::MatrixXd rows(static_cast<Eigen::Index>(slots), static_cast<Eigen::Index>(n * n));
    for (std::size_t a = 0; a < n; ++a)
        for (std::size_t b = 0; b < n; ++b)
            for (std::size_t r = 0; r < slots; ++r)
                rows(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(a * n + b)) = s.data[(a * n + b) * slots + r];
    return rows;
}

inline Eigen::MatrixXd unflatten(const Eigen::VectorXd& v, std::size_t n) {
    Eigen::MatrixXd m(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    for (std::size_t a = 0; a < n; ++a)
        for (std::size_t b = 0; b < n; ++b)
            m(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) = v(static_cast<Eigen::Index>(a * n + b));
    return m;
}

inline Eigen::VectorXd flatten(const Eigen::MatrixXd& m) {
    const auto n = m.rows();
    Eigen::VectorXd v(n * n);
    for (Eigen::Index a = 0; a < n; ++a)
        for (Eigen::Index b = 0; b < n; ++b) v(a * n + b) = m(a, b);
    return v;
}

inline void finish_holonomy(HolonomyReport& rep, const RankDecision& last, const Eigen::MatrixXd& g, double tol) {
    const auto n = static_cast<std::size_t>(g.rows());
    rep.generators.clear();
    for (Eigen::Index k = 0; k < last.row_basis.cols(); ++k)
        rep.generators.push_back(unflatten(last.row_basis.col(k), n));
    rep.dimension = rep.generators.size();
    for (const auto& gen : rep.generators) rep.so_residual = std::max(rep.so_residual, so_residual(gen, g));

    // joint kernel of the generators
    Eigen::MatrixXd stacked(static_cast<Eigen::Index>(n * std::max<std::size_t>(rep.dimension, 1)),
                            static_cast<Eigen::Index>(n));
    stacked.setZero();
    for (std::size_t k = 0; k < rep.dimension; ++k)
        stacked.middleRows(static_cast<Eigen::Index>(k * n), static_cast<Eigen::Index>(n)) = rep.generators[k];
    rep.parallel_candidates = numerical_rank(stacked, tol).kernel_basis;

    const Eigen::MatrixXd& basis = last.row_basis;
    for (std::size_t i = 0; i < rep.dimension; ++i)
        for (std::size_t j = i + 1; j < rep.dimension; ++j) {
            const Eigen::MatrixXd br =
                rep.generators[i] * rep.generators[j] - rep.generators[j] * rep.generators[i];
            const Eigen::VectorXd v = flatten(br);
            const double dist = (v - basis * (basis.transpose() * v)).norm();
            rep.bracket_residual = std::max(rep.bracket_residual, dist);
        }
    rep.bracket_closed = rep.bracket_residual <= tol * std::max(1.0, last.sigma_max);
    if (!rep.bracket_closed)
        rep.warnings.push_back("bracket closure would enlarge the curvature span (residual " +
                               std::to_string(rep.bracket_residual) + ")");
}

}  // namespace detail

/// dim {X : R(X, .) = 0 at p}.
inline std::size_t nullity(const CurvatureData& curv, double tol = kDefaultRankTol) {
    const std::size_t n = curv.dimension();
    const ValueTensor& r = curv.riemann();
    Eigen::MatrixXd m(static_cast<Eigen::Index>(n * n * n), static_cast<Eigen::Index>(n));
    for (std::size_t a = 0; a < n; ++a)
        for (std::size_t b = 0; b < n; ++b)
            for (std::size_t j = 0; j < n; ++j)
                for (std::size_t x = 0; x < n; ++x)
                    m(static_cast<Eigen::Index>((a * n + b) * n + j), static_cast<Eigen::Index>(x)) = r({a, b, x, j});
    return numerical_rank(m, tol).nullity();
}

/// Span of (nabla^m R)(X, Y; Z..) for m = 0.. until the dimension repeats or reaches n(n-1)/2.
/// Uses the derivatives already present in curv (up to min(m_max, curv.max_derivative)).
inline HolonomyReport infinitesimal_holonomy(const CurvatureData& curv, std::size_t m_max, double tol = kDefaultRankTol) {
    const std::size_t n = curv.dimension();
    const std::size_t full = n * (n - 1) / 2;
    HolonomyReport rep;
    rep.point = curv.point;
    rep.rank_tol = tol;
    RowSpace rows(n * n);
    RankDecision last = rows.decide(tol);
    const std::size_t top = std::min(m_max, curv.max_derivative);
    for (std::size_t m = 0; m <= top; ++m) {
        rows.add_rows(detail::curvature_endomorphisms(curv.cov_riemann(m)));
        last = rows.decide(tol);
        rep.dims.push_back(last.rank);
        rep.stabilization_order = m;
        if ((m >= 1 && rep.dims[m] == rep.dims[m - 1]) || last.rank == full) {
            rep.stabilized = true;
            break;
        }
    }
    if (!rep.stabilized)
        rep.warnings.push_back("unstable: holonomy span did not stabilize by order " +
                               std::to_string(rep.stabilization_order));
    detail::finish_holonomy(rep, last, curv.metric, tol);
    rep.nullity = nullity(curv, tol);
    return rep;
}

/// Joint kernel of the holonomy generators.
inline Eigen::MatrixXd parallel_vector_candidates(const HolonomyReport& report) { return report.parallel_candidates; }

/// Holonomy at p built with as many derivatives of R as the stabilization needs.
inline HolonomyReport infinitesimal_holonomy(const ManifoldSpec& spec, std::span<const double> p, std::size_t m_max,
                                             double tol = kDefaultRankTol) {
    const std::size_t n = spec.dimension();
    if (p.size() != n) throw StructuralError("point dimension does not match chart dimension");
    std::optional<CurvatureData> curv;
    std::size_t reach = std::min<std::size_t>(m_max, 1);
    while (true) {
        if (!curv || curv->max_derivative < reach) curv = compute_curvature(spec, p, reach);
        HolonomyReport rep = infinitesimal_holonomy(*curv, m_max, tol);
        if (rep.stabilized || reach >= m_max || !covariant_order_feasible(n, reach + 1)) {
            if (!rep.stabilized && reach < m_max)
                rep.warnings.push_back("stopped at order " + std::to_string(reach) + ": nabla^" +
                                       std::to_string(reach + 1) + " R exceeds the dense-array limit");
            return rep;
        }
        const std::size_t previous = reach;
        reach = std::min(m_max, reach + 2);
        while (reach > previous + 1 && !covariant_order_feasible(n, reach)) --reach;
    }
}

inline HolonomyReport infinitesimal_holonomy(const ManifoldSpec& spec, std::size_t m_max,
                                             double tol = kDefaultRankTol) {
    return infinitesimal_holonomy(spec, spec.base_point, m_max, tol);
}

enum class Verdict { no_parallel_field, has_parallel_field, inconclusive };

inline const char* verdict_name(Verdict v) {
    switch (v) {
        case Verdict::no_parallel_field: return "no_parallel_field";
        case Verdict::has_parallel_field: return "has_parallel_field";
        case Verdict::inconclusive: return "inconclusive";
    }
    return "inconclusive";
}

struct HypothesisReport {
    Verdict verdict = Verdict::inconclusive;
    Verdict raw_verdict = Verdict::inconclusive;  // before downgrading
    Eigen::MatrixXd basis;                        // parallel candidates, n x k
    HolonomyReport holonomy;
    std::vector<std::string> warnings;
};

/// Whether the holonomy at p annihilates a nonzero vector. Downgraded to inconclusive when
/// the span did not stabilize or the chart is not asserted analytic.
inline HypothesisReport hypothesis_check(const ManifoldSpec& spec, std::span<const double> p, std::size_t m_max = 10,
                                         double tol = kDefaultRankTol) {
    HypothesisReport out;
    out.holonomy = infinitesimal_holonomy(spec, p, m_max, tol);
    out.basis = out.holonomy.parallel_candidates;
    out.raw_verdict = out.basis.cols() > 0 ? Verdict::has_parallel_field : Verdict::no_parallel_field;
    out.verdict = out.raw_verdict;
    out.warnings = out.holonomy.warnings;
    if (!out.holonomy.stabilized) {
        out.verdict = Verdict::inconclusive;
        out.warnings.push_back("verdict downgraded: holonomy span not stabilized");
    }
    if (!spec.assumptions.analytic) {
        out.verdict = Verdict::inconclusive;
        out.warnings.push_back("verdict downgraded: chart is not asserted analytic, so the infinitesimal algebra may "
                               "be smaller than the holonomy algebra");
    }
    if (!spec.assumptions.simply_connected && out.raw_verdict == Verdict::has_parallel_field)
        out.warnings.push_back("chart is not asserted simply connected; candidates are local parallel fields");
    return out;
}

inline HypothesisReport hypothesis_check(const ManifoldSpec& spec, std::size_t m_max = 10,
                                         double tol = kDefaultRankTol) {
    return hypothesis_check(spec, spec.base_point, m_max, tol);
}

}  // namespace kvf
