#pragma once

// Two-factor semi-Riemannian products, the decomposition test for their Killing
// algebras, and the Cahen-Wallach x Cahen-Wallach counterexample.

#include <Eigen/Dense>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstddef>
#include <map>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "kvf/catalog.hpp"
#include "kvf/curvature.hpp"
#include "kvf/dsl.hpp"
#include "kvf/error.hpp"
#include "kvf/expr.hpp"
#include "kvf/holonomy.hpp"
#include "kvf/killing.hpp"

namespace kvf {

struct BlockRange {
    std::size_t begin = 0;
    std::size_t end = 0;

    std::size_t size() const noexcept { return end - begin; }
    bool contains(std::size_t i) const noexcept { return i >= begin && i < end; }
};

struct ProductSpec {
    ManifoldSpec a;
    ManifoldSpec b;
    ManifoldSpec combined;
    std::map<std::string, std::string> renaming_a;  // factor coordinate -> product coordinate
    std::map<std::string, std::string> renaming_b;
    BlockRange block_a;
    BlockRange block_b;
};

/// Keeps identifier characters; anything else becomes '_'.
inline std::string sanitize_identifier(const std::string& s) {
    std::string out;
    for (char c : s) {
        const auto u = static_cast<unsigned char>(c);
        out += (std::isalnum(u) || c == '_' || c == '.') ? c : '_';
    }
    if (out.empty() || std::isdigit(static_cast<unsigned char>(out[0])) || out[0] == '.') out.insert(0, "_");
    return out;
}

inline ProductSpec product_metric(const ManifoldSpec& a, const ManifoldSpec& b) {
    ProductSpec prod;
    prod.a = a;
    prod.b = b;
    const std::size_t na = a.dimension();
    const std::size_t nb = b.dimension();
    prod.block_a = {0, na};
    prod.block_b = {na, na + nb};

    ManifoldSpec& c = prod.combined;
    c.name = sanitize_identifier(a.name + "_x_" + b.name);
    std::set<std::string> seen;
    auto add_coord = [&](const std::string& prefix, const std::string& name, std::map<std::string, std::string>& ren) {
        const std::string renamed = sanitize_identifier(prefix + name);
        if (!seen.insert(renamed).second)
            throw StructuralError("coordinate name collision after renaming: '" + renamed + "'");
        ren[name] = renamed;
        c.coords.push_back(renamed);
    };
    for (const auto& s : a.coords) add_coord("a.", s, prod.renaming_a);
    for (const auto& s : b.coords) add_coord("b.", s, prod.renaming_b);
    for (const auto& [k, v] : a.params) c.params[sanitize_identifier("a." + k)] = v;
    for (const auto& [k, v] : b.params) c.params[sanitize_identifier("b." + k)] = v;

    const std::size_t n = na + nb;
    const ExprPtr zero = expr::constant(0.0);
    c.metric.assign(n, std::vector<ExprPtr>(n, zero));
    for (std::size_t i = 0; i < na; ++i)
        for (std::size_t j = 0; j < na; ++j) c.metric[i][j] = a.metric[i][j];
    for (std::size_t i = 0; i < nb; ++i)
        for (std::size_t j = 0; j < nb; ++j) c.metric[na + i][na + j] = shift_coordinates(b.metric[i][j], na);
    c.base_point = a.base_point;
    c.base_point.insert(c.base_point.end(), b.base_point.begin(), b.base_point.end());
    c.assumptions.analytic = a.assumptions.analytic && b.assumptions.analytic;
    c.assumptions.simply_connected = a.assumptions.simply_connected && b.assumptions.simply_connected;
    require_nondegenerate(metric_values(c, c.base_point), c.base_point);
    return prod;
}

/// Component of a product field tangent to one factor, as a field on the product: the other
/// block's components are set to zero. It is the pull-back of a factor field only when its
/// coefficients do not depend on the other factor's coordinates.
inline std::vector<ExprPtr> project_field(const ProductSpec& prod, const std::vector<ExprPtr>& field, bool first) {
    const std::size_t n = prod.combined.dimension();
    if (field.size() != n) throw StructuralError("field component count does not match product dimension");
    const BlockRange keep = first ? prod.block_a : prod.block_b;
    std::vector<ExprPtr> out(n, expr::constant(0.0));
    for (std::size_t i = keep.begin; i < keep.end; ++i) out[i] = field[i];
    return out;
}

struct BlockLawReport {
    std::vector<double> mixed_residual;   // per m: max |mixed component|
    std::vector<double> factor_residual;  // per m: max |block component - factor value|
    std::vector<double> scale;            // per m: max(1, max |nabla^m R|)
    double tol = 0.0;
    bool passed = false;
};

namespace detail {

inline std::vector<std::size_t> unflatten_index(std::size_t f, std::size_t n, std::size_t rank) {
    std::vector<std::size_t> idx(rank);
    for (std::size_t q = rank; q-- > 0;) {
        idx[q] = f % n;
        f /= n;
    }
    return idx;
}

inline std::size_t flatten_index(const std::vector<std::size_t>& idx, std::size_t n, std::size_t offset) {
    std::size_t f = 0;
    for (std::size_t i : idx) f = f * n + (i - offset);
    return f;
}

}  // namespace detail

/// Every component of nabla^m R with slots from both factors vanishes, and the pure blocks
/// equal the factors' own nabla^m R, for m <= m_max.
inline BlockLawReport block_law_check(const ProductSpec& prod, std::size_t m_max = 3, double tol = 1e-9) {
    const CurvatureData whole = compute_curvature(prod.combined, prod.combined.base_point, m_max);
    const CurvatureData ca = compute_curvature(prod.a, prod.a.base_point, m_max);
    const CurvatureData cb = compute_curvature(prod.b, prod.b.base_point, m_max);
    const std::size_t n = whole.dimension();
    BlockLawReport rep;
    rep.tol = tol;
    rep.passed = true;
    for (std::size_t m = 0; m <= m_max; ++m) {
        const ValueTensor& t = whole.cov_riemann(m);
        double mixed = 0.0, factor = 0.0;
        for (std::size_t f = 0; f < t.data.size(); ++f) {
            const auto idx = detail::unflatten_index(f, n, t.rank);
            const bool all_a = std::all_of(idx.begin(), idx.end(), [&](std::size_t i) { return prod.block_a.contains(i); });
            const bool all_b = std::all_of(idx.begin(), idx.end(), [&](std::size_t i) { return prod.block_b.contains(i); });
            if (all_a) {
                const double ref = ca.cov_riemann(m).data[detail::flatten_index(idx, prod.block_a.size(), 0)];
                factor = std::max(factor, std::abs(t.data[f] - ref));
            } else if (all_b) {
                const double ref =
                    cb.cov_riemann(m).data[detail::flatten_index(idx, prod.block_b.size(), prod.block_b.begin)];
                factor = std::max(factor, std::abs(t.data[f] - ref));
            } else {
                mixed = std::max(mixed, std::abs(t.data[f]));
            }
        }
        const double scale = std::max(1.0, t.max_abs());
        rep.mixed_residual.push_back(mixed);
        rep.factor_residual.push_back(factor);
        rep.scale.push_back(scale);
        rep.passed = rep.passed && mixed <= tol * scale && factor <= tol * scale;
    }
    return rep;
}

struct DecompositionReport {
    std::string name_a, name_b;
    KernelReport kernel_a, kernel_b, kernel_product;
    HypothesisReport hypothesis_a, hypothesis_b;
    std::size_t dim_a = 0, dim_b = 0, dim_product = 0;
    long excess = 0;
    bool hypotheses_hold = false;  // one factor analytic, simply connected, without parallel fields
    bool split_predicted = false;
    bool prediction_holds = false;  // excess == 0 whenever the split is predicted
    bool inconclusive = false;
    std::vector<std::string> warnings;
};

inline DecompositionReport decomposition_check(const ManifoldSpec& a, const ManifoldSpec& b,
                                               const KillingOptions& opts = {}) {
    DecompositionReport rep;
    const ProductSpec prod = product_metric(a, b);
    rep.name_a = a.name;
    rep.name_b = b.name;
    rep.kernel_a = killing_dimension(a, a.base_point, opts);
    rep.kernel_b = killing_dimension(b, b.base_point, opts);
    rep.kernel_product = killing_dimension(prod.combined, prod.combined.base_point, opts);
    rep.hypothesis_a = hypothesis_check(a, opts.m_max, opts.tol);
    rep.hypothesis_b = hypothesis_check(b, opts.m_max, opts.tol);
    rep.dim_a = rep.kernel_a.stabilized_dim;
    rep.dim_b = rep.kernel_b.stabilized_dim;
    rep.dim_product = rep.kernel_product.stabilized_dim;
    rep.excess = static_cast<long>(rep.dim_product) - static_cast<long>(rep.dim_a) - static_cast<long>(rep.dim_b);

    auto factor_ok = [](const ManifoldSpec& s, const HypothesisReport& h) {
        return h.verdict == Verdict::no_parallel_field && s.assumptions.analytic && s.assumptions.simply_connected;
    };
    rep.hypotheses_hold = factor_ok(a, rep.hypothesis_a) || factor_ok(b, rep.hypothesis_b);
    rep.split_predicted = rep.hypotheses_hold;
    rep.prediction_holds = !rep.split_predicted || rep.excess == 0;

    auto collect = [&rep](const std::string& label, const std::vector<std::string>& ws) {
        for (const auto& w : ws) rep.warnings.push_back(label + ": " + w);
    };
    collect(a.name, rep.kernel_a.warnings);
    collect(b.name, rep.kernel_b.warnings);
    collect(prod.combined.name, rep.kernel_product.warnings);
    collect(a.name + " holonomy", rep.hypothesis_a.warnings);
    collect(b.name + " holonomy", rep.hypothesis_b.warnings);
    rep.inconclusive = !rep.kernel_a.stabilized || !rep.kernel_b.stabilized || !rep.kernel_product.stabilized ||
                       !rep.hypothesis_a.holonomy.stabilized || !rep.hypothesis_b.holonomy.stabilized;
    if (rep.excess < 0) rep.warnings.push_back("negative excess: product kernel smaller than the factor sum");
    return rep;
}

struct Counterexample {
    ProductSpec product;
    std::vector<std::string> field_text;  // components in product coordinates
    std::vector<ExprPtr> field;
    std::size_t v_plus = 0;   // index of the first factor's v coordinate
    std::size_t v_minus = 0;  // index of the second factor's v coordinate
};

/// CW(Q+) x CW(Q-) with xi = t+ d/dv- - t- d/dv+.
inline Counterexample cw_counterexample(const std::vector<double>& q_plus, const std::vector<double>& q_minus) {
    if (q_plus.empty() || q_minus.empty()) throw ParameterError("cw_counterexample: Q+ and Q- need at least one entry");
    Counterexample ce;
    ce.product = product_metric(builtin("cahen_wallach", {{"q", q_plus}}), builtin("cahen_wallach", {{"q", q_minus}}));
    const ManifoldSpec& c = ce.product.combined;
    const std::size_t n = c.dimension();
    const std::size_t t_plus = ce.product.block_a.begin;
    const std::size_t t_minus = ce.product.block_b.begin;
    ce.v_plus = t_plus + 1;
    ce.v_minus = t_minus + 1;
    ce.field_text.assign(n, "0");
    ce.field_text[ce.v_minus] = c.coords[t_plus];
    ce.field_text[ce.v_plus] = "-" + c.coords[t_minus];
    for (const auto& s : ce.field_text) ce.field.push_back(parse_expression(s, c.coords, c.params));
    return ce;
}

struct MixedBlockReport {
    std::vector<double> minus_residual;  // per k: max |(nabla^k R)(A X+, X-)|
    std::vector<double> plus_residual;   // per k: max |(nabla^k R)(X+, A X-)|
    std::vector<double> scale;
    double kernel_distance = 0.0;
    double tol = 0.0;
    bool passed = false;
};

/// Contractions (nabla^k R)(A X+, X-) and (nabla^k R)(X+, A X-) for k <= k_max. The germ must
/// lie in the stabilized kernel of the product.
inline MixedBlockReport mixed_block_check(const ProductSpec& prod, const KillingGerm& germ, std::size_t k_max,
                                          double tol = 1e-8, const KillingOptions& opts = {}) {
    const ManifoldSpec& spec = prod.combined;
    const std::size_t n = spec.dimension();
    if (static_cast<std::size_t>(germ.xi.size()) != n || static_cast<std::size_t>(germ.A.rows()) != n)
        throw StructuralError("germ dimension does not match product dimension");
    const KernelReport kern = killing_dimension(spec, spec.base_point, opts);
    const CurvatureData curv = compute_curvature(spec, spec.base_point, k_max);
    MixedBlockReport rep;
    rep.tol = tol;
    rep.kernel_distance = kernel_distance(kern, germ, curv.metric);
    const double germ_scale = std::max(1.0, std::max(germ.xi.cwiseAbs().maxCoeff(), germ.A.cwiseAbs().maxCoeff()));
    if (!kern.stabilized || rep.kernel_distance > tol * germ_scale)
        throw PreconditionError("mixed_block_check requires a germ in the stabilized Killing kernel (distance " +
                                std::to_string(rep.kernel_distance) + ")");
    rep.passed = true;
    for (std::size_t k = 0; k <= k_max; ++k) {
        const ValueTensor& t = curv.cov_riemann(k);
        const std::size_t tail = int_pow(n, k);
        double rm = 0.0, rp = 0.0;
        for (std::size_t a = 0; a < n; ++a)
            for (std::size_t b = 0; b < n; ++b)
                for (std::size_t xp = prod.block_a.begin; xp < prod.block_a.end; ++xp)
                    for (std::size_t xm = prod.block_b.begin; xm < prod.block_b.end; ++xm)
                        for (std::size_t z = 0; z < tail; ++z) {
                            double vm = 0.0, vp = 0.0;
                            for (std::size_t e = 0; e < n; ++e) {
                                const double aep = germ.A(static_cast<Eigen::Index>(e), static_cast<Eigen::Index>(xp));
                                const double aem = germ.A(static_cast<Eigen::Index>(e), static_cast<Eigen::Index>(xm));
                                vm += aep * t.data[(((a * n + b) * n + e) * n + xm) * tail + z];
                                vp += aem * t.data[(((a * n + b) * n + xp) * n + e) * tail + z];
                            }
                            rm = std::max(rm, std::abs(vm));
                            rp = std::max(rp, std::abs(vp));
                        }
        const double scale = std::max(1.0, t.max_abs() * germ_scale);
        rep.minus_residual.push_back(rm);
        rep.plus_residual.push_back(rp);
        rep.scale.push_back(scale);
        rep.passed = rep.passed && rm <= tol * scale && rp <= tol * scale;
    }
    return rep;
}

}  // namespace kvf
