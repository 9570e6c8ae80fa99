#pragma once

// Levi-Civita connection, Riemann tensor and its covariant derivatives at a point.
//
// Index conventions (fixed project-wide):
//   christoffel  G[a][b][c] = Gamma^a_{bc},          nabla_b d_c = Gamma^a_{bc} d_a
//   riemann      R[l][k][i][j] = R^l_{kij},           R(d_i, d_j) d_k = R^l_{kij} d_l
//                with R(X,Y) = [nabla_X, nabla_Y] - nabla_[X,Y]
//   cov_riemann(m)[l][k][i][j][c1]...[cm] = (nabla_{cm} ... nabla_{c1} R)^l_{kij}
//                the newest derivative index is always last.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "kvf/dsl.hpp"
#include "kvf/error.hpp"
#include "kvf/jet.hpp"
#include "kvf/tensor.hpp"

namespace kvf {

/// Largest dense derivative array (components) the engine will build.
inline constexpr std::size_t kMaxTensorComponents = 12'000'000;

inline bool covariant_order_feasible(std::size_t n, std::size_t m) {
    double count = 1.0;
    for (std::size_t i = 0; i < m + 4; ++i) count *= static_cast<double>(n);
    return count <= static_cast<double>(kMaxTensorComponents);
}

namespace detail {

// Covariant derivative of a (1, r) tensor field given as jets of order k >= 1.
// Result has one more lower index (appended last) and order k - 1.
inline JetTensor covariant_derivative(const JetTensor& t, const JetTensor& gamma) {
    if (t.order == 0) throw OrderError("jet order exhausted; increase jet order");
    if (gamma.order + 1 < t.order) throw OrderError("connection jets too short for covariant derivative");
    const std::size_t n = t.n;
    const std::size_t k = t.order;
    JetTensor out(n, t.rank + 1, k - 1);
    const JetLayout& layout = *t.layout;
    const auto gnz = gamma.nonzero_mask(k - 1);
    const auto tnz = t.nonzero_mask(k - 1);
    const auto tnz_full = t.nonzero_mask(k);

    std::vector<std::size_t> slot_stride(t.rank);
    for (std::size_t q = 0; q < t.rank; ++q) slot_stride[q] = int_pow(n, t.rank - 1 - q);
    std::vector<std::size_t> idx(t.rank);

    const std::size_t count = t.components();
    for (std::size_t f = 0; f < count; ++f) {
        std::size_t rem = f;
        for (std::size_t q = 0; q < t.rank; ++q) {
            idx[q] = rem / slot_stride[q];
            rem %= slot_stride[q];
        }
        for (std::size_t c = 0; c < n; ++c) {
            double* o = out.component(f * n + c);
            if (tnz_full[f]) jet_diff(layout, k, t.component(f), c, o);
            // + Gamma^a_{c e} T^e_{...}
            const std::size_t a = idx[0];
            for (std::size_t e = 0; e < n; ++e) {
                const std::size_t gidx = (a * n + c) * n + e;
                const std::size_t src = f + (e - a) * slot_stride[0];
                if (gnz[gidx] && tnz[src]) jet_mul_acc(layout, k - 1, gamma.component(gidx), t.component(src), o);
            }
            // - Gamma^e_{c b_s} T^a_{.. e ..}
            for (std::size_t q = 1; q < t.rank; ++q) {
                const std::size_t b = idx[q];
                for (std::size_t e = 0; e < n; ++e) {
                    const std::size_t gidx = (e * n + c) * n + b;
                    const std::size_t src = f + (e - b) * slot_stride[q];
                    if (gnz[gidx] && tnz[src])
                        jet_mul_acc(layout, k - 1, gamma.component(gidx), t.component(src), o, -1.0);
                }
            }
        }
    }
    return out;
}

}  // namespace detail

struct CurvatureData {
    std::vector<double> point;
    std::size_t jet_order = 0;       // order of the metric jets
    std::size_t max_derivative = 0;  // highest m with cov_riemann(m) available
    Eigen::MatrixXd metric;
    Eigen::MatrixXd metric_inverse;
    ValueTensor metric_derivative;  // [i][j][k] = d_k g_ij at p
    JetTensor metric_jets;          // g_ij
    JetTensor inverse_jets;         // g^ij
    JetTensor christoffel_jets;     // order jet_order - 1
    JetTensor riemann_jets;         // order jet_order - 2
    std::vector<ValueTensor> cov;   // cov[m] = nabla^m R at p

    std::size_t dimension() const noexcept { return point.size(); }

    const ValueTensor& cov_riemann(std::size_t m) const {
        if (m > max_derivative)
            throw OrderError("covariant derivative nabla^" + std::to_string(m) + " R not available (computed up to " +
                             std::to_string(max_derivative) + "); increase jet order");
        return cov[m];
    }
    const ValueTensor& riemann() const { return cov[0]; }
    const ValueTensor& christoffel() const { return christoffel_values; }

    ValueTensor christoffel_values;
};

/// Gamma^k_ij = 1/2 g^kl (d_i g_jl + d_j g_il - d_l g_ij) as jets of one order less than the metric.
inline JetTensor christoffel(const JetTensor& g, const JetTensor& ginv) {
    if (g.order < 1) throw OrderError("Christoffel symbols need metric jets of order >= 1");
    const std::size_t n = g.n;
    const std::size_t k = g.order - 1;
    const JetLayout& layout = *g.layout;
    JetTensor dg(n, 3, k);  // [i][j][l] = d_l g_ij
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            for (std::size_t l = 0; l < n; ++l)
                detail::jet_diff(layout, g.order, g.component(i * n + j), l, dg.component((i * n + j) * n + l));

    JetTensor lowered(n, 3, k);  // [l][i][j] = 1/2 (d_i g_jl + d_j g_il - d_l g_ij)
    for (std::size_t l = 0; l < n; ++l)
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) {
                double* o = lowered.component((l * n + i) * n + j);
                const double* a = dg.component((j * n + l) * n + i);
                const double* b = dg.component((i * n + l) * n + j);
                const double* c = dg.component((i * n + j) * n + l);
                for (std::size_t s = 0; s < dg.stride; ++s) o[s] = 0.5 * (a[s] + b[s] - c[s]);
            }

    JetTensor gamma(n, 3, k);
    const auto inz = ginv.nonzero_mask(k);
    const auto lnz = lowered.nonzero_mask(k);
    for (std::size_t a = 0; a < n; ++a)
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) {
                double* o = gamma.component((a * n + i) * n + j);
                for (std::size_t l = 0; l < n; ++l) {
                    const std::size_t lidx = (l * n + i) * n + j;
                    if (inz[a * n + l] && lnz[lidx])
                        detail::jet_mul_acc(layout, k, ginv.component(a * n + l), lowered.component(lidx), o);
                }
            }
    return gamma;
}

/// R^l_kij = d_i Gamma^l_jk - d_j Gamma^l_ik + Gamma^l_im Gamma^m_jk - Gamma^l_jm Gamma^m_ik.
inline JetTensor riemann(const JetTensor& gamma) {
    if (gamma.order < 1) throw OrderError("Riemann tensor needs Christoffel jets of order >= 1; increase jet order");
    const std::size_t n = gamma.n;
    const std::size_t k = gamma.order - 1;
    const JetLayout& layout = *gamma.layout;
    JetTensor r(n, 4, k);
    const auto gnz = gamma.nonzero_mask(k);
    std::vector<double> d(r.stride);
    auto G = [n](std::size_t a, std::size_t b, std::size_t c) { return (a * n + b) * n + c; };
    for (std::size_t l = 0; l < n; ++l)
        for (std::size_t kk = 0; kk < n; ++kk)
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = 0; j < n; ++j) {
                    double* o = r.component(((l * n + kk) * n + i) * n + j);
                    detail::jet_diff(layout, gamma.order, gamma.component(G(l, j, kk)), i, o);
                    detail::jet_diff(layout, gamma.order, gamma.component(G(l, i, kk)), j, d.data());
                    for (std::size_t s = 0; s < r.stride; ++s) o[s] -= d[s];
                    for (std::size_t m = 0; m < n; ++m) {
                        if (gnz[G(l, i, m)] && gnz[G(m, j, kk)])
                            detail::jet_mul_acc(layout, k, gamma.component(G(l, i, m)), gamma.component(G(m, j, kk)), o);
                        if (gnz[G(l, j, m)] && gnz[G(m, i, kk)])
                            detail::jet_mul_acc(layout, k, gamma.component(G(l, j, m)), gamma.component(G(m, i, kk)), o,
                                                -1.0);
                    }
                }
    return r;
}

namespace detail {

inline JetTensor pack_metric(const std::vector<std::vector<Jet>>& g, std::size_t order) {
    const std::size_t n = g.size();
    JetTensor t(n, 2, order);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) t.set(i * n + j, g[i][j]);
    return t;
}

// g^{-1} = sum_k (-g0^{-1} h)^k g0^{-1}, h = g - g(p); h is nilpotent in the jet algebra.
inline JetTensor invert_metric(const JetTensor& g, const Eigen::MatrixXd& g0inv) {
    const std::size_t n = g.n;
    const std::size_t order = g.order;
    const JetLayout& layout = *g.layout;
    JetTensor m(n, 2, order);  // -g0inv * h
    for (std::size_t a = 0; a < n; ++a)
        for (std::size_t b = 0; b < n; ++b) {
            double* o = m.component(a * n + b);
            for (std::size_t c = 0; c < n; ++c) {
                const double w = -g0inv(a, c);
                if (w == 0.0) continue;
                const double* h = g.component(c * n + b);
                for (std::size_t s = 1; s < g.stride; ++s) o[s] += w * h[s];
            }
        }
    JetTensor term(n, 2, order);
    for (std::size_t a = 0; a < n; ++a)
        for (std::size_t b = 0; b < n; ++b) term.component(a * n + b)[0] = g0inv(a, b);
    JetTensor sum = term;
    const auto mnz = m.nonzero_mask(order);
    for (std::size_t power = 1; power <= order; ++power) {
        JetTensor next(n, 2, order);
        const auto tnz = term.nonzero_mask(order);
        for (std::size_t a = 0; a < n; ++a)
            for (std::size_t b = 0; b < n; ++b)
                for (std::size_t c = 0; c < n; ++c)
                    if (mnz[a * n + c] && tnz[c * n + b])
                        jet_mul_acc(layout, order, m.component(a * n + c), term.component(c * n + b),
                                    next.component(a * n + b));
        for (std::size_t s = 0; s < sum.data.size(); ++s) sum.data[s] += next.data[s];
        term = std::move(next);
    }
    return sum;
}

}  // namespace detail

/// Curvature record at p with nabla^m R available for m <= max_derivative.
/// Metric jets of order max_derivative + 2 are used.
inline CurvatureData compute_curvature(const ManifoldSpec& spec, std::span<const double> p,
                                       std::size_t max_derivative) {
    const std::size_t n = spec.dimension();
    if (p.size() != n) throw StructuralError("point dimension does not match chart dimension");
    if (max_derivative > 0 && !covariant_order_feasible(n, max_derivative))
        throw OrderError("nabla^" + std::to_string(max_derivative) + " R in dimension " + std::to_string(n) +
                         " exceeds the dense-array limit of " + std::to_string(kMaxTensorComponents) + " components");
    CurvatureData cd;
    cd.point.assign(p.begin(), p.end());
    cd.max_derivative = max_derivative;
    cd.jet_order = max_derivative + 2;
    cd.metric_jets = detail::pack_metric(metric_jets(spec, p, cd.jet_order), cd.jet_order);
    cd.metric = Eigen::MatrixXd(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) cd.metric(i, j) = cd.metric_jets.component(i * n + j)[0];
    cd.metric_inverse = cd.metric.inverse();
    cd.metric_derivative = ValueTensor(n, 3);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            for (std::size_t k = 0; k < n; ++k)
                cd.metric_derivative({i, j, k}) = cd.metric_jets.component(i * n + j)[1 + k];
    cd.inverse_jets = detail::invert_metric(cd.metric_jets, cd.metric_inverse);
    cd.christoffel_jets = christoffel(cd.metric_jets, cd.inverse_jets);
    cd.christoffel_values = cd.christoffel_jets.values();
    cd.riemann_jets = riemann(cd.christoffel_jets);
    cd.cov.push_back(cd.riemann_jets.values());
    JetTensor level = cd.riemann_jets;
    for (std::size_t m = 1; m <= max_derivative; ++m) {
        level = detail::covariant_derivative(level, cd.christoffel_jets);
        cd.cov.push_back(level.values());
    }
    return cd;
}

/// Convenience: Gamma and R at p only (metric jets of order 2).
inline CurvatureData connection_at(const ManifoldSpec& spec, std::span<const double> p) {
    return compute_curvature(spec, p, 0);
}

/// nabla^m R value arrays for m = 0..m_max (requires curv.max_derivative >= m_max).
inline std::vector<ValueTensor> covariant_derivatives_R(const CurvatureData& curv, std::size_t m_max) {
    std::vector<ValueTensor> out;
    for (std::size_t m = 0; m <= m_max; ++m) out.push_back(curv.cov_riemann(m));
    return out;
}

/// R_{lkij} = g_la R^a_kij at p.
inline ValueTensor lowered_riemann(const CurvatureData& curv) {
    const std::size_t n = curv.dimension();
    const ValueTensor& r = curv.riemann();
    ValueTensor low(n, 4);
    for (std::size_t l = 0; l < n; ++l)
        for (std::size_t k = 0; k < n; ++k)
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = 0; j < n; ++j) {
                    double s = 0.0;
                    for (std::size_t a = 0; a < n; ++a) s += curv.metric(l, a) * r({a, k, i, j});
                    low({l, k, i, j}) = s;
                }
    return low;
}

struct CurvatureIdentityResiduals {
    double norm = 0.0;              // max |R_{lkij}|
    double antisymmetry = 0.0;      // R_lkij + R_lkji
    double skew_lower = 0.0;        // R_lkij + R_klij
    double pair_symmetry = 0.0;     // R_lkij - R_ijlk
    double first_bianchi = 0.0;     // R^l_kij + R^l_ijk + R^l_jki
    double metric_compatibility = 0.0;  // g_ij;k
    double compatibility_scale = 0.0;

    double max_curvature_residual() const {
        return std::max({antisymmetry, skew_lower, pair_symmetry, first_bianchi});
    }
};

inline CurvatureIdentityResiduals curvature_identities(const CurvatureData& curv) {
    const std::size_t n = curv.dimension();
    const ValueTensor low = lowered_riemann(curv);
    const ValueTensor& r = curv.riemann();
    CurvatureIdentityResiduals res;
    res.norm = low.max_abs();
    for (std::size_t l = 0; l < n; ++l)
        for (std::size_t k = 0; k < n; ++k)
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = 0; j < n; ++j) {
                    res.antisymmetry = std::max(res.antisymmetry, std::abs(low({l, k, i, j}) + low({l, k, j, i})));
                    res.skew_lower = std::max(res.skew_lower, std::abs(low({l, k, i, j}) + low({k, l, i, j})));
                    res.pair_symmetry = std::max(res.pair_symmetry, std::abs(low({l, k, i, j}) - low({i, j, l, k})));
                    res.first_bianchi = std::max(
                        res.first_bianchi, std::abs(r({l, k, i, j}) + r({l, i, j, k}) + r({l, j, k, i})));
                }
    const ValueTensor& gamma = curv.christoffel();
    const ValueTensor& dg = curv.metric_derivative;
    res.compatibility_scale = dg.max_abs() + gamma.max_abs() * curv.metric.cwiseAbs().maxCoeff();
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            for (std::size_t k = 0; k < n; ++k) {
                double v = dg({i, j, k});
                for (std::size_t l = 0; l < n; ++l)
                    v -= gamma({l, k, i}) * curv.metric(l, j) + gamma({l, k, j}) * curv.metric(i, l);
                res.metric_compatibility = std::max(res.metric_compatibility, std::abs(v));
            }
    return res;
}

}  // namespace kvf
