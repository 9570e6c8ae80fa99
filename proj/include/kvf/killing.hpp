#pragma once

// Killing bundle E = TM + so(TM, g), the Killing connection
//     D_X (xi, A) = (nabla_X xi + A X, nabla_X A + R(X, xi)),
// its curvature, the prolonged integrability conditions and their joint kernel.
//
// A Killing field xi corresponds to the parallel section (xi, -nabla xi). Along such a
// section the Lie derivative of every nabla^m R vanishes, which at a point reads
//     T_m(xi, A) := nabla_xi (nabla^m R) + A . (nabla^m R) = 0,
// where A acts as a derivation on all slots. T_0 is the curvature condition
//     (nabla_xi R)(X,Y) + [A, R(X,Y)] - R(AX,Y) - R(X,AY) = 0
// and T_{m+1} is the covariant derivative of T_m after substituting nabla xi = -A and
// nabla A = -R(., xi).

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "kvf/curvature.hpp"
#include "kvf/dsl.hpp"
#include "kvf/error.hpp"
#include "kvf/expr.hpp"
#include "kvf/linalg.hpp"
#include "kvf/tensor.hpp"

namespace kvf {

struct KillingGerm {
    Eigen::VectorXd xi;
    Eigen::MatrixXd A;
};

/// max |g(AX,Y) + g(X,AY)| over basis vectors.
inline double so_residual(const Eigen::MatrixXd& A, const Eigen::MatrixXd& g) {
    const Eigen::MatrixXd w = g * A;
    return (w + w.transpose()).cwiseAbs().maxCoeff();
}

/// v_plus ^ v_minus : X -> g(v_plus, X) v_minus - g(v_minus, X) v_plus.
inline Eigen::MatrixXd wedge(const Eigen::VectorXd& v_plus, const Eigen::VectorXd& v_minus, const Eigen::MatrixXd& g) {
    return v_minus * (g * v_plus).transpose() - v_plus * (g * v_minus).transpose();
}

/// Coordinates on the fiber E_p: xi^k first, then W_ab = (gA)_ab for a < b.
class KillingBasis {
public:
    explicit KillingBasis(const Eigen::MatrixXd& g) : g_(g), ginv_(g.inverse()) {}

    std::size_t n() const { return static_cast<std::size_t>(g_.rows()); }
    std::size_t size() const { return n() + n() * (n() - 1) / 2; }

    KillingGerm element(std::size_t k) const {
        Eigen::VectorXd c = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(size()));
        c(static_cast<Eigen::Index>(k)) = 1.0;
        return from_coordinates(c);
    }

    KillingGerm from_coordinates(const Eigen::VectorXd& c) const {
        const auto nn = static_cast<Eigen::Index>(n());
        KillingGerm germ{c.head(nn), Eigen::MatrixXd::Zero(nn, nn)};
        Eigen::MatrixXd w = Eigen::MatrixXd::Zero(nn, nn);
        Eigen::Index k = nn;
        for (Eigen::Index a = 0; a < nn; ++a)
            for (Eigen::Index b = a + 1; b < nn; ++b) {
                w(a, b) = c(k);
                w(b, a) = -c(k);
                ++k;
            }
        germ.A = ginv_ * w;
        return germ;
    }

    /// Least-squares coordinates; the skew part of gA is used.
    Eigen::VectorXd coordinates(const KillingGerm& germ) const {
        const auto nn = static_cast<Eigen::Index>(n());
        Eigen::VectorXd c(static_cast<Eigen::Index>(size()));
        c.head(nn) = germ.xi;
        const Eigen::MatrixXd w = g_ * germ.A;
        Eigen::Index k = nn;
        for (Eigen::Index a = 0; a < nn; ++a)
            for (Eigen::Index b = a + 1; b < nn; ++b) c(k++) = 0.5 * (w(a, b) - w(b, a));
        return c;
    }

    const Eigen::MatrixXd& metric() const { return g_; }

private:
    Eigen::MatrixXd g_;
    Eigen::MatrixXd ginv_;
};

struct FieldGerm {
    KillingGerm germ;
    double so_residual = 0.0;
    bool in_so = false;  // A satisfies the so(T_pM, g) condition to tolerance
};

inline std::vector<Jet> field_jets(const std::vector<ExprPtr>& field, std::span<const double> p, std::size_t order) {
    const auto xs = coordinate_jets(p, order);
    std::vector<Jet> out;
    for (const auto& e : field) out.push_back(evaluate_jet(*e, xs));
    return out;
}

/// (xi(p), A) with A^i_j = -(d_j xi^i + Gamma^i_jk xi^k), the germ -nabla xi of any field.
inline FieldGerm A_of_field(const ManifoldSpec& spec, const std::vector<ExprPtr>& field, std::span<const double> p,
                            double tol = 1e-8) {
    const std::size_t n = spec.dimension();
    if (field.size() != n) throw StructuralError("field component count does not match chart dimension");
    const CurvatureData curv = connection_at(spec, p);
    const auto xi = field_jets(field, p, 1);
    const auto nn = static_cast<Eigen::Index>(n);
    FieldGerm out;
    out.germ.xi = Eigen::VectorXd(nn);
    out.germ.A = Eigen::MatrixXd(nn, nn);
    for (std::size_t i = 0; i < n; ++i) out.germ.xi(static_cast<Eigen::Index>(i)) = xi[i].value();
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            double v = xi[i].coefficients()[1 + j];
            for (std::size_t k = 0; k < n; ++k) v += curv.christoffel()({i, j, k}) * xi[k].value();
            out.germ.A(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = -v;
        }
    out.so_residual = so_residual(out.germ.A, curv.metric);
    const double scale = 1.0 + out.germ.A.cwiseAbs().maxCoeff() * curv.metric.cwiseAbs().maxCoeff();
    out.in_so = out.so_residual <= tol * scale;
    return out;
}

struct PointResidual {
    std::vector<double> point;
    double residual = 0.0;
    double scale = 1.0;
    bool ok = false;
    std::string error;  // non-empty when the point could not be evaluated
};

struct FieldCheckReport {
    std::vector<PointResidual> points;
    double max_residual = 0.0;
    double tol = 0.0;
    bool passed = false;
};

namespace detail {

inline void finish_check(FieldCheckReport& r) {
    std::size_t evaluated = 0;
    bool all_ok = true;
    for (const auto& p : r.points) {
        if (!p.error.empty()) continue;
        ++evaluated;
        r.max_residual = std::max(r.max_residual, p.residual);
        all_ok = all_ok && p.ok;
    }
    r.passed = evaluated > 0 && all_ok;
}

}  // namespace detail

/// (L_xi g)_ij = xi^k d_k g_ij + g_kj d_i xi^k + g_ik d_j xi^k at each sample point;
/// a point passes when max |L_xi g| <= tol (1 + max |g|).
inline FieldCheckReport verify_killing(const ManifoldSpec& spec, const std::vector<ExprPtr>& field,
                                       const std::vector<std::vector<double>>& sample_points, double tol) {
    if (sample_points.empty()) throw PreconditionError("verify_killing needs at least one sample point");
    const std::size_t n = spec.dimension();
    if (field.size() != n) throw StructuralError("field component count does not match chart dimension");
    FieldCheckReport report;
    report.tol = tol;
    for (const auto& p : sample_points) {
        PointResidual pr;
        pr.point = p;
        try {
            const auto g = metric_jets(spec, p, 1);
            const auto xi = field_jets(field, p, 1);
            double gmax = 0.0;
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = 0; j < n; ++j) {
                    gmax = std::max(gmax, std::abs(g[i][j].value()));
                    double v = 0.0;
                    for (std::size_t k = 0; k < n; ++k) {
                        v += xi[k].value() * g[i][j].coefficients()[1 + k];
                        v += g[k][j].value() * xi[k].coefficients()[1 + i];
                        v += g[i][k].value() * xi[k].coefficients()[1 + j];
                    }
                    pr.residual = std::max(pr.residual, std::abs(v));
                }
            pr.scale = 1.0 + gmax;
            pr.ok = pr.residual <= tol * pr.scale;
        } catch (const Error& e) {
            pr.error = e.what();
        }
        report.points.push_back(std::move(pr));
    }
    detail::finish_check(report);
    return report;
}

/// Residual of nabla_X A_xi + R(X, xi) over coordinate directions X. Refused unless the
/// field passes verify_killing at the same points.
inline FieldCheckReport check_nabA(const ManifoldSpec& spec, const std::vector<ExprPtr>& field,
                                   const std::vector<std::vector<double>>& sample_points, double tol) {
    if (!verify_killing(spec, field, sample_points, tol).passed)
        throw PreconditionError("check_nabA requires a Killing field; verify_killing failed");
    const std::size_t n = spec.dimension();
    FieldCheckReport report;
    report.tol = tol;
    for (const auto& p : sample_points) {
        PointResidual pr;
        pr.point = p;
        try {
            const CurvatureData curv = connection_at(spec, p);
            const auto xi = field_jets(field, p, 2);
            // A^i_j as order-1 jets
            std::vector<Jet> a(n * n);
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = 0; j < n; ++j) {
                    Jet v = xi[i].derivative(j);
                    for (std::size_t k = 0; k < n; ++k)
                        v += curv.christoffel_jets.jet((i * n + j) * n + k) * xi[k].truncated(1);
                    a[i * n + j] = -v;
                }
            const ValueTensor& gamma = curv.christoffel();
            const ValueTensor& r = curv.riemann();
            double nab_max = 0.0, r_max = 0.0;
            for (std::size_t c = 0; c < n; ++c)
                for (std::size_t i = 0; i < n; ++i)
                    for (std::size_t j = 0; j < n; ++j) {
                        double nab = a[i * n + j].coefficients()[1 + c];
                        for (std::size_t e = 0; e < n; ++e)
                            nab += gamma({i, c, e}) * a[e * n + j].value() - gamma({e, c, j}) * a[i * n + e].value();
                        double rx = 0.0;
                        for (std::size_t k = 0; k < n; ++k) rx += r({i, j, c, k}) * xi[k].value();
                        nab_max = std::max(nab_max, std::abs(nab));
                        r_max = std::max(r_max, std::abs(rx));
                        pr.residual = std::max(pr.residual, std::abs(nab + rx));
                    }
            pr.scale = 1.0 + nab_max + r_max;
            pr.ok = pr.residual <= tol * pr.scale;
        } catch (const Error& e) {
            pr.error = e.what();
        }
        report.points.push_back(std::move(pr));
    }
    detail::finish_check(report);
    return report;
}

/// Derivation action of an endomorphism on a (1, r) tensor:
/// (A.S)^a_{b1..br} = A^a_e S^e_{b..} - sum_s S^a_{.. e ..} A^e_{b_s}.
inline ValueTensor derivation_action(const Eigen::MatrixXd& A, const ValueTensor& s) {
    const std::size_t n = s.n;
    ValueTensor out(n, s.rank);
    std::vector<std::size_t> stride(s.rank);
    for (std::size_t q = 0; q < s.rank; ++q) stride[q] = int_pow(n, s.rank - 1 - q);
    std::vector<std::size_t> idx(s.rank);
    for (std::size_t f = 0; f < s.data.size(); ++f) {
        std::size_t rem = f;
        for (std::size_t q = 0; q < s.rank; ++q) {
            idx[q] = rem / stride[q];
            rem %= stride[q];
        }
        double v = 0.0;
        const std::size_t a = idx[0];
        for (std::size_t e = 0; e < n; ++e) {
            const double ae = A(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(e));
            if (ae != 0.0) v += ae * s.data[f + (e - a) * stride[0]];
        }
        for (std::size_t q = 1; q < s.rank; ++q) {
            const std::size_t b = idx[q];
            for (std::size_t e = 0; e < n; ++e) {
                const double eb = A(static_cast<Eigen::Index>(e), static_cast<Eigen::Index>(b));
                if (eb != 0.0) v -= s.data[f + (e - b) * stride[q]] * eb;
            }
        }
        out.data[f] = v;
    }
    return out;
}

/// T_m(xi, A) = xi^c (nabla^{m+1} R)[..., c] + A . nabla^m R, a tensor of rank 4 + m.
inline ValueTensor apply_integrability(const CurvatureData& curv, std::size_t m, const KillingGerm& germ) {
    const ValueTensor& s = curv.cov_riemann(m);
    const ValueTensor& ds = curv.cov_riemann(m + 1);
    const std::size_t n = curv.dimension();
    ValueTensor out = derivation_action(germ.A, s);
    for (std::size_t f = 0; f < out.data.size(); ++f) {
        double v = 0.0;
        for (std::size_t c = 0; c < n; ++c) v += germ.xi(static_cast<Eigen::Index>(c)) * ds.data[f * n + c];
        out.data[f] += v;
    }
    return out;
}

/// Matrix of T_m on the fiber coordinates of `basis` (rows: tensor components).
inline Eigen::MatrixXd integrability_matrix(const CurvatureData& curv, std::size_t m, const KillingBasis& basis) {
    const std::size_t rows = int_pow(curv.dimension(), 4 + m);
    Eigen::MatrixXd mat(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(basis.size()));
    for (std::size_t k = 0; k < basis.size(); ++k) {
        const ValueTensor t = apply_integrability(curv, m, basis.element(k));
        mat.col(static_cast<Eigen::Index>(k)) = Eigen::Map<const Eigen::VectorXd>(t.data.data(), static_cast<Eigen::Index>(rows));
    }
    return mat;
}

/// T_0 .. T_{m_max} as matrices on E_p (requires nabla^{m_max+1} R in curv).
inline std::vector<Eigen::MatrixXd> integrability_tensors(const CurvatureData& curv, std::size_t m_max) {
    if (m_max + 1 > curv.max_derivative)
        throw OrderError("integrability tensors up to order " + std::to_string(m_max) + " need nabla^" +
                         std::to_string(m_max + 1) + " R; increase m_max/jet order");
    const KillingBasis basis(curv.metric);
    std::vector<Eigen::MatrixXd> out;
    for (std::size_t m = 0; m <= m_max; ++m) out.push_back(integrability_matrix(curv, m, basis));
    return out;
}

/// so-part of kappa(X, Y)(xi, A) = -[(nabla_xi R)(X,Y) + (A.R)(X,Y)]; the TM-part is zero.
inline Eigen::MatrixXd kappa(const CurvatureData& curv, const KillingGerm& germ, std::size_t x, std::size_t y) {
    const std::size_t n = curv.dimension();
    if (x >= n || y >= n) throw StructuralError("kappa: basis index out of range");
    const ValueTensor t = apply_integrability(curv, 0, germ);
    Eigen::MatrixXd out(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    for (std::size_t a = 0; a < n; ++a)
        for (std::size_t b = 0; b < n; ++b)
            out(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) = -t({a, b, x, y});
    return out;
}

struct SingularGap {
    double smallest_retained = 0.0;
    double largest_discarded = 0.0;
    double threshold = 0.0;
};

struct KernelReport {
    std::vector<double> point;
    std::size_t bundle_dim = 0;
    std::vector<std::size_t> dims;  // kernel dimension after stacking T_0..T_m
    std::vector<SingularGap> gaps;
    std::size_t stabilized_dim = 0;
    std::size_t stabilization_order = 0;
    bool stabilized = false;
    bool upper_bound_only = false;  // chart not asserted analytic
    double rank_tol = kDefaultRankTol;
    std::size_t m_max = 0;
    std::vector<KillingGerm> kernel;
    std::vector<std::string> warnings;
};

struct KillingOptions {
    std::size_t m_max = 10;
    double tol = kDefaultRankTol;
};

namespace detail {

// Rebuild the curvature record when a higher derivative is needed; one extra order is
// computed ahead so that the usual stabilization check needs a single build.
inline bool ensure_derivative(const ManifoldSpec& spec, std::span<const double> p, std::optional<CurvatureData>& curv,
                              std::size_t need, std::size_t cap) {
    if (curv && curv->max_derivative >= need) return true;
    const std::size_t n = spec.dimension();
    if (!covariant_order_feasible(n, need)) return false;
    std::size_t target = std::max(need, std::min(cap, need + 1));
    while (target > need && !covariant_order_feasible(n, target)) --target;
    curv = compute_curvature(spec, p, target);
    return true;
}

}  // namespace detail

/// Joint kernel dimension of T_0..T_m on E_p, stopping one order after the dimension
/// stops changing (or when the kernel is empty).
inline KernelReport killing_dimension(const ManifoldSpec& spec, std::span<const double> p,
                                      const KillingOptions& opts = {}) {
    const std::size_t n = spec.dimension();
    KernelReport rep;
    rep.point.assign(p.begin(), p.end());
    rep.rank_tol = opts.tol;
    rep.m_max = opts.m_max;
    std::optional<CurvatureData> curv;
    if (!detail::ensure_derivative(spec, p, curv, 1, opts.m_max + 1))
        throw OrderError("dimension too large for the dense curvature arrays");
    const KillingBasis basis(curv->metric);
    rep.bundle_dim = basis.size();
    rep.upper_bound_only = !spec.assumptions.analytic;

    RowSpace rows(basis.size());
    std::size_t previous = basis.size();
    RankDecision last;
    for (std::size_t m = 0; m <= opts.m_max; ++m) {
        if (!detail::ensure_derivative(spec, p, curv, m + 1, opts.m_max + 1)) {
            rep.warnings.push_back("stopped at order " + std::to_string(m) + ": nabla^" + std::to_string(m + 1) +
                                   " R exceeds the dense-array limit");
            break;
        }
        rows.add_rows(integrability_matrix(*curv, m, basis));
        last = rows.decide(opts.tol);
        std::size_t dim = last.nullity();
        if (dim > previous) {
            rep.warnings.push_back("rank threshold drift at order " + std::to_string(m) +
                                   ": kernel grew from " + std::to_string(previous) + " to " + std::to_string(dim));
            dim = previous;
        }
        rep.dims.push_back(dim);
        rep.gaps.push_back({last.smallest_retained, last.largest_discarded, last.threshold});
        if (dim == previous || dim == 0) {
            rep.stabilized = true;
            rep.stabilization_order = m;
            break;
        }
        previous = dim;
    }
    rep.stabilized_dim = rep.dims.empty() ? basis.size() : rep.dims.back();
    if (!rep.stabilized) {
        rep.stabilization_order = rep.dims.empty() ? 0 : rep.dims.size() - 1;
        rep.warnings.push_back("unstable: kernel dimension did not stabilize by order " +
                               std::to_string(rep.stabilization_order) + "; reported value is an upper bound");
    }
    if (rep.upper_bound_only)
        rep.warnings.push_back("chart is not asserted analytic; the kernel dimension is an upper bound on dim kill(M,g)");
    for (Eigen::Index k = 0; k < last.kernel_basis.cols(); ++k)
        rep.kernel.push_back(basis.from_coordinates(last.kernel_basis.col(k)));
    (void)n;
    return rep;
}

/// Deterministic perturbations of the base point, used by the multi-point mode.
inline std::vector<std::vector<double>> perturbed_points(std::span<const double> base, std::size_t count,
                                                         double radius = 0.1, std::uint32_t seed = 20240611u) {
    std::mt19937 rng(seed);
    std::vector<std::vector<double>> out;
    for (std::size_t k = 0; k < count; ++k) {
        std::vector<double> p(base.begin(), base.end());
        for (double& x : p) {
            const double u = static_cast<double>(rng()) / 4294967295.0 * 2.0 - 1.0;
            x += radius * u * (1.0 + std::abs(x));
        }
        out.push_back(std::move(p));
    }
    return out;
}

struct MultiPointKernelReport {
    std::vector<KernelReport> reports;
    std::vector<std::pair<std::vector<double>, std::string>> failures;
    std::size_t min_dim = 0;
    bool stabilized = false;
};

/// killing_dimension at 5 perturbed points; the minimum dimension is reported.
inline MultiPointKernelReport killing_dimension_multi(const ManifoldSpec& spec, const KillingOptions& opts = {},
                                                      std::size_t count = 5) {
    MultiPointKernelReport out;
    out.stabilized = true;
    bool any = false;
    for (const auto& p : perturbed_points(spec.base_point, count)) {
        try {
            KernelReport r = killing_dimension(spec, p, opts);
            out.min_dim = any ? std::min(out.min_dim, r.stabilized_dim) : r.stabilized_dim;
            out.stabilized = out.stabilized && r.stabilized;
            any = true;
            out.reports.push_back(std::move(r));
        } catch (const Error& e) {
            out.failures.emplace_back(p, e.what());
        }
    }
    if (!any) throw DomainError("multi-point mode: no perturbed point could be evaluated");
    return out;
}

/// True when the germ is annihilated by T_0..T_m (m = the report's last order), to tol.
inline double kernel_distance(const KernelReport& rep, const KillingGerm& germ, const Eigen::MatrixXd& g) {
    const KillingBasis basis(g);
    const Eigen::VectorXd c = basis.coordinates(germ);
    Eigen::MatrixXd k(c.size(), static_cast<Eigen::Index>(rep.kernel.size()));
    for (std::size_t j = 0; j < rep.kernel.size(); ++j)
        k.col(static_cast<Eigen::Index>(j)) = basis.coordinates(rep.kernel[j]);
    const Eigen::VectorXd proj = k.cols() ? Eigen::VectorXd(k * (k.transpose() * c)) : Eigen::VectorXd::Zero(c.size());
    return (c - proj).norm();
}

namespace detail {

struct TransportState {
    Eigen::VectorXd xi;
    Eigen::MatrixXd A;
};

inline TransportState transport_rhs(const ManifoldSpec& spec, const Eigen::VectorXd& x, const Eigen::VectorXd& dx,
                                    const TransportState& s) {
    const std::size_t n = spec.dimension();
    std::vector<double> p(x.data(), x.data() + x.size());
    const CurvatureData c = connection_at(spec, p);
    const ValueTensor& gamma = c.christoffel();
    const ValueTensor& r = c.riemann();
    const auto nn = static_cast<Eigen::Index>(n);
    Eigen::MatrixXd conn = Eigen::MatrixXd::Zero(nn, nn);  // conn^i_e = Gamma^i_ke dx^k
    Eigen::MatrixXd curv = Eigen::MatrixXd::Zero(nn, nn);  // R(dx, xi)^i_j
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t e = 0; e < n; ++e) {
            double v = 0.0, w = 0.0;
            for (std::size_t k = 0; k < n; ++k) {
                v += gamma({i, k, e}) * dx(static_cast<Eigen::Index>(k));
                for (std::size_t l = 0; l < n; ++l)
                    w += r({i, e, k, l}) * dx(static_cast<Eigen::Index>(k)) * s.xi(static_cast<Eigen::Index>(l));
            }
            conn(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(e)) = v;
            curv(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(e)) = w;
        }
    TransportState d;
    d.xi = -conn * s.xi - s.A * dx;
    d.A = -conn * s.A + s.A * conn - curv;
    return d;
}

}  // namespace detail

/// Parallel transport of a germ for the Killing connection along a polyline (classical RK4,
/// fixed step count per segment).
inline KillingGerm killing_transport(const ManifoldSpec& spec, const KillingGerm& germ,
                                     const std::vector<std::vector<double>>& path, std::size_t steps_per_segment) {
    if (steps_per_segment < 1) throw PreconditionError("steps_per_segment must be >= 1");
    if (path.empty()) throw PreconditionError("transport path is empty");
    const auto nn = static_cast<Eigen::Index>(spec.dimension());
    for (const auto& q : path)
        if (q.size() != spec.dimension()) throw StructuralError("path point dimension does not match chart");
    detail::TransportState s{germ.xi, germ.A};
    for (std::size_t seg = 0; seg + 1 < path.size(); ++seg) {
        const Eigen::VectorXd a = Eigen::Map<const Eigen::VectorXd>(path[seg].data(), nn);
        const Eigen::VectorXd b = Eigen::Map<const Eigen::VectorXd>(path[seg + 1].data(), nn);
        const Eigen::VectorXd dx = b - a;
        const double h = 1.0 / static_cast<double>(steps_per_segment);
        for (std::size_t step = 0; step < steps_per_segment; ++step) {
            const double t = static_cast<double>(step) * h;
            auto at = [&](double tt) { return Eigen::VectorXd(a + tt * dx); };
            auto add = [](const detail::TransportState& x, const detail::TransportState& k, double f) {
                return detail::TransportState{x.xi + f * k.xi, x.A + f * k.A};
            };
            const auto k1 = detail::transport_rhs(spec, at(t), dx, s);
            const auto k2 = detail::transport_rhs(spec, at(t + 0.5 * h), dx, add(s, k1, 0.5 * h));
            const auto k3 = detail::transport_rhs(spec, at(t + 0.5 * h), dx, add(s, k2, 0.5 * h));
            const auto k4 = detail::transport_rhs(spec, at(t + h), dx, add(s, k3, h));
            s.xi += h / 6.0 * (k1.xi + 2.0 * k2.xi + 2.0 * k3.xi + k4.xi);
            s.A += h / 6.0 * (k1.A + 2.0 * k2.A + 2.0 * k3.A + k4.A);
        }
    }
    return {s.xi, s.A};
}

/// max of |xi - xi'| and |A - A'| entries.
inline double germ_distance(const KillingGerm& a, const KillingGerm& b) {
    return std::max((a.xi - b.xi).cwiseAbs().maxCoeff(), (a.A - b.A).cwiseAbs().maxCoeff());
}

}  // namespace kvf
