#pragma once

// Truncated multivariate Taylor expansions ("jets").
//
// A jet of order K in n variables stores the coefficients c_a of
//     sum_{|a| <= K} c_a (x - p)^a
// in graded-lexicographic order: monomials sorted by total degree, and within
// one degree by descending lexicographic exponent (x0^2, x0 x1, x1^2, ...).
// Because lower degrees come first, the coefficients of the truncation to any
// order k <= K form a prefix of the coefficient vector. The raw kernels in
// namespace detail rely on that prefix property.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <numeric>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "kvf/error.hpp"

namespace kvf {

using MultiIndex = std::vector<unsigned>;

/// Monomial enumeration and multiplication tables for (n_vars, order).
/// Instances are immutable and shared through JetLayout::get.
class JetLayout {
public:
    static std::shared_ptr<const JetLayout> get(std::size_t n_vars, std::size_t order) {
        static std::mutex mutex;
        static std::map<std::pair<std::size_t, std::size_t>, std::shared_ptr<const JetLayout>> cache;
        std::lock_guard lock(mutex);
        auto& slot = cache[{n_vars, order}];
        if (!slot) slot = std::shared_ptr<const JetLayout>(new JetLayout(n_vars, order));
        return slot;
    }

    std::size_t n_vars() const noexcept { return n_; }
    std::size_t order() const noexcept { return order_; }
    std::size_t size() const noexcept { return degree_offset_.back(); }

    /// Number of monomials of degree <= k (k may not exceed order()).
    std::size_t size_upto(std::size_t k) const noexcept { return degree_offset_[std::min(k, order_) + 1]; }

    std::span<const unsigned> exponents(std::size_t idx) const noexcept {
        return {exponents_.data() + idx * n_, n_};
    }
    unsigned degree(std::size_t idx) const noexcept { return degree_[idx]; }

    std::size_t index_of(std::span<const unsigned> alpha) const {
        if (alpha.size() != n_) throw StructuralError("multi-index length does not match jet variable count");
        const unsigned total = std::accumulate(alpha.begin(), alpha.end(), 0u);
        if (total > order_) throw OrderError("multi-index degree exceeds jet order");
        return lookup_.at(encode(alpha));
    }

    /// Index of monomial(i) * monomial(j); requires degree(i) + degree(j) <= order().
    std::size_t product_index(std::size_t i, std::size_t j) const noexcept {
        return product_[product_offset_[i] + j];
    }

    /// Index of monomial(i) * x_v; requires degree(i) < order().
    std::size_t raised_index(std::size_t i, std::size_t v) const noexcept { return raised_[i * n_ + v]; }

private:
    JetLayout(std::size_t n_vars, std::size_t order) : n_(n_vars), order_(order) {
        degree_offset_.push_back(0);
        MultiIndex current(n_, 0);
        for (std::size_t d = 0; d <= order_; ++d) {
            enumerate_degree(0, static_cast<unsigned>(d), current);
            degree_offset_.push_back(degree_.size());
        }
        for (std::size_t i = 0; i < degree_.size(); ++i) lookup_.emplace(encode(exponents(i)), i);

        MultiIndex sum(n_);
        product_offset_.reserve(size());
        for (std::size_t i = 0; i < size(); ++i) {
            product_offset_.push_back(product_.size());
            const std::size_t partners = size_upto(order_ - degree_[i]);
            const auto a = exponents(i);
            for (std::size_t j = 0; j < partners; ++j) {
                const auto b = exponents(j);
                for (std::size_t v = 0; v < n_; ++v) sum[v] = a[v] + b[v];
                product_.push_back(static_cast<std::uint32_t>(lookup_.at(encode(sum))));
            }
        }

        raised_.assign(size() * n_, 0);
        for (std::size_t i = 0; i < size(); ++i) {
            if (degree_[i] >= order_) continue;
            const auto a = exponents(i);
            for (std::size_t v = 0; v < n_; ++v) {
                std::copy(a.begin(), a.end(), sum.begin());
                ++sum[v];
                raised_[i * n_ + v] = static_cast<std::uint32_t>(lookup_.at(encode(sum)));
            }
        }
    }

    void enumerate_degree(std::size_t var, unsigned remaining, MultiIndex& current) {
        if (n_ == 0) {
            if (remaining == 0) degree_.push_back(0);
            return;
        }
        if (var + 1 == n_) {
            current[var] = remaining;
            exponents_.insert(exponents_.end(), current.begin(), current.end());
            degree_.push_back(std::accumulate(current.begin(), current.end(), 0u));
            return;
        }
        for (unsigned e = remaining + 1; e-- > 0;) {
            current[var] = e;
            enumerate_degree(var + 1, remaining - e, current);
        }
        current[var] = 0;
    }

    std::uint64_t encode(std::span<const unsigned> alpha) const noexcept {
        std::uint64_t key = 0;
        for (unsigned e : alpha) key = key * (order_ + 1) + e;
        return key;
    }

    std::size_t n_;
    std::size_t order_;
    std::vector<unsigned> exponents_;
    std::vector<unsigned> degree_;
    std::vector<std::size_t> degree_offset_;
    std::unordered_map<std::uint64_t, std::size_t> lookup_;
    std::vector<std::size_t> product_offset_;
    std::vector<std::uint32_t> product_;
    std::vector<std::uint32_t> raised_;
};

namespace detail {

// out[0 .. size_upto(order)) += scale * (a * b) truncated at `order`.
// a, b must hold at least size_upto(order) coefficients.
inline void jet_mul_acc(const JetLayout& layout, std::size_t order, const double* a, const double* b, double* out,
                        double scale = 1.0) {
    const std::size_t n = layout.size_upto(order);
    for (std::size_t i = 0; i < n; ++i) {
        const double ai = a[i] * scale;
        if (ai == 0.0) continue;
        const std::size_t partners = layout.size_upto(order - layout.degree(i));
        for (std::size_t j = 0; j < partners; ++j) {
            if (b[j] != 0.0) out[layout.product_index(i, j)] += ai * b[j];
        }
    }
}

// out[0 .. size_upto(order - 1)) = d/dx_v of a (a has order `order`).
inline void jet_diff(const JetLayout& layout, std::size_t order, const double* a, std::size_t v, double* out) {
    const std::size_t n = layout.size_upto(order - 1);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t up = layout.raised_index(i, v);
        out[i] = a[up] * static_cast<double>(layout.exponents(up)[v]);
    }
}

inline bool all_zero(const double* a, std::size_t count) {
    return std::all_of(a, a + count, [](double c) { return c == 0.0; });
}

}  // namespace detail

/// Univariate functions that can be composed with a jet.
enum class Elementary { sin, cos, exp, sinh, cosh, sqrt, reciprocal };

class Jet {
public:
    Jet() : Jet(0, 0) {}

    Jet(std::size_t n_vars, std::size_t order)
        : layout_(JetLayout::get(n_vars, order)), coeffs_(layout_->size(), 0.0) {}

    static Jet constant(std::size_t n_vars, std::size_t order, double value) {
        Jet j(n_vars, order);
        j.coeffs_[0] = value;
        return j;
    }

    /// The coordinate function x_var expanded about a point where it equals `value`.
    static Jet variable(std::size_t n_vars, std::size_t order, std::size_t var, double value) {
        if (var >= n_vars) throw StructuralError("variable index out of range");
        Jet j = constant(n_vars, order, value);
        if (order >= 1) j.coeffs_[1 + var] = 1.0;
        return j;
    }

    static Jet from_coefficients(std::size_t n_vars, std::size_t order, std::vector<double> coeffs) {
        Jet j(n_vars, order);
        if (coeffs.size() != j.coeffs_.size()) throw StructuralError("coefficient count does not match jet layout");
        j.coeffs_ = std::move(coeffs);
        return j;
    }

    std::size_t n_vars() const noexcept { return layout_->n_vars(); }
    std::size_t order() const noexcept { return layout_->order(); }
    const JetLayout& layout() const noexcept { return *layout_; }
    std::span<const double> coefficients() const noexcept { return coeffs_; }

    double value() const noexcept { return coeffs_[0]; }

    double coefficient(std::span<const unsigned> alpha) const { return coeffs_[layout_->index_of(alpha)]; }

    void set_coefficient(std::span<const unsigned> alpha, double c) { coeffs_[layout_->index_of(alpha)] = c; }

    /// d^alpha evaluated at the expansion point, alpha! * c_alpha.
    double partial(std::span<const unsigned> alpha) const {
        double factorial = 1.0;
        for (unsigned e : alpha)
            for (unsigned k = 2; k <= e; ++k) factorial *= k;
        return factorial * coefficient(alpha);
    }

    /// d/dx_var as a jet of order K-1.
    Jet derivative(std::size_t var) const {
        if (order() == 0) throw OrderError("cannot differentiate an order-0 jet");
        if (var >= n_vars()) throw StructuralError("variable index out of range");
        Jet out(n_vars(), order() - 1);
        detail::jet_diff(*layout_, order(), coeffs_.data(), var, out.coeffs_.data());
        return out;
    }

    Jet truncated(std::size_t k) const {
        if (k > order()) throw OrderError("cannot raise jet order by truncation");
        Jet out(n_vars(), k);
        std::copy_n(coeffs_.begin(), out.coeffs_.size(), out.coeffs_.begin());
        return out;
    }

    bool is_zero() const noexcept { return detail::all_zero(coeffs_.data(), coeffs_.size()); }

    Jet& operator+=(const Jet& other) {
        check_shape(other);
        for (std::size_t i = 0; i < coeffs_.size(); ++i) coeffs_[i] += other.coeffs_[i];
        return *this;
    }
    Jet& operator-=(const Jet& other) {
        check_shape(other);
        for (std::size_t i = 0; i < coeffs_.size(); ++i) coeffs_[i] -= other.coeffs_[i];
        return *this;
    }
    Jet& operator*=(double s) {
        for (double& c : coeffs_) c *= s;
        return *this;
    }
    Jet& operator+=(double s) {
        coeffs_[0] += s;
        return *this;
    }

    friend Jet operator+(Jet a, const Jet& b) { return a += b; }
    friend Jet operator-(Jet a, const Jet& b) { return a -= b; }
    friend Jet operator-(Jet a) { return a *= -1.0; }
    friend Jet operator*(Jet a, double s) { return a *= s; }
    friend Jet operator*(double s, Jet a) { return a *= s; }
    friend Jet operator+(Jet a, double s) { return a += s; }
    friend Jet operator+(double s, Jet a) { return a += s; }

    friend Jet operator*(const Jet& a, const Jet& b) {
        a.check_shape(b);
        Jet out(a.n_vars(), a.order());
        detail::jet_mul_acc(*a.layout_, a.order(), a.coeffs_.data(), b.coeffs_.data(), out.coeffs_.data());
        return out;
    }

    friend Jet operator/(const Jet& a, const Jet& b);

    friend bool operator==(const Jet& a, const Jet& b) {
        return a.n_vars() == b.n_vars() && a.order() == b.order() && a.coeffs_ == b.coeffs_;
    }

    void check_shape(const Jet& other) const {
        if (n_vars() != other.n_vars() || order() != other.order())
            throw StructuralError("jet shape mismatch: (" + std::to_string(n_vars()) + "," +
                                  std::to_string(order()) + ") vs (" + std::to_string(other.n_vars()) + "," +
                                  std::to_string(other.order()) + ")");
    }

private:
    std::shared_ptr<const JetLayout> layout_;
    std::vector<double> coeffs_;
};

namespace detail {

// Sum_k c_k h^k with h = a - a(0), evaluated by Horner's rule in the nilpotent part.
inline Jet compose_series(const Jet& a, std::span<const double> taylor) {
    Jet h = a;
    h += -a.value();
    Jet result = Jet::constant(a.n_vars(), a.order(), taylor.back());
    for (std::size_t k = taylor.size() - 1; k-- > 0;) {
        result = result * h;
        result += taylor[k];
    }
    return result;
}

}  // namespace detail

/// Taylor coefficients f^(k)(x0)/k!, k = 0..order.
inline std::vector<double> elementary_taylor(Elementary f, double x0, std::size_t order) {
    std::vector<double> c(order + 1);
    double inv_factorial = 1.0;
    for (std::size_t k = 0; k <= order; ++k) {
        if (k > 0) inv_factorial /= static_cast<double>(k);
        const bool even = k % 2 == 0;
        const double sign = ((k / 2) % 2 == 0) ? 1.0 : -1.0;
        switch (f) {
            case Elementary::sin:
                c[k] = inv_factorial * sign * (even ? std::sin(x0) : std::cos(x0));
                break;
            case Elementary::cos:
                c[k] = inv_factorial * (even ? sign * std::cos(x0) : -sign * std::sin(x0));
                break;
            case Elementary::exp:
                c[k] = inv_factorial * std::exp(x0);
                break;
            case Elementary::sinh:
                c[k] = inv_factorial * (even ? std::sinh(x0) : std::cosh(x0));
                break;
            case Elementary::cosh:
                c[k] = inv_factorial * (even ? std::cosh(x0) : std::sinh(x0));
                break;
            case Elementary::sqrt: {
                // binom(1/2, k) x0^(1/2 - k)
                double binom = 1.0;
                for (std::size_t j = 0; j < k; ++j) binom *= (0.5 - static_cast<double>(j)) / static_cast<double>(j + 1);
                c[k] = binom * std::sqrt(x0) / std::pow(x0, static_cast<double>(k));
                break;
            }
            case Elementary::reciprocal:
                c[k] = (k % 2 == 0 ? 1.0 : -1.0) / std::pow(x0, static_cast<double>(k + 1));
                break;
        }
    }
    return c;
}

inline Jet apply(Elementary f, const Jet& a) {
    const double x0 = a.value();
    if (f == Elementary::sqrt && !(x0 > 0.0))
        throw DomainError("sqrt of a jet requires a positive constant term (got " + std::to_string(x0) + ")");
    if (f == Elementary::reciprocal && x0 == 0.0) throw DomainError("reciprocal of a jet with zero constant term");
    const auto taylor = elementary_taylor(f, x0, a.order());
    return detail::compose_series(a, taylor);
}

inline Jet sin(const Jet& a) { return apply(Elementary::sin, a); }
inline Jet cos(const Jet& a) { return apply(Elementary::cos, a); }
inline Jet exp(const Jet& a) { return apply(Elementary::exp, a); }
inline Jet sinh(const Jet& a) { return apply(Elementary::sinh, a); }
inline Jet cosh(const Jet& a) { return apply(Elementary::cosh, a); }
inline Jet sqrt(const Jet& a) { return apply(Elementary::sqrt, a); }
inline Jet reciprocal(const Jet& a) { return apply(Elementary::reciprocal, a); }

inline Jet operator/(const Jet& a, const Jet& b) { return a * reciprocal(b); }

/// a^k for integer k; negative k goes through the reciprocal.
inline Jet pow_int(const Jet& a, int k) {
    if (k < 0) return reciprocal(pow_int(a, -k));
    Jet result = Jet::constant(a.n_vars(), a.order(), 1.0);
    Jet base = a;
    for (unsigned e = static_cast<unsigned>(k); e != 0; e >>= 1) {
        if (e & 1u) result = result * base;
        if (e > 1) base = base * base;
    }
    return result;
}

/// d^alpha a at the expansion point.
inline double jet_partial(const Jet& a, std::span<const unsigned> alpha) { return a.partial(alpha); }

inline Jet jet_add(const Jet& a, const Jet& b) { return a + b; }
inline Jet jet_mul(const Jet& a, const Jet& b) { return a * b; }

}  // namespace kvf
