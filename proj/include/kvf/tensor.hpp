#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <memory>
#include <span>
#include <vector>

#include "kvf/error.hpp"
#include "kvf/jet.hpp"

namespace kvf {

inline std::size_t int_pow(std::size_t base, std::size_t exp) {
    std::size_t r = 1;
    for (std::size_t i = 0; i < exp; ++i) r *= base;
    return r;
}

/// Dense array of values with `rank` indices, each ranging over 0..n-1.
/// Index order is row-major: the last index varies fastest.
struct ValueTensor {
    std::size_t n = 0;
    std::size_t rank = 0;
    std::vector<double> data;

    ValueTensor() = default;
    ValueTensor(std::size_t n_, std::size_t rank_) : n(n_), rank(rank_), data(int_pow(n_, rank_), 0.0) {}

    std::size_t flat(std::initializer_list<std::size_t> idx) const {
        if (idx.size() != rank) throw StructuralError("tensor index count does not match rank");
        std::size_t f = 0;
        for (std::size_t i : idx) f = f * n + i;
        return f;
    }
    double operator()(std::initializer_list<std::size_t> idx) const { return data[flat(idx)]; }
    double& operator()(std::initializer_list<std::size_t> idx) { return data[flat(idx)]; }

    double max_abs() const {
        double m = 0.0;
        for (double v : data) m = std::max(m, std::abs(v));
        return m;
    }
};

/// Dense array of jets sharing one layout; component f occupies
/// data[f * stride, (f + 1) * stride).
struct JetTensor {
    std::size_t n = 0;
    std::size_t rank = 0;
    std::size_t order = 0;
    std::shared_ptr<const JetLayout> layout;
    std::size_t stride = 0;
    std::vector<double> data;

    JetTensor() = default;
    JetTensor(std::size_t n_, std::size_t rank_, std::size_t order_)
        : n(n_), rank(rank_), order(order_), layout(JetLayout::get(n_, order_)), stride(layout->size()),
          data(int_pow(n_, rank_) * stride, 0.0) {}

    std::size_t components() const noexcept { return stride == 0 ? 0 : data.size() / stride; }
    double* component(std::size_t f) noexcept { return data.data() + f * stride; }
    const double* component(std::size_t f) const noexcept { return data.data() + f * stride; }

    std::size_t flat(std::initializer_list<std::size_t> idx) const {
        std::size_t f = 0;
        for (std::size_t i : idx) f = f * n + i;
        return f;
    }

    Jet jet(std::size_t f) const {
        std::vector<double> c(component(f), component(f) + stride);
        return Jet::from_coefficients(n, order, std::move(c));
    }

    void set(std::size_t f, const Jet& j) {
        if (j.order() != order || j.n_vars() != n) throw StructuralError("jet shape does not match tensor");
        std::copy(j.coefficients().begin(), j.coefficients().end(), component(f));
    }

    /// Constant terms as a value tensor.
    ValueTensor values() const {
        ValueTensor v(n, rank);
        for (std::size_t f = 0; f < v.data.size(); ++f) v.data[f] = component(f)[0];
        return v;
    }

    /// Per-component flag: any coefficient up to degree `upto` is nonzero.
    std::vector<char> nonzero_mask(std::size_t upto) const {
        const std::size_t len = layout->size_upto(upto);
        std::vector<char> mask(components());
        for (std::size_t f = 0; f < mask.size(); ++f) mask[f] = !detail::all_zero(component(f), len);
        return mask;
    }
};

}  // namespace kvf
