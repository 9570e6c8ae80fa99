#pragma once

// Expression trees for metric components and vector-field components.

#include <charconv>
#include <cmath>
#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "kvf/error.hpp"
#include "kvf/jet.hpp"

namespace kvf {

enum class ExprKind { constant, coordinate, parameter, add, sub, mul, div, neg, power, function };

enum class Function { sin, cos, exp, sinh, cosh, sqrt };

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

struct Expr {
    ExprKind kind = ExprKind::constant;
    double value = 0.0;      // constant
    std::size_t index = 0;   // coordinate
    std::string name;        // parameter (only before finalization)
    int exponent = 0;        // power, always >= 0
    Function function = Function::sin;
    ExprPtr lhs;  // unary operand / left operand
    ExprPtr rhs;
};

namespace expr {

inline ExprPtr constant(double v) {
    auto e = std::make_shared<Expr>();
    e->kind = ExprKind::constant;
    e->value = v;
    return e;
}

inline ExprPtr coordinate(std::size_t i) {
    auto e = std::make_shared<Expr>();
    e->kind = ExprKind::coordinate;
    e->index = i;
    return e;
}

inline ExprPtr parameter(std::string name) {
    auto e = std::make_shared<Expr>();
    e->kind = ExprKind::parameter;
    e->name = std::move(name);
    return e;
}

inline ExprPtr binary(ExprKind kind, ExprPtr a, ExprPtr b) {
    auto e = std::make_shared<Expr>();
    e->kind = kind;
    e->lhs = std::move(a);
    e->rhs = std::move(b);
    return e;
}

inline ExprPtr add(ExprPtr a, ExprPtr b) { return binary(ExprKind::add, std::move(a), std::move(b)); }
inline ExprPtr sub(ExprPtr a, ExprPtr b) { return binary(ExprKind::sub, std::move(a), std::move(b)); }
inline ExprPtr mul(ExprPtr a, ExprPtr b) { return binary(ExprKind::mul, std::move(a), std::move(b)); }
inline ExprPtr div(ExprPtr a, ExprPtr b) { return binary(ExprKind::div, std::move(a), std::move(b)); }

inline ExprPtr neg(ExprPtr a) {
    auto e = std::make_shared<Expr>();
    e->kind = ExprKind::neg;
    e->lhs = std::move(a);
    return e;
}

/// base^k; a negative k is rewritten as 1 / base^|k|.
inline ExprPtr power(ExprPtr base, int k) {
    if (k < 0) return div(constant(1.0), power(std::move(base), -k));
    auto e = std::make_shared<Expr>();
    e->kind = ExprKind::power;
    e->exponent = k;
    e->lhs = std::move(base);
    return e;
}

inline ExprPtr call(Function f, ExprPtr arg) {
    auto e = std::make_shared<Expr>();
    e->kind = ExprKind::function;
    e->function = f;
    e->lhs = std::move(arg);
    return e;
}

}  // namespace expr

inline const char* function_name(Function f) {
    switch (f) {
        case Function::sin: return "sin";
        case Function::cos: return "cos";
        case Function::exp: return "exp";
        case Function::sinh: return "sinh";
        case Function::cosh: return "cosh";
        case Function::sqrt: return "sqrt";
    }
    return "?";
}

inline bool function_from_name(const std::string& name, Function& out) {
    static constexpr Function all[] = {Function::sin, Function::cos, Function::exp,
                                       Function::sinh, Function::cosh, Function::sqrt};
    for (Function f : all) {
        if (name == function_name(f)) {
            out = f;
            return true;
        }
    }
    return false;
}

inline bool structurally_equal(const Expr& a, const Expr& b) {
    if (a.kind != b.kind) return false;
    switch (a.kind) {
        case ExprKind::constant: return a.value == b.value;
        case ExprKind::coordinate: return a.index == b.index;
        case ExprKind::parameter: return a.name == b.name;
        case ExprKind::neg: return structurally_equal(*a.lhs, *b.lhs);
        case ExprKind::power: return a.exponent == b.exponent && structurally_equal(*a.lhs, *b.lhs);
        case ExprKind::function: return a.function == b.function && structurally_equal(*a.lhs, *b.lhs);
        default: return structurally_equal(*a.lhs, *b.lhs) && structurally_equal(*a.rhs, *b.rhs);
    }
}

inline bool is_zero_constant(const Expr& e) { return e.kind == ExprKind::constant && e.value == 0.0; }

/// Shortest decimal form that parses back to the same double.
inline std::string format_number(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

/// Fully parenthesized rendering; reparsing yields a structurally equal tree.
inline std::string to_string(const Expr& e, std::span<const std::string> coords) {
    switch (e.kind) {
        case ExprKind::constant: {
            std::string s = format_number(e.value);
            return e.value < 0 || (e.value == 0.0 && std::signbit(e.value)) ? "(" + s + ")" : s;
        }
        case ExprKind::coordinate:
            return e.index < coords.size() ? coords[e.index] : "x" + std::to_string(e.index);
        case ExprKind::parameter: return e.name;
        case ExprKind::add: return "(" + to_string(*e.lhs, coords) + " + " + to_string(*e.rhs, coords) + ")";
        case ExprKind::sub: return "(" + to_string(*e.lhs, coords) + " - " + to_string(*e.rhs, coords) + ")";
        case ExprKind::mul: return "(" + to_string(*e.lhs, coords) + " * " + to_string(*e.rhs, coords) + ")";
        case ExprKind::div: return "(" + to_string(*e.lhs, coords) + " / " + to_string(*e.rhs, coords) + ")";
        case ExprKind::neg: return "(-" + to_string(*e.lhs, coords) + ")";
        case ExprKind::power: return "(" + to_string(*e.lhs, coords) + ")^" + std::to_string(e.exponent);
        case ExprKind::function:
            return std::string(function_name(e.function)) + "(" + to_string(*e.lhs, coords) + ")";
    }
    return {};
}

/// Copy of `e` with every coordinate reference shifted by `offset`.
inline ExprPtr shift_coordinates(const ExprPtr& e, std::size_t offset) {
    if (offset == 0) return e;
    auto copy = std::make_shared<Expr>(*e);
    if (e->kind == ExprKind::coordinate) copy->index += offset;
    if (e->lhs) copy->lhs = shift_coordinates(e->lhs, offset);
    if (e->rhs) copy->rhs = shift_coordinates(e->rhs, offset);
    return copy;
}

/// Copy of `e` with every coordinate index i replaced by map[i].
inline ExprPtr remap_coordinates(const ExprPtr& e, std::span<const std::size_t> map) {
    auto copy = std::make_shared<Expr>(*e);
    if (e->kind == ExprKind::coordinate) copy->index = map[e->index];
    if (e->lhs) copy->lhs = remap_coordinates(e->lhs, map);
    if (e->rhs) copy->rhs = remap_coordinates(e->rhs, map);
    return copy;
}

inline double evaluate(const Expr& e, std::span<const double> x) {
    switch (e.kind) {
        case ExprKind::constant: return e.value;
        case ExprKind::coordinate:
            if (e.index >= x.size()) throw StructuralError("coordinate index out of range in evaluation");
            return x[e.index];
        case ExprKind::parameter: throw SpecError("unresolved parameter '" + e.name + "'");
        case ExprKind::add: return evaluate(*e.lhs, x) + evaluate(*e.rhs, x);
        case ExprKind::sub: return evaluate(*e.lhs, x) - evaluate(*e.rhs, x);
        case ExprKind::mul: return evaluate(*e.lhs, x) * evaluate(*e.rhs, x);
        case ExprKind::div: {
            const double d = evaluate(*e.rhs, x);
            if (d == 0.0) throw DomainError("division by zero");
            return evaluate(*e.lhs, x) / d;
        }
        case ExprKind::neg: return -evaluate(*e.lhs, x);
        case ExprKind::power: {
            const double b = evaluate(*e.lhs, x);
            double r = 1.0;
            for (int k = 0; k < e.exponent; ++k) r *= b;
            return r;
        }
        case ExprKind::function: {
            const double a = evaluate(*e.lhs, x);
            switch (e.function) {
                case Function::sin: return std::sin(a);
                case Function::cos: return std::cos(a);
                case Function::exp: return std::exp(a);
                case Function::sinh: return std::sinh(a);
                case Function::cosh: return std::cosh(a);
                case Function::sqrt:
                    if (a < 0.0) throw DomainError("sqrt of a negative value");
                    return std::sqrt(a);
            }
        }
    }
    return 0.0;
}

/// Expand `e` as a jet, given jets of the coordinate functions (all of one shape).
inline Jet evaluate_jet(const Expr& e, std::span<const Jet> x) {
    if (x.empty()) throw StructuralError("jet evaluation needs at least one coordinate jet");
    const std::size_t n = x[0].n_vars();
    const std::size_t order = x[0].order();
    switch (e.kind) {
        case ExprKind::constant: return Jet::constant(n, order, e.value);
        case ExprKind::coordinate:
            if (e.index >= x.size()) throw StructuralError("coordinate index out of range in evaluation");
            return x[e.index];
        case ExprKind::parameter: throw SpecError("unresolved parameter '" + e.name + "'");
        case ExprKind::add: return evaluate_jet(*e.lhs, x) + evaluate_jet(*e.rhs, x);
        case ExprKind::sub: return evaluate_jet(*e.lhs, x) - evaluate_jet(*e.rhs, x);
        case ExprKind::mul: {
            // constant factors are common in metric components; skip the convolution for them
            if (e.lhs->kind == ExprKind::constant) return e.lhs->value * evaluate_jet(*e.rhs, x);
            if (e.rhs->kind == ExprKind::constant) return evaluate_jet(*e.lhs, x) * e.rhs->value;
            return evaluate_jet(*e.lhs, x) * evaluate_jet(*e.rhs, x);
        }
        case ExprKind::div: {
            if (e.rhs->kind == ExprKind::constant) {
                if (e.rhs->value == 0.0) throw DomainError("division by zero");
                return evaluate_jet(*e.lhs, x) * (1.0 / e.rhs->value);
            }
            return evaluate_jet(*e.lhs, x) / evaluate_jet(*e.rhs, x);
        }
        case ExprKind::neg: return -evaluate_jet(*e.lhs, x);
        case ExprKind::power: return pow_int(evaluate_jet(*e.lhs, x), e.exponent);
        case ExprKind::function: {
            const Jet a = evaluate_jet(*e.lhs, x);
            switch (e.function) {
                case Function::sin: return sin(a);
                case Function::cos: return cos(a);
                case Function::exp: return exp(a);
                case Function::sinh: return sinh(a);
                case Function::cosh: return cosh(a);
                case Function::sqrt: return sqrt(a);
            }
        }
    }
    return Jet::constant(n, order, 0.0);
}

/// Coordinate jets x_i = p_i + (x_i - p_i) about point p.
inline std::vector<Jet> coordinate_jets(std::span<const double> p, std::size_t order) {
    std::vector<Jet> xs;
    xs.reserve(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) xs.push_back(Jet::variable(p.size(), order, i, p[i]));
    return xs;
}

}  // namespace kvf
