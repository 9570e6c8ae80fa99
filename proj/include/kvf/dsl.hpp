#pragma once

// Chart descriptions: the ManifoldSpec type and its text format.
//
//   manifold NAME {
//     coordinates: x, y;
//     parameters: r = 2;              # optional
//     metric: [[r^2, 0], [_, r^2]];   # "_" or a short row mirrors the upper triangle
//     base_point: (0, 0);             # optional, defaults to the origin
//     assume: analytic, simply_connected;   # optional
//   }

#include <Eigen/Dense>

#include <cctype>
#include <cmath>
#include <cstddef>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "kvf/error.hpp"
#include "kvf/expr.hpp"
#include "kvf/jet.hpp"

namespace kvf {

struct Assumptions {
    bool analytic = false;
    bool simply_connected = false;

    friend bool operator==(const Assumptions&, const Assumptions&) = default;
};

struct ManifoldSpec {
    std::string name;
    std::vector<std::string> coords;
    std::vector<std::vector<ExprPtr>> metric;  // full n x n grid, symmetric
    std::map<std::string, double> params;
    std::vector<double> base_point;
    Assumptions assumptions;

    std::size_t dimension() const noexcept { return coords.size(); }

    const Expr& g(std::size_t i, std::size_t j) const { return *metric[i][j]; }
};

inline bool structurally_equal(const ManifoldSpec& a, const ManifoldSpec& b) {
    if (a.name != b.name || a.coords != b.coords || a.params != b.params || a.base_point != b.base_point ||
        !(a.assumptions == b.assumptions) || a.metric.size() != b.metric.size())
        return false;
    for (std::size_t i = 0; i < a.metric.size(); ++i)
        for (std::size_t j = 0; j < a.metric.size(); ++j)
            if (!structurally_equal(*a.metric[i][j], *b.metric[i][j])) return false;
    return true;
}

/// |det g| >= 1e-10 * (max row norm)^n, evaluated on numeric metric values.
inline constexpr double kDegeneracyTolerance = 1e-10;

inline bool is_degenerate(const Eigen::MatrixXd& g) {
    const auto n = g.rows();
    if (n == 0) return false;
    const double row_norm = g.rowwise().norm().maxCoeff();
    if (row_norm == 0.0) return true;
    return std::abs(g.determinant()) < kDegeneracyTolerance * std::pow(row_norm, static_cast<double>(n));
}

inline Eigen::MatrixXd metric_values(const ManifoldSpec& spec, std::span<const double> p) {
    const std::size_t n = spec.dimension();
    if (p.size() != n) throw StructuralError("point dimension does not match chart dimension");
    Eigen::MatrixXd g(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) g(i, j) = evaluate(spec.g(i, j), p);
    return g;
}

inline void require_nondegenerate(const Eigen::MatrixXd& g, std::span<const double> p) {
    if (is_degenerate(g)) {
        std::ostringstream os;
        os << "metric is degenerate at (";
        for (std::size_t i = 0; i < p.size(); ++i) os << (i ? ", " : "") << p[i];
        os << "), det = " << g.determinant();
        throw DegenerateMetricError(os.str());
    }
}

/// Metric components expanded to order `order` about p. Entry [i][j] and [j][i] are equal.
inline std::vector<std::vector<Jet>> metric_jets(const ManifoldSpec& spec, std::span<const double> p,
                                                 std::size_t order) {
    const std::size_t n = spec.dimension();
    if (p.size() != n) throw StructuralError("point dimension does not match chart dimension");
    const auto xs = coordinate_jets(p, order);
    std::vector<std::vector<Jet>> g(n, std::vector<Jet>(n));
    Eigen::MatrixXd g0(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i; j < n; ++j) {
            g[i][j] = evaluate_jet(spec.g(i, j), xs);
            g[j][i] = g[i][j];
            g0(i, j) = g0(j, i) = g[i][j].value();
        }
    }
    require_nondegenerate(g0, p);
    return g;
}

namespace detail {

struct Token {
    enum Kind { ident, number, punct, end } kind = end;
    std::string text;
    double value = 0.0;
    std::size_t line = 1;
    std::size_t column = 1;
};

class Lexer {
public:
    explicit Lexer(std::string_view src) : src_(src) {}

    std::vector<Token> tokenize() {
        std::vector<Token> out;
        for (;;) {
            skip_space();
            Token t;
            t.line = line_;
            t.column = column_;
            if (pos_ >= src_.size()) {
                out.push_back(t);
                return out;
            }
            const char c = src_[pos_];
            if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
                t.kind = Token::ident;
                while (pos_ < src_.size() && is_ident_char(src_[pos_])) t.text += take();
            } else if (std::isdigit(static_cast<unsigned char>(c)) ||
                       (c == '.' && pos_ + 1 < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_ + 1])))) {
                t.kind = Token::number;
                lex_number(t);
            } else if (std::string_view("{}[](),;:=+-*/^").find(c) != std::string_view::npos) {
                t.kind = Token::punct;
                t.text = std::string(1, take());
            } else {
                throw ParseError(line_, column_, std::string("unexpected character '") + c + "'");
            }
            out.push_back(std::move(t));
        }
    }

private:
    static bool is_ident_char(char c) {
        return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.';
    }

    char take() {
        const char c = src_[pos_++];
        if (c == '\n') {
            ++line_;
            column_ = 1;
        } else if ((static_cast<unsigned char>(c) & 0xC0) != 0x80) {
            ++column_;  // count UTF-8 code points, not bytes
        }
        return c;
    }

    void skip_space() {
        while (pos_ < src_.size()) {
            const char c = src_[pos_];
            if (c == '#') {
                while (pos_ < src_.size() && src_[pos_] != '\n') take();
            } else if (std::isspace(static_cast<unsigned char>(c))) {
                take();
            } else {
                break;
            }
        }
    }

    void lex_number(Token& t) {
        auto digits = [&] {
            while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) t.text += take();
        };
        digits();
        if (pos_ < src_.size() && src_[pos_] == '.') {
            t.text += take();
            digits();
        }
        if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
            std::size_t look = pos_ + 1;
            if (look < src_.size() && (src_[look] == '+' || src_[look] == '-')) ++look;
            if (look < src_.size() && std::isdigit(static_cast<unsigned char>(src_[look]))) {
                while (pos_ < look) t.text += take();
                digits();
            }
        }
        t.value = std::stod(t.text);
    }

    std::string_view src_;
    std::size_t pos_ = 0;
    std::size_t line_ = 1;
    std::size_t column_ = 1;
};

// Identifiers in an expression resolve against these names.
struct Scope {
    std::vector<std::string> coords;
    std::map<std::string, double> params;
    bool allow_coords = true;
};

class Parser {
public:
    explicit Parser(std::string_view src) : tokens_(Lexer(src).tokenize()) {}

    ManifoldSpec parse_manifold() {
        ManifoldSpec spec;
        expect_ident("manifold");
        spec.name = expect_kind(Token::ident, "manifold name").text;
        expect_punct("{");

        struct PendingGrid {
            std::vector<std::vector<std::optional<ExprSource>>> rows;
            Token at;
        };
        std::optional<PendingGrid> grid;
        std::optional<std::vector<ExprSource>> base;
        Token base_at;
        bool have_coords = false;
        std::map<std::string, bool> seen;
        std::vector<std::pair<std::string, ExprSource>> param_sources;

        while (!peek_punct("}")) {
            const Token key = expect_kind(Token::ident, "section keyword");
            if (seen[key.text])
                throw ParseError(key.line, key.column, "duplicate section '" + key.text + "'");
            seen[key.text] = true;
            expect_punct(":");
            if (key.text == "coordinates") {
                do {
                    const Token id = expect_kind(Token::ident, "coordinate name");
                    check_identifier(id);
                    for (const auto& c : spec.coords)
                        if (c == id.text) throw ParseError(id.line, id.column, "duplicate coordinate '" + id.text + "'");
                    spec.coords.push_back(id.text);
                } while (accept_punct(","));
                have_coords = true;
            } else if (key.text == "parameters") {
                do {
                    const Token id = expect_kind(Token::ident, "parameter name");
                    check_identifier(id);
                    expect_punct("=");
                    param_sources.emplace_back(id.text, capture_expr());
                } while (accept_punct(","));
            } else if (key.text == "metric") {
                grid = PendingGrid{{}, current()};
                expect_punct("[");
                do {
                    expect_punct("[");
                    std::vector<std::optional<ExprSource>> row;
                    do {
                        if (peek_ident("_")) {
                            advance();
                            row.emplace_back(std::nullopt);
                        } else {
                            row.emplace_back(capture_expr());
                        }
                    } while (accept_punct(","));
                    expect_punct("]");
                    grid->rows.push_back(std::move(row));
                } while (accept_punct(","));
                expect_punct("]");
            } else if (key.text == "base_point") {
                base_at = current();
                expect_punct("(");
                base.emplace();
                do {
                    base->push_back(capture_expr());
                } while (accept_punct(","));
                expect_punct(")");
            } else if (key.text == "assume") {
                do {
                    const Token flag = expect_kind(Token::ident, "assumption flag");
                    if (flag.text == "analytic") {
                        spec.assumptions.analytic = true;
                    } else if (flag.text == "simply_connected") {
                        spec.assumptions.simply_connected = true;
                    } else {
                        throw ParseError(flag.line, flag.column, "unknown assumption flag '" + flag.text + "'");
                    }
                } while (accept_punct(","));
            } else {
                throw ParseError(key.line, key.column, "unknown section '" + key.text + "'");
            }
            expect_punct(";");
        }
        expect_punct("}");
        if (current().kind != Token::end) fail("unexpected input after manifold block");

        if (!have_coords) fail("missing 'coordinates' section");
        if (!grid) fail("missing 'metric' section");

        // parameters are folded to numbers in declaration order; later ones may use earlier ones
        Scope scope;
        scope.allow_coords = false;
        for (auto& [pname, src] : param_sources) {
            if (scope.params.count(pname)) throw ParseError(src.begin.line, src.begin.column, "duplicate parameter '" + pname + "'");
            for (const auto& c : spec.coords)
                if (c == pname)
                    throw ParseError(src.begin.line, src.begin.column, "parameter '" + pname + "' shadows a coordinate");
            const double value = evaluate(*resolve(src, scope), {});
            scope.params[pname] = value;
        }
        spec.params = scope.params;
        scope.coords = spec.coords;
        scope.allow_coords = true;

        const std::size_t n = spec.coords.size();
        if (grid->rows.size() != n)
            throw SpecError(at(grid->at) + "metric has " + std::to_string(grid->rows.size()) + " rows, expected " +
                            std::to_string(n));
        spec.metric.assign(n, std::vector<ExprPtr>(n));
        std::vector<std::vector<std::optional<ExprSource>>> full(n, std::vector<std::optional<ExprSource>>(n));
        for (std::size_t i = 0; i < n; ++i) {
            const auto& row = grid->rows[i];
            if (row.size() == n) {
                full[i] = row;
            } else if (row.size() == n - i) {
                for (std::size_t j = 0; j < row.size(); ++j) full[i][i + j] = row[j];
            } else {
                throw SpecError(at(grid->at) + "metric row " + std::to_string(i + 1) + " has " +
                                std::to_string(row.size()) + " entries; expected " + std::to_string(n) + " (or " +
                                std::to_string(n - i) + " for an upper-triangular row)");
            }
        }
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = i; j < n; ++j) {
                const auto& upper = full[i][j];
                const auto& lower = full[j][i];
                ExprPtr u = upper ? resolve(*upper, scope) : nullptr;
                ExprPtr l = (lower && i != j) ? resolve(*lower, scope) : nullptr;
                if (!u && !l)
                    throw SpecError(at(grid->at) + "metric entry (" + std::to_string(i + 1) + "," +
                                    std::to_string(j + 1) + ") is missing on both sides of the diagonal");
                if (u && l && !structurally_equal(*u, *l))
                    throw SpecError(at(upper->begin) + "metric is not symmetric: entries (" + std::to_string(i + 1) +
                                    "," + std::to_string(j + 1) + ") and (" + std::to_string(j + 1) + "," +
                                    std::to_string(i + 1) + ") differ");
                spec.metric[i][j] = spec.metric[j][i] = u ? u : l;
            }
        }

        if (base) {
            if (base->size() != n)
                throw SpecError(at(base_at) + "base_point has " + std::to_string(base->size()) +
                                " components, expected " + std::to_string(n));
            Scope numeric = scope;
            numeric.allow_coords = false;
            for (const auto& src : *base) spec.base_point.push_back(evaluate(*resolve(src, numeric), {}));
        } else {
            spec.base_point.assign(n, 0.0);
        }
        require_nondegenerate(metric_values(spec, spec.base_point), spec.base_point);
        return spec;
    }

    /// A standalone expression over the given coordinates (vector field components).
    ExprPtr parse_standalone(const Scope& scope) {
        ExprSource src = capture_expr();
        if (current().kind != Token::end) fail("unexpected input after expression");
        return resolve(src, scope);
    }

private:
    // Expressions are parsed to trees with unresolved identifiers first, then resolved, so that
    // sections may appear in any order.
    struct ExprSource {
        ExprPtr tree;
        Token begin;
        std::vector<Token> idents;  // positions of identifier leaves, in tree order
    };

    static std::string at(const Token& t) {
        return "line " + std::to_string(t.line) + ", column " + std::to_string(t.column) + ": ";
    }

    const Token& current() const { return tokens_[pos_]; }
    void advance() {
        if (tokens_[pos_].kind != Token::end) ++pos_;
    }

    [[noreturn]] void fail(const std::string& message) const {
        throw ParseError(current().line, current().column, message);
    }

    bool peek_punct(const char* p) const { return current().kind == Token::punct && current().text == p; }
    bool peek_ident(const char* p) const { return current().kind == Token::ident && current().text == p; }

    bool accept_punct(const char* p) {
        if (!peek_punct(p)) return false;
        advance();
        return true;
    }

    void expect_punct(const char* p) {
        if (!accept_punct(p)) fail(std::string("expected '") + p + "'" + found());
    }

    void expect_ident(const char* word) {
        if (!peek_ident(word)) fail(std::string("expected '") + word + "'" + found());
        advance();
    }

    Token expect_kind(Token::Kind kind, const char* what) {
        if (current().kind != kind) fail(std::string("expected ") + what + found());
        Token t = current();
        advance();
        return t;
    }

    std::string found() const {
        if (current().kind == Token::end) return ", found end of input";
        return ", found '" + current().text + "'";
    }

    static void check_identifier(const Token& id) {
        Function f;
        if (function_from_name(id.text, f) || id.text == "_")
            throw ParseError(id.line, id.column, "'" + id.text + "' is reserved");
    }

    ExprSource capture_expr() {
        ExprSource src;
        src.begin = current();
        src.tree = parse_sum(src);
        return src;
    }

    ExprPtr parse_sum(ExprSource& src) {
        ExprPtr lhs = parse_product(src);
        for (;;) {
            if (accept_punct("+")) {
                lhs = expr::add(lhs, parse_product(src));
            } else if (accept_punct("-")) {
                lhs = expr::sub(lhs, parse_product(src));
            } else {
                return lhs;
            }
        }
    }

    ExprPtr parse_product(ExprSource& src) {
        ExprPtr lhs = parse_unary(src);
        for (;;) {
            if (accept_punct("*")) {
                lhs = expr::mul(lhs, parse_unary(src));
            } else if (accept_punct("/")) {
                lhs = expr::div(lhs, parse_unary(src));
            } else {
                return lhs;
            }
        }
    }

    ExprPtr parse_unary(ExprSource& src) {
        if (accept_punct("-")) {
            ExprPtr operand = parse_unary(src);
            if (operand->kind == ExprKind::constant) return expr::constant(-operand->value);
            return expr::neg(operand);
        }
        if (accept_punct("+")) return parse_unary(src);
        return parse_power(src);
    }

    ExprPtr parse_power(ExprSource& src) {
        ExprPtr base = parse_atom(src);
        if (accept_punct("^")) {
            bool negative = false;
            if (accept_punct("-")) {
                negative = true;
            } else {
                accept_punct("+");
            }
            const Token k = current();
            if (k.kind != Token::number || k.text.find_first_not_of("0123456789") != std::string::npos)
                fail("exponent must be an integer literal" + found());
            advance();
            const int e = std::stoi(k.text);
            return expr::power(base, negative ? -e : e);
        }
        return base;
    }

    ExprPtr parse_atom(ExprSource& src) {
        const Token t = current();
        if (t.kind == Token::number) {
            advance();
            return expr::constant(t.value);
        }
        if (t.kind == Token::ident) {
            advance();
            Function f;
            if (function_from_name(t.text, f)) {
                if (!accept_punct("(")) throw ParseError(t.line, t.column, "function '" + t.text + "' needs '('");
                ExprPtr arg = parse_sum(src);
                expect_punct(")");
                return expr::call(f, arg);
            }
            src.idents.push_back(t);
            return expr::parameter(t.text);  // placeholder, resolved later
        }
        if (accept_punct("(")) {
            ExprPtr inner = parse_sum(src);
            expect_punct(")");
            return inner;
        }
        fail("expected an expression" + found());
    }

    ExprPtr resolve(const ExprSource& src, const Scope& scope) {
        std::size_t next_ident = 0;
        return resolve_node(src.tree, src, scope, next_ident);
    }

    ExprPtr resolve_node(const ExprPtr& e, const ExprSource& src, const Scope& scope, std::size_t& next_ident) {
        if (e->kind == ExprKind::parameter) {
            const Token& t = src.idents.at(next_ident++);
            if (scope.allow_coords) {
                for (std::size_t i = 0; i < scope.coords.size(); ++i)
                    if (scope.coords[i] == t.text) return expr::coordinate(i);
            } else {
                for (const auto& c : scope.coords)
                    if (c == t.text)
                        throw ParseError(t.line, t.column, "coordinate '" + t.text + "' not allowed here");
            }
            auto it = scope.params.find(t.text);
            if (it != scope.params.end()) return expr::constant(it->second);
            throw ParseError(t.line, t.column, "unknown identifier '" + t.text + "'");
        }
        auto copy = std::make_shared<Expr>(*e);
        if (e->lhs) copy->lhs = resolve_node(e->lhs, src, scope, next_ident);
        if (e->rhs) copy->rhs = resolve_node(e->rhs, src, scope, next_ident);
        return copy;
    }

    std::vector<Token> tokens_;
    std::size_t pos_ = 0;
};

}  // namespace detail

inline ManifoldSpec parse_manifold(std::string_view text) { return detail::Parser(text).parse_manifold(); }

/// Parses one expression in the DSL grammar over the given coordinate names.
inline ExprPtr parse_expression(std::string_view text, const std::vector<std::string>& coords,
                                const std::map<std::string, double>& params = {}) {
    detail::Scope scope;
    scope.coords = coords;
    scope.params = params;
    return detail::Parser(text).parse_standalone(scope);
}

/// Parses comma-separated field components, e.g. "-y, x".
inline std::vector<ExprPtr> parse_field(std::string_view text, const ManifoldSpec& spec) {
    std::vector<ExprPtr> out;
    std::size_t depth = 0;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= text.size(); ++i) {
        if (i == text.size() || (text[i] == ',' && depth == 0)) {
            out.push_back(parse_expression(text.substr(start, i - start), spec.coords, spec.params));
            start = i + 1;
        } else if (text[i] == '(') {
            ++depth;
        } else if (text[i] == ')' && depth > 0) {
            --depth;
        }
    }
    if (out.size() != spec.dimension())
        throw SpecError("field has " + std::to_string(out.size()) + " components, chart dimension is " +
                        std::to_string(spec.dimension()));
    return out;
}

inline std::string serialize(const ManifoldSpec& spec) {
    std::ostringstream os;
    os << "manifold " << spec.name << " {\n";
    os << "  coordinates: ";
    for (std::size_t i = 0; i < spec.coords.size(); ++i) os << (i ? ", " : "") << spec.coords[i];
    os << ";\n";
    if (!spec.params.empty()) {
        os << "  parameters: ";
        bool first = true;
        for (const auto& [k, v] : spec.params) {
            os << (first ? "" : ", ") << k << " = " << (v < 0 ? "(" + format_number(v) + ")" : format_number(v));
            first = false;
        }
        os << ";\n";
    }
    os << "  metric: [";
    for (std::size_t i = 0; i < spec.metric.size(); ++i) {
        os << (i ? ",\n          [" : "[");
        for (std::size_t j = 0; j < spec.metric.size(); ++j)
            os << (j ? ", " : "") << to_string(*spec.metric[i][j], spec.coords);
        os << "]";
    }
    os << "];\n";
    os << "  base_point: (";
    for (std::size_t i = 0; i < spec.base_point.size(); ++i) {
        const double v = spec.base_point[i];
        os << (i ? ", " : "") << (v < 0 ? "(" + format_number(v) + ")" : format_number(v));
    }
    os << ");\n";
    if (spec.assumptions.analytic || spec.assumptions.simply_connected) {
        os << "  assume: ";
        if (spec.assumptions.analytic) os << "analytic";
        if (spec.assumptions.simply_connected) os << (spec.assumptions.analytic ? ", " : "") << "simply_connected";
        os << ";\n";
    }
    os << "}\n";
    return os.str();
}

}  // namespace kvf
