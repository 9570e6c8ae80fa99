#pragma once

// Built-in geometries. Each entry is generated as DSL source and parsed, so the
// catalog doubles as a set of reference inputs for the text format.

#include <cmath>
#include <cstddef>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "kvf/dsl.hpp"
#include "kvf/error.hpp"
#include "kvf/expr.hpp"

namespace kvf {

using BuiltinParams = std::map<std::string, std::vector<double>>;

/// A known Killing field of a catalog geometry, as DSL component expressions.
struct CatalogField {
    std::string label;
    std::vector<std::string> components;
};

struct CatalogEntry {
    std::string name;
    std::string description;
    std::string source;
    std::vector<CatalogField> fields;
};

inline std::vector<std::string> builtin_names() {
    return {"euclidean", "minkowski", "sphere2", "hyperbolic2", "cahen_wallach", "walker_recurrent"};
}

namespace detail {

class ParamReader {
public:
    ParamReader(std::string builtin, const BuiltinParams& params) : builtin_(std::move(builtin)), params_(params) {}

    std::vector<double> list(const std::string& key, std::vector<double> fallback) {
        used_.push_back(key);
        auto it = params_.find(key);
        return it == params_.end() ? fallback : it->second;
    }

    double scalar(const std::string& key, double fallback) {
        const auto v = list(key, {fallback});
        if (v.size() != 1) throw ParameterError(builtin_ + ": parameter '" + key + "' takes a single value");
        return v[0];
    }

    std::size_t count(const std::string& key, std::size_t fallback, std::size_t min_value) {
        const double v = scalar(key, static_cast<double>(fallback));
        if (v != std::floor(v) || v < static_cast<double>(min_value) || v > 64)
            throw ParameterError(builtin_ + ": parameter '" + key + "' must be an integer >= " +
                                 std::to_string(min_value));
        return static_cast<std::size_t>(v);
    }

    bool has(const std::string& key) const { return params_.count(key) != 0; }

    void finish() const {
        for (const auto& [k, _] : params_) {
            bool known = false;
            for (const auto& u : used_) known = known || u == k;
            if (!known) throw ParameterError(builtin_ + ": unknown parameter '" + k + "'");
        }
    }

private:
    std::string builtin_;
    const BuiltinParams& params_;
    std::vector<std::string> used_;
};

inline std::vector<std::string> spatial_names(std::size_t n) {
    static const char* short_names[] = {"x", "y", "z", "w"};
    std::vector<std::string> out;
    for (std::size_t i = 0; i < n; ++i)
        out.push_back(n <= 4 ? std::string(short_names[i]) : "x" + std::to_string(i + 1));
    return out;
}

inline std::string join(const std::vector<std::string>& parts, const char* sep = ", ") {
    std::string out;
    for (std::size_t i = 0; i < parts.size(); ++i) out += (i ? sep : "") + parts[i];
    return out;
}

inline std::string diagonal_grid(const std::vector<std::string>& diag) {
    const std::size_t n = diag.size();
    std::vector<std::string> rows;
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<std::string> row;
        for (std::size_t j = i; j < n; ++j) row.push_back(i == j ? diag[i] : "0");
        rows.push_back("[" + join(row) + "]");
    }
    return "[" + join(rows, ",\n          ") + "]";
}

inline std::string num(double v) {
    const std::string s = format_number(v);
    return v < 0 ? "(" + s + ")" : s;
}

// Flat space of signature (negatives, positives): translations plus rotations/boosts.
inline CatalogEntry flat_entry(const std::string& name, const std::vector<std::string>& coords,
                               const std::vector<int>& signs) {
    const std::size_t n = coords.size();
    CatalogEntry e;
    e.name = name;
    std::vector<std::string> diag;
    for (int s : signs) diag.push_back(s < 0 ? "-1" : "1");
    std::ostringstream src;
    src << "manifold " << name << " {\n  coordinates: " << join(coords) << ";\n  metric: " << diagonal_grid(diag)
        << ";\n  assume: analytic, simply_connected;\n}\n";
    e.source = src.str();
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<std::string> comp(n, "0");
        comp[i] = "1";
        e.fields.push_back({"translation d/d" + coords[i], comp});
    }
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            // eps_j x_j d_i - eps_i x_i d_j
            std::vector<std::string> comp(n, "0");
            comp[i] = (signs[j] < 0 ? "-" : "") + coords[j];
            comp[j] = (signs[i] < 0 ? "" : "-") + coords[i];
            const bool boost = signs[i] != signs[j];
            e.fields.push_back({std::string(boost ? "boost " : "rotation ") + coords[i] + "-" + coords[j], comp});
        }
    }
    return e;
}

}  // namespace detail

inline CatalogEntry catalog_entry(const std::string& name, const BuiltinParams& params = {}) {
    detail::ParamReader reader(name, params);
    CatalogEntry e;
    if (name == "euclidean") {
        const std::size_t n = reader.count("n", 2, 1);
        reader.finish();
        e = detail::flat_entry("euclidean" + std::to_string(n), detail::spatial_names(n), std::vector<int>(n, 1));
        e.description = "flat Euclidean space R^" + std::to_string(n);
    } else if (name == "minkowski") {
        const std::size_t p = reader.count("p", 1, 0);
        const std::size_t q = reader.count("q", 1, 0);
        reader.finish();
        if (p + q == 0) throw ParameterError("minkowski: p + q must be positive");
        std::vector<std::string> coords;
        for (std::size_t i = 0; i < p; ++i) coords.push_back(p == 1 ? "t" : "t" + std::to_string(i + 1));
        for (const auto& s : detail::spatial_names(q)) coords.push_back(s);
        std::vector<int> signs(p, -1);
        signs.insert(signs.end(), q, 1);
        e = detail::flat_entry("minkowski" + std::to_string(p) + "_" + std::to_string(q), coords, signs);
        e.description = "flat pseudo-Euclidean space R^{" + std::to_string(p) + "," + std::to_string(q) + "}";
    } else if (name == "sphere2") {
        const double r = reader.scalar("r", 1.0);
        reader.finish();
        if (!(r > 0)) throw ParameterError("sphere2: radius r must be positive");
        e.name = "sphere2";
        e.description = "round 2-sphere of radius r in polar chart (theta, phi)";
        std::ostringstream src;
        src << "manifold sphere2 {\n  coordinates: theta, phi;\n  parameters: r = " << detail::num(r)
            << ";\n  metric: [[r^2, 0],\n          [0, r^2 * sin(theta)^2]];\n"
               "  base_point: (1, 0);\n  assume: analytic, simply_connected;\n}\n";
        e.source = src.str();
        e.fields = {{"rotation about z", {"0", "1"}},
                    {"rotation about x", {"sin(phi)", "cos(theta) / sin(theta) * cos(phi)"}},
                    {"rotation about y", {"cos(phi)", "-cos(theta) / sin(theta) * sin(phi)"}}};
    } else if (name == "hyperbolic2") {
        reader.finish();
        e.name = "hyperbolic2";
        e.description = "hyperbolic plane, upper half-plane model";
        e.source =
            "manifold hyperbolic2 {\n  coordinates: x, y;\n  metric: [[1 / y^2, 0],\n          [0, 1 / y^2]];\n"
            "  base_point: (0, 1);\n  assume: analytic, simply_connected;\n}\n";
        e.fields = {{"horizontal translation", {"1", "0"}},
                    {"dilation", {"x", "y"}},
                    {"special conformal", {"x^2 - y^2", "2 * x * y"}}};
    } else if (name == "cahen_wallach") {
        std::vector<double> q = reader.list("q", {});
        std::size_t n = 0;
        if (reader.has("n")) {
            n = reader.count("n", 1, 1);
            if (q.empty()) q.assign(n, 1.0);
            if (q.size() == 1 && n > 1) q.assign(n, q[0]);
            if (q.size() != n) throw ParameterError("cahen_wallach: q has " + std::to_string(q.size()) +
                                                    " entries but n = " + std::to_string(n));
        } else {
            if (q.empty()) q = {1.0};
            n = q.size();
        }
        reader.finish();
        for (double qi : q)
            if (qi == 0.0 || !std::isfinite(qi))
                throw ParameterError("cahen_wallach: Q must be a non-degenerate symmetric matrix (zero diagonal entry)");
        e.name = "cahen_wallach";
        e.description = "Cahen-Wallach space 2 dt (dv + x^i Q_ij x^j dt) + dx^2 with diagonal Q";
        std::vector<std::string> coords = {"t", "v"};
        std::vector<std::string> params, quad;
        for (std::size_t i = 0; i < n; ++i) {
            coords.push_back("x" + std::to_string(i + 1));
            params.push_back("q" + std::to_string(i + 1) + " = " + detail::num(q[i]));
            quad.push_back("q" + std::to_string(i + 1) + " * x" + std::to_string(i + 1) + "^2");
        }
        const std::size_t dim = n + 2;
        std::vector<std::string> rows;
        for (std::size_t i = 0; i < dim; ++i) {
            std::vector<std::string> row;
            for (std::size_t j = i; j < dim; ++j) {
                if (i == 0 && j == 0) {
                    row.push_back("2 * (" + detail::join(quad, " + ") + ")");
                } else if (i == 0 && j == 1) {
                    row.push_back("1");
                } else if (i == j && i >= 2) {
                    row.push_back("1");
                } else {
                    row.push_back("0");
                }
            }
            rows.push_back("[" + detail::join(row) + "]");
        }
        std::ostringstream src;
        src << "manifold cahen_wallach {\n  coordinates: " << detail::join(coords) << ";\n  parameters: "
            << detail::join(params) << ";\n  metric: [" << detail::join(rows, ",\n          ")
            << "];\n  assume: analytic, simply_connected;\n}\n";
        e.source = src.str();

        auto field = [&](std::vector<std::pair<std::size_t, std::string>> entries) {
            std::vector<std::string> comp(dim, "0");
            for (auto& [k, s] : entries) comp[k] = s;
            return comp;
        };
        e.fields.push_back({"d/dt", field({{0, "1"}})});
        e.fields.push_back({"d/dv (parallel null)", field({{1, "1"}})});
        // f(t) d/dx_i - f'(t) x_i d/dv with f'' = 2 q_i f
        for (std::size_t i = 0; i < n; ++i) {
            const std::string x = coords[i + 2];
            const std::string k = format_number(std::sqrt(2.0 * std::abs(q[i])));
            const std::string kt = k + " * t";
            if (q[i] > 0) {
                e.fields.push_back({"cosh transvection " + x,
                                    field({{i + 2, "cosh(" + kt + ")"}, {1, "-" + k + " * sinh(" + kt + ") * " + x}})});
                e.fields.push_back({"sinh transvection " + x,
                                    field({{i + 2, "sinh(" + kt + ")"}, {1, "-" + k + " * cosh(" + kt + ") * " + x}})});
            } else {
                e.fields.push_back({"cos transvection " + x,
                                    field({{i + 2, "cos(" + kt + ")"}, {1, k + " * sin(" + kt + ") * " + x}})});
                e.fields.push_back({"sin transvection " + x,
                                    field({{i + 2, "sin(" + kt + ")"}, {1, "-" + k + " * cos(" + kt + ") * " + x}})});
            }
        }
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j)
                if (q[i] == q[j])
                    e.fields.push_back({"rotation " + coords[i + 2] + "-" + coords[j + 2],
                                        field({{i + 2, coords[j + 2]}, {j + 2, "-" + coords[i + 2]}})});
    } else if (name == "walker_recurrent") {
        reader.finish();
        e.name = "walker_recurrent";
        e.description =
            "Lorentzian Walker metric 2 du dv + (x^2 + v^2) du^2 + dx^2; d/dv is a recurrent, non-parallel null field";
        e.source =
            "manifold walker_recurrent {\n  coordinates: u, v, x;\n"
            "  metric: [[x^2 + v^2, 1, 0],\n          [0, 0],\n          [1]];\n"
            "  base_point: (0, 0.5, 0.5);\n  assume: analytic, simply_connected;\n}\n";
        e.fields = {{"d/du", {"1", "0", "0"}}};
    } else {
        throw ParameterError("unknown builtin '" + name + "' (known: " + detail::join(builtin_names()) + ")");
    }
    return e;
}

inline ManifoldSpec builtin(const std::string& name, const BuiltinParams& params) {
    return parse_manifold(catalog_entry(name, params).source);
}

/// "name" or "name:key=value,key=value"; list values are separated by '/', e.g. q=1/-1.
inline std::pair<std::string, BuiltinParams> parse_builtin_ref(std::string_view ref) {
    const auto colon = ref.find(':');
    std::string name(ref.substr(0, colon));
    BuiltinParams params;
    if (colon == std::string_view::npos) return {name, params};
    std::string_view rest = ref.substr(colon + 1);
    while (!rest.empty()) {
        const auto comma = rest.find(',');
        const std::string_view item = rest.substr(0, comma);
        const auto eq = item.find('=');
        if (eq == std::string_view::npos || eq == 0)
            throw ParameterError("builtin parameter '" + std::string(item) + "' must look like key=value");
        std::string key(item.substr(0, eq));
        std::string_view values = item.substr(eq + 1);
        std::vector<double> list;
        while (true) {
            const auto slash = values.find('/');
            const std::string token(values.substr(0, slash));
            try {
                std::size_t used = 0;
                list.push_back(std::stod(token, &used));
                if (used != token.size()) throw std::invalid_argument(token);
            } catch (const std::exception&) {
                throw ParameterError("builtin parameter '" + key + "': '" + token + "' is not a number");
            }
            if (slash == std::string_view::npos) break;
            values = values.substr(slash + 1);
        }
        params[key] = std::move(list);
        if (comma == std::string_view::npos) break;
        rest = rest.substr(comma + 1);
    }
    return {name, params};
}

inline ManifoldSpec builtin(std::string_view ref) {
    auto [name, params] = parse_builtin_ref(ref);
    return builtin(name, params);
}

inline ManifoldSpec builtin(const char* ref) { return builtin(std::string_view(ref)); }

}  // namespace kvf
