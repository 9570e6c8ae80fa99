#pragma once

// Machine-readable command reports. Numbers are rounded to 12 significant digits before
// serialization so identical runs produce identical bytes.

#include <Eigen/Dense>
#include <json.hpp>

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "kvf/dsl.hpp"

namespace kvf::cli {

using json = nlohmann::ordered_json;

inline constexpr int kSchemaVersion = 1;

inline double round12(double v) {
    if (!std::isfinite(v)) return v;
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    const double r = std::strtod(buf, nullptr);
    return r == 0.0 ? 0.0 : r;
}

inline void round_numbers(json& j) {
    if (j.is_number_float()) {
        j = round12(j.get<double>());
    } else if (j.is_structured()) {
        for (auto& item : j) round_numbers(item);
    }
}

struct InputDigest {
    std::string label;   // builtin reference or file path
    std::string origin;  // "builtin" or "file"
    std::string name;    // manifold name
    std::string digest;  // FNV-1a 64 of the canonical serialization

    friend bool operator==(const InputDigest&, const InputDigest&) = default;
};

inline std::string fnv1a64(const std::string& s) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

inline InputDigest digest_of(const ManifoldSpec& spec, const std::string& label, const std::string& origin) {
    return {label, origin, spec.name, fnv1a64(serialize(spec))};
}

struct Report {
    int schema = kSchemaVersion;
    std::string command;
    std::vector<std::string> args;
    std::vector<InputDigest> inputs;
    json results = json::object();
    std::vector<std::string> warnings;
    std::map<std::string, double> tolerances;
    std::optional<double> timing_ms;
    int exit_code = 0;

    friend bool operator==(const Report&, const Report&) = default;
};

inline json to_json(const Report& r) {
    json j;
    j["schema"] = r.schema;
    j["command"] = r.command;
    j["args"] = r.args;
    json inputs = json::array();
    for (const auto& in : r.inputs)
        inputs.push_back({{"label", in.label}, {"origin", in.origin}, {"name", in.name}, {"digest", in.digest}});
    j["inputs"] = inputs;
    j["results"] = r.results;
    j["warnings"] = r.warnings;
    json tol = json::object();
    for (const auto& [k, v] : r.tolerances) tol[k] = v;
    j["tolerances"] = tol;
    if (r.timing_ms) j["timing_ms"] = *r.timing_ms;
    j["exit_code"] = r.exit_code;
    round_numbers(j);
    return j;
}

inline Report report_from_json(const json& j) {
    Report r;
    r.schema = j.at("schema").get<int>();
    if (r.schema != kSchemaVersion) throw SpecError("unsupported report schema " + std::to_string(r.schema));
    r.command = j.at("command").get<std::string>();
    r.args = j.at("args").get<std::vector<std::string>>();
    for (const auto& in : j.at("inputs"))
        r.inputs.push_back({in.at("label").get<std::string>(), in.at("origin").get<std::string>(),
                            in.at("name").get<std::string>(), in.at("digest").get<std::string>()});
    r.results = j.at("results");
    r.warnings = j.at("warnings").get<std::vector<std::string>>();
    for (const auto& [k, v] : j.at("tolerances").items()) r.tolerances[k] = v.get<double>();
    if (j.contains("timing_ms")) r.timing_ms = j.at("timing_ms").get<double>();
    r.exit_code = j.at("exit_code").get<int>();
    return r;
}

inline std::string serialize_report(const Report& r) { return to_json(r).dump(2) + "\n"; }

inline Report parse_report(const std::string& text) { return report_from_json(json::parse(text)); }

/// Report with every number already rounded, i.e. the value a serialize/parse cycle yields.
inline Report normalized(const Report& r) { return report_from_json(to_json(r)); }

inline json to_json(const Eigen::VectorXd& v) {
    json a = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
    return a;
}

inline json to_json(const Eigen::MatrixXd& m) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index k = 0; k < m.cols(); ++k) row.push_back(m(i, k));
        rows.push_back(row);
    }
    return rows;
}

/// Columns of m as a list of vectors.
inline json columns_to_json(const Eigen::MatrixXd& m) {
    json cols = json::array();
    for (Eigen::Index k = 0; k < m.cols(); ++k) cols.push_back(to_json(Eigen::VectorXd(m.col(k))));
    return cols;
}

namespace detail {

inline std::string scalar_text(const json& v) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_number_float()) {
        char buf[64];
        std::snprintf(buf, sizeof buf, "%.12g", v.get<double>());
        return buf;
    }
    return v.dump();
}

inline bool is_flat_array(const json& v) {
    if (!v.is_array()) return false;
    for (const auto& e : v)
        if (e.is_structured()) return false;
    return true;
}

inline void render(std::ostream& os, const json& v, int indent) {
    const std::string pad(static_cast<std::size_t>(indent), ' ');
    if (v.is_object()) {
        for (const auto& [k, item] : v.items()) {
            if (!item.is_structured() || is_flat_array(item) || item.empty()) {
                os << pad << k << ": ";
                if (item.is_array()) {
                    os << "[";
                    bool first = true;
                    for (const auto& e : item) {
                        os << (first ? "" : ", ") << scalar_text(e);
                        first = false;
                    }
                    os << "]";
                } else if (item.is_object()) {
                    os << "{}";
                } else {
                    os << scalar_text(item);
                }
                os << "\n";
            } else {
                os << pad << k << ":\n";
                render(os, item, indent + 2);
            }
        }
    } else if (v.is_array()) {
        for (const auto& item : v) {
            if (item.is_structured() && !is_flat_array(item)) {
                os << pad << "-\n";
                render(os, item, indent + 2);
            } else {
                os << pad << "- ";
                if (item.is_array()) {
                    os << "[";
                    bool first = true;
                    for (const auto& e : item) {
                        os << (first ? "" : ", ") << scalar_text(e);
                        first = false;
                    }
                    os << "]";
                } else {
                    os << scalar_text(item);
                }
                os << "\n";
            }
        }
    } else {
        os << pad << scalar_text(v) << "\n";
    }
}

}  // namespace detail

/// Indented key: value listing of the rounded report.
inline std::string render_text(const Report& r) {
    const json j = to_json(r);
    std::ostringstream os;
    os << "command: " << r.command << "\n";
    for (const auto& in : r.inputs) os << "input: " << in.label << " (" << in.origin << ", " << in.name << ")\n";
    detail::render(os, j.at("results"), 0);
    if (!r.tolerances.empty()) {
        os << "tolerances:\n";
        detail::render(os, j.at("tolerances"), 2);
    }
    for (const auto& w : r.warnings) os << "warning: " << w << "\n";
    if (r.timing_ms) os << "timing_ms: " << detail::scalar_text(j.at("timing_ms")) << "\n";
    return os.str();
}

}  // namespace kvf::cli
