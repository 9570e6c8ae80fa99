#pragma once

// Command-line front end. run() is the whole program; main() only forwards argv.

#include <CLI11.hpp>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "kvf/kvf.hpp"
#include "report.hpp"

namespace kvf::cli {

enum ExitCode { kOk = 0, kInputError = 2, kInconclusive = 3 };

struct Options {
    std::vector<std::string> specs;
    std::vector<std::string> builtins;
    std::vector<std::string> files;
    std::string point;
    std::size_t order = 10;
    double tol = kDefaultRankTol;
    bool multi_point = false;
    bool json_output = false;
    bool timing = false;
    std::string field;
    std::string path;
    std::size_t steps = 1000;
    std::string q_plus = "1";
    std::string q_minus = "-1";
};

struct LoadedSpec {
    ManifoldSpec spec;
    InputDigest digest;
};

namespace detail {

inline std::vector<std::string> split_top(std::string_view text, char sep) {
    std::vector<std::string> out;
    std::size_t depth = 0, start = 0;
    for (std::size_t i = 0; i <= text.size(); ++i) {
        if (i == text.size() || (text[i] == sep && depth == 0)) {
            out.emplace_back(text.substr(start, i - start));
            start = i + 1;
        } else if (text[i] == '(') {
            ++depth;
        } else if (text[i] == ')' && depth > 0) {
            --depth;
        }
    }
    return out;
}

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

inline std::vector<double> parse_point(const std::string& text, std::size_t n) {
    std::vector<double> p;
    for (const auto& part : split_top(text, ',')) {
        if (trim(part).empty()) throw SpecError("empty point component in '" + text + "'");
        p.push_back(evaluate(*parse_expression(part, {}), std::span<const double>{}));
    }
    if (p.size() != n)
        throw StructuralError("point '" + text + "' has " + std::to_string(p.size()) + " components, chart dimension is " +
                              std::to_string(n));
    return p;
}

inline std::vector<std::vector<double>> parse_points(const std::string& text, std::size_t n) {
    std::vector<std::vector<double>> out;
    for (const auto& part : split_top(text, ';'))
        if (!trim(part).empty()) out.push_back(parse_point(part, n));
    if (out.empty()) throw SpecError("no points given in '" + text + "'");
    return out;
}

inline std::vector<double> parse_list(const std::string& text) {
    std::vector<double> out;
    for (const auto& part : split_top(text, ','))
        out.push_back(evaluate(*parse_expression(part, {}), std::span<const double>{}));
    return out;
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw SpecError("cannot open file '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline LoadedSpec load_file(const std::string& path) {
    const std::string text = read_file(path);
    try {
        ManifoldSpec spec = parse_manifold(text);
        return {spec, digest_of(spec, path, "file")};
    } catch (const ParseError& e) {
        throw ParseError(e.line(), e.column(), e.message(), path);
    }
}

inline LoadedSpec load_builtin(const std::string& ref) {
    ManifoldSpec spec = builtin(std::string_view(ref));
    return {spec, digest_of(spec, ref, "builtin")};
}

inline bool is_builtin_ref(const std::string& s) {
    const std::string name = s.substr(0, s.find(':'));
    for (const auto& b : builtin_names())
        if (b == name) return true;
    return false;
}

inline LoadedSpec load_any(const std::string& ref) {
    std::error_code ec;
    if (std::filesystem::is_regular_file(ref, ec)) return load_file(ref);
    if (is_builtin_ref(ref)) return load_builtin(ref);
    return load_file(ref);
}

inline std::vector<LoadedSpec> load_specs(const Options& o) {
    std::vector<LoadedSpec> out;
    for (const auto& s : o.specs) out.push_back(load_any(s));
    for (const auto& f : o.files) out.push_back(load_file(f));
    for (const auto& b : o.builtins) out.push_back(load_builtin(b));
    return out;
}

inline json germ_json(const KillingGerm& g) { return {{"xi", to_json(g.xi)}, {"A", to_json(g.A)}}; }

inline json kernel_json(const KernelReport& r) {
    json gaps = json::array();
    for (const auto& g : r.gaps)
        gaps.push_back({{"smallest_retained", g.smallest_retained},
                        {"largest_discarded", g.largest_discarded},
                        {"threshold", g.threshold}});
    json kernel = json::array();
    for (const auto& g : r.kernel) kernel.push_back(germ_json(g));
    return {{"point", r.point},
            {"bundle_dim", r.bundle_dim},
            {"dims", r.dims},
            {"stabilized_dim", r.stabilized_dim},
            {"stabilization_order", r.stabilization_order},
            {"stabilized", r.stabilized},
            {"upper_bound_only", r.upper_bound_only},
            {"m_max", r.m_max},
            {"singular_gaps", gaps},
            {"kernel_basis", kernel}};
}

inline json holonomy_json(const HolonomyReport& h) {
    json gens = json::array();
    for (const auto& g : h.generators) gens.push_back(to_json(g));
    return {{"point", h.point},
            {"dimension", h.dimension},
            {"dims", h.dims},
            {"stabilization_order", h.stabilization_order},
            {"stabilized", h.stabilized},
            {"generators", gens},
            {"parallel_candidates", columns_to_json(h.parallel_candidates)},
            {"nullity", h.nullity},
            {"so_residual", h.so_residual},
            {"bracket_closed", h.bracket_closed},
            {"bracket_residual", h.bracket_residual}};
}

inline json check_json(const FieldCheckReport& r) {
    json pts = json::array();
    for (const auto& p : r.points) {
        json e = {{"point", p.point}, {"residual", p.residual}, {"scale", p.scale}, {"ok", p.ok}};
        if (!p.error.empty()) e["error"] = p.error;
        pts.push_back(e);
    }
    return {{"passed", r.passed}, {"max_residual", r.max_residual}, {"tol", r.tol}, {"points", pts}};
}

inline void append(std::vector<std::string>& to, const std::vector<std::string>& from, const std::string& prefix = "") {
    for (const auto& w : from) to.push_back(prefix + w);
}

inline std::string index_label(const std::vector<std::string>& coords, std::initializer_list<std::size_t> idx) {
    std::string s;
    for (std::size_t i : idx) s += (s.empty() ? "" : ",") + coords[i];
    return s;
}

inline std::vector<LoadedSpec> require_specs(const Options& o, std::size_t count, const std::string& cmd) {
    auto specs = load_specs(o);
    if (specs.size() != count)
        throw SpecError(cmd + " expects " + std::to_string(count) + " manifold spec" + (count == 1 ? "" : "s") +
                        ", got " + std::to_string(specs.size()));
    return specs;
}

inline std::vector<double> point_or_base(const Options& o, const ManifoldSpec& spec) {
    return o.point.empty() ? spec.base_point : parse_point(o.point, spec.dimension());
}

// ---- commands ----

inline void cmd_parse(const Options& o, Report& r) {
    const auto specs = require_specs(o, 1, "parse");
    const ManifoldSpec& s = specs[0].spec;
    r.inputs.push_back(specs[0].digest);
    const Eigen::MatrixXd g = metric_values(s, s.base_point);
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(g);
    std::size_t neg = 0, pos = 0;
    for (Eigen::Index i = 0; i < eig.eigenvalues().size(); ++i) (eig.eigenvalues()(i) < 0 ? neg : pos)++;
    r.results = {{"name", s.name},
                 {"dimension", s.dimension()},
                 {"coordinates", s.coords},
                 {"parameters", s.params},
                 {"base_point", s.base_point},
                 {"metric_at_base_point", to_json(g)},
                 {"signature", {{"negative", neg}, {"positive", pos}}},
                 {"assumptions", {{"analytic", s.assumptions.analytic}, {"simply_connected", s.assumptions.simply_connected}}},
                 {"canonical_source", serialize(s)}};
}

inline void cmd_curvature(const Options& o, Report& r) {
    const auto specs = require_specs(o, 1, "curvature");
    const ManifoldSpec& s = specs[0].spec;
    r.inputs.push_back(specs[0].digest);
    const auto p = point_or_base(o, s);
    const CurvatureData curv = compute_curvature(s, p, o.order);
    const std::size_t n = s.dimension();
    const double eps = 1e-14;
    json gamma = json::array();
    for (std::size_t a = 0; a < n; ++a)
        for (std::size_t b = 0; b < n; ++b)
            for (std::size_t c = b; c < n; ++c) {
                const double v = curv.christoffel()({a, b, c});
                if (std::abs(v) > eps)
                    gamma.push_back({{"index", "Gamma^" + s.coords[a] + "_" + index_label(s.coords, {b, c})}, {"value", v}});
            }
    const ValueTensor low = lowered_riemann(curv);
    json riem = json::array();
    for (std::size_t l = 0; l < n; ++l)
        for (std::size_t k = l + 1; k < n; ++k)
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = i + 1; j < n; ++j) {
                    if (l * n + k > i * n + j) continue;
                    const double v = low({l, k, i, j});
                    if (std::abs(v) > eps)
                        riem.push_back({{"index", "R_" + index_label(s.coords, {l, k, i, j})}, {"value", v}});
                }
    double scalar = 0.0;
    for (std::size_t k = 0; k < n; ++k)
        for (std::size_t j = 0; j < n; ++j)
            for (std::size_t i = 0; i < n; ++i) scalar += curv.metric_inverse(k, j) * curv.riemann()({i, k, i, j});
    json norms = json::array();
    for (std::size_t m = 0; m <= o.order; ++m) norms.push_back(curv.cov_riemann(m).max_abs());
    const auto id = curvature_identities(curv);
    const double tol = 1e-9;
    const double scale = std::max(1.0, id.norm);
    const double cscale = std::max(1.0, id.compatibility_scale);
    r.tolerances["identity_tol"] = tol;
    r.results = {{"point", p},
                 {"christoffel", gamma},
                 {"riemann_lowered", riem},
                 {"scalar_curvature", scalar},
                 {"cov_riemann_max_abs", norms},
                 {"identities",
                  {{"riemann_norm", id.norm},
                   {"antisymmetry", id.antisymmetry},
                   {"skew_lower", id.skew_lower},
                   {"pair_symmetry", id.pair_symmetry},
                   {"first_bianchi", id.first_bianchi},
                   {"metric_compatibility", id.metric_compatibility},
                   {"curvature_passed", id.max_curvature_residual() <= tol * scale},
                   {"compatibility_passed", id.metric_compatibility <= tol * cscale}}}};
}

inline int cmd_killing_dim(const Options& o, Report& r) {
    const auto specs = require_specs(o, 1, "killing-dim");
    const ManifoldSpec& s = specs[0].spec;
    r.inputs.push_back(specs[0].digest);
    r.tolerances["rank_tol"] = o.tol;
    const KillingOptions opts{o.order, o.tol};
    if (o.multi_point) {
        const auto mp = killing_dimension_multi(s, opts);
        json per = json::array();
        for (const auto& k : mp.reports) {
            per.push_back(kernel_json(k));
            append(r.warnings, k.warnings);
        }
        json fails = json::array();
        for (const auto& [p, msg] : mp.failures) fails.push_back({{"point", p}, {"error", msg}});
        r.results = {{"min_dim", mp.min_dim}, {"stabilized", mp.stabilized}, {"points", per}, {"failed_points", fails}};
        return mp.stabilized ? kOk : kInconclusive;
    }
    const auto rep = killing_dimension(s, point_or_base(o, s), opts);
    r.results = kernel_json(rep);
    append(r.warnings, rep.warnings);
    return rep.stabilized ? kOk : kInconclusive;
}

inline int cmd_holonomy(const Options& o, Report& r) {
    const auto specs = require_specs(o, 1, "holonomy");
    const ManifoldSpec& s = specs[0].spec;
    r.inputs.push_back(specs[0].digest);
    r.tolerances["rank_tol"] = o.tol;
    const auto h = infinitesimal_holonomy(s, point_or_base(o, s), o.order, o.tol);
    r.results = holonomy_json(h);
    append(r.warnings, h.warnings);
    return h.stabilized ? kOk : kInconclusive;
}

inline json hypothesis_json(const HypothesisReport& h) {
    return {{"verdict", verdict_name(h.verdict)},
            {"undowngraded_verdict", verdict_name(h.raw_verdict)},
            {"parallel_basis", columns_to_json(h.basis)},
            {"holonomy_dimension", h.holonomy.dimension},
            {"holonomy_stabilized", h.holonomy.stabilized},
            {"nullity", h.holonomy.nullity}};
}

inline int cmd_hypothesis(const Options& o, Report& r) {
    const auto specs = require_specs(o, 1, "hypothesis");
    const ManifoldSpec& s = specs[0].spec;
    r.inputs.push_back(specs[0].digest);
    r.tolerances["rank_tol"] = o.tol;
    const auto h = hypothesis_check(s, point_or_base(o, s), o.order, o.tol);
    r.results = hypothesis_json(h);
    append(r.warnings, h.warnings);
    return h.verdict == Verdict::inconclusive ? kInconclusive : kOk;
}

inline void cmd_check_field(const Options& o, Report& r) {
    const auto specs = require_specs(o, 1, "check-field");
    const ManifoldSpec& s = specs[0].spec;
    r.inputs.push_back(specs[0].digest);
    if (o.field.empty()) throw SpecError("check-field requires --field");
    const auto field = parse_field(o.field, s);
    std::vector<std::vector<double>> pts;
    if (o.point.empty()) {
        pts.push_back(s.base_point);
        for (auto& q : perturbed_points(s.base_point, 4)) pts.push_back(q);
    } else {
        pts = parse_points(o.point, s.dimension());
    }
    const double tol = 1e-9;
    r.tolerances["killing_tol"] = tol;
    r.tolerances["nabla_A_tol"] = 1e-8;
    const auto vk = verify_killing(s, field, pts, tol);
    json res = {{"field", split_top(o.field, ',')}, {"verify_killing", check_json(vk)}};
    const FieldGerm fg = A_of_field(s, field, pts[0]);
    res["germ"] = germ_json(fg.germ);
    res["germ_in_so"] = fg.in_so;
    res["germ_so_residual"] = fg.so_residual;
    if (vk.passed) {
        res["nabla_A"] = check_json(check_nabA(s, field, pts, 1e-8));
        const std::size_t m_top = std::min<std::size_t>(o.order, 2);
        const CurvatureData curv = compute_curvature(s, pts[0], m_top + 1);
        json integ = json::array();
        for (std::size_t m = 0; m <= m_top; ++m) integ.push_back(apply_integrability(curv, m, fg.germ).max_abs());
        res["integrability_residuals"] = integ;
    } else {
        res["nabla_A"] = "skipped: field is not Killing";
    }
    r.results = res;
}

inline void cmd_transport(const Options& o, Report& r) {
    const auto specs = require_specs(o, 1, "transport");
    const ManifoldSpec& s = specs[0].spec;
    r.inputs.push_back(specs[0].digest);
    if (o.field.empty()) throw SpecError("transport requires --field (the germ is taken from the field at the path start)");
    if (o.path.empty()) throw SpecError("transport requires --path");
    if (o.steps < 1) throw PreconditionError("--steps must be >= 1");
    const auto field = parse_field(o.field, s);
    const auto path = parse_points(o.path, s.dimension());
    const KillingGerm start = A_of_field(s, field, path.front()).germ;
    const KillingGerm end = killing_transport(s, start, path, o.steps);
    const FieldGerm expected = A_of_field(s, field, path.back());
    const Eigen::MatrixXd g_end = metric_values(s, path.back());
    r.tolerances["steps_per_segment"] = static_cast<double>(o.steps);
    json res = {{"path", path},
                {"steps_per_segment", o.steps},
                {"start_germ", germ_json(start)},
                {"end_germ", germ_json(end)},
                {"field_germ_at_end", germ_json(expected.germ)},
                {"difference_from_field", germ_distance(end, expected.germ)},
                {"end_so_residual", so_residual(end.A, g_end)}};
    if (path.front() == path.back()) res["loop_defect"] = germ_distance(start, end);
    r.results = res;
}

inline void cmd_product(const Options& o, Report& r) {
    const auto specs = require_specs(o, 2, "product");
    r.inputs.push_back(specs[0].digest);
    r.inputs.push_back(specs[1].digest);
    const ProductSpec prod = product_metric(specs[0].spec, specs[1].spec);
    const std::size_t m = std::min<std::size_t>(o.order, 3);
    const BlockLawReport bl = block_law_check(prod, m);
    r.tolerances["block_law_tol"] = bl.tol;
    r.results = {{"name", prod.combined.name},
                 {"dimension", prod.combined.dimension()},
                 {"coordinates", prod.combined.coords},
                 {"renaming_a", prod.renaming_a},
                 {"renaming_b", prod.renaming_b},
                 {"block_a", {prod.block_a.begin, prod.block_a.end}},
                 {"block_b", {prod.block_b.begin, prod.block_b.end}},
                 {"base_point", prod.combined.base_point},
                 {"block_law",
                  {{"max_order", m},
                   {"mixed_residual", bl.mixed_residual},
                   {"factor_residual", bl.factor_residual},
                   {"scale", bl.scale},
                   {"passed", bl.passed}}},
                 {"canonical_source", serialize(prod.combined)}};
}

inline json decomposition_json(const DecompositionReport& d) {
    return {{"factor_a", d.name_a},
            {"factor_b", d.name_b},
            {"dim_a", d.dim_a},
            {"dim_b", d.dim_b},
            {"dim_product", d.dim_product},
            {"excess", d.excess},
            {"dims_a", d.kernel_a.dims},
            {"dims_b", d.kernel_b.dims},
            {"dims_product", d.kernel_product.dims},
            {"verdict_a", verdict_name(d.hypothesis_a.verdict)},
            {"verdict_b", verdict_name(d.hypothesis_b.verdict)},
            {"hypotheses_hold", d.hypotheses_hold},
            {"split_predicted", d.split_predicted},
            {"prediction_holds", d.prediction_holds},
            {"inconclusive", d.inconclusive}};
}

inline int cmd_check_decomposition(const Options& o, Report& r) {
    const auto specs = require_specs(o, 2, "check-decomposition");
    r.inputs.push_back(specs[0].digest);
    r.inputs.push_back(specs[1].digest);
    r.tolerances["rank_tol"] = o.tol;
    const auto d = decomposition_check(specs[0].spec, specs[1].spec, {o.order, o.tol});
    r.results = decomposition_json(d);
    append(r.warnings, d.warnings);
    return d.inconclusive ? kInconclusive : kOk;
}

inline int cmd_demo(const Options& o, Report& r) {
    const auto qp = parse_list(o.q_plus);
    const auto qm = parse_list(o.q_minus);
    const Counterexample ce = cw_counterexample(qp, qm);
    const ManifoldSpec& c = ce.product.combined;
    r.inputs.push_back(digest_of(ce.product.a, "cahen_wallach:q=" + o.q_plus, "builtin"));
    r.inputs.push_back(digest_of(ce.product.b, "cahen_wallach:q=" + o.q_minus, "builtin"));
    const double ktol = 1e-10;
    r.tolerances["killing_tol"] = ktol;
    r.tolerances["rank_tol"] = o.tol;
    r.tolerances["germ_tol"] = 1e-10;
    r.tolerances["mixed_block_tol"] = 1e-8;

    std::vector<std::vector<double>> pts{c.base_point};
    for (auto& q : perturbed_points(c.base_point, 4, 0.5)) pts.push_back(q);
    const auto vk = verify_killing(c, ce.field, pts, ktol);
    const FieldGerm fg = A_of_field(c, ce.field, c.base_point);
    const Eigen::MatrixXd g = metric_values(c, c.base_point);
    Eigen::VectorXd vp = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(c.dimension()));
    Eigen::VectorXd vm = vp;
    vp(static_cast<Eigen::Index>(ce.v_plus)) = 1.0;
    vm(static_cast<Eigen::Index>(ce.v_minus)) = 1.0;
    const Eigen::MatrixXd w = wedge(vp, vm, g);
    const double nabla_xi_vs_wedge = (-fg.germ.A - w).cwiseAbs().maxCoeff();
    const double a_vs_wedge = (fg.germ.A - w).cwiseAbs().maxCoeff();

    const auto d = decomposition_check(ce.product.a, ce.product.b, {o.order, o.tol});
    json mixed;
    try {
        const auto mb = mixed_block_check(ce.product, fg.germ, 3, 1e-8, {o.order, o.tol});
        mixed = {{"passed", mb.passed},
                 {"minus_residual", mb.minus_residual},
                 {"plus_residual", mb.plus_residual},
                 {"kernel_distance", mb.kernel_distance}};
    } catch (const PreconditionError& e) {
        mixed = {{"refused", e.what()}};
    }
    const auto proj_a = verify_killing(c, project_field(ce.product, ce.field, true), pts, ktol);
    const auto proj_b = verify_killing(c, project_field(ce.product, ce.field, false), pts, ktol);

    r.results = {{"product", c.name},
                 {"coordinates", c.coords},
                 {"field", ce.field_text},
                 {"verify_killing", check_json(vk)},
                 {"germ", germ_json(fg.germ)},
                 {"germ_xi_zero", fg.germ.xi.cwiseAbs().maxCoeff() <= 1e-10},
                 {"wedge_v_plus_v_minus", to_json(w)},
                 {"nabla_xi_minus_wedge", nabla_xi_vs_wedge},
                 {"A_minus_wedge", a_vs_wedge},
                 {"nabla_xi_equals_wedge", nabla_xi_vs_wedge <= 1e-10},
                 {"mixed_block_check", mixed},
                 {"projection_a_killing", proj_a.passed},
                 {"projection_b_killing", proj_b.passed},
                 {"decomposition", decomposition_json(d)},
                 {"reproduces_counterexample", vk.passed && d.excess >= 1 && !proj_a.passed && !proj_b.passed}};
    append(r.warnings, d.warnings);
    return d.inconclusive ? kInconclusive : kOk;
}

inline void cmd_catalog(Report& r) {
    json list = json::array();
    for (const auto& name : builtin_names()) {
        const CatalogEntry e = catalog_entry(name, {});
        const ManifoldSpec s = parse_manifold(e.source);
        json fields = json::array();
        for (const auto& f : e.fields) fields.push_back({{"label", f.label}, {"components", f.components}});
        list.push_back({{"builtin", name},
                        {"name", s.name},
                        {"description", e.description},
                        {"dimension", s.dimension()},
                        {"coordinates", s.coords},
                        {"known_killing_fields", fields}});
    }
    r.results = {{"builtins", list}};
}

inline void add_common(CLI::App* sub, Options& o, bool specs = true) {
    if (specs) {
        sub->add_option("spec", o.specs, "manifold file or builtin reference (name:key=value,...)");
        sub->add_option("--builtin", o.builtins, "builtin reference, e.g. cahen_wallach:q=1/-1");
        sub->add_option("--file", o.files, "manifold file in the DSL format");
        sub->add_option("--point", o.point, "evaluation point, comma separated");
    }
    sub->add_option("--tol", o.tol, "rank threshold scale")->check(CLI::PositiveNumber);
    sub->add_flag("--json", o.json_output, "structured output");
    sub->add_flag("--timing", o.timing, "include wall-clock timing in the report");
}

}  // namespace detail

/// Runs one invocation; `args` excludes the program name.
inline int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    Options o;
    CLI::App app{"Killing fields, holonomy and product decompositions of coordinate-patch metrics", "kvf"};
    app.require_subcommand(1);
    app.set_help_all_flag("--help-all");

    auto* parse = app.add_subcommand("parse", "parse and echo a manifold spec");
    detail::add_common(parse, o);
    auto* curvature = app.add_subcommand("curvature", "Christoffel symbols, Riemann tensor and nabla^m R at a point");
    detail::add_common(curvature, o);
    curvature->add_option("--order", o.order, "highest covariant derivative of R (default 2)");
    auto* kdim = app.add_subcommand("killing-dim", "dimension of the Killing algebra via the Killing connection");
    detail::add_common(kdim, o);
    kdim->add_option("--order", o.order, "prolongation cap m_max");
    kdim->add_flag("--multi-point", o.multi_point, "evaluate at 5 perturbed points, report the minimum");
    auto* hol = app.add_subcommand("holonomy", "infinitesimal holonomy algebra");
    detail::add_common(hol, o);
    hol->add_option("--order", o.order, "highest derivative of R in the span");
    auto* hyp = app.add_subcommand("hypothesis", "parallel vector field detection");
    detail::add_common(hyp, o);
    hyp->add_option("--order", o.order, "highest derivative of R in the span");
    auto* check = app.add_subcommand("check-field", "verify a Killing field and its germ");
    detail::add_common(check, o);
    check->add_option("--field", o.field, "components, comma separated")->required();
    check->add_option("--order", o.order, "highest integrability order reported (at most 2)");
    auto* transport = app.add_subcommand("transport", "Killing transport of a field germ along a polyline");
    detail::add_common(transport, o);
    transport->add_option("--field", o.field, "field whose germ at the path start is transported")->required();
    transport->add_option("--path", o.path, "polyline 'p0;p1;...', points comma separated")->required();
    transport->add_option("--steps", o.steps, "RK4 steps per segment");
    auto* product = app.add_subcommand("product", "build a product metric and check the block law");
    detail::add_common(product, o);
    product->add_option("--order", o.order, "highest derivative checked (at most 3)");
    auto* decomp = app.add_subcommand("check-decomposition", "compare dim kill(M+ x M-) with the factor sum");
    detail::add_common(decomp, o);
    decomp->add_option("--order", o.order, "prolongation cap m_max");
    auto* demo = app.add_subcommand("demo-counterexample", "Cahen-Wallach x Cahen-Wallach counterexample");
    detail::add_common(demo, o, false);
    demo->add_option("--q-plus", o.q_plus, "diagonal of Q+, comma separated");
    demo->add_option("--q-minus", o.q_minus, "diagonal of Q-, comma separated");
    demo->add_option("--order", o.order, "prolongation cap m_max");
    auto* catalog = app.add_subcommand("catalog", "list builtin geometries");
    detail::add_common(catalog, o, false);

    std::vector<std::string> argv_store{"kvf"};
    argv_store.insert(argv_store.end(), args.begin(), args.end());
    std::vector<char*> argv;
    for (auto& s : argv_store) argv.push_back(s.data());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        app.exit(e, out, err);
        return kInputError;
    }
    if (curvature->parsed() && curvature->count("--order") == 0) o.order = 2;

    Report r;
    r.command = app.get_subcommands().front()->get_name();
    r.args = args;
    const auto t0 = std::chrono::steady_clock::now();
    int code = kOk;
    try {
        if (parse->parsed()) detail::cmd_parse(o, r);
        else if (curvature->parsed()) detail::cmd_curvature(o, r);
        else if (kdim->parsed()) code = detail::cmd_killing_dim(o, r);
        else if (hol->parsed()) code = detail::cmd_holonomy(o, r);
        else if (hyp->parsed()) code = detail::cmd_hypothesis(o, r);
        else if (check->parsed()) detail::cmd_check_field(o, r);
        else if (transport->parsed()) detail::cmd_transport(o, r);
        else if (product->parsed()) detail::cmd_product(o, r);
        else if (decomp->parsed()) code = detail::cmd_check_decomposition(o, r);
        else if (demo->parsed()) code = detail::cmd_demo(o, r);
        else if (catalog->parsed()) detail::cmd_catalog(r);
    } catch (const Error& e) {
        r.results = {{"error", {{"message", e.what()}}}};
        if (const auto* pe = dynamic_cast<const ParseError*>(&e)) {
            r.results["error"]["line"] = pe->line();
            r.results["error"]["column"] = pe->column();
        }
        code = kInputError;
        err << "error: " << e.what() << "\n";
    }
    if (o.timing)
        r.timing_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    r.exit_code = code;
    if (o.json_output) out << serialize_report(r);
    else if (code != kInputError) out << render_text(r);
    return code;
}

}  // namespace kvf::cli
