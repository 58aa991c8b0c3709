#include "phskew/run.hpp"

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>
#include <yaml-cpp/yaml.h>

#include "phskew/accessibility.hpp"
#include "phskew/covering.hpp"
#include "phskew/deformation.hpp"
#include "phskew/description.hpp"
#include "phskew/error.hpp"
#include "phskew/holonomy.hpp"
#include "phskew/ifs.hpp"
#include "phskew/report.hpp"
#include "phskew/spectral.hpp"

namespace phskew {

namespace {

enum class Kind { Int, Real, Text, Path, RealList, IntList };

struct KeySpec {
    std::string name;
    Kind kind;
    double lo, hi;                      // inclusive range for numbers and list entries
    std::set<std::string> commands;     // empty: every command
    std::optional<std::string> fallback;
    std::string help;
    std::set<std::string> choices = {};
};

const std::set<std::string> kAll;

const std::vector<KeySpec>& key_table()
{
    static const std::vector<KeySpec> t = {
        {"output", Kind::Path, 0, 0, kAll, "phskew-out", "output directory"},
        {"seed", Kind::Int, 0, 9.0e15, kAll, std::nullopt, "random seed (overrides the IFS file seed)"},
        {"workers", Kind::Int, 1, 256, kAll, "1", "worker threads; never changes results"},

        {"matrix", Kind::Path, 0, 0, {"certify-matrix", "classify-skew"}, std::nullopt, "base matrix file"},
        {"fiber_matrix", Kind::Path, 0, 0, {"certify-matrix", "classify-skew"}, std::nullopt, "fiber matrix file"},
        {"k", Kind::Int, 1, 64, {"certify-matrix"}, std::nullopt, "power of the fiber matrix in the example test"},
        {"theta", Kind::Real, 1e-3, 1, {"certify-matrix", "accessibility"}, "1", "Hoelder exponent in (0, 1]"},
        {"l", Kind::Int, 1, 8, {"classify-skew"}, "1", "smoothness order for center bunching"},

        {"skew", Kind::Path, 0, 0, {"holonomy", "accessibility", "deform-verify"}, std::nullopt, "skew product file"},
        {"kind", Kind::Text, 0, 0, {"holonomy"}, "unstable", "unstable, stable or loop", {"unstable", "stable", "loop"}},
        {"y", Kind::RealList, -1e6, 1e6, {"holonomy", "accessibility", "deform-verify"}, std::nullopt, "base point"},
        {"y2", Kind::RealList, -1e6, 1e6, {"holonomy"}, std::nullopt, "second base point (leaf kinds)"},
        {"z", Kind::RealList, -1e6, 1e6, {"holonomy"}, std::nullopt, "fiber point"},
        {"x0", Kind::RealList, -1e6, 1e6, {"accessibility", "deform-verify", "lyapunov", "density"}, std::nullopt,
         "starting fiber point"},
        {"sigma", Kind::Real, 1e-6, 0.2, {"holonomy", "accessibility", "deform-verify"}, "0.1", "loop family size"},
        {"t", Kind::Real, -1, 2, {"holonomy", "deform-verify"}, "0.5", "loop parameter"},
        {"tol", Kind::Real, 1e-15, 1e-2, {"holonomy", "accessibility", "deform-verify"}, "1e-10", "holonomy tolerance"},
        {"depth_cap", Kind::Int, 10, 5000, {"holonomy"}, "400", "largest holonomy depth"},
        {"eps", Kind::Real, 1e-6, 1, {"accessibility", "density"}, std::nullopt, "lightness scale / cell size"},
        {"grid_step", Kind::Real, 1e-4, 0.5, {"accessibility"}, "0.05", "slice sampling step"},
        {"dictionary", Kind::Int, 1, 64, {"deform-verify"}, std::nullopt, "fields per bump (default: fiber dim)"},
        {"fd_step", Kind::Real, 1e-8, 1e-1, {"deform-verify"}, "1e-4", "finite-difference step"},
        {"residual_tol", Kind::Real, 0, 1, {"deform-verify"}, "1e-4", "largest accepted residual"},
        {"n_max", Kind::Int, 1, 1e8, {"deform-verify"}, "1000000", "return-time cap"},

        {"ifs", Kind::Path, 0, 0, {"certify", "lyapunov", "density"}, std::nullopt, "IFS file"},
        {"b", Kind::Int, 0, 64, {"certify"}, std::nullopt, "codimension of the tested subspaces"},
        {"n0", Kind::Int, 1, 64, {"certify"}, std::nullopt, "word length"},
        {"grid_points", Kind::Int, 1, 64, {"certify"}, "4", "manifold grid per axis"},
        {"grid_subspaces", Kind::Int, 1, 4096, {"certify"}, "24", "Grassmannian samples"},
        {"samples", Kind::Int, 1, 1e8, {"certify"}, "10000", "Monte Carlo words"},
        {"moment_sigma", Kind::Real, 1e-6, 100, {"certify"}, "0.1", "moment exponent"},
        {"moment_n", Kind::IntList, 1, 256, {"certify"}, std::nullopt, "word lengths for the moment check"},
        {"n", Kind::Int, 1, 1e10, {"lyapunov", "density"}, std::nullopt, "orbit length"},
        {"stream", Kind::Int, 0, 9.0e15, {"lyapunov", "density"}, "0", "random stream"},
    };
    return t;
}

const std::map<std::string, std::vector<std::string>>& required_keys()
{
    static const std::map<std::string, std::vector<std::string>> r = {
        {"certify-matrix", {"matrix"}},
        {"classify-skew", {"matrix", "fiber_matrix"}},
        {"holonomy", {"skew", "y", "z"}},
        {"accessibility", {"skew", "y", "x0"}},
        {"deform-verify", {"skew", "y", "x0"}},
        {"certify", {"ifs", "b", "n0"}},
        {"lyapunov", {"ifs", "x0", "n"}},
        {"density", {"ifs", "x0", "n", "eps"}},
    };
    return r;
}

const KeySpec* find_key(const std::string& name)
{
    for (const KeySpec& k : key_table())
        if (k.name == name) return &k;
    return nullptr;
}

bool applies(const KeySpec& k, const std::string& command) { return k.commands.empty() || k.commands.count(command); }

[[noreturn]] void bad(const RawSetting& s, const std::string& key, const std::string& msg)
{
    throw Error(Errc::ParseError, s.where + ": " + key + ": " + msg);
}

std::vector<std::string> split_list(const std::string& text)
{
    std::vector<std::string> out;
    std::string cur;
    for (char ch : text) {
        if (ch == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (ch != ' ' && ch != '[' && ch != ']') {
            cur += ch;
        }
    }
    if (!cur.empty() || !out.empty()) out.push_back(cur);
    return out;
}

double parse_real(const std::string& s, bool& ok)
{
    ok = false;
    if (s.empty()) return 0;
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    ok = end && *end == '\0' && std::isfinite(v);
    return v;
}

long long parse_int(const std::string& s, bool& ok)
{
    bool real_ok = false;
    const double v = parse_real(s, real_ok);
    ok = real_ok && v == std::floor(v) && std::fabs(v) < 9.1e15;
    return static_cast<long long>(v);
}

SettingValue type_setting(const KeySpec& k, const RawSetting& raw)
{
    auto range = [&](double v) {
        if (v < k.lo || v > k.hi) bad(raw, k.name, "value " + fmt(v) + " outside [" + fmt(k.lo) + ", " + fmt(k.hi) + "]");
    };
    bool ok = false;
    switch (k.kind) {
    case Kind::Int: {
        const long long v = parse_int(raw.text, ok);
        if (!ok) bad(raw, k.name, "expected an integer, got '" + raw.text + "'");
        range(static_cast<double>(v));
        return v;
    }
    case Kind::Real: {
        const double v = parse_real(raw.text, ok);
        if (!ok) bad(raw, k.name, "expected a number, got '" + raw.text + "'");
        range(v);
        return v;
    }
    case Kind::Text:
        if (!k.choices.empty() && !k.choices.count(raw.text)) bad(raw, k.name, "unsupported value '" + raw.text + "'");
        return raw.text;
    case Kind::Path:
        if (raw.text.empty()) bad(raw, k.name, "empty path");
        return raw.text;
    case Kind::RealList: {
        std::vector<double> out;
        for (const std::string& item : split_list(raw.text)) {
            const double v = parse_real(item, ok);
            if (!ok) bad(raw, k.name, "expected a list of numbers, got '" + raw.text + "'");
            range(v);
            out.push_back(v);
        }
        if (out.empty()) bad(raw, k.name, "empty list");
        return out;
    }
    case Kind::IntList: {
        std::vector<long long> out;
        for (const std::string& item : split_list(raw.text)) {
            const long long v = parse_int(item, ok);
            if (!ok) bad(raw, k.name, "expected a list of integers, got '" + raw.text + "'");
            range(static_cast<double>(v));
            out.push_back(v);
        }
        if (out.empty()) bad(raw, k.name, "empty list");
        return out;
    }
    }
    return raw.text;
}

// Same setting when the texts agree or every numeric entry agrees as a double.
bool same_setting(const std::string& a, const std::string& b)
{
    if (a == b) return true;
    const auto xs = split_list(a), ys = split_list(b);
    if (xs.size() != ys.size() || xs.empty()) return false;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        bool okx = false, oky = false;
        const double x = parse_real(xs[i], okx), y = parse_real(ys[i], oky);
        if (!okx || !oky || x != y) return false;
    }
    return true;
}

std::string where(const YAML::Node& n)
{
    const YAML::Mark m = n.Mark();
    return "line " + std::to_string(m.line + 1) + ", column " + std::to_string(m.column + 1);
}

std::string scalar_text(const YAML::Node& n, const std::string& key)
{
    if (n.IsScalar()) return n.Scalar();
    if (n.IsSequence()) {
        std::string s;
        for (std::size_t i = 0; i < n.size(); ++i) {
            if (!n[i].IsScalar()) throw Error(Errc::ParseError, where(n[i]) + ": " + key + ": nested lists are not allowed");
            if (i) s += ',';
            s += n[i].Scalar();
        }
        return s;
    }
    throw Error(Errc::ParseError, where(n) + ": " + key + ": expected a scalar or a list");
}

// ------------------------------------------------------------------ pipelines

Vec to_vec(const std::vector<double>& v) { return Eigen::Map<const Vec>(v.data(), static_cast<Eigen::Index>(v.size())); }

void need_size(const Vec& v, int n, const std::string& key)
{
    if (v.size() != n)
        throw Error(Errc::DimMismatch, key + " has " + std::to_string(v.size()) + " entries, expected " + std::to_string(n));
}

struct Inputs {
    std::string hashed;  // concatenated input texts
    void add(const std::string& name, const std::string& text) { hashed += name + "\n" + text + "\n"; }
};

void summary_section(Report& rep, const std::string& title, const SpectralSummary& s)
{
    rep.section(title, {"quantity", "value"});
    rep.kv("log_moduli", fmt(s.log_moduli));
    rep.kv("b", s.b ? std::to_string(*s.b) : std::string("none"));
    rep.kv("chi_bar", s.chi_bar);
    rep.kv("chi_hat", s.chi_hat);
}

void rates_section(Report& rep, const HyperbolicRates& r)
{
    rep.section("rates", {"quantity", "value"});
    rep.kv("chi_bar_s", r.chi_bar_s);
    rep.kv("chi_hat_s", r.chi_hat_s);
    rep.kv("chi_bar_u", r.chi_bar_u);
    rep.kv("chi_hat_u", r.chi_hat_u);
    rep.kv("chi_bar_c", r.chi_bar_c);
    rep.kv("chi_hat_c", r.chi_hat_c);
    rep.kv("xi", xi(r));
}

RunResult run_certify_matrix(const RunConfig& cfg, Report& rep, Inputs& in)
{
    const std::string mpath = cfg.path("matrix");
    const std::string mtext = read_text_file(mpath);
    in.add("matrix", mtext);
    const ToralAutomorphism a = parse_matrix(mtext);
    const SpectralSummary sa = spectral_summary(a);
    summary_section(rep, "base", sa);
    rep.section("anosov", {"quantity", "value"});
    rep.kv("anosov", check_anosov(a) ? "true" : "false");
    if (!cfg.has("fiber_matrix")) return {};

    const std::string ftext = read_text_file(cfg.path("fiber_matrix"));
    in.add("fiber_matrix", ftext);
    const ToralAutomorphism b = parse_matrix(ftext);
    const SpectralSummary sb = spectral_summary(b);
    summary_section(rep, "fiber", sb);
    const HyperbolicRates r = rates_from_summaries(sa, sb);
    rates_section(rep, r);
    rep.inequalities("pinching", pinching_report(r, cfg.real("theta")));
    if (cfg.has("k")) {
        const ExampleReport ex = example_conditions_report(a, b, static_cast<int>(cfg.integer("k")));
        rep.inequalities("example_conditions", ex.conditions);
        rep.section("example_verdict", {"quantity", "value"});
        rep.kv("reduced_margin", ex.reduced.margin);
        rep.kv("holds", ex.holds ? "true" : "false");
    }
    return {};
}

RunResult run_classify(const RunConfig& cfg, Report& rep, Inputs& in)
{
    const std::string mtext = read_text_file(cfg.path("matrix"));
    const std::string ftext = read_text_file(cfg.path("fiber_matrix"));
    in.add("matrix", mtext);
    in.add("fiber_matrix", ftext);
    const SpectralSummary sa = spectral_summary(parse_matrix(mtext));
    const SpectralSummary sb = spectral_summary(parse_matrix(ftext));
    summary_section(rep, "base", sa);
    summary_section(rep, "fiber", sb);
    const ClassReport c = classify_skew_product(sa, sb, {}, static_cast<int>(cfg.integer("l")));
    rep.inequalities("class_U1", c.u1);
    rep.inequalities("class_U2", c.u2);
    rep.section("classification", {"quantity", "value"});
    rep.kv("in_U1", c.in_U1 ? "true" : "false");
    rep.kv("in_U2", c.in_U2 ? "true" : "false");
    rep.kv("fiber_in_DS2", c.fiber_in_DS2 ? "true" : "false");
    for (const std::string& n : c.notes) rep.kv("note", n);
    return {};
}

SkewDescription load_skew(const RunConfig& cfg, Inputs& in)
{
    const std::string p = cfg.path("skew");
    SkewDescription d = read_skew_description(p);
    in.add("skew", d.normalized);
    return d;
}

void jacobian_section(Report& rep, const Mat& j)
{
    rep.section("jacobian", {"row", "entries"});
    for (Eigen::Index i = 0; i < j.rows(); ++i) rep.row({std::to_string(i), fmt(Vec(j.row(i).transpose()))});
}

RunResult run_holonomy(const RunConfig& cfg, Report& rep, Inputs& in)
{
    const SkewDescription d = load_skew(cfg, in);
    const SkewProduct& f = d.product;
    const Vec y = to_vec(cfg.vec("y"));
    const Vec z = to_vec(cfg.vec("z"));
    need_size(y, f.base_dim(), "y");
    need_size(z, f.manifold().ambient(), "z");
    const double tol = cfg.real("tol");
    const int cap = static_cast<int>(cfg.integer("depth_cap"));
    const std::string kind = cfg.text("kind");

    HolonomyResult r;
    Mat jac;
    rep.section("holonomy", {"quantity", "value"});
    rep.kv("kind", kind);
    if (kind == "loop") {
        const LoopFamily fam = build_loop_family(f, y, cfg.real("sigma"));
        const SuLoop loop = fam.loop(cfg.real("t"));
        r = loop_holonomy(f, loop, z, tol, cap);
        jac = holonomy_jacobian(f, HolonomyKind::Loop, y, y, &loop, z, tol);
        rep.kv("y1", fmt(loop.y1()));
        rep.kv("y2", fmt(loop.y2()));
        rep.kv("y3", fmt(loop.y3()));
    } else {
        if (!cfg.has("y2")) throw Error(Errc::InvalidArgument, "kind " + kind + " needs y2");
        const Vec y2 = to_vec(cfg.vec("y2"));
        need_size(y2, f.base_dim(), "y2");
        const bool u = kind == "unstable";
        r = u ? unstable_holonomy(f, y, y2, z, tol, cap) : stable_holonomy(f, y, y2, z, tol, cap);
        jac = holonomy_jacobian(f, u ? HolonomyKind::Unstable : HolonomyKind::Stable, y, y2, nullptr, z, tol);
    }
    rep.kv("image", fmt(r.z));
    rep.kv("depth", static_cast<double>(r.depth));
    rep.kv("error_estimate", r.error);
    jacobian_section(rep, jac);
    return {};
}

RunResult run_accessibility(const RunConfig& cfg, Report& rep, Inputs& in)
{
    const SkewDescription d = load_skew(cfg, in);
    const SkewProduct& f = d.product;
    const Vec y = to_vec(cfg.vec("y"));
    const Vec x0 = to_vec(cfg.vec("x0"));
    need_size(y, f.base_dim(), "y");
    need_size(x0, f.manifold().ambient(), "x0");
    const int c = f.fiber_dim();
    const double eps = cfg.has("eps") ? cfg.real("eps") : default_light_eps(c);
    const double theta = cfg.real("theta");

    const LoopFamily fam = build_loop_family(f, y, cfg.real("sigma"));
    const Covering cov = build_covering(c, eps, theta);
    rep.section("covering", {"quantity", "value"});
    rep.kv("c", static_cast<double>(c));
    rep.kv("theta", theta);
    rep.kv("eps", cov.eps);
    rep.kv("K0", static_cast<double>(cov.K0));
    rep.kv("K1", static_cast<double>(cov.K1));
    rep.kv("pitch", cov.pitch);
    rep.kv("boxes", static_cast<double>(cov.boxes.size()));
    rep.kv("C_min", cov.C_min);
    rep.section("loop_family", {"quantity", "value"});
    rep.kv("C0", fam.C0);
    rep.kv("C1", fam.C1);
    rep.kv("min_separation", fam.min_separation);

    const ParamMap phi = skew_param_map(f, fam, x0, cfg.real("tol"));
    const StableValueResult r =
        stable_value_check(phi, cov, cfg.real("grid_step"), cfg.real("tol"), static_cast<int>(cfg.integer("workers")));
    rep.section("stable_value", {"quantity", "value"});
    rep.kv("verdict", verdict_name(r.verdict));
    rep.kv("delta", r.delta);
    rep.kv("holder_constant", r.holder_constant);
    rep.kv("evaluations", static_cast<double>(r.evaluations));
    rep.section("axes", {"axis", "collision_radius", "values", "verdict"});
    for (const AxisMargin& a : r.axes)
        rep.row({std::to_string(a.axis), fmt(a.collision_radius), fmt(a.values), verdict_name(a.verdict)});
    if (r.verdict != Verdict::Pass) {
        rep.section("witness", {"quantity", "value"});
        rep.kv("axis", static_cast<double>(r.witness_axis));
        rep.kv("values", fmt(r.witness_values));
        rep.kv("point", fmt(r.witness_point));
        return RunResult{2, r.verdict == Verdict::Fail ? "slices collide: no stable value certified"
                                                        : "collision radius within resolution",
                         "", ""};
    }
    return {};
}

RunResult run_deform(const RunConfig& cfg, Report& rep, Inputs& in)
{
    const SkewDescription d = load_skew(cfg, in);
    const SkewProduct& f = d.product;
    const Vec y = to_vec(cfg.vec("y"));
    const Vec x0 = to_vec(cfg.vec("x0"));
    need_size(y, f.base_dim(), "y");
    need_size(x0, f.manifold().ambient(), "x0");
    const double sigma = cfg.real("sigma");
    const LoopFamily fam = build_loop_family(f, y, sigma);
    const SuLoop loop = fam.loop(cfg.real("t"));

    InfinitesimalDeformation v;
    if (d.deformation) {
        v = *d.deformation;
    } else {
        const int dict = cfg.has("dictionary") ? static_cast<int>(cfg.integer("dictionary")) : f.fiber_dim();
        v = build_deformation(f.manifold(), {loop}, sigma, dict, fam.C0);
    }
    const RecurrenceResult rq = recurrence_time(f.base(), loop.y1(), v.support_radius, cfg.integer("n_max"));
    const LinearApproxReport r = verify_linear_approx(f, v, loop, x0, cfg.real("fd_step"), cfg.real("tol"));

    rep.section("deformation", {"quantity", "value"});
    rep.kv("params", static_cast<double>(v.params));
    rep.kv("support_radius", v.support_radius);
    rep.kv("adapted_C", v.adapted_C);
    rep.kv("return_time", static_cast<double>(rq.n));
    rep.kv("return_time_capped", rq.exceeded ? "true" : "false");
    rep.section("derivative", {"param", "finite_difference", "predicted"});
    for (int j = 0; j < v.params; ++j)
        rep.row({std::to_string(j), fmt(Vec(r.finite_difference.col(j))), fmt(Vec(r.predicted.col(j)))});
    rep.section("residual", {"name", "lhs", "rhs", "margin", "verdict"});
    const double lim = cfg.real("residual_tol");
    const bool ok = r.residual < lim;
    rep.row({"residual", fmt(r.residual), fmt(lim), fmt(lim - r.residual), ok ? "holds" : "fails"});
    std::vector<double> depths(r.depths.begin(), r.depths.end());
    rep.section("depths", {"legs"});
    rep.row({fmt(depths)});
    if (!ok) return RunResult{2, "residual above residual_tol", "", ""};
    return {};
}

IFSSpec load_ifs(const RunConfig& cfg, Inputs& in)
{
    IfsDescription d = read_ifs_description(cfg.path("ifs"));
    in.add("ifs", d.normalized);
    if (cfg.has("seed")) d.spec.seed = static_cast<std::uint64_t>(cfg.integer("seed"));
    return d.spec;
}

RunResult run_certify(const RunConfig& cfg, Report& rep, Inputs& in)
{
    const IFSSpec spec = load_ifs(cfg, in);
    const int workers = static_cast<int>(cfg.integer("workers"));
    UniformityGrid grid;
    grid.points = static_cast<int>(cfg.integer("grid_points"));
    grid.subspaces = static_cast<int>(cfg.integer("grid_subspaces"));
    const UniformityCertificate c = certify_uniformity(spec, static_cast<int>(cfg.integer("b")),
                                                       static_cast<int>(cfg.integer("n0")), grid,
                                                       cfg.integer("samples"), workers);
    rep.section("uniformity", {"quantity", "value"});
    rep.kv("valid", c.valid ? "true" : "false");
    rep.kv("reason", c.reason.empty() ? "-" : c.reason);
    rep.kv("n0", static_cast<double>(c.n0));
    rep.kv("b", static_cast<double>(c.b));
    rep.kv("kappa1", c.kappa1);
    rep.kv("kappa2", c.kappa2);
    rep.kv("worst_C", c.worst_C);
    rep.kv("worst_C_stderr", c.worst_C_stderr);
    rep.kv("worst_D", c.worst_D);
    rep.kv("worst_D_stderr", c.worst_D_stderr);
    rep.kv("samples", static_cast<double>(c.samples));
    rep.kv("exhaustive", c.exhaustive ? "true" : "false");
    rep.kv("confidence", c.confidence);
    rep.section("witness", {"quantity", "value"});
    rep.kv("C_point", fmt(c.witness_x));
    for (Eigen::Index j = 0; j < c.witness_E.frame.cols(); ++j)
        rep.kv("C_subspace_" + std::to_string(j), fmt(Vec(c.witness_E.frame.col(j))));
    rep.kv("D_point", fmt(c.worst_D_x));
    for (Eigen::Index j = 0; j < c.worst_D_E.frame.cols(); ++j)
        rep.kv("D_subspace_" + std::to_string(j), fmt(Vec(c.worst_D_E.frame.col(j))));

    if (c.valid && cfg.has("moment_n")) {
        std::vector<int> ns;
        for (long long n : cfg.int_list("moment_n")) ns.push_back(static_cast<int>(n));
        const MomentReport m = moment_decay_check(spec, c, cfg.real("moment_sigma"), ns, cfg.integer("samples"), workers);
        rep.section("moment_decay", {"n", "log_moment"});
        for (std::size_t i = 0; i < m.n_list.size(); ++i) rep.row({std::to_string(m.n_list[i]), fmt(m.log_moment[i])});
        rep.section("moment_fit", {"name", "lhs", "rhs", "margin", "verdict"});
        rep.row({"slope", fmt(m.slope), fmt(m.bound), fmt(m.bound - m.slope), m.pass ? "holds" : "fails"});
        if (!m.pass) return RunResult{2, "moment decay slower than certified rate", "", ""};
    }
    if (!c.valid) return RunResult{2, c.reason, "", ""};
    return {};
}

RunResult run_lyapunov(const RunConfig& cfg, Report& rep, Inputs& in)
{
    const IFSSpec spec = load_ifs(cfg, in);
    const Vec x0 = to_vec(cfg.vec("x0"));
    need_size(x0, spec.manifold.ambient(), "x0");
    const std::vector<double> l =
        lyapunov_spectrum(spec, x0, cfg.integer("n"), static_cast<std::uint64_t>(cfg.integer("stream")));
    rep.section("lyapunov", {"index", "exponent"});
    double sum = 0;
    for (std::size_t i = 0; i < l.size(); ++i) {
        rep.row({std::to_string(i + 1), fmt(l[i])});
        sum += l[i];
    }
    rep.section("sum", {"quantity", "value"});
    rep.kv("sum", sum);
    return {};
}

RunResult run_density(const RunConfig& cfg, Report& rep, Inputs& in)
{
    const IFSSpec spec = load_ifs(cfg, in);
    const Vec x0 = to_vec(cfg.vec("x0"));
    need_size(x0, spec.manifold.ambient(), "x0");
    const DensityReport d = orbit_density(spec, x0, cfg.integer("n"), cfg.real("eps"),
                                          static_cast<std::uint64_t>(cfg.integer("stream")));
    rep.section("density", {"quantity", "value"});
    rep.kv("cells", static_cast<double>(d.cells));
    rep.kv("visited", static_cast<double>(d.visited));
    rep.kv("coverage", d.coverage);
    rep.kv("empty_ball_radius", d.empty_ball_radius);
    rep.section("first_hits", {"log2_bin", "count"});
    for (std::size_t j = 0; j < d.first_hit_histogram.size(); ++j)
        rep.row({std::to_string(j), std::to_string(d.first_hit_histogram[j])});
    return {};
}

std::string utc_timestamp()
{
    const std::time_t now = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::string resolve_output(const std::string& configured)
{
    if (const char* env = std::getenv("PHSKEW_OUTPUT_DIR"); env && *env) return env;
    return configured;
}

void write_file(const std::filesystem::path& p, const std::string& text)
{
    std::ofstream out(p, std::ios::binary);
    if (!out) throw Error(Errc::Io, "cannot write " + p.string());
    out << text;
    if (!out) throw Error(Errc::Io, "write failed for " + p.string());
}

} // namespace

std::vector<std::string> subcommands()
{
    return {"certify-matrix", "classify-skew", "holonomy", "accessibility",
            "deform-verify",  "certify",       "lyapunov", "density"};
}

std::vector<std::string> keys_for(const std::string& command)
{
    std::vector<std::string> out;
    for (const KeySpec& k : key_table())
        if (applies(k, command)) out.push_back(k.name);
    return out;
}

std::string key_help(const std::string& key)
{
    const KeySpec* k = find_key(key);
    return k ? k->help : std::string();
}

long long RunConfig::integer(const std::string& key) const
{
    auto it = values.find(key);
    if (it == values.end()) throw Error(Errc::InvalidArgument, "missing setting " + key);
    return std::get<long long>(it->second);
}

double RunConfig::real(const std::string& key) const
{
    auto it = values.find(key);
    if (it == values.end()) throw Error(Errc::InvalidArgument, "missing setting " + key);
    return std::get<double>(it->second);
}

const std::string& RunConfig::text(const std::string& key) const
{
    auto it = values.find(key);
    if (it == values.end()) throw Error(Errc::InvalidArgument, "missing setting " + key);
    return std::get<std::string>(it->second);
}

std::string RunConfig::path(const std::string& key) const
{
    const std::filesystem::path p(text(key));
    return p.is_absolute() ? p.string() : (std::filesystem::path(base_dir) / p).string();
}

const std::vector<double>& RunConfig::vec(const std::string& key) const
{
    auto it = values.find(key);
    if (it == values.end()) throw Error(Errc::InvalidArgument, "missing setting " + key);
    return std::get<std::vector<double>>(it->second);
}

const std::vector<long long>& RunConfig::int_list(const std::string& key) const
{
    auto it = values.find(key);
    if (it == values.end()) throw Error(Errc::InvalidArgument, "missing setting " + key);
    return std::get<std::vector<long long>>(it->second);
}

RawSettings parse_config_text(const std::string& text, std::string& command)
{
    YAML::Node root;
    try {
        root = YAML::Load(text);
    } catch (const YAML::ParserException& e) {
        throw Error(Errc::ParseError, "line " + std::to_string(e.mark.line + 1) + ", column " +
                                          std::to_string(e.mark.column + 1) + ": " + e.msg);
    }
    if (!root || root.IsNull()) throw Error(Errc::ParseError, "line 1, column 1: empty config");
    if (!root.IsMap()) throw Error(Errc::ParseError, where(root) + ": config must be a mapping");
    const YAML::Node schema = root["schema"];
    if (!schema) throw Error(Errc::ParseError, where(root) + ": missing key 'schema'");
    if (!schema.IsScalar() || schema.Scalar() != kRunSchema)
        throw Error(Errc::ParseError, where(schema) + ": unsupported schema, expected '" + std::string(kRunSchema) + "'");

    RawSettings out;
    for (const auto& kv : root) {
        const std::string key = kv.first.as<std::string>();
        if (key == "schema") continue;
        if (key == "command") {
            if (!kv.second.IsScalar()) throw Error(Errc::ParseError, where(kv.second) + ": command must be a string");
            command = kv.second.Scalar();
            continue;
        }
        if (!find_key(key)) throw Error(Errc::ParseError, where(kv.first) + ": unknown key '" + key + "'");
        out[key] = RawSetting{scalar_text(kv.second, key), where(kv.second)};
    }
    return out;
}

RawSettings merge_settings(const RawSettings& config, const RawSettings& flags, bool allow_override)
{
    RawSettings out = config;
    for (const auto& [key, flag] : flags) {
        auto it = config.find(key);
        if (it == config.end()) {
            out[key] = flag;
            continue;
        }
        if (same_setting(it->second.text, flag.text)) continue;
        if (!allow_override)
            throw Error(Errc::InvalidArgument, flag.where + " conflicts with config " + it->second.where +
                                                   " (pass --allow-override to keep the config value)");
    }
    return out;
}

RunConfig make_run_config(const std::string& command, const RawSettings& raw, const std::string& base_dir)
{
    const auto cmds = subcommands();
    if (std::find(cmds.begin(), cmds.end(), command) == cmds.end())
        throw Error(Errc::ParseError, "unknown command '" + command + "'");
    RunConfig cfg;
    cfg.command = command;
    cfg.base_dir = base_dir;
    for (const auto& [key, setting] : raw) {
        const KeySpec* k = find_key(key);
        if (!k) throw Error(Errc::ParseError, setting.where + ": unknown key '" + key + "'");
        if (!applies(*k, command)) bad(setting, key, "not a setting of " + command);
        cfg.values[key] = type_setting(*k, setting);
    }
    for (const KeySpec& k : key_table()) {
        if (!applies(k, command) || cfg.has(k.name) || !k.fallback) continue;
        cfg.values[k.name] = type_setting(k, RawSetting{*k.fallback, "default"});
    }
    for (const std::string& key : required_keys().at(command))
        if (!cfg.has(key)) throw Error(Errc::ParseError, command + " requires '" + key + "'");
    return cfg;
}

RunResult run(const RunConfig& cfg)
{
    const auto t0 = std::chrono::steady_clock::now();
    Report rep;
    Inputs in;
    in.add("config", cfg.config_text);

    rep.section("run", {"quantity", "value"});
    rep.kv("command", cfg.command);
    rep.kv("version", kVersion);
    for (const auto& [key, value] : cfg.values) {
        if (key == "workers" || key == "output") continue;
        std::string text;
        if (auto p = std::get_if<long long>(&value)) text = std::to_string(*p);
        else if (auto d = std::get_if<double>(&value)) text = fmt(*d);
        else if (auto s = std::get_if<std::string>(&value)) text = *s;
        else if (auto v = std::get_if<std::vector<double>>(&value)) text = fmt(*v);
        else {
            for (long long n : std::get<std::vector<long long>>(value)) text += (text.empty() ? "" : ",") + std::to_string(n);
        }
        rep.kv(key, text);
    }

    RunResult r;
    const std::string& c = cfg.command;
    if (c == "certify-matrix") r = run_certify_matrix(cfg, rep, in);
    else if (c == "classify-skew") r = run_classify(cfg, rep, in);
    else if (c == "holonomy") r = run_holonomy(cfg, rep, in);
    else if (c == "accessibility") r = run_accessibility(cfg, rep, in);
    else if (c == "deform-verify") r = run_deform(cfg, rep, in);
    else if (c == "certify") r = run_certify(cfg, rep, in);
    else if (c == "lyapunov") r = run_lyapunov(cfg, rep, in);
    else r = run_density(cfg, rep, in);

    rep.section("status", {"quantity", "value"});
    rep.kv("exit", std::to_string(r.status));
    rep.kv("reason", r.reason.empty() ? "-" : r.reason);
    r.report = rep.render();

    r.output_dir = resolve_output(cfg.text("output"));
    std::filesystem::create_directories(r.output_dir);
    write_file(std::filesystem::path(r.output_dir) / "report.tsv", r.report);

    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    nlohmann::ordered_json m;
    m["command"] = cfg.command;
    m["version"] = kVersion;
    m["inputs_hash"] = fnv1a_hex(in.hashed);
    m["seed"] = cfg.has("seed") ? cfg.integer("seed") : 0;
    m["workers"] = cfg.integer("workers");
    m["eigen"] = std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                 std::to_string(EIGEN_MINOR_VERSION);
    m["wall_seconds"] = wall;
    m["timestamp"] = utc_timestamp();
    m["exit_status"] = r.status;
    m["reason"] = r.reason;
    m["report"] = "report.tsv";
    write_file(std::filesystem::path(r.output_dir) / "manifest.json", m.dump(2) + "\n");
    return r;
}

void write_error_manifest(const std::string& output_dir, const std::string& command, const std::string& message)
{
    const std::string dir = resolve_output(output_dir);
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) return;
    nlohmann::ordered_json m;
    m["command"] = command;
    m["version"] = kVersion;
    m["timestamp"] = utc_timestamp();
    m["exit_status"] = 1;
    m["reason"] = message;
    std::ofstream out(std::filesystem::path(dir) / "manifest.json");
    out << m.dump(2) << "\n";
}

} // namespace phskew
