#include "phskew/description.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <yaml-cpp/yaml.h>

#include "phskew/error.hpp"

namespace phskew {

namespace {

[[noreturn]] void fail(const YAML::Node& node, const std::string& msg)
{
    const YAML::Mark m = node.Mark();
    if (m.is_null()) throw Error(Errc::ParseError, msg);
    throw Error(Errc::ParseError, "line " + std::to_string(m.line + 1) + ", column " + std::to_string(m.column + 1) +
                                      ": " + msg);
}

void require_map(const YAML::Node& n, const std::string& what)
{
    if (!n.IsMap()) fail(n, what + " must be a mapping");
}

void check_keys(const YAML::Node& n, const std::set<std::string>& allowed, const std::string& what)
{
    require_map(n, what);
    for (const auto& kv : n) {
        const std::string key = kv.first.as<std::string>();
        if (!allowed.count(key)) fail(kv.first, "unknown key '" + key + "' in " + what);
    }
}

const YAML::Node need(const YAML::Node& n, const std::string& key)
{
    const YAML::Node v = n[key];
    if (!v) fail(n, "missing key '" + key + "'");
    return v;
}

double as_double(const YAML::Node& n)
{
    if (!n.IsScalar()) fail(n, "expected a number");
    try {
        const double v = n.as<double>();
        if (!std::isfinite(v)) fail(n, "number must be finite");
        return v;
    } catch (const YAML::Exception&) {
        fail(n, "expected a number, got '" + n.Scalar() + "'");
    }
}

long long as_int(const YAML::Node& n)
{
    if (!n.IsScalar()) fail(n, "expected an integer");
    try {
        return n.as<long long>();
    } catch (const YAML::Exception&) {
        fail(n, "expected an integer, got '" + n.Scalar() + "'");
    }
}

bool as_bool(const YAML::Node& n)
{
    if (!n.IsScalar()) fail(n, "expected a boolean");
    try {
        return n.as<bool>();
    } catch (const YAML::Exception&) {
        fail(n, "expected a boolean, got '" + n.Scalar() + "'");
    }
}

std::string as_string(const YAML::Node& n)
{
    if (!n.IsScalar()) fail(n, "expected a string");
    return n.Scalar();
}

Vec as_vec(const YAML::Node& n, int size = -1)
{
    if (!n.IsSequence()) fail(n, "expected a list of numbers");
    Vec v(n.size());
    for (std::size_t i = 0; i < n.size(); ++i) v(i) = as_double(n[i]);
    if (size >= 0 && v.size() != size) fail(n, "expected " + std::to_string(size) + " entries");
    return v;
}

Mat as_matrix(const YAML::Node& n)
{
    if (!n.IsSequence() || n.size() == 0) fail(n, "expected a list of rows");
    const std::size_t d = n.size();
    Mat m(d, d);
    for (std::size_t i = 0; i < d; ++i) {
        if (!n[i].IsSequence() || n[i].size() != d) fail(n[i], "matrix must be square");
        for (std::size_t j = 0; j < d; ++j) m(i, j) = as_double(n[i][j]);
    }
    return m;
}

Bump parse_bump(const YAML::Node& n)
{
    check_keys(n, {"center", "radius"}, "bump");
    Bump b;
    b.center = as_vec(need(n, "center"));
    b.radius = as_double(need(n, "radius"));
    if (!(b.radius > 0) || b.radius >= 0.5) fail(n, "bump radius must lie in (0, 0.5)");
    return b;
}

Field parse_field(const YAML::Node& n)
{
    check_keys(n, {"kind", "j", "k", "m"}, "field");
    Field f;
    const std::string kind = as_string(need(n, "kind"));
    if (kind == "constant")
        f.kind = FieldKind::Constant;
    else if (kind == "sin_shear")
        f.kind = FieldKind::SinShear;
    else if (kind == "cell")
        f.kind = FieldKind::Cell;
    else if (kind == "rotation")
        f.kind = FieldKind::Rotation;
    else
        fail(n["kind"], "unknown field kind '" + kind + "'");
    f.j = n["j"] ? static_cast<int>(as_int(n["j"])) : 0;
    f.k = n["k"] ? static_cast<int>(as_int(n["k"])) : 1;
    f.m = n["m"] ? static_cast<int>(as_int(n["m"])) : 1;
    return f;
}

Mat rodrigues(const Vec& axis, double angle)
{
    const Vec a = axis / axis.norm();
    Mat k(3, 3);
    k << 0, -a(2), a(1), a(2), 0, -a(0), -a(1), a(0), 0;
    return Mat::Identity(3, 3) + std::sin(angle) * k + (1 - std::cos(angle)) * k * k;
}

Primitive parse_primitive(const YAML::Node& n, const FiberManifold& man)
{
    check_keys(n, {"linear", "translation", "shear", "flow", "twist", "rotation", "inverted"}, "primitive");
    int kinds = 0;
    for (const char* k : {"linear", "translation", "shear", "flow", "twist", "rotation"})
        if (n[k]) ++kinds;
    if (kinds != 1) fail(n, "primitive needs exactly one kind");
    Primitive p;
    try {
        if (n["linear"]) {
            p = make_linear(as_matrix(n["linear"]));
        } else if (n["translation"]) {
            const YAML::Node t = n["translation"];
            check_keys(t, {"offset", "terms"}, "translation");
            std::vector<TrigTerm> terms;
            if (t["terms"]) {
                if (!t["terms"].IsSequence()) fail(t["terms"], "terms must be a list");
                for (const auto& term : t["terms"]) {
                    check_keys(term, {"amplitude", "freq", "phase"}, "translation term");
                    TrigTerm tt;
                    tt.amplitude = as_vec(need(term, "amplitude"), man.dim);
                    tt.freq = as_vec(need(term, "freq"));
                    tt.phase = term["phase"] ? as_double(term["phase"]) : 0.0;
                    terms.push_back(tt);
                }
            }
            p = make_translation(as_vec(need(t, "offset"), man.dim), terms);
        } else if (n["shear"]) {
            const YAML::Node s = n["shear"];
            check_keys(s, {"from", "to", "amplitude", "profile", "bump"}, "shear");
            const std::string profile = s["profile"] ? as_string(s["profile"]) : "sine";
            if (profile != "sine" && profile != "linear") fail(s["profile"], "profile must be sine or linear");
            std::optional<Bump> bump;
            if (s["bump"]) bump = parse_bump(s["bump"]);
            p = make_shear(static_cast<int>(as_int(need(s, "from"))), static_cast<int>(as_int(need(s, "to"))),
                           as_double(need(s, "amplitude")), profile == "sine", bump);
        } else if (n["flow"]) {
            const YAML::Node f = n["flow"];
            check_keys(f, {"steps", "terms"}, "flow");
            std::vector<FieldTerm> terms;
            const YAML::Node ts = need(f, "terms");
            if (!ts.IsSequence()) fail(ts, "terms must be a list");
            for (const auto& term : ts) {
                check_keys(term, {"field", "coeff", "bump", "at_image"}, "flow term");
                FieldTerm ft;
                ft.field = parse_field(need(term, "field"));
                ft.coeff = term["coeff"] ? as_double(term["coeff"]) : 1.0;
                if (term["bump"]) ft.bump = parse_bump(term["bump"]);
                ft.bump_at_image = term["at_image"] ? as_bool(term["at_image"]) : false;
                terms.push_back(ft);
            }
            p = make_flow(terms, f["steps"] ? static_cast<int>(as_int(f["steps"])) : 64);
        } else if (n["twist"]) {
            const YAML::Node t = n["twist"];
            check_keys(t, {"axis", "amplitude"}, "twist");
            p = make_twist(as_vec(need(t, "axis"), 3), as_double(need(t, "amplitude")));
        } else {
            const YAML::Node r = n["rotation"];
            check_keys(r, {"angle", "axis"}, "rotation");
            const double angle = as_double(need(r, "angle"));
            if (r["axis"])
                p = make_linear(rodrigues(as_vec(r["axis"], 3), angle));
            else
                p = make_rotation2(angle);
        }
    } catch (const Error& e) {
        if (e.code() == Errc::ParseError) throw;
        fail(n, e.detail());
    }
    if (n["inverted"]) p.inverted = as_bool(n["inverted"]);
    return p;
}

FiberManifold parse_manifold(const YAML::Node& kind, const YAML::Node& dim)
{
    FiberManifold m;
    const std::string k = as_string(kind);
    if (k == "torus")
        m.kind = ManifoldKind::Torus;
    else if (k == "sphere")
        m.kind = ManifoldKind::Sphere;
    else if (k == "euclidean")
        m.kind = ManifoldKind::Euclidean;
    else
        fail(kind, "manifold must be torus, sphere or euclidean");
    m.dim = static_cast<int>(as_int(dim));
    if (m.dim < 1 || m.dim > 16) fail(dim, "dimension must lie in [1, 16]");
    return m;
}

FiberMap parse_map(const YAML::Node& list, const FiberManifold& man)
{
    if (!list.IsSequence()) fail(list, "expected a list of primitives");
    std::vector<Primitive> prims;
    for (const auto& p : list) prims.push_back(parse_primitive(p, man));
    try {
        return FiberMap(man, std::move(prims));
    } catch (const Error& e) {
        fail(list, e.detail());
    }
}

YAML::Node parse_document(const std::string& text)
{
    YAML::Node root;
    try {
        root = YAML::Load(text);
    } catch (const YAML::ParserException& e) {
        throw Error(Errc::ParseError, "line " + std::to_string(e.mark.line + 1) + ", column " +
                                          std::to_string(e.mark.column + 1) + ": " + e.msg);
    }
    if (!root || root.IsNull()) throw Error(Errc::ParseError, "line 1, column 1: empty document");
    require_map(root, "document");
    return root;
}

void check_schema(const YAML::Node& root, const std::string& expected)
{
    const std::string s = as_string(need(root, "schema"));
    if (s != expected) fail(root["schema"], "unsupported schema '" + s + "', expected '" + expected + "'");
}

// ---------------------------------------------------------------- canonical echo

void emit_vec(YAML::Emitter& out, const Vec& v)
{
    out << YAML::Flow << YAML::BeginSeq;
    for (Eigen::Index i = 0; i < v.size(); ++i) out << v(i);
    out << YAML::EndSeq;
}

void emit_bump(YAML::Emitter& out, const Bump& b)
{
    out << YAML::BeginMap << YAML::Key << "center" << YAML::Value;
    emit_vec(out, b.center);
    out << YAML::Key << "radius" << YAML::Value << b.radius << YAML::EndMap;
}

const char* field_name(FieldKind k)
{
    switch (k) {
    case FieldKind::Constant: return "constant";
    case FieldKind::SinShear: return "sin_shear";
    case FieldKind::Cell: return "cell";
    case FieldKind::Rotation: return "rotation";
    }
    return "?";
}

void emit_field(YAML::Emitter& out, const Field& f)
{
    out << YAML::Flow << YAML::BeginMap << YAML::Key << "kind" << YAML::Value << field_name(f.kind) << YAML::Key
        << "j" << YAML::Value << f.j << YAML::Key << "k" << YAML::Value << f.k << YAML::Key << "m" << YAML::Value
        << f.m << YAML::EndMap;
}

struct PrimEmitter {
    YAML::Emitter& out;

    void operator()(const LinearPrim& p) const
    {
        out << YAML::Key << "linear" << YAML::Value << YAML::BeginSeq;
        for (Eigen::Index i = 0; i < p.m.rows(); ++i) emit_vec(out, p.m.row(i).transpose());
        out << YAML::EndSeq;
    }
    void operator()(const TranslationPrim& p) const
    {
        out << YAML::Key << "translation" << YAML::Value << YAML::BeginMap << YAML::Key << "offset" << YAML::Value;
        emit_vec(out, p.offset);
        out << YAML::Key << "terms" << YAML::Value << YAML::BeginSeq;
        for (const TrigTerm& t : p.terms) {
            out << YAML::BeginMap << YAML::Key << "amplitude" << YAML::Value;
            emit_vec(out, t.amplitude);
            out << YAML::Key << "freq" << YAML::Value;
            emit_vec(out, t.freq);
            out << YAML::Key << "phase" << YAML::Value << t.phase << YAML::EndMap;
        }
        out << YAML::EndSeq << YAML::EndMap;
    }
    void operator()(const ShearPrim& p) const
    {
        out << YAML::Key << "shear" << YAML::Value << YAML::BeginMap << YAML::Key << "from" << YAML::Value << p.from
            << YAML::Key << "to" << YAML::Value << p.to << YAML::Key << "amplitude" << YAML::Value << p.amplitude
            << YAML::Key << "profile" << YAML::Value << (p.sine ? "sine" : "linear");
        if (p.bump) {
            out << YAML::Key << "bump" << YAML::Value;
            emit_bump(out, *p.bump);
        }
        out << YAML::EndMap;
    }
    void operator()(const FlowPrim& p) const
    {
        out << YAML::Key << "flow" << YAML::Value << YAML::BeginMap << YAML::Key << "steps" << YAML::Value << p.steps
            << YAML::Key << "terms" << YAML::Value << YAML::BeginSeq;
        for (const FieldTerm& t : p.terms) {
            out << YAML::BeginMap << YAML::Key << "field" << YAML::Value;
            emit_field(out, t.field);
            out << YAML::Key << "coeff" << YAML::Value << t.coeff;
            if (t.bump) {
                out << YAML::Key << "bump" << YAML::Value;
                emit_bump(out, *t.bump);
            }
            out << YAML::Key << "at_image" << YAML::Value << t.bump_at_image << YAML::EndMap;
        }
        out << YAML::EndSeq << YAML::EndMap;
    }
    void operator()(const TwistPrim& p) const
    {
        out << YAML::Key << "twist" << YAML::Value << YAML::BeginMap << YAML::Key << "axis" << YAML::Value;
        emit_vec(out, p.axis);
        out << YAML::Key << "amplitude" << YAML::Value << p.amplitude << YAML::EndMap;
    }
};

void emit_map(YAML::Emitter& out, const FiberMap& m)
{
    out << YAML::BeginSeq;
    for (const Primitive& p : m.primitives()) {
        out << YAML::BeginMap;
        std::visit(PrimEmitter{out}, p.body);
        if (p.inverted) out << YAML::Key << "inverted" << YAML::Value << true;
        out << YAML::EndMap;
    }
    out << YAML::EndSeq;
}

void emit_manifold(YAML::Emitter& out, const FiberManifold& m)
{
    out << YAML::Key << "manifold" << YAML::Value << manifold_name(m);
    out << YAML::Key << "dim" << YAML::Value << m.dim;
}

std::string dir_of(const std::string& path)
{
    const std::filesystem::path p(path);
    return p.has_parent_path() ? p.parent_path().string() : std::string(".");
}

} // namespace

std::string read_text_file(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(Errc::Io, "cannot read " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

SkewDescription parse_skew_description(const std::string& text, const std::string& base_dir)
{
    const YAML::Node root = parse_document(text);
    check_keys(root, {"schema", "base", "fiber", "volume_preserving", "deformation"}, "skew product");
    check_schema(root, kSkewSchema);

    const YAML::Node base = need(root, "base");
    ToralAutomorphism f;
    try {
        if (base.IsScalar()) {
            std::filesystem::path p(base.Scalar());
            if (p.is_relative()) p = std::filesystem::path(base_dir) / p;
            f = read_matrix_file(p.string());
        } else {
            if (!base.IsSequence() || base.size() == 0) fail(base, "base must be a matrix file or a list of rows");
            const std::size_t d = base.size();
            IMat m(d, d);
            for (std::size_t i = 0; i < d; ++i) {
                if (!base[i].IsSequence() || base[i].size() != d) fail(base[i], "base matrix must be square");
                for (std::size_t j = 0; j < d; ++j) m(i, j) = as_int(base[i][j]);
            }
            f = ToralAutomorphism(m);
        }
    } catch (const Error& e) {
        if (e.code() == Errc::ParseError) throw;
        fail(base, e.detail());
    }

    const YAML::Node fib = need(root, "fiber");
    check_keys(fib, {"manifold", "dim", "primitives"}, "fiber");
    const FiberManifold man = parse_manifold(need(fib, "manifold"), need(fib, "dim"));
    const FiberMap g = parse_map(need(fib, "primitives"), man);
    const bool vp = root["volume_preserving"] ? as_bool(root["volume_preserving"]) : false;

    std::optional<SkewProduct> product;
    try {
        product.emplace(f, g, vp);
    } catch (const Error& e) {
        fail(root, e.detail());
    }

    std::optional<InfinitesimalDeformation> deformation;
    if (const YAML::Node d = root["deformation"]) {
        check_keys(d, {"params", "terms"}, "deformation");
        const int params = static_cast<int>(as_int(need(d, "params")));
        std::vector<DeformTerm> terms;
        const YAML::Node ts = need(d, "terms");
        if (!ts.IsSequence()) fail(ts, "terms must be a list");
        for (const auto& t : ts) {
            check_keys(t, {"bump", "field", "index"}, "deformation term");
            DeformTerm dt;
            dt.bump = parse_bump(need(t, "bump"));
            if (dt.bump.center.size() != f.dim()) fail(t, "bump center must live on the base");
            dt.field = parse_field(need(t, "field"));
            dt.index = static_cast<int>(as_int(need(t, "index")));
            terms.push_back(dt);
        }
        try {
            deformation = make_deformation(man, std::move(terms), params);
        } catch (const Error& e) {
            fail(d, e.detail());
        }
    }

    YAML::Emitter out;
    out.SetDoublePrecision(17);
    out << YAML::BeginMap << YAML::Key << "schema" << YAML::Value << kSkewSchema;
    out << YAML::Key << "base" << YAML::Value << YAML::BeginSeq;
    for (int i = 0; i < f.dim(); ++i) {
        out << YAML::Flow << YAML::BeginSeq;
        for (int j = 0; j < f.dim(); ++j) out << f.entries()(i, j);
        out << YAML::EndSeq;
    }
    out << YAML::EndSeq;
    out << YAML::Key << "fiber" << YAML::Value << YAML::BeginMap;
    emit_manifold(out, man);
    out << YAML::Key << "primitives" << YAML::Value;
    emit_map(out, g);
    out << YAML::EndMap;
    out << YAML::Key << "volume_preserving" << YAML::Value << vp;
    if (deformation) {
        out << YAML::Key << "deformation" << YAML::Value << YAML::BeginMap << YAML::Key << "params" << YAML::Value
            << deformation->params << YAML::Key << "terms" << YAML::Value << YAML::BeginSeq;
        for (const DeformTerm& t : deformation->terms) {
            out << YAML::BeginMap << YAML::Key << "bump" << YAML::Value;
            emit_bump(out, t.bump);
            out << YAML::Key << "field" << YAML::Value;
            emit_field(out, t.field);
            out << YAML::Key << "index" << YAML::Value << t.index << YAML::EndMap;
        }
        out << YAML::EndSeq << YAML::EndMap;
    }
    out << YAML::EndMap;
    return SkewDescription{*product, deformation, std::string(out.c_str()) + "\n"};
}

SkewDescription read_skew_description(const std::string& path)
{
    return parse_skew_description(read_text_file(path), dir_of(path));
}

IfsDescription parse_ifs_description(const std::string& text)
{
    const YAML::Node root = parse_document(text);
    check_keys(root, {"schema", "manifold", "dim", "seed", "maps", "conjugated"}, "IFS");
    check_schema(root, kIfsSchema);
    IFSSpec spec;
    spec.manifold = parse_manifold(need(root, "manifold"), need(root, "dim"));
    if (root["seed"]) {
        const long long s = as_int(root["seed"]);
        if (s < 0) fail(root["seed"], "seed must be non-negative");
        spec.seed = static_cast<std::uint64_t>(s);
    }
    if (root["maps"] && root["conjugated"]) fail(root, "give either maps or conjugated, not both");
    if (const YAML::Node maps = root["maps"]) {
        if (!maps.IsSequence() || maps.size() == 0) fail(maps, "maps must be a non-empty list");
        for (const auto& m : maps) spec.maps.push_back(parse_map(m, spec.manifold));
    } else if (const YAML::Node c = root["conjugated"]) {
        check_keys(c, {"g", "hs", "K"}, "conjugated");
        const FiberMap g = parse_map(need(c, "g"), spec.manifold);
        std::vector<FiberMap> hs;
        const YAML::Node hn = need(c, "hs");
        if (!hn.IsSequence() || hn.size() == 0) fail(hn, "hs must be a non-empty list");
        for (const auto& h : hn) hs.push_back(parse_map(h, spec.manifold));
        const long long K = as_int(need(c, "K"));
        if (K < 0 || K > 64) fail(c["K"], "K must lie in [0, 64]");
        spec = build_conjugated_family(g, hs, static_cast<int>(K), spec.seed);
    } else {
        fail(root, "missing key 'maps'");
    }
    try {
        spec.validate();
    } catch (const Error& e) {
        fail(root, e.detail());
    }

    YAML::Emitter out;
    out.SetDoublePrecision(17);
    out << YAML::BeginMap << YAML::Key << "schema" << YAML::Value << kIfsSchema;
    emit_manifold(out, spec.manifold);
    out << YAML::Key << "seed" << YAML::Value << spec.seed;
    out << YAML::Key << "maps" << YAML::Value << YAML::BeginSeq;
    for (const FiberMap& m : spec.maps) emit_map(out, m);
    out << YAML::EndSeq << YAML::EndMap;
    return IfsDescription{spec, std::string(out.c_str()) + "\n"};
}

IfsDescription read_ifs_description(const std::string& path) { return parse_ifs_description(read_text_file(path)); }

} // namespace phskew
