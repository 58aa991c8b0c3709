#include "phskew/fiber.hpp"

#include <cmath>
#include <limits>

#include <unsupported/Eigen/MatrixFunctions>

#include "phskew/error.hpp"
#include "phskew/grassmann.hpp"

namespace phskew {

// ---------------------------------------------------------------- manifold

Vec wrap_unit(Vec v)
{
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        double x = v(i) - std::floor(v(i));
        if (x >= 1.0) x = 0.0;
        v(i) = x;
    }
    return v;
}

Vec torus_delta(const Vec& from, const Vec& to)
{
    Vec d = to - from;
    for (Eigen::Index i = 0; i < d.size(); ++i) d(i) -= std::floor(d(i) + 0.5);
    return d;
}

Vec FiberManifold::normalize(Vec p) const
{
    switch (kind) {
    case ManifoldKind::Torus: return wrap_unit(std::move(p));
    case ManifoldKind::Sphere: return p / p.norm();
    case ManifoldKind::Euclidean: return p;
    }
    return p;
}

Vec FiberManifold::displacement(const Vec& from, const Vec& to) const
{
    if (kind == ManifoldKind::Torus) return torus_delta(from, to);
    return to - from;
}

double FiberManifold::distance(const Vec& a, const Vec& b) const { return displacement(a, b).norm(); }

Mat FiberManifold::tangent_basis(const Vec& p) const
{
    if (kind != ManifoldKind::Sphere) return Mat::Identity(dim, dim);
    GrassmannPoint g{Mat(p / p.norm())};
    return g.complement();
}

Vec FiberManifold::offset(const Vec& p, const Vec& v) const { return normalize(p + v); }

bool FiberManifold::valid_point(const Vec& p, double tol) const
{
    if (p.size() != ambient()) return false;
    switch (kind) {
    case ManifoldKind::Torus:
        for (Eigen::Index i = 0; i < p.size(); ++i)
            if (!(p(i) >= 0.0 && p(i) < 1.0)) return false;
        return true;
    case ManifoldKind::Sphere: return std::abs(p.norm() - 1.0) <= tol;
    case ManifoldKind::Euclidean: return p.allFinite();
    }
    return false;
}

std::string manifold_name(const FiberManifold& m)
{
    switch (m.kind) {
    case ManifoldKind::Torus: return "torus";
    case ManifoldKind::Sphere: return "sphere";
    case ManifoldKind::Euclidean: return "euclidean";
    }
    return "?";
}

// ---------------------------------------------------------------- bumps

double smoothstep5(double t)
{
    if (t <= 0) return 0.0;
    if (t >= 1) return 1.0;
    return t * t * t * (t * (6.0 * t - 15.0) + 10.0);
}

double smoothstep5_derivative(double t)
{
    if (t <= 0 || t >= 1) return 0.0;
    return 30.0 * t * t * (t - 1.0) * (t - 1.0);
}

double Bump::value(const Vec& y) const
{
    const double d = torus_delta(center, y).norm();
    if (d >= radius) return 0.0;
    return smoothstep5(1.0 - d / radius);
}

Vec Bump::gradient(const Vec& y) const
{
    const Vec dv = torus_delta(center, y);
    const double d = dv.norm();
    if (d >= radius || d == 0.0) return Vec::Zero(y.size());
    return -smoothstep5_derivative(1.0 - d / radius) / radius * dv / d;
}

double Bump::lipschitz() const { return 1.875 / radius; }

namespace {

double bump_factor(const std::optional<Bump>& b, const BaseCtx& ctx, bool at_image = false)
{
    if (!b) return 1.0;
    const Vec* y = at_image ? ctx.fy : ctx.y;
    if (!y) return 1.0;
    return b->value(*y);
}

} // namespace

// ---------------------------------------------------------------- fields

Vec Field::value(const Vec& z) const
{
    Vec v = Vec::Zero(z.size());
    const double a = kTwoPi * m;
    switch (kind) {
    case FieldKind::Constant: v(j) = 1.0; break;
    case FieldKind::SinShear: v(k) = std::sin(a * z(j)); break;
    case FieldKind::Cell:
        v(j) = std::sin(a * z(j)) * std::cos(a * z(k));
        v(k) = -std::cos(a * z(j)) * std::sin(a * z(k));
        break;
    case FieldKind::Rotation:
        v(k) = z(j);
        v(j) = -z(k);
        break;
    }
    return v;
}

Mat Field::jacobian(const Vec& z) const
{
    Mat jm = Mat::Zero(z.size(), z.size());
    const double a = kTwoPi * m;
    switch (kind) {
    case FieldKind::Constant: break;
    case FieldKind::SinShear: jm(k, j) = a * std::cos(a * z(j)); break;
    case FieldKind::Cell: {
        const double sj = std::sin(a * z(j)), cj = std::cos(a * z(j));
        const double sk = std::sin(a * z(k)), ck = std::cos(a * z(k));
        jm(j, j) = a * cj * ck;
        jm(j, k) = -a * sj * sk;
        jm(k, j) = a * sj * sk;
        jm(k, k) = -a * cj * ck;
        break;
    }
    case FieldKind::Rotation:
        jm(k, j) = 1.0;
        jm(j, k) = -1.0;
        break;
    }
    return jm;
}

double Field::sup_norm() const { return 1.0; }

double Field::lipschitz() const
{
    switch (kind) {
    case FieldKind::Constant: return 0.0;
    case FieldKind::SinShear: return kTwoPi * m;
    case FieldKind::Cell: return kTwoPi * m;
    case FieldKind::Rotation: return 1.0;
    }
    return 0.0;
}

// ---------------------------------------------------------------- constructors

Primitive make_linear(const Mat& m)
{
    if (m.rows() != m.cols()) throw Error(Errc::DimMismatch, "linear primitive must be square");
    Eigen::FullPivLU<Mat> lu(m);
    if (!lu.isInvertible()) throw Error(Errc::Singular, "linear primitive is singular");
    return Primitive{LinearPrim{m, lu.inverse()}, false};
}

Primitive make_translation(const Vec& offset, std::vector<TrigTerm> terms)
{
    return Primitive{TranslationPrim{offset, std::move(terms)}, false};
}

Primitive make_shear(int from, int to, double amplitude, bool sine, std::optional<Bump> bump)
{
    if (from == to) throw Error(Errc::InvalidArgument, "shear needs distinct axes");
    return Primitive{ShearPrim{from, to, amplitude, sine, std::move(bump)}, false};
}

Primitive make_flow(std::vector<FieldTerm> terms, int steps)
{
    if (steps < 2 || steps % 2) throw Error(Errc::InvalidArgument, "flow steps must be even and >= 2");
    return Primitive{FlowPrim{std::move(terms), steps}, false};
}

Primitive make_twist(const Vec& axis, double amplitude)
{
    if (axis.size() != 3 || axis.norm() == 0) throw Error(Errc::InvalidArgument, "twist axis must be a 3-vector");
    return Primitive{TwistPrim{axis / axis.norm(), amplitude}, false};
}

Primitive make_rotation2(double angle)
{
    Mat r(2, 2);
    r << std::cos(angle), -std::sin(angle), std::sin(angle), std::cos(angle);
    return make_linear(r);
}

// ---------------------------------------------------------------- flows

namespace {

struct FlowField {
    std::vector<double> weights;
    const FlowPrim* prim;

    Vec value(const Vec& z) const
    {
        Vec v = Vec::Zero(z.size());
        for (std::size_t t = 0; t < weights.size(); ++t)
            if (weights[t] != 0.0) v += weights[t] * prim->terms[t].field.value(z);
        return v;
    }
    Mat jacobian(const Vec& z) const
    {
        Mat jm = Mat::Zero(z.size(), z.size());
        for (std::size_t t = 0; t < weights.size(); ++t)
            if (weights[t] != 0.0) jm += weights[t] * prim->terms[t].field.jacobian(z);
        return jm;
    }
    bool zero() const
    {
        for (double w : weights)
            if (w != 0.0) return false;
        return true;
    }
};

FlowField flow_field(const FlowPrim& f, const BaseCtx& ctx)
{
    FlowField ff{{}, &f};
    ff.weights.reserve(f.terms.size());
    for (const auto& t : f.terms) ff.weights.push_back(t.coeff * bump_factor(t.bump, ctx, t.bump_at_image));
    return ff;
}

// RK4 over unit time; when jac is non-null the variational system rides along,
// which gives the exact derivative of the discrete map.
Vec rk4(const FlowField& ff, Vec z, int steps, double direction, Mat* jac)
{
    const double h = direction / steps;
    const int c = static_cast<int>(z.size());
    if (jac) *jac = Mat::Identity(c, c);
    for (int s = 0; s < steps; ++s) {
        const Vec k1 = ff.value(z);
        const Vec z2 = z + 0.5 * h * k1;
        const Vec k2 = ff.value(z2);
        const Vec z3 = z + 0.5 * h * k2;
        const Vec k3 = ff.value(z3);
        const Vec z4 = z + h * k3;
        const Vec k4 = ff.value(z4);
        if (jac) {
            const Mat& j0 = *jac;
            const Mat a1 = ff.jacobian(z);
            const Mat l1 = a1 * j0;
            const Mat a2 = ff.jacobian(z2);
            const Mat l2 = a2 * (j0 + 0.5 * h * l1);
            const Mat a3 = ff.jacobian(z3);
            const Mat l3 = a3 * (j0 + 0.5 * h * l2);
            const Mat a4 = ff.jacobian(z4);
            const Mat l4 = a4 * (j0 + h * l3);
            *jac = j0 + (h / 6.0) * (l1 + 2.0 * l2 + 2.0 * l3 + l4);
        }
        z += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    return z;
}

Mat rotation_generator(const FlowField& ff, int n)
{
    Mat k = Mat::Zero(n, n);
    for (std::size_t t = 0; t < ff.weights.size(); ++t) {
        const Field& f = ff.prim->terms[t].field;
        if (f.kind != FieldKind::Rotation) throw Error(Errc::InvalidArgument, "sphere flows take rotation fields");
        k(f.k, f.j) += ff.weights[t];
        k(f.j, f.k) -= ff.weights[t];
    }
    return k;
}

Vec flow_apply(const FiberManifold& man, const FlowPrim& f, const BaseCtx& ctx, const Vec& z, bool inverse,
               Mat* jac)
{
    const FlowField ff = flow_field(f, ctx);
    const int n = static_cast<int>(z.size());
    if (ff.zero()) {
        if (jac) *jac = Mat::Identity(n, n);
        return z;
    }
    if (man.kind == ManifoldKind::Sphere) {
        const Mat k = rotation_generator(ff, n);
        const Mat r = (inverse ? Mat(-k) : k).exp();
        if (jac) *jac = r;
        return man.normalize(r * z);
    }
    if (!inverse) {
        Vec out = rk4(ff, z, f.steps, 1.0, jac);
        return man.normalize(std::move(out));
    }
    // exact inverse of the discrete forward map by Newton iteration
    Vec x = rk4(ff, z, f.steps, -1.0, nullptr);
    Mat jf;
    double last = std::numeric_limits<double>::infinity();
    for (int it = 0; it < 12; ++it) {
        const Vec img = rk4(ff, x, f.steps, 1.0, &jf);
        const Vec r = man.displacement(z, img);
        const double rn = r.norm();
        if (rn <= 1e-16 || rn >= 0.5 * last) {
            if (rn < last) x -= jf.partialPivLu().solve(r);
            break;
        }
        last = rn;
        x -= jf.partialPivLu().solve(r);
    }
    if (jac) {
        rk4(ff, x, f.steps, 1.0, &jf);
        *jac = jf.inverse();
    }
    return man.normalize(std::move(x));
}

Vec rodrigues(const Vec& n, double th, const Vec& p)
{
    const Eigen::Vector3d nn(n(0), n(1), n(2)), pp(p(0), p(1), p(2));
    const Eigen::Vector3d r = pp * std::cos(th) + nn.cross(pp) * std::sin(th) + nn * nn.dot(pp) * (1 - std::cos(th));
    return Vec(r);
}

Mat twist_forward_jacobian(const TwistPrim& t, const Vec& p)
{
    const Eigen::Vector3d n(t.axis(0), t.axis(1), t.axis(2)), pp(p(0), p(1), p(2));
    const double th = t.amplitude * n.dot(pp);
    const double c = std::cos(th), s = std::sin(th);
    Eigen::Matrix3d cross;
    cross << 0, -n(2), n(1), n(2), 0, -n(0), -n(1), n(0), 0;
    const Eigen::Matrix3d r = c * Eigen::Matrix3d::Identity() + s * cross + (1 - c) * n * n.transpose();
    const Eigen::Vector3d dr = -pp * s + n.cross(pp) * c + n * n.dot(pp) * s;
    const Eigen::Matrix3d jm = r + t.amplitude * dr * n.transpose();
    return Mat(jm);
}

double shear_profile(const ShearPrim& s, double x)
{
    return s.sine ? std::sin(kTwoPi * x) / kTwoPi : x;
}

double shear_profile_derivative(const ShearPrim& s, double x) { return s.sine ? std::cos(kTwoPi * x) : 1.0; }

Vec translation_vector(const TranslationPrim& t, const BaseCtx& ctx)
{
    Vec v = t.offset;
    if (!ctx.y) return v;
    for (const auto& term : t.terms)
        v += term.amplitude * std::sin(kTwoPi * (term.freq.dot(*ctx.y) + term.phase));
    return v;
}

Vec forward(const FiberManifold& man, const PrimitiveBody& body, const BaseCtx& ctx, const Vec& z, Mat* jac)
{
    return std::visit(
        [&](const auto& p) -> Vec {
            using T = std::decay_t<decltype(p)>;
            const int n = static_cast<int>(z.size());
            if constexpr (std::is_same_v<T, LinearPrim>) {
                if (jac) *jac = p.m;
                return man.normalize(p.m * z);
            } else if constexpr (std::is_same_v<T, TranslationPrim>) {
                if (jac) *jac = Mat::Identity(n, n);
                return man.normalize(z + translation_vector(p, ctx));
            } else if constexpr (std::is_same_v<T, ShearPrim>) {
                const double w = p.amplitude * bump_factor(p.bump, ctx);
                Vec out = z;
                out(p.to) += w * shear_profile(p, z(p.from));
                if (jac) {
                    *jac = Mat::Identity(n, n);
                    (*jac)(p.to, p.from) += w * shear_profile_derivative(p, z(p.from));
                }
                return man.normalize(std::move(out));
            } else if constexpr (std::is_same_v<T, FlowPrim>) {
                return flow_apply(man, p, ctx, z, false, jac);
            } else {
                const double th = p.amplitude * p.axis.dot(z);
                if (jac) *jac = twist_forward_jacobian(p, z);
                return man.normalize(rodrigues(p.axis, th, z));
            }
        },
        body);
}

Vec backward(const FiberManifold& man, const PrimitiveBody& body, const BaseCtx& ctx, const Vec& z)
{
    return std::visit(
        [&](const auto& p) -> Vec {
            using T = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<T, LinearPrim>) {
                return man.normalize(p.m_inv * z);
            } else if constexpr (std::is_same_v<T, TranslationPrim>) {
                return man.normalize(z - translation_vector(p, ctx));
            } else if constexpr (std::is_same_v<T, ShearPrim>) {
                Vec out = z;
                out(p.to) -= p.amplitude * bump_factor(p.bump, ctx) * shear_profile(p, z(p.from));
                return man.normalize(std::move(out));
            } else if constexpr (std::is_same_v<T, FlowPrim>) {
                return flow_apply(man, p, ctx, z, true, nullptr);
            } else {
                const double th = p.amplitude * p.axis.dot(z);
                return man.normalize(rodrigues(p.axis, -th, z));
            }
        },
        body);
}

Vec apply_one(const FiberManifold& man, const Primitive& p, const BaseCtx& ctx, const Vec& z, Mat* jac)
{
    if (!p.inverted) return forward(man, p.body, ctx, z, jac);
    Vec w = backward(man, p.body, ctx, z);
    if (jac) {
        Mat jf;
        forward(man, p.body, ctx, w, &jf);
        *jac = jf.inverse();
    }
    return w;
}

Vec unapply_one(const FiberManifold& man, const Primitive& p, const BaseCtx& ctx, const Vec& z)
{
    if (!p.inverted) return backward(man, p.body, ctx, z);
    return forward(man, p.body, ctx, z, nullptr);
}

void validate_primitive(const FiberManifold& man, const Primitive& prim)
{
    const int a = man.ambient();
    std::visit(
        [&](const auto& p) {
            using T = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<T, LinearPrim>) {
                if (p.m.rows() != a) throw Error(Errc::DimMismatch, "linear primitive dimension");
                if (man.kind == ManifoldKind::Torus) {
                    const Mat r = p.m.array().round().matrix();
                    if ((p.m - r).norm() > 0 || std::abs(std::abs(p.m.determinant()) - 1.0) > 1e-9)
                        throw Error(Errc::InvalidArgument, "torus linear primitive must be unimodular integer");
                }
                if (man.kind == ManifoldKind::Sphere &&
                    (p.m.transpose() * p.m - Mat::Identity(a, a)).norm() > 1e-10)
                    throw Error(Errc::InvalidArgument, "sphere linear primitive must be orthogonal");
            } else if constexpr (std::is_same_v<T, TranslationPrim>) {
                if (man.kind == ManifoldKind::Sphere) throw Error(Errc::InvalidArgument, "no translations on spheres");
                if (p.offset.size() != a) throw Error(Errc::DimMismatch, "translation dimension");
                for (const auto& t : p.terms)
                    if (t.amplitude.size() != a) throw Error(Errc::DimMismatch, "translation term dimension");
            } else if constexpr (std::is_same_v<T, ShearPrim>) {
                if (man.kind == ManifoldKind::Sphere) throw Error(Errc::InvalidArgument, "no shears on spheres");
                if (p.from < 0 || p.to < 0 || p.from >= a || p.to >= a)
                    throw Error(Errc::DimMismatch, "shear axis out of range");
                if (!p.sine && man.kind == ManifoldKind::Torus &&
                    (p.bump || p.amplitude != std::round(p.amplitude)))
                    throw Error(Errc::InvalidArgument, "linear torus shear needs a global integer amplitude");
            } else if constexpr (std::is_same_v<T, FlowPrim>) {
                for (const auto& t : p.terms) {
                    const Field& f = t.field;
                    const bool rot = f.kind == FieldKind::Rotation;
                    if (rot != (man.kind == ManifoldKind::Sphere))
                        throw Error(Errc::InvalidArgument, "rotation fields belong to spheres only");
                    if (f.j < 0 || f.j >= a || (f.kind != FieldKind::Constant && (f.k < 0 || f.k >= a || f.k == f.j)))
                        throw Error(Errc::DimMismatch, "field axis out of range");
                    if (f.m < 1) throw Error(Errc::InvalidArgument, "field frequency must be positive");
                }
            } else {
                if (man.kind != ManifoldKind::Sphere || man.dim != 2)
                    throw Error(Errc::InvalidArgument, "twists act on the 2-sphere");
            }
        },
        prim.body);
}

} // namespace

Vec primitive_apply(const FiberManifold& man, const Primitive& p, const BaseCtx& ctx, const Vec& z)
{
    return apply_one(man, p, ctx, z, nullptr);
}

Mat primitive_jacobian(const FiberManifold& man, const Primitive& p, const BaseCtx& ctx, const Vec& z)
{
    Mat j;
    apply_one(man, p, ctx, z, &j);
    return j;
}

bool primitive_volume_preserving(const FiberManifold& man, const Primitive& prim)
{
    (void)man;
    return std::visit(
        [&](const auto& p) -> bool {
            using T = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<T, LinearPrim>) return std::abs(std::abs(p.m.determinant()) - 1.0) < 1e-12;
            else return true;
        },
        prim.body);
}

double flow_error_estimate(const FiberManifold& man, const FlowPrim& f, const BaseCtx& ctx, const Vec& z)
{
    if (man.kind == ManifoldKind::Sphere) return 0.0;
    const FlowField ff = flow_field(f, ctx);
    if (ff.zero()) return 0.0;
    const Vec fine = rk4(ff, z, f.steps, 1.0, nullptr);
    const Vec coarse = rk4(ff, z, f.steps / 2, 1.0, nullptr);
    return (fine - coarse).norm() / 15.0;
}

// ---------------------------------------------------------------- FiberMap

FiberMap::FiberMap(FiberManifold m, std::vector<Primitive> prims) : manifold_(m), prims_(std::move(prims))
{
    if (manifold_.dim < 1) throw Error(Errc::InvalidArgument, "fiber dimension must be positive");
    for (const auto& p : prims_) validate_primitive(manifold_, p);
}

Vec FiberMap::apply(const BaseCtx& ctx, const Vec& z) const
{
    Vec x = z;
    for (const auto& p : prims_) x = apply_one(manifold_, p, ctx, x, nullptr);
    return x;
}

Vec FiberMap::apply_inverse(const BaseCtx& ctx, const Vec& z) const
{
    Vec x = z;
    for (auto it = prims_.rbegin(); it != prims_.rend(); ++it) x = unapply_one(manifold_, *it, ctx, x);
    return x;
}

Mat FiberMap::jacobian(const BaseCtx& ctx, const Vec& z) const
{
    const int a = manifold_.ambient();
    Mat total = Mat::Identity(a, a);
    Vec x = z;
    Mat step;
    for (const auto& p : prims_) {
        x = apply_one(manifold_, p, ctx, x, &step);
        total = step * total;
    }
    return total;
}

Vec FiberMap::apply_with_jacobian(const BaseCtx& ctx, const Vec& z, Mat& tangent_jac) const
{
    const int a = manifold_.ambient();
    Mat total = Mat::Identity(a, a);
    Vec x = z;
    Mat step;
    for (const auto& p : prims_) {
        x = apply_one(manifold_, p, ctx, x, &step);
        total = step * total;
    }
    if (manifold_.kind == ManifoldKind::Sphere)
        tangent_jac = manifold_.tangent_basis(x).transpose() * total * manifold_.tangent_basis(z);
    else
        tangent_jac = std::move(total);
    return x;
}

Mat FiberMap::tangent_jacobian(const BaseCtx& ctx, const Vec& z) const
{
    Mat j;
    apply_with_jacobian(ctx, z, j);
    return j;
}

FiberMap FiberMap::inverse() const
{
    std::vector<Primitive> inv(prims_.rbegin(), prims_.rend());
    for (auto& p : inv) p.inverted = !p.inverted;
    FiberMap out;
    out.manifold_ = manifold_;
    out.prims_ = std::move(inv);
    return out;
}

FiberMap FiberMap::then(const FiberMap& next) const
{
    if (next.manifold_.kind != manifold_.kind || next.manifold_.dim != manifold_.dim)
        throw Error(Errc::DimMismatch, "composing maps on different manifolds");
    FiberMap out = *this;
    out.prims_.insert(out.prims_.end(), next.prims_.begin(), next.prims_.end());
    return out;
}

bool FiberMap::volume_preserving() const
{
    for (const auto& p : prims_)
        if (!primitive_volume_preserving(manifold_, p)) return false;
    return true;
}

bool FiberMap::depends_on_base() const
{
    for (const auto& prim : prims_) {
        const bool dep = std::visit(
            [](const auto& p) -> bool {
                using T = std::decay_t<decltype(p)>;
                if constexpr (std::is_same_v<T, TranslationPrim>) return !p.terms.empty();
                else if constexpr (std::is_same_v<T, ShearPrim>) return p.bump.has_value();
                else if constexpr (std::is_same_v<T, FlowPrim>) {
                    for (const auto& t : p.terms)
                        if (t.bump) return true;
                    return false;
                } else return false;
            },
            prim.body);
        if (dep) return true;
    }
    return false;
}

FiberMap identity_map(const FiberManifold& m) { return FiberMap(m, {}); }

FiberMap linear_map(const FiberManifold& m, const Mat& a) { return FiberMap(m, {make_linear(a)}); }

} // namespace phskew
