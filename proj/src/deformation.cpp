#include "phskew/deformation.hpp"

#include <algorithm>
#include <cmath>

#include "phskew/error.hpp"
#include "phskew/rng.hpp"

namespace phskew {

Vec InfinitesimalDeformation::value(const Vec& b, const Vec& y, const Vec& z) const
{
    if (b.size() != params) throw Error(Errc::DimMismatch, "parameter vector size");
    Vec v = Vec::Zero(manifold.ambient());
    for (const DeformTerm& t : terms) {
        const double w = b(t.index);
        if (w == 0.0) continue;
        const double r = t.bump.value(y);
        if (r == 0.0) continue;
        v += (w * r) * t.field.value(z);
    }
    return v;
}

bool InfinitesimalDeformation::in_support(const Vec& y) const
{
    for (const DeformTerm& t : terms)
        if (torus_delta(t.bump.center, y).norm() < t.bump.radius) return true;
    return false;
}

std::vector<Field> field_dictionary(const FiberManifold& man, int size)
{
    std::vector<Field> out;
    if (man.kind == ManifoldKind::Sphere) {
        const int a = man.ambient();
        for (int j = 0; j < a; ++j)
            for (int k = j + 1; k < a; ++k) out.push_back(Field{FieldKind::Rotation, j, k, 1});
    } else {
        for (int j = 0; j < man.dim; ++j) out.push_back(Field{FieldKind::Constant, j, j, 1});
        for (int m = 1; static_cast<int>(out.size()) < size && m <= 8; ++m) {
            for (int j = 0; j < man.dim; ++j)
                for (int k = 0; k < man.dim; ++k) {
                    if (j == k) continue;
                    if (j < k) out.push_back(Field{FieldKind::Cell, j, k, m});
                    out.push_back(Field{FieldKind::SinShear, j, k, m});
                }
        }
    }
    if (size < 0 || size > static_cast<int>(out.size()))
        throw Error(Errc::InvalidArgument, "dictionary has only " + std::to_string(out.size()) + " fields");
    out.resize(size);
    return out;
}

InfinitesimalDeformation make_deformation(const FiberManifold& man, std::vector<DeformTerm> terms, int params)
{
    InfinitesimalDeformation v;
    v.manifold = man;
    v.params = params;
    v.terms = std::move(terms);
    for (const DeformTerm& t : v.terms) {
        if (t.index < 0 || t.index >= params) throw Error(Errc::InvalidArgument, "term parameter index out of range");
        v.support_radius = std::max(v.support_radius, t.bump.radius);
        v.lipschitz = std::max(v.lipschitz, t.bump.lipschitz() * t.field.sup_norm() + t.field.lipschitz());
    }
    v.adapted_C = v.lipschitz * v.support_radius;
    return v;
}

InfinitesimalDeformation build_deformation(const FiberManifold& man, const std::vector<SuLoop>& loops, double sigma,
                                           int dictionary_size, double C0)
{
    if (!(sigma > 0) || !(C0 > 0)) throw Error(Errc::InvalidArgument, "sigma and C0 must be positive");
    const double radius = sigma / (C0 * 6.0 * man.dim);
    const std::vector<Field> dict = field_dictionary(man, dictionary_size);
    std::vector<DeformTerm> terms;
    for (std::size_t l = 0; l < loops.size(); ++l) {
        const Vec center = loops[l].y1();
        for (std::size_t other = 0; other < loops.size(); ++other) {
            const SuLoop& q = loops[other];
            for (const Vec& p : {q.y, q.y2(), q.y3()})
                if (torus_delta(center, p).norm() < radius)
                    throw Error(Errc::OverlappingSupports, "bump meets a corner fiber of loop " + std::to_string(other));
            if (other < l && torus_delta(center, q.y1()).norm() < 2 * radius)
                throw Error(Errc::OverlappingSupports,
                            "bumps of loops " + std::to_string(other) + " and " + std::to_string(l) + " overlap");
        }
        for (std::size_t h = 0; h < dict.size(); ++h)
            terms.push_back(DeformTerm{Bump{center, radius}, dict[h], static_cast<int>(l * dict.size() + h)});
    }
    return make_deformation(man, std::move(terms), static_cast<int>(loops.size() * dict.size()));
}

SkewProduct perturbed_skew(const SkewProduct& f, const InfinitesimalDeformation& v, const Vec& b)
{
    if (b.size() != v.params) throw Error(Errc::DimMismatch, "parameter vector size");
    std::vector<FieldTerm> terms;
    for (const DeformTerm& t : v.terms) {
        if (b(t.index) == 0.0) continue;
        terms.push_back(FieldTerm{t.field, b(t.index), t.bump, true});
    }
    if (terms.empty()) return f;
    FlowPrim flow{terms, 64};
    std::vector<Primitive> prims = f.fiber().primitives();
    prims.push_back(make_flow(terms, flow.steps));

    // step-doubling check where the flow is active
    const FiberManifold& man = f.manifold();
    StreamRng rng(0xdef0ULL, static_cast<std::uint64_t>(terms.size()));
    for (const FieldTerm& t : terms) {
        for (int s = 0; s < 4; ++s) {
            Vec fy = t.bump->center;
            for (Eigen::Index i = 0; i < fy.size(); ++i) fy(i) += (rng.uniform() - 0.5) * t.bump->radius;
            fy = wrap_unit(fy);
            const Vec y = f.base_inverse(fy);
            Vec z(man.ambient());
            for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = man.kind == ManifoldKind::Torus ? rng.uniform() : rng.uniform() - 0.5;
            z = man.normalize(z);
            const double err = flow_error_estimate(man, flow, BaseCtx{&y, &fy}, z);
            if (err > 1e-8) throw Error(Errc::FlowStepRejected, "flow step error " + std::to_string(err));
        }
    }
    return f.with_fiber(FiberMap(man, std::move(prims)));
}

namespace {

struct LegPlan {
    Leg leg;
    int depth;
};

std::vector<LegPlan> plan_legs(const SkewProduct& f, const SuLoop& loop, const Vec& x, double tol)
{
    std::vector<LegPlan> plan;
    Vec z = x;
    for (const Leg& leg : loop.legs()) {
        const HolonomyResult r = leg_holonomy(f, leg, z, tol);
        plan.push_back(LegPlan{leg, r.depth + 5});
        z = r.z;
    }
    return plan;
}

Vec run_legs(const SkewProduct& f, const std::vector<LegPlan>& plan, std::size_t first, std::size_t last, Vec z)
{
    for (std::size_t i = first; i < last; ++i) z = leg_holonomy_at_depth(f, plan[i].leg, z, plan[i].depth);
    return z;
}

// Richardson-paired central difference of b -> fn(b * e_j) at b = 0, in the tangent frame at `at`.
Vec parameter_derivative(const FiberManifold& man, const std::function<Vec(double)>& fn, const Vec& at, double h)
{
    const Mat frame = man.tangent_basis(at);
    auto central = [&](double step) {
        return Vec(frame.transpose() * man.displacement(fn(-step), fn(step)) / (2 * step));
    };
    const Vec coarse = central(h), fine = central(h / 2);
    return (4 * fine - coarse) / 3;
}

} // namespace

LinearApproxReport verify_linear_approx(const SkewProduct& f, const InfinitesimalDeformation& v, const SuLoop& loop,
                                        const Vec& x, double h, double tol)
{
    const FiberManifold& man = f.manifold();
    const std::vector<LegPlan> plan = plan_legs(f, loop, x, tol);
    LinearApproxReport rep;
    for (const LegPlan& p : plan) rep.depths.push_back(p.depth);

    const Vec z1 = run_legs(f, plan, 0, 1, x);
    const Vec end = run_legs(f, plan, 1, 4, z1);
    const Mat rest = holonomy_jacobian(man, [&](const Vec& z) { return run_legs(f, plan, 1, 4, z); }, z1);
    const Mat frame1 = man.tangent_basis(z1);

    rep.finite_difference = Mat::Zero(man.dim, v.params);
    rep.predicted = Mat::Zero(man.dim, v.params);
    for (int j = 0; j < v.params; ++j) {
        Vec e = Vec::Zero(v.params);
        e(j) = 1.0;
        rep.predicted.col(j) = rest * (frame1.transpose() * v.value(e, loop.y1(), z1));
        auto loop_at = [&](double b) {
            const SkewProduct fb = perturbed_skew(f, v, b * e);
            return run_legs(fb, plan, 0, 4, x);
        };
        rep.finite_difference.col(j) = parameter_derivative(man, loop_at, end, h);
    }
    rep.residual = (rep.finite_difference - rep.predicted).norm();
    return rep;
}

double parameter_derivative_bound(const SkewProduct& f, const InfinitesimalDeformation& v, const Vec& y1,
                                  const Vec& y2, const std::vector<Vec>& samples, double h, double tol)
{
    const FiberManifold& man = f.manifold();
    const Vec d = torus_delta(y1, y2);
    Vec s, u;
    f.geometry().split(d, s, u);
    if (s.norm() > 1e-9) throw Error(Errc::NotOnUnstableLeaf, "points are not on one unstable leaf");
    const Leg leg{wrap_unit(y1), u, true};
    double best = 0;
    for (const Vec& z : samples) {
        const HolonomyResult base = leg_holonomy(f, leg, z, tol);
        const int depth = base.depth + 5;
        for (int j = 0; j < v.params; ++j) {
            Vec e = Vec::Zero(v.params);
            e(j) = 1.0;
            auto hol = [&](double b) { return leg_holonomy_at_depth(perturbed_skew(f, v, b * e), leg, z, depth); };
            best = std::max(best, parameter_derivative(man, hol, base.z, h).norm());
        }
    }
    return best;
}

AprioriReport verify_apriori(const SkewProduct& f, const InfinitesimalDeformation& v, const Vec& y1, const Vec& y2,
                             const std::vector<Vec>& samples, double h, double tol)
{
    AprioriReport rep;
    const Vec d = torus_delta(y1, y2);
    const Vec mid = wrap_unit(y1 + 0.5 * d);
    rep.distance = d.norm();
    rep.half_distance = 0.5 * d.norm();
    rep.bound = parameter_derivative_bound(f, v, y1, y2, samples, h, tol);
    rep.half_bound = parameter_derivative_bound(f, v, y1, mid, samples, h, tol);
    rep.ratio = rep.half_bound > 0 ? rep.bound / rep.half_bound : (rep.bound == 0 ? 1.0 : 1e300);
    rep.linear_scaling = rep.ratio >= 0.25 && rep.ratio <= 4.0;
    return rep;
}

} // namespace phskew
